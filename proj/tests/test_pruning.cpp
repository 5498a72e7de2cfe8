#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "dsnn/errors.hpp"
#include "dsnn/pruning.hpp"
#include "dsnn/tasks.hpp"
#include "support.hpp"

using namespace dsnn;

namespace {

PruneConfig cap(std::size_t k) {
  PruneConfig c;
  c.cap_per_pair = k;
  return c;
}

// Top-K per pair by exhaustive sort over (|w| desc, delay asc).
std::vector<double> brute_top_k(const DelayLayerParams& p, std::size_t k) {
  std::vector<double> mask(p.weights.size(), 0.0);
  for (std::size_t i = 0; i < p.pre; ++i)
    for (std::size_t j = 0; j < p.post; ++j) {
      std::vector<std::pair<double, int>> cand;
      for (std::size_t s = 0; s < p.slots(); ++s)
        if (p.mask[p.index(i, j, s)] != 0.0) cand.push_back({-std::abs(p.weights[p.index(i, j, s)]), static_cast<int>(s)});
      std::sort(cand.begin(), cand.end());
      for (std::size_t r = 0; r < std::min(k, cand.size()); ++r)
        mask[p.index(i, j, static_cast<std::size_t>(cand[r].second))] = 1.0;
    }
  return mask;
}

}  // namespace

TEST_CASE("cap equal to |D| is the identity") {
  testing::Rng rng(1);
  const auto p = testing::random_projection(rng, 3, 4, delay_spec_from_depth_stride(30, 5));
  CHECK(prune_by_magnitude(p, cap(p.slots())) == p.mask);
}

TEST_CASE("cap 1 keeps the largest magnitude") {
  DelayLayerParams p(1, 1, DelaySpec::from_list({0, 15, 30}));
  p.weights = {0.9, 0.1, -0.5};
  CHECK(prune_by_magnitude(p, cap(1)) == std::vector<double>{1, 0, 0});
  p.weights = {0.2, 0.1, -0.5};
  CHECK(prune_by_magnitude(p, cap(1)) == std::vector<double>{0, 0, 1});
}

TEST_CASE("ties go to the smaller delay") {
  DelayLayerParams p(1, 1, DelaySpec::from_list({0, 5, 10, 15}));
  p.weights = {0.1, -0.4, 0.4, 0.4};
  CHECK(prune_by_magnitude(p, cap(2)) == std::vector<double>{0, 1, 1, 0});
}

TEST_CASE("cap selection equals the brute-force oracle") {
  testing::Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = testing::random_projection(rng, 4, 4, delay_spec_from_depth_stride(6, 1), trial % 3 == 0 ? 0.3 : 0.0);
    // coarse quantisation produces ties
    if (trial % 2) for (auto& w : p.weights) w = std::round(w * 4) / 4;
    p.apply_mask();
    CHECK(prune_by_magnitude(p, cap(2)) == brute_top_k(p, 2));
  }
}

TEST_CASE("cap larger than |D| is rejected") {
  DelayLayerParams p(2, 2, DelaySpec::from_list({0, 1}));
  CHECK_THROWS_AS(prune_by_magnitude(p, cap(3)), ContractViolation);
  PruneConfig both;
  both.cap_per_pair = 1;
  both.keep_fraction = 0.5;
  CHECK_THROWS_AS(both.validate(), ContractViolation);
  CHECK_THROWS_AS(PruneConfig{}.validate(), ContractViolation);
}

TEST_CASE("pruning properties on random layers") {
  testing::Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = rng.index(1, 6), m = rng.index(1, 6);
    auto p = testing::random_projection(rng, n, m, delay_spec_from_depth_stride(40, 5));
    const std::size_t k = rng.index(1, p.slots());
    const auto mask = prune_by_magnitude(p, cap(k));

    auto pruned = p;
    pruned.mask = mask;
    pruned.apply_mask();
    CHECK(pruned.active_count() == n * m * k);
    CHECK(prune_by_magnitude(pruned, cap(k)) == mask);  // idempotent

    auto scaled = p;
    const double c = rng.uniform(0.01, 100.0);
    for (auto& w : scaled.weights) w *= c;
    CHECK(prune_by_magnitude(scaled, cap(k)) == mask);

    PruneConfig frac;
    frac.keep_fraction = rng.uniform(0.05, 1.0);
    const auto fmask = prune_by_magnitude(p, frac);
    auto fp = p;
    fp.mask = fmask;
    fp.apply_mask();
    CHECK(fp.active_count() ==
          static_cast<std::size_t>(std::ceil(*frac.keep_fraction * double(p.weights.size()) - 1e-9)));
    CHECK(prune_by_magnitude(fp, frac) == fmask);
    auto fscaled = scaled;
    CHECK(prune_by_magnitude(fscaled, frac) == fmask);
  }
}

TEST_CASE("refinement window") {
  DelayLayerParams p(1, 1, delay_spec_from_depth_stride(60, 15));  // {0,15,30,45}
  p.weights = {0.0, 0.0, 0.8, 0.0};
  p.mask = {0, 0, 1, 0};
  const auto r = refine_delays(p, 5);
  CHECK(r.delay_spec.delays == std::vector<int>{0, 15, 20, 25, 30, 35, 40, 45});
  std::set<int> active;
  for (std::size_t s = 0; s < r.slots(); ++s)
    if (r.mask[s] == 1.0) active.insert(r.delay_spec.delays[s]);
  CHECK(active == std::set<int>{20, 25, 30, 35, 40});
  CHECK(r.weights[4] == 0.8);
  for (std::size_t s = 0; s < r.slots(); ++s)
    if (r.delay_spec.delays[s] != 30) CHECK(r.weights[s] == 0.0);

  CHECK(refine_delays(p, 15).delay_spec.delays == p.delay_spec.delays);
  CHECK_THROWS_AS(refine_delays(p, 4), ContractViolation);
  DelayLayerParams listed(1, 1, DelaySpec::from_list({0, 7}));
  CHECK_THROWS_AS(refine_delays(listed, 1), ContractViolation);
}

TEST_CASE("refinement clips at the window edges and keeps every survivor") {
  testing::Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = testing::random_projection(rng, 2, 3, delay_spec_from_depth_stride(40, 10));
    p.mask = prune_by_magnitude(p, cap(2));
    p.apply_mask();
    const auto r = refine_delays(p, 5);
    CHECK(r.delay_spec.min_delay() >= 0);
    CHECK(r.delay_spec.max_delay() <= p.delay_spec.max_delay());
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t s = 0; s < p.slots(); ++s) {
          if (p.mask[p.index(i, j, s)] == 0.0) continue;
          const auto it = std::find(r.delay_spec.delays.begin(), r.delay_spec.delays.end(), p.delay_spec.delays[s]);
          REQUIRE(it != r.delay_spec.delays.end());
          const auto rs = static_cast<std::size_t>(it - r.delay_spec.delays.begin());
          CHECK(r.mask[r.index(i, j, rs)] == 1.0);
          CHECK(r.weights[r.index(i, j, rs)] == p.weights[p.index(i, j, s)]);
        }
  }
}

TEST_CASE("prune / fine-tune loop") {
  NetworkSpec spec;
  spec.input_size = 1;
  spec.layers = {LayerSpec{6, LayerKind::kFeedforward, {}, {1.0, 1.0}, 2.0},
                 LayerSpec{6, LayerKind::kDelayed, delay_spec_from_depth_stride(24, 4), {1.0, 1.0}, 2.0}};
  spec.readout.size = 2;
  spec.readout.tau_init = 1.0;
  spec.readout.delays = delay_spec_from_depth_stride(24, 4);
  tasks::DelayXorConfig x;
  x.steps = 32;
  x.gaps = {4, 12};
  x.count = 60;
  const auto data = tasks::to_dataset(tasks::gen_delay_xor(x), 32);
  Hyperparams hp;
  hp.loss = LossKind::kCrossEntropyMax;
  hp.epochs = 2;
  const auto trained = train(spec, data, hp).params;

  PruneConfig none = cap(1);
  none.refine_rounds = 0;
  const auto id = prune_finetune_loop(spec, trained, data, none, hp);
  CHECK(id.params == trained);
  CHECK(id.rounds.empty());

  PruneConfig k1 = cap(1);
  k1.finetune_epochs = 1;
  const auto res = prune_finetune_loop(spec, trained, data, k1, hp);
  REQUIRE(res.rounds.size() == 1);
  // K=1 leaves exactly the parameter count of the same network with |D| = 1
  NetworkSpec single = spec;
  single.layers[1].delays = DelaySpec{};
  single.readout.delays = DelaySpec{};
  CHECK(res.rounds[0].params == init_params(single, 1).effective_param_count());
  CHECK(res.params.layers[1].input.active_count() == 36);

  PruneConfig refine = cap(1);
  refine.finetune_epochs = 0;
  refine.refine_stride = 2;
  const auto rr = prune_finetune_loop(spec, trained, data, refine, hp);
  CHECK(rr.spec.layers[1].delays.stride == 2);
  CHECK(rr.spec.layers[1].delays == rr.params.layers[1].input.delay_spec);
  CHECK(rr.spec.readout.delays == rr.params.readout.input.delay_spec);
  CHECK_NOTHROW(check_params(rr.spec, rr.params));
}
