#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "dsnn/errors.hpp"
#include "dsnn/training.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace dsnn;

namespace {

double logit(double a) { return std::log(a / (1 - a)); }

// input(1) -> 1 LIF neuron -> 1 readout, all weights set by hand.
std::pair<NetworkSpec, NetworkParams> tiny(double w_in, double alpha, double w_out, double alpha_r) {
  NetworkSpec spec;
  spec.input_size = 1;
  spec.layers = {LayerSpec{1, LayerKind::kFeedforward, {}, {}, 1.0}};
  auto params = init_params(spec, 1);
  params.layers[0].input.weights = {w_in};
  params.layers[0].decay_param = {logit(alpha)};
  params.readout.input.weights = {w_out};
  params.readout.decay_param = {logit(alpha_r)};
  return {spec, params};
}

Dataset adding_like(std::size_t n, std::uint64_t seed) {
  testing::Rng rng(seed);
  Dataset d;
  for (std::size_t s = 0; s < n; ++s) {
    Sample x{testing::random_input(rng, 8, 2, false), rng.uniform(0, 2), -1};
    d.push_back(x);
  }
  return d;
}

NetworkSpec small_delay_net() {
  NetworkSpec spec;
  spec.input_size = 2;
  LayerSpec l1{6, LayerKind::kFeedforward, {}, {1.0, 2.0}, 1.5};
  LayerSpec l2{5, LayerKind::kDelayed, delay_spec_from_depth_stride(6, 2), {1.0, 2.0}, 1.5};
  spec.layers = {l1, l2};
  spec.readout.delays = DelaySpec::from_list({0, 3});
  return spec;
}

}  // namespace

TEST_CASE("forward: zero input gives an all-zero tape") {
  testing::Rng rng(1);
  for (int n = 0; n < 10; ++n) {
    const auto spec = testing::random_network(rng);
    const auto tape = forward(spec, init_params(spec, n), Matrix(7, spec.input_size));
    for (const auto& l : tape.layers) {
      for (double v : l.u.data) CHECK(v == 0.0);
      for (double v : l.theta.data) CHECK(v == 0.0);
    }
    for (double v : tape.readout.u.data) CHECK(v == 0.0);
  }
}

TEST_CASE("forward: three-step hand rollout") {
  auto [spec, params] = tiny(0.6, 0.9, 1.0, 0.5);
  Matrix in(3, 1, 1.0);
  const auto tape = forward(spec, params, in);
  // u0 = 0.6; u1 = 0.6*0.9 + 0.6 = 1.14 (spike); u2 = 1.14*0.9*(1-1) + 0.6 = 0.6
  CHECK(tape.layers[0].u(0, 0) == doctest::Approx(0.6));
  CHECK(tape.layers[0].u(1, 0) == doctest::Approx(1.14));
  CHECK(tape.layers[0].u(2, 0) == doctest::Approx(0.6));
  CHECK(tape.layers[0].theta.data == std::vector<double>{0, 1, 0});
  // readout integrates same-step spikes and never resets
  CHECK(tape.readout.u(0, 0) == doctest::Approx(0.0));
  CHECK(tape.readout.u(1, 0) == doctest::Approx(1.0));
  CHECK(tape.readout.u(2, 0) == doctest::Approx(0.5));
}

TEST_CASE("forward: deterministic and replayable") {
  testing::Rng rng(2);
  for (int n = 0; n < 10; ++n) {
    const auto spec = testing::random_network(rng);
    const auto params = init_params(spec, 42);
    const auto in = testing::random_input(rng, 15, spec.input_size, true);
    CHECK(forward(spec, params, in) == forward(spec, params, in));
  }
}

TEST_CASE("forward rejects a channel mismatch and malformed params") {
  auto [spec, params] = tiny(0.6, 0.9, 1.0, 0.5);
  CHECK_THROWS_AS(forward(spec, params, Matrix(3, 2)), ContractViolation);
  params.layers[0].input.weights.push_back(1.0);
  CHECK_THROWS_AS(forward(spec, params, Matrix(3, 1)), ContractViolation);
}

TEST_CASE("delayed layer with D={0} behaves like a feedforward layer") {
  testing::Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto ff = testing::random_network(rng, 2, 5);
    if (ff.layers.size() < 2) ff.layers.push_back(ff.layers[0]);
    ff.layers[1].kind = LayerKind::kFeedforward;
    auto dl = ff;
    dl.layers[1].kind = LayerKind::kDelayed;
    dl.layers[1].delays = DelaySpec{};
    const auto params = init_params(ff, 5);
    const auto in = testing::random_input(rng, 12, ff.input_size, true);
    CHECK(forward(ff, params, in) == forward(dl, params, in));
  }
}

TEST_CASE("losses") {
  Matrix u(4, 1);
  u(3, 0) = 0.7;
  CHECK(loss_mse_readout(u, 0.7).loss == 0.0);
  u(3, 0) = 0.0;
  const auto l = loss_mse_readout(u, 1.0);
  CHECK(l.loss == doctest::Approx(1.0));
  CHECK(l.grad(3, 0) == doctest::Approx(-2.0));
  for (std::size_t k = 0; k < 3; ++k) CHECK(l.grad(k, 0) == 0.0);
  CHECK_THROWS_AS(loss_mse_readout(Matrix(4, 2), 1.0), ContractViolation);

  Matrix flat(5, 4, 0.3);
  CHECK(loss_classification(flat, 2).loss == doctest::Approx(std::log(4.0)));
  Matrix dom(5, 3, 0.0);
  for (std::size_t k = 0; k < 5; ++k) dom(k, 1) = 2.0;
  CHECK(loss_classification(dom, 1).loss < loss_classification(dom, 0).loss);
  CHECK(loss_classification(dom, 1).loss < loss_classification(dom, 2).loss);
  CHECK(predict_class(dom) == 1);
  CHECK_THROWS_AS(loss_classification(dom, 3), ContractViolation);
  CHECK_THROWS_AS(loss_classification(dom, -1), ContractViolation);
}

TEST_CASE("loss gradients match finite differences") {
  testing::Rng rng(4);
  const double h = 1e-6;
  for (int n = 0; n < 20; ++n) {
    Matrix u(6, 1);
    for (auto& v : u.data) v = rng.uniform(-2, 2);
    const double target = rng.uniform(0, 2);
    const auto g = loss_mse_readout(u, target).grad;
    Matrix p = u, m = u;
    p(5, 0) += h;
    m(5, 0) -= h;
    const double fd = (loss_mse_readout(p, target).loss - loss_mse_readout(m, target).loss) / (2 * h);
    CHECK(g(5, 0) == doctest::Approx(fd).epsilon(1e-6));
  }
  for (int n = 0; n < 20; ++n) {
    Matrix u(6, 3);
    for (auto& v : u.data) v = rng.uniform(-2, 2);
    const int label = static_cast<int>(rng.index(0, 2));
    const auto g = loss_classification(u, label).grad;
    for (std::size_t k = 0; k < 6; ++k)
      for (std::size_t c = 0; c < 3; ++c) {
        Matrix p = u, m = u;
        p(k, c) += h;
        m(k, c) -= h;
        const double fd = (loss_classification(p, label).loss - loss_classification(m, label).loss) / (2 * h);
        CHECK(g(k, c) == doctest::Approx(fd).epsilon(1e-5).scale(1e-8));
      }
  }
}

TEST_CASE("backward matches finite differences on soft networks") {
  testing::Rng rng(5);
  std::size_t checked = 0;
  for (int n = 0; n < 6; ++n) {
    const auto p = testing::random_grad_problem(rng);
    const auto grads = testing::problem_grad(p);
    for (const auto& r : testing::param_refs(p.params)) {
      if (r.masked) {
        CHECK(testing::grad_at(grads, r) == 0.0);
        continue;
      }
      if (!rng.coin(0.3)) continue;
      const double fd = testing::numeric_grad(p, r, 1e-5);
      CHECK(testing::relative_error(testing::grad_at(grads, r), fd) < 1e-4);
      ++checked;
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("layers the loss cannot see get zero gradient") {
  const auto spec = small_delay_net();
  auto params = init_params(spec, 3);
  std::fill(params.readout.input.weights.begin(), params.readout.input.weights.end(), 0.0);
  testing::Rng rng(6);
  const auto in = testing::random_input(rng, 10, 2, false);
  const auto tape = forward(spec, params, in);
  const auto g = backward(spec, params, tape, loss_mse_readout(tape.readout_potentials(), 1.0).grad);
  for (const auto& lp : g.layers) {
    for (double v : lp.input.weights) CHECK(v == 0.0);
    for (double v : lp.decay_param) CHECK(v == 0.0);
  }
}

TEST_CASE("backward rejects a mismatched tape") {
  const auto spec = small_delay_net();
  const auto params = init_params(spec, 3);
  const auto tape = forward(spec, params, Matrix(5, 2, 1.0));
  CHECK_THROWS_AS(backward(spec, params, tape, Matrix(4, 1)), ContractViolation);
}

TEST_CASE("batch gradient does not depend on the worker count") {
  const auto spec = small_delay_net();
  const auto params = init_params(spec, 9);
  const auto data = adding_like(13, 1);
  std::vector<std::size_t> idx(data.size());
  for (std::size_t n = 0; n < idx.size(); ++n) idx[n] = n;
  NetworkParams g1, g4;
  const double l1 = batch_gradient(spec, params, data, idx, LossKind::kMseFinal, 1, g1);
  const double l4 = batch_gradient(spec, params, data, idx, LossKind::kMseFinal, 4, g4);
  CHECK(l1 == l4);
  CHECK(g1 == g4);
}

TEST_CASE("training: zero learning rate leaves params unchanged") {
  const auto spec = small_delay_net();
  Hyperparams hp;
  hp.learning_rate = 0.0;
  hp.epochs = 1;
  hp.batch_size = 4;
  const auto before = init_params(spec, hp.seed);
  const auto r = train(spec, adding_like(12, 2), hp);
  CHECK(r.params == before);
  CHECK(r.history.size() == 1);
}

TEST_CASE("training: same seed, same metric series") {
  const auto spec = small_delay_net();
  Hyperparams hp;
  hp.epochs = 3;
  hp.batch_size = 5;
  hp.seed = 77;
  const auto data = adding_like(20, 3);
  const auto a = train(spec, data, hp);
  hp.workers = 3;
  const auto b = train(spec, data, hp);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) CHECK(a.history[e].loss == b.history[e].loss);
  CHECK(a.params == b.params);
}

TEST_CASE("training stops on divergence") {
  const auto spec = small_delay_net();
  auto data = adding_like(4, 4);
  data[2].input(3, 0) = std::numeric_limits<double>::quiet_NaN();
  Hyperparams hp;
  hp.epochs = 1;
  CHECK_THROWS_AS(train(spec, data, hp), DivergenceError);
  CHECK_THROWS_AS(train(spec, Dataset{}, hp), ContractViolation);
}

TEST_CASE("optimizer keeps masked weights at zero and decays in (0, 1)") {
  const auto spec = small_delay_net();
  auto params = init_params(spec, 4);
  testing::Rng rng(8);
  for (auto& m : params.layers[1].input.mask) m = rng.coin(0.5) ? 1.0 : 0.0;
  params.layers[1].input.apply_mask();
  const auto mask = params.layers[1].input.mask;
  Adam opt(params, 0.5);
  for (int step = 0; step < 100; ++step) {
    auto g = params.zeros_like();
    for_each_tensor(g, [&](std::span<double> v, const std::vector<double>*) {
      for (auto& x : v) x = rng.uniform(-10, 10);
    });
    opt.step(params, g);
    CHECK(params.layers[1].input.mask == mask);
    for (std::size_t n = 0; n < mask.size(); ++n)
      if (mask[n] == 0.0) CHECK(params.layers[1].input.weights[n] == 0.0);
  }
  for (const auto& lp : params.layers)
    for (double a : lp.alpha()) CHECK((a > 0.0 && a < 1.0));
}

TEST_CASE("hyperparameter validation") {
  Hyperparams hp;
  hp.batch_size = 0;
  CHECK_THROWS_AS(hp.validate(), ContractViolation);
  hp = {};
  hp.learning_rate = -1;
  CHECK_THROWS_AS(hp.validate(), ContractViolation);
  hp = {};
  hp.lr_decay = 0;
  CHECK_THROWS_AS(hp.validate(), ContractViolation);
}

TEST_CASE("evaluate reports activity per population") {
  const auto spec = small_delay_net();
  const auto params = init_params(spec, 1);
  const auto data = adding_like(5, 5);
  const auto ev = evaluate(spec, params, data, LossKind::kMseFinal);
  REQUIRE(ev.activity.layers.size() == 3);
  CHECK(ev.activity.steps == 8);
  CHECK(ev.activity.layers[0].name == "input");
  for (const auto& l : ev.activity.layers) {
    CHECK(l.max_per_step >= l.avg_per_step);
    CHECK(l.total == doctest::Approx(l.avg_per_step * 8));
  }
  CHECK_FALSE(ev.accuracy.has_value());
}
