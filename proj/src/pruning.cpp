#include "dsnn/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dsnn/errors.hpp"

namespace dsnn {

void PruneConfig::validate() const {
  require(cap_per_pair.has_value() != keep_fraction.has_value(),
          "prune: set exactly one of cap_per_pair and keep_fraction");
  if (cap_per_pair) require(*cap_per_pair >= 1, "prune: cap_per_pair must be >= 1");
  if (keep_fraction) {
    require(*keep_fraction > 0.0 && *keep_fraction <= 1.0, "prune: keep_fraction must be in (0, 1]");
  }
  if (refine_stride) require(*refine_stride >= 1, "prune: refine_stride must be >= 1");
}

std::vector<double> prune_by_magnitude(const DelayLayerParams& params, const PruneConfig& config) {
  config.validate();
  params.validate();
  const std::size_t slots = params.slots();
  std::vector<double> mask = params.mask;

  // Ranking: larger |w| first, then smaller delay, then smaller flat index.
  auto before = [&params](std::size_t a, std::size_t b) {
    const double wa = std::abs(params.weights[a]);
    const double wb = std::abs(params.weights[b]);
    if (wa != wb) return wa > wb;
    const std::size_t sa = a % params.slots();
    const std::size_t sb = b % params.slots();
    if (sa != sb) return params.delay_spec.delays[sa] < params.delay_spec.delays[sb];
    return a < b;
  };

  if (config.cap_per_pair) {
    const std::size_t cap = *config.cap_per_pair;
    require(cap <= slots, "prune: cap_per_pair " + std::to_string(cap) + " exceeds |D| = " +
                              std::to_string(slots));
    std::vector<std::size_t> active;
    for (std::size_t pair = 0; pair < params.pre * params.post; ++pair) {
      active.clear();
      for (std::size_t s = 0; s < slots; ++s) {
        if (mask[pair * slots + s] != 0.0) active.push_back(pair * slots + s);
      }
      if (active.size() <= cap) continue;
      std::sort(active.begin(), active.end(), before);
      for (std::size_t r = cap; r < active.size(); ++r) mask[active[r]] = 0.0;
    }
    return mask;
  }

  const auto keep = static_cast<std::size_t>(
      std::ceil(*config.keep_fraction * static_cast<double>(mask.size()) - 1e-9));
  std::vector<std::size_t> active;
  for (std::size_t n = 0; n < mask.size(); ++n) {
    if (mask[n] != 0.0) active.push_back(n);
  }
  if (active.size() <= keep) return mask;
  std::sort(active.begin(), active.end(), before);
  for (std::size_t r = keep; r < active.size(); ++r) mask[active[r]] = 0.0;
  return mask;
}

DelayLayerParams refine_delays(const DelayLayerParams& params, int new_stride) {
  params.validate();
  if (!params.delay_spec.stride) {
    throw ContractViolation("refine_delays: delay set has no stride to refine");
  }
  const int old_stride = *params.delay_spec.stride;
  require(new_stride >= 1 && new_stride <= old_stride && old_stride % new_stride == 0,
          "refine_delays: new stride must divide the current stride");
  const int max_delay = params.delay_spec.max_delay();
  const std::size_t slots = params.slots();
  const std::size_t pairs = params.pre * params.post;

  // Candidate delays per pair.
  std::vector<std::set<int>> wanted(pairs);
  std::set<int> all(params.delay_spec.delays.begin(), params.delay_spec.delays.end());
  for (std::size_t pair = 0; pair < pairs; ++pair) {
    for (std::size_t s = 0; s < slots; ++s) {
      if (params.mask[pair * slots + s] == 0.0) continue;
      const int d = params.delay_spec.delays[s];
      wanted[pair].insert(d);
      for (int off = new_stride; off < old_stride; off += new_stride) {
        for (int c : {d - off, d + off}) {
          if (c < 0 || c > max_delay) continue;
          wanted[pair].insert(c);
          all.insert(c);
        }
      }
    }
  }

  DelaySpec spec;
  spec.delays.assign(all.begin(), all.end());
  spec.depth = params.delay_spec.depth;
  spec.stride = new_stride;
  DelayLayerParams out(params.pre, params.post, spec);
  std::fill(out.mask.begin(), out.mask.end(), 0.0);
  const std::size_t new_slots = out.slots();
  auto slot_of = [&spec](int d) {
    return static_cast<std::size_t>(std::lower_bound(spec.delays.begin(), spec.delays.end(), d) -
                                    spec.delays.begin());
  };
  for (std::size_t pair = 0; pair < pairs; ++pair) {
    for (int d : wanted[pair]) out.mask[pair * new_slots + slot_of(d)] = 1.0;
    for (std::size_t s = 0; s < slots; ++s) {
      if (params.mask[pair * slots + s] == 0.0) continue;
      out.weights[pair * new_slots + slot_of(params.delay_spec.delays[s])] =
          params.weights[pair * slots + s];
    }
  }
  return out;
}

PruneResult prune_finetune_loop(const NetworkSpec& spec, const NetworkParams& params,
                                const Dataset& data, const PruneConfig& config,
                                const Hyperparams& hp) {
  config.validate();
  PruneResult result{spec, params, {}};
  for (std::size_t round = 1; round <= config.refine_rounds; ++round) {
    auto process = [&](DelayLayerParams& proj, auto&& set_spec_delays) {
      if (proj.slots() <= 1) return;
      PruneConfig cfg = config;
      if (cfg.cap_per_pair) cfg.cap_per_pair = std::min(*cfg.cap_per_pair, proj.slots());
      proj.mask = prune_by_magnitude(proj, cfg);
      proj.apply_mask();
      if (config.refine_stride && proj.delay_spec.stride &&
          *config.refine_stride < *proj.delay_spec.stride) {
        proj = refine_delays(proj, *config.refine_stride);
        set_spec_delays(proj.delay_spec);
      }
    };
    for (std::size_t l = 0; l < result.params.layers.size(); ++l) {
      process(result.params.layers[l].input,
              [&](const DelaySpec& d) { result.spec.layers[l].delays = d; });
    }
    process(result.params.readout.input,
            [&](const DelaySpec& d) { result.spec.readout.delays = d; });

    if (config.finetune_epochs > 0) {
      Hyperparams ft = hp;
      ft.epochs = config.finetune_epochs;
      ft.seed = hp.seed + round;
      result.params = fit(result.spec, std::move(result.params), data, ft).params;
    }
    const auto ev = evaluate(result.spec, result.params, data, hp.loss, hp.workers);
    RoundReport rep;
    rep.round = round;
    rep.params = result.params.effective_param_count();
    rep.loss = ev.loss;
    rep.accuracy = ev.accuracy;
    for (std::size_t p = 1; p < ev.activity.layers.size(); ++p) {
      rep.spikes_per_step.push_back(ev.activity.layers[p].avg_per_step);
    }
    result.rounds.push_back(rep);
  }
  return result;
}

}  // namespace dsnn
