#include "dsnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <utility>
#include <thread>

#include "dsnn/errors.hpp"

namespace dsnn {

namespace {

std::size_t history_capacity(const DelayLayerParams& p) {
  return static_cast<std::size_t>(p.delay_spec.max_delay()) + 1;
}

// Projection backward over a full sequence. Accumulates dW (masked) and, when
// requested, d loss / d presynaptic activity.
void projection_backward(const DelayLayerParams& p, const Matrix& pre, const Matrix& d_current,
                         std::vector<double>& d_weights, Matrix* d_pre) {
  const std::size_t steps = pre.rows;
  const std::size_t n = p.pre;
  const std::size_t m = p.post;
  const std::size_t slots = p.slots();
  // Slot-major copies so the inner loops run over contiguous postsynaptic rows.
  std::vector<double> w_eff(slots * n * m);
  std::vector<double> dw(slots * n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t s = 0; s < slots; ++s) {
        const auto src = p.index(i, j, s);
        w_eff[(s * n + i) * m + j] = p.weights[src] * p.mask[src];
      }
    }
  }
  for (std::size_t k = 0; k < steps; ++k) {
    const auto g = d_current.row(k);
    for (std::size_t s = 0; s < slots; ++s) {
      const auto d = static_cast<std::size_t>(p.delay_spec.delays[s]);
      if (d > k) continue;
      const std::size_t src_step = k - d;
      const auto theta = pre.row(src_step);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t base = (s * n + i) * m;
        if (d_pre != nullptr) {
          const double* w = w_eff.data() + base;
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += w[j] * g[j];
          (*d_pre)(src_step, i) += acc;
        }
        const double x = theta[i];
        if (x == 0.0) continue;
        double* out = dw.data() + base;
        for (std::size_t j = 0; j < m; ++j) out[j] += g[j] * x;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t s = 0; s < slots; ++s) {
        const auto dst = p.index(i, j, s);
        d_weights[dst] += dw[(s * n + i) * m + j] * p.mask[dst];
      }
    }
  }
}

}  // namespace

Tape forward(const NetworkSpec& spec, const NetworkParams& params, const Matrix& input) {
  require(input.rows >= 1, "forward: input must have at least one timestep");
  if (input.cols != spec.input_size) {
    throw ContractViolation("forward: input has " + std::to_string(input.cols) +
                            " channels, network expects " + std::to_string(spec.input_size));
  }
  check_params(spec, params);
  const std::size_t steps = input.rows;
  const std::size_t n_layers = spec.layers.size();

  Tape tape;
  tape.input = input;
  std::vector<SpikeHistoryBuffer> history;
  std::vector<std::vector<double>> alpha;
  history.reserve(n_layers + 1);
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& lp = params.layers[l];
    const std::size_t size = lp.input.post;
    tape.layers.push_back({Matrix(steps, size), Matrix(steps, size), Matrix(steps, size)});
    history.emplace_back(lp.input.pre, history_capacity(lp.input));
    alpha.push_back(lp.alpha());
  }
  const std::size_t r = params.readout.input.post;
  tape.readout = {Matrix(steps, r), Matrix(steps, r), Matrix(steps, r)};
  history.emplace_back(params.readout.input.pre, history_capacity(params.readout.input));
  const auto readout_alpha = params.readout.alpha();

  std::vector<double> zeros;
  std::vector<double> lateral;
  for (std::size_t k = 0; k < steps; ++k) {
    history[0].push(input.row(k));
    for (std::size_t l = 0; l < n_layers; ++l) {
      const auto& lp = params.layers[l];
      auto& tr = tape.layers[l];
      const std::size_t size = lp.input.post;
      auto current = tr.current.row(k);
      delayed_input(lp.input, history[l], current);
      zeros.assign(size, 0.0);
      std::span<const double> u_prev = zeros;
      std::span<const double> theta_prev = zeros;
      if (k > 0) {
        u_prev = tr.u.row(k - 1);
        theta_prev = tr.theta.row(k - 1);
      }
      if (lp.recurrent) {
        lateral.resize(size);
        feedforward_input(*lp.recurrent, theta_prev, lateral);
        for (std::size_t j = 0; j < size; ++j) current[j] += lateral[j];
      }
      lif_step(u_prev, theta_prev, current, alpha[l], tr.u.row(k));
      threshold(tr.u.row(k), spec.layers[l].neuron.u_th, spec.surrogate, tr.theta.row(k));
      history[l + 1].push(tr.theta.row(k));
    }
    auto current = tape.readout.current.row(k);
    delayed_input(params.readout.input, history[n_layers], current);
    zeros.assign(r, 0.0);
    std::span<const double> u_prev = k > 0 ? tape.readout.u.row(k - 1) : std::span<const double>(zeros);
    lif_step(u_prev, zeros, current, readout_alpha, tape.readout.u.row(k));
  }
  return tape;
}

NetworkParams backward(const NetworkSpec& spec, const NetworkParams& params, const Tape& tape,
                       const Matrix& readout_grad) {
  const std::size_t steps = tape.steps();
  const std::size_t n_layers = spec.layers.size();
  require(tape.layers.size() == n_layers && params.layers.size() == n_layers,
          "backward: tape/params layer count mismatch");
  require(readout_grad.rows == steps && readout_grad.cols == params.readout.input.post,
          "backward: readout gradient shape mismatch");
  require(tape.readout.u.rows == steps && tape.readout.u.cols == params.readout.input.post,
          "backward: tape does not match params");
  for (std::size_t l = 0; l < n_layers; ++l) {
    require(tape.layers[l].u.cols == params.layers[l].input.post && tape.layers[l].u.rows == steps,
            "backward: tape does not match params");
  }

  NetworkParams grads = params.zeros_like();
  const double beta = spec.surrogate.beta;

  // Readout: u_k = a u_{k-1} + I_k.
  const std::size_t r = params.readout.input.post;
  Matrix d_current(steps, r);
  {
    const auto a = params.readout.alpha();
    std::vector<double> delta(r, 0.0);
    std::vector<double> d_alpha(r, 0.0);
    for (std::size_t kk = steps; kk-- > 0;) {
      for (std::size_t j = 0; j < r; ++j) {
        delta[j] = readout_grad(kk, j) + a[j] * delta[j];
        d_current(kk, j) = delta[j];
        if (kk > 0) d_alpha[j] += delta[j] * tape.readout.u(kk - 1, j);
      }
    }
    for (std::size_t j = 0; j < r; ++j) {
      grads.readout.decay_param[j] = d_alpha[j] * a[j] * (1.0 - a[j]);
    }
  }

  const Matrix& top = n_layers > 0 ? tape.layers.back().theta : tape.input;
  Matrix d_theta(steps, top.cols);
  projection_backward(params.readout.input, top, d_current, grads.readout.input.weights, &d_theta);

  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& lp = params.layers[l];
    const auto& tr = tape.layers[l];
    auto& gl = grads.layers[l];
    const std::size_t m = lp.input.post;
    const double u_th = spec.layers[l].neuron.u_th;
    const auto a = lp.alpha();

    Matrix d_cur(steps, m);
    std::vector<double> delta_next(m, 0.0);
    std::vector<double> delta(m, 0.0);
    std::vector<double> d_alpha(m, 0.0);
    std::vector<double> d_theta_k(m, 0.0);
    for (std::size_t kk = steps; kk-- > 0;) {
      const bool has_next = kk + 1 < steps;
      for (std::size_t j = 0; j < m; ++j) d_theta_k[j] = d_theta(kk, j);
      if (has_next) {
        // u_{k+1} = a u_k (1 - theta_k) + I_{k+1}, I_{k+1} includes rec . theta_k
        for (std::size_t j = 0; j < m; ++j) d_theta_k[j] -= a[j] * tr.u(kk, j) * delta_next[j];
        if (lp.recurrent) {
          for (std::size_t i = 0; i < m; ++i) {
            const double* row = lp.recurrent->w.data() + i * m;
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += row[j] * delta_next[j];
            d_theta_k[i] += acc;
          }
        }
      }
      for (std::size_t j = 0; j < m; ++j) {
        double dj = d_theta_k[j] * fast_sigmoid_grad(tr.u(kk, j) - u_th, beta);
        if (has_next) dj += a[j] * (1.0 - tr.theta(kk, j)) * delta_next[j];
        delta[j] = dj;
        d_cur(kk, j) = dj;
        if (kk > 0) d_alpha[j] += dj * tr.u(kk - 1, j) * (1.0 - tr.theta(kk - 1, j));
      }
      if (lp.recurrent && kk > 0) {
        auto& gw = gl.recurrent->w;
        for (std::size_t i = 0; i < m; ++i) {
          const double x = tr.theta(kk - 1, i);
          if (x == 0.0) continue;
          double* out = gw.data() + i * m;
          for (std::size_t j = 0; j < m; ++j) out[j] += x * delta[j];
        }
      }
      std::swap(delta, delta_next);
    }
    for (std::size_t j = 0; j < m; ++j) gl.decay_param[j] = d_alpha[j] * a[j] * (1.0 - a[j]);

    const Matrix& pre = l > 0 ? tape.layers[l - 1].theta : tape.input;
    if (l > 0) {
      d_theta = Matrix(steps, pre.cols);
      projection_backward(lp.input, pre, d_cur, gl.input.weights, &d_theta);
    } else {
      projection_backward(lp.input, pre, d_cur, gl.input.weights, nullptr);
    }
  }
  return grads;
}

LossResult loss_mse_readout(const Matrix& readout, double target) {
  require(readout.cols == 1, "loss_mse_readout: readout size must be 1");
  require(readout.rows >= 1, "loss_mse_readout: empty readout");
  LossResult out;
  out.grad = Matrix(readout.rows, 1);
  const double diff = readout(readout.rows - 1, 0) - target;
  out.loss = diff * diff;
  out.grad(readout.rows - 1, 0) = 2.0 * diff;
  return out;
}

LossResult loss_classification(const Matrix& readout, int label) {
  const std::size_t classes = readout.cols;
  if (label < 0 || static_cast<std::size_t>(label) >= classes) {
    throw ContractViolation("loss_classification: label " + std::to_string(label) +
                            " out of range for " + std::to_string(classes) + " classes");
  }
  require(readout.rows >= 1, "loss_classification: empty readout");
  std::vector<double> score(classes, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> when(classes, 0);
  for (std::size_t k = 0; k < readout.rows; ++k) {
    for (std::size_t c = 0; c < classes; ++c) {
      if (readout(k, c) > score[c]) {
        score[c] = readout(k, c);
        when[c] = k;
      }
    }
  }
  const double top = *std::max_element(score.begin(), score.end());
  double z = 0.0;
  for (double s : score) z += std::exp(s - top);
  LossResult out;
  out.loss = std::log(z) + top - score[static_cast<std::size_t>(label)];
  out.grad = Matrix(readout.rows, classes);
  for (std::size_t c = 0; c < classes; ++c) {
    const double p = std::exp(score[c] - top) / z;
    out.grad(when[c], c) = p - (c == static_cast<std::size_t>(label) ? 1.0 : 0.0);
  }
  return out;
}

int predict_class(const Matrix& readout) {
  std::vector<double> score(readout.cols, -std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < readout.rows; ++k) {
    for (std::size_t c = 0; c < readout.cols; ++c) score[c] = std::max(score[c], readout(k, c));
  }
  return static_cast<int>(std::max_element(score.begin(), score.end()) - score.begin());
}

void Hyperparams::validate() const {
  require(learning_rate >= 0.0 && std::isfinite(learning_rate),
          "hyperparams: learning rate must be finite and non-negative");
  require(lr_decay > 0.0 && lr_decay <= 1.0, "hyperparams: lr_decay must be in (0, 1]");
  require(batch_size >= 1, "hyperparams: batch size must be >= 1");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
          "hyperparams: moment coefficients must be in [0, 1)");
  require(epsilon > 0.0, "hyperparams: epsilon must be positive");
}

namespace {

std::size_t resolve_workers(std::size_t requested, std::size_t jobs) {
  std::size_t w = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return std::max<std::size_t>(1, std::min(w, jobs));
}

// Runs fn(job) for job in [0, jobs) over `workers` threads; jobs are independent.
template <typename Fn>
void parallel_for(std::size_t jobs, std::size_t workers, Fn&& fn) {
  workers = resolve_workers(workers, jobs);
  if (workers == 1) {
    for (std::size_t j = 0; j < jobs; ++j) fn(j);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t j = w; j < jobs; j += workers) fn(j);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

LossResult compute_loss(const Matrix& readout, const Sample& sample, LossKind kind) {
  return kind == LossKind::kMseFinal ? loss_mse_readout(readout, sample.target)
                                     : loss_classification(readout, sample.label);
}

void add_into(NetworkParams& acc, const NetworkParams& g) {
  std::vector<std::span<double>> dst;
  for_each_tensor(acc, [&dst](std::span<double> t, const std::vector<double>*) { dst.push_back(t); });
  std::size_t idx = 0;
  for_each_tensor(g, [&](std::span<const double> t, const std::vector<double>*) {
    auto out = dst[idx++];
    for (std::size_t n = 0; n < t.size(); ++n) out[n] += t[n];
  });
}

}  // namespace

double batch_gradient(const NetworkSpec& spec, const NetworkParams& params, const Dataset& data,
                      std::span<const std::size_t> indices, LossKind loss, std::size_t workers,
                      NetworkParams& grads_out) {
  require(!indices.empty(), "batch_gradient: empty batch");
  std::vector<NetworkParams> per_sample(indices.size());
  std::vector<double> losses(indices.size());
  parallel_for(indices.size(), workers, [&](std::size_t b) {
    const auto& sample = data.at(indices[b]);
    const Tape tape = forward(spec, params, sample.input);
    const auto lr = compute_loss(tape.readout_potentials(), sample, loss);
    losses[b] = lr.loss;
    per_sample[b] = backward(spec, params, tape, lr.grad);
  });
  grads_out = params.zeros_like();
  double total = 0.0;
  for (std::size_t b = 0; b < indices.size(); ++b) {
    add_into(grads_out, per_sample[b]);
    total += losses[b];
  }
  const double scale = 1.0 / static_cast<double>(indices.size());
  for_each_tensor(grads_out, [scale](std::span<double> t, const std::vector<double>*) {
    for (auto& x : t) x *= scale;
  });
  return total * scale;
}

Adam::Adam(const NetworkParams& like, double lr, double beta1, double beta2, double epsilon)
    : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  for_each_tensor(like, [this](std::span<const double> t, const std::vector<double>*) {
    m_.emplace_back(t.size(), 0.0);
    v_.emplace_back(t.size(), 0.0);
  });
}

void Adam::step(NetworkParams& params, const NetworkParams& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::vector<std::span<const double>> g;
  for_each_tensor(grads, [&g](std::span<const double> t, const std::vector<double>*) { g.push_back(t); });
  require(g.size() == m_.size(), "Adam: parameter structure changed");
  std::size_t idx = 0;
  for_each_tensor(params, [&](std::span<double> w, const std::vector<double>* mask) {
    const auto gi = g[idx];
    auto& m = m_[idx];
    auto& v = v_[idx];
    require(gi.size() == w.size() && m.size() == w.size(), "Adam: tensor shape changed");
    for (std::size_t n = 0; n < w.size(); ++n) {
      if (mask != nullptr && (*mask)[n] == 0.0) {
        w[n] = 0.0;
        continue;
      }
      m[n] = beta1_ * m[n] + (1.0 - beta1_) * gi[n];
      v[n] = beta2_ * v[n] + (1.0 - beta2_) * gi[n] * gi[n];
      w[n] -= lr_ * (m[n] / c1) / (std::sqrt(v[n] / c2) + epsilon_);
    }
    ++idx;
  });
  auto clamp_decay = [](LayerParams& lp) {
    for (auto& p : lp.decay_param) {
      p = std::clamp(p, -kMaxDecayParam, kMaxDecayParam);
      const double a = decay_from_param(p);
      require(a > 0.0 && a < 1.0, "Adam: decay factor left (0, 1)");
    }
  };
  for (auto& lp : params.layers) clamp_decay(lp);
  clamp_decay(params.readout);
}

EvalResult evaluate(const NetworkSpec& spec, const NetworkParams& params, const Dataset& data,
                    LossKind loss, std::size_t workers) {
  require(!data.empty(), "evaluate: empty dataset");
  const std::size_t n_pop = spec.layers.size() + 1;
  struct PerSample {
    double loss = 0.0;
    bool correct = false;
    std::size_t steps = 0;
    std::vector<double> total, peak;
  };
  std::vector<PerSample> res(data.size());
  parallel_for(data.size(), workers, [&](std::size_t s) {
    const auto& sample = data[s];
    const Tape tape = forward(spec, params, sample.input);
    auto& out = res[s];
    out.loss = compute_loss(tape.readout_potentials(), sample, loss).loss;
    if (loss == LossKind::kCrossEntropyMax) {
      out.correct = predict_class(tape.readout_potentials()) == sample.label;
    }
    out.steps = tape.steps();
    out.total.assign(n_pop, 0.0);
    out.peak.assign(n_pop, 0.0);
    auto count = [&](const Matrix& m, std::size_t p) {
      for (std::size_t k = 0; k < m.rows; ++k) {
        double c = 0.0;
        for (double x : m.row(k)) c += x != 0.0 ? (spec.surrogate.mode == SpikeMode::kHard ? 1.0 : x) : 0.0;
        out.total[p] += c;
        out.peak[p] = std::max(out.peak[p], c);
      }
    };
    count(tape.input, 0);
    for (std::size_t l = 0; l < spec.layers.size(); ++l) count(tape.layers[l].theta, l + 1);
  });

  EvalResult ev;
  double correct = 0.0;
  double step_sum = 0.0;
  ev.activity.layers.resize(n_pop);
  for (std::size_t p = 0; p < n_pop; ++p) {
    ev.activity.layers[p].name = p == 0 ? "input" : "layer" + std::to_string(p);
  }
  for (const auto& r : res) {
    ev.loss += r.loss;
    correct += r.correct ? 1.0 : 0.0;
    step_sum += static_cast<double>(r.steps);
    for (std::size_t p = 0; p < n_pop; ++p) {
      ev.activity.layers[p].total += r.total[p];
      ev.activity.layers[p].max_per_step = std::max(ev.activity.layers[p].max_per_step, r.peak[p]);
    }
  }
  const double n = static_cast<double>(data.size());
  ev.loss /= n;
  if (loss == LossKind::kCrossEntropyMax) ev.accuracy = correct / n;
  ev.activity.steps = static_cast<std::size_t>(std::lround(step_sum / n));
  for (auto& la : ev.activity.layers) {
    la.avg_per_step = la.total / step_sum;
    la.total /= n;
  }
  return ev;
}

TrainResult fit(const NetworkSpec& spec, NetworkParams params, const Dataset& data,
                const Hyperparams& hp, const EpochCallback& on_epoch) {
  spec.validate();
  hp.validate();
  check_params(spec, params);
  require(!data.empty(), "train: empty dataset");

  TrainResult result;
  Adam opt(params, hp.learning_rate, hp.beta1, hp.beta2, hp.epsilon);
  std::mt19937_64 rng(hp.seed ^ 0x5deece66dULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  NetworkParams grads;
  for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t len = std::min(hp.batch_size, order.size() - start);
      const double loss = batch_gradient(spec, params, data, std::span(order).subspan(start, len),
                                         hp.loss, hp.workers, grads);
      bool finite = std::isfinite(loss);
      for_each_tensor(std::as_const(grads), [&finite](std::span<const double> g, const std::vector<double>*) {
        for (double v : g) finite = finite && std::isfinite(v);
      });
      if (!finite) {
        std::ostringstream msg;
        msg << "training diverged: non-finite batch loss or gradient in epoch " << epoch
            << " at sample offset " << start;
        throw DivergenceError(msg.str());
      }
      opt.step(params, grads);
    }
    opt.set_learning_rate(opt.learning_rate() * hp.lr_decay);
    const auto ev = evaluate(spec, params, data, hp.loss, hp.workers);
    if (!std::isfinite(ev.loss)) {
      throw DivergenceError("training diverged: non-finite loss after epoch " +
                            std::to_string(epoch));
    }
    EpochMetrics em;
    em.epoch = epoch;
    em.loss = ev.loss;
    em.accuracy = ev.accuracy;
    for (std::size_t p = 1; p < ev.activity.layers.size(); ++p) {
      em.spikes_per_step.push_back(ev.activity.layers[p].avg_per_step);
    }
    result.history.push_back(em);
    if (on_epoch && !on_epoch(em)) break;
  }
  result.params = std::move(params);
  return result;
}

TrainResult train(const NetworkSpec& spec, const Dataset& data, const Hyperparams& hp,
                  const EpochCallback& on_epoch) {
  return fit(spec, init_params(spec, hp.seed), data, hp, on_epoch);
}

}  // namespace dsnn
