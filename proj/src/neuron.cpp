#include "dsnn/neuron.hpp"

#include <cmath>

#include "dsnn/errors.hpp"

namespace dsnn {

double fast_sigmoid(double x, double beta) {
  return 0.5 * (1.0 + beta * x / (1.0 + beta * std::abs(x)));
}

double fast_sigmoid_grad(double x, double beta) {
  const double d = 1.0 + beta * std::abs(x);
  return beta / (2.0 * d * d);
}

double decay_from_param(double p) { return 1.0 / (1.0 + std::exp(-p)); }

double decay_param_from_tau(double tau) {
  require(tau > 0.0, "tau_init must be positive");
  const double alpha = std::exp(-1.0 / tau);
  return std::log(alpha / (1.0 - alpha));
}

void lif_step(std::span<const double> u_prev, std::span<const double> theta_prev,
              std::span<const double> input_current, std::span<const double> alpha,
              std::span<double> u_out) {
  const auto n = u_prev.size();
  require(theta_prev.size() == n && input_current.size() == n && alpha.size() == n &&
              u_out.size() == n,
          "lif_step: dimension mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    require(alpha[i] > 0.0 && alpha[i] < 1.0, "lif_step: decay must lie in (0, 1)");
    u_out[i] = u_prev[i] * alpha[i] * (1.0 - theta_prev[i]) + input_current[i];
  }
}

std::vector<double> lif_step(std::span<const double> u_prev, std::span<const double> theta_prev,
                             std::span<const double> input_current,
                             std::span<const double> alpha) {
  std::vector<double> out(u_prev.size());
  lif_step(u_prev, theta_prev, input_current, alpha, out);
  return out;
}

void threshold(std::span<const double> u, double u_th, const SurrogateConfig& cfg,
               std::span<double> theta_out) {
  require(u.size() == theta_out.size(), "threshold: dimension mismatch");
  if (cfg.mode == SpikeMode::kHard) {
    for (std::size_t i = 0; i < u.size(); ++i) theta_out[i] = u[i] >= u_th ? 1.0 : 0.0;
  } else {
    for (std::size_t i = 0; i < u.size(); ++i) theta_out[i] = fast_sigmoid(u[i] - u_th, cfg.beta);
  }
}

std::vector<double> threshold(std::span<const double> u, double u_th,
                              const SurrogateConfig& cfg) {
  std::vector<double> out(u.size());
  threshold(u, u_th, cfg, out);
  return out;
}

}  // namespace dsnn
