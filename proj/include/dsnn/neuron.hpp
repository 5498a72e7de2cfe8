#pragma once

// Discrete-time leaky integrate-and-fire dynamics and the fast-sigmoid
// surrogate used to differentiate through the spike threshold.

#include <span>
#include <vector>

namespace dsnn {

enum class SpikeMode {
  kHard,  // Heaviside forward, surrogate derivative backward
  kSoft,  // fast sigmoid in the forward pass too (exact gradients)
};

struct SurrogateConfig {
  double beta = 10.0;
  SpikeMode mode = SpikeMode::kHard;
};

struct NeuronConfig {
  double u_th = 1.0;
  // Initial membrane time constant in timesteps; alpha starts at exp(-1/tau).
  double tau_init = 5.0;
};

/// Fast sigmoid s(x) = 0.5 * (1 + beta*x / (1 + beta*|x|)).
double fast_sigmoid(double x, double beta);
/// ds/dx = beta / (2 * (1 + beta*|x|)^2).
double fast_sigmoid_grad(double x, double beta);

/// Decay transform alpha = 1 / (1 + exp(-p)), always in (0, 1) for |p| <= kMaxDecayParam.
double decay_from_param(double p);
double decay_param_from_tau(double tau);
inline constexpr double kMaxDecayParam = 30.0;

/// u = u_prev * alpha * (1 - theta_prev) + input_current, elementwise.
void lif_step(std::span<const double> u_prev, std::span<const double> theta_prev,
              std::span<const double> input_current, std::span<const double> alpha,
              std::span<double> u_out);
std::vector<double> lif_step(std::span<const double> u_prev, std::span<const double> theta_prev,
                             std::span<const double> input_current,
                             std::span<const double> alpha);

/// Hard: theta = [u >= u_th]. Soft: theta = s(u - u_th).
void threshold(std::span<const double> u, double u_th, const SurrogateConfig& cfg,
               std::span<double> theta_out);
std::vector<double> threshold(std::span<const double> u, double u_th,
                              const SurrogateConfig& cfg);

/// d theta / d u under the surrogate relaxation; exact derivative of the soft threshold.
inline double surrogate_grad(double u, double u_th, double beta) {
  return fast_sigmoid_grad(u - u_th, beta);
}

}  // namespace dsnn
