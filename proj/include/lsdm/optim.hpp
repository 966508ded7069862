#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "lsdm/tensor.hpp"

namespace lsdm::nn {

struct AdamConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("adam: alpha must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
      throw std::invalid_argument("adam: betas must lie in [0, 1)");
  }
};

/// Bias-corrected Adam. Epsilon is fixed at 1e-8 and added outside the
/// square root. `alpha` may be rescheduled between steps.
struct AdamState {
  static constexpr double kEps = 1e-8;

  AdamConfig cfg;
  std::vector<Tensor> m, v;
  long step = 0;

  explicit AdamState(AdamConfig c = {}) : cfg(c) { cfg.validate(); }

  void ensure_initialized(const std::vector<Tensor*>& params) {
    if (!m.empty()) return;
    for (const Tensor* p : params) {
      m.push_back(Tensor::zeros(p->shape));
      v.push_back(Tensor::zeros(p->shape));
    }
  }
};

inline void adam_step(const std::vector<Tensor*>& params,
                      const std::vector<Tensor>& grads, AdamState& state) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: parameter / gradient count mismatch");
  state.ensure_initialized(params);
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state sized for different parameters");
  ++state.step;
  const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    if (!p.same_shape(g))
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    Tensor &mi = state.m[i], &vi = state.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g.values[k];
      mi.values[k] = b1 * mi.values[k] + (1.0 - b1) * gk;
      vi.values[k] = b2 * vi.values[k] + (1.0 - b2) * gk * gk;
      const double mhat = mi.values[k] / c1;
      const double vhat = vi.values[k] / c2;
      p.values[k] -= state.cfg.alpha * mhat / (std::sqrt(vhat) + AdamState::kEps);
    }
  }
}

/// Exponential moving average of a parameter set.
struct EmaState {
  double decay = 0.999;
  std::vector<Tensor> shadow;

  EmaState() = default;
  EmaState(double d, const std::vector<Tensor*>& params) : decay(d) {
    if (!(d > 0.0 && d < 1.0))
      throw std::invalid_argument("ema: decay must lie in (0, 1)");
    for (const Tensor* p : params) shadow.push_back(*p);
  }
};

inline void ema_update(EmaState& ema, const std::vector<Tensor*>& params) {
  if (ema.shadow.size() != params.size())
    throw std::invalid_argument("ema_update: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& s = ema.shadow[i];
    const Tensor& p = *params[i];
    if (!s.same_shape(p))
      throw std::invalid_argument("ema_update: shape mismatch");
    for (std::size_t k = 0; k < s.size(); ++k)
      s.values[k] = ema.decay * s.values[k] + (1.0 - ema.decay) * p.values[k];
  }
}

/// Step decay: halve the base rate at every milestone already reached.
inline double lr_schedule_value(double base_alpha, std::size_t epoch,
                                const std::vector<std::size_t>& milestones) {
  for (std::size_t i = 1; i < milestones.size(); ++i)
    if (milestones[i] <= milestones[i - 1])
      throw std::invalid_argument("lr_schedule: milestones must be strictly increasing");
  std::size_t halvings = 0;
  for (std::size_t m : milestones)
    if (m <= epoch) ++halvings;
  return base_alpha / std::pow(2.0, static_cast<double>(halvings));
}

/// Milestones at 30 / 50 / 75 percent of the epoch budget.
inline std::vector<std::size_t> default_milestones(std::size_t epochs) {
  std::vector<std::size_t> out;
  for (double f : {0.30, 0.50, 0.75}) {
    auto m = static_cast<std::size_t>(f * static_cast<double>(epochs));
    if (m > 0 && (out.empty() || m > out.back())) out.push_back(m);
  }
  return out;
}

}  // namespace lsdm::nn
