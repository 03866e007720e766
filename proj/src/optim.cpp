#include "bicameral/optim.hpp"

#include <cmath>

namespace bicameral {

void adam_step(std::vector<Tensor>& params, const std::vector<std::vector<double>>& grads,
               AdamState& state, const AdamConfig& cfg) {
  if (grads.size() != params.size()) {
    throw std::invalid_argument("adam_step: " + std::to_string(grads.size()) + " grads for " +
                                std::to_string(params.size()) + " params");
  }
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].size(), 0.0);
      state.v[i].assign(params[i].size(), 0.0);
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& g = grads[i];
    if (g.empty()) continue;
    if (g.size() != params[i].size()) throw ShapeError("adam_step: gradient size mismatch");
    auto w = params[i].mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {}

void Adam::step() {
  std::vector<std::vector<double>> grads;
  grads.reserve(params_.size());
  for (const auto& p : params_) grads.push_back(p.has_grad() ? p.grad() : std::vector<double>{});
  adam_step(params_, grads, state_, cfg_);
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace bicameral
