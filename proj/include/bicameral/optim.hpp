#pragma once

#include <cstdint>
#include <vector>

#include "bicameral/tensor.hpp"

namespace bicameral {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t step = 0;
};

// One bias-corrected Adam update. params and grads are paired by index; an
// empty grad vector skips its parameter.
void adam_step(std::vector<Tensor>& params, const std::vector<std::vector<double>>& grads,
               AdamState& state, const AdamConfig& cfg);

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg);

  // Consumes the gradients accumulated on the parameters.
  void step();
  void zero_grad();

  const AdamState& state() const { return state_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Tensor> params_;
  AdamConfig cfg_;
  AdamState state_;
};

}  // namespace bicameral
