#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bicameral/tensor.hpp"

namespace bicameral {

struct GradcheckOptions {
  double step = 1e-5;
  double rel_tol = 1e-4;
  // Denominator floor of the relative error, so entries whose true gradient
  // is ~0 are judged against the finite-difference roundoff scale instead.
  double scale_floor = 1e-5;
};

struct GradcheckResult {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool passed = true;
};

/// Compares reverse-mode gradients of `loss_fn` with central differences on
/// every element of every tensor in `inputs`. `loss_fn` must rebuild the
/// graph from the (mutated in place) inputs on each call.
GradcheckResult gradcheck(const std::string& name, const std::function<Tensor()>& loss_fn,
                          std::vector<Tensor> inputs, const GradcheckOptions& opts = {});

/// Reverse-mode vs central-difference sweep over every differentiable
/// tensor op, each on random inputs in [-2, 2].
std::vector<GradcheckResult> gradcheck_all_ops(std::uint64_t seed,
                                               const GradcheckOptions& opts = {});

}  // namespace bicameral
