#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "let/autodiff/params.hpp"

namespace let::ad {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst_path;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares backward() against fourth-order central differences on `samples`
// coordinates drawn round-robin over the requires_grad tensors of `params`,
// so every tensor is probed once samples >= params.size(). For each
// coordinate the step is picked from step * 2^j (j = 0..13) by agreement
// between neighbouring estimates, independently of the analytic value.
// Relative error is |a - n| / max(|a|, |n|, 1e-8). `loss_fn` must be
// deterministic.
GradCheckResult gradient_check(const std::function<Tensor()>& loss_fn,
                               const ParamStore& params, std::size_t samples,
                               std::uint64_t seed = 0, double step = 1e-6);

}  // namespace let::ad
