#pragma once

#include <functional>
#include <optional>
#include <string>

#include "sdq/params.hpp"
#include "sdq/tape.hpp"

namespace sdq {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

// Builds the loss on a fresh tape. Must be deterministic across calls (reset
// any dropout RNG inside).
using LossBuilder = std::function<Var(Tape<double>&, ParamSet<double>&)>;

/// Compares reverse-mode gradients with central differences
/// (f(w + eps) - f(w - eps)) / (2 eps) coordinate by coordinate. Relative
/// error is |a - n| / max(|a|, |n|, floor). With `max_per_parameter`, only a
/// deterministic random subset of coordinates of each tensor is probed.
GradCheckResult check_gradients(ParamSet<double>& params, const LossBuilder& loss, double eps = 1e-4,
                                std::optional<std::size_t> max_per_parameter = std::nullopt,
                                std::uint64_t sample_seed = 0, double floor = 1e-6);

}  // namespace sdq
