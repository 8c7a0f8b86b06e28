#pragma once

#include <functional>
#include <span>
#include <string>

#include "adda/autodiff/tape.hpp"

namespace adda {

struct GradCheckResult {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t entries_checked = 0;
  /// Parameter holding the worst entry.
  std::string worst_parameter;
};

/// Builds a scalar loss on a fresh tape from the current parameter values.
using LossBuilder = std::function<Var(Tape&)>;

/// Central finite differences over every entry of every parameter.
///
/// The per-entry error is |analytic - numeric| / max(|analytic|, |numeric|,
/// floor); the floor keeps entries whose true gradient is ~0 from reporting
/// round-off noise as relative error.
GradCheckResult check_gradients(std::string name, std::span<Parameter* const> params,
                                const LossBuilder& build, double step = 1e-5,
                                double floor = 1e-6);

}  // namespace adda
