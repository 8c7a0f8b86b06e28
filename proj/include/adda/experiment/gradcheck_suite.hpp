#pragma once

#include <cstdint>
#include <vector>

#include "adda/autodiff/gradcheck.hpp"

namespace adda {

/// Finite-difference checks of every primitive, the encoder, spectral
/// normalization and each composed loss, on tiny random configurations.
std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed = 1);

}  // namespace adda
