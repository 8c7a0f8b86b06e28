#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>

#include "adda/autodiff/tape.hpp"

namespace adda {

/// Non-finite value detected in a gradient or an updated parameter.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamMoments {
  Tensor first;
  Tensor second;
};

/// Adam with bias-corrected moments. State is keyed by parameter name so it
/// survives copies of the parameter bundle and can be checkpointed.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// Applies one update to every parameter that has an entry in grads.
  /// All gradients are validated before any parameter is touched.
  void step(std::span<Parameter* const> params, const Gradients& grads);

  double lr() const { return lr_; }
  void set_lr(double lr);
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  double eps() const { return eps_; }
  std::uint64_t steps() const { return steps_; }

  const std::map<std::string, AdamMoments>& moments() const { return moments_; }
  /// Restores checkpointed state.
  void restore(std::uint64_t steps, std::map<std::string, AdamMoments> moments);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t steps_ = 0;
  std::map<std::string, AdamMoments> moments_;
};

class Sgd {
 public:
  explicit Sgd(double lr);

  void step(std::span<Parameter* const> params, const Gradients& grads);

  double lr() const { return lr_; }
  std::uint64_t steps() const { return steps_; }
  void restore(std::uint64_t steps) { steps_ = steps; }

 private:
  double lr_;
  std::uint64_t steps_ = 0;
};

}  // namespace adda
