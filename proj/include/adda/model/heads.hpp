#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "adda/autodiff/tape.hpp"

namespace adda {

/// Affine map x * W + b with W stored in x out layout.
struct Linear {
  Parameter weight;
  Parameter bias;

  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng);

  std::size_t in() const { return weight.value.rows(); }
  std::size_t out() const { return weight.value.cols(); }
  Var forward(Tape& tape, Var x, bool track) const;
};

/// Relation classifier C: one affine map to K logits, softmax applied by the losses.
class Classifier {
 public:
  Classifier() = default;
  Classifier(std::size_t input, std::size_t classes, std::uint64_t seed);

  std::size_t classes() const { return layer_.out(); }
  std::size_t input_dim() const { return layer_.in(); }

  Var logits(Tape& tape, Var rep, bool track) const;
  /// Row-wise class distribution.
  Var probabilities(Tape& tape, Var rep, bool track) const;

  std::vector<Parameter*> parameters() { return {&layer_.weight, &layer_.bias}; }
  std::vector<const Parameter*> parameters() const { return {&layer_.weight, &layer_.bias}; }
  Linear& layer() { return layer_; }

 private:
  Linear layer_;
};

/// Smoothed target q'(k) = (1 - eps) [k == y] + eps / K.
Tensor smoothed_target_distribution(std::size_t label, double epsilon, std::size_t classes);

/// Persistent power-iteration vectors for one weight matrix W (in x out):
/// u approximates the top left singular vector (length in), v the right one.
struct SpectralState {
  Tensor u;
  Tensor v;
};

SpectralState init_spectral_state(std::size_t in, std::size_t out, std::mt19937_64& rng);

/// W / sigma with sigma computed from the given (fixed) state.
Var spectral_normalize_fixed(Tape& tape, Var weight, const SpectralState& state);

/// Runs `iterations` power-iteration rounds on W, updating state, and returns
/// the estimate sigma = u^T W v (no gradient).
double power_iteration(const Tensor& weight, SpectralState& state, int iterations);

/// W / sigma where sigma = u^T W v is recorded on the tape (u, v held fixed),
/// so gradients include the dependence of sigma on W. sigma is floored at
/// 1e-12. Requires iterations >= 1.
Var spectral_normalize(Tape& tape, Var weight, SpectralState& state, int iterations);

struct DiscriminatorConfig {
  std::vector<std::size_t> hidden = {200, 200};
  bool spectral_norm = true;
  int power_iterations = 1;
  double leaky_slope = 0.01;
};

/// Domain discriminator D: hidden layers with leaky-ReLU, then 2 logits
/// (column 0 = source, column 1 = target).
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(std::size_t input, const DiscriminatorConfig& config, std::uint64_t seed);

  const DiscriminatorConfig& config() const { return config_; }
  void set_spectral_norm(bool enabled) { config_.spectral_norm = enabled; }

  /// Logits with spectral normalization (when enabled). `update_state` runs
  /// the configured power iterations first; otherwise the stored u, v are
  /// used as-is and the state is left untouched.
  Var logits(Tape& tape, Var rep, bool track, bool update_state);
  Var logits(Tape& tape, Var rep, bool track) const;
  /// P(source) per row: batch x 1.
  Var source_probability(Tape& tape, Var rep, bool track) const;

  /// Weights as used in the forward pass (normalized when enabled).
  Tensor effective_weight(std::size_t layer) const;
  std::size_t layer_count() const { return layers_.size(); }

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::vector<SpectralState>& spectral_states() { return spectral_; }
  const std::vector<SpectralState>& spectral_states() const { return spectral_; }
  std::vector<Linear>& layers() { return layers_; }

 private:
  DiscriminatorConfig config_;
  std::vector<Linear> layers_;
  std::vector<SpectralState> spectral_;
};

struct ReconstructorConfig {
  std::vector<std::size_t> hidden = {120, 15, 120};
  double leaky_slope = 0.01;
};

/// Reconstruction mapping M_r: leaky-ReLU hidden layers, linear output back to
/// the input width.
class Reconstructor {
 public:
  Reconstructor() = default;
  Reconstructor(std::size_t width, const ReconstructorConfig& config, std::uint64_t seed);

  Var forward(Tape& tape, Var rep, bool track) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::vector<Linear>& layers() { return layers_; }

 private:
  ReconstructorConfig config_;
  std::vector<Linear> layers_;
};

}  // namespace adda
