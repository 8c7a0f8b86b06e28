#include "adda/model/heads.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "adda/autodiff/ops.hpp"

namespace adda {
namespace {

constexpr double kSigmaFloor = 1e-12;

void normalize_in_place(Tensor& t) {
  double norm = 0.0;
  for (double v : t.data()) norm += v * v;
  norm = std::sqrt(norm);
  const double denom = std::max(norm, kSigmaFloor);
  for (double& v : t.data()) v /= denom;
}

void check_width(const char* who, Var rep, std::size_t expected) {
  if (rep.cols() != expected) {
    throw ShapeError(std::string(who) + ": representation width " + std::to_string(rep.cols()) +
                     " does not match input width " + std::to_string(expected));
  }
}

}  // namespace

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  weight = {name + ".weight", Tensor::matrix(in, out)};
  bias = {name + ".bias", Tensor::matrix(1, out)};
  for (double& v : weight.value.data()) v = dist(rng);
  for (double& v : bias.value.data()) v = dist(rng);
}

Var Linear::forward(Tape& tape, Var x, bool track) const {
  return add(matmul(x, tape.param(weight, track)), tape.param(bias, track));
}

Classifier::Classifier(std::size_t input, std::size_t classes, std::uint64_t seed) {
  if (classes < 2) throw std::invalid_argument("classifier: need at least 2 classes");
  std::mt19937_64 rng(seed);
  layer_ = Linear("classifier", input, classes, rng);
}

Var Classifier::logits(Tape& tape, Var rep, bool track) const {
  check_width("classify", rep, input_dim());
  return layer_.forward(tape, rep, track);
}

Var Classifier::probabilities(Tape& tape, Var rep, bool track) const {
  return softmax(logits(tape, rep, track));
}

Tensor smoothed_target_distribution(std::size_t label, double epsilon, std::size_t classes) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("label smoothing: epsilon " + std::to_string(epsilon) +
                                " outside [0, 1)");
  }
  if (label >= classes) {
    throw std::invalid_argument("label smoothing: label " + std::to_string(label) +
                                " out of range for " + std::to_string(classes) + " classes");
  }
  const double off = epsilon / static_cast<double>(classes);
  Tensor q = Tensor::matrix(1, classes, off);
  q[label] = 1.0 - epsilon + off;
  return q;
}

SpectralState init_spectral_state(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  SpectralState s{Tensor::matrix(in, 1), Tensor::matrix(out, 1)};
  for (double& v : s.u.data()) v = dist(rng);
  for (double& v : s.v.data()) v = dist(rng);
  normalize_in_place(s.u);
  normalize_in_place(s.v);
  return s;
}

double power_iteration(const Tensor& weight, SpectralState& state, int iterations) {
  const std::size_t in = weight.rows(), out = weight.cols();
  if (state.u.size() != in || state.v.size() != out) {
    throw ShapeError("power_iteration: state vectors do not match weight " +
                     shape_string(weight.shape()));
  }
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t j = 0; j < out; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += weight(i, j) * state.u[i];
      state.v[j] = acc;
    }
    normalize_in_place(state.v);
    for (std::size_t i = 0; i < in; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < out; ++j) acc += weight(i, j) * state.v[j];
      state.u[i] = acc;
    }
    normalize_in_place(state.u);
  }
  double sigma = 0.0;
  for (std::size_t i = 0; i < in; ++i) {
    for (std::size_t j = 0; j < out; ++j) sigma += state.u[i] * weight(i, j) * state.v[j];
  }
  return sigma;
}

Var spectral_normalize_fixed(Tape& tape, Var weight, const SpectralState& state) {
  Tensor u_row = state.u;
  u_row.reshape({1, state.u.size()});
  Var sigma = matmul(matmul(tape.constant(std::move(u_row)), weight), tape.constant(state.v));
  if (std::abs(sigma.value().item()) < kSigmaFloor) {
    sigma = tape.constant(Tensor::scalar(kSigmaFloor));
  }
  return div(weight, sigma);
}

Var spectral_normalize(Tape& tape, Var weight, SpectralState& state, int iterations) {
  if (iterations < 1) throw std::invalid_argument("spectral_normalize: iterations must be >= 1");
  power_iteration(weight.value(), state, iterations);
  return spectral_normalize_fixed(tape, weight, state);
}

Discriminator::Discriminator(std::size_t input, const DiscriminatorConfig& config,
                             std::uint64_t seed)
    : config_(config) {
  std::mt19937_64 rng(seed);
  std::size_t width = input;
  std::size_t index = 0;
  auto push = [&](std::size_t out) {
    layers_.emplace_back("discriminator.layer" + std::to_string(index++), width, out, rng);
    spectral_.push_back(init_spectral_state(width, out, rng));
    width = out;
  };
  for (std::size_t h : config.hidden) push(h);
  push(2);
}

Var Discriminator::logits(Tape& tape, Var rep, bool track, bool update_state) {
  if (update_state && config_.spectral_norm) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      power_iteration(layers_[l].weight.value, spectral_[l], config_.power_iterations);
    }
  }
  return std::as_const(*this).logits(tape, rep, track);
}

Var Discriminator::logits(Tape& tape, Var rep, bool track) const {
  check_width("discriminate", rep, layers_.front().in());
  Var x = rep;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Var w = tape.param(layers_[l].weight, track);
    if (config_.spectral_norm) w = spectral_normalize_fixed(tape, w, spectral_[l]);
    x = add(matmul(x, w), tape.param(layers_[l].bias, track));
    if (l + 1 < layers_.size()) x = leaky_relu(x, config_.leaky_slope);
  }
  return x;
}

Var Discriminator::source_probability(Tape& tape, Var rep, bool track) const {
  return slice_cols(softmax(logits(tape, rep, track)), 0, 1);
}

Tensor Discriminator::effective_weight(std::size_t layer) const {
  Tensor w = layers_.at(layer).weight.value;
  if (!config_.spectral_norm) return w;
  Tape tape;
  return spectral_normalize_fixed(tape, tape.constant(w), spectral_[layer]).value();
}

std::vector<Parameter*> Discriminator::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Parameter*> Discriminator::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

Reconstructor::Reconstructor(std::size_t width, const ReconstructorConfig& config,
                             std::uint64_t seed)
    : config_(config) {
  std::mt19937_64 rng(seed);
  std::size_t in = width;
  std::size_t index = 0;
  for (std::size_t h : config.hidden) {
    layers_.emplace_back("reconstructor.layer" + std::to_string(index++), in, h, rng);
    in = h;
  }
  layers_.emplace_back("reconstructor.layer" + std::to_string(index), in, width, rng);
}

Var Reconstructor::forward(Tape& tape, Var rep, bool track) const {
  check_width("reconstruct", rep, layers_.front().in());
  Var x = rep;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    x = layers_[l].forward(tape, x, track);
    if (l + 1 < layers_.size()) x = leaky_relu(x, config_.leaky_slope);
  }
  return x;
}

std::vector<Parameter*> Reconstructor::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Parameter*> Reconstructor::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

}  // namespace adda
