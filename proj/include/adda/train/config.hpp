#pragma once

#include <cstddef>
#include <cstdint>

#include <json.hpp>

#include "adda/model/encoder.hpp"
#include "adda/model/heads.hpp"

namespace adda {

struct ModelConfig {
  EncoderConfig encoder;
  DiscriminatorConfig discriminator;
  ReconstructorConfig reconstructor;
  std::size_t classes = 4;
};

struct TrainConfig {
  double lr_pretrain = 1e-4;
  double lr_adversarial = 1e-6;     // M_t in the adversarial step
  double lr_discriminator = 1e-6;   // D
  double lr_reconstruction = 1e-2;
  double lr_supervised = 1e-4;
  double epsilon = 0.1;
  std::size_t batch_size = 32;
  std::size_t pretrain_epochs = 50;
  std::size_t adapt_epochs = 30;
  std::size_t patience = 5;
  std::uint64_t seed = 1;

  bool adversarial = true;
  bool spectral_norm = true;
  bool label_smoothing = true;
  bool reconstruction = true;
  bool supervised = false;

  double adversarial_weight = 1.0;
  double reconstruction_weight = 1.0;
  double supervised_weight = 1.0;

  /// Smoothing coefficient actually used by the classification loss.
  double smoothing() const { return label_smoothing ? epsilon : 0.0; }
  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);
void to_json(nlohmann::json& j, const DiscriminatorConfig& c);
void from_json(const nlohmann::json& j, DiscriminatorConfig& c);
void to_json(nlohmann::json& j, const ReconstructorConfig& c);
void from_json(const nlohmann::json& j, ReconstructorConfig& c);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
/// Keys absent from `j` keep their current value; unknown keys throw.
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Throws std::invalid_argument naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const char* where);

/// FNV-1a of the compact JSON dump.
std::uint64_t config_hash(const nlohmann::json& resolved);

}  // namespace adda
