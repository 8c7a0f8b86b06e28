#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "adda/train/config.hpp"

namespace adda {

/// Every parameter bundle of the staged system.
struct Model {
  ModelConfig config;
  Encoder source;  // M_s
  Encoder target;  // M_t
  Classifier classifier;
  Discriminator discriminator;
  Reconstructor reconstructor;

  /// Fresh parameters; M_t starts as a copy of M_s.
  static Model create(const ModelConfig& config, const Tensor& embeddings, std::uint64_t seed);
};

/// FNV-1a over names, shapes and raw value bytes.
std::uint64_t hash_parameters(std::span<const Parameter* const> params);

struct ModelHashes {
  std::uint64_t source = 0;
  std::uint64_t target = 0;
  std::uint64_t classifier = 0;
  std::uint64_t discriminator = 0;
  std::uint64_t reconstructor = 0;

  bool operator==(const ModelHashes&) const = default;
};

ModelHashes hash_model(const Model& model);

/// Copies values only; shapes must already match.
void copy_values(std::span<Parameter* const> dst, std::span<const Parameter* const> src);

}  // namespace adda
