#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "adda/autodiff/optim.hpp"

namespace adda {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Named float64 arrays plus JSON metadata.
///
/// File layout (little-endian): "ADDACKPT", u32 version, u64 config hash,
/// u64 seed, u64 metadata length, metadata (compact JSON), u64 entry count,
/// then per entry: u32 name length, name, u32 rank, u64 dims[rank], f64 data.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, Tensor> tensors;

  void put(const std::string& prefix, std::span<const Parameter* const> params);
  /// Throws CheckpointError when an entry is missing or mis-shaped.
  void get(const std::string& prefix, std::span<Parameter* const> params) const;
  const Tensor& tensor(const std::string& name) const;

  void put_adam(const std::string& prefix, const Adam& adam);
  void get_adam(const std::string& prefix, Adam& adam) const;
  void put_sgd(const std::string& prefix, const Sgd& sgd);
  void get_sgd(const std::string& prefix, Sgd& sgd) const;

  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace adda
