#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "adda/experiment/experiment.hpp"

namespace adda {

void to_json(nlohmann::json& j, const SynthConfig& c);
/// Keys absent from `j` keep their current value; unknown keys throw.
void from_json(const nlohmann::json& j, SynthConfig& c);

/// Everything a CLI run depends on besides its flags.
struct RunConfig {
  DeskPreset preset = desk_preset();
  std::string corpus;      // directory of split files; empty synthesizes from preset.synth
  std::string embeddings;  // word-vector file; empty draws random vectors
  std::uint64_t embedding_seed = 1;
  std::string fractions = "0.1..1.0";
  std::size_t repeats = 3;
  std::uint64_t sweep_seed = 1;
  std::size_t sweep_adapt_epochs = 10;  // replaces train.adapt_epochs inside a sweep
};

/// Sections: data, synth, model, train, dann, sweep.
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// Reads a JSON config file over the defaults. Throws std::invalid_argument
/// for malformed JSON or unknown keys.
RunConfig load_run_config(const std::string& path);

/// Loads (or synthesizes) the corpus and its embedding table.
PreparedData load_run_data(const RunConfig& config);

}  // namespace adda
