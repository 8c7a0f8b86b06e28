#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "adda/data/corpus.hpp"

namespace adda {

/// Two-domain generator for explicit-to-implicit style shift.
///
/// Every instance draws a class, then fills both arguments with content tokens:
/// each position is a class-specific token with probability `content_signal`,
/// otherwise a shared filler token. Source instances additionally carry a
/// connective marker at a random position in each argument, which belongs to
/// the instance's own class with probability `connective_strength` and to a
/// uniformly drawn class otherwise.
/// Target instances never carry markers. With `separate_argument_content`,
/// arg2 draws its class tokens from a pool disjoint from arg1's.
struct SynthConfig {
  std::size_t classes = 4;
  std::size_t content_tokens_per_class = 12;
  std::size_t shared_tokens = 60;
  std::size_t markers_per_class = 2;
  double connective_strength = 1.0;
  double content_signal = 0.45;
  bool separate_argument_content = true;
  std::size_t min_length = 4;
  std::size_t max_length = 9;

  std::size_t source_train = 2000;
  std::size_t source_dev = 500;
  std::size_t target_train = 2000;
  std::size_t target_dev = 500;
  std::size_t target_test = 500;

  /// Class proportions; empty means uniform. Normalized on use.
  std::vector<double> source_ratios;
  std::vector<double> target_ratios;

  std::uint64_t seed = 1;
};

/// Validates the config (throws DataError) and generates all five splits.
Corpus synth_generate(const SynthConfig& config);

std::string marker_token(std::size_t cls, std::size_t index);
bool is_marker_token(const std::string& token);

/// Uniform sample of `size` distinct indices into [0, population), sorted.
std::vector<std::size_t> sample_labeled_subset(std::size_t population, std::size_t size,
                                               std::uint64_t seed);

/// Labeled-subset sizes for a supervision sweep.
struct SweepPlan {
  std::vector<std::size_t> sizes;
  std::size_t repeats = 3;
  std::uint64_t seed = 1;

  /// Sizes round(f * population) for each fraction. Throws on invalid plans.
  static SweepPlan from_fractions(const std::vector<double>& fractions, std::size_t population,
                                  std::size_t repeats, std::uint64_t seed);
  void validate(std::size_t population) const;
};

/// Parses "a..b" (step 0.1) or a comma list into fractions.
std::vector<double> parse_fractions(const std::string& spec);

}  // namespace adda
