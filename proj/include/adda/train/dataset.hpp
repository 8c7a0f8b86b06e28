#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "adda/data/corpus.hpp"
#include "adda/data/embeddings.hpp"
#include "adda/model/encoder.hpp"

namespace adda {

/// Instances mapped to embedding rows. `labels` is empty for unlabeled data.
struct Dataset {
  std::vector<TokenPair> pairs;
  std::vector<std::size_t> labels;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
  bool labeled() const { return !labels.empty(); }
  Dataset subset(std::span<const std::size_t> indices) const;
  Dataset without_labels() const;
};

/// With `keep_labels` every instance must carry a known label. Instances with
/// an empty argument are rejected with their index and id.
Dataset make_dataset(const std::vector<Instance>& instances, const EmbeddingTable& table,
                     const LabelSet& labels, bool keep_labels);

/// Shuffled index batches covering [0, n); the last batch may be short.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   std::mt19937_64& rng);
/// Batches in natural order.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size);

std::vector<const TokenPair*> gather_pairs(const Dataset& data,
                                           std::span<const std::size_t> indices);
std::vector<std::size_t> gather_labels(const Dataset& data, std::span<const std::size_t> indices);

}  // namespace adda
