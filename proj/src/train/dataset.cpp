#include "adda/train/dataset.hpp"

#include <algorithm>
#include <numeric>

namespace adda {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  for (std::size_t i : indices) {
    out.pairs.push_back(pairs.at(i));
    if (labeled()) out.labels.push_back(labels.at(i));
  }
  return out;
}

Dataset Dataset::without_labels() const {
  Dataset out;
  out.pairs = pairs;
  return out;
}

Dataset make_dataset(const std::vector<Instance>& instances, const EmbeddingTable& table,
                     const LabelSet& labels, bool keep_labels) {
  Dataset out;
  out.pairs.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Instance& inst = instances[i];
    if (inst.arg1.empty() || inst.arg2.empty()) {
      throw DataError("instance " + std::to_string(i) + " ('" + inst.id +
                      "') has an empty argument");
    }
    out.pairs.push_back(TokenPair{table.lookup(inst.arg1), table.lookup(inst.arg2)});
    if (!keep_labels) continue;
    if (!inst.label) {
      throw DataError("instance " + std::to_string(i) + " ('" + inst.id + "') has no label");
    }
    const auto index = labels.index_of(*inst.label);
    if (!index) {
      throw DataError("instance " + std::to_string(i) + " ('" + inst.id +
                      "') has unknown label '" + *inst.label + "'");
    }
    out.labels.push_back(*index);
  }
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Explicit Fisher-Yates: std::shuffle's draw sequence is implementation-defined.
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    std::vector<std::size_t> batch(std::min(n, begin + batch_size) - begin);
    std::iota(batch.begin(), batch.end(), begin);
    out.push_back(std::move(batch));
  }
  return out;
}

std::vector<const TokenPair*> gather_pairs(const Dataset& data,
                                           std::span<const std::size_t> indices) {
  std::vector<const TokenPair*> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(&data.pairs.at(i));
  return out;
}

std::vector<std::size_t> gather_labels(const Dataset& data, std::span<const std::size_t> indices) {
  std::vector<std::size_t> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(data.labels.at(i));
  return out;
}

}  // namespace adda
