#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "adda/data/corpus.hpp"

namespace adda {

/// K x K counts, entry (gold, predicted).
class Confusion {
 public:
  Confusion() = default;
  explicit Confusion(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const { return classes_; }
  std::size_t& at(std::size_t gold, std::size_t predicted) {
    return counts_[gold * classes_ + predicted];
  }
  std::size_t at(std::size_t gold, std::size_t predicted) const {
    return counts_[gold * classes_ + predicted];
  }
  std::size_t gold_total(std::size_t gold) const;
  std::size_t predicted_total(std::size_t predicted) const;
  std::size_t total() const;

  /// Each row divided by its gold count; rows of absent classes stay zero.
  std::vector<std::vector<double>> normalized() const;

  bool operator==(const Confusion&) const = default;

 private:
  std::size_t classes_ = 0;
  std::vector<std::size_t> counts_;
};

Confusion confusion_matrix(std::span<const std::size_t> gold,
                           std::span<const std::size_t> predicted, std::size_t classes);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision from column sums, recall from row sums; 0 whenever undefined.
std::vector<ClassScores> per_class_scores(const Confusion& confusion);
std::vector<double> per_class_f1(const Confusion& confusion);
double macro_f1(std::span<const double> per_class);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sample standard deviation / sqrt(n); 0 for n == 1
};
MeanSe mean_and_standard_error(std::span<const double> values);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

struct EvalReport {
  LabelSet labels;
  Confusion confusion;
  std::vector<ClassScores> per_class;
  double macro_f1 = 0.0;
  std::size_t instances = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

EvalReport evaluate(std::span<const std::size_t> gold, std::span<const std::size_t> predicted,
                    const LabelSet& labels, std::uint64_t config_hash = 0,
                    std::uint64_t seed = 0);

}  // namespace adda
