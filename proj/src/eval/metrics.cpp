#include "adda/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace adda {

std::size_t Confusion::gold_total(std::size_t gold) const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < classes_; ++p) n += at(gold, p);
  return n;
}

std::size_t Confusion::predicted_total(std::size_t predicted) const {
  std::size_t n = 0;
  for (std::size_t g = 0; g < classes_; ++g) n += at(g, predicted);
  return n;
}

std::size_t Confusion::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::vector<std::vector<double>> Confusion::normalized() const {
  std::vector<std::vector<double>> out(classes_, std::vector<double>(classes_, 0.0));
  for (std::size_t g = 0; g < classes_; ++g) {
    const std::size_t row = gold_total(g);
    if (row == 0) continue;
    for (std::size_t p = 0; p < classes_; ++p) {
      out[g][p] = static_cast<double>(at(g, p)) / static_cast<double>(row);
    }
  }
  return out;
}

Confusion confusion_matrix(std::span<const std::size_t> gold,
                           std::span<const std::size_t> predicted, std::size_t classes) {
  if (gold.size() != predicted.size()) {
    throw std::invalid_argument("confusion_matrix: " + std::to_string(gold.size()) +
                                " gold labels vs " + std::to_string(predicted.size()) +
                                " predictions");
  }
  Confusion c(classes);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] >= classes || predicted[i] >= classes) {
      throw std::invalid_argument("confusion_matrix: label index out of range at position " +
                                  std::to_string(i));
    }
    ++c.at(gold[i], predicted[i]);
  }
  return c;
}

std::vector<ClassScores> per_class_scores(const Confusion& confusion) {
  std::vector<ClassScores> out(confusion.classes());
  for (std::size_t k = 0; k < confusion.classes(); ++k) {
    const double tp = static_cast<double>(confusion.at(k, k));
    const std::size_t predicted = confusion.predicted_total(k);
    const std::size_t gold = confusion.gold_total(k);
    ClassScores& s = out[k];
    s.precision = predicted > 0 ? tp / static_cast<double>(predicted) : 0.0;
    s.recall = gold > 0 ? tp / static_cast<double>(gold) : 0.0;
    const double denom = s.precision + s.recall;
    s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  }
  return out;
}

std::vector<double> per_class_f1(const Confusion& confusion) {
  std::vector<double> out;
  for (const ClassScores& s : per_class_scores(confusion)) out.push_back(s.f1);
  return out;
}

double macro_f1(std::span<const double> per_class) {
  if (per_class.empty()) throw std::invalid_argument("macro_f1: no classes");
  return std::accumulate(per_class.begin(), per_class.end(), 0.0) /
         static_cast<double>(per_class.size());
}

MeanSe mean_and_standard_error(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_and_standard_error: no values");
  const double n = static_cast<double>(values.size());
  MeanSe out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return out;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("spearman: need two equal-length series of at least 2 values");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

EvalReport evaluate(std::span<const std::size_t> gold, std::span<const std::size_t> predicted,
                    const LabelSet& labels, std::uint64_t config_hash, std::uint64_t seed) {
  EvalReport r;
  r.labels = labels;
  r.confusion = confusion_matrix(gold, predicted, labels.size());
  r.per_class = per_class_scores(r.confusion);
  const auto f1 = per_class_f1(r.confusion);
  r.macro_f1 = macro_f1(f1);
  r.instances = gold.size();
  r.config_hash = config_hash;
  r.seed = seed;
  return r;
}

}  // namespace adda
