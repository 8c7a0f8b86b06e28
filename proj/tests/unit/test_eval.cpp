#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adda/eval/metrics.hpp"
#include "adda/eval/report.hpp"
#include "doctest.h"

using namespace adda;

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == sep) {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] != '#') rows.push_back(split(line, ','));
  }
  return rows;
}

std::size_t count_of(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = haystack.find(needle); at != std::string::npos;
       at = haystack.find(needle, at + 1)) {
    ++n;
  }
  return n;
}

EvalReport random_report(std::uint64_t seed, std::size_t n = 50) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  std::vector<std::size_t> gold(n), pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    gold[i] = pick(rng);
    pred[i] = pick(rng) == 0 ? pick(rng) : gold[i];
  }
  return evaluate(gold, pred, LabelSet::pdtb(), 77, seed);
}

}  // namespace

TEST_CASE("macro F1 reproduces reference aggregates") {
  struct Row {
    double f1[4];
    double macro;
  };
  const Row rows[] = {
      {{31.25, 48.04, 25.15, 59.15}, 40.90},
      {{26.19, 34.20, 25.74, 54.70}, 35.21},
      {{19.26, 41.39, 25.74, 68.08}, 38.62},
      {{22.22, 22.35, 23.06, 57.86}, 31.37},
      {{25.53, 41.02, 30.35, 65.38}, 40.57},
  };
  for (const Row& r : rows) {
    CHECK(std::abs(macro_f1(r.f1) - r.macro) <= 0.005);
  }
}

TEST_CASE("macro F1 is the plain mean and ignores order") {
  std::vector<double> v = {0.1, 0.7, 0.4, 0.9};
  const double m = macro_f1(v);
  CHECK(m == doctest::Approx(0.525).epsilon(1e-15));
  std::sort(v.begin(), v.end());
  do {
    CHECK(std::abs(macro_f1(v) - m) < 1e-15);
  } while (std::next_permutation(v.begin(), v.end()));
  CHECK_THROWS_AS(macro_f1(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("confusion matrix matches pair counting") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  std::vector<std::size_t> gold(50), pred(50);
  for (auto& g : gold) g = pick(rng);
  for (auto& p : pred) p = pick(rng);
  const Confusion c = confusion_matrix(gold, pred, 4);
  for (std::size_t g = 0; g < 4; ++g) {
    for (std::size_t p = 0; p < 4; ++p) {
      std::size_t n = 0;
      for (std::size_t i = 0; i < 50; ++i) n += gold[i] == g && pred[i] == p;
      CHECK(c.at(g, p) == n);
    }
  }
  CHECK(c.total() == 50);
  const auto rates = c.normalized();
  for (std::size_t g = 0; g < 4; ++g) {
    if (c.gold_total(g) == 0) continue;
    CHECK(std::abs(std::accumulate(rates[g].begin(), rates[g].end(), 0.0) - 1.0) < 1e-12);
  }
}

TEST_CASE("confusion matrix edge cases") {
  const std::vector<std::size_t> gold = {0, 1, 2, 3, 1};
  const Confusion perfect = confusion_matrix(gold, gold, 4);
  const auto rates = perfect.normalized();
  for (std::size_t g = 0; g < 4; ++g) {
    for (std::size_t p = 0; p < 4; ++p) CHECK(rates[g][p] == (g == p ? 1.0 : 0.0));
  }
  for (double f : per_class_f1(perfect)) CHECK(f == 1.0);

  const std::vector<std::size_t> all_two(5, 2);
  const Confusion one_col = confusion_matrix(gold, all_two, 4);
  for (std::size_t g = 0; g < 4; ++g) {
    for (std::size_t p = 0; p < 4; ++p) {
      if (p != 2) CHECK(one_col.at(g, p) == 0);
    }
  }
  const std::vector<std::size_t> bad = {0, 1, 2, 4, 1};
  CHECK_THROWS_AS(confusion_matrix(gold, bad, 4), std::invalid_argument);
  CHECK_THROWS_AS(confusion_matrix(gold, std::vector<std::size_t>{0}, 4), std::invalid_argument);

  const std::vector<std::size_t> no_three = {0, 1, 2, 0};
  const auto f1 = per_class_f1(confusion_matrix(no_three, no_three, 4));
  CHECK(f1[3] == 0.0);
  const auto rows = confusion_matrix(no_three, no_three, 4).normalized();
  CHECK(std::accumulate(rows[3].begin(), rows[3].end(), 0.0) == 0.0);
}

TEST_CASE("per-class F1 from hand counts") {
  // Class 0: TP 3, FP 1, FN 2.
  const std::vector<std::size_t> gold = {0, 0, 0, 0, 0, 1};
  const std::vector<std::size_t> pred = {0, 0, 0, 1, 1, 0};
  const auto scores = per_class_scores(confusion_matrix(gold, pred, 2));
  CHECK(scores[0].precision == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(scores[0].recall == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(scores[0].f1 == doctest::Approx(2 * 0.75 * 0.6 / 1.35).epsilon(1e-15));
}

TEST_CASE("F1 is bounded and invariant to scaling the counts") {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const EvalReport r = random_report(seed);
    Confusion scaled(4);
    for (std::size_t g = 0; g < 4; ++g) {
      for (std::size_t p = 0; p < 4; ++p) scaled.at(g, p) = 7 * r.confusion.at(g, p);
    }
    const auto a = per_class_f1(r.confusion), b = per_class_f1(scaled);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(a[k] >= 0.0);
      CHECK(a[k] <= 1.0);
      CHECK(std::abs(a[k] - b[k]) < 1e-15);
    }
    CHECK(r.macro_f1 == doctest::Approx(macro_f1(a)).epsilon(1e-15));
  }
}

TEST_CASE("mean and standard error") {
  const std::vector<double> v = {40, 41, 42};
  const MeanSe m = mean_and_standard_error(v);
  CHECK(m.mean == doctest::Approx(41.0).epsilon(1e-15));
  CHECK(m.se == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(mean_and_standard_error(std::vector<double>{5.0}).se == 0.0);
}

TEST_CASE("Spearman correlation with ties") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  CHECK(spearman(x, std::vector<double>{2, 4, 6, 8, 100}) == doctest::Approx(1.0));
  CHECK(spearman(x, std::vector<double>{5, 4, 3, 2, 1}) == doctest::Approx(-1.0));
  // Average ranks of y: 1, 2.5, 2.5, 4, 5 against 1..5.
  const double rx[] = {1, 2, 3, 4, 5}, ry[] = {1, 2.5, 2.5, 4, 5};
  double mx = 3, my = 3, sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 5; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  CHECK(spearman(x, std::vector<double>{1, 3, 3, 7, 9}) ==
        doctest::Approx(sxy / std::sqrt(sxx * syy)).epsilon(1e-12));
}

TEST_CASE("score and confusion CSV re-parse to the same numbers") {
  const EvalReport r = random_report(30);
  const auto rows = parse_csv(scores_csv(r));
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == std::vector<std::string>{"class", "precision", "recall", "f1"});
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(rows[k + 1][0] == r.labels.name(k));
    CHECK(std::stod(rows[k + 1][1]) == r.per_class[k].precision);
    CHECK(std::stod(rows[k + 1][2]) == r.per_class[k].recall);
    CHECK(std::stod(rows[k + 1][3]) == r.per_class[k].f1);
  }
  CHECK(rows[5][0] == "macro");
  CHECK(std::stod(rows[5][3]) == r.macro_f1);
  CHECK(scores_csv(r).find("config_hash=77") != std::string::npos);

  const auto counts = parse_csv(confusion_csv(r, false));
  const auto rates = parse_csv(confusion_csv(r, true));
  const auto norm = r.confusion.normalized();
  for (std::size_t g = 0; g < 4; ++g) {
    for (std::size_t p = 0; p < 4; ++p) {
      CHECK(std::stoul(counts[g + 1][p + 1]) == r.confusion.at(g, p));
      CHECK(std::stod(rates[g + 1][p + 1]) == norm[g][p]);
    }
  }
}

TEST_CASE("summary table lists every system with percentages") {
  const EvalReport a = random_report(40), b = random_report(41);
  const std::string text = summary_table({{"no-adaptation", a}, {"full", b}});
  CHECK(text.find("Temporal") != std::string::npos);
  CHECK(text.find("no-adaptation") != std::string::npos);
  char macro[16];
  std::snprintf(macro, sizeof macro, "%.2f", 100 * b.macro_f1);
  CHECK(text.find(macro) != std::string::npos);
}

TEST_CASE("sweep chart has one series per system with error bars") {
  std::vector<Series> series;
  for (const char* name : {"supervised-baseline", "pretraining-baseline", "full-system"}) {
    Series s{name, {200, 400, 600}, {}};
    for (double x : s.x) s.y.push_back({x / 1000.0, 0.01});
    series.push_back(s);
  }
  const std::string svg = series_svg(series, "macro F1 vs labeled subset size", "size", "F1");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(count_of(svg, "class=\"series\"") == 3);
  CHECK(count_of(svg, "<polyline") == 3);
  CHECK(count_of(svg, "<circle") == 9);
  CHECK(svg.find("data-name=\"full-system\"") != std::string::npos);

  const auto rows = parse_csv(series_csv(series, "size"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].size() == 7);
  CHECK(std::stod(rows[2][0]) == 400);
  CHECK(std::stod(rows[2][5]) == 0.4);
  CHECK(std::stod(rows[2][6]) == 0.01);
}

TEST_CASE("unwritable report paths are surfaced") {
  CHECK_THROWS_AS(write_text("/proc/adda-nonexistent/x.csv", "x"), std::runtime_error);
}
