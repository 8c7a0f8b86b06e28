#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace adda {

/// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Domain { kSource, kTarget };

std::string_view domain_name(Domain domain);
Domain parse_domain(std::string_view name);

/// An argument pair. Tokens come from whitespace-split, pre-tokenized text.
struct Instance {
  std::vector<std::string> arg1;
  std::vector<std::string> arg2;
  std::optional<std::string> label;
  Domain domain = Domain::kSource;
  std::string id;

  bool operator==(const Instance&) const = default;
};

/// Ordered label inventory; class index = position.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names);

  /// Temporal, Contingency, Comparison, Expansion.
  static LabelSet pdtb();
  /// The PDTB inventory for k == 4, otherwise class0..class{k-1}.
  static LabelSet for_classes(std::size_t k);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  std::optional<std::size_t> index_of(std::string_view name) const;

  bool operator==(const LabelSet&) const = default;

 private:
  std::vector<std::string> names_;
};

namespace split {
inline constexpr std::string_view kSourceTrain = "source-train";
inline constexpr std::string_view kSourceDev = "source-dev";
inline constexpr std::string_view kTargetTrain = "target-train";
inline constexpr std::string_view kTargetDev = "target-dev";
inline constexpr std::string_view kTargetTest = "target-test";
inline constexpr std::string_view kAll[] = {kSourceTrain, kSourceDev, kTargetTrain, kTargetDev,
                                             kTargetTest};
}  // namespace split

struct Corpus {
  LabelSet labels = LabelSet::pdtb();
  std::map<std::string, std::vector<Instance>, std::less<>> splits;

  /// Throws DataError if the split is absent.
  const std::vector<Instance>& at(std::string_view name) const;
  bool has(std::string_view name) const { return splits.find(name) != splits.end(); }

  bool operator==(const Corpus&) const = default;
};

/// Reads one split file: UTF-8, one JSON object per line with keys arg1, arg2,
/// label (optional), domain, id. Errors carry the file name and line number.
/// Warnings (e.g. an empty file) are appended to `warnings` when provided.
std::vector<Instance> load_split(const std::filesystem::path& path, const LabelSet& labels,
                                 std::vector<std::string>* warnings = nullptr);

/// Reads `<dir>/<split>.jsonl` for every split present, plus an optional
/// `labels.txt` (one label per line; PDTB inventory when absent). Instance ids
/// must be unique across the corpus.
Corpus load_corpus(const std::filesystem::path& dir,
                   std::vector<std::string>* warnings = nullptr);

void write_split(const std::filesystem::path& path, const std::vector<Instance>& instances);
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus);

std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(const std::vector<std::string>& tokens);

/// Four-way counts of the PDTB 2.0 splits (Temporal, Contingency, Comparison,
/// Expansion), kept as documentation and test fixtures.
struct PdtbSplitCounts {
  std::string_view split;
  std::size_t counts[4];
};
inline constexpr PdtbSplitCounts kPdtbCounts[] = {
    {"explicit-train", {2904, 2792, 4674, 5342}},
    {"explicit-dev", {288, 181, 366, 450}},
    {"implicit-train", {704, 3622, 2104, 7394}},
    {"implicit-dev", {68, 276, 146, 556}},
    {"implicit-test", {54, 287, 191, 651}},
};

}  // namespace adda
