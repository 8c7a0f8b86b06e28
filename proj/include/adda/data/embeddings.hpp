#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "adda/autodiff/tensor.hpp"
#include "adda/data/corpus.hpp"

namespace adda {

/// Token inventory of the training splits, in first-seen order.
class Vocabulary {
 public:
  void add(const std::string& token);
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Vocabulary over the named splits (training splits only, by convention).
Vocabulary build_vocabulary(const Corpus& corpus,
                            const std::vector<std::string_view>& splits = {
                                split::kSourceTrain, split::kTargetTrain});

/// Frozen word vectors. Row 0 is padding (all zeros), row 1 is the shared
/// out-of-vocabulary row, known tokens follow.
class EmbeddingTable {
 public:
  static constexpr std::size_t kPadRow = 0;
  static constexpr std::size_t kOovRow = 1;

  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> tokens, Tensor matrix);

  std::size_t dim() const { return matrix_.cols(); }
  std::size_t rows() const { return matrix_.rows(); }
  std::size_t known_tokens() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const Tensor& matrix() const { return matrix_; }

  std::size_t row_of(const std::string& token) const;
  bool contains(const std::string& token) const { return rows_.count(token) > 0; }
  std::vector<std::size_t> lookup(const std::vector<std::string>& tokens) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> rows_;
  Tensor matrix_;
};

struct EmbeddingStats {
  std::size_t file_rows = 0;
  std::size_t vocabulary = 0;
  std::size_t covered = 0;
  double oov_rate = 0.0;
};

/// Text format: one token per line followed by `dim` whitespace-separated
/// decimals. With a vocabulary only its tokens are kept; vocabulary tokens
/// absent from the file fall back to the OOV row. expected_dim == 0 takes the
/// width of the first row.
EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary* vocab,
                               std::size_t expected_dim = 300, std::uint64_t seed = 0,
                               EmbeddingStats* stats = nullptr);

/// Gaussian vectors (std `scale`) for every vocabulary token.
EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed,
                                 double scale = 0.5);

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

}  // namespace adda
