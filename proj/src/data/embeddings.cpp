#include "adda/data/embeddings.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>

namespace adda {

void Vocabulary::add(const std::string& token) {
  if (index_.emplace(token, tokens_.size()).second) tokens_.push_back(token);
}

Vocabulary build_vocabulary(const Corpus& corpus, const std::vector<std::string_view>& splits) {
  Vocabulary vocab;
  for (std::string_view name : splits) {
    if (!corpus.has(name)) continue;
    for (const Instance& inst : corpus.at(name)) {
      for (const auto& t : inst.arg1) vocab.add(t);
      for (const auto& t : inst.arg2) vocab.add(t);
    }
  }
  return vocab;
}

EmbeddingTable::EmbeddingTable(std::vector<std::string> tokens, Tensor matrix)
    : tokens_(std::move(tokens)), matrix_(std::move(matrix)) {
  if (matrix_.rows() != tokens_.size() + 2) {
    throw DataError("embedding table: " + std::to_string(tokens_.size()) + " tokens need " +
                    std::to_string(tokens_.size() + 2) + " rows, matrix has " +
                    std::to_string(matrix_.rows()));
  }
  for (std::size_t c = 0; c < matrix_.cols(); ++c) {
    if (matrix_(kPadRow, c) != 0.0) throw DataError("embedding table: padding row must be zero");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!rows_.emplace(tokens_[i], i + 2).second) {
      throw DataError("embedding table: duplicate token '" + tokens_[i] + "'");
    }
  }
}

std::size_t EmbeddingTable::row_of(const std::string& token) const {
  auto it = rows_.find(token);
  return it == rows_.end() ? kOovRow : it->second;
}

std::vector<std::size_t> EmbeddingTable::lookup(const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(row_of(t));
  return ids;
}

namespace {

void fill_oov_row(Tensor& matrix, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed ^ 0x5eed0f00d5eedULL);
  std::normal_distribution<double> dist(0.0, scale);
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    matrix(EmbeddingTable::kOovRow, c) = dist(rng);
  }
}

}  // namespace

EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary* vocab,
                               std::size_t expected_dim, std::uint64_t seed,
                               EmbeddingStats* stats) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  std::vector<std::string> tokens;
  std::vector<double> values;
  std::size_t dim = expected_dim;
  std::size_t file_rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = tokenize(line);
    if (fields.empty()) continue;
    ++file_rows;
    const std::string& token = fields[0];
    const std::size_t width = fields.size() - 1;
    if (dim == 0) dim = width;
    if (width != dim) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": token '" + token +
                      "' has " + std::to_string(width) + " values, expected " +
                      std::to_string(dim));
    }
    if (vocab != nullptr && !vocab->contains(token)) continue;
    tokens.push_back(token);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double v = 0.0;
      const auto& f = fields[i];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": token '" + token +
                        "' has a malformed value '" + f + "'");
      }
      values.push_back(v);
    }
  }
  if (dim == 0) throw DataError("embedding file " + path.string() + " is empty");

  Tensor matrix = Tensor::matrix(tokens.size() + 2, dim);
  std::copy(values.begin(), values.end(), matrix.data().begin() + static_cast<long>(2 * dim));
  fill_oov_row(matrix, seed, 0.5);
  EmbeddingTable table(std::move(tokens), std::move(matrix));

  if (stats != nullptr) {
    stats->file_rows = file_rows;
    stats->vocabulary = vocab != nullptr ? vocab->size() : table.known_tokens();
    stats->covered = table.known_tokens();
    stats->oov_rate = stats->vocabulary == 0
                          ? 0.0
                          : 1.0 - static_cast<double>(stats->covered) /
                                      static_cast<double>(stats->vocabulary);
  }
  return table;
}

EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed,
                                 double scale) {
  Tensor matrix = Tensor::matrix(vocab.size() + 2, dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  for (std::size_t r = 2; r < matrix.rows(); ++r) {
    for (std::size_t c = 0; c < dim; ++c) matrix(r, c) = dist(rng);
  }
  fill_oov_row(matrix, seed, scale);
  return EmbeddingTable(vocab.tokens(), std::move(matrix));
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write embedding file " + path.string());
  char buf[64];
  for (std::size_t i = 0; i < table.known_tokens(); ++i) {
    out << table.tokens()[i];
    for (std::size_t c = 0; c < table.dim(); ++c) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), table.matrix()(i + 2, c));
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
}

}  // namespace adda
