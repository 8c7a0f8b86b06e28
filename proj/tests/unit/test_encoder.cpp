#include <cmath>
#include <random>
#include <vector>

#include "adda/autodiff/gradcheck.hpp"
#include "adda/autodiff/ops.hpp"
#include "adda/model/encoder.hpp"
#include "doctest.h"

using namespace adda;

namespace {

using Vec = std::vector<double>;

Tensor random_table(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 0.5);
  Tensor t = Tensor::matrix(rows, dim);
  for (std::size_t r = 2; r < rows; ++r) {
    for (std::size_t c = 0; c < dim; ++c) t(r, c) = dist(rng);
  }
  return t;
}

EncoderConfig tiny_config() {
  EncoderConfig c;
  c.hidden = 3;
  c.projection = 4;
  c.attention = 5;
  return c;
}

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// x (1 x in) times W (in x out), read straight from the tensor.
Vec affine(const Vec& x, const Tensor& w, const Tensor* bias) {
  Vec out(w.cols(), 0.0);
  for (std::size_t j = 0; j < w.cols(); ++j) {
    double acc = bias != nullptr ? (*bias)(0, j) : 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * w(i, j);
    out[j] = acc;
  }
  return out;
}

// One LSTM direction, unrolled step by step in scalar code.
std::vector<Vec> lstm_ref(const LstmParams& p, const std::vector<Vec>& inputs, bool reverse) {
  const std::size_t h = p.hidden_weight.value.rows();
  Vec state(h, 0.0), cell(h, 0.0);
  std::vector<Vec> out(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const std::size_t t = reverse ? inputs.size() - 1 - k : k;
    const Vec a = affine(inputs[t], p.input_weight.value, &p.bias.value);
    const Vec b = affine(state, p.hidden_weight.value, nullptr);
    for (std::size_t j = 0; j < h; ++j) {
      const double i = sigmoid_ref(a[j] + b[j]);
      const double f = sigmoid_ref(a[h + j] + b[h + j]);
      const double g = std::tanh(a[2 * h + j] + b[2 * h + j]);
      const double o = sigmoid_ref(a[3 * h + j] + b[3 * h + j]);
      cell[j] = f * cell[j] + i * g;
      state[j] = o * std::tanh(cell[j]);
    }
    out[t] = state;
  }
  return out;
}

struct ArgRef {
  Vec arg;
  Vec alpha;
};

ArgRef encode_ref(Encoder& enc, const std::vector<std::size_t>& ids) {
  const Tensor& table = enc.embedding().value;
  const std::size_t steps = std::min(ids.size(), enc.config().max_length);
  std::vector<Vec> inputs;
  for (std::size_t t = 0; t < steps; ++t) {
    Vec row(table.cols());
    for (std::size_t c = 0; c < table.cols(); ++c) row[c] = table(ids[t], c);
    inputs.push_back(row);
  }
  const auto fw = lstm_ref(enc.forward_lstm(), inputs, false);
  const auto bw = lstm_ref(enc.backward_lstm(), inputs, true);
  std::vector<Vec> z;
  Vec scores;
  for (std::size_t t = 0; t < steps; ++t) {
    Vec h = fw[t];
    h.insert(h.end(), bw[t].begin(), bw[t].end());
    z.push_back(affine(h, enc.projection_weight().value, &enc.projection_bias().value));
    Vec u = affine(h, enc.attention_weight().value, &enc.attention_bias().value);
    double s = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      s += std::tanh(u[j]) * enc.context_vector().value(j, 0);
    }
    scores.push_back(s);
  }
  double peak = scores[0];
  for (double s : scores) peak = std::max(peak, s);
  double total = 0.0;
  Vec alpha;
  for (double s : scores) {
    alpha.push_back(std::exp(s - peak));
    total += alpha.back();
  }
  for (double& a : alpha) a /= total;
  Vec arg(z[0].size(), 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t j = 0; j < arg.size(); ++j) arg[j] += alpha[t] * z[t][j];
  }
  return {arg, alpha};
}

Tensor encode_one(const Encoder& enc, const std::vector<std::size_t>& ids) {
  Tape tape;
  const std::vector<std::size_t>* seqs[] = {&ids};
  return enc.encode_arguments(tape, seqs, false).value();
}

std::vector<std::size_t> random_ids(std::mt19937_64& rng, std::size_t len, std::size_t rows) {
  std::uniform_int_distribution<std::size_t> pick(1, rows - 1);
  std::vector<std::size_t> ids(len);
  for (auto& id : ids) id = pick(rng);
  return ids;
}

}  // namespace

TEST_CASE("encoder matches a hand-unrolled BiLSTM with inner attention") {
  Encoder enc(tiny_config(), random_table(12, 6, 1), 2);
  std::mt19937_64 rng(3);
  for (std::size_t len : {1u, 2u, 5u, 9u}) {
    const auto ids = random_ids(rng, len, 12);
    const ArgRef ref = encode_ref(enc, ids);
    const Tensor got = encode_one(enc, ids);
    REQUIRE(got.cols() == ref.arg.size());
    for (std::size_t j = 0; j < ref.arg.size(); ++j) {
      CHECK(std::abs(got(0, j) - ref.arg[j]) < 1e-12);
    }
  }
}

TEST_CASE("attention weights match the oracle and vanish on padding") {
  Encoder enc(tiny_config(), random_table(12, 6, 4), 5);
  const std::vector<std::size_t> longer = {3, 4, 5, 6, 7}, shorter = {8, 9};
  const std::vector<std::size_t>* seqs[] = {&longer, &shorter};
  Tape tape;
  const SequenceBatch batch = make_sequence_batch(seqs, 80);
  const AttentionOutput out = enc.attend(tape, enc.bilstm(tape, batch, false), false);
  const auto ref_long = encode_ref(enc, longer);
  const auto ref_short = encode_ref(enc, shorter);
  const Tensor& w = out.weights.value();
  for (std::size_t t = 0; t < 5; ++t) CHECK(std::abs(w(0, t) - ref_long.alpha[t]) < 1e-12);
  for (std::size_t t = 0; t < 2; ++t) CHECK(std::abs(w(1, t) - ref_short.alpha[t]) < 1e-12);
  for (std::size_t t = 2; t < 5; ++t) CHECK(out.weights.value()(1, t) == 0.0);
}

TEST_CASE("batched encoding equals encoding each sequence alone") {
  Encoder enc(tiny_config(), random_table(20, 6, 6), 7);
  std::mt19937_64 rng(8);
  std::vector<std::vector<std::size_t>> seqs;
  for (std::size_t len : {4u, 1u, 7u, 3u}) seqs.push_back(random_ids(rng, len, 20));
  std::vector<const std::vector<std::size_t>*> ptrs;
  for (const auto& s : seqs) ptrs.push_back(&s);
  Tape tape;
  const Tensor batched = enc.encode_arguments(tape, ptrs, false).value();
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    const Tensor alone = encode_one(enc, seqs[b]);
    for (std::size_t j = 0; j < alone.cols(); ++j) {
      CHECK(std::abs(batched(b, j) - alone(0, j)) < 1e-12);
    }
  }
}

TEST_CASE("single-token argument puts all attention on that token") {
  Encoder enc(tiny_config(), random_table(6, 6, 9), 10);
  const std::vector<std::size_t> one = {3};
  const std::vector<std::size_t>* seqs[] = {&one};
  Tape tape;
  const auto out = enc.attend(tape, enc.bilstm(tape, make_sequence_batch(seqs, 80), false), false);
  CHECK(out.weights.value()(0, 0) == 1.0);
}

TEST_CASE("zero context vector gives uniform attention") {
  Encoder enc(tiny_config(), random_table(12, 6, 11), 12);
  enc.context_vector().value.fill(0.0);
  const std::vector<std::size_t> ids = {2, 5, 7, 9, 11, 3};
  const std::vector<std::size_t>* seqs[] = {&ids};
  Tape tape;
  const auto out = enc.attend(tape, enc.bilstm(tape, make_sequence_batch(seqs, 80), false), false);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    CHECK(out.weights.value()(0, t) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  }
}

TEST_CASE("arguments longer than the cap encode as their prefix") {
  Encoder enc(tiny_config(), random_table(30, 6, 13), 14);
  std::mt19937_64 rng(15);
  const auto ids = random_ids(rng, 95, 30);
  const std::vector<std::size_t> prefix(ids.begin(), ids.begin() + 80);
  const Tensor a = encode_one(enc, ids), b = encode_one(enc, prefix);
  for (std::size_t j = 0; j < a.cols(); ++j) CHECK(a(0, j) == b(0, j));
  const auto ids81 = random_ids(rng, 81, 30);
  const std::vector<std::size_t>* seqs[] = {&ids81};
  CHECK(make_sequence_batch(seqs, 80).steps == 80);
}

TEST_CASE("swapping arguments swaps the halves; identical arguments give identical halves") {
  Encoder enc(tiny_config(), random_table(15, 6, 16), 17);
  const TokenPair p{{2, 3, 4}, {5, 6}};
  const TokenPair swapped{p.arg2, p.arg1};
  const TokenPair same{{7, 8, 9}, {7, 8, 9}};
  const TokenPair* pairs[] = {&p, &swapped, &same};
  Tape tape;
  const Tensor out = enc.encode(tape, pairs, false).value();
  const std::size_t w = enc.config().projection;
  CHECK(out.cols() == 2 * w);
  for (std::size_t j = 0; j < w; ++j) {
    CHECK(out(0, j) == out(1, w + j));
    CHECK(out(0, w + j) == out(1, j));
    CHECK(out(2, j) == out(2, w + j));
  }
}

TEST_CASE("an argument encodes the same in any pair") {
  Encoder enc(tiny_config(), random_table(15, 6, 18), 19);
  const TokenPair a{{2, 3, 4}, {5}}, b{{2, 3, 4}, {9, 10, 11, 12}};
  const TokenPair* pairs[] = {&a, &b};
  Tape tape;
  const Tensor out = enc.encode(tape, pairs, false).value();
  for (std::size_t j = 0; j < enc.config().projection; ++j) CHECK(out(0, j) == out(1, j));
}

TEST_CASE("default dimensions give a 200-entry pair representation") {
  Encoder enc(EncoderConfig{}, random_table(8, 300, 20), 21);
  CHECK(enc.output_dim() == 200);
  const TokenPair p{{2, 3}, {4, 5, 6}};
  const TokenPair* pairs[] = {&p};
  Tape tape;
  CHECK(enc.encode(tape, pairs, false).value().cols() == 200);
}

TEST_CASE("empty arguments are rejected") {
  Encoder enc(tiny_config(), random_table(6, 6, 22), 23);
  const std::vector<std::size_t> empty;
  const std::vector<std::size_t>* seqs[] = {&empty};
  CHECK_THROWS_AS(make_sequence_batch(seqs, 80), std::invalid_argument);
}

TEST_CASE("encoder gradients match central differences") {
  Encoder enc(tiny_config(), random_table(10, 4, 24), 25);
  const TokenPair p{{2, 3, 4}, {5, 6}}, q{{7}, {8, 9, 2, 3}};
  const TokenPair* pairs[] = {&p, &q};
  std::mt19937_64 rng(26);
  std::normal_distribution<double> dist;
  Tensor weights = Tensor::matrix(2, 2 * enc.config().projection);
  for (double& v : weights.data()) v = dist(rng);
  auto params = enc.parameters();
  params.erase(params.begin());  // frozen embedding table
  const auto result = check_gradients("encoder", params, [&](Tape& tape) {
    return sum(mul(enc.encode(tape, pairs, true), tape.constant(weights)));
  });
  CHECK(result.max_relative_error < 1e-6);
}
