#include "adda/model/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "adda/autodiff/ops.hpp"

namespace adda {
namespace {

Tensor uniform_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

LstmParams make_lstm(const std::string& prefix, std::size_t input, std::size_t hidden,
                     std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  LstmParams p;
  p.input_weight = {prefix + ".input_weight", uniform_matrix(rng, input, 4 * hidden, bound)};
  p.hidden_weight = {prefix + ".hidden_weight", uniform_matrix(rng, hidden, 4 * hidden, bound)};
  p.bias = {prefix + ".bias", uniform_matrix(rng, 1, 4 * hidden, bound)};
  for (std::size_t c = hidden; c < 2 * hidden; ++c) p.bias.value(0, c) = 1.0;
  return p;
}

}  // namespace

SequenceBatch make_sequence_batch(std::span<const std::vector<std::size_t>* const> sequences,
                                  std::size_t max_length) {
  if (sequences.empty()) throw std::invalid_argument("sequence batch: no sequences");
  SequenceBatch out;
  out.batch = sequences.size();
  for (std::size_t b = 0; b < sequences.size(); ++b) {
    if (sequences[b]->empty()) {
      throw std::invalid_argument("sequence batch: sequence " + std::to_string(b) + " is empty");
    }
    out.lengths.push_back(std::min(sequences[b]->size(), max_length));
  }
  out.steps = *std::max_element(out.lengths.begin(), out.lengths.end());
  out.ids.assign(out.steps * out.batch, 0);
  out.mask = Tensor::matrix(out.batch, out.steps);
  for (std::size_t b = 0; b < out.batch; ++b) {
    for (std::size_t t = 0; t < out.lengths[b]; ++t) {
      out.ids[t * out.batch + b] = (*sequences[b])[t];
      out.mask(b, t) = 1.0;
    }
  }
  return out;
}

Encoder::Encoder(const EncoderConfig& config, Tensor embeddings, std::uint64_t seed)
    : config_(config) {
  if (config.hidden == 0 || config.projection == 0 || config.attention == 0 ||
      config.max_length == 0) {
    throw std::invalid_argument("encoder: all dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  const std::size_t input = embeddings.cols();
  const std::size_t both = 2 * config.hidden;
  embedding_ = {"embedding", std::move(embeddings), !config.train_embeddings};
  forward_ = make_lstm("lstm_forward", input, config.hidden, rng);
  backward_ = make_lstm("lstm_backward", input, config.hidden, rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(both));
  proj_weight_ = {"attention.W_c", uniform_matrix(rng, both, config.projection, bound)};
  proj_bias_ = {"attention.b_c", uniform_matrix(rng, 1, config.projection, bound)};
  att_weight_ = {"attention.W_w", uniform_matrix(rng, both, config.attention, bound)};
  att_bias_ = {"attention.b_w", uniform_matrix(rng, 1, config.attention, bound)};
  context_ = {"attention.u_w",
              uniform_matrix(rng, config.attention, 1,
                             1.0 / std::sqrt(static_cast<double>(config.attention)))};
}

std::vector<Var> Encoder::run_direction(Tape& tape, const LstmParams& lstm, Var inputs,
                                        const SequenceBatch& batch, bool reverse,
                                        bool track) const {
  const std::size_t h = config_.hidden;
  const std::size_t n = batch.batch;
  Var hidden_weight = tape.param(lstm.hidden_weight, track);
  Var projected = add(matmul(inputs, tape.param(lstm.input_weight, track)),
                      tape.param(lstm.bias, track));
  Var state = tape.constant(Tensor::matrix(n, h));
  Var cell = tape.constant(Tensor::matrix(n, h));
  std::vector<Var> out(batch.steps);
  for (std::size_t k = 0; k < batch.steps; ++k) {
    const std::size_t t = reverse ? batch.steps - 1 - k : k;
    Var gates = add(slice_rows(projected, t * n, n), matmul(state, hidden_weight));
    Var in_gate = sigmoid(slice_cols(gates, 0, h));
    Var forget_gate = sigmoid(slice_cols(gates, h, h));
    Var candidate = tanh(slice_cols(gates, 2 * h, h));
    Var out_gate = sigmoid(slice_cols(gates, 3 * h, h));
    cell = add(mul(forget_gate, cell), mul(in_gate, candidate));
    state = mul(out_gate, tanh(cell));
    bool padded = false;
    for (std::size_t b = 0; b < n && !padded; ++b) padded = batch.mask(b, t) == 0.0;
    if (padded) {
      // Padded steps carry a zero state, so the reverse pass of a short
      // sequence starts fresh at its last real token.
      Tensor column = Tensor::matrix(n, 1);
      for (std::size_t b = 0; b < n; ++b) column(b, 0) = batch.mask(b, t);
      Var keep = tape.constant(std::move(column));
      cell = mul(cell, keep);
      state = mul(state, keep);
    }
    out[t] = state;
  }
  return out;
}

HiddenStates Encoder::bilstm(Tape& tape, const SequenceBatch& batch, bool track) const {
  Var inputs = gather_rows(tape.param(embedding_, track), batch.ids);
  const auto fw = run_direction(tape, forward_, inputs, batch, false, track);
  const auto bw = run_direction(tape, backward_, inputs, batch, true, track);
  std::vector<Var> per_step;
  per_step.reserve(batch.steps);
  for (std::size_t t = 0; t < batch.steps; ++t) {
    const Var both[] = {fw[t], bw[t]};
    per_step.push_back(concat_cols(both));
  }
  return HiddenStates{concat_rows(per_step), batch.batch, batch.steps, batch.mask};
}

AttentionOutput Encoder::attend(Tape& tape, const HiddenStates& hidden, bool track) const {
  const std::size_t n = hidden.batch;
  const std::size_t steps = hidden.steps;
  const std::size_t width = config_.projection;
  Var z = add(matmul(hidden.states, tape.param(proj_weight_, track)),
              tape.param(proj_bias_, track));
  Var u = tanh(add(matmul(hidden.states, tape.param(att_weight_, track)),
                   tape.param(att_bias_, track)));
  Var scores = transpose(reshape(matmul(u, tape.param(context_, track)), steps, n));
  Var weights = masked_softmax(scores, hidden.mask);
  Var per_row = reshape(transpose(weights), steps * n, 1);
  Var weighted = reshape(mul(z, per_row), steps, n * width);
  Var arg = reshape(sum_rows(weighted), n, width);
  return AttentionOutput{arg, weights};
}

Var Encoder::encode_arguments(Tape& tape,
                              std::span<const std::vector<std::size_t>* const> sequences,
                              bool track) const {
  const SequenceBatch batch = make_sequence_batch(sequences, config_.max_length);
  return attend(tape, bilstm(tape, batch, track), track).arg;
}

Var Encoder::encode(Tape& tape, std::span<const TokenPair* const> pairs, bool track) const {
  std::vector<const std::vector<std::size_t>*> first, second;
  first.reserve(pairs.size());
  second.reserve(pairs.size());
  for (const TokenPair* p : pairs) {
    first.push_back(&p->arg1);
    second.push_back(&p->arg2);
  }
  const Var halves[] = {encode_arguments(tape, first, track),
                        encode_arguments(tape, second, track)};
  return concat_cols(halves);
}

std::vector<Parameter*> Encoder::parameters() {
  return {&embedding_,           &forward_.input_weight,  &forward_.hidden_weight,
          &forward_.bias,        &backward_.input_weight, &backward_.hidden_weight,
          &backward_.bias,       &proj_weight_,           &proj_bias_,
          &att_weight_,          &att_bias_,              &context_};
}

std::vector<const Parameter*> Encoder::parameters() const {
  auto mutable_params = const_cast<Encoder*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

}  // namespace adda
