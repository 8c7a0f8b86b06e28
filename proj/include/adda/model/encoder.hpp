#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "adda/autodiff/tape.hpp"

namespace adda {

struct EncoderConfig {
  std::size_t hidden = 50;       // per LSTM direction
  std::size_t projection = 100;  // width of z_i and of each argument vector
  std::size_t attention = 100;   // width of u_i and u_w
  std::size_t max_length = 80;   // longer arguments are truncated to this prefix
  bool train_embeddings = false;
};

/// Token ids (embedding rows) of one argument pair.
struct TokenPair {
  std::vector<std::size_t> arg1;
  std::vector<std::size_t> arg2;
};

struct LstmParams {
  Parameter input_weight;   // E x 4H, gate blocks ordered i, f, g, o
  Parameter hidden_weight;  // H x 4H
  Parameter bias;           // 1 x 4H
};

/// Right-padded, time-major batch of variable-length sequences.
struct SequenceBatch {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::vector<std::size_t> ids;      // steps * batch, row t * batch + b
  std::vector<std::size_t> lengths;  // after truncation
  Tensor mask;                       // batch x steps, 1 for real tokens
};

/// Builds a padded batch. Empty sequences are rejected; longer ones are cut
/// to max_length.
SequenceBatch make_sequence_batch(std::span<const std::vector<std::size_t>* const> sequences,
                                  std::size_t max_length);

/// BiLSTM outputs of a batch: h_i = [forward_i, backward_i] stacked time-major.
struct HiddenStates {
  Var states;  // (steps * batch) x 2H
  std::size_t batch = 0;
  std::size_t steps = 0;
  Tensor mask;
};

/// Inner-attention pooling result for a batch of arguments.
struct AttentionOutput {
  Var arg;      // batch x projection
  Var weights;  // batch x steps, zero at padded positions
};

/// Shared inner-attention BiLSTM that encodes both arguments of a pair and
/// concatenates them. Copyable: a target encoder starts as a copy of the
/// source encoder.
class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& config, Tensor embeddings, std::uint64_t seed);

  const EncoderConfig& config() const { return config_; }
  std::size_t embedding_dim() const { return embedding_.value.cols(); }
  std::size_t output_dim() const { return 2 * config_.projection; }

  HiddenStates bilstm(Tape& tape, const SequenceBatch& batch, bool track) const;
  AttentionOutput attend(Tape& tape, const HiddenStates& hidden, bool track) const;
  /// Argument vectors for a batch of single sequences: batch x projection.
  Var encode_arguments(Tape& tape, std::span<const std::vector<std::size_t>* const> sequences,
                       bool track) const;
  /// Pair representations: batch x 2*projection, [Arg1, Arg2].
  Var encode(Tape& tape, std::span<const TokenPair* const> pairs, bool track) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  Parameter& embedding() { return embedding_; }
  LstmParams& forward_lstm() { return forward_; }
  LstmParams& backward_lstm() { return backward_; }
  Parameter& projection_weight() { return proj_weight_; }
  Parameter& projection_bias() { return proj_bias_; }
  Parameter& attention_weight() { return att_weight_; }
  Parameter& attention_bias() { return att_bias_; }
  Parameter& context_vector() { return context_; }

 private:
  std::vector<Var> run_direction(Tape& tape, const LstmParams& lstm, Var inputs,
                                 const SequenceBatch& batch, bool reverse, bool track) const;

  EncoderConfig config_;
  Parameter embedding_;
  LstmParams forward_;
  LstmParams backward_;
  Parameter proj_weight_;  // W_c: 2H x projection
  Parameter proj_bias_;    // b_c
  Parameter att_weight_;   // W_w: 2H x attention
  Parameter att_bias_;     // b_w
  Parameter context_;      // u_w: attention x 1
};

}  // namespace adda
