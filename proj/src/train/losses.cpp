#include "adda/train/losses.hpp"

#include <stdexcept>
#include <string>
#include <vector>

#include "adda/autodiff/ops.hpp"

namespace adda {
namespace {

void require_rows(Var v, const char* loss) {
  if (v.rows() == 0) throw std::invalid_argument(std::string(loss) + ": empty batch");
}

Var source_column_mean(Var log_probs, std::size_t column) {
  std::vector<std::size_t> cols(log_probs.rows(), column);
  return mean(pick(log_probs, cols));
}

}  // namespace

Var loss_cls(Var logits, std::span<const std::size_t> labels, double epsilon) {
  require_rows(logits, "loss_cls");
  const std::size_t n = logits.rows(), k = logits.cols();
  if (labels.size() != n) {
    throw ShapeError("loss_cls: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  }
  Tensor targets = Tensor::matrix(n, k);
  for (std::size_t r = 0; r < n; ++r) {
    if (labels[r] >= k) {
      throw std::invalid_argument("loss_cls: label " + std::to_string(labels[r]) +
                                  " out of range for " + std::to_string(k) + " classes");
    }
    const Tensor q = smoothed_target_distribution(labels[r], epsilon, k);
    for (std::size_t c = 0; c < k; ++c) targets(r, c) = q[c];
  }
  Tape& tape = *logits.tape();
  Var weighted = mul(log_softmax(logits), tape.constant(std::move(targets)));
  return scale(sum(weighted), -1.0 / static_cast<double>(n));
}

Var loss_sup(Var logits, std::span<const std::size_t> labels) {
  return loss_cls(logits, labels, 0.0);
}

Var loss_adv_d(Tape& tape, Discriminator& d, Var source_features, Var target_features,
               bool update_state) {
  require_rows(source_features, "loss_adv_d");
  require_rows(target_features, "loss_adv_d");
  Var src = d.logits(tape, detach(source_features), true, update_state);
  Var tgt = d.logits(tape, detach(target_features), true);
  return neg(add(source_column_mean(log_softmax(src), 0),
                 source_column_mean(log_softmax(tgt), 1)));
}

Var loss_adv_m(Tape& tape, const Discriminator& d, Var target_features) {
  require_rows(target_features, "loss_adv_m");
  return neg(source_column_mean(log_softmax(d.logits(tape, target_features, false)), 0));
}

Var loss_recon(Tape& tape, const Reconstructor& r, Var target_features, Var reference,
               bool track) {
  require_rows(target_features, "loss_recon");
  return mean(squared_l2_distance(r.forward(tape, target_features, track), detach(reference)));
}

}  // namespace adda
