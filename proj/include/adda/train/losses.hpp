#pragma once

#include <cstddef>
#include <span>

#include "adda/model/heads.hpp"

namespace adda {

/// Mean over rows of -sum_k q'(k) log p(k), q' the smoothed one-hot target.
/// epsilon = 0 is plain cross-entropy.
Var loss_cls(Var logits, std::span<const std::size_t> labels, double epsilon);

/// Unsmoothed cross-entropy on labeled target features.
Var loss_sup(Var logits, std::span<const std::size_t> labels);

/// -E[log D(source)] - E[log(1 - D(target))]. Both feature batches are
/// detached here, so no gradient reaches either encoder. `update_state` runs
/// the discriminator's power iterations before the forward pass.
Var loss_adv_d(Tape& tape, Discriminator& d, Var source_features, Var target_features,
               bool update_state);

/// -E[log D(target)]: inverted labels, D read but not tracked.
Var loss_adv_m(Tape& tape, const Discriminator& d, Var target_features);

/// E ||M_r(features) - reference||^2 with the reference detached.
Var loss_recon(Tape& tape, const Reconstructor& r, Var target_features, Var reference,
               bool track);

}  // namespace adda
