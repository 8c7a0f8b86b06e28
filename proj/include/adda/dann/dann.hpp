#pragma once

#include <json.hpp>

#include "adda/train/trainer.hpp"

namespace adda {

struct DannConfig {
  double lambda = 0.25;
  double lr = 2e-4;
  bool spectral_norm = false;
};

void to_json(nlohmann::json& j, const DannConfig& c);
void from_json(const nlohmann::json& j, DannConfig& c);

/// Identity forward; backward multiplies the upstream gradient by -lambda.
Var gradient_reversal(Var x, double lambda);

/// Domain loss of D on reversed features: -E[log D(source)] - E[log(1 - D(target))].
Var dann_domain_loss(Tape& tape, Discriminator& d, Var source_features, Var target_features,
                     double lambda, bool update_state);

/// Joint loop over a shared encoder (the model's M_s, copied into M_t at the
/// end), the classifier and D. With `domain_branch` off it is plain
/// source-only training over the identical batch sequence.
class DannTrainer {
 public:
  DannTrainer(Model& model, const TrainConfig& config, const DannConfig& dann,
              const Dataset& source_train, const Dataset* target_train, const Dataset& dev,
              bool domain_branch);

  void set_observer(StepObserver observer) { observer_ = std::move(observer); }
  bool finished() const;
  const EpochLog& run_epoch();
  void finalize();
  const StageHistory& history() const { return history_; }

 private:
  Model& model_;
  TrainConfig config_;
  DannConfig dann_;
  const Dataset& source_;
  const Dataset* target_;
  const Dataset& dev_;
  bool domain_branch_;
  Adam adam_;
  EarlyStopping stop_;
  StageHistory history_;
  Encoder best_encoder_;
  Classifier best_classifier_;
  StepObserver observer_;
};

StageHistory train_dann(Model& model, const TrainConfig& config, const DannConfig& dann,
                        const Dataset& source_train, const Dataset& target_train,
                        const Dataset& dev, const StepObserver& observer = {});

StageHistory train_source_only(Model& model, const TrainConfig& config, const DannConfig& dann,
                               const Dataset& source_train, const Dataset& dev,
                               const StepObserver& observer = {});

}  // namespace adda
