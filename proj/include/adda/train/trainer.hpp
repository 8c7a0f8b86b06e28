#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adda/autodiff/optim.hpp"
#include "adda/train/checkpoint.hpp"
#include "adda/train/dataset.hpp"
#include "adda/train/model.hpp"

namespace adda {

/// Which update a step performed.
enum class Step { kPretrain, kDiscriminator, kMapping, kReconstruction, kSupervised, kDann };
std::string_view step_name(Step step);

struct StepEvent {
  Step step;
  std::size_t epoch;
  std::size_t batch;
  double loss;
};
/// Called after every optimizer step.
using StepObserver = std::function<void(const StepEvent&)>;

/// Per-epoch means of the losses that ran, plus dev metrics. Losses that did
/// not run are absent (NaN).
struct EpochLog {
  static constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();
  std::size_t epoch = 0;
  double loss_cls = kAbsent;
  double loss_adv_d = kAbsent;
  double loss_adv_m = kAbsent;
  double loss_recon = kAbsent;
  double loss_sup = kAbsent;
  double loss_domain = kAbsent;
  double dev_macro_f1 = 0.0;
  double discriminator_accuracy = kAbsent;
};

struct StageHistory {
  std::vector<EpochLog> epochs;  // epochs[0] is the state before any update
  std::size_t best_epoch = 0;
  double best_dev_f1 = -1.0;
  bool stopped_early = false;

  const EpochLog& best() const { return epochs.at(best_epoch); }
};

void to_json(nlohmann::json& j, const EpochLog& e);
void from_json(const nlohmann::json& j, EpochLog& e);
void to_json(nlohmann::json& j, const StageHistory& h);
void from_json(const nlohmann::json& j, StageHistory& h);

/// Argmax class per instance (ties to the lowest index), evaluated in chunks.
std::vector<std::size_t> predict(const Encoder& encoder, const Classifier& classifier,
                                 const Dataset& data, std::size_t chunk = 256);
double macro_f1_on(const Encoder& encoder, const Classifier& classifier, const Dataset& data);
/// N x width representations, no gradients.
Tensor encode_all(const Encoder& encoder, const Dataset& data, std::size_t chunk = 256);
Tensor take_rows(const Tensor& matrix, std::span<const std::size_t> rows);
/// Mean of the per-domain accuracies of D at telling source rows from target rows.
double discriminator_accuracy(const Discriminator& d, const Tensor& source_features,
                              const Tensor& target_features);

/// Best-dev bookkeeping shared by every stage.
struct EarlyStopping {
  std::size_t patience = 5;
  std::size_t best_epoch = 0;
  double best = -1.0;
  std::size_t bad_epochs = 0;

  /// Returns true when `score` is a new best.
  bool update(std::size_t epoch, double score);
  bool exhausted() const { return bad_epochs >= patience; }
};

/// Supervised training of one encoder and the classifier with early stopping
/// on dev macro F1: pre-training (optionally label-smoothed) on source data, or
/// the supervised baseline on labeled target data.
class ClassifierTrainer {
 public:
  ClassifierTrainer(Encoder& encoder, Classifier& classifier, const TrainConfig& config,
                    const Dataset& train, const Dataset& dev, double lr, double epsilon,
                    std::size_t max_epochs, std::uint64_t stream);

  void set_observer(StepObserver observer) { observer_ = std::move(observer); }
  bool finished() const;
  const EpochLog& run_epoch();
  /// Restores the best-dev parameters.
  void finalize();
  const StageHistory& history() const { return history_; }

  void save(Checkpoint& ckpt, const std::string& prefix) const;
  void load(const Checkpoint& ckpt, const std::string& prefix);

 private:
  std::vector<Parameter*> trainable();
  void snapshot();

  Encoder& encoder_;
  Classifier& classifier_;
  TrainConfig config_;
  const Dataset& train_;
  const Dataset& dev_;
  double epsilon_;
  std::size_t max_epochs_;
  std::uint64_t stream_;
  Adam adam_;
  EarlyStopping stop_;
  StageHistory history_;
  Encoder best_encoder_;
  Classifier best_classifier_;
  StepObserver observer_;
};

/// Trains M_s and C on labeled source data, early
/// stopping on `dev`. Leaves M_t equal to the selected M_s.
StageHistory pretrain(Model& model, const TrainConfig& config, const Dataset& source_train,
                      const Dataset& dev, const StepObserver& observer = {});

/// Supervised baseline: M_t and C trained from their initial values on the
/// labeled target subset only.
StageHistory train_supervised(Model& model, const TrainConfig& config, const Dataset& labeled,
                              const Dataset& dev, const StepObserver& observer = {});

struct AdaptData {
  const Dataset* source_train = nullptr;    // labeled source X_s
  const Dataset* target_train = nullptr;    // X_t, labels ignored
  const Dataset* target_dev = nullptr;      // labeled, early stopping only
  const Dataset* labeled_target = nullptr;  // X^L_t for the supervised component
  const Dataset* source_heldout = nullptr;  // with target_dev, scores D each epoch
};

/// Adversarial adaptation of M_t. Each epoch runs one pass of (D step, M_t step) over
/// the target batches, then one pass of reconstruction steps, then (when
/// enabled) one pass of supervised steps over the labeled subset.
class Adapter {
 public:
  /// Initializes M_t from M_s and caches the frozen source-encoder features.
  Adapter(Model& model, const TrainConfig& config, const AdaptData& data);

  void set_observer(StepObserver observer) { observer_ = std::move(observer); }
  bool finished() const;
  const EpochLog& run_epoch();
  /// Restores the best-dev M_t (and C when it was trained).
  void finalize();
  const StageHistory& history() const { return history_; }

  /// Full resumable state: all bundles, D's power-iteration vectors,
  /// optimizer moments, history and best snapshot.
  Checkpoint checkpoint() const;
  void restore(const Checkpoint& ckpt);

 private:
  void evaluate(EpochLog& log);
  void snapshot();

  Model& model_;
  TrainConfig config_;
  AdaptData data_;
  Tensor source_features_;     // M_s(X_s)
  Tensor target_reference_;    // M_s(X_t)
  Tensor heldout_features_;    // M_s(source held-out)
  Adam adam_d_;
  Adam adam_m_;
  Sgd sgd_r_;
  Adam adam_sup_;
  EarlyStopping stop_;
  StageHistory history_;
  Encoder best_target_;
  Classifier best_classifier_;
  StepObserver observer_;
};

StageHistory adapt(Model& model, const TrainConfig& config, const AdaptData& data,
                   const StepObserver& observer = {});

/// The terms of the unsupervised objective on one fixed batch.
struct ObjectiveTerms {
  double cls = 0.0;
  double adv_d = 0.0;
  double adv_m = 0.0;
  std::optional<double> recon;
  double total = 0.0;
};
ObjectiveTerms objective_terms(const Model& model, const TrainConfig& config,
                               std::span<const TokenPair* const> source,
                               std::span<const std::size_t> source_labels,
                               std::span<const TokenPair* const> target);

/// All parameter bundles and D's power-iteration vectors.
void put_model(Checkpoint& ckpt, const Model& model);
void get_model(const Checkpoint& ckpt, Model& model);

}  // namespace adda
