#include "adda/dann/dann.hpp"

#include <cmath>
#include <stdexcept>

#include "adda/autodiff/ops.hpp"
#include "adda/train/losses.hpp"
#include "adda/util/hash.hpp"

namespace adda {
namespace {

constexpr std::uint64_t kDannStream = 400;

Var column_mean(Var log_probs, std::size_t column) {
  std::vector<std::size_t> cols(log_probs.rows(), column);
  return mean(pick(log_probs, cols));
}

}  // namespace

void to_json(nlohmann::json& j, const DannConfig& c) {
  j = {{"lambda", c.lambda}, {"lr", c.lr}, {"spectral_norm", c.spectral_norm}};
}

void from_json(const nlohmann::json& j, DannConfig& c) {
  reject_unknown_keys(j, {"lambda", "lr", "spectral_norm"}, "dann");
  if (j.contains("lambda")) c.lambda = j["lambda"].get<double>();
  if (j.contains("lr")) c.lr = j["lr"].get<double>();
  if (j.contains("spectral_norm")) c.spectral_norm = j["spectral_norm"].get<bool>();
}

Var gradient_reversal(Var x, double lambda) {
  if (!std::isfinite(lambda)) throw std::invalid_argument("gradient_reversal: lambda not finite");
  Tape& tape = *x.tape();
  return tape.record("gradient_reversal", x.value(), {x}, [lambda](BackwardContext& ctx) {
    Tensor* gx = ctx.grad(0);
    if (gx == nullptr) return;
    const auto g = ctx.out_grad().data();
    auto dst = gx->data();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += -lambda * g[i];
  });
}

Var dann_domain_loss(Tape& tape, Discriminator& d, Var source_features, Var target_features,
                     double lambda, bool update_state) {
  Var src = d.logits(tape, gradient_reversal(source_features, lambda), true, update_state);
  Var tgt = d.logits(tape, gradient_reversal(target_features, lambda), true);
  return neg(add(column_mean(log_softmax(src), 0), column_mean(log_softmax(tgt), 1)));
}

DannTrainer::DannTrainer(Model& model, const TrainConfig& config, const DannConfig& dann,
                         const Dataset& source_train, const Dataset* target_train,
                         const Dataset& dev, bool domain_branch)
    : model_(model),
      config_(config),
      dann_(dann),
      source_(source_train),
      target_(target_train),
      dev_(dev),
      domain_branch_(domain_branch),
      adam_(dann.lr) {
  config_.validate();
  if (source_train.empty() || !source_train.labeled()) {
    throw DataError("dann: needs labeled source data");
  }
  if (domain_branch && (target_train == nullptr || target_train->empty())) {
    throw DataError("dann: needs unlabeled target data");
  }
  if (dev.empty() || !dev.labeled()) {
    throw DataError("dann: early stopping needs a labeled dev set");
  }
  model_.discriminator.set_spectral_norm(dann.spectral_norm);
  stop_.patience = config.patience;
  EpochLog initial;
  initial.dev_macro_f1 = macro_f1_on(model_.source, model_.classifier, dev_);
  history_.epochs.push_back(initial);
  stop_.update(0, initial.dev_macro_f1);
  best_encoder_ = model_.source;
  best_classifier_ = model_.classifier;
  history_.best_dev_f1 = stop_.best;
}

bool DannTrainer::finished() const {
  return history_.epochs.size() > config_.pretrain_epochs || stop_.exhausted();
}

const EpochLog& DannTrainer::run_epoch() {
  const std::size_t epoch = history_.epochs.size();
  std::mt19937_64 rng(derive_seed(config_.seed, kDannStream * 100000 + epoch));
  const auto source_batches = make_batches(source_.size(), config_.batch_size, rng);
  std::vector<std::vector<std::size_t>> target_batches;
  if (domain_branch_) target_batches = make_batches(target_->size(), config_.batch_size, rng);

  std::vector<Parameter*> params = model_.source.parameters();
  for (Parameter* p : model_.classifier.parameters()) params.push_back(p);
  if (domain_branch_) {
    for (Parameter* p : model_.discriminator.parameters()) params.push_back(p);
  }

  double cls_total = 0.0, dom_total = 0.0;
  for (std::size_t b = 0; b < source_batches.size(); ++b) {
    Tape tape;
    const auto pairs = gather_pairs(source_, source_batches[b]);
    const auto labels = gather_labels(source_, source_batches[b]);
    Var fs = model_.source.encode(tape, pairs, true);
    Var loss = loss_cls(model_.classifier.logits(tape, fs, true), labels, config_.smoothing());
    cls_total += loss.value().item();
    if (domain_branch_) {
      const auto tpairs = gather_pairs(*target_, target_batches[b % target_batches.size()]);
      Var ft = model_.source.encode(tape, tpairs, true);
      Var dom = dann_domain_loss(tape, model_.discriminator, fs, ft, dann_.lambda,
                                 dann_.spectral_norm);
      dom_total += dom.value().item();
      loss = add(loss, dom);
    }
    adam_.step(params, tape.backward(loss));
    if (observer_) observer_({Step::kDann, epoch, b, loss.value().item()});
  }
  EpochLog log;
  log.epoch = epoch;
  const double n = static_cast<double>(source_batches.size());
  log.loss_cls = cls_total / n;
  if (domain_branch_) log.loss_domain = dom_total / n;
  log.dev_macro_f1 = macro_f1_on(model_.source, model_.classifier, dev_);
  history_.epochs.push_back(log);
  if (stop_.update(epoch, log.dev_macro_f1)) {
    best_encoder_ = model_.source;
    best_classifier_ = model_.classifier;
    history_.best_epoch = stop_.best_epoch;
    history_.best_dev_f1 = stop_.best;
  }
  history_.stopped_early = stop_.exhausted();
  return history_.epochs.back();
}

void DannTrainer::finalize() {
  model_.source = best_encoder_;
  model_.classifier = best_classifier_;
  model_.target = model_.source;
}

StageHistory train_dann(Model& model, const TrainConfig& config, const DannConfig& dann,
                        const Dataset& source_train, const Dataset& target_train,
                        const Dataset& dev, const StepObserver& observer) {
  DannTrainer trainer(model, config, dann, source_train, &target_train, dev, true);
  trainer.set_observer(observer);
  while (!trainer.finished()) trainer.run_epoch();
  trainer.finalize();
  return trainer.history();
}

StageHistory train_source_only(Model& model, const TrainConfig& config, const DannConfig& dann,
                               const Dataset& source_train, const Dataset& dev,
                               const StepObserver& observer) {
  DannTrainer trainer(model, config, dann, source_train, nullptr, dev, false);
  trainer.set_observer(observer);
  while (!trainer.finished()) trainer.run_epoch();
  trainer.finalize();
  return trainer.history();
}

}  // namespace adda
