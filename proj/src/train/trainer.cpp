#include "adda/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "adda/autodiff/ops.hpp"
#include "adda/eval/metrics.hpp"
#include "adda/train/losses.hpp"
#include "adda/util/hash.hpp"

namespace adda {
namespace {

constexpr std::uint64_t kPretrainStream = 100;
constexpr std::uint64_t kSupervisedStream = 200;
constexpr std::uint64_t kAdaptStream = 300;

std::mt19937_64 epoch_rng(std::uint64_t seed, std::uint64_t stream, std::size_t epoch) {
  return std::mt19937_64(derive_seed(seed, stream * 100000 + epoch));
}

double json_number(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return EpochLog::kAbsent;
  return it->get<double>();
}

void put_number(nlohmann::json& j, const char* key, double v) {
  if (std::isnan(v)) {
    j[key] = nullptr;
  } else {
    j[key] = v;
  }
}

/// Running mean of one loss over an epoch.
struct Mean {
  double total = 0.0;
  std::size_t count = 0;
  void add(double v) {
    total += v;
    ++count;
  }
  double value() const {
    return count == 0 ? EpochLog::kAbsent : total / static_cast<double>(count);
  }
};

std::vector<Parameter*> concat(std::vector<Parameter*> a, const std::vector<Parameter*>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

std::string_view step_name(Step step) {
  switch (step) {
    case Step::kPretrain: return "pretrain";
    case Step::kDiscriminator: return "discriminator";
    case Step::kMapping: return "mapping";
    case Step::kReconstruction: return "reconstruction";
    case Step::kSupervised: return "supervised";
    case Step::kDann: return "dann";
  }
  return "unknown";
}

void to_json(nlohmann::json& j, const EpochLog& e) {
  j = nlohmann::json::object();
  j["epoch"] = e.epoch;
  put_number(j, "loss_cls", e.loss_cls);
  put_number(j, "loss_adv_d", e.loss_adv_d);
  put_number(j, "loss_adv_m", e.loss_adv_m);
  put_number(j, "loss_recon", e.loss_recon);
  put_number(j, "loss_sup", e.loss_sup);
  put_number(j, "loss_domain", e.loss_domain);
  put_number(j, "dev_macro_f1", e.dev_macro_f1);
  put_number(j, "discriminator_accuracy", e.discriminator_accuracy);
}

void from_json(const nlohmann::json& j, EpochLog& e) {
  e.epoch = j.at("epoch").get<std::size_t>();
  e.loss_cls = json_number(j, "loss_cls");
  e.loss_adv_d = json_number(j, "loss_adv_d");
  e.loss_adv_m = json_number(j, "loss_adv_m");
  e.loss_recon = json_number(j, "loss_recon");
  e.loss_sup = json_number(j, "loss_sup");
  e.loss_domain = json_number(j, "loss_domain");
  e.dev_macro_f1 = json_number(j, "dev_macro_f1");
  e.discriminator_accuracy = json_number(j, "discriminator_accuracy");
}

void to_json(nlohmann::json& j, const StageHistory& h) {
  j = {{"epochs", h.epochs},
       {"best_epoch", h.best_epoch},
       {"best_dev_f1", h.best_dev_f1},
       {"stopped_early", h.stopped_early}};
}

void from_json(const nlohmann::json& j, StageHistory& h) {
  h.epochs = j.at("epochs").get<std::vector<EpochLog>>();
  h.best_epoch = j.at("best_epoch").get<std::size_t>();
  h.best_dev_f1 = j.at("best_dev_f1").get<double>();
  h.stopped_early = j.at("stopped_early").get<bool>();
}

std::vector<std::size_t> predict(const Encoder& encoder, const Classifier& classifier,
                                 const Dataset& data, std::size_t chunk) {
  std::vector<std::size_t> out;
  out.reserve(data.size());
  for (const auto& batch : make_batches(data.size(), chunk)) {
    for (std::size_t i : batch) {
      const TokenPair& p = data.pairs[i];
      if (p.arg1.empty() || p.arg2.empty()) {
        throw DataError("predict: instance " + std::to_string(i) + " has an empty argument");
      }
    }
    Tape tape;
    const auto pairs = gather_pairs(data, batch);
    const Tensor& logits =
        classifier.logits(tape, encoder.encode(tape, pairs, false), false).value();
    for (std::size_t r = 0; r < logits.rows(); ++r) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < logits.cols(); ++c) {
        if (logits(r, c) > logits(r, best)) best = c;
      }
      out.push_back(best);
    }
  }
  return out;
}

double macro_f1_on(const Encoder& encoder, const Classifier& classifier, const Dataset& data) {
  const auto predicted = predict(encoder, classifier, data);
  const auto f1 = per_class_f1(confusion_matrix(data.labels, predicted, classifier.classes()));
  return macro_f1(f1);
}

Tensor encode_all(const Encoder& encoder, const Dataset& data, std::size_t chunk) {
  const std::size_t width = encoder.output_dim();
  Tensor out = Tensor::matrix(data.size(), width);
  for (const auto& batch : make_batches(data.size(), chunk)) {
    Tape tape;
    const auto pairs = gather_pairs(data, batch);
    const Tensor& rep = encoder.encode(tape, pairs, false).value();
    std::copy(rep.data().begin(), rep.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(batch.front() * width));
  }
  return out;
}

Tensor take_rows(const Tensor& matrix, std::span<const std::size_t> rows) {
  const std::size_t cols = matrix.cols();
  Tensor out = Tensor::matrix(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(matrix.data().begin() + static_cast<std::ptrdiff_t>(rows[i] * cols), cols,
                out.data().begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
  return out;
}

double discriminator_accuracy(const Discriminator& d, const Tensor& source_features,
                              const Tensor& target_features) {
  auto rate = [&](const Tensor& features, bool source) {
    Tape tape;
    const Tensor& logits = d.logits(tape, tape.constant_ref(features), false).value();
    std::size_t correct = 0;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
      const bool says_source = logits(r, 0) > logits(r, 1);
      correct += says_source == source ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(logits.rows());
  };
  return 0.5 * (rate(source_features, true) + rate(target_features, false));
}

bool EarlyStopping::update(std::size_t epoch, double score) {
  if (score > best) {
    best = score;
    best_epoch = epoch;
    bad_epochs = 0;
    return true;
  }
  ++bad_epochs;
  return false;
}

// ---------------------------------------------------------------------------

ClassifierTrainer::ClassifierTrainer(Encoder& encoder, Classifier& classifier,
                                     const TrainConfig& config, const Dataset& train,
                                     const Dataset& dev, double lr, double epsilon,
                                     std::size_t max_epochs, std::uint64_t stream)
    : encoder_(encoder),
      classifier_(classifier),
      config_(config),
      train_(train),
      dev_(dev),
      epsilon_(epsilon),
      max_epochs_(max_epochs),
      stream_(stream),
      adam_(lr) {
  config_.validate();
  if (train.empty() || !train.labeled()) {
    throw DataError("classifier training needs a non-empty labeled training set");
  }
  if (dev.empty() || !dev.labeled()) throw DataError("early stopping needs a labeled dev set");
  stop_.patience = config.patience;
  EpochLog initial;
  initial.dev_macro_f1 = macro_f1_on(encoder_, classifier_, dev_);
  history_.epochs.push_back(initial);
  stop_.update(0, initial.dev_macro_f1);
  snapshot();
}

std::vector<Parameter*> ClassifierTrainer::trainable() {
  return concat(encoder_.parameters(), classifier_.parameters());
}

void ClassifierTrainer::snapshot() {
  best_encoder_ = encoder_;
  best_classifier_ = classifier_;
  history_.best_epoch = stop_.best_epoch;
  history_.best_dev_f1 = stop_.best;
}

bool ClassifierTrainer::finished() const {
  return history_.epochs.size() > max_epochs_ || stop_.exhausted();
}

const EpochLog& ClassifierTrainer::run_epoch() {
  const std::size_t epoch = history_.epochs.size();
  auto rng = epoch_rng(config_.seed, stream_, epoch);
  const auto params = trainable();
  Mean loss;
  std::size_t index = 0;
  for (const auto& batch : make_batches(train_.size(), config_.batch_size, rng)) {
    Tape tape;
    const auto pairs = gather_pairs(train_, batch);
    const auto labels = gather_labels(train_, batch);
    Var l = loss_cls(classifier_.logits(tape, encoder_.encode(tape, pairs, true), true), labels,
                     epsilon_);
    adam_.step(params, tape.backward(l));
    loss.add(l.value().item());
    if (observer_) observer_({Step::kPretrain, epoch, index, l.value().item()});
    ++index;
  }
  EpochLog log;
  log.epoch = epoch;
  log.loss_cls = loss.value();
  log.dev_macro_f1 = macro_f1_on(encoder_, classifier_, dev_);
  history_.epochs.push_back(log);
  if (stop_.update(epoch, log.dev_macro_f1)) snapshot();
  history_.stopped_early = stop_.exhausted();
  return history_.epochs.back();
}

void ClassifierTrainer::finalize() {
  encoder_ = best_encoder_;
  classifier_ = best_classifier_;
}

void ClassifierTrainer::save(Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.put_adam(prefix + "adam", adam_);
  ckpt.put(prefix + "best/encoder/", best_encoder_.parameters());
  ckpt.put(prefix + "best/classifier/", best_classifier_.parameters());
  ckpt.meta[prefix + "history"] = history_;
  ckpt.meta[prefix + "stop"] = {{"best_epoch", stop_.best_epoch},
                                {"best", stop_.best},
                                {"bad_epochs", stop_.bad_epochs}};
}

void ClassifierTrainer::load(const Checkpoint& ckpt, const std::string& prefix) {
  ckpt.get_adam(prefix + "adam", adam_);
  ckpt.get(prefix + "best/encoder/", best_encoder_.parameters());
  ckpt.get(prefix + "best/classifier/", best_classifier_.parameters());
  history_ = ckpt.meta.at(prefix + "history").get<StageHistory>();
  const auto& s = ckpt.meta.at(prefix + "stop");
  stop_.best_epoch = s.at("best_epoch").get<std::size_t>();
  stop_.best = s.at("best").get<double>();
  stop_.bad_epochs = s.at("bad_epochs").get<std::size_t>();
}

StageHistory pretrain(Model& model, const TrainConfig& config, const Dataset& source_train,
                      const Dataset& dev, const StepObserver& observer) {
  ClassifierTrainer trainer(model.source, model.classifier, config, source_train, dev,
                            config.lr_pretrain, config.smoothing(), config.pretrain_epochs,
                            kPretrainStream);
  trainer.set_observer(observer);
  while (!trainer.finished()) trainer.run_epoch();
  trainer.finalize();
  model.target = model.source;
  return trainer.history();
}

StageHistory train_supervised(Model& model, const TrainConfig& config, const Dataset& labeled,
                              const Dataset& dev, const StepObserver& observer) {
  ClassifierTrainer trainer(model.target, model.classifier, config, labeled, dev,
                            config.lr_supervised, 0.0, config.pretrain_epochs,
                            kSupervisedStream);
  trainer.set_observer(observer);
  while (!trainer.finished()) trainer.run_epoch();
  trainer.finalize();
  return trainer.history();
}

// ---------------------------------------------------------------------------

Adapter::Adapter(Model& model, const TrainConfig& config, const AdaptData& data)
    : model_(model),
      config_(config),
      data_(data),
      adam_d_(config.lr_discriminator),
      adam_m_(config.lr_adversarial),
      sgd_r_(config.lr_reconstruction),
      adam_sup_(config.lr_supervised) {
  config_.validate();
  if (data.source_train == nullptr || data.source_train->empty()) {
    throw DataError("adapt: missing labeled source data");
  }
  if (data.target_train == nullptr || data.target_train->empty()) {
    throw DataError("adapt: missing unlabeled target data");
  }
  if (data.target_dev == nullptr || !data.target_dev->labeled()) {
    throw DataError("adapt: early stopping needs a labeled target dev set");
  }
  if (config.supervised && (data.labeled_target == nullptr || !data.labeled_target->labeled() ||
                            data.labeled_target->empty())) {
    throw DataError("adapt: the supervised component needs a labeled target subset");
  }
  if (model.source.parameters().front()->value.empty()) {
    throw std::invalid_argument("adapt: the model has no pretrained source encoder");
  }
  model_.target = model_.source;
  model_.discriminator.set_spectral_norm(config.spectral_norm);
  source_features_ = encode_all(model_.source, *data.source_train);
  target_reference_ = encode_all(model_.source, *data.target_train);
  if (data.source_heldout != nullptr && !data.source_heldout->empty()) {
    heldout_features_ = encode_all(model_.source, *data.source_heldout);
  }
  stop_.patience = config.patience;
  EpochLog initial;
  evaluate(initial);
  history_.epochs.push_back(initial);
  stop_.update(0, initial.dev_macro_f1);
  snapshot();
}

bool Adapter::finished() const {
  return history_.epochs.size() > config_.adapt_epochs || stop_.exhausted();
}

void Adapter::evaluate(EpochLog& log) {
  log.dev_macro_f1 = macro_f1_on(model_.target, model_.classifier, *data_.target_dev);
  if (!heldout_features_.empty()) {
    log.discriminator_accuracy = discriminator_accuracy(
        model_.discriminator, heldout_features_, encode_all(model_.target, *data_.target_dev));
  }
}

void Adapter::snapshot() {
  best_target_ = model_.target;
  best_classifier_ = model_.classifier;
  history_.best_epoch = stop_.best_epoch;
  history_.best_dev_f1 = stop_.best;
}

const EpochLog& Adapter::run_epoch() {
  const std::size_t epoch = history_.epochs.size();
  auto rng = epoch_rng(config_.seed, kAdaptStream, epoch);
  const Dataset& target = *data_.target_train;
  const auto target_batches = make_batches(target.size(), config_.batch_size, rng);
  const auto source_batches = make_batches(data_.source_train->size(), config_.batch_size, rng);
  const auto d_params = model_.discriminator.parameters();
  const auto m_params = model_.target.parameters();
  EpochLog log;
  log.epoch = epoch;

  if (config_.adversarial) {
    Mean d_loss, m_loss;
    for (std::size_t b = 0; b < target_batches.size(); ++b) {
      const auto& tb = target_batches[b];
      const auto& sb = source_batches[b % source_batches.size()];
      Tape tape;
      const auto pairs = gather_pairs(target, tb);
      Var features = model_.target.encode(tape, pairs, true);
      Var source = tape.constant(take_rows(source_features_, sb));

      Var ld = loss_adv_d(tape, model_.discriminator, source, features, config_.spectral_norm);
      adam_d_.step(d_params, tape.backward(ld));
      d_loss.add(ld.value().item());
      if (observer_) observer_({Step::kDiscriminator, epoch, b, ld.value().item()});

      Var lm = loss_adv_m(tape, model_.discriminator, features);
      m_loss.add(lm.value().item());
      if (config_.adversarial_weight != 1.0) lm = scale(lm, config_.adversarial_weight);
      adam_m_.step(m_params, tape.backward(lm));
      if (observer_) observer_({Step::kMapping, epoch, b, lm.value().item()});
    }
    log.loss_adv_d = d_loss.value();
    log.loss_adv_m = m_loss.value();
  }

  if (config_.reconstruction) {
    const auto params = concat(model_.target.parameters(), model_.reconstructor.parameters());
    Mean r_loss;
    for (std::size_t b = 0; b < target_batches.size(); ++b) {
      const auto& tb = target_batches[b];
      Tape tape;
      const auto pairs = gather_pairs(target, tb);
      Var features = model_.target.encode(tape, pairs, true);
      Var reference = tape.constant(take_rows(target_reference_, tb));
      Var lr = loss_recon(tape, model_.reconstructor, features, reference, true);
      r_loss.add(lr.value().item());
      if (config_.reconstruction_weight != 1.0) lr = scale(lr, config_.reconstruction_weight);
      sgd_r_.step(params, tape.backward(lr));
      if (observer_) observer_({Step::kReconstruction, epoch, b, lr.value().item()});
    }
    log.loss_recon = r_loss.value();
  }

  if (config_.supervised) {
    const Dataset& labeled = *data_.labeled_target;
    const auto params = concat(model_.target.parameters(), model_.classifier.parameters());
    Mean s_loss;
    const auto batches = make_batches(labeled.size(), config_.batch_size, rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      Tape tape;
      const auto pairs = gather_pairs(labeled, batches[b]);
      const auto labels = gather_labels(labeled, batches[b]);
      Var features = model_.target.encode(tape, pairs, true);
      Var ls = loss_sup(model_.classifier.logits(tape, features, true), labels);
      s_loss.add(ls.value().item());
      if (config_.supervised_weight != 1.0) ls = scale(ls, config_.supervised_weight);
      adam_sup_.step(params, tape.backward(ls));
      if (observer_) observer_({Step::kSupervised, epoch, b, ls.value().item()});
    }
    log.loss_sup = s_loss.value();
  }

  evaluate(log);
  history_.epochs.push_back(log);
  if (stop_.update(epoch, log.dev_macro_f1)) snapshot();
  history_.stopped_early = stop_.exhausted();
  return history_.epochs.back();
}

void Adapter::finalize() {
  model_.target = best_target_;
  model_.classifier = best_classifier_;
}

void put_model(Checkpoint& ckpt, const Model& model) {
  ckpt.meta["model"] = model.config;
  ckpt.put("source/", model.source.parameters());
  ckpt.put("target/", model.target.parameters());
  ckpt.put("classifier/", model.classifier.parameters());
  ckpt.put("discriminator/", model.discriminator.parameters());
  ckpt.put("reconstructor/", model.reconstructor.parameters());
  const auto& states = model.discriminator.spectral_states();
  for (std::size_t l = 0; l < states.size(); ++l) {
    ckpt.tensors["discriminator/spectral" + std::to_string(l) + ".u"] = states[l].u;
    ckpt.tensors["discriminator/spectral" + std::to_string(l) + ".v"] = states[l].v;
  }
}

void get_model(const Checkpoint& ckpt, Model& model) {
  ckpt.get("source/", model.source.parameters());
  ckpt.get("target/", model.target.parameters());
  ckpt.get("classifier/", model.classifier.parameters());
  ckpt.get("discriminator/", model.discriminator.parameters());
  ckpt.get("reconstructor/", model.reconstructor.parameters());
  auto& states = model.discriminator.spectral_states();
  for (std::size_t l = 0; l < states.size(); ++l) {
    states[l].u = ckpt.tensor("discriminator/spectral" + std::to_string(l) + ".u");
    states[l].v = ckpt.tensor("discriminator/spectral" + std::to_string(l) + ".v");
  }
}

Checkpoint Adapter::checkpoint() const {
  Checkpoint ckpt;
  nlohmann::json resolved = {{"train", config_}, {"model", model_.config}};
  ckpt.config_hash = config_hash(resolved);
  ckpt.seed = config_.seed;
  ckpt.meta["config"] = resolved;
  ckpt.meta["stage"] = "adapt";
  ckpt.meta["epoch"] = history_.epochs.size() - 1;
  put_model(ckpt, model_);
  ckpt.put_adam("optim/discriminator", adam_d_);
  ckpt.put_adam("optim/mapping", adam_m_);
  ckpt.put_sgd("optim/reconstruction", sgd_r_);
  ckpt.put_adam("optim/supervised", adam_sup_);
  ckpt.put("best/target/", best_target_.parameters());
  ckpt.put("best/classifier/", best_classifier_.parameters());
  ckpt.meta["history"] = history_;
  ckpt.meta["stop"] = {{"best_epoch", stop_.best_epoch},
                       {"best", stop_.best},
                       {"bad_epochs", stop_.bad_epochs}};
  return ckpt;
}

void Adapter::restore(const Checkpoint& ckpt) {
  nlohmann::json resolved = {{"train", config_}, {"model", model_.config}};
  if (ckpt.config_hash != config_hash(resolved)) {
    throw CheckpointError("checkpoint was written under a different configuration");
  }
  get_model(ckpt, model_);
  ckpt.get_adam("optim/discriminator", adam_d_);
  ckpt.get_adam("optim/mapping", adam_m_);
  ckpt.get_sgd("optim/reconstruction", sgd_r_);
  ckpt.get_adam("optim/supervised", adam_sup_);
  ckpt.get("best/target/", best_target_.parameters());
  ckpt.get("best/classifier/", best_classifier_.parameters());
  history_ = ckpt.meta.at("history").get<StageHistory>();
  const auto& s = ckpt.meta.at("stop");
  stop_.best_epoch = s.at("best_epoch").get<std::size_t>();
  stop_.best = s.at("best").get<double>();
  stop_.bad_epochs = s.at("bad_epochs").get<std::size_t>();
}

StageHistory adapt(Model& model, const TrainConfig& config, const AdaptData& data,
                   const StepObserver& observer) {
  Adapter adapter(model, config, data);
  adapter.set_observer(observer);
  while (!adapter.finished()) adapter.run_epoch();
  adapter.finalize();
  return adapter.history();
}

ObjectiveTerms objective_terms(const Model& model, const TrainConfig& config,
                               std::span<const TokenPair* const> source,
                               std::span<const std::size_t> source_labels,
                               std::span<const TokenPair* const> target) {
  Tape tape;
  Var fs = model.source.encode(tape, source, false);
  Var ft = model.target.encode(tape, target, false);
  Discriminator d = model.discriminator;
  d.set_spectral_norm(config.spectral_norm);
  ObjectiveTerms t;
  t.cls = loss_cls(model.classifier.logits(tape, fs, false), source_labels, config.smoothing())
              .value()
              .item();
  t.adv_d = loss_adv_d(tape, d, fs, ft, false).value().item();
  t.adv_m = loss_adv_m(tape, d, ft).value().item();
  t.total = t.cls + t.adv_d + config.adversarial_weight * t.adv_m;
  if (config.reconstruction) {
    Var reference = model.source.encode(tape, target, false);
    t.recon = loss_recon(tape, model.reconstructor, ft, reference, false).value().item();
    t.total += config.reconstruction_weight * *t.recon;
  }
  return t;
}

}  // namespace adda
