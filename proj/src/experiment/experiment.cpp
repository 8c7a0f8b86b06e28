#include "adda/experiment/experiment.hpp"

#include "adda/util/hash.hpp"

namespace adda {
namespace {

bool all_labeled(const std::vector<Instance>& split) {
  for (const Instance& inst : split) {
    if (!inst.label) return false;
  }
  return true;
}

Dataset split_dataset(const Corpus& corpus, std::string_view name, const EmbeddingTable& table,
                      bool require_labels) {
  if (!corpus.has(name)) {
    if (require_labels) throw DataError("corpus has no split '" + std::string(name) + "'");
    return {};
  }
  const auto& split = corpus.at(name);
  const bool labeled = all_labeled(split);
  if (require_labels && !labeled) {
    throw DataError("split '" + std::string(name) + "' must be fully labeled");
  }
  return make_dataset(split, table, corpus.labels, labeled);
}

}  // namespace

PreparedData prepare_data(const Corpus& corpus, EmbeddingTable table) {
  PreparedData d;
  d.labels = corpus.labels;
  d.source_train = split_dataset(corpus, split::kSourceTrain, table, true);
  d.source_dev = split_dataset(corpus, split::kSourceDev, table, false);
  d.target_train = split_dataset(corpus, split::kTargetTrain, table, false);
  d.target_dev = split_dataset(corpus, split::kTargetDev, table, true);
  d.target_test = split_dataset(corpus, split::kTargetTest, table, false);
  d.table = std::move(table);
  return d;
}

PreparedData prepare_synthetic(const SynthConfig& synth, std::size_t embedding_dim,
                               std::uint64_t embedding_seed) {
  const Corpus corpus = synth_generate(synth);
  const Vocabulary vocab = build_vocabulary(corpus);
  return prepare_data(corpus, random_embeddings(vocab, embedding_dim, embedding_seed));
}

DeskPreset desk_preset() {
  DeskPreset p;
  p.model.encoder.hidden = 16;
  p.model.encoder.projection = 32;
  p.model.encoder.attention = 32;
  p.train.lr_pretrain = 1e-3;
  p.train.lr_adversarial = 3e-4;
  p.train.lr_discriminator = 3e-5;
  p.train.lr_reconstruction = 1e-2;
  p.train.lr_supervised = 1e-3;
  p.train.pretrain_epochs = 30;
  p.train.adapt_epochs = 45;
  p.train.patience = 25;
  p.dann.lr = 1e-3;
  return p;
}

std::string_view system_name(System system) {
  switch (system) {
    case System::kNoAdaptation: return "no-adaptation";
    case System::kBareAdaptation: return "domain-adaptation";
    case System::kFullAdaptation: return "full";
    case System::kDann: return "dann";
  }
  return "unknown";
}

std::string_view sweep_system_name(SweepSystem system) {
  switch (system) {
    case SweepSystem::kSupervised: return "supervised-baseline";
    case SweepSystem::kPretraining: return "pretraining-baseline";
    case SweepSystem::kFull: return "full-system";
  }
  return "unknown";
}

Model run_pretrain(const PreparedData& data, const ModelConfig& model, const TrainConfig& train,
                   StageHistory* history) {
  Model m = Model::create(model, data.table.matrix(), train.seed);
  StageHistory h = pretrain(m, train, data.source_train, data.target_dev);
  if (history != nullptr) *history = std::move(h);
  return m;
}

EvalReport test_report(const Model& model, const PreparedData& data, const Dataset& split,
                       std::uint64_t config_hash, std::uint64_t seed) {
  const auto predicted = predict(model.target, model.classifier, split);
  return evaluate(split.labels, predicted, data.labels, config_hash, seed);
}

SystemRun run_system(System system, const PreparedData& data, const DeskPreset& preset,
                     std::uint64_t seed) {
  SystemRun run;
  run.system = system;
  run.seed = seed;
  TrainConfig train = preset.train;
  train.seed = seed;
  AdaptData adapt_data{&data.source_train, &data.target_train, &data.target_dev, nullptr,
                       &data.source_dev};
  Model model;
  switch (system) {
    case System::kNoAdaptation:
      train.label_smoothing = false;
      model = run_pretrain(data, preset.model, train, &run.pretrain);
      break;
    case System::kBareAdaptation:
      train.label_smoothing = false;
      train.spectral_norm = false;
      train.reconstruction = false;
      model = run_pretrain(data, preset.model, train, &run.pretrain);
      run.stage = adapt(model, train, adapt_data);
      break;
    case System::kFullAdaptation:
      model = run_pretrain(data, preset.model, train, &run.pretrain);
      run.stage = adapt(model, train, adapt_data);
      break;
    case System::kDann:
      train.label_smoothing = false;
      model = Model::create(preset.model, data.table.matrix(), seed);
      run.stage = train_dann(model, train, preset.dann, data.source_train, data.target_train,
                             data.target_dev);
      break;
  }
  run.test = test_report(model, data, data.target_test, 0, seed);
  return run;
}

SweepResult run_sweep(const PreparedData& data, const DeskPreset& preset, const SweepPlan& plan,
                      const SweepProgress& progress) {
  plan.validate(data.target_train.size());
  if (!data.target_train.labeled()) {
    throw DataError("sweep: the target training split needs labels to sample subsets from");
  }
  SweepResult result;
  result.sizes = plan.sizes;
  result.repeats = plan.repeats;
  result.f1.assign(3, std::vector<std::vector<double>>(plan.sizes.size()));
  const Dataset unlabeled = data.target_train.without_labels();

  for (std::size_t r = 0; r < plan.repeats; ++r) {
    TrainConfig train = preset.train;
    train.seed = derive_seed(plan.seed, r);
    const Model pretrained = run_pretrain(data, preset.model, train);
    for (std::size_t i = 0; i < plan.sizes.size(); ++i) {
      const auto indices = sample_labeled_subset(data.target_train.size(), plan.sizes[i],
                                                 derive_seed(plan.seed, 1000 + r * 100 + i));
      const Dataset labeled = data.target_train.subset(indices);
      auto record = [&](SweepSystem s, const Model& m) {
        const double f1 = test_report(m, data, data.target_test).macro_f1;
        result.f1[static_cast<std::size_t>(s)][i].push_back(f1);
        if (progress) progress(s, plan.sizes[i], r, f1);
      };
      {
        Model m = Model::create(preset.model, data.table.matrix(), train.seed);
        train_supervised(m, train, labeled, data.target_dev);
        record(SweepSystem::kSupervised, m);
      }
      AdaptData adapt_data{&data.source_train, &unlabeled, &data.target_dev, &labeled, nullptr};
      {
        Model m = pretrained;
        TrainConfig c = train;
        c.adversarial = false;
        c.reconstruction = false;
        c.supervised = true;
        adapt(m, c, adapt_data);
        record(SweepSystem::kPretraining, m);
      }
      {
        Model m = pretrained;
        TrainConfig c = train;
        c.supervised = true;
        adapt(m, c, adapt_data);
        record(SweepSystem::kFull, m);
      }
    }
  }
  return result;
}

}  // namespace adda
