// adda: command-line driver for pre-training, adaptation, the DANN baseline,
// evaluation, supervision sweeps, synthetic corpora and gradient checks.

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "adda/autodiff/optim.hpp"
#include "adda/experiment/gradcheck_suite.hpp"
#include "adda/experiment/run_config.hpp"
#include "adda/eval/report.hpp"
#include "adda/train/checkpoint.hpp"
#include "adda/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace adda;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::string out;
  std::string corpus;
  std::string embeddings;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool data = true) {
  cmd->add_option("--config", c.config_path, "JSON config file (unknown keys are rejected)");
  cmd->add_option("--out", c.out, "Output directory (default: $ADDA_OUTPUT_ROOT/<command>)");
  cmd->add_option("--seed", c.seed, "Training seed");
  if (data) {
    cmd->add_option("--corpus", c.corpus, "Corpus directory; synthesized when omitted");
    cmd->add_option("--embeddings", c.embeddings, "Word-vector file; random when omitted");
  }
}

RunConfig resolve(const Common& c) {
  RunConfig config = c.config_path.empty() ? RunConfig{} : load_run_config(c.config_path);
  if (!c.corpus.empty()) config.corpus = c.corpus;
  if (!c.embeddings.empty()) config.embeddings = c.embeddings;
  if (c.seed) config.preset.train.seed = *c.seed;
  return config;
}

fs::path output_dir(const Common& c, const std::string& command) {
  if (!c.out.empty()) return c.out;
  const char* root = std::getenv("ADDA_OUTPUT_ROOT");
  return fs::path(root != nullptr && *root != '\0' ? root : "runs") / command;
}

PreparedData load_data(RunConfig& config) {
  PreparedData data = load_run_data(config);
  config.preset.model.classes = data.labels.size();
  return data;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

Checkpoint model_checkpoint(const Model& model, const RunConfig& config, const std::string& stage,
                            const StageHistory& history) {
  Checkpoint ckpt;
  const nlohmann::json resolved = config;
  ckpt.config_hash = config_hash(resolved);
  ckpt.seed = config.preset.train.seed;
  ckpt.meta["run"] = resolved;
  ckpt.meta["stage"] = stage;
  ckpt.meta["history"] = history;
  put_model(ckpt, model);
  return ckpt;
}

Model load_model(const fs::path& path, const PreparedData& data, const RunConfig& config) {
  const Checkpoint ckpt = load_checkpoint(path);
  ModelConfig model_config = ckpt.meta.at("model").get<ModelConfig>();
  Model m = Model::create(model_config, data.table.matrix(), config.preset.train.seed);
  get_model(ckpt, m);
  return m;
}

void emit_eval(const fs::path& dir, const Model& model, const PreparedData& data,
               const RunConfig& config, const std::string& name) {
  const nlohmann::json resolved = config;
  const EvalReport report =
      test_report(model, data, data.target_test, config_hash(resolved), config.preset.train.seed);
  write_report(dir / "eval", report);
  write_text(dir / "eval" / "summary.txt", summary_table({{name, report}}));
  std::printf("%s: macro F1 %.2f on %zu target test instances\n", name.c_str(),
              100 * report.macro_f1, report.instances);
}

void finish_stage(const fs::path& dir, const Model& model, const PreparedData& data,
                  const RunConfig& config, const std::string& stage, const StageHistory& history) {
  write_json(dir / "config.json", config);
  write_json(dir / "history.json", history);
  save_checkpoint(dir / "model.ckpt", model_checkpoint(model, config, stage, history));
  emit_eval(dir, model, data, config, stage);
}

Dataset labeled_subset(const std::string& spec, const PreparedData& data, const RunConfig& config) {
  std::size_t size = 0;
  const auto [end, ec] = std::from_chars(spec.data(), spec.data() + spec.size(), size);
  if (ec == std::errc() && end == spec.data() + spec.size()) {
    if (!data.target_train.labeled()) {
      throw DataError("--labeled-subset " + spec + ": the target training split has no labels");
    }
    if (size == 0 || size > data.target_train.size()) {
      throw UsageError("--labeled-subset " + spec + ": size must be in [1, " +
                       std::to_string(data.target_train.size()) + "]");
    }
    const auto indices =
        sample_labeled_subset(data.target_train.size(), size, config.preset.train.seed);
    return data.target_train.subset(indices);
  }
  const auto instances = load_split(spec, data.labels);
  return make_dataset(instances, data.table, data.labels, true);
}

int cmd_pretrain(const Common& c, std::optional<std::size_t> epochs, bool no_smoothing) {
  RunConfig config = resolve(c);
  if (epochs) config.preset.train.pretrain_epochs = *epochs;
  if (no_smoothing) config.preset.train.label_smoothing = false;
  config.preset.train.validate();
  const PreparedData data = load_data(config);
  StageHistory history;
  const Model m = run_pretrain(data, config.preset.model, config.preset.train, &history);
  finish_stage(output_dir(c, "pretrain"), m, data, config, "pretrain", history);
  return kOk;
}

struct AdaptFlags {
  std::string from;
  std::optional<std::size_t> epochs;
  bool no_spectral_norm = false;
  bool no_label_smoothing = false;
  bool no_reconstruction = false;
  std::string labeled;
};

int cmd_adapt(const Common& c, const AdaptFlags& f) {
  if (!f.from.empty() && f.no_label_smoothing) {
    throw UsageError(
        "--no-label-smoothing changes pre-training and cannot be combined with --from");
  }
  RunConfig config = resolve(c);
  TrainConfig& t = config.preset.train;
  if (f.epochs) t.adapt_epochs = *f.epochs;
  if (f.no_spectral_norm) t.spectral_norm = false;
  if (f.no_label_smoothing) t.label_smoothing = false;
  if (f.no_reconstruction) t.reconstruction = false;
  t.supervised = !f.labeled.empty();
  t.validate();
  const PreparedData data = load_data(config);
  const fs::path dir = output_dir(c, "adapt");

  Model m;
  if (f.from.empty()) {
    StageHistory pre;
    m = run_pretrain(data, config.preset.model, t, &pre);
    write_json(dir / "pretrain_history.json", pre);
    save_checkpoint(dir / "pretrain.ckpt", model_checkpoint(m, config, "pretrain", pre));
  } else {
    m = load_model(f.from, data, config);
    config.preset.model = m.config;
  }
  std::optional<Dataset> labeled;
  if (t.supervised) labeled = labeled_subset(f.labeled, data, config);
  const Dataset unlabeled = data.target_train.without_labels();
  const AdaptData adapt_data{&data.source_train, &unlabeled, &data.target_dev,
                             labeled ? &*labeled : nullptr,
                             data.source_dev.empty() ? nullptr : &data.source_dev};
  const StageHistory history = adapt(m, t, adapt_data);
  finish_stage(dir, m, data, config, "adapt", history);
  return kOk;
}

int cmd_dann(const Common& c, std::optional<std::size_t> epochs, std::optional<double> lambda) {
  RunConfig config = resolve(c);
  if (epochs) config.preset.train.pretrain_epochs = *epochs;
  if (lambda) config.preset.dann.lambda = *lambda;
  config.preset.train.label_smoothing = false;
  config.preset.train.validate();
  const PreparedData data = load_data(config);
  Model m = Model::create(config.preset.model, data.table.matrix(), config.preset.train.seed);
  const StageHistory history = train_dann(m, config.preset.train, config.preset.dann,
                                          data.source_train, data.target_train, data.target_dev);
  finish_stage(output_dir(c, "dann"), m, data, config, "dann", history);
  return kOk;
}

int cmd_eval(const Common& c, const std::string& checkpoint, const std::string& split_name) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  RunConfig config;
  if (ckpt.meta.contains("run")) ckpt.meta.at("run").get_to(config);
  if (!c.config_path.empty()) config = load_run_config(c.config_path);
  if (!c.corpus.empty()) config.corpus = c.corpus;
  if (!c.embeddings.empty()) config.embeddings = c.embeddings;
  const PreparedData data = load_data(config);
  const Model m = load_model(checkpoint, data, config);

  const Dataset* split = nullptr;
  if (split_name == "target-test") split = &data.target_test;
  if (split_name == "target-dev") split = &data.target_dev;
  if (split_name == "source-dev") split = &data.source_dev;
  if (split == nullptr) throw UsageError("--split must be target-test, target-dev or source-dev");
  if (!split->labeled()) throw DataError("split '" + split_name + "' has no labels");

  const fs::path dir = output_dir(c, "eval");
  const EvalReport report = test_report(m, data, *split, ckpt.config_hash, ckpt.seed);
  write_report(dir, report);
  const std::string stage = ckpt.meta.value("stage", std::string("model"));
  write_text(dir / "summary.txt", summary_table({{stage, report}}));
  std::cout << summary_table({{stage, report}});
  return kOk;
}

int cmd_sweep(const Common& c, const std::string& fractions, std::optional<std::size_t> repeats) {
  RunConfig config = resolve(c);
  if (!fractions.empty()) config.fractions = fractions;
  if (repeats) config.repeats = *repeats;
  config.preset.train.adapt_epochs = config.sweep_adapt_epochs;
  config.preset.train.validate();
  const PreparedData data = load_data(config);
  const SweepPlan plan = SweepPlan::from_fractions(
      parse_fractions(config.fractions), data.target_train.size(), config.repeats,
      config.sweep_seed);
  const fs::path dir = output_dir(c, "sweep");
  write_json(dir / "config.json", config);

  std::string raw = "system,size,repeat,macro_f1\n";
  const SweepResult result = run_sweep(
      data, config.preset, plan, [&](SweepSystem s, std::size_t size, std::size_t rep, double f1) {
        const std::string line = std::string(sweep_system_name(s)) + "," + std::to_string(size) +
                                 "," + std::to_string(rep) + "," + format_number(f1);
        raw += line + "\n";
        std::cout << line << std::endl;
      });
  write_text(dir / "sweep_raw.csv", raw);

  std::vector<Series> series;
  std::string summary;
  for (std::size_t s = 0; s < result.f1.size(); ++s) {
    Series line{std::string(sweep_system_name(static_cast<SweepSystem>(s))), {}, {}};
    std::vector<double> sizes, means;
    for (std::size_t i = 0; i < result.sizes.size(); ++i) {
      line.x.push_back(static_cast<double>(result.sizes[i]));
      line.y.push_back(mean_and_standard_error(result.f1[s][i]));
      sizes.push_back(line.x.back());
      means.push_back(line.y.back().mean);
    }
    summary += line.name + ": spearman(size, mean macro F1) = " +
               format_number(sizes.size() > 1 ? spearman(sizes, means) : 0.0) + "\n";
    series.push_back(std::move(line));
  }
  write_text(dir / "sweep.csv", series_csv(series, "size"));
  write_text(dir / "sweep.svg", series_svg(series, "Macro F1 vs labeled target subset size",
                                           "labeled target instances", "macro F1"));
  write_text(dir / "summary.txt", summary);
  std::cout << summary;
  return kOk;
}

int cmd_synth(const Common& c, std::optional<std::uint64_t> seed) {
  RunConfig config = c.config_path.empty() ? RunConfig{} : load_run_config(c.config_path);
  if (seed) config.preset.synth.seed = *seed;
  const fs::path dir = output_dir(c, "synth");
  write_corpus(dir, synth_generate(config.preset.synth));
  write_json(dir / "synth_config.json", config.preset.synth);
  std::cout << "wrote synthetic corpus to " << dir.string() << "\n";
  return kOk;
}

int cmd_gradcheck(double tolerance) {
  const auto results = run_gradcheck_suite();
  bool ok = true;
  std::printf("%-22s %10s %14s  %s\n", "check", "entries", "max rel err", "worst parameter");
  for (const auto& r : results) {
    const bool pass = r.max_relative_error < tolerance;
    ok = ok && pass;
    std::printf("%-22s %10zu %14.3e  %s%s\n", r.name.c_str(), r.entries_checked,
                r.max_relative_error, r.worst_parameter.c_str(), pass ? "" : "  FAIL");
  }
  std::printf("%s: %zu checks, tolerance %.1e\n", ok ? "PASS" : "FAIL", results.size(), tolerance);
  return ok ? kOk : kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial domain adaptation for sequence-pair classification"};
  app.require_subcommand(1);

  Common common;
  std::optional<std::size_t> epochs;

  auto* pretrain = app.add_subcommand("pretrain", "Train M_s and C on labeled source data");
  add_common(pretrain, common);
  pretrain->add_option("--epochs", epochs, "Maximum pre-training epochs");
  bool pre_no_smoothing = false;
  pretrain->add_flag("--no-label-smoothing", pre_no_smoothing, "Plain cross-entropy");

  AdaptFlags af;
  auto* adapt_cmd = app.add_subcommand("adapt", "Adversarially adapt M_t to the target domain");
  add_common(adapt_cmd, common);
  adapt_cmd->add_option("--from", af.from, "Pre-trained checkpoint; pre-trains when omitted");
  adapt_cmd->add_option("--epochs", af.epochs, "Maximum adaptation epochs");
  adapt_cmd->add_flag("--no-spectral-norm", af.no_spectral_norm, "Plain discriminator weights");
  adapt_cmd->add_flag("--no-label-smoothing", af.no_label_smoothing,
                      "Pre-train without label smoothing");
  adapt_cmd->add_flag("--no-reconstruction", af.no_reconstruction, "Drop the reconstruction loss");
  adapt_cmd->add_option("--labeled-subset", af.labeled,
                        "Labeled target data: a split file, or a size sampled from target-train");

  std::optional<double> lambda;
  auto* dann = app.add_subcommand("dann", "Train the gradient-reversal baseline");
  add_common(dann, common);
  dann->add_option("--epochs", epochs, "Maximum epochs");
  dann->add_option("--lambda", lambda, "Gradient-reversal weight");

  std::string checkpoint, split = "target-test";
  auto* eval = app.add_subcommand("eval", "Score a checkpoint");
  add_common(eval, common);
  eval->add_option("--checkpoint", checkpoint, "model.ckpt to evaluate")->required();
  eval->add_option("--split", split, "target-test, target-dev or source-dev");

  std::string fractions;
  std::optional<std::size_t> repeats;
  auto* sweep = app.add_subcommand("sweep", "Macro F1 against labeled target subset size");
  add_common(sweep, common);
  sweep->add_option("--fractions", fractions, "\"a..b\" in steps of 0.1, or a comma list");
  sweep->add_option("--repeats", repeats, "Repetitions per size");

  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "Write a synthetic two-domain corpus");
  synth->add_option("--config", common.config_path, "JSON config file; its synth section is used");
  synth->add_option("--out", common.out, "Output directory");
  synth->add_option("--seed", synth_seed, "Generator seed");

  double tolerance = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--tolerance", tolerance, "Maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*pretrain) return cmd_pretrain(common, epochs, pre_no_smoothing);
    if (*adapt_cmd) return cmd_adapt(common, af);
    if (*dann) return cmd_dann(common, epochs, lambda);
    if (*eval) return cmd_eval(common, checkpoint, split);
    if (*sweep) return cmd_sweep(common, fractions, repeats);
    if (*synth) return cmd_synth(common, synth_seed);
    if (*gradcheck) return cmd_gradcheck(tolerance);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
