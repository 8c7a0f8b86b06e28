// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance              every criterion
//   acceptance 3 7          only the listed criteria
//   acceptance --strict     exit 1 on any failure, including known ones
//
// Without --strict the exit status is 1 only for failures outside kKnownFailing.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "adda/autodiff/ops.hpp"
#include "adda/autodiff/optim.hpp"
#include "adda/experiment/experiment.hpp"
#include "adda/experiment/gradcheck_suite.hpp"
#include "adda/train/losses.hpp"
#include "adda/train/trainer.hpp"

using namespace adda;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  std::ostringstream detail;
  std::vector<std::string> failures;

  bool pass() const { return failures.empty(); }
  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

double top_singular_value(const Tensor& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) m(r, c) = t(r, c);
  }
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

Tensor random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> dist;
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

double mean_of(const std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  return total / static_cast<double>(v.size());
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Everything the synthetic-corpus criteria share.
struct Desk {
  DeskPreset preset;
  PreparedData data;
  double prepare_seconds = 0.0;

  Desk() {
    const auto start = Clock::now();
    preset = desk_preset();
    data = prepare_synthetic(preset.synth, preset.embedding_dim, 1);
    preset.model.classes = data.labels.size();
    prepare_seconds = seconds_since(start);
  }

  AdaptData adapt_data(const Dataset* labeled = nullptr) const {
    return {&data.source_train, &data.target_train, &data.target_dev, labeled, &data.source_dev};
  }
};

constexpr std::uint64_t kSeeds[] = {1, 2, 3};

// Still printed as FAIL; see README, "Known failure".
constexpr int kKnownFailing[] = {8};

struct TimedRun {
  SystemRun run;
  double seconds = 0.0;
};

class Runs {
 public:
  explicit Runs(const Desk& desk) : desk_(desk) {}

  const std::vector<TimedRun>& of(System system) {
    auto& runs = cache_[system];
    if (runs.empty()) {
      for (std::uint64_t seed : kSeeds) {
        const auto start = Clock::now();
        SystemRun run = run_system(system, desk_.data, desk_.preset, seed);
        const double secs = seconds_since(start);
        std::printf("  %-18s seed %llu: macro F1 %s (%.0f s)\n",
                    std::string(system_name(system)).c_str(),
                    static_cast<unsigned long long>(seed), fixed(run.test.macro_f1).c_str(), secs);
        std::fflush(stdout);
        runs.push_back({std::move(run), secs});
      }
    }
    return runs;
  }

  double mean_f1(System system) {
    std::vector<double> f1;
    for (const auto& r : of(system)) f1.push_back(r.run.test.macro_f1);
    return mean_of(f1);
  }

  double seconds(System system) {
    double total = 0.0;
    for (const auto& r : of(system)) total += r.seconds;
    return total;
  }

 private:
  const Desk& desk_;
  std::map<System, std::vector<TimedRun>> cache_;
};

Outcome gradient_integrity() {
  Outcome o;
  const auto start = Clock::now();
  const auto results = run_gradcheck_suite();
  const double secs = seconds_since(start);
  const GradCheckResult* worst = &results.front();
  for (const auto& r : results) {
    if (r.max_relative_error > worst->max_relative_error) worst = &r;
    o.require(r.max_relative_error < 1e-4, r.name + " " + sci(r.max_relative_error));
  }
  o.detail << results.size() << " checks, worst " << sci(worst->max_relative_error) << " ("
           << worst->name << "), " << fixed(secs, 1) << " s";
  o.require(secs < 60.0, "runtime");
  return o;
}

Outcome aggregation_arithmetic() {
  struct Row {
    double f1[4];
    double macro;
  };
  const Row rows[] = {
      {{31.25, 48.04, 25.15, 59.15}, 40.90}, {{26.19, 34.20, 25.74, 54.70}, 35.21},
      {{19.26, 41.39, 25.74, 68.08}, 38.62}, {{22.22, 22.35, 23.06, 57.86}, 31.37},
      {{25.53, 41.02, 30.35, 65.38}, 40.57},
  };
  Outcome o;
  double worst = 0.0;
  for (const Row& r : rows) {
    const double got = macro_f1(r.f1);
    worst = std::max(worst, std::abs(got - r.macro));
    o.detail << fixed(got, 4) << " ";
    o.require(std::abs(got - r.macro) <= 0.005, "row " + fixed(r.macro, 2));
  }
  o.detail << "(max deviation " << fixed(worst, 4) << ")";
  return o;
}

Outcome label_smoothing() {
  Outcome o;
  double worst_entry = 0.0, worst_sum = 0.0;
  for (std::size_t label = 0; label < 4; ++label) {
    const Tensor q = smoothed_target_distribution(label, 0.1, 4);
    double total = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double expected = k == label ? 0.925 : 0.025;
      worst_entry = std::max(worst_entry, std::abs(q[k] - expected));
      total += q[k];
    }
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
  }
  o.require(worst_entry < 1e-15, "entries");
  o.require(worst_sum < 1e-12, "sum");
  std::size_t grid = 0;
  for (int i = 0; i < 750; ++i) {
    const double eps = i / 1000.0;
    for (std::size_t label = 0; label < 4; ++label) {
      const Tensor q = smoothed_target_distribution(label, eps, 4);
      for (std::size_t k = 0; k < 4; ++k) {
        if (k != label && !(q[label] > q[k])) o.require(false, "argmax at eps " + fixed(eps, 3));
      }
      ++grid;
    }
  }
  o.detail << "max entry error " << sci(worst_entry) << ", max |sum-1| " << sci(worst_sum)
           << ", argmax kept on " << grid << " (eps, label) grid points below 0.75";
  return o;
}

struct StopAdapting {};

Outcome spectral_normalization(const Desk& desk) {
  Outcome o;
  // Twenty discriminator steps of real adaptation, one power iteration each.
  TrainConfig train = desk.preset.train;
  train.pretrain_epochs = 1;
  Model m = run_pretrain(desk.data, desk.preset.model, train);
  std::vector<double> sigmas;
  {
    Adapter adapter(m, train, desk.adapt_data());
    std::size_t d_steps = 0;
    adapter.set_observer([&](const StepEvent& e) {
      if (e.step != Step::kDiscriminator || ++d_steps < 20) return;
      Discriminator d = m.discriminator;
      Tape tape;
      d.logits(tape, tape.constant(Tensor::matrix(1, m.target.output_dim())), false, true);
      for (std::size_t l = 0; l < d.layer_count(); ++l) {
        sigmas.push_back(top_singular_value(d.effective_weight(l)));
      }
      throw StopAdapting{};
    });
    try {
      while (!adapter.finished()) adapter.run_epoch();
    } catch (const StopAdapting&) {
    }
  }
  o.require(!sigmas.empty(), "fewer than 20 discriminator steps");
  o.detail << "layer sigma after 20 steps:";
  for (double s : sigmas) {
    o.detail << " " << fixed(s, 4);
    o.require(s >= 0.9 && s <= 1.1, "sigma " + fixed(s, 4));
  }

  // Fixed matrices with a planted top direction; 50 iterations against the SVD.
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (auto [in, out] : {std::pair<std::size_t, std::size_t>{200, 200}, {64, 200}, {200, 2}}) {
    Tensor w = random_matrix(rng, in, out);
    const Tensor a = random_matrix(rng, in, 1), b = random_matrix(rng, 1, out);
    for (std::size_t i = 0; i < in; ++i) {
      for (std::size_t j = 0; j < out; ++j) w(i, j) += 0.5 * a[i] * b[j];
    }
    SpectralState state = init_spectral_state(in, out, rng);
    const double sigma = power_iteration(w, state, 50);
    worst = std::max(worst, std::abs(sigma - top_singular_value(w)));
  }
  o.detail << "; 50-iteration |sigma - svd| max " << sci(worst);
  o.require(worst < 1e-6, "power iteration vs SVD");
  return o;
}

Outcome adaptation_efficacy(const Desk& desk, Runs& runs) {
  Outcome o;
  const double none = runs.mean_f1(System::kNoAdaptation);
  const double full = runs.mean_f1(System::kFullAdaptation);
  std::vector<double> dacc;
  for (const auto& r : runs.of(System::kFullAdaptation)) {
    dacc.push_back(r.run.stage.best().discriminator_accuracy);
  }
  const double d_mean = mean_of(dacc);
  const double secs =
      desk.prepare_seconds + runs.seconds(System::kNoAdaptation) +
      runs.seconds(System::kFullAdaptation);
  o.detail << "full " << fixed(100 * full, 2) << " vs no-adaptation " << fixed(100 * none, 2)
           << " (+" << fixed(100 * (full - none), 2) << " points); D held-out accuracy";
  for (double d : dacc) o.detail << " " << fixed(d, 3);
  o.detail << " (mean " << fixed(d_mean, 3) << "); " << fixed(secs, 0) << " s";
  o.require(full - none >= 0.05, "gain below 5 points");
  o.require(d_mean >= 0.4 && d_mean <= 0.65, "mean D accuracy outside [0.4, 0.65]");
  o.require(secs < 600.0, "runtime");
  return o;
}

Outcome ablation_ordering(Runs& runs) {
  Outcome o;
  const double tie = 0.005;
  const double full = runs.mean_f1(System::kFullAdaptation);
  const double bare = runs.mean_f1(System::kBareAdaptation);
  const double none = runs.mean_f1(System::kNoAdaptation);
  o.detail << "full " << fixed(100 * full, 2) << ", bare " << fixed(100 * bare, 2) << ", none "
           << fixed(100 * none, 2);
  o.require(full >= bare - tie, "full < bare");
  o.require(bare >= none - tie, "bare < none");
  return o;
}

Outcome dann_baseline(const Desk& desk, Runs& runs) {
  Outcome o;
  std::mt19937_64 rng(7);
  bool exact = true;
  for (double lambda : {0.0, 0.1, 1.0, 2.5}) {
    Parameter x{"x", random_matrix(rng, 5, 6)};
    const Tensor upstream = random_matrix(rng, 5, 6);
    Tape tape;
    Var rev = gradient_reversal(tape.param(x, true), lambda);
    exact = exact && rev.value() == x.value;
    const Gradients g = tape.backward(sum(mul(rev, tape.constant(upstream))));
    for (std::size_t i = 0; i < upstream.size(); ++i) {
      exact = exact && g.at(&x)[i] == -lambda * upstream[i];
    }
  }
  o.require(exact, "reversal is not exactly -lambda");

  TrainConfig train = desk.preset.train;
  train.pretrain_epochs = 2;
  train.label_smoothing = false;
  DannConfig dann = desk.preset.dann;
  dann.lambda = 0.0;
  Model joint = Model::create(desk.preset.model, desk.data.table.matrix(), 5);
  Model plain = joint;
  std::vector<std::uint64_t> joint_trace, plain_trace;
  train_dann(joint, train, dann, desk.data.source_train, desk.data.target_train,
             desk.data.target_dev, [&](const StepEvent&) {
               joint_trace.push_back(hash_parameters(joint.source.parameters()) ^
                                     hash_parameters(joint.classifier.parameters()));
             });
  train_source_only(plain, train, dann, desk.data.source_train, desk.data.target_dev,
                    [&](const StepEvent&) {
                      plain_trace.push_back(hash_parameters(plain.source.parameters()) ^
                                            hash_parameters(plain.classifier.parameters()));
                    });
  // Source-only training has no D to compare.
  const ModelHashes j = hash_model(joint), p = hash_model(plain);
  const bool same = !joint_trace.empty() && joint_trace == plain_trace && j.source == p.source &&
                    j.target == p.target && j.classifier == p.classifier;
  o.require(same, "lambda 0 trajectory differs from source-only");

  const double full = runs.mean_f1(System::kFullAdaptation);
  const double baseline = runs.mean_f1(System::kDann);
  o.detail << "reversal exact; lambda 0 identical over " << joint_trace.size()
           << " steps; staged " << fixed(100 * full, 2) << " vs DANN " << fixed(100 * baseline, 2);
  o.require(full >= baseline, "staged < DANN");
  return o;
}

Outcome reconstruction_behavior(const Desk& desk, Runs& runs) {
  Outcome o;
  for (const auto& r : runs.of(System::kFullAdaptation)) {
    std::vector<double> loss;
    for (const auto& e : r.run.stage.epochs) {
      if (!std::isnan(e.loss_recon)) loss.push_back(e.loss_recon);
    }
    std::size_t rises = 0, windows = 0;
    double worst = 0.0;
    for (std::size_t i = 3; i < loss.size(); ++i) {
      const double prev = (loss[i - 3] + loss[i - 2] + loss[i - 1]) / 3.0;
      const double now = (loss[i - 2] + loss[i - 1] + loss[i]) / 3.0;
      ++windows;
      if (now > prev) {
        ++rises;
        worst = std::max(worst, (now - prev) / prev);
      }
    }
    o.detail << "seed " << r.run.seed << ": " << rises << "/" << windows
             << " window-3 rises (largest +" << fixed(100 * worst, 2) << "%, L_recon "
             << fixed(loss.front(), 4) << " -> " << fixed(loss.back(), 4) << "); ";
    o.require(rises == 0, "moving average rises for seed " + std::to_string(r.run.seed));
  }

  // Reconstruction alone on one fixed target batch, M_t starting at M_s.
  TrainConfig train = desk.preset.train;
  train.pretrain_epochs = 3;
  Model m = run_pretrain(desk.data, desk.preset.model, train);
  std::vector<std::size_t> rows(32);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const auto pairs = gather_pairs(desk.data.target_train, rows);
  Tensor reference;
  {
    Tape tape;
    reference = m.source.encode(tape, pairs, false).value();
  }
  std::vector<Parameter*> params = m.target.parameters();
  for (Parameter* p : m.reconstructor.parameters()) params.push_back(p);
  Adam adam(1e-2);
  std::optional<std::size_t> reached;
  double last = 0.0;
  for (std::size_t step = 0; step < 500 && !reached; ++step) {
    Tape tape;
    Var loss = loss_recon(tape, m.reconstructor, m.target.encode(tape, pairs, true),
                          tape.constant(reference), true);
    last = loss.value().item();
    if (last < 1e-3) {
      reached = step;
      break;
    }
    adam.step(params, tape.backward(loss));
  }
  if (reached) {
    o.detail << "fixed-batch fit below 1e-3 at step " << *reached;
  } else {
    o.detail << "fixed-batch fit at 500 steps " << sci(last);
  }
  o.require(reached.has_value(), "fixed-batch fit");
  return o;
}

Outcome supervision_sweep(const Desk& desk) {
  Outcome o;
  const auto start = Clock::now();
  DeskPreset preset = desk.preset;
  preset.train.adapt_epochs = 10;
  std::vector<double> fractions;
  for (int i = 1; i <= 10; ++i) fractions.push_back(i / 10.0);
  const SweepPlan plan =
      SweepPlan::from_fractions(fractions, desk.data.target_train.size(), 3, 1);
  const SweepResult r = run_sweep(desk.data, preset, plan);
  const double secs = seconds_since(start) + desk.prepare_seconds;

  const auto& full = r.f1[static_cast<std::size_t>(SweepSystem::kFull)];
  const auto& pre = r.f1[static_cast<std::size_t>(SweepSystem::kPretraining)];
  const auto& sup = r.f1[static_cast<std::size_t>(SweepSystem::kSupervised)];
  std::vector<double> rhos;
  for (std::size_t rep = 0; rep < r.repeats; ++rep) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < r.sizes.size(); ++i) {
      x.push_back(static_cast<double>(r.sizes[i]));
      y.push_back(full[i][rep]);
    }
    rhos.push_back(spearman(x, y));
  }
  const double rho = mean_of(rhos);
  o.detail << "spearman per repetition";
  for (double v : rhos) o.detail << " " << fixed(v, 3);
  o.detail << " (mean " << fixed(rho, 3) << "); mean F1 full/pre/sup by size:";
  const double tie = 0.005;
  for (std::size_t i = 0; i < r.sizes.size(); ++i) {
    const double f = mean_of(full[i]), p = mean_of(pre[i]), s = mean_of(sup[i]);
    o.detail << " " << r.sizes[i] << ":" << fixed(100 * f, 1) << "/" << fixed(100 * p, 1) << "/"
             << fixed(100 * s, 1);
    o.require(f >= p - tie, "full < pretraining at " + std::to_string(r.sizes[i]));
    o.require(p >= s - tie, "pretraining < supervised at " + std::to_string(r.sizes[i]));
  }
  o.detail << "; " << fixed(secs, 0) << " s";
  o.require(rho > 0.8, "spearman");
  o.require(secs < 1800.0, "runtime");
  return o;
}

Outcome determinism_and_isolation(const Desk& desk) {
  Outcome o;
  TrainConfig train = desk.preset.train;
  train.pretrain_epochs = 2;
  train.adapt_epochs = 2;
  const fs::path dir = fs::temp_directory_path() / "adda_acceptance";
  fs::create_directories(dir);

  std::string bytes[2];
  for (int run = 0; run < 2; ++run) {
    Model m = run_pretrain(desk.data, desk.preset.model, train);
    Adapter adapter(m, train, desk.adapt_data());
    while (!adapter.finished()) adapter.run_epoch();
    const fs::path path = dir / ("run" + std::to_string(run) + ".ckpt");
    save_checkpoint(path, adapter.checkpoint());
    bytes[run] = file_bytes(path);
  }
  o.require(!bytes[0].empty() && bytes[0] == bytes[1], "checkpoints differ");
  o.detail << "two runs wrote identical " << bytes[0].size() << "-byte checkpoints; ";

  std::size_t violations = 0;
  std::map<Step, std::size_t> seen;
  {
    Model m = Model::create(desk.preset.model, desk.data.table.matrix(), train.seed);
    ModelHashes prev = hash_model(m);
    train.pretrain_epochs = 1;
    pretrain(m, train, desk.data.source_train, desk.data.target_dev, [&](const StepEvent& e) {
      const ModelHashes now = hash_model(m);
      ++seen[e.step];
      violations += now.discriminator != prev.discriminator;
      violations += now.reconstructor != prev.reconstructor;
      prev = now;
    });
  }
  for (bool supervised : {false, true}) {
    TrainConfig c = train;
    c.adapt_epochs = 1;
    c.supervised = supervised;
    Model m = run_pretrain(desk.data, desk.preset.model, c);
    std::vector<std::size_t> rows(200);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const Dataset labeled = desk.data.target_train.subset(rows);
    Adapter adapter(m, c, desk.adapt_data(supervised ? &labeled : nullptr));
    const ModelHashes start = hash_model(m);
    ModelHashes prev = start;
    adapter.set_observer([&](const StepEvent& e) {
      const ModelHashes now = hash_model(m);
      ++seen[e.step];
      violations += now.source != start.source;
      const bool d = now.discriminator != prev.discriminator;
      const bool t = now.target != prev.target;
      const bool cl = now.classifier != prev.classifier;
      const bool r = now.reconstructor != prev.reconstructor;
      switch (e.step) {
        case Step::kDiscriminator: violations += t + cl + r; break;
        case Step::kMapping: violations += d + cl + r; break;
        case Step::kReconstruction: violations += d + cl; break;
        case Step::kSupervised: violations += d + r; break;
        default: ++violations;
      }
      prev = now;
    });
    while (!adapter.finished()) adapter.run_epoch();
    adapter.finalize();
    violations += hash_model(m).source != start.source;
    if (!supervised) violations += hash_model(m).classifier != start.classifier;
  }
  o.detail << "steps checked:";
  for (const auto& [step, n] : seen) o.detail << " " << step_name(step) << "=" << n;
  o.detail << "; isolation violations " << violations;
  o.require(violations == 0, "stage isolation");
  o.require(seen[Step::kSupervised] > 0 && seen[Step::kReconstruction] > 0, "missing steps");
  fs::remove_all(dir);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  bool strict = false;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--strict") {
      strict = true;
    } else {
      wanted.insert(std::atoi(argv[i]));
    }
  }
  auto selected = [&](int n) { return wanted.empty() || wanted.count(n) > 0; };

  std::optional<Desk> desk;
  std::optional<Runs> runs;
  auto shared = [&]() -> Desk& {
    if (!desk) {
      desk.emplace();
      runs.emplace(*desk);
    }
    return *desk;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient integrity", gradient_integrity},
      {"macro F1 aggregation", aggregation_arithmetic},
      {"label smoothing", label_smoothing},
      {"spectral normalization", [&] { return spectral_normalization(shared()); }},
      {"adaptation efficacy", [&] { return adaptation_efficacy(shared(), *runs); }},
      {"ablation ordering", [&] {
         shared();
         return ablation_ordering(*runs);
       }},
      {"DANN baseline", [&] { return dann_baseline(shared(), *runs); }},
      {"reconstruction behavior", [&] { return reconstruction_behavior(shared(), *runs); }},
      {"supervision sweep", [&] { return supervision_sweep(shared()); }},
      {"determinism and stage isolation", [&] { return determinism_and_isolation(shared()); }},
  };

  std::size_t failed = 0, unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!selected(n)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::string failures;
    for (const auto& f : o.failures) failures += (failures.empty() ? " | failed: " : "; ") + f;
    if (!o.pass()) {
      ++failed;
      if (std::find(std::begin(kKnownFailing), std::end(kKnownFailing), n) ==
          std::end(kKnownFailing)) {
        ++unexpected;
      }
    }
    std::printf("criterion %2d %s: %s | %s%s\n", n, criteria[i].first.c_str(),
                o.pass() ? "PASS" : "FAIL", o.detail.str().c_str(), failures.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria failed, %zu of them unexpected\n", failed, unexpected);
  return (strict ? failed : unexpected) == 0 ? 0 : 1;
}
