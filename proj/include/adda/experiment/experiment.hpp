#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adda/dann/dann.hpp"
#include "adda/data/synth.hpp"
#include "adda/eval/metrics.hpp"

namespace adda {

/// Encoded splits of one corpus.
struct PreparedData {
  LabelSet labels;
  EmbeddingTable table;
  Dataset source_train;
  Dataset source_dev;
  Dataset target_train;  // labels kept for subset sampling; adaptation ignores them
  Dataset target_dev;
  Dataset target_test;
};

/// Vocabulary from the training splits, then every split mapped through `table`.
PreparedData prepare_data(const Corpus& corpus, EmbeddingTable table);

/// Synthetic corpus plus random embeddings of width `embedding_dim`.
PreparedData prepare_synthetic(const SynthConfig& synth, std::size_t embedding_dim,
                               std::uint64_t embedding_seed);

/// Reduced widths and desk-scale learning rates for the synthetic corpus.
struct DeskPreset {
  SynthConfig synth;
  std::size_t embedding_dim = 32;
  ModelConfig model;
  TrainConfig train;
  DannConfig dann;
};
DeskPreset desk_preset();

/// Systems compared on the synthetic corpus.
enum class System { kNoAdaptation, kBareAdaptation, kFullAdaptation, kDann };
std::string_view system_name(System system);

struct SystemRun {
  System system;
  std::uint64_t seed = 0;
  EvalReport test;
  StageHistory pretrain;
  StageHistory stage;  // adaptation or DANN history; empty for kNoAdaptation
};

/// Pre-trains with (label_smoothing) and returns the model, M_t = M_s.
Model run_pretrain(const PreparedData& data, const ModelConfig& model, const TrainConfig& train,
                   StageHistory* history = nullptr);

EvalReport test_report(const Model& model, const PreparedData& data, const Dataset& split,
                       std::uint64_t config_hash = 0, std::uint64_t seed = 0);

/// Runs one system end to end for one seed.
SystemRun run_system(System system, const PreparedData& data, const DeskPreset& preset,
                     std::uint64_t seed);

/// The three curves of the supervision sweep.
enum class SweepSystem { kSupervised, kPretraining, kFull };
std::string_view sweep_system_name(SweepSystem system);

struct SweepResult {
  std::vector<std::size_t> sizes;
  std::size_t repeats = 0;
  /// f1[system][size index][repeat], macro F1 on target test in [0, 1].
  std::vector<std::vector<std::vector<double>>> f1;
};

using SweepProgress = std::function<void(SweepSystem, std::size_t size, std::size_t repeat,
                                         double f1)>;

/// Labeled subsets are drawn per (size, repeat) from the target training split;
/// the whole split stays in use as unlabeled adaptation data.
SweepResult run_sweep(const PreparedData& data, const DeskPreset& preset, const SweepPlan& plan,
                      const SweepProgress& progress = {});

}  // namespace adda
