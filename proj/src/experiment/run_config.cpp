#include "adda/experiment/run_config.hpp"

#include <fstream>
#include <stdexcept>

namespace adda {
namespace {

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = {{"classes", c.classes},
       {"content_tokens_per_class", c.content_tokens_per_class},
       {"shared_tokens", c.shared_tokens},
       {"markers_per_class", c.markers_per_class},
       {"connective_strength", c.connective_strength},
       {"content_signal", c.content_signal},
       {"separate_argument_content", c.separate_argument_content},
       {"min_length", c.min_length},
       {"max_length", c.max_length},
       {"source_train", c.source_train},
       {"source_dev", c.source_dev},
       {"target_train", c.target_train},
       {"target_dev", c.target_dev},
       {"target_test", c.target_test},
       {"source_ratios", c.source_ratios},
       {"target_ratios", c.target_ratios},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  reject_unknown_keys(j,
                      {"classes", "content_tokens_per_class", "shared_tokens",
                       "markers_per_class", "connective_strength", "content_signal",
                       "separate_argument_content", "min_length", "max_length", "source_train",
                       "source_dev", "target_train", "target_dev", "target_test",
                       "source_ratios", "target_ratios", "seed"},
                      "synth");
  read(j, "classes", c.classes);
  read(j, "content_tokens_per_class", c.content_tokens_per_class);
  read(j, "shared_tokens", c.shared_tokens);
  read(j, "markers_per_class", c.markers_per_class);
  read(j, "connective_strength", c.connective_strength);
  read(j, "content_signal", c.content_signal);
  read(j, "separate_argument_content", c.separate_argument_content);
  read(j, "min_length", c.min_length);
  read(j, "max_length", c.max_length);
  read(j, "source_train", c.source_train);
  read(j, "source_dev", c.source_dev);
  read(j, "target_train", c.target_train);
  read(j, "target_dev", c.target_dev);
  read(j, "target_test", c.target_test);
  read(j, "source_ratios", c.source_ratios);
  read(j, "target_ratios", c.target_ratios);
  read(j, "seed", c.seed);
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"data",
        {{"corpus", c.corpus},
         {"embeddings", c.embeddings},
         {"embedding_dim", c.preset.embedding_dim},
         {"embedding_seed", c.embedding_seed}}},
       {"synth", c.preset.synth},
       {"model", c.preset.model},
       {"train", c.preset.train},
       {"dann", c.preset.dann},
       {"sweep",
        {{"fractions", c.fractions},
         {"repeats", c.repeats},
         {"seed", c.sweep_seed},
         {"adapt_epochs", c.sweep_adapt_epochs}}}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  reject_unknown_keys(j, {"data", "synth", "model", "train", "dann", "sweep"}, "config");
  if (j.contains("data")) {
    const auto& d = j["data"];
    reject_unknown_keys(d, {"corpus", "embeddings", "embedding_dim", "embedding_seed"}, "data");
    read(d, "corpus", c.corpus);
    read(d, "embeddings", c.embeddings);
    read(d, "embedding_dim", c.preset.embedding_dim);
    read(d, "embedding_seed", c.embedding_seed);
  }
  if (j.contains("synth")) from_json(j["synth"], c.preset.synth);
  if (j.contains("model")) from_json(j["model"], c.preset.model);
  if (j.contains("train")) from_json(j["train"], c.preset.train);
  if (j.contains("dann")) from_json(j["dann"], c.preset.dann);
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    reject_unknown_keys(s, {"fractions", "repeats", "seed", "adapt_epochs"}, "sweep");
    read(s, "fractions", c.fractions);
    read(s, "repeats", c.repeats);
    read(s, "seed", c.sweep_seed);
    read(s, "adapt_epochs", c.sweep_adapt_epochs);
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path);
  RunConfig config;
  try {
    from_json(nlohmann::json::parse(in), config);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  return config;
}

PreparedData load_run_data(const RunConfig& config) {
  Corpus corpus = config.corpus.empty() ? synth_generate(config.preset.synth)
                                        : load_corpus(config.corpus);
  const Vocabulary vocab = build_vocabulary(corpus);
  EmbeddingTable table =
      config.embeddings.empty()
          ? random_embeddings(vocab, config.preset.embedding_dim, config.embedding_seed)
          : load_embeddings(config.embeddings, &vocab, config.preset.embedding_dim,
                            config.embedding_seed);
  return prepare_data(corpus, std::move(table));
}

}  // namespace adda
