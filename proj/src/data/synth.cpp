#include "adda/data/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

namespace adda {
namespace {

std::vector<double> normalized_ratios(const std::vector<double>& ratios, std::size_t k,
                                      const char* which) {
  if (ratios.empty()) return std::vector<double>(k, 1.0 / static_cast<double>(k));
  if (ratios.size() != k) {
    throw DataError(std::string("synth: ") + which + " ratios list " +
                    std::to_string(ratios.size()) + " entries for " + std::to_string(k) +
                    " classes");
  }
  double total = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw DataError(std::string("synth: ") + which + " ratios must be positive");
    }
    total += r;
  }
  std::vector<double> out;
  for (double r : ratios) out.push_back(r / total);
  return out;
}

void validate(const SynthConfig& c) {
  if (c.classes < 2) throw DataError("synth: need at least 2 classes");
  if (c.content_tokens_per_class == 0) throw DataError("synth: content_tokens_per_class is 0");
  if (c.shared_tokens == 0 && c.content_signal < 1.0) {
    throw DataError("synth: shared_tokens is 0 but content_signal < 1");
  }
  if (c.markers_per_class == 0) throw DataError("synth: markers_per_class is 0");
  if (c.connective_strength < 0.0 || c.connective_strength > 1.0) {
    throw DataError("synth: connective_strength outside [0, 1]");
  }
  if (c.content_signal < 0.0 || c.content_signal > 1.0) {
    throw DataError("synth: content_signal outside [0, 1]");
  }
  if (c.min_length == 0 || c.min_length > c.max_length) {
    throw DataError("synth: need 1 <= min_length <= max_length");
  }
}

std::string content_token(std::size_t cls, std::size_t index, bool second) {
  return (second ? "d" : "c") + std::to_string(cls) + "_" + std::to_string(index);
}

std::string shared_token(std::size_t index) { return "w" + std::to_string(index); }

class Generator {
 public:
  Generator(const SynthConfig& config, std::uint64_t stream)
      : config_(config),
        labels_(LabelSet::for_classes(config.classes)),
        rng_(config.seed * 0x9E3779B97F4A7C15ULL + stream) {}

  std::vector<Instance> split(std::string_view name, std::size_t count, Domain domain,
                              const std::vector<double>& ratios) {
    std::discrete_distribution<std::size_t> pick_class(ratios.begin(), ratios.end());
    std::vector<Instance> out;
    out.reserve(count);
    char id[64];
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t cls = pick_class(rng_);
      Instance inst;
      inst.arg1 = argument(cls, false);
      inst.arg2 = argument(cls, config_.separate_argument_content);
      if (domain == Domain::kSource) {
        std::size_t marker_class = cls;
        if (!std::bernoulli_distribution(config_.connective_strength)(rng_)) {
          marker_class = uniform(config_.classes);
        }
        for (auto* arg : {&inst.arg1, &inst.arg2}) {
          const std::size_t at = uniform(arg->size() + 1);
          arg->insert(arg->begin() + static_cast<std::ptrdiff_t>(at),
                      marker_token(marker_class, uniform(config_.markers_per_class)));
        }
      }
      inst.label = labels_.name(cls);
      inst.domain = domain;
      std::snprintf(id, sizeof(id), "%s-%06zu", std::string(name).c_str(), i);
      inst.id = id;
      out.push_back(std::move(inst));
    }
    return out;
  }

 private:
  std::size_t uniform(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

  std::vector<std::string> argument(std::size_t cls, bool second) {
    const std::size_t len =
        std::uniform_int_distribution<std::size_t>(config_.min_length, config_.max_length)(rng_);
    std::vector<std::string> tokens;
    std::bernoulli_distribution signal(config_.content_signal);
    for (std::size_t i = 0; i < len; ++i) {
      if (signal(rng_)) {
        tokens.push_back(content_token(cls, uniform(config_.content_tokens_per_class), second));
      } else {
        tokens.push_back(shared_token(uniform(config_.shared_tokens)));
      }
    }
    return tokens;
  }

  const SynthConfig& config_;
  LabelSet labels_;
  std::mt19937_64 rng_;
};

}  // namespace

std::string marker_token(std::size_t cls, std::size_t index) {
  return "m" + std::to_string(cls) + "_" + std::to_string(index);
}

bool is_marker_token(const std::string& token) {
  return token.size() > 1 && token[0] == 'm' && std::isdigit(static_cast<unsigned char>(token[1]));
}

Corpus synth_generate(const SynthConfig& config) {
  validate(config);
  const auto source = normalized_ratios(config.source_ratios, config.classes, "source");
  const auto target = normalized_ratios(config.target_ratios, config.classes, "target");
  Corpus corpus;
  corpus.labels = LabelSet::for_classes(config.classes);
  struct Plan {
    std::string_view name;
    std::size_t count;
    Domain domain;
  };
  const Plan plans[] = {
      {split::kSourceTrain, config.source_train, Domain::kSource},
      {split::kSourceDev, config.source_dev, Domain::kSource},
      {split::kTargetTrain, config.target_train, Domain::kTarget},
      {split::kTargetDev, config.target_dev, Domain::kTarget},
      {split::kTargetTest, config.target_test, Domain::kTarget},
  };
  std::uint64_t stream = 0;
  for (const Plan& p : plans) {
    Generator gen(config, ++stream);
    corpus.splits.emplace(std::string(p.name),
                          gen.split(p.name, p.count, p.domain,
                                    p.domain == Domain::kSource ? source : target));
  }
  return corpus;
}

std::vector<std::size_t> sample_labeled_subset(std::size_t population, std::size_t size,
                                               std::uint64_t seed) {
  if (size == 0) throw DataError("labeled subset size must be positive");
  if (size > population) {
    throw DataError("labeled subset size " + std::to_string(size) + " exceeds the " +
                    std::to_string(population) + " available target-train instances");
  }
  std::vector<std::size_t> index(population);
  std::iota(index.begin(), index.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `size` slots become the sample.
  for (std::size_t i = 0; i < size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, population - 1);
    std::swap(index[i], index[pick(rng)]);
  }
  index.resize(size);
  std::sort(index.begin(), index.end());
  return index;
}

SweepPlan SweepPlan::from_fractions(const std::vector<double>& fractions,
                                    std::size_t population, std::size_t repeats,
                                    std::uint64_t seed) {
  SweepPlan plan;
  plan.repeats = repeats;
  plan.seed = seed;
  for (double f : fractions) {
    if (!(f > 0.0) || f > 1.0) throw DataError("sweep fraction outside (0, 1]");
    const double size = f * static_cast<double>(population);
    plan.sizes.push_back(static_cast<std::size_t>(std::llround(size)));
  }
  plan.validate(population);
  return plan;
}

void SweepPlan::validate(std::size_t population) const {
  if (sizes.empty()) throw DataError("sweep plan has no sizes");
  if (repeats == 0) throw DataError("sweep plan needs at least one repetition");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw DataError("sweep size 0");
    if (sizes[i] > population) {
      throw DataError("sweep size " + std::to_string(sizes[i]) + " exceeds target-train size " +
                      std::to_string(population));
    }
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw DataError("sweep sizes must strictly increase");
  }
}

std::vector<double> parse_fractions(const std::string& spec) {
  std::vector<double> out;
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    const double lo = std::stod(spec.substr(0, dots));
    const double hi = std::stod(spec.substr(dots + 2));
    if (!(lo > 0.0) || hi > 1.0 || lo > hi) throw DataError("bad fraction range '" + spec + "'");
    for (long k = std::lround(lo * 10.0); k <= std::lround(hi * 10.0); ++k) {
      out.push_back(static_cast<double>(k) / 10.0);
    }
    return out;
  }
  std::stringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw DataError("bad fraction '" + item + "'");
    }
  }
  if (out.empty()) throw DataError("empty fraction list");
  return out;
}

}  // namespace adda
