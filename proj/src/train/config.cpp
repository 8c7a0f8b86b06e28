#include "adda/train/config.hpp"

#include <stdexcept>
#include <string>

#include "adda/util/hash.hpp"

namespace adda {
namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& field) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    field = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(std::string("config: key '") + key + "' has the wrong type");
  }
}

}  // namespace

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const char* where) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) known = known || it.key() == key;
    if (!known) {
      throw std::invalid_argument(std::string(where) + ": unknown key '" + it.key() + "'");
    }
  }
}

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string("config: ") + name + " must be > 0");
  };
  positive(lr_pretrain, "lr_pretrain");
  positive(lr_adversarial, "lr_adversarial");
  positive(lr_discriminator, "lr_discriminator");
  positive(lr_reconstruction, "lr_reconstruction");
  positive(lr_supervised, "lr_supervised");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("config: epsilon must lie in [0, 1)");
  }
  if (batch_size == 0) throw std::invalid_argument("config: batch_size must be > 0");
  if (patience == 0) throw std::invalid_argument("config: patience must be > 0");
  if (adversarial_weight < 0.0 || reconstruction_weight < 0.0 || supervised_weight < 0.0) {
    throw std::invalid_argument("config: loss weights must be >= 0");
  }
}

void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = {{"hidden", c.hidden},
       {"projection", c.projection},
       {"attention", c.attention},
       {"max_length", c.max_length},
       {"train_embeddings", c.train_embeddings}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
  reject_unknown_keys(j, {"hidden", "projection", "attention", "max_length", "train_embeddings"},
                      "encoder");
  read(j, "hidden", c.hidden);
  read(j, "projection", c.projection);
  read(j, "attention", c.attention);
  read(j, "max_length", c.max_length);
  read(j, "train_embeddings", c.train_embeddings);
}

void to_json(nlohmann::json& j, const DiscriminatorConfig& c) {
  j = {{"hidden", c.hidden},
       {"spectral_norm", c.spectral_norm},
       {"power_iterations", c.power_iterations},
       {"leaky_slope", c.leaky_slope}};
}

void from_json(const nlohmann::json& j, DiscriminatorConfig& c) {
  reject_unknown_keys(j, {"hidden", "spectral_norm", "power_iterations", "leaky_slope"},
                      "discriminator");
  read(j, "hidden", c.hidden);
  read(j, "spectral_norm", c.spectral_norm);
  read(j, "power_iterations", c.power_iterations);
  read(j, "leaky_slope", c.leaky_slope);
}

void to_json(nlohmann::json& j, const ReconstructorConfig& c) {
  j = {{"hidden", c.hidden}, {"leaky_slope", c.leaky_slope}};
}

void from_json(const nlohmann::json& j, ReconstructorConfig& c) {
  reject_unknown_keys(j, {"hidden", "leaky_slope"}, "reconstructor");
  read(j, "hidden", c.hidden);
  read(j, "leaky_slope", c.leaky_slope);
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"encoder", c.encoder},
       {"discriminator", c.discriminator},
       {"reconstructor", c.reconstructor},
       {"classes", c.classes}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  reject_unknown_keys(j, {"encoder", "discriminator", "reconstructor", "classes"}, "model");
  if (j.contains("encoder")) from_json(j["encoder"], c.encoder);
  if (j.contains("discriminator")) from_json(j["discriminator"], c.discriminator);
  if (j.contains("reconstructor")) from_json(j["reconstructor"], c.reconstructor);
  read(j, "classes", c.classes);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"lr_pretrain", c.lr_pretrain},
       {"lr_adversarial", c.lr_adversarial},
       {"lr_discriminator", c.lr_discriminator},
       {"lr_reconstruction", c.lr_reconstruction},
       {"lr_supervised", c.lr_supervised},
       {"epsilon", c.epsilon},
       {"batch_size", c.batch_size},
       {"pretrain_epochs", c.pretrain_epochs},
       {"adapt_epochs", c.adapt_epochs},
       {"patience", c.patience},
       {"seed", c.seed},
       {"adversarial", c.adversarial},
       {"spectral_norm", c.spectral_norm},
       {"label_smoothing", c.label_smoothing},
       {"reconstruction", c.reconstruction},
       {"supervised", c.supervised},
       {"adversarial_weight", c.adversarial_weight},
       {"reconstruction_weight", c.reconstruction_weight},
       {"supervised_weight", c.supervised_weight}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  reject_unknown_keys(
      j,
      {"lr_pretrain", "lr_adversarial", "lr_discriminator", "lr_reconstruction", "lr_supervised",
       "epsilon", "batch_size", "pretrain_epochs", "adapt_epochs", "patience", "seed",
       "adversarial", "spectral_norm", "label_smoothing", "reconstruction", "supervised",
       "adversarial_weight", "reconstruction_weight", "supervised_weight"},
      "train");
  read(j, "lr_pretrain", c.lr_pretrain);
  read(j, "lr_adversarial", c.lr_adversarial);
  read(j, "lr_discriminator", c.lr_discriminator);
  read(j, "lr_reconstruction", c.lr_reconstruction);
  read(j, "lr_supervised", c.lr_supervised);
  read(j, "epsilon", c.epsilon);
  read(j, "batch_size", c.batch_size);
  read(j, "pretrain_epochs", c.pretrain_epochs);
  read(j, "adapt_epochs", c.adapt_epochs);
  read(j, "patience", c.patience);
  read(j, "seed", c.seed);
  read(j, "adversarial", c.adversarial);
  read(j, "spectral_norm", c.spectral_norm);
  read(j, "label_smoothing", c.label_smoothing);
  read(j, "reconstruction", c.reconstruction);
  read(j, "supervised", c.supervised);
  read(j, "adversarial_weight", c.adversarial_weight);
  read(j, "reconstruction_weight", c.reconstruction_weight);
  read(j, "supervised_weight", c.supervised_weight);
}

std::uint64_t config_hash(const nlohmann::json& resolved) { return fnv1a(resolved.dump()); }

}  // namespace adda
