#include "adda/train/model.hpp"

#include <cstring>
#include <stdexcept>

#include "adda/util/hash.hpp"

namespace adda {

Model Model::create(const ModelConfig& config, const Tensor& embeddings, std::uint64_t seed) {
  Model m;
  m.config = config;
  m.source = Encoder(config.encoder, embeddings, derive_seed(seed, 1));
  m.target = m.source;
  m.classifier = Classifier(m.source.output_dim(), config.classes, derive_seed(seed, 2));
  m.discriminator =
      Discriminator(m.source.output_dim(), config.discriminator, derive_seed(seed, 3));
  m.reconstructor =
      Reconstructor(m.source.output_dim(), config.reconstructor, derive_seed(seed, 4));
  return m;
}

std::uint64_t hash_parameters(std::span<const Parameter* const> params) {
  std::uint64_t h = kFnvOffset;
  for (const Parameter* p : params) {
    h = fnv1a(p->name, h);
    for (std::size_t d : p->value.shape()) {
      h = fnv1a(std::span(reinterpret_cast<const unsigned char*>(&d), sizeof d), h);
    }
    const auto data = p->value.data();
    h = fnv1a(std::span(reinterpret_cast<const unsigned char*>(data.data()),
                        data.size() * sizeof(double)),
              h);
  }
  return h;
}

ModelHashes hash_model(const Model& m) {
  ModelHashes h;
  h.source = hash_parameters(m.source.parameters());
  h.target = hash_parameters(m.target.parameters());
  h.classifier = hash_parameters(m.classifier.parameters());
  h.discriminator = hash_parameters(m.discriminator.parameters());
  h.reconstructor = hash_parameters(m.reconstructor.parameters());
  return h;
}

void copy_values(std::span<Parameter* const> dst, std::span<const Parameter* const> src) {
  if (dst.size() != src.size()) throw std::invalid_argument("copy_values: bundle size mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i]->value.shape() != src[i]->value.shape()) {
      throw ShapeError("copy_values: shape mismatch for '" + dst[i]->name + "'");
    }
    dst[i]->value = src[i]->value;
  }
}

}  // namespace adda
