#include "adda/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace adda {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'A', 'D', 'D', 'A', 'C', 'K', 'P', 'T'};

template <typename T>
void put_raw(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get_raw(std::istream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
    throw CheckpointError("checkpoint " + path.string() + ": truncated file");
  }
  return value;
}

std::string read_string(std::istream& in, std::uint64_t length,
                        const std::filesystem::path& path) {
  std::string s(length, '\0');
  if (length > 0 && !in.read(s.data(), static_cast<std::streamsize>(length))) {
    throw CheckpointError("checkpoint " + path.string() + ": truncated file");
  }
  return s;
}

}  // namespace

void Checkpoint::put(const std::string& prefix, std::span<const Parameter* const> params) {
  for (const Parameter* p : params) tensors[prefix + p->name] = p->value;
}

void Checkpoint::get(const std::string& prefix, std::span<Parameter* const> params) const {
  for (Parameter* p : params) {
    const Tensor& t = tensor(prefix + p->name);
    if (t.shape() != p->value.shape()) {
      throw CheckpointError("checkpoint entry '" + prefix + p->name + "' has shape " +
                            shape_string(t.shape()) + ", expected " +
                            shape_string(p->value.shape()));
    }
    p->value = t;
  }
}

const Tensor& Checkpoint::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw CheckpointError("checkpoint has no entry '" + name + "'");
  return it->second;
}

void Checkpoint::put_adam(const std::string& prefix, const Adam& adam) {
  meta["optimizers"][prefix] = {{"kind", "adam"}, {"steps", adam.steps()}, {"lr", adam.lr()}};
  for (const auto& [name, m] : adam.moments()) {
    tensors[prefix + "/" + name + "/first"] = m.first;
    tensors[prefix + "/" + name + "/second"] = m.second;
  }
}

void Checkpoint::get_adam(const std::string& prefix, Adam& adam) const {
  const auto& info = meta.at("optimizers").at(prefix);
  std::map<std::string, AdamMoments> moments;
  const std::string lead = prefix + "/";
  for (auto it = tensors.lower_bound(lead); it != tensors.end(); ++it) {
    const std::string& key = it->first;
    if (key.compare(0, lead.size(), lead) != 0) break;
    const auto slash = key.rfind('/');
    const std::string name = key.substr(lead.size(), slash - lead.size());
    const std::string which = key.substr(slash + 1);
    if (which == "first") {
      moments[name].first = it->second;
    } else if (which == "second") {
      moments[name].second = it->second;
    }
  }
  adam.set_lr(info.at("lr").get<double>());
  adam.restore(info.at("steps").get<std::uint64_t>(), std::move(moments));
}

void Checkpoint::put_sgd(const std::string& prefix, const Sgd& sgd) {
  meta["optimizers"][prefix] = {{"kind", "sgd"}, {"steps", sgd.steps()}, {"lr", sgd.lr()}};
}

void Checkpoint::get_sgd(const std::string& prefix, Sgd& sgd) const {
  sgd.restore(meta.at("optimizers").at(prefix).at("steps").get<std::uint64_t>());
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  put_raw<std::uint32_t>(out, Checkpoint::kVersion);
  put_raw<std::uint64_t>(out, ckpt.config_hash);
  put_raw<std::uint64_t>(out, ckpt.seed);
  const std::string meta = ckpt.meta.dump();
  put_raw<std::uint64_t>(out, meta.size());
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  put_raw<std::uint64_t>(out, ckpt.tensors.size());
  for (const auto& [name, t] : ckpt.tensors) {
    put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_raw<std::uint64_t>(out, d);
    const auto data = t.data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw CheckpointError(path.string() + " is not a checkpoint (bad magic)");
  }
  const auto version = get_raw<std::uint32_t>(in, path);
  if (version != Checkpoint::kVersion) {
    throw CheckpointError("checkpoint " + path.string() + " has unsupported version " +
                          std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config_hash = get_raw<std::uint64_t>(in, path);
  ckpt.seed = get_raw<std::uint64_t>(in, path);
  const auto meta_len = get_raw<std::uint64_t>(in, path);
  try {
    ckpt.meta = nlohmann::json::parse(read_string(in, meta_len, path));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("checkpoint " + path.string() + ": bad metadata: " + e.what());
  }
  const auto count = get_raw<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = read_string(in, get_raw<std::uint32_t>(in, path), path);
    const auto rank = get_raw<std::uint32_t>(in, path);
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape.push_back(static_cast<std::size_t>(get_raw<std::uint64_t>(in, path)));
    }
    Tensor t(shape, 0.0);
    auto data = t.data();
    if (!data.empty() &&
        !in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double)))) {
      throw CheckpointError("checkpoint " + path.string() + ": truncated entry '" + name + "'");
    }
    ckpt.tensors.emplace(std::move(name), std::move(t));
  }
  return ckpt;
}

}  // namespace adda
