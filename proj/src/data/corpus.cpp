#include "adda/data/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace adda {

using ordered_json = nlohmann::ordered_json;

std::string_view domain_name(Domain domain) {
  return domain == Domain::kSource ? "source" : "target";
}

Domain parse_domain(std::string_view name) {
  if (name == "source") return Domain::kSource;
  if (name == "target") return Domain::kTarget;
  throw DataError("unknown domain '" + std::string(name) + "' (expected source|target)");
}

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw DataError("label set: empty label name");
    if (!seen.insert(n).second) throw DataError("label set: duplicate label '" + n + "'");
  }
}

LabelSet LabelSet::pdtb() {
  return LabelSet({"Temporal", "Contingency", "Comparison", "Expansion"});
}

LabelSet LabelSet::for_classes(std::size_t k) {
  if (k == 4) return pdtb();
  std::vector<std::string> names;
  for (std::size_t i = 0; i < k; ++i) names.push_back("class" + std::to_string(i));
  return LabelSet(std::move(names));
}

std::optional<std::size_t> LabelSet::index_of(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

const std::vector<Instance>& Corpus::at(std::string_view name) const {
  auto it = splits.find(name);
  if (it == splits.end()) throw DataError("corpus has no split '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

namespace {

Instance parse_record(const std::string& line, const LabelSet& labels) {
  const auto record = nlohmann::json::parse(line);  // throws parse_error
  if (!record.is_object()) throw DataError("record is not a JSON object");
  static const std::set<std::string> known = {"arg1", "arg2", "label", "domain", "id"};
  for (const auto& [key, _] : record.items()) {
    if (!known.count(key)) throw DataError("unknown key '" + key + "'");
  }
  auto text = [&](const char* key) -> std::string {
    if (!record.contains(key)) throw DataError(std::string("missing key '") + key + "'");
    if (!record[key].is_string()) throw DataError(std::string("key '") + key + "' is not a string");
    return record[key].get<std::string>();
  };
  Instance inst;
  inst.arg1 = tokenize(text("arg1"));
  inst.arg2 = tokenize(text("arg2"));
  if (inst.arg1.empty() || inst.arg2.empty()) throw DataError("empty argument");
  inst.domain = parse_domain(text("domain"));
  inst.id = text("id");
  if (inst.id.empty()) throw DataError("empty id");
  if (record.contains("label") && !record["label"].is_null()) {
    std::string label = text("label");
    if (!labels.index_of(label)) throw DataError("unknown label '" + label + "'");
    inst.label = std::move(label);
  }
  return inst;
}

}  // namespace

std::vector<Instance> load_split(const std::filesystem::path& path, const LabelSet& labels,
                                 std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  std::vector<Instance> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Instance inst = parse_record(line, labels);
      if (!ids.insert(inst.id).second) throw DataError("duplicate id '" + inst.id + "'");
      out.push_back(std::move(inst));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed JSON: " +
                      e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (out.empty() && warnings != nullptr) {
    warnings->push_back("corpus file " + path.string() + " holds no instances");
  }
  return out;
}

Corpus load_corpus(const std::filesystem::path& dir, std::vector<std::string>* warnings) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("corpus directory " + dir.string() + " does not exist");
  }
  Corpus corpus;
  const auto label_file = dir / "labels.txt";
  if (std::filesystem::exists(label_file)) {
    std::ifstream in(label_file);
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
      auto toks = tokenize(line);
      if (toks.size() == 1) names.push_back(toks[0]);
      else if (!toks.empty()) throw DataError(label_file.string() + ": malformed label line");
    }
    corpus.labels = LabelSet(std::move(names));
  }
  std::map<std::string, std::string> id_owner;
  for (std::string_view name : split::kAll) {
    const auto file = dir / (std::string(name) + ".jsonl");
    if (!std::filesystem::exists(file)) continue;
    auto instances = load_split(file, corpus.labels, warnings);
    for (const auto& inst : instances) {
      auto [it, fresh] = id_owner.emplace(inst.id, std::string(name));
      if (!fresh) {
        throw DataError("duplicate id '" + inst.id + "' in splits " + it->second + " and " +
                        std::string(name));
      }
    }
    corpus.splits.emplace(std::string(name), std::move(instances));
  }
  if (corpus.splits.empty()) {
    throw DataError("corpus directory " + dir.string() + " holds no <split>.jsonl files");
  }
  return corpus;
}

void write_split(const std::filesystem::path& path, const std::vector<Instance>& instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  for (const auto& inst : instances) {
    ordered_json record;
    record["arg1"] = join_tokens(inst.arg1);
    record["arg2"] = join_tokens(inst.arg2);
    if (inst.label) record["label"] = *inst.label;
    record["domain"] = domain_name(inst.domain);
    record["id"] = inst.id;
    out << record.dump() << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "labels.txt", std::ios::binary);
    for (const auto& name : corpus.labels.names()) out << name << '\n';
  }
  for (const auto& [name, instances] : corpus.splits) {
    write_split(dir / (name + ".jsonl"), instances);
  }
}

}  // namespace adda
