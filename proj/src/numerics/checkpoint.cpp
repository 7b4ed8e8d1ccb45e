#include "p2pdrl/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "p2pdrl/errors.hpp"

namespace p2pdrl {

using nlohmann::json;

const Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& [n, t] : entries) {
    if (n == name) return t;
  }
  throw StateError("checkpoint has no tensor named " + name);
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& entry : entries) {
    if (entry.first == name) return true;
  }
  return false;
}

void add_mlp(Checkpoint& ckpt, const std::string& section, const MlpParams& net) {
  const auto names = net.tensor_names();
  const auto tensors = net.tensors();
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    ckpt.add(section + "/" + names[k], *tensors[k]);
  }
}

MlpParams read_mlp(const Checkpoint& ckpt, const std::string& section) {
  MlpParams net;
  for (std::size_t l = 0;; ++l) {
    const std::string prefix = section + "/layer" + std::to_string(l);
    if (!ckpt.contains(prefix + ".weight")) break;
    net.layers.push_back({ckpt.get(prefix + ".weight"), ckpt.get(prefix + ".bias")});
    const auto& layer = net.layers.back();
    if (layer.weight.rank() != 2 || layer.bias.rank() != 1 ||
        layer.bias.size() != layer.weight.rows()) {
      throw ShapeError("checkpoint section " + section + ": malformed layer " +
                       std::to_string(l));
    }
    if (l > 0 && net.layers[l - 1].weight.rows() != layer.weight.cols()) {
      throw ShapeError("checkpoint section " + section + ": layer dims do not chain");
    }
  }
  if (net.layers.empty()) throw StateError("checkpoint has no section " + section);
  return net;
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["tensors"] = json::array();
  for (const auto& [name, t] : ckpt.entries) {
    require_finite(t, name);
    doc["tensors"].push_back(
        {{"name", name},
         {"shape", t.shape()},
         {"data", std::vector<double>(t.values().begin(), t.values().end())}});
  }
  return doc.dump(1);
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!doc.contains("format_version") || doc["format_version"] != kCheckpointFormatVersion) {
    throw IoError("unsupported checkpoint format_version");
  }
  Checkpoint ckpt;
  try {
    for (const auto& entry : doc.at("tensors")) {
      ckpt.add(entry.at("name").get<std::string>(),
               Tensor(entry.at("shape").get<std::vector<std::size_t>>(),
                      entry.at("data").get<std::vector<double>>()));
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed checkpoint: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string text = checkpoint_to_json(ckpt);
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return checkpoint_from_json(buf.str());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace p2pdrl
