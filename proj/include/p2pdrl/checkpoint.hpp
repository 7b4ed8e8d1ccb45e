#ifndef P2PDRL_CHECKPOINT_HPP_
#define P2PDRL_CHECKPOINT_HPP_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "p2pdrl/mlp.hpp"
#include "p2pdrl/tensor.hpp"

namespace p2pdrl {

inline constexpr int kCheckpointFormatVersion = 1;

// Ordered list of named tensors. Names are hierarchical paths such as
// "actor/mean_net/layer0.weight"; the JSON document stores shape and data for
// each, and doubles are written with enough digits to round-trip exactly.
struct Checkpoint {
  std::vector<std::pair<std::string, Tensor>> entries;

  void add(std::string name, Tensor t) {
    entries.emplace_back(std::move(name), std::move(t));
  }
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  bool operator==(const Checkpoint&) const = default;
};

void add_mlp(Checkpoint& ckpt, const std::string& section, const MlpParams& net);
// Reads "<section>/layerN.weight|bias" entries until one is missing.
MlpParams read_mlp(const Checkpoint& ckpt, const std::string& section);

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace p2pdrl

#endif  // P2PDRL_CHECKPOINT_HPP_
