#ifndef P2PDRL_MLP_HPP_
#define P2PDRL_MLP_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "p2pdrl/rng.hpp"
#include "p2pdrl/tensor.hpp"

namespace p2pdrl {

// Default hidden layout for both actor and critic networks.
inline constexpr std::size_t kHiddenUnits = 64;
inline constexpr std::size_t kHiddenLayers = 2;

struct DenseLayer {
  Tensor weight;  // out x in
  Tensor bias;    // out

  bool operator==(const DenseLayer&) const = default;
};

// Fully connected network: tanh on every hidden layer, identity on the
// output layer.
struct MlpParams {
  std::vector<DenseLayer> layers;

  // dims = {in, hidden..., out}. All entries zero.
  static MlpParams zeros(std::span<const std::size_t> dims);
  // Weights and biases ~ U(-sqrt(1/fan_in), +sqrt(1/fan_in)).
  static MlpParams uniform_init(std::span<const std::size_t> dims, Rng& rng);
  static std::vector<std::size_t> default_dims(std::size_t in, std::size_t out);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;

  // Zero-filled tensors with the same layout (gradient buffers).
  MlpParams zeros_like() const;

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::vector<std::string> tensor_names() const;

  bool operator==(const MlpParams&) const = default;
};

// Per-layer activations recorded by mlp_forward for the backward pass:
// activations[0] is the input, activations[l + 1] the output of layer l.
struct MlpCache {
  std::vector<Tensor> activations;
  bool empty() const { return activations.empty(); }
};

// input: batch x in. Returns batch x out. When cache is non-null it is
// overwritten with the activations needed by mlp_backward.
Tensor mlp_forward(const MlpParams& params, const Tensor& input,
                   MlpCache* cache = nullptr);

struct MlpGradients {
  MlpParams params;  // same layout as the network
  Tensor input;      // batch x in
};

// Reverse-mode gradients of sum(grad_output * forward(input)).
MlpGradients mlp_backward(const MlpParams& params, const MlpCache& cache,
                          const Tensor& grad_output);

}  // namespace p2pdrl

#endif  // P2PDRL_MLP_HPP_
