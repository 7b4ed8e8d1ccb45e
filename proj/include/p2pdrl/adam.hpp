#ifndef P2PDRL_ADAM_HPP_
#define P2PDRL_ADAM_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "p2pdrl/tensor.hpp"

namespace p2pdrl {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

// First/second moment buffers mirroring a parameter set, plus the step count.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t t = 0;
  AdamConfig config;

  template <class Params>
  static AdamState for_params(const Params& params) {
    AdamState s;
    for (const Tensor* p : params.tensors()) {
      s.m.emplace_back(p->shape());
      s.v.emplace_back(p->shape());
    }
    return s;
  }

  bool operator==(const AdamState&) const = default;
};

// One bias-corrected Adam update. Gradients are checked for finiteness
// before anything is modified; the error names the offending tensor.
void adam_step(AdamState& state, std::span<Tensor* const> params,
               std::span<const Tensor* const> grads, double lr,
               std::span<const std::string> names = {});

template <class Params>
void adam_step(AdamState& state, Params& params, const Params& grads, double lr) {
  const auto p = params.tensors();
  const auto g = grads.tensors();
  const auto names = params.tensor_names();
  adam_step(state, std::span<Tensor* const>(p), std::span<const Tensor* const>(g),
            lr, std::span<const std::string>(names));
}

}  // namespace p2pdrl

#endif  // P2PDRL_ADAM_HPP_
