#include "p2pdrl/adam.hpp"

#include <cmath>

#include "p2pdrl/errors.hpp"

namespace p2pdrl {

void adam_step(AdamState& state, std::span<Tensor* const> params,
               std::span<const Tensor* const> grads, double lr,
               std::span<const std::string> names) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment counts differ");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->same_shape(*grads[k]) || !params[k]->same_shape(state.m[k])) {
      throw ShapeError("adam_step: gradient shape " + shape_string(grads[k]->shape()) +
                       " does not mirror parameter shape " +
                       shape_string(params[k]->shape()));
    }
    if (!grads[k]->all_finite()) {
      const std::string name =
          k < names.size() ? names[k] : "tensor #" + std::to_string(k);
      throw NumericError("adam_step: non-finite gradient in " + name);
    }
  }

  state.t += 1;
  const auto& c = state.config;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    double* p = params[k]->data();
    const double* g = grads[k]->data();
    double* m = state.m[k].data();
    double* v = state.v[k].data();
    const std::size_t n = params[k]->size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

}  // namespace p2pdrl
