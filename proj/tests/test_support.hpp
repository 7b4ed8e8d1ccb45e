#ifndef P2PDRL_TESTS_TEST_SUPPORT_HPP_
#define P2PDRL_TESTS_TEST_SUPPORT_HPP_

// Test-only oracles. Nothing here calls into the code paths it checks beyond
// reading and perturbing parameter tensors.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "p2pdrl/mlp.hpp"
#include "p2pdrl/rng.hpp"
#include "p2pdrl/tensor.hpp"

namespace p2pdrl::testing {

inline Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

inline MlpParams random_mlp(const std::vector<std::size_t>& dims, Rng& rng, double scale = 0.8) {
  MlpParams p = MlpParams::zeros(dims);
  for (Tensor* t : p.tensors()) {
    for (double& v : t->values()) v = rng.uniform(-scale, scale);
  }
  return p;
}

// Straight triple loop with std::tanh.
inline Tensor naive_forward(const MlpParams& p, const Tensor& input) {
  std::vector<std::vector<double>> rows;
  for (std::size_t b = 0; b < input.rows(); ++b) {
    std::vector<double> x(input.row(b).begin(), input.row(b).end());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      const auto& layer = p.layers[l];
      std::vector<double> y(layer.weight.rows());
      for (std::size_t o = 0; o < y.size(); ++o) {
        double acc = layer.bias[o];
        for (std::size_t i = 0; i < x.size(); ++i) acc += layer.weight(o, i) * x[i];
        y[o] = (l + 1 < p.layers.size()) ? std::tanh(acc) : acc;
      }
      x = std::move(y);
    }
    rows.push_back(std::move(x));
  }
  Tensor out = Tensor::matrix(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t b = 0; b < rows.size(); ++b) {
    std::copy(rows[b].begin(), rows[b].end(), out.row(b).begin());
  }
  return out;
}

inline bool close(double analytic, double numeric, double rtol, double atol) {
  return std::abs(analytic - numeric) <= atol + rtol * std::max(std::abs(analytic), std::abs(numeric));
}

struct FdMismatch {
  std::string where;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central differences of `loss` w.r.t. every entry of `params` (perturbed in
// place and restored), compared against `grads` entry by entry.
inline std::vector<FdMismatch> finite_difference_check(
    std::vector<Tensor*> params, const std::vector<const Tensor*>& grads,
    const std::function<double()>& loss, double h = 1e-5, double rtol = 1e-4,
    double atol = 1e-7) {
  std::vector<FdMismatch> bad;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k]->size(); ++i) {
      double& x = (*params[k])[i];
      const double saved = x;
      x = saved + h;
      const double up = loss();
      x = saved - h;
      const double down = loss();
      x = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = (*grads[k])[i];
      if (!close(analytic, numeric, rtol, atol)) {
        bad.push_back({"tensor " + std::to_string(k) + " entry " + std::to_string(i),
                       analytic, numeric});
      }
    }
  }
  return bad;
}

template <class Params>
std::vector<const Tensor*> const_tensors(const Params& p) {
  return p.tensors();
}

// Fresh directory under the system temp dir, removed on scope exit.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("p2pdrl_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace p2pdrl::testing

#endif  // P2PDRL_TESTS_TEST_SUPPORT_HPP_
