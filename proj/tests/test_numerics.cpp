#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "p2pdrl/adam.hpp"
#include "p2pdrl/checkpoint.hpp"
#include "p2pdrl/errors.hpp"
#include "p2pdrl/mlp.hpp"
#include "test_support.hpp"

using namespace p2pdrl;
using namespace p2pdrl::testing;

TEST_CASE("mlp_forward: zero network gives zero output") {
  const auto dims = MlpParams::default_dims(3, 2);
  const MlpParams p = MlpParams::zeros(dims);
  Rng rng(7);
  const Tensor out = mlp_forward(p, random_matrix(5, 3, rng, 10.0));
  CHECK(out.shape() == std::vector<std::size_t>{5, 2});
  for (double v : out.values()) CHECK(v == 0.0);
}

TEST_CASE("mlp_forward: 1-1-1 unit network computes tanh") {
  const std::vector<std::size_t> dims{1, 1, 1};
  MlpParams p = MlpParams::zeros(dims);
  p.layers[0].weight[0] = 1.0;
  p.layers[1].weight[0] = 1.0;
  for (double x : {-3.0, -0.5, 0.0, 1e-9, 0.7, 4.0}) {
    const Tensor out = mlp_forward(p, Tensor({1, 1}, std::vector<double>{x}));
    CHECK(out[0] == doctest::Approx(std::tanh(x)).epsilon(1e-15));
  }
}

TEST_CASE("mlp_forward: matches naive loop oracle") {
  Rng rng(11);
  const MlpParams p = random_mlp({3, 64, 64, 2}, rng);
  const Tensor x = random_matrix(4, 3, rng, 2.0);
  const Tensor fast = mlp_forward(p, x);
  const Tensor slow = naive_forward(p, x);
  for (std::size_t i = 0; i < fast.size(); ++i) CHECK(std::abs(fast[i] - slow[i]) <= 1e-12);
}

TEST_CASE("mlp_forward: deterministic and row-independent") {
  Rng rng(12);
  const MlpParams p = random_mlp({4, 8, 8, 3}, rng);
  const Tensor x = random_matrix(6, 4, rng);
  CHECK(mlp_forward(p, x) == mlp_forward(p, x));
  const Tensor batch = mlp_forward(p, x);
  for (std::size_t b = 0; b < 6; ++b) {
    const Tensor one = mlp_forward(p, Tensor({1, 4}, std::vector<double>(x.row(b).begin(), x.row(b).end())));
    for (std::size_t o = 0; o < 3; ++o) CHECK(one[o] == batch(b, o));
  }
}

TEST_CASE("mlp_forward: shape errors") {
  Rng rng(1);
  const MlpParams p = random_mlp({3, 4, 1}, rng);
  CHECK_THROWS_AS(mlp_forward(p, Tensor::matrix(2, 4)), ShapeError);
  CHECK_THROWS_AS(mlp_forward(p, Tensor::vector(3)), ShapeError);
}

TEST_CASE("mlp_backward: zero upstream gradient gives zero gradients") {
  Rng rng(2);
  const MlpParams p = random_mlp({3, 5, 5, 2}, rng);
  MlpCache cache;
  mlp_forward(p, random_matrix(4, 3, rng), &cache);
  const MlpGradients g = mlp_backward(p, cache, Tensor::matrix(4, 2));
  for (const Tensor* t : g.params.tensors()) {
    for (double v : t->values()) CHECK(v == 0.0);
  }
  for (double v : g.input.values()) CHECK(v == 0.0);
}

TEST_CASE("mlp_backward: affine 1-1 network") {
  const std::vector<std::size_t> dims{1, 1};
  MlpParams p = MlpParams::zeros(dims);
  const double w = -1.75, x = 0.6;
  p.layers[0].weight[0] = w;
  p.layers[0].bias[0] = 0.3;
  MlpCache cache;
  mlp_forward(p, Tensor({1, 1}, std::vector<double>{x}), &cache);
  const MlpGradients g = mlp_backward(p, cache, Tensor({1, 1}, std::vector<double>{1.0}));
  CHECK(g.params.layers[0].weight[0] == x);
  CHECK(g.params.layers[0].bias[0] == 1.0);
  CHECK(g.input[0] == w);
}

TEST_CASE("mlp_backward: requires a forward cache") {
  Rng rng(3);
  const MlpParams p = random_mlp({2, 3, 1}, rng);
  MlpCache empty;
  CHECK_THROWS_AS(mlp_backward(p, empty, Tensor::matrix(1, 1)), StateError);
  MlpCache cache;
  mlp_forward(p, random_matrix(2, 2, rng), &cache);
  CHECK_THROWS_AS(mlp_backward(p, cache, Tensor::matrix(3, 1)), ShapeError);
}

TEST_CASE("mlp_backward: property - matches central differences on random nets") {
  Rng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::size_t> dims;
    const std::size_t depth = 2 + rng.uniform_index(3);
    for (std::size_t d = 0; d < depth; ++d) dims.push_back(1 + rng.uniform_index(8));
    MlpParams p = random_mlp(dims, rng);
    Tensor x = random_matrix(1 + rng.uniform_index(8), dims.front(), rng, 1.5);
    const Tensor upstream = random_matrix(x.rows(), dims.back(), rng);

    auto loss = [&]() {
      const Tensor y = mlp_forward(p, x);
      double s = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * upstream[i];
      return s;
    };
    MlpCache cache;
    mlp_forward(p, x, &cache);
    const MlpGradients g = mlp_backward(p, cache, upstream);

    auto bad = finite_difference_check(p.tensors(), g.params.tensors(), loss);
    auto bad_in = finite_difference_check({&x}, {&g.input}, loss);
    INFO("trial " << trial);
    CHECK(bad.empty());
    CHECK(bad_in.empty());
  }
}

TEST_CASE("uniform_init: seeded, bounded by sqrt(1/fan_in)") {
  Rng a(5), b(5);
  const auto dims = MlpParams::default_dims(3, 1);
  const MlpParams pa = MlpParams::uniform_init(dims, a);
  CHECK(pa == MlpParams::uniform_init(dims, b));
  for (const auto& layer : pa.layers) {
    const double bound = std::sqrt(1.0 / static_cast<double>(layer.weight.cols()));
    for (double v : layer.weight.values()) CHECK(std::abs(v) <= bound);
    for (double v : layer.bias.values()) CHECK(std::abs(v) <= bound);
  }
}

namespace {

struct Scalar {
  Tensor x = Tensor::vector(1);
  std::vector<Tensor*> tensors() { return {&x}; }
  std::vector<const Tensor*> tensors() const { return {&x}; }
  std::vector<std::string> tensor_names() const { return {"x"}; }
};

}  // namespace

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Rng rng(4);
  MlpParams p = random_mlp({2, 3, 1}, rng);
  const MlpParams before = p;
  AdamState s = AdamState::for_params(p);
  adam_step(s, p, p.zeros_like(), 1e-2);
  CHECK(p == before);
  CHECK(s.t == 1);
}

TEST_CASE("adam: first step moves by lr * sign(g)") {
  for (double g : {3.0, -0.02, 1e-3}) {
    Scalar p, grad;
    grad.x[0] = g;
    AdamState s = AdamState::for_params(p);
    adam_step(s, p, grad, 0.01);
    CHECK(p.x[0] == doctest::Approx(-0.01 * (g > 0 ? 1.0 : -1.0)).epsilon(1e-5));
  }
}

TEST_CASE("adam: two steps with constant unit gradient") {
  // Hand-unrolled moment recursion.
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 1e-3;
  double m = 0, v = 0, expected = 0;
  for (int t = 1; t <= 2; ++t) {
    m = b1 * m + (1 - b1);
    v = b2 * v + (1 - b2);
    expected -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
  }
  Scalar p, grad;
  grad.x[0] = 1.0;
  AdamState s = AdamState::for_params(p);
  adam_step(s, p, grad, lr);
  adam_step(s, p, grad, lr);
  CHECK(std::abs(p.x[0] - expected) <= 1e-15);
  CHECK(std::abs(p.x[0] - (-2e-3)) <= 1e-6);
}

TEST_CASE("adam: lr 0 is identity but advances t") {
  Rng rng(6);
  MlpParams p = random_mlp({2, 4, 2}, rng);
  const MlpParams before = p;
  MlpParams grad = random_mlp({2, 4, 2}, rng);
  AdamState s = AdamState::for_params(p);
  for (int i = 0; i < 3; ++i) adam_step(s, p, grad, 0.0);
  CHECK(p == before);
  CHECK(s.t == 3);
}

TEST_CASE("adam: non-finite gradient names the tensor and changes nothing") {
  Rng rng(8);
  MlpParams p = random_mlp({2, 3, 1}, rng);
  const MlpParams before = p;
  MlpParams grad = p.zeros_like();
  grad.layers[1].weight[2] = std::numeric_limits<double>::quiet_NaN();
  AdamState s = AdamState::for_params(p);
  try {
    adam_step(s, p, grad, 1e-3);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("layer1.weight") != std::string::npos);
  }
  CHECK(p == before);
  CHECK(s.t == 0);
}

TEST_CASE("checkpoint: property - JSON round trip is bit exact") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    Checkpoint ckpt;
    add_mlp(ckpt, "net", random_mlp({3, 1 + rng.uniform_index(6), 2}, rng, 1e3));
    Tensor odd = Tensor::vector(6);
    odd[0] = 0.1;
    odd[1] = -0.0;
    odd[2] = 1e-300;
    odd[3] = std::nextafter(1.0, 2.0);
    odd[4] = -123456789.123456789;
    odd[5] = std::numeric_limits<double>::denorm_min();
    ckpt.add("odd", odd);
    const Checkpoint back = checkpoint_from_json(checkpoint_to_json(ckpt));
    CHECK(back == ckpt);
    CHECK(read_mlp(back, "net") == read_mlp(ckpt, "net"));
  }
}

TEST_CASE("checkpoint: file round trip and format errors") {
  const auto dir = std::filesystem::temp_directory_path() / "p2pdrl_ckpt_test";
  std::filesystem::create_directories(dir);
  Rng rng(32);
  Checkpoint ckpt;
  add_mlp(ckpt, "a", random_mlp({2, 4, 1}, rng));
  save_checkpoint(dir / "c.json", ckpt);
  CHECK(load_checkpoint(dir / "c.json") == ckpt);

  std::ofstream(dir / "bad.json") << R"({"format_version": 99, "tensors": []})";
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.json"), IoError);
  std::ofstream(dir / "garbage.json") << "{not json";
  CHECK_THROWS_AS(load_checkpoint(dir / "garbage.json"), IoError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), IoError);
  std::filesystem::remove_all(dir);
}
