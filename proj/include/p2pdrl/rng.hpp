#ifndef P2PDRL_RNG_HPP_
#define P2PDRL_RNG_HPP_

#include <cstdint>
#include <random>
#include <vector>

namespace p2pdrl {

// Stateless mixing of (parent, index) into a child seed (splitmix64 finalizer
// applied to both words). Streams derived with distinct indices are
// independent of each other, so adding a worker never shifts the streams
// that already exist.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

// Seeded random stream. Copyable: a copy replays exactly the same draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  Rng child(std::uint64_t index) const { return Rng(derive_seed(seed_, index)); }

  double uniform(double lo, double hi);
  double standard_normal();
  std::size_t uniform_index(std::size_t n);

  // Fisher-Yates permutation of [0, n).
  std::vector<std::size_t> permutation(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace p2pdrl

#endif  // P2PDRL_RNG_HPP_
