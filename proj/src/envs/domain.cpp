#include <string>

#include "p2pdrl/envs.hpp"
#include "p2pdrl/errors.hpp"

namespace p2pdrl {

namespace {

constexpr double kWindHalfWidth = 5.0;
constexpr double kGravitySpread = 0.25;
constexpr double kFrictionSpread = 0.3;
constexpr double kMassSpread = 0.5;
constexpr double kInitHalfWidth = 1.0;

}  // namespace

std::string_view to_string(WindPartition p) {
  switch (p) {
    case WindPartition::kNone: return "none";
    case WindPartition::kNegative: return "wind_negative";
    case WindPartition::kPositive: return "wind_positive";
    case WindPartition::kAlternate: return "wind_split";
  }
  return "none";
}

WindPartition parse_wind_partition(std::string_view text) {
  if (text == "none") return WindPartition::kNone;
  if (text == "wind_negative") return WindPartition::kNegative;
  if (text == "wind_positive") return WindPartition::kPositive;
  if (text == "wind_split") return WindPartition::kAlternate;
  throw ConfigError("partition", "unknown value '" + std::string(text) +
                                     "' (none|wind_negative|wind_positive|wind_split)");
}

void RandomizationConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw ConfigError("epsilon", "must lie in [0, 1], got " + std::to_string(epsilon));
  }
}

RandomizationConfig RandomizationConfig::for_worker(std::size_t k) const {
  RandomizationConfig out = *this;
  if (partition == WindPartition::kAlternate) {
    out.partition = (k % 2 == 0) ? WindPartition::kNegative : WindPartition::kPositive;
  }
  return out;
}

DomainBounds domain_bounds(const RandomizationConfig& cfg) {
  cfg.validate();
  const double e = cfg.epsilon;
  const DomainParams& b = cfg.base;
  DomainBounds out{b, b};
  out.lo.wind = b.wind - kWindHalfWidth * e;
  out.hi.wind = b.wind + kWindHalfWidth * e;
  if (cfg.partition == WindPartition::kNegative) out.hi.wind = b.wind;
  if (cfg.partition == WindPartition::kPositive) out.lo.wind = b.wind;
  out.lo.gravity = b.gravity * (1.0 - kGravitySpread * e);
  out.hi.gravity = b.gravity * (1.0 + kGravitySpread * e);
  out.lo.friction_coeff = b.friction_coeff * (1.0 - kFrictionSpread * e);
  out.hi.friction_coeff = b.friction_coeff * (1.0 + kFrictionSpread * e);
  out.lo.mass_scale = b.mass_scale * (1.0 - kMassSpread * e);
  out.hi.mass_scale = b.mass_scale * (1.0 + kMassSpread * e);
  out.lo.init_offset = b.init_offset - kInitHalfWidth * e;
  out.hi.init_offset = b.init_offset + kInitHalfWidth * e;
  return out;
}

bool within_bounds(const DomainParams& d, const DomainBounds& b) {
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  return in(d.wind, b.lo.wind, b.hi.wind) &&
         in(d.gravity, b.lo.gravity, b.hi.gravity) &&
         in(d.friction_coeff, b.lo.friction_coeff, b.hi.friction_coeff) &&
         in(d.mass_scale, b.lo.mass_scale, b.hi.mass_scale) &&
         in(d.init_offset, b.lo.init_offset, b.hi.init_offset);
}

DomainParams sample_domain(const RandomizationConfig& cfg, Rng& rng) {
  if (cfg.partition == WindPartition::kAlternate) {
    throw ConfigError("partition", "wind_split must be resolved per worker before sampling");
  }
  const DomainBounds b = domain_bounds(cfg);
  // Always five draws in a fixed order so streams stay aligned across epsilon.
  DomainParams d;
  d.wind = rng.uniform(b.lo.wind, b.hi.wind);
  d.gravity = rng.uniform(b.lo.gravity, b.hi.gravity);
  d.friction_coeff = rng.uniform(b.lo.friction_coeff, b.hi.friction_coeff);
  d.mass_scale = rng.uniform(b.lo.mass_scale, b.hi.mass_scale);
  d.init_offset = rng.uniform(b.lo.init_offset, b.hi.init_offset);
  if (cfg.epsilon == 0.0) return cfg.base;
  return d;
}

}  // namespace p2pdrl
