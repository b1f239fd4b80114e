#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace etas {

using Rng = std::mt19937_64;

/// Independent stream for replicate `stream` of a run seeded with `seed`.
[[nodiscard]] inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

/// Uniform on the open interval (0, 1).
[[nodiscard]] inline double uniform01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

[[nodiscard]] inline double draw_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

/// Gamma with shape/rate parameterisation.
[[nodiscard]] inline double draw_gamma(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

[[nodiscard]] inline double draw_beta(Rng& rng, double a, double b) {
  const double x = draw_gamma(rng, a, 1.0);
  const double y = draw_gamma(rng, b, 1.0);
  return x / (x + y);
}

[[nodiscard]] inline double draw_exponential(Rng& rng, double rate) {
  return -std::log(uniform01(rng)) / rate;
}

[[nodiscard]] inline std::int64_t draw_poisson(Rng& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}

/// Index drawn proportionally to the nonnegative `weights`; `total` must be
/// their sum.
[[nodiscard]] inline std::size_t draw_categorical(Rng& rng, std::span<const double> weights,
                                                  double total) {
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    acc += weights[k];
    if (u < acc) return k;
  }
  // Rounding can leave u marginally above the running sum.
  for (std::size_t k = weights.size(); k-- > 0;) {
    if (weights[k] > 0.0) return k;
  }
  return 0;
}

}  // namespace etas
