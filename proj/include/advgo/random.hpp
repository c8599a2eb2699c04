#pragma once

// Platform-independent random draws. The standard distributions are
// implementation-defined, so everything seeded here goes through raw
// mt19937_64 output to keep runs byte-reproducible.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace advgo {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed and a list of tags.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = base;
  std::uint64_t out = splitmix64(s);
  for (std::uint64_t t : tags) {
    s ^= t + 0x632BE59BD9B4E019ULL;
    out ^= splitmix64(s);
  }
  return out;
}

/// Uniform in [0, 1) with 53 bits of precision.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  // Lemire-style rejection keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Marsaglia-Tsang gamma sampler, shape > 0, unit scale.
inline double gamma_sample(Rng& rng, double shape) {
  if (shape < 1.0) {
    const double u = uniform01(rng);
    return gamma_sample(rng, shape + 1.0) * std::pow(u > 0 ? u : 1e-300, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

inline std::vector<double> dirichlet_sample(Rng& rng, std::size_t n, double alpha) {
  std::vector<double> out(n);
  double total = 0.0;
  for (auto& x : out) {
    x = gamma_sample(rng, alpha);
    total += x;
  }
  if (total <= 0.0) {
    for (auto& x : out) x = 1.0 / static_cast<double>(n);
  } else {
    for (auto& x : out) x /= total;
  }
  return out;
}

/// Draws an index proportionally to nonnegative weights; returns weights.size() if all are zero.
inline std::size_t sample_weighted(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) return weights.size();
  double x = uniform01(rng) * total;
  std::size_t last_positive = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    if (x < weights[i]) return i;
    x -= weights[i];
  }
  return last_positive;
}

}  // namespace advgo
