#pragma once

/// Labeled Gaussian-blob bundles for desk-scale experiments: one independent
/// feature space per extractor, class-size imbalance by geometric decay and
/// symmetric label noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "coresel/error.hpp"
#include "coresel/types.hpp"

namespace coresel {

struct SynthSpec {
  std::size_t classes = 2;
  std::size_t per_class = 10;        // size of the largest class
  std::vector<std::size_t> dims{8};  // one entry per extractor
  double separation = 1.0;           // pairwise centroid distance
  double spread = 0.1;               // per-coordinate standard deviation
  double imbalance_ratio = 1.0;      // largest / smallest class
  double noise_rate = 0.0;           // applied by the caller via inject_symmetric_noise
  std::uint64_t seed = 0;

  void validate() const {
    using detail::require;
    require(classes >= 2, ErrorCode::invalid_argument, "need at least two classes");
    require(per_class >= 1, ErrorCode::invalid_argument, "per_class must be positive");
    require(!dims.empty(), ErrorCode::invalid_argument, "need at least one extractor dimensionality");
    for (auto k : dims) require(k >= 1, ErrorCode::invalid_argument, "feature dimensionality must be positive");
    require(std::isfinite(separation) && separation > 0.0, ErrorCode::invalid_argument, "separation must be > 0");
    require(std::isfinite(spread) && spread >= 0.0, ErrorCode::invalid_argument, "spread must be >= 0");
    require(std::isfinite(imbalance_ratio) && imbalance_ratio >= 1.0, ErrorCode::invalid_argument,
            "imbalance ratio must be >= 1");
    require(noise_rate >= 0.0 && noise_rate <= 1.0, ErrorCode::invalid_argument, "noise rate must lie in [0, 1]");
  }
};

namespace detail {

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
  return std::mt19937_64(seq);
}

inline constexpr std::uint64_t kLayoutStream = 0;
inline constexpr std::uint64_t kNoiseStream = 0xA5A5'0000'0000'0001ull;

/// c centroids in R^k with pairwise distance ~ separation. For k >= c they
/// are orthonormalized Gaussian directions scaled by separation / sqrt(2),
/// i.e. a randomly rotated regular simplex; otherwise plain Gaussian
/// vectors scaled to the same expected pairwise distance.
inline std::vector<double> place_centroids(std::size_t c, std::size_t k, double separation, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> centroids(c * k);
  for (auto& v : centroids) v = normal(rng);
  if (k >= c) {
    for (std::size_t a = 0; a < c; ++a) {
      double* va = centroids.data() + a * k;
      for (std::size_t b = 0; b < a; ++b) {
        const double* vb = centroids.data() + b * k;
        double proj = 0.0;
        for (std::size_t d = 0; d < k; ++d) proj += va[d] * vb[d];
        for (std::size_t d = 0; d < k; ++d) va[d] -= proj * vb[d];
      }
      double norm = 0.0;
      for (std::size_t d = 0; d < k; ++d) norm += va[d] * va[d];
      norm = std::sqrt(norm);
      for (std::size_t d = 0; d < k; ++d) va[d] /= norm;
    }
    for (auto& v : centroids) v *= separation / std::sqrt(2.0);
  } else {
    for (auto& v : centroids) v *= separation / std::sqrt(2.0 * static_cast<double>(k));
  }
  return centroids;
}

}  // namespace detail

/// n_k = round(per_class * mu^k) with mu = rho^(-1/(c-1)), at least 1.
inline std::vector<std::size_t> synth_class_sizes(const SynthSpec& spec) {
  spec.validate();
  std::vector<std::size_t> sizes(spec.classes);
  const double mu = std::pow(spec.imbalance_ratio, -1.0 / static_cast<double>(spec.classes - 1));
  for (std::size_t c = 0; c < spec.classes; ++c) {
    const double n = static_cast<double>(spec.per_class) * std::pow(mu, static_cast<double>(c));
    sizes[c] = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n)));
  }
  return sizes;
}

/// Clean-label bundle; the same seed always yields the same bundle. Sample
/// order is a seeded shuffle, so classes interleave. Extractor i is tagged
/// "synth-i" and drawn from its own generator stream.
template <typename Scalar = float>
BasicFeatureBundle<Scalar> generate(const SynthSpec& spec) {
  auto sizes = synth_class_sizes(spec);
  std::vector<Label> labels;
  for (std::size_t c = 0; c < sizes.size(); ++c) labels.insert(labels.end(), sizes[c], static_cast<Label>(c));
  auto layout = detail::stream(spec.seed, detail::kLayoutStream);
  std::shuffle(labels.begin(), labels.end(), layout);
  const std::size_t n = labels.size();

  std::vector<BasicFeatureMatrix<Scalar>> matrices;
  for (std::size_t i = 0; i < spec.dims.size(); ++i) {
    const std::size_t k = spec.dims[i];
    auto rng = detail::stream(spec.seed, i + 1);
    auto centroids = detail::place_centroids(spec.classes, k, spec.separation, rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Scalar> values(n * k);
    for (std::size_t j = 0; j < n; ++j) {
      const double* mu = centroids.data() + labels[j] * k;
      for (std::size_t d = 0; d < k; ++d) {
        const double noise = spec.spread > 0.0 ? spec.spread * normal(rng) : 0.0;
        values[j * k + d] = static_cast<Scalar>(mu[d] + noise);
      }
    }
    matrices.emplace_back("synth-" + std::to_string(i), n, k, std::move(values));
  }
  return {std::move(matrices), LabelVector(std::move(labels), spec.classes)};
}

/// Each label is independently replaced, with probability eta, by a class
/// drawn uniformly from the other c - 1 classes. Throws empty_class if the
/// result leaves some class without samples.
inline LabelVector inject_symmetric_noise(const LabelVector& y, double eta, std::uint64_t seed) {
  detail::require(eta >= 0.0 && eta <= 1.0, ErrorCode::invalid_argument, "noise rate must lie in [0, 1]");
  detail::require(y.classes() >= 2 || eta == 0.0, ErrorCode::invalid_argument, "label noise needs two classes");
  auto rng = detail::stream(seed, detail::kNoiseStream);
  std::bernoulli_distribution flip(eta);
  std::vector<Label> out(y.values().begin(), y.values().end());
  if (eta == 0.0) return {std::move(out), y.classes()};
  std::uniform_int_distribution<std::size_t> other(0, y.classes() - 2);
  for (auto& label : out) {
    if (!flip(rng)) continue;
    auto r = static_cast<Label>(other(rng));
    label = r < label ? r : r + 1;
  }
  return {std::move(out), y.classes()};
}

}  // namespace coresel
