#pragma once

/// Multi-extractor sample scoring.
///
/// RAM: each extractor ranks samples within their class by distance to the
/// class centroid; the ranks are summed over extractors and normalized by
/// m * |class|. APL: each extractor assigns a nearest-centroid pseudo label;
/// a sample's APL is the fraction of extractors that agree with its label.
/// The fused score mixes RAM and 1 - APL with rate-dependent weights.
/// Smaller fused scores are selected first.
///
/// Both RAM and APL are sums of integers, so they are bit-identical under any
/// reordering of the extractors.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "coresel/error.hpp"
#include "coresel/geometry.hpp"
#include "coresel/parallel.hpp"
#include "coresel/types.hpp"

namespace coresel {

inline constexpr double kDefaultAlpha = 0.2;
inline constexpr double kDefaultBeta = 1.0;

struct RamScore {
  std::vector<double> values;  // each in (0, 1]
};

struct AplScore {
  std::size_t models = 0;
  std::vector<std::uint8_t> hits;  // n x models, row-major
  std::vector<double> values;      // row means of hits

  bool hit(std::size_t j, std::size_t i) const noexcept { return hits[j * models + i] != 0; }
};

struct FusionWeights {
  double w1 = 1.0;
  double w2 = 0.0;
  double alpha = kDefaultAlpha;
  double beta = kDefaultBeta;
  double p = 1.0;
  bool equal_weights = false;  // w1 = w2 = 1, schedule bypassed
};

/// What one extractor contributes: intra-class ranks and pseudo labels.
struct ExtractorEvidence {
  RankTable ranks;
  std::vector<Label> pseudo_labels;
};

/// Nearest centroid per row; ties go to the smallest class id.
inline std::vector<Label> pseudo_labels(const DistanceMatrix& dm) {
  std::vector<Label> out(dm.rows);
  for (std::size_t j = 0; j < dm.rows; ++j) {
    auto row = dm.row(j);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] < row[best]) best = c;
    }
    out[j] = static_cast<Label>(best);
  }
  return out;
}

template <typename Scalar>
std::vector<Label> pseudo_labels(const BasicFeatureMatrix<Scalar>& f, const CentroidSet& cs) {
  return pseudo_labels(centroid_distances(f, cs));
}

template <typename Scalar>
ExtractorEvidence extractor_evidence(const BasicFeatureMatrix<Scalar>& f, const LabelVector& y) {
  auto cs = class_centroids(f, y);
  auto dm = centroid_distances(f, cs);
  return {intra_class_ranks(own_centroid_distances(dm, y), y, f.extractor_id()), pseudo_labels(dm)};
}

template <typename Scalar>
std::vector<ExtractorEvidence> bundle_evidence(const BasicFeatureBundle<Scalar>& bundle, Parallelism par = {}) {
  std::vector<ExtractorEvidence> out(bundle.models());
  detail::parallel_for(bundle.models(), par,
                       [&](std::size_t i) { out[i] = extractor_evidence(bundle.matrix(i), bundle.labels()); });
  return out;
}

inline RamScore ram(std::span<const ExtractorEvidence> evidence, const LabelVector& y) {
  detail::require(!evidence.empty(), ErrorCode::invalid_argument, "RAM needs at least one extractor");
  const auto m = static_cast<std::uint64_t>(evidence.size());
  RamScore out{std::vector<double>(y.size())};
  for (std::size_t j = 0; j < y.size(); ++j) {
    std::uint64_t sum = 0;
    for (const auto& e : evidence) sum += e.ranks.ranks[j];
    out.values[j] = static_cast<double>(sum) / static_cast<double>(m * y.class_size(y[j]));
  }
  return out;
}

inline AplScore apl(std::span<const ExtractorEvidence> evidence, const LabelVector& y) {
  detail::require(!evidence.empty(), ErrorCode::invalid_argument, "APL needs at least one extractor");
  const std::size_t m = evidence.size();
  AplScore out{m, std::vector<std::uint8_t>(y.size() * m), std::vector<double>(y.size())};
  for (std::size_t j = 0; j < y.size(); ++j) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < m; ++i) {
      bool hit = evidence[i].pseudo_labels[j] == y[j];
      out.hits[j * m + i] = hit ? 1 : 0;
      correct += hit ? 1 : 0;
    }
    out.values[j] = static_cast<double>(correct) / static_cast<double>(m);
  }
  return out;
}

template <typename Scalar>
RamScore ram(const BasicFeatureBundle<Scalar>& bundle, Parallelism par = {}) {
  return ram(bundle_evidence(bundle, par), bundle.labels());
}

template <typename Scalar>
AplScore apl(const BasicFeatureBundle<Scalar>& bundle, Parallelism par = {}) {
  return apl(bundle_evidence(bundle, par), bundle.labels());
}

/// w1 = alpha + (1 - alpha) / (1 + exp(beta * (p - 0.5))), w2 = 1 - w1.
inline FusionWeights weights(double alpha, double beta, double p) {
  detail::require(p > 0.0 && p <= 1.0, ErrorCode::invalid_argument, "sampling rate must lie in (0, 1]");
  detail::require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::invalid_argument, "alpha must lie in [0, 1]");
  detail::require(std::isfinite(beta), ErrorCode::invalid_argument, "beta must be finite");
  FusionWeights w;
  w.alpha = alpha;
  w.beta = beta;
  w.p = p;
  w.w1 = alpha + (1.0 - alpha) * (1.0 / (1.0 + std::exp(beta * (p - 0.5))));
  w.w2 = 1.0 - w.w1;
  return w;
}

inline FusionWeights equal_weights(double p) {
  detail::require(p > 0.0 && p <= 1.0, ErrorCode::invalid_argument, "sampling rate must lie in (0, 1]");
  FusionWeights w;
  w.w1 = 1.0;
  w.w2 = 1.0;
  w.p = p;
  w.equal_weights = true;
  return w;
}

inline ScoreVector ram_apl_score(const RamScore& r, const AplScore& a, const FusionWeights& w) {
  detail::require(r.values.size() == a.values.size(), ErrorCode::sample_count_mismatch, "RAM/APL length mismatch");
  ScoreVector score(r.values.size());
  for (std::size_t j = 0; j < score.size(); ++j) score[j] = w.w1 * r.values[j] + w.w2 * (1.0 - a.values[j]);
  return score;
}

struct ScoreBreakdown {
  RamScore ram;
  AplScore apl;
  FusionWeights weights;
  ScoreVector score;
};

/// RAM, APL and the fused score from a single geometry pass per extractor.
template <typename Scalar>
ScoreBreakdown score_bundle(const BasicFeatureBundle<Scalar>& bundle, const FusionWeights& w, Parallelism par = {}) {
  auto evidence = bundle_evidence(bundle, par);
  ScoreBreakdown out{ram(evidence, bundle.labels()), apl(evidence, bundle.labels()), w, {}};
  out.score = ram_apl_score(out.ram, out.apl, w);
  return out;
}

}  // namespace coresel
