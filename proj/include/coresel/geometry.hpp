#pragma once

/// Class centroids, sample-to-centroid distances and intra-class distance
/// ranks. All accumulation is in double, in ascending sample order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "coresel/error.hpp"
#include "coresel/types.hpp"

namespace coresel {

struct CentroidSet {
  std::string extractor_id;
  std::size_t dim = 0;
  std::vector<double> centroids;  // classes() x dim, row-major
  std::vector<std::size_t> class_sizes;

  std::size_t classes() const noexcept { return class_sizes.size(); }
  std::span<const double> centroid(std::size_t c) const noexcept { return {centroids.data() + c * dim, dim}; }
};

/// n x c matrix of Euclidean distances, row j holds D(F_j).
struct DistanceMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t j, std::size_t c) const noexcept { return values[j * cols + c]; }
  std::span<const double> row(std::size_t j) const noexcept { return {values.data() + j * cols, cols}; }
};

/// 1-based rank of each sample within its own class.
struct RankTable {
  std::string extractor_id;
  std::vector<std::uint32_t> ranks;
};

template <typename Scalar, typename Other>
double euclidean_distance(std::span<const Scalar> a, std::span<const Other> b) noexcept {
  double acc = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    double diff = static_cast<double>(a[d]) - static_cast<double>(b[d]);
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

template <typename Scalar>
CentroidSet class_centroids(const BasicFeatureMatrix<Scalar>& f, const LabelVector& y) {
  detail::require(f.rows() == y.size(), ErrorCode::sample_count_mismatch,
                  "matrix '" + f.extractor_id() + "' and labels disagree on sample count");
  CentroidSet cs{f.extractor_id(), f.cols(), std::vector<double>(y.classes() * f.cols(), 0.0),
                 std::vector<std::size_t>(y.classes(), 0)};
  for (std::size_t c = 0; c < y.classes(); ++c) {
    auto members = y.members(c);
    detail::require(!members.empty(), ErrorCode::empty_class, "class " + std::to_string(c) + " is empty");
    double* out = cs.centroids.data() + c * cs.dim;
    for (auto j : members) {
      auto row = f.row(j);
      for (std::size_t d = 0; d < cs.dim; ++d) out[d] += static_cast<double>(row[d]);
    }
    const double count = static_cast<double>(members.size());
    for (std::size_t d = 0; d < cs.dim; ++d) out[d] /= count;
    cs.class_sizes[c] = members.size();
  }
  return cs;
}

template <typename Scalar>
DistanceMatrix centroid_distances(const BasicFeatureMatrix<Scalar>& f, const CentroidSet& cs) {
  detail::require(f.cols() == cs.dim, ErrorCode::dimension_mismatch,
                  "matrix has " + std::to_string(f.cols()) + " columns, centroids have " + std::to_string(cs.dim));
  DistanceMatrix dm{f.rows(), cs.classes(), std::vector<double>(f.rows() * cs.classes())};
  for (std::size_t j = 0; j < f.rows(); ++j) {
    for (std::size_t c = 0; c < cs.classes(); ++c) {
      dm.values[j * dm.cols + c] = euclidean_distance(f.row(j), cs.centroid(c));
    }
  }
  return dm;
}

/// Distance of every sample to its own class centroid.
template <typename Scalar>
std::vector<double> own_centroid_distances(const BasicFeatureMatrix<Scalar>& f, const LabelVector& y,
                                           const CentroidSet& cs) {
  detail::require(f.cols() == cs.dim, ErrorCode::dimension_mismatch, "centroid dimensionality mismatch");
  std::vector<double> d(f.rows());
  for (std::size_t j = 0; j < f.rows(); ++j) d[j] = euclidean_distance(f.row(j), cs.centroid(y[j]));
  return d;
}

inline std::vector<double> own_centroid_distances(const DistanceMatrix& dm, const LabelVector& y) {
  std::vector<double> d(dm.rows);
  for (std::size_t j = 0; j < dm.rows; ++j) d[j] = dm(j, y[j]);
  return d;
}

/// Members of one class ordered by ascending key, ties by ascending index.
inline std::vector<std::size_t> order_by_key(std::span<const std::size_t> members, std::span<const double> key) {
  std::vector<std::size_t> order(members.begin(), members.end());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  return order;
}

inline RankTable intra_class_ranks(std::span<const double> d_own, const LabelVector& y, std::string extractor_id = {}) {
  detail::require(d_own.size() == y.size(), ErrorCode::sample_count_mismatch, "distance/label length mismatch");
  for (std::size_t j = 0; j < d_own.size(); ++j) {
    detail::require(std::isfinite(d_own[j]), ErrorCode::non_finite_value, "distance of sample " + std::to_string(j));
  }
  RankTable table{std::move(extractor_id), std::vector<std::uint32_t>(y.size(), 0)};
  for (std::size_t c = 0; c < y.classes(); ++c) {
    auto order = order_by_key(y.members(c), d_own);
    for (std::size_t r = 0; r < order.size(); ++r) table.ranks[order[r]] = static_cast<std::uint32_t>(r + 1);
  }
  return table;
}

}  // namespace coresel
