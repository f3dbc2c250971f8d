#pragma once

/// Post-hoc metrics: subset diversity, pseudo-label accuracy per extractor,
/// PCA reduction and cross-extractor similarity.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coresel/error.hpp"
#include "coresel/geometry.hpp"
#include "coresel/parallel.hpp"
#include "coresel/scoring.hpp"
#include "coresel/selectors.hpp"
#include "coresel/types.hpp"

namespace coresel {

template <typename Scalar>
double cosine_similarity(std::span<const Scalar> a, std::span<const Scalar> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double x = static_cast<double>(a[d]);
    const double y = static_cast<double>(b[d]);
    ab += x * y;
    aa += x * x;
    bb += y * y;
  }
  detail::require(aa > 0.0 && bb > 0.0, ErrorCode::zero_vector, "cosine similarity of a zero vector");
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

struct DiversityReport {
  std::map<Label, double> per_class;  // classes with < 2 selected samples are absent
  std::optional<double> whole;        // absent with < 2 selected samples
};

/// Mean cosine distance (1 - cos) over unordered pairs of selected samples.
template <typename Scalar>
DiversityReport subset_diversity(const BasicFeatureMatrix<Scalar>& f, const LabelVector& y,
                                 const SelectionResult& sel) {
  detail::require(f.rows() == y.size(), ErrorCode::sample_count_mismatch, "matrix/label length mismatch");
  for (auto j : sel.selected) detail::require(j < y.size(), ErrorCode::invalid_argument, "selected index out of range");
  const auto& s = sel.selected;
  std::vector<double> class_sum(y.classes(), 0.0);
  std::vector<std::size_t> class_pairs(y.classes(), 0);
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < s.size(); ++a) {
    for (std::size_t b = a + 1; b < s.size(); ++b) {
      const double dist = 1.0 - cosine_similarity(f.row(s[a]), f.row(s[b]));
      sum += dist;
      ++pairs;
      if (y[s[a]] == y[s[b]]) {
        class_sum[y[s[a]]] += dist;
        ++class_pairs[y[s[a]]];
      }
    }
  }
  DiversityReport report;
  if (pairs > 0) report.whole = sum / static_cast<double>(pairs);
  for (std::size_t c = 0; c < y.classes(); ++c) {
    if (class_pairs[c] > 0) report.per_class[static_cast<Label>(c)] = class_sum[c] / static_cast<double>(class_pairs[c]);
  }
  return report;
}

struct PseudoLabelAccuracy {
  std::string extractor_id;
  double overall = 0.0;
  std::vector<std::size_t> class_correct;
  std::vector<std::size_t> class_total;

  double class_accuracy(std::size_t c) const {
    return static_cast<double>(class_correct[c]) / static_cast<double>(class_total[c]);
  }
};

/// Fraction of samples whose nearest-centroid pseudo label equals the given
/// label, per extractor, with a per-class breakdown over the given labels.
template <typename Scalar>
std::vector<PseudoLabelAccuracy> pseudo_label_report(const BasicFeatureBundle<Scalar>& bundle, Parallelism par = {}) {
  const auto& y = bundle.labels();
  auto evidence = bundle_evidence(bundle, par);
  std::vector<PseudoLabelAccuracy> out;
  for (std::size_t i = 0; i < bundle.models(); ++i) {
    PseudoLabelAccuracy acc{bundle.matrix(i).extractor_id(), 0.0, std::vector<std::size_t>(y.classes(), 0),
                            std::vector<std::size_t>(y.classes(), 0)};
    std::size_t correct = 0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      const bool hit = evidence[i].pseudo_labels[j] == y[j];
      ++acc.class_total[y[j]];
      if (hit) {
        ++acc.class_correct[y[j]];
        ++correct;
      }
    }
    acc.overall = static_cast<double>(correct) / static_cast<double>(y.size());
    out.push_back(std::move(acc));
  }
  return out;
}

/// Projects the centered rows onto the top-d eigenvectors of the sample
/// covariance, in descending eigenvalue order. Each component is signed so
/// that its largest-magnitude entry is nonnegative (ties: lowest coordinate).
template <typename Scalar>
BasicFeatureMatrix<double> reduce_pca(const BasicFeatureMatrix<Scalar>& f, std::size_t d) {
  const std::size_t n = f.rows();
  const std::size_t k = f.cols();
  detail::require(d >= 1 && d <= std::min(n, k), ErrorCode::invalid_argument,
                  "target dimension " + std::to_string(d) + " outside [1, " + std::to_string(std::min(n, k)) + "]");
  Eigen::MatrixXd x(n, k);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t c = 0; c < k; ++c) x(j, c) = static_cast<double>(f(j, c));
  }
  Eigen::RowVectorXd mean = x.colwise().sum() / static_cast<double>(n);
  x.rowwise() -= mean;
  Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(std::max<std::size_t>(n - 1, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  detail::require(solver.info() == Eigen::Success, ErrorCode::invalid_argument, "covariance eigendecomposition failed");

  Eigen::MatrixXd basis(k, d);
  for (std::size_t c = 0; c < d; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(static_cast<Eigen::Index>(k - 1 - c));
    Eigen::Index arg = 0;
    for (Eigen::Index r = 1; r < v.size(); ++r) {
      if (std::abs(v(r)) > std::abs(v(arg))) arg = r;
    }
    if (v(arg) < 0.0) v = -v;
    basis.col(static_cast<Eigen::Index>(c)) = v;
  }
  Eigen::MatrixXd projected = x * basis;
  std::vector<double> values(n * d);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t c = 0; c < d; ++c) values[j * d + c] = projected(j, c);
  }
  return {f.extractor_id(), n, d, std::move(values)};
}

struct CrossModelSimilarity {
  std::vector<std::string> extractor_ids;
  std::size_t reduced_dim = 0;
  std::vector<double> pairwise;  // m x m, row-major

  std::size_t models() const noexcept { return extractor_ids.size(); }
  double operator()(std::size_t a, std::size_t b) const noexcept { return pairwise[a * models() + b]; }
};

/// Every matrix is PCA-reduced to the smallest dimensionality present
/// (capped at n); entry (a, b) is the mean over samples of cos(A_j, B_j).
template <typename Scalar>
CrossModelSimilarity cross_model_similarity(std::span<const BasicFeatureMatrix<Scalar>> matrices, Parallelism par = {}) {
  detail::require(matrices.size() >= 2, ErrorCode::invalid_argument, "cross-model similarity needs at least two matrices");
  const std::size_t n = matrices.front().rows();
  std::size_t d = n;
  for (const auto& m : matrices) {
    detail::require(m.rows() == n, ErrorCode::sample_count_mismatch, "matrices disagree on sample count");
    d = std::min(d, m.cols());
  }
  const std::size_t m = matrices.size();
  std::vector<std::optional<BasicFeatureMatrix<double>>> reduced(m);
  detail::parallel_for(m, par, [&](std::size_t i) { reduced[i] = reduce_pca(matrices[i], d); });

  CrossModelSimilarity out;
  out.reduced_dim = d;
  out.pairwise.assign(m * m, 0.0);
  for (const auto& mat : matrices) out.extractor_ids.push_back(mat.extractor_id());
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) {
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) sum += cosine_similarity(reduced[a]->row(j), reduced[b]->row(j));
      const double mean = sum / static_cast<double>(n);
      out.pairwise[a * m + b] = mean;
      out.pairwise[b * m + a] = mean;
    }
  }
  return out;
}

template <typename Scalar>
CrossModelSimilarity cross_model_similarity(const BasicFeatureBundle<Scalar>& bundle, Parallelism par = {}) {
  return cross_model_similarity(std::span<const BasicFeatureMatrix<Scalar>>(bundle.matrices()), par);
}

}  // namespace coresel
