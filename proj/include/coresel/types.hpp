#pragma once

/// Core domain types: per-extractor feature matrices, class labels, the
/// multi-extractor bundle, and the result of a selection run.
///
/// All types validate their invariants on construction and are immutable
/// afterwards, so a constructed value can be shared freely across threads.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "coresel/error.hpp"

namespace coresel {

using Label = std::uint32_t;
using ScoreVector = std::vector<double>;

/// Dense n x k matrix from a single feature extractor, stored row-major.
/// `Scalar` is the storage type; arithmetic on it is always done in double.
template <typename Scalar>
class BasicFeatureMatrix {
 public:
  using value_type = Scalar;

  BasicFeatureMatrix(std::string extractor_id, std::size_t n, std::size_t k, std::vector<Scalar> data)
      : extractor_id_(std::move(extractor_id)), n_(n), k_(k), data_(std::move(data)) {
    detail::require(n_ >= 1, ErrorCode::dimension_mismatch, "feature matrix needs at least one row");
    detail::require(k_ >= 1, ErrorCode::dimension_mismatch, "feature matrix needs at least one column");
    detail::require(data_.size() == n_ * k_, ErrorCode::dimension_mismatch,
                    "payload has " + std::to_string(data_.size()) + " values, expected " +
                        std::to_string(n_ * k_));
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(static_cast<double>(data_[i]))) {
        detail::fail(ErrorCode::non_finite_value,
                     "row " + std::to_string(i / k_) + " column " + std::to_string(i % k_));
      }
    }
  }

  const std::string& extractor_id() const noexcept { return extractor_id_; }
  std::size_t rows() const noexcept { return n_; }
  std::size_t cols() const noexcept { return k_; }

  std::span<const Scalar> row(std::size_t j) const noexcept { return {data_.data() + j * k_, k_}; }
  Scalar operator()(std::size_t j, std::size_t d) const noexcept { return data_[j * k_ + d]; }
  std::span<const Scalar> data() const noexcept { return data_; }

  /// Same values under a different tag.
  BasicFeatureMatrix with_id(std::string id) const { return {std::move(id), n_, k_, data_}; }

  template <typename Other>
  BasicFeatureMatrix<Other> cast() const {
    return {extractor_id_, n_, k_, std::vector<Other>(data_.begin(), data_.end())};
  }

  friend bool operator==(const BasicFeatureMatrix&, const BasicFeatureMatrix&) = default;

 private:
  std::string extractor_id_;
  std::size_t n_;
  std::size_t k_;
  std::vector<Scalar> data_;
};

using FeatureMatrix = BasicFeatureMatrix<float>;

/// Zero-based class labels. Every class id in [0, classes) must occur.
class LabelVector {
 public:
  LabelVector(std::vector<Label> labels, std::size_t classes)
      : labels_(std::move(labels)), classes_(classes), members_(classes) {
    detail::require(!labels_.empty(), ErrorCode::sample_count_mismatch, "label vector is empty");
    detail::require(classes_ >= 1, ErrorCode::invalid_argument, "class count must be positive");
    for (std::size_t j = 0; j < labels_.size(); ++j) {
      if (labels_[j] >= classes_) {
        detail::fail(ErrorCode::label_out_of_range, "sample " + std::to_string(j) + " has label " +
                                                        std::to_string(labels_[j]) + " >= " +
                                                        std::to_string(classes_));
      }
      members_[labels_[j]].push_back(j);
    }
    for (std::size_t c = 0; c < classes_; ++c) {
      detail::require(!members_[c].empty(), ErrorCode::empty_class,
                      "class " + std::to_string(c) + " has no samples");
    }
  }

  /// Class count inferred as max label + 1.
  static LabelVector infer(std::vector<Label> labels) {
    std::size_t c = labels.empty() ? 0 : static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
    return {std::move(labels), c};
  }

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t classes() const noexcept { return classes_; }
  Label operator[](std::size_t j) const noexcept { return labels_[j]; }
  std::span<const Label> values() const noexcept { return labels_; }

  /// Ascending sample indices of class `c`.
  std::span<const std::size_t> members(std::size_t c) const noexcept { return members_[c]; }
  std::size_t class_size(std::size_t c) const noexcept { return members_[c].size(); }

  friend bool operator==(const LabelVector& a, const LabelVector& b) {
    return a.classes_ == b.classes_ && a.labels_ == b.labels_;
  }

 private:
  std::vector<Label> labels_;
  std::size_t classes_;
  std::vector<std::vector<std::size_t>> members_;
};

/// m feature matrices over the same samples plus their labels. Matrix order
/// is kept for provenance only; every score is invariant under reordering.
template <typename Scalar>
class BasicFeatureBundle {
 public:
  using matrix_type = BasicFeatureMatrix<Scalar>;

  BasicFeatureBundle(std::vector<matrix_type> matrices, LabelVector labels)
      : matrices_(std::move(matrices)), labels_(std::move(labels)) {
    detail::require(!matrices_.empty(), ErrorCode::invalid_argument, "bundle needs at least one feature matrix");
    std::unordered_set<std::string> ids;
    for (const auto& m : matrices_) {
      detail::require(m.rows() == labels_.size(), ErrorCode::sample_count_mismatch,
                      "matrix '" + m.extractor_id() + "' has " + std::to_string(m.rows()) +
                          " rows but there are " + std::to_string(labels_.size()) + " labels");
      detail::require(ids.insert(m.extractor_id()).second, ErrorCode::duplicate_extractor_id,
                      "extractor id '" + m.extractor_id() + "' appears twice");
    }
  }

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t models() const noexcept { return matrices_.size(); }
  const std::vector<matrix_type>& matrices() const noexcept { return matrices_; }
  const matrix_type& matrix(std::size_t i) const noexcept { return matrices_[i]; }
  const LabelVector& labels() const noexcept { return labels_; }

  /// Matrix with the given extractor id; throws invalid_argument if absent.
  const matrix_type& find(const std::string& id) const {
    for (const auto& m : matrices_) {
      if (m.extractor_id() == id) return m;
    }
    detail::fail(ErrorCode::invalid_argument, "no feature matrix with extractor id '" + id + "'");
  }

 private:
  std::vector<matrix_type> matrices_;
  LabelVector labels_;
};

using FeatureBundle = BasicFeatureBundle<float>;

struct SelectionResult {
  std::vector<std::size_t> selected;  // ascending
  std::vector<std::size_t> per_class_budget;  // indexed by class id
  double p = 0.0;
  std::string method;
  std::optional<ScoreVector> scores;

  /// Throws invalid_argument if the result is not a valid selection over `y`.
  void validate(const LabelVector& y) const {
    using detail::require;
    require(per_class_budget.size() == y.classes(), ErrorCode::invalid_argument, "budget/class count mismatch");
    require(std::is_sorted(selected.begin(), selected.end()) &&
                std::adjacent_find(selected.begin(), selected.end()) == selected.end(),
            ErrorCode::invalid_argument, "selected indices must be strictly ascending");
    std::vector<std::size_t> counts(y.classes(), 0);
    for (auto j : selected) {
      require(j < y.size(), ErrorCode::invalid_argument, "selected index out of range");
      ++counts[y[j]];
    }
    for (std::size_t c = 0; c < y.classes(); ++c) {
      require(counts[c] == per_class_budget[c], ErrorCode::invalid_argument,
              "class " + std::to_string(c) + " count differs from its budget");
      require(counts[c] <= y.class_size(c), ErrorCode::invalid_argument, "class budget exceeds class size");
    }
    require(p > 0.0 && p <= 1.0, ErrorCode::invalid_argument, "sampling rate outside (0, 1]");
  }
};

}  // namespace coresel
