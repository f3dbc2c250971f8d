#pragma once

/// Class-balanced budget planning and the subset selectors.
///
/// Every selector works class by class against a BudgetPlan: the plan fixes
/// how many samples each class contributes, the selector decides which.
/// Ties are always broken towards the lower sample index.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coresel/error.hpp"
#include "coresel/geometry.hpp"
#include "coresel/parallel.hpp"
#include "coresel/scoring.hpp"
#include "coresel/types.hpp"

namespace coresel {

struct BudgetPlan {
  double p = 0.0;
  std::size_t total = 0;
  std::vector<std::size_t> per_class;
};

/// total = round-half-up(p * N); each class gets floor(p * |S_c|) and the
/// remainder goes one unit at a time to the largest fractional parts
/// (ties to the smaller class id), skipping classes that are already full.
inline BudgetPlan plan_budget(const LabelVector& y, double p) {
  detail::require(p > 0.0 && p <= 1.0, ErrorCode::invalid_argument, "sampling rate must lie in (0, 1]");
  const std::size_t n = y.size();
  const std::size_t classes = y.classes();
  BudgetPlan plan{p, std::min(n, static_cast<std::size_t>(std::floor(p * static_cast<double>(n) + 0.5))),
                  std::vector<std::size_t>(classes)};
  std::vector<double> frac(classes);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double exact = p * static_cast<double>(y.class_size(c));
    plan.per_class[c] = std::min(y.class_size(c), static_cast<std::size_t>(std::floor(exact)));
    frac[c] = exact - std::floor(exact);
    assigned += plan.per_class[c];
  }
  std::vector<std::size_t> order(classes);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });

  while (assigned < plan.total) {
    for (auto c : order) {
      if (assigned == plan.total) break;
      if (plan.per_class[c] < y.class_size(c)) {
        ++plan.per_class[c];
        ++assigned;
      }
    }
  }
  // Only reachable through rounding noise in p * |S_c|.
  while (assigned > plan.total) {
    for (auto it = order.rbegin(); it != order.rend() && assigned > plan.total; ++it) {
      if (plan.per_class[*it] > 0) {
        --plan.per_class[*it];
        --assigned;
      }
    }
  }
  return plan;
}

enum class Method { ram_apl, random, min, mds, kcg, herding, graph_cut };

constexpr std::string_view to_string(Method m) {
  switch (m) {
    case Method::ram_apl: return "ram_apl";
    case Method::random: return "random";
    case Method::min: return "min";
    case Method::mds: return "mds";
    case Method::kcg: return "kcg";
    case Method::herding: return "herding";
    case Method::graph_cut: return "graph_cut";
  }
  return "unknown";
}

inline std::optional<Method> parse_method(std::string_view name) {
  for (auto m : {Method::ram_apl, Method::random, Method::min, Method::mds, Method::kcg, Method::herding,
                 Method::graph_cut}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

struct SelectorConfig {
  Method method = Method::ram_apl;
  std::optional<std::uint64_t> seed;  // random only
  double lambda = 1.0;                // graph_cut only
  double alpha = kDefaultAlpha;       // ram_apl only
  double beta = kDefaultBeta;
  bool equal_weights = false;
  std::optional<std::string> primary_matrix;  // baselines; defaults to the first matrix

  void validate() const {
    detail::require(std::isfinite(lambda) && lambda >= 0.0, ErrorCode::invalid_argument, "lambda must be >= 0");
    detail::require(seed.has_value() == (method == Method::random), ErrorCode::invalid_argument,
                    method == Method::random ? "random selection requires a seed"
                                             : "a seed is only meaningful for random selection");
    detail::require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::invalid_argument, "alpha must lie in [0, 1]");
    detail::require(std::isfinite(beta), ErrorCode::invalid_argument, "beta must be finite");
  }
};

namespace detail {

/// Runs pick(c, members, budget) per class and merges in class order.
template <typename Pick>
SelectionResult select_per_class(const LabelVector& y, const BudgetPlan& plan, std::string_view method,
                                 Parallelism par, Pick&& pick) {
  require(plan.per_class.size() == y.classes(), ErrorCode::invalid_argument, "budget plan does not match labels");
  for (std::size_t c = 0; c < y.classes(); ++c) {
    require(plan.per_class[c] <= y.class_size(c), ErrorCode::invalid_argument,
            "budget for class " + std::to_string(c) + " exceeds its size");
  }
  std::vector<std::vector<std::size_t>> chosen(y.classes());
  parallel_for(y.classes(), par, [&](std::size_t c) {
    chosen[c] = plan.per_class[c] == 0 ? std::vector<std::size_t>{} : pick(c, y.members(c), plan.per_class[c]);
  });
  SelectionResult out;
  out.p = plan.p;
  out.method = std::string(method);
  out.per_class_budget = plan.per_class;
  for (auto& picks : chosen) out.selected.insert(out.selected.end(), picks.begin(), picks.end());
  std::sort(out.selected.begin(), out.selected.end());
  return out;
}

inline std::vector<std::size_t> smallest_keys(std::span<const std::size_t> members, std::span<const double> key,
                                              std::size_t budget) {
  auto order = order_by_key(members, key);
  order.resize(budget);
  return order;
}

/// Row j scaled to unit length, in double.
template <typename Scalar>
std::vector<double> unit_row(const BasicFeatureMatrix<Scalar>& f, std::size_t j) {
  auto row = f.row(j);
  double norm = 0.0;
  for (auto v : row) norm += static_cast<double>(v) * static_cast<double>(v);
  norm = std::sqrt(norm);
  require(norm > 0.0, ErrorCode::zero_vector, "sample " + std::to_string(j) + " has a zero feature vector");
  std::vector<double> u(row.size());
  for (std::size_t d = 0; d < row.size(); ++d) u[d] = static_cast<double>(row[d]) / norm;
  return u;
}

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) acc += a[d] * b[d];
  return acc;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Per-class greedy primitives. Each returns the chosen sample indices in the
// order they were picked.

/// Farthest-first traversal seeded with the sample farthest from the class
/// centroid.
template <typename Scalar>
std::vector<std::size_t> kcenter_greedy(const BasicFeatureMatrix<Scalar>& f, std::span<const std::size_t> members,
                                        std::size_t budget) {
  const std::size_t s = members.size();
  budget = std::min(budget, s);
  std::vector<double> centroid(f.cols(), 0.0);
  for (auto j : members) {
    auto row = f.row(j);
    for (std::size_t d = 0; d < f.cols(); ++d) centroid[d] += static_cast<double>(row[d]);
  }
  for (auto& v : centroid) v /= static_cast<double>(s);

  std::vector<double> nearest(s);
  for (std::size_t a = 0; a < s; ++a) nearest[a] = euclidean_distance(f.row(members[a]), std::span<const double>(centroid));
  std::vector<bool> taken(s, false);
  std::vector<std::size_t> picks;
  picks.reserve(budget);
  for (std::size_t step = 0; step < budget; ++step) {
    std::size_t best = s;
    for (std::size_t a = 0; a < s; ++a) {
      if (!taken[a] && (best == s || nearest[a] > nearest[best])) best = a;
    }
    taken[best] = true;
    picks.push_back(members[best]);
    if (step == 0) std::fill(nearest.begin(), nearest.end(), std::numeric_limits<double>::infinity());
    auto center = f.row(members[best]);
    for (std::size_t a = 0; a < s; ++a) {
      if (!taken[a]) nearest[a] = std::min(nearest[a], euclidean_distance(f.row(members[a]), center));
    }
  }
  return picks;
}

/// Herding: w <- mean; pick argmax <w, x>; w <- w + mean - x.
template <typename Scalar>
std::vector<std::size_t> herding_greedy(const BasicFeatureMatrix<Scalar>& f, std::span<const std::size_t> members,
                                        std::size_t budget) {
  const std::size_t s = members.size();
  const std::size_t k = f.cols();
  budget = std::min(budget, s);
  std::vector<double> mean(k, 0.0);
  for (auto j : members) {
    auto row = f.row(j);
    for (std::size_t d = 0; d < k; ++d) mean[d] += static_cast<double>(row[d]);
  }
  for (auto& v : mean) v /= static_cast<double>(s);

  std::vector<double> w = mean;
  std::vector<bool> taken(s, false);
  std::vector<std::size_t> picks;
  picks.reserve(budget);
  for (std::size_t step = 0; step < budget; ++step) {
    std::size_t best = s;
    double best_value = 0.0;
    for (std::size_t a = 0; a < s; ++a) {
      if (taken[a]) continue;
      auto row = f.row(members[a]);
      double value = 0.0;
      for (std::size_t d = 0; d < k; ++d) value += w[d] * static_cast<double>(row[d]);
      if (best == s || value > best_value) {
        best = a;
        best_value = value;
      }
    }
    taken[best] = true;
    picks.push_back(members[best]);
    auto row = f.row(members[best]);
    for (std::size_t d = 0; d < k; ++d) w[d] += mean[d] - static_cast<double>(row[d]);
  }
  return picks;
}

enum class GraphCutMode { naive, lazy };

/// Greedy maximization of
///   f(S) = sum_{i in V\S, j in S} w(i,j) - lambda * sum_{i<j in S} w(i,j)
/// with w(i,j) = (1 + cos(F_i, F_j)) / 2. The marginal gain of e is
///   sum_{i != e} w(i,e) - (2 + lambda) * sum_{j in S} w(e,j),
/// which only shrinks as S grows, so lazy evaluation picks the same sequence.
template <typename Scalar>
std::vector<std::size_t> graph_cut_greedy(const BasicFeatureMatrix<Scalar>& f, std::span<const std::size_t> members,
                                          std::size_t budget, double lambda, GraphCutMode mode = GraphCutMode::lazy) {
  detail::require(std::isfinite(lambda) && lambda >= 0.0, ErrorCode::invalid_argument, "lambda must be >= 0");
  const std::size_t s = members.size();
  budget = std::min(budget, s);
  std::vector<std::vector<double>> unit(s);
  for (std::size_t a = 0; a < s; ++a) unit[a] = detail::unit_row(f, members[a]);
  auto sim = [&](std::size_t a, std::size_t b) { return 0.5 * (1.0 + detail::dot(unit[a], unit[b])); };

  std::vector<double> total(s, 0.0);
  for (std::size_t a = 0; a < s; ++a) {
    for (std::size_t b = 0; b < s; ++b) {
      if (a != b) total[a] += sim(a, b);
    }
  }
  const double penalty = 2.0 + lambda;
  std::vector<std::size_t> chosen;  // local positions, in pick order
  chosen.reserve(budget);
  // acc[a] = sum of sim(a, chosen[t]) for t < upto[a], accumulated in pick order
  std::vector<double> acc(s, 0.0);
  std::vector<std::size_t> upto(s, 0);
  auto refresh = [&](std::size_t a) {
    for (; upto[a] < chosen.size(); ++upto[a]) acc[a] += sim(a, chosen[upto[a]]);
    return total[a] - penalty * acc[a];
  };

  std::vector<bool> taken(s, false);
  if (mode == GraphCutMode::naive) {
    for (std::size_t step = 0; step < budget; ++step) {
      std::size_t best = s;
      double best_gain = 0.0;
      for (std::size_t a = 0; a < s; ++a) {
        if (taken[a]) continue;
        double gain = refresh(a);
        if (best == s || gain > best_gain) {
          best = a;
          best_gain = gain;
        }
      }
      taken[best] = true;
      chosen.push_back(best);
    }
  } else {
    struct Entry {
      double bound;
      std::size_t pos;
      std::size_t stamp;
    };
    auto worse = [](const Entry& x, const Entry& y) { return x.bound < y.bound || (x.bound == y.bound && x.pos > y.pos); };
    std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
    for (std::size_t a = 0; a < s; ++a) heap.push({total[a], a, 0});
    while (chosen.size() < budget) {
      auto top = heap.top();
      heap.pop();
      if (top.stamp == chosen.size()) {
        taken[top.pos] = true;
        chosen.push_back(top.pos);
      } else {
        heap.push({refresh(top.pos), top.pos, chosen.size()});
      }
    }
  }
  std::vector<std::size_t> picks(chosen.size());
  for (std::size_t t = 0; t < chosen.size(); ++t) picks[t] = members[chosen[t]];
  return picks;
}

// ---------------------------------------------------------------------------
// Selectors

template <typename Scalar>
SelectionResult select_ram_apl(const BasicFeatureBundle<Scalar>& bundle, const BudgetPlan& plan,
                               const SelectorConfig& cfg, Parallelism par = {}) {
  auto w = cfg.equal_weights ? equal_weights(plan.p) : weights(cfg.alpha, cfg.beta, plan.p);
  auto breakdown = score_bundle(bundle, w, par);
  const auto& score = breakdown.score;
  auto out = detail::select_per_class(bundle.labels(), plan, to_string(Method::ram_apl), par,
                                      [&](std::size_t, std::span<const std::size_t> members, std::size_t budget) {
                                        return detail::smallest_keys(members, score, budget);
                                      });
  out.scores = std::move(breakdown.score);
  return out;
}

template <typename Scalar>
SelectionResult select_min(const BasicFeatureMatrix<Scalar>& f, const LabelVector& y, const BudgetPlan& plan,
                           Parallelism par = {}) {
  auto d = own_centroid_distances(f, y, class_centroids(f, y));
  auto out = detail::select_per_class(y, plan, to_string(Method::min), par,
                                      [&](std::size_t, std::span<const std::size_t> members, std::size_t budget) {
                                        return detail::smallest_keys(members, d, budget);
                                      });
  out.scores = std::move(d);
  return out;
}

/// Median of a class's centroid distances (mean of the middle pair for even sizes).
inline double class_median(std::span<const std::size_t> members, std::span<const double> d) {
  std::vector<double> v;
  v.reserve(members.size());
  for (auto j : members) v.push_back(d[j]);
  std::sort(v.begin(), v.end());
  const std::size_t s = v.size();
  return s % 2 == 1 ? v[s / 2] : 0.5 * (v[s / 2 - 1] + v[s / 2]);
}

template <typename Scalar>
SelectionResult select_mds(const BasicFeatureMatrix<Scalar>& f, const LabelVector& y, const BudgetPlan& plan,
                           Parallelism par = {}) {
  auto d = own_centroid_distances(f, y, class_centroids(f, y));
  std::vector<double> key(d.size());
  for (std::size_t c = 0; c < y.classes(); ++c) {
    const double median = class_median(y.members(c), d);
    for (auto j : y.members(c)) key[j] = std::abs(d[j] - median);
  }
  auto out = detail::select_per_class(y, plan, to_string(Method::mds), par,
                                      [&](std::size_t, std::span<const std::size_t> members, std::size_t budget) {
                                        return detail::smallest_keys(members, key, budget);
                                      });
  out.scores = std::move(key);
  return out;
}

template <typename Scalar>
SelectionResult select_kcg(const BasicFeatureMatrix<Scalar>& f, const LabelVector& y, const BudgetPlan& plan,
                           Parallelism par = {}) {
  detail::require(f.rows() == y.size(), ErrorCode::sample_count_mismatch, "matrix/label length mismatch");
  return detail::select_per_class(y, plan, to_string(Method::kcg), par,
                                  [&](std::size_t, std::span<const std::size_t> members, std::size_t budget) {
                                    return kcenter_greedy(f, members, budget);
                                  });
}

template <typename Scalar>
SelectionResult select_herding(const BasicFeatureMatrix<Scalar>& f, const LabelVector& y, const BudgetPlan& plan,
                               Parallelism par = {}) {
  detail::require(f.rows() == y.size(), ErrorCode::sample_count_mismatch, "matrix/label length mismatch");
  return detail::select_per_class(y, plan, to_string(Method::herding), par,
                                  [&](std::size_t, std::span<const std::size_t> members, std::size_t budget) {
                                    return herding_greedy(f, members, budget);
                                  });
}

template <typename Scalar>
SelectionResult select_graph_cut(const BasicFeatureMatrix<Scalar>& f, const LabelVector& y, const BudgetPlan& plan,
                                 double lambda, Parallelism par = {}, GraphCutMode mode = GraphCutMode::lazy) {
  detail::require(f.rows() == y.size(), ErrorCode::sample_count_mismatch, "matrix/label length mismatch");
  return detail::select_per_class(y, plan, to_string(Method::graph_cut), par,
                                  [&](std::size_t, std::span<const std::size_t> members, std::size_t budget) {
                                    return graph_cut_greedy(f, members, budget, lambda, mode);
                                  });
}

/// Uniform sampling without replacement; class c draws from a generator
/// seeded with (seed, c), so results do not depend on the thread count.
inline SelectionResult select_random(const LabelVector& y, const BudgetPlan& plan, std::uint64_t seed,
                                     Parallelism par = {}) {
  return detail::select_per_class(
      y, plan, to_string(Method::random), par, [&](std::size_t c, std::span<const std::size_t> members, std::size_t budget) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(std::uint64_t(c) >> 32)};
        std::mt19937_64 rng(seq);
        std::vector<std::size_t> pool(members.begin(), members.end());
        for (std::size_t t = 0; t < budget; ++t) {
          std::uniform_int_distribution<std::size_t> pick(t, pool.size() - 1);
          std::swap(pool[t], pool[pick(rng)]);
        }
        pool.resize(budget);
        return pool;
      });
}

/// Dispatches on cfg.method. Baselines use cfg.primary_matrix (or the first
/// matrix); ram_apl uses every matrix in the bundle.
template <typename Scalar>
SelectionResult select(const BasicFeatureBundle<Scalar>& bundle, const BudgetPlan& plan, const SelectorConfig& cfg,
                       Parallelism par = {}) {
  cfg.validate();
  const auto& y = bundle.labels();
  const auto& f = cfg.primary_matrix ? bundle.find(*cfg.primary_matrix) : bundle.matrix(0);
  switch (cfg.method) {
    case Method::ram_apl: return select_ram_apl(bundle, plan, cfg, par);
    case Method::random: return select_random(y, plan, *cfg.seed, par);
    case Method::min: return select_min(f, y, plan, par);
    case Method::mds: return select_mds(f, y, plan, par);
    case Method::kcg: return select_kcg(f, y, plan, par);
    case Method::herding: return select_herding(f, y, plan, par);
    case Method::graph_cut: return select_graph_cut(f, y, plan, cfg.lambda, par);
  }
  detail::fail(ErrorCode::invalid_argument, "unknown selection method");
}

}  // namespace coresel
