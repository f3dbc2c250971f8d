#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <random>

#include "coresel/analysis.hpp"
#include "coresel/synth.hpp"
#include "oracles.hpp"

using namespace coresel;

namespace {

SelectionResult chosen(std::vector<std::size_t> idx, const LabelVector& y) {
  SelectionResult s;
  s.selected = std::move(idx);
  s.per_class_budget.assign(y.classes(), 0);
  for (auto j : s.selected) ++s.per_class_budget[y[j]];
  s.p = static_cast<double>(s.selected.size()) / static_cast<double>(y.size());
  return s;
}

double total_variance(const BasicFeatureMatrix<double>& f) {
  double v = 0.0;
  for (std::size_t c = 0; c < f.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t j = 0; j < f.rows(); ++j) mean += f(j, c);
    mean /= static_cast<double>(f.rows());
    for (std::size_t j = 0; j < f.rows(); ++j) v += (f(j, c) - mean) * (f(j, c) - mean);
  }
  return v / static_cast<double>(f.rows() - 1);
}

}  // namespace

TEST(Diversity, IdenticalAndOrthogonal) {
  LabelVector y({0, 0, 1}, 2);
  FeatureMatrix f("m", 3, 2, {1, 2, 1, 2, -2, 1});
  auto same = subset_diversity(f, y, chosen({0, 1}, y));
  ASSERT_TRUE(same.whole);
  EXPECT_DOUBLE_EQ(*same.whole, 0.0);
  EXPECT_DOUBLE_EQ(same.per_class.at(0), 0.0);
  EXPECT_FALSE(same.per_class.count(1));

  auto ortho = subset_diversity(f, y, chosen({0, 2}, y));
  EXPECT_NEAR(*ortho.whole, 1.0, 1e-15);
  EXPECT_TRUE(ortho.per_class.empty());
  EXPECT_FALSE(subset_diversity(f, y, chosen({2}, y)).whole.has_value());
}

TEST(Diversity, MatchesPairOracle) {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> normal;
  for (std::size_t size : {4u, 25u, 200u}) {
    std::vector<float> v(size * 5);
    for (auto& x : v) x = normal(rng);
    std::vector<Label> labels(size);
    for (std::size_t j = 0; j < size; ++j) labels[j] = static_cast<Label>(j % 3);
    LabelVector y(labels, 3);
    FeatureMatrix f("m", size, 5, v);
    std::vector<std::size_t> all(size);
    std::iota(all.begin(), all.end(), 0);
    auto report = subset_diversity(f, y, chosen(all, y));
    auto x = oracle::rows_of(f);
    double sum = 0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < size; ++a) {
      for (std::size_t b = a + 1; b < size; ++b) {
        sum += 1.0 - oracle::cosine(x[a], x[b]);
        ++pairs;
      }
    }
    EXPECT_NEAR(*report.whole, sum / static_cast<double>(pairs), 1e-9);
    for (auto [c, value] : report.per_class) {
      EXPECT_GE(value, 0.0);
      EXPECT_LE(value, 2.0);
    }
  }
}

TEST(Diversity, ZeroVectorIsRejected) {
  LabelVector y({0, 0}, 1);
  FeatureMatrix f("m", 2, 2, {0, 0, 1, 1});
  EXPECT_THROW(subset_diversity(f, y, chosen({0, 1}, y)), Error);
}

TEST(PseudoReport, PointMassesAreExact) {
  SynthSpec spec;
  spec.classes = 4;
  spec.per_class = 10;
  spec.dims = {3, 5};
  spec.spread = 0.0;
  spec.seed = 1;
  for (const auto& acc : pseudo_label_report(generate(spec))) {
    EXPECT_EQ(acc.overall, 1.0);
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(acc.class_accuracy(c), 1.0);
  }
}

TEST(PseudoReport, FullyFlippedTwoClassLabels) {
  SynthSpec spec;
  spec.classes = 2;
  spec.per_class = 20;
  spec.dims = {4};
  spec.separation = 10.0;
  spec.spread = 0.1;
  spec.seed = 5;
  auto clean = generate(spec);
  auto flipped = inject_symmetric_noise(clean.labels(), 1.0, 9);
  FeatureBundle noisy(clean.matrices(), flipped);
  // Centroids are rebuilt from the given labels, so a full two-class swap only
  // renames the clusters and every pseudo label still agrees.
  EXPECT_EQ(pseudo_label_report(noisy)[0].overall, 1.0);
  // Against centroids of the clean labels, every flipped label is missed.
  auto pl = pseudo_labels(noisy.matrix(0), class_centroids(noisy.matrix(0), clean.labels()));
  for (std::size_t j = 0; j < flipped.size(); ++j) EXPECT_NE(pl[j], flipped[j]);
}

TEST(PseudoReport, MatchesConfusionOracle) {
  SynthSpec spec;
  spec.classes = 3;
  spec.per_class = 30;
  spec.dims = {2};
  spec.spread = 0.8;
  spec.seed = 17;
  auto b = generate(spec);
  auto ch = oracle::ram_apl_chain({oracle::rows_of(b.matrix(0))},
                                  {b.labels().values().begin(), b.labels().values().end()}, 3);
  std::vector<std::size_t> correct(3, 0);
  std::size_t total = 0;
  for (std::size_t j = 0; j < b.labels().size(); ++j) {
    correct[b.labels()[j]] += static_cast<std::size_t>(ch.hits[0][j]);
    total += static_cast<std::size_t>(ch.hits[0][j]);
  }
  auto report = pseudo_label_report(b);
  EXPECT_EQ(report[0].class_correct, correct);
  EXPECT_DOUBLE_EQ(report[0].overall, static_cast<double>(total) / static_cast<double>(b.labels().size()));
  EXPECT_LT(report[0].overall, 1.0);
}

TEST(Pca, ExactSubspaceReconstructs) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  const std::size_t n = 60, k = 6, d = 2;
  Eigen::MatrixXd coeff(n, d), dirs(d, k);
  for (Eigen::Index r = 0; r < coeff.rows(); ++r)
    for (Eigen::Index c = 0; c < coeff.cols(); ++c) coeff(r, c) = normal(rng);
  for (Eigen::Index r = 0; r < dirs.rows(); ++r)
    for (Eigen::Index c = 0; c < dirs.cols(); ++c) dirs(r, c) = normal(rng);
  Eigen::MatrixXd x = coeff * dirs;
  std::vector<double> v(n * k);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t c = 0; c < k; ++c) v[j * k + c] = x(j, c) + 3.0;
  BasicFeatureMatrix<double> f("m", n, k, v);
  auto z = reduce_pca(f, d);
  // Least-squares reconstruction from the scores recovers the centered data.
  Eigen::MatrixXd scores(n, d), centered(n, k);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t c = 0; c < d; ++c) scores(j, c) = z(j, c);
  }
  Eigen::RowVectorXd mean = x.colwise().mean();
  centered = x.rowwise() - mean;
  Eigen::MatrixXd basis = scores.colPivHouseholderQr().solve(centered);
  EXPECT_LT((scores * basis - centered).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(total_variance(z), total_variance(f), 1e-9);
}

TEST(Pca, FullDimensionKeepsVariance) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  std::vector<double> v(80 * 5);
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = normal(rng) * static_cast<double>(1 + j % 5);
  BasicFeatureMatrix<double> f("m", 80, 5, v);
  EXPECT_NEAR(total_variance(reduce_pca(f, 5)), total_variance(f), 1e-9);
  EXPECT_THROW(reduce_pca(f, 0), Error);
  EXPECT_THROW(reduce_pca(f, 6), Error);
}

TEST(Pca, TopComponentOfAnisotropicGaussian) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  const std::size_t n = 500;
  std::vector<double> v(n * 2);
  for (std::size_t j = 0; j < n; ++j) {
    const double a = 3.0 * normal(rng), b = 0.5 * normal(rng);
    v[2 * j] = 0.8 * a - 0.6 * b;
    v[2 * j + 1] = 0.6 * a + 0.8 * b;
  }
  BasicFeatureMatrix<double> f("m", n, 2, v);
  // Closed-form 2x2 covariance eigenvalue.
  double mx = 0, my = 0;
  for (std::size_t j = 0; j < n; ++j) {
    mx += v[2 * j];
    my += v[2 * j + 1];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t j = 0; j < n; ++j) {
    sxx += (v[2 * j] - mx) * (v[2 * j] - mx);
    syy += (v[2 * j + 1] - my) * (v[2 * j + 1] - my);
    sxy += (v[2 * j] - mx) * (v[2 * j + 1] - my);
  }
  sxx /= n - 1;
  syy /= n - 1;
  sxy /= n - 1;
  const double top = 0.5 * (sxx + syy) + std::sqrt(0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy);
  EXPECT_NEAR(total_variance(reduce_pca(f, 1)), top, 1e-9);
}

TEST(Pca, DeterministicAndIdempotent) {
  SynthSpec spec;
  spec.classes = 3;
  spec.per_class = 40;
  spec.dims = {7};
  spec.spread = 1.0;
  spec.seed = 8;
  auto f = generate(spec).matrix(0);
  auto once = reduce_pca(f, 3);
  EXPECT_EQ(once, reduce_pca(f, 3));
  // Reduced data has a diagonal covariance, and the sign rule picks +e_c for each axis.
  auto twice = reduce_pca(once, 3);
  for (std::size_t j = 0; j < once.rows(); ++j) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(twice(j, c), once(j, c), 1e-9);
  }
}

TEST(CrossModel, SelfIsOneAndMatrixIsSymmetric) {
  SynthSpec spec;
  spec.classes = 4;
  spec.per_class = 25;
  spec.dims = {6, 9, 6};
  spec.spread = 1.0;
  spec.seed = 12;
  auto b = generate(spec);
  std::vector<FeatureMatrix> mats{b.matrix(0), b.matrix(0).with_id("copy"), b.matrix(1), b.matrix(2)};
  auto sim = cross_model_similarity(std::span<const FeatureMatrix>(mats));
  EXPECT_EQ(sim.reduced_dim, 6u);
  EXPECT_NEAR(sim(0, 1), 1.0, 1e-6);
  for (std::size_t a = 0; a < 4; ++a) {
    EXPECT_NEAR(sim(a, a), 1.0, 1e-6);
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_EQ(sim(a, c), sim(c, a));
      EXPECT_GE(sim(a, c), -1.0);
      EXPECT_LE(sim(a, c), 1.0);
    }
  }
  std::vector<FeatureMatrix> one{b.matrix(0)};
  EXPECT_THROW(cross_model_similarity(std::span<const FeatureMatrix>(one)), Error);
}

TEST(CrossModel, IndependentMatricesAreNearlyOrthogonal) {
  std::mt19937_64 rng(21);
  std::normal_distribution<float> normal;
  std::vector<FeatureMatrix> mats;
  for (int i = 0; i < 2; ++i) {
    std::vector<float> v(2000 * 64);
    for (auto& x : v) x = normal(rng);
    mats.emplace_back("m" + std::to_string(i), 2000, 64, v);
  }
  auto sim = cross_model_similarity(std::span<const FeatureMatrix>(mats));
  EXPECT_LT(std::abs(sim(0, 1)), 0.05);
}
