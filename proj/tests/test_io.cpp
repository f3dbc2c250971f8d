#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "coresel/io.hpp"
#include "oracles.hpp"

using namespace coresel;
using testing_util::TempDir;

namespace {

FeatureMatrix random_matrix(std::mt19937_64& rng, std::string id) {
  std::uniform_int_distribution<std::size_t> dim(1, 12);
  std::size_t n = dim(rng), k = dim(rng);
  // Arbitrary finite bit patterns, including subnormals and negative zero.
  std::uniform_int_distribution<std::uint32_t> bits;
  std::vector<float> v(n * k);
  for (auto& x : v) {
    do {
      x = std::bit_cast<float>(bits(rng));
    } while (!std::isfinite(x));
  }
  return {std::move(id), n, k, std::move(v)};
}

bool bit_identical(const FeatureMatrix& a, const FeatureMatrix& b) {
  return a.extractor_id() == b.extractor_id() && a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size_bytes()) == 0;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST(FeatureIo, BinaryRoundTripIsBitExactForRandomMatrices) {
  TempDir dir;
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto m = random_matrix(rng, "model-" + std::to_string(trial));
    save_features(m, dir / "m.fsel");
    auto back = load_features(dir / "m.fsel", FileFormat::binary);
    ASSERT_TRUE(bit_identical(m, back)) << "trial " << trial;
  }
}

TEST(FeatureIo, CsvRoundTripIsBitExactForRandomMatrices) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    auto m = random_matrix(rng, "csv-" + std::to_string(trial));
    auto back = decode_features_csv(encode_features_csv(m));
    ASSERT_TRUE(bit_identical(m, back)) << "trial " << trial;
  }
}

TEST(FeatureIo, SingleZeroValueLayout) {
  FeatureMatrix m("", 1, 1, {0.0f});
  auto bytes = encode_features(m);
  ASSERT_EQ(bytes.size(), kFeatureHeaderBytes + 4);
  EXPECT_EQ(bytes.substr(0, 4), "FSEL");
  EXPECT_EQ(bytes.substr(4, 4), std::string("\x01\0\0\0", 4));
  EXPECT_EQ(bytes.substr(8, 8), std::string("\x01\0\0\0\0\0\0\0", 8));
  EXPECT_EQ(bytes.substr(16, 8), std::string("\x01\0\0\0\0\0\0\0", 8));
  EXPECT_EQ(bytes.substr(24, 4), std::string("\0\0\0\0", 4));
  EXPECT_EQ(bytes.substr(28), std::string(4, '\0'));
}

TEST(FeatureIo, HeaderCarriesIdAndLittleEndianValues) {
  FeatureMatrix m("ab", 1, 2, {1.0f, -2.0f});
  auto bytes = encode_features(m);
  ASSERT_EQ(bytes.size(), kFeatureHeaderBytes + 2 + 8);
  EXPECT_EQ(bytes.substr(24, 4), std::string("\x02\0\0\0", 4));
  EXPECT_EQ(bytes.substr(28, 2), "ab");
  EXPECT_EQ(bytes.substr(30, 4), std::string("\x00\x00\x80\x3f", 4));  // 1.0f
  EXPECT_EQ(bytes.substr(34, 4), std::string("\x00\x00\x00\xc0", 4));  // -2.0f
}

TEST(FeatureIo, SaveIsDeterministicAndIdempotent) {
  TempDir dir;
  FeatureMatrix m("det", 3, 2, {1, 2, 3, 4, 5, 6});
  save_features(m, dir / "a.fsel");
  save_features(FeatureMatrix("det", 3, 2, {1, 2, 3, 4, 5, 6}), dir / "b.fsel");
  save_features(load_features(dir / "a.fsel"), dir / "c.fsel");
  auto a = detail::read_file(dir / "a.fsel");
  EXPECT_EQ(a, detail::read_file(dir / "b.fsel"));
  EXPECT_EQ(a, detail::read_file(dir / "c.fsel"));
}

TEST(FeatureIo, ParsesPlainCsv) {
  auto m = decode_features_csv("1.0,2.0\n3.0,4.0");
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 2u);
  EXPECT_EQ(m(0, 0), 1.0f);
  EXPECT_EQ(m(0, 1), 2.0f);
  EXPECT_EQ(m(1, 0), 3.0f);
  EXPECT_EQ(m(1, 1), 4.0f);
}

TEST(FeatureIo, CsvFileTakesStemAsDefaultId) {
  TempDir dir;
  detail::write_file(dir / "clip.csv", "1,2\n3,4\n");
  EXPECT_EQ(load_features(dir / "clip.csv").extractor_id(), "clip");
  detail::write_file(dir / "x.csv", "# extractor_id=dino\n1,2\n");
  EXPECT_EQ(load_features(dir / "x.csv").extractor_id(), "dino");
}

TEST(FeatureIo, RejectsNonFinitePayload) {
  FeatureMatrix m("nan", 1, 2, {1.0f, 2.0f});
  auto bytes = encode_features(m);
  float nan = std::numeric_limits<float>::quiet_NaN();
  std::uint32_t bits = std::bit_cast<std::uint32_t>(nan);
  for (int b = 0; b < 4; ++b) bytes[kFeatureHeaderBytes + 3 + 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  EXPECT_EQ(code_of([&] { decode_features(bytes); }), ErrorCode::non_finite_value);
  EXPECT_EQ(code_of([&] { decode_features_csv("1,nan\n"); }), ErrorCode::non_finite_value);
  EXPECT_EQ(code_of([&] { decode_features_csv("1,inf\n"); }), ErrorCode::non_finite_value);
  EXPECT_EQ(code_of([&] { FeatureMatrix("x", 1, 1, {std::numeric_limits<float>::infinity()}); }),
            ErrorCode::non_finite_value);
}

TEST(FeatureIo, RejectsMalformedBinary) {
  auto good = encode_features(FeatureMatrix("m", 2, 2, {1, 2, 3, 4}));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(code_of([&] { decode_features(bad_magic); }), ErrorCode::malformed_header);
  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_EQ(code_of([&] { decode_features(bad_version); }), ErrorCode::malformed_header);
  EXPECT_EQ(code_of([&] { decode_features(good.substr(0, 10)); }), ErrorCode::malformed_header);
  EXPECT_EQ(code_of([&] { decode_features(good.substr(0, good.size() - 4)); }), ErrorCode::dimension_mismatch);
  EXPECT_EQ(code_of([&] { decode_features(good + "xxxx"); }), ErrorCode::dimension_mismatch);
}

TEST(FeatureIo, RejectsRaggedAndEmptyCsv) {
  EXPECT_EQ(code_of([&] { decode_features_csv("1,2\n3\n"); }), ErrorCode::dimension_mismatch);
  EXPECT_EQ(code_of([&] { decode_features_csv(""); }), ErrorCode::malformed_header);
  EXPECT_EQ(code_of([&] { decode_features_csv("1,abc\n"); }), ErrorCode::malformed_header);
}

TEST(LabelIo, BinaryAndCsvRoundTrip) {
  TempDir dir;
  LabelVector y({2, 0, 1, 1, 0, 2}, 3);
  save_labels(y, dir / "y.lsel");
  EXPECT_EQ(load_labels(dir / "y.lsel"), y);
  save_labels_csv(y, dir / "y.csv");
  EXPECT_EQ(load_labels(dir / "y.csv"), y);
  auto bytes = encode_labels(y);
  EXPECT_EQ(bytes.size(), 4u + 4 + 8 + 8 + 6 * 4);
  EXPECT_EQ(bytes.substr(16, 8), std::string("\x03\0\0\0\0\0\0\0", 8));
}

TEST(LabelIo, RejectsInvalidLabels) {
  EXPECT_EQ(code_of([&] { LabelVector({0, 1, 2}, 2); }), ErrorCode::label_out_of_range);
  EXPECT_EQ(code_of([&] { LabelVector({0, 0, 2}, 3); }), ErrorCode::empty_class);
  EXPECT_EQ(code_of([&] { decode_labels_csv("0\n-1\n"); }), ErrorCode::label_out_of_range);
  EXPECT_EQ(code_of([&] { decode_labels_csv("0\nx\n"); }), ErrorCode::malformed_header);
  auto bytes = encode_labels(LabelVector({0, 1}, 2));
  bytes[16] = 1;  // c = 1, but label 1 is present
  EXPECT_EQ(code_of([&] { decode_labels(bytes); }), ErrorCode::label_out_of_range);
}

TEST(BundleIo, LoadsMatricesInArgumentOrder) {
  TempDir dir;
  std::vector<float> a(20, 1.0f), b(30, 2.0f);
  save_features(FeatureMatrix("first", 10, 2, a), dir / "a.fsel");
  save_features(FeatureMatrix("second", 10, 3, b), dir / "b.fsel");
  save_labels(LabelVector({0, 1, 0, 1, 0, 1, 0, 1, 0, 1}, 2), dir / "y.lsel");
  std::vector<std::filesystem::path> paths{dir / "b.fsel", dir / "a.fsel"};
  auto bundle = load_bundle(paths, dir / "y.lsel");
  EXPECT_EQ(bundle.models(), 2u);
  EXPECT_EQ(bundle.matrix(0).extractor_id(), "second");
  EXPECT_EQ(bundle.matrix(1).extractor_id(), "first");
}

TEST(BundleIo, RejectsInconsistentBundles) {
  TempDir dir;
  save_features(FeatureMatrix("a", 10, 1, std::vector<float>(10, 1.0f)), dir / "a.fsel");
  save_features(FeatureMatrix("b", 9, 1, std::vector<float>(9, 1.0f)), dir / "b.fsel");
  save_features(FeatureMatrix("a", 10, 2, std::vector<float>(20, 1.0f)), dir / "a2.fsel");
  std::vector<Label> labels{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  save_labels(LabelVector(labels, 2), dir / "y.lsel");
  detail::write_file(dir / "bad.csv", "0\n1\n0\n1\n0\n1\n0\n1\n0\n1\n");

  std::vector<std::filesystem::path> mismatch{dir / "a.fsel", dir / "b.fsel"};
  EXPECT_EQ(code_of([&] { load_bundle(mismatch, dir / "y.lsel"); }), ErrorCode::sample_count_mismatch);
  std::vector<std::filesystem::path> dup{dir / "a.fsel", dir / "a2.fsel"};
  EXPECT_EQ(code_of([&] { load_bundle(dup, dir / "y.lsel"); }), ErrorCode::duplicate_extractor_id);

  // Labels with value c relative to a header that declares c classes.
  auto bytes = encode_labels(LabelVector(labels, 2));
  bytes[28 + 4 * 3] = 2;
  detail::write_file(dir / "oor.lsel", bytes);
  std::vector<std::filesystem::path> one{dir / "a.fsel"};
  EXPECT_EQ(code_of([&] { load_bundle(one, dir / "oor.lsel"); }), ErrorCode::label_out_of_range);
  EXPECT_EQ(code_of([&] { load_bundle(one, dir / "missing.lsel"); }), ErrorCode::io_failure);
}

TEST(SelectionIo, IndexListRoundTrip) {
  TempDir dir;
  LabelVector y({0, 1, 0, 1, 1}, 2);
  SelectionResult sel{{0, 3, 4}, {1, 2}, 0.6, "min", std::nullopt};
  sel.validate(y);
  save_selection(sel, dir / "s.txt");
  EXPECT_EQ(detail::read_file(dir / "s.txt"), "0\n3\n4\n");
  auto back = load_selection(dir / "s.txt", y);
  EXPECT_EQ(back.selected, sel.selected);
  EXPECT_EQ(back.per_class_budget, sel.per_class_budget);
}
