#pragma once

/// On-disk formats shared with external feature exporters.
///
/// FSEL (features), all integers little-endian:
///   "FSEL" | u32 version=1 | u64 n | u64 k | u32 id_len | id bytes (UTF-8)
///   | n*k f32 values, row-major
/// LSEL (labels):
///   "LSEL" | u32 version=1 | u64 n | u64 c | n u32 labels
///
/// CSV fallbacks: features are one comma-separated row per sample, with an
/// optional leading "# extractor_id=<id>" line; labels are one integer per
/// line. Lines starting with '#' are otherwise ignored.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "coresel/error.hpp"
#include "coresel/types.hpp"

namespace coresel {

enum class FileFormat { automatic, binary, csv };

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 28;  // excludes the id bytes

namespace detail {

class ByteWriter {
 public:
  void bytes(std::string_view s) { out_.append(s); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::string take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int width) {
    for (int b = 0; b < width; ++b) out_.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
  }
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}

  std::string_view bytes(std::size_t count, const char* what) {
    require(remaining() >= count, ErrorCode::malformed_header, std::string("truncated ") + what);
    auto s = in_.substr(pos_, count);
    pos_ += count;
    return s;
  }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(get(4, what)); }
  std::uint64_t u64(const char* what) { return get(8, what); }
  std::size_t remaining() const noexcept { return in_.size() - pos_; }

 private:
  std::uint64_t get(int width, const char* what) {
    auto s = bytes(static_cast<std::size_t>(width), what);
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) v |= std::uint64_t(static_cast<unsigned char>(s[b])) << (8 * b);
    return v;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io_failure, "cannot open '" + path.string() + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(!in.bad(), ErrorCode::io_failure, "read failed on '" + path.string() + "'");
  return data;
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::io_failure, "cannot open '" + path.string() + "' for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.close();
  require(!out.fail(), ErrorCode::io_failure, "write failed on '" + path.string() + "'");
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Splits on '\n' and drops blank lines; returns (line number, text).
inline std::vector<std::pair<std::size_t, std::string_view>> text_lines(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    auto line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty()) lines.emplace_back(line_no, line);
  }
  return lines;
}

inline float parse_float(std::string_view token, std::size_t line_no) {
  token = trim(token);
  float v = 0.0f;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  // from_chars does not accept a leading '+'
  if (ec == std::errc() && ptr == token.data() + token.size()) {
    require(std::isfinite(v), ErrorCode::non_finite_value, "line " + std::to_string(line_no));
    return v;
  }
  if (ec == std::errc::result_out_of_range) {
    fail(ErrorCode::non_finite_value, "line " + std::to_string(line_no) + ": value out of float range");
  }
  fail(ErrorCode::malformed_header, "line " + std::to_string(line_no) + ": cannot parse '" + std::string(token) + "'");
}

inline bool has_magic(std::string_view data, std::string_view magic) {
  return data.size() >= magic.size() && data.substr(0, magic.size()) == magic;
}

inline void append_shortest(std::string& out, float v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Features

inline std::string encode_features(const FeatureMatrix& m) {
  detail::ByteWriter w;
  w.bytes("FSEL");
  w.u32(kFormatVersion);
  w.u64(m.rows());
  w.u64(m.cols());
  w.u32(static_cast<std::uint32_t>(m.extractor_id().size()));
  w.bytes(m.extractor_id());
  for (float v : m.data()) w.f32(v);
  return w.take();
}

inline FeatureMatrix decode_features(std::string_view data) {
  using detail::require;
  detail::ByteReader r(data);
  require(r.bytes(4, "magic") == "FSEL", ErrorCode::malformed_header, "bad FSEL magic");
  auto version = r.u32("version");
  require(version == kFormatVersion, ErrorCode::malformed_header, "unsupported FSEL version " + std::to_string(version));
  auto n = r.u64("row count");
  auto k = r.u64("column count");
  auto id_len = r.u32("id length");
  std::string id(r.bytes(id_len, "extractor id"));
  require(n >= 1 && k >= 1, ErrorCode::dimension_mismatch, "header declares an empty matrix");
  require(k <= std::numeric_limits<std::uint64_t>::max() / 4 / n, ErrorCode::dimension_mismatch, "header dimensions overflow");
  require(r.remaining() == n * k * 4, ErrorCode::dimension_mismatch,
          "payload holds " + std::to_string(r.remaining()) + " bytes, header implies " + std::to_string(n * k * 4));
  std::vector<float> values(n * k);
  auto payload = r.bytes(n * k * 4, "payload");
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= std::uint32_t(static_cast<unsigned char>(payload[4 * i + b])) << (8 * b);
    values[i] = std::bit_cast<float>(bits);
  }
  return {std::move(id), n, k, std::move(values)};
}

inline std::string encode_features_csv(const FeatureMatrix& m) {
  std::string out = "# extractor_id=" + m.extractor_id() + "\n";
  for (std::size_t j = 0; j < m.rows(); ++j) {
    auto row = m.row(j);
    for (std::size_t d = 0; d < row.size(); ++d) {
      if (d) out.push_back(',');
      detail::append_shortest(out, row[d]);
    }
    out.push_back('\n');
  }
  return out;
}

inline FeatureMatrix decode_features_csv(std::string_view text, std::string default_id = {}) {
  std::string id = std::move(default_id);
  std::vector<float> values;
  std::size_t n = 0, k = 0;
  for (auto [line_no, line] : detail::text_lines(text)) {
    if (line.front() == '#') {
      constexpr std::string_view key = "extractor_id=";
      auto body = detail::trim(line.substr(1));
      if (body.starts_with(key)) id = std::string(body.substr(key.size()));
      continue;
    }
    std::size_t cols = 0;
    while (true) {
      auto comma = line.find(',');
      values.push_back(detail::parse_float(line.substr(0, comma), line_no));
      ++cols;
      if (comma == std::string_view::npos) break;
      line = line.substr(comma + 1);
    }
    if (n == 0) k = cols;
    detail::require(cols == k, ErrorCode::dimension_mismatch,
                    "line " + std::to_string(line_no) + " has " + std::to_string(cols) + " columns, expected " +
                        std::to_string(k));
    ++n;
  }
  detail::require(n > 0, ErrorCode::malformed_header, "CSV contains no rows");
  return {std::move(id), n, k, std::move(values)};
}

/// With FileFormat::automatic the FSEL magic selects binary, anything else
/// parses as CSV; a CSV without an id line takes the file stem as its id.
inline FeatureMatrix load_features(const std::filesystem::path& path, FileFormat format = FileFormat::automatic) {
  auto data = detail::read_file(path);
  if (format == FileFormat::automatic) format = detail::has_magic(data, "FSEL") ? FileFormat::binary : FileFormat::csv;
  if (format == FileFormat::binary) return decode_features(data);
  return decode_features_csv(data, path.stem().string());
}

inline void save_features(const FeatureMatrix& m, const std::filesystem::path& path) {
  detail::write_file(path, encode_features(m));
}

inline void save_features_csv(const FeatureMatrix& m, const std::filesystem::path& path) {
  detail::write_file(path, encode_features_csv(m));
}

// ---------------------------------------------------------------------------
// Labels

inline std::string encode_labels(const LabelVector& y) {
  detail::ByteWriter w;
  w.bytes("LSEL");
  w.u32(kFormatVersion);
  w.u64(y.size());
  w.u64(y.classes());
  for (auto v : y.values()) w.u32(v);
  return w.take();
}

inline LabelVector decode_labels(std::string_view data) {
  using detail::require;
  detail::ByteReader r(data);
  require(r.bytes(4, "magic") == "LSEL", ErrorCode::malformed_header, "bad LSEL magic");
  auto version = r.u32("version");
  require(version == kFormatVersion, ErrorCode::malformed_header, "unsupported LSEL version " + std::to_string(version));
  auto n = r.u64("sample count");
  auto c = r.u64("class count");
  require(n <= r.remaining() / 4 && r.remaining() == n * 4, ErrorCode::dimension_mismatch,
          "payload holds " + std::to_string(r.remaining()) + " bytes, header implies " + std::to_string(n * 4));
  std::vector<Label> labels(n);
  for (auto& v : labels) v = r.u32("label");
  return {std::move(labels), c};
}

inline std::string encode_labels_csv(const LabelVector& y) {
  std::string out;
  for (auto v : y.values()) out += std::to_string(v) + "\n";
  return out;
}

inline LabelVector decode_labels_csv(std::string_view text) {
  std::vector<Label> labels;
  for (auto [line_no, line] : detail::text_lines(text)) {
    if (line.front() == '#') continue;
    long long v = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    detail::require(ec == std::errc() && ptr == line.data() + line.size(), ErrorCode::malformed_header,
                    "line " + std::to_string(line_no) + ": not an integer label");
    detail::require(v >= 0 && v <= std::numeric_limits<Label>::max(), ErrorCode::label_out_of_range,
                    "line " + std::to_string(line_no) + ": label " + std::to_string(v));
    labels.push_back(static_cast<Label>(v));
  }
  detail::require(!labels.empty(), ErrorCode::malformed_header, "label CSV contains no rows");
  return LabelVector::infer(std::move(labels));
}

inline LabelVector load_labels(const std::filesystem::path& path, FileFormat format = FileFormat::automatic) {
  auto data = detail::read_file(path);
  if (format == FileFormat::automatic) format = detail::has_magic(data, "LSEL") ? FileFormat::binary : FileFormat::csv;
  if (format == FileFormat::binary) return decode_labels(data);
  return decode_labels_csv(data);
}

inline void save_labels(const LabelVector& y, const std::filesystem::path& path) {
  detail::write_file(path, encode_labels(y));
}

inline void save_labels_csv(const LabelVector& y, const std::filesystem::path& path) {
  detail::write_file(path, encode_labels_csv(y));
}

// ---------------------------------------------------------------------------
// Bundles and selections

inline FeatureBundle load_bundle(std::span<const std::filesystem::path> feature_paths,
                                 const std::filesystem::path& labels_path) {
  detail::require(!feature_paths.empty(), ErrorCode::invalid_argument, "at least one feature file is required");
  std::vector<FeatureMatrix> matrices;
  matrices.reserve(feature_paths.size());
  for (const auto& p : feature_paths) matrices.push_back(load_features(p));
  return {std::move(matrices), load_labels(labels_path)};
}

/// One selected index per line, ascending.
inline std::string encode_selection(const SelectionResult& sel) {
  std::string out;
  for (auto j : sel.selected) out += std::to_string(j) + "\n";
  return out;
}

inline void save_selection(const SelectionResult& sel, const std::filesystem::path& path) {
  detail::write_file(path, encode_selection(sel));
}

/// Reads an index list and reconstructs budgets against `y`.
inline SelectionResult load_selection(const std::filesystem::path& path, const LabelVector& y) {
  SelectionResult sel;
  sel.method = "external";
  sel.per_class_budget.assign(y.classes(), 0);
  const std::string text = detail::read_file(path);
  for (auto [line_no, line] : detail::text_lines(text)) {
    if (line.front() == '#') continue;
    std::size_t j = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), j);
    detail::require(ec == std::errc() && ptr == line.data() + line.size(), ErrorCode::malformed_header,
                    "line " + std::to_string(line_no) + ": not a sample index");
    detail::require(j < y.size(), ErrorCode::invalid_argument, "line " + std::to_string(line_no) + ": index out of range");
    sel.selected.push_back(j);
    ++sel.per_class_budget[y[j]];
  }
  std::sort(sel.selected.begin(), sel.selected.end());
  detail::require(std::adjacent_find(sel.selected.begin(), sel.selected.end()) == sel.selected.end(),
                  ErrorCode::invalid_argument, "duplicate index in selection");
  sel.p = static_cast<double>(sel.selected.size()) / static_cast<double>(y.size());
  return sel;
}

}  // namespace coresel
