#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace coresel {

enum class ErrorCode {
  malformed_header,
  non_finite_value,
  dimension_mismatch,
  sample_count_mismatch,
  label_out_of_range,
  duplicate_extractor_id,
  empty_class,
  zero_vector,
  invalid_argument,
  io_failure,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::malformed_header: return "MalformedHeader";
    case ErrorCode::non_finite_value: return "NonFiniteValue";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::sample_count_mismatch: return "SampleCountMismatch";
    case ErrorCode::label_out_of_range: return "LabelOutOfRange";
    case ErrorCode::duplicate_extractor_id: return "DuplicateExtractorId";
    case ErrorCode::empty_class: return "EmptyClass";
    case ErrorCode::zero_vector: return "ZeroVector";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::io_failure: return "IoFailure";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace detail

}  // namespace coresel
