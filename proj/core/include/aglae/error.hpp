#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aglae {

enum class ErrorCode {
  invalid_config,
  empty_pool,
  index_out_of_range,
  pool_consistency,
  format,
  label_range,
  bundle_consistency,
  cannot_train,
  divergence,
  dimension_mismatch,
  insufficient_candidates,
  needs_warm_start,
  invalid_input,
  undefined_metric,
  incomplete_suite,
  parse,
  io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the engine. The code lets
/// callers (and tests) branch on the failure class without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace aglae
