#include "aglae/error.hpp"

namespace aglae {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::empty_pool: return "empty-pool";
    case ErrorCode::index_out_of_range: return "index";
    case ErrorCode::pool_consistency: return "pool-consistency";
    case ErrorCode::format: return "format";
    case ErrorCode::label_range: return "label-range";
    case ErrorCode::bundle_consistency: return "bundle-consistency";
    case ErrorCode::cannot_train: return "cannot-train";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::insufficient_candidates: return "insufficient-candidates";
    case ErrorCode::needs_warm_start: return "needs-warm-start";
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::undefined_metric: return "undefined-metric";
    case ErrorCode::incomplete_suite: return "incomplete-suite";
    case ErrorCode::parse: return "parse";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

}  // namespace aglae
