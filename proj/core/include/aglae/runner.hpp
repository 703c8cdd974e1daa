#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "aglae/classifier.hpp"
#include "aglae/config.hpp"
#include "aglae/featureio.hpp"
#include "aglae/metrics.hpp"
#include "aglae/record.hpp"

namespace aglae {

/// Observation points inside run_experiment, for tests and tracing.
struct RunHooks {
  /// Candidate train indices scored in `cycle` (>= 1).
  std::function<void(std::size_t cycle, std::span<const std::size_t> candidates)> on_candidates;
  /// Called before each training; `start` is null for a fresh initialization.
  std::function<void(std::size_t cycle, const HeadParams* start)> on_train;
};

struct RunOptions {
  /// Wall-clock train/query durations are stored only when set, so default
  /// records are byte-identical across repeated runs.
  bool record_timings = false;
  RunHooks hooks;
};

/// Thrown by run_experiment; carries the record up to the failing cycle.
class RunFailure : public Error {
 public:
  RunFailure(ErrorCode code, const std::string& message, RunRecord partial)
      : Error(code, message), partial_(std::move(partial)) {}

  const RunRecord& partial() const noexcept { return partial_; }

 private:
  RunRecord partial_;
};

/// Metric used for a bundle: balanced accuracy iff it is flagged imbalanced.
MetricKind metric_for(const DatasetBundle& bundle) noexcept;

double evaluate(const HeadParams& params, const DatasetBundle& bundle);

RunRecord run_experiment(const DalConfig& cfg, const DatasetBundle& dataset, std::uint64_t seed,
                         const RunOptions& options = {});

struct SuiteOptions {
  std::size_t jobs = 1;
  /// When set, every record (complete or partial) is written here.
  std::optional<std::filesystem::path> records_dir;
  RunOptions run;
};

struct SuiteResult {
  BenchmarkTable auc;
  BenchmarkTable fac;
  std::vector<RunRecord> records;   ///< sorted by (dataset, config, strategy, seed)
  std::vector<std::string> failures;
};

SuiteResult run_suite(const SuiteSpec& spec, std::span<const DatasetBundle> datasets,
                      const SuiteOptions& options = {});

/// Loads the manifest named by `spec` and runs the grid.
SuiteResult run_suite(const SuiteSpec& spec, const SuiteOptions& options = {});

/// Tables over every complete record in `dir`. Deltas are filled in where a
/// random baseline exists.
struct SummaryResult {
  BenchmarkTable auc;
  BenchmarkTable fac;
  std::size_t records = 0;
  std::size_t skipped = 0;  ///< incomplete or unreadable files
  std::size_t version_mismatches = 0;
};
SummaryResult summarize_records(const std::filesystem::path& dir);

}  // namespace aglae
