#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace aglae {

double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth);

/// Mean per-class recall over the classes that occur in `truth`.
double balanced_accuracy(std::span<const std::uint32_t> predicted,
                         std::span<const std::uint32_t> truth, std::uint32_t num_classes);

enum class MetricKind { accuracy, balanced_accuracy };
std::string_view to_string(MetricKind kind) noexcept;
MetricKind parse_metric(std::string_view name);

struct CurvePoint {
  std::size_t labeled_count = 0;
  double score = 0.0;
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Test score after the initial training (cycle 0) and after every cycle.
struct LearningCurve {
  std::vector<CurvePoint> points;
  friend bool operator==(const LearningCurve&, const LearningCurve&) = default;
};

/// Trapezoidal mean over the cycle index: (1/T) sum_t (s_{t-1} + s_t) / 2.
double normalized_auc(std::span<const double> scores);
double normalized_auc(const LearningCurve& curve);

/// Final score of the curve.
double fac(std::span<const double> scores);
double fac(const LearningCurve& curve);

struct RunSummary {
  std::string strategy;
  std::string dataset;
  std::string config_id;
  std::uint64_t seed = 0;
  double auc = 0.0;
  double fac = 0.0;
  LearningCurve curve;
};

RunSummary summarize_curve(std::string strategy, std::string dataset, std::string config_id,
                           std::uint64_t seed, LearningCurve curve);

enum class SummaryField { auc, fac };

struct CellStats {
  double mean = 0.0;
  double stddev = 0.0;  ///< sample standard deviation, 0 for a single seed
  std::size_t seeds = 0;
};

struct TableRow {
  std::string strategy;
  std::string config_id;
  std::map<std::string, CellStats> cells;  ///< by dataset
  std::optional<double> average;            ///< absent when any dataset cell is missing
  std::optional<double> delta;              ///< average minus random's average
  std::optional<std::size_t> rank;          ///< 1-based within config_id
};

struct BenchmarkTable {
  SummaryField field = SummaryField::auc;
  std::vector<std::string> datasets;
  std::vector<TableRow> rows;  ///< sorted by (config_id, rank, strategy)

  const TableRow& row(const std::string& strategy, const std::string& config_id) const;
};

inline constexpr const char* kBaselineStrategy = "random";

/// Per-cell mean and sample std over seeds, equal-weight dataset average,
/// delta to random and rank per config. `datasets` fixes the column set;
/// when empty it is the sorted union of datasets in `summaries`.
BenchmarkTable aggregate(std::span<const RunSummary> summaries, SummaryField field,
                         bool require_deltas, std::vector<std::string> datasets = {});

/// Delimiter-separated table, scores x100 with two decimals.
void write_table(std::ostream& out, const BenchmarkTable& table, char delimiter = '\t');

}  // namespace aglae
