#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aglae/error.hpp"
#include "aglae/metrics.hpp"

namespace aglae {

std::string engine_version();

struct RunHeader {
  std::string dataset;
  std::string strategy;
  std::uint64_t seed = 0;
  std::string config_id;
  std::string config_hash;
  std::string engine_version;
  std::size_t planned_cycles = 0;
  std::vector<std::size_t> initial_labeled;  ///< L(0), sorted

  friend bool operator==(const RunHeader&, const RunHeader&) = default;
};

struct CycleEntry {
  std::size_t cycle = 0;
  std::vector<std::size_t> queried;  ///< B(t) in selection order; empty for cycle 0
  std::size_t labeled_size = 0;
  double score = 0.0;
  MetricKind metric = MetricKind::accuracy;
  std::optional<double> train_loss;  ///< absent when no training happened
  double train_seconds = 0.0;
  double query_seconds = 0.0;

  friend bool operator==(const CycleEntry&, const CycleEntry&) = default;
};

struct RunRecord {
  RunHeader header;
  std::vector<CycleEntry> cycles;

  bool complete() const noexcept { return cycles.size() == header.planned_cycles + 1; }
  LearningCurve curve() const;
  RunSummary summary() const;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// One JSON header line, then one JSON line per cycle.
std::string serialize_record(const RunRecord& record);

struct LoadedRecord {
  RunRecord record;
  bool engine_version_mismatch = false;
};

/// Parse failure carrying the 1-based line and the last cycle read intact.
class RecordParseError : public Error {
 public:
  RecordParseError(std::size_t line, std::optional<std::size_t> last_complete_cycle,
                   const std::string& message);

  std::size_t line() const noexcept { return line_; }
  std::optional<std::size_t> last_complete_cycle() const noexcept { return last_cycle_; }

 private:
  std::size_t line_;
  std::optional<std::size_t> last_cycle_;
};

LoadedRecord parse_record(const std::string& text);

/// Atomic: writes `<path>.tmp` then renames.
void write_record(const RunRecord& record, const std::filesystem::path& path);
LoadedRecord read_record(const std::filesystem::path& path);

/// File name used for records inside an output directory.
std::string record_file_name(const RunHeader& header);

}  // namespace aglae
