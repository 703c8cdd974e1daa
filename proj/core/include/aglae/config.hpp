#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aglae/classifier.hpp"
#include "aglae/strategies.hpp"

namespace aglae {

enum class ModelStart { cold, warm };
std::string_view to_string(ModelStart start) noexcept;

inline constexpr std::size_t kDefaultSubsetSize = 10000;

/// One point of the experiment grid. Budget counts the initial pool.
struct DalConfig {
  std::string id = "default";
  std::size_t init_size = 100;
  std::size_t query_size = 100;
  std::size_t budget = 500;
  std::optional<std::size_t> subset_size = kDefaultSubsetSize;  ///< nullopt: score all of U
  ModelStart model_start = ModelStart::cold;
  TrainConfig train;
  StrategySpec strategy;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

  /// Structural checks that do not depend on a dataset.
  void validate() const;
  /// validate() plus budget <= n_train.
  void validate_for(std::size_t n_train) const;
};

/// (budget - init_size) / query_size; throws invalid_config unless exact.
std::size_t n_cycles(const DalConfig& cfg);

/// Canonical key/value text of everything that affects a run's outcome
/// (not id, not seeds). Two configs with equal text produce equal runs.
std::string canonical_text(const DalConfig& cfg);

/// 64-bit FNV-1a of canonical_text, as 16 hex digits.
std::string config_hash(const DalConfig& cfg);

/// JSON object with the DalConfig keys (see README). Missing keys keep defaults.
DalConfig parse_config(std::string_view text);
DalConfig load_config(const std::filesystem::path& path);
std::string dump_config(const DalConfig& cfg);

/// Grid description for `suite`.
struct SuiteSpec {
  std::filesystem::path manifest;
  std::vector<std::string> datasets;  ///< empty: every manifest entry
  std::vector<StrategySpec> strategies;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<DalConfig> configs;  ///< their strategy/seeds fields are overridden
  bool deltas = true;
};

SuiteSpec parse_suite(std::string_view text, const std::filesystem::path& base_dir = {});
SuiteSpec load_suite(const std::filesystem::path& path);

}  // namespace aglae
