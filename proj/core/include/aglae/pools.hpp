#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aglae/featureio.hpp"
#include "aglae/rng.hpp"

namespace aglae {

struct AnnotatedBatch;

/// Labeled/unlabeled partition of the train index range [0, n).
///
/// Both sets are kept sorted ascending so that state equality and any
/// downstream iteration are independent of the order of updates.
class PoolState {
 public:
  PoolState() = default;

  std::span<const std::size_t> labeled() const noexcept { return labeled_; }
  std::span<const std::size_t> unlabeled() const noexcept { return unlabeled_; }
  std::size_t cycle() const noexcept { return cycle_; }
  std::size_t size() const noexcept { return labeled_.size() + unlabeled_.size(); }

  bool is_labeled(std::size_t index) const noexcept;

  friend bool operator==(const PoolState&, const PoolState&) = default;

 private:
  friend PoolState init_pools(std::size_t, std::size_t, Rng&);
  friend PoolState update_pools(const PoolState&, const AnnotatedBatch&);

  std::vector<std::size_t> labeled_;
  std::vector<std::size_t> unlabeled_;
  std::size_t cycle_ = 0;
};

struct QueryBatch {
  std::vector<std::size_t> indices;
  std::size_t cycle = 0;
};

struct AnnotatedBatch {
  std::vector<std::size_t> indices;
  std::vector<std::uint32_t> labels;
  std::size_t cycle = 0;
};

/// init_size indices drawn uniformly without replacement; cycle = 0.
PoolState init_pools(std::size_t n_train, std::size_t init_size, Rng& rng);

/// Uniform sample of min(subset_size, |U|) unlabeled indices, returned sorted.
std::vector<std::size_t> draw_subset(const PoolState& state, std::size_t subset_size, Rng& rng);

/// Simulated oracle: looks the ground-truth labels up.
AnnotatedBatch annotate(const QueryBatch& batch, const LabelVector& oracle_labels);

/// Moves the batch from U to L and advances the cycle counter.
PoolState update_pools(const PoolState& state, const AnnotatedBatch& batch);

}  // namespace aglae
