#include "aglae/pools.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "aglae/error.hpp"

namespace aglae {

bool PoolState::is_labeled(std::size_t index) const noexcept {
  return std::binary_search(labeled_.begin(), labeled_.end(), index);
}

PoolState init_pools(std::size_t n_train, std::size_t init_size, Rng& rng) {
  if (init_size > n_train) {
    throw Error(ErrorCode::invalid_config, "init_size " + std::to_string(init_size) +
                                               " exceeds train size " + std::to_string(n_train));
  }
  PoolState s;
  s.labeled_ = rng.sample_without_replacement(n_train, init_size);
  std::sort(s.labeled_.begin(), s.labeled_.end());
  s.unlabeled_.reserve(n_train - init_size);
  auto next = s.labeled_.begin();
  for (std::size_t i = 0; i < n_train; ++i) {
    if (next != s.labeled_.end() && *next == i) {
      ++next;
    } else {
      s.unlabeled_.push_back(i);
    }
  }
  return s;
}

std::vector<std::size_t> draw_subset(const PoolState& state, std::size_t subset_size, Rng& rng) {
  if (subset_size == 0) throw Error(ErrorCode::invalid_config, "subset_size must be >= 1");
  const auto unlabeled = state.unlabeled();
  if (unlabeled.empty()) throw Error(ErrorCode::empty_pool, "no unlabeled instances left");
  if (subset_size >= unlabeled.size()) return {unlabeled.begin(), unlabeled.end()};
  auto positions = rng.sample_without_replacement(unlabeled.size(), subset_size);
  std::sort(positions.begin(), positions.end());
  std::vector<std::size_t> out;
  out.reserve(positions.size());
  for (auto p : positions) out.push_back(unlabeled[p]);
  return out;
}

AnnotatedBatch annotate(const QueryBatch& batch, const LabelVector& oracle_labels) {
  AnnotatedBatch out;
  out.cycle = batch.cycle;
  out.indices = batch.indices;
  out.labels.reserve(batch.indices.size());
  for (auto i : batch.indices) {
    if (i >= oracle_labels.size()) {
      throw Error(ErrorCode::index_out_of_range, "annotate: index " + std::to_string(i) +
                                                     " outside " +
                                                     std::to_string(oracle_labels.size()) +
                                                     " labels");
    }
    out.labels.push_back(oracle_labels.labels[i]);
  }
  return out;
}

PoolState update_pools(const PoolState& state, const AnnotatedBatch& batch) {
  std::vector<std::size_t> moved = batch.indices;
  std::sort(moved.begin(), moved.end());
  if (std::adjacent_find(moved.begin(), moved.end()) != moved.end()) {
    throw Error(ErrorCode::pool_consistency, "batch contains duplicate indices");
  }
  for (auto i : moved) {
    if (!std::binary_search(state.unlabeled_.begin(), state.unlabeled_.end(), i)) {
      throw Error(ErrorCode::pool_consistency,
                  "index " + std::to_string(i) +
                      (state.is_labeled(i) ? " is already labeled" : " is not in the pool"));
    }
  }
  PoolState next;
  next.cycle_ = state.cycle_ + 1;
  next.unlabeled_.reserve(state.unlabeled_.size() - moved.size());
  std::set_difference(state.unlabeled_.begin(), state.unlabeled_.end(), moved.begin(),
                      moved.end(), std::back_inserter(next.unlabeled_));
  next.labeled_.reserve(state.labeled_.size() + moved.size());
  std::merge(state.labeled_.begin(), state.labeled_.end(), moved.begin(), moved.end(),
             std::back_inserter(next.labeled_));
  return next;
}

}  // namespace aglae
