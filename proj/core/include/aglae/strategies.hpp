#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aglae/classifier.hpp"
#include "aglae/featureio.hpp"
#include "aglae/pools.hpp"
#include "aglae/rng.hpp"

namespace aglae {

enum class StrategyKind { random, entropy, coreset, badge, cal };

struct StrategySpec {
  StrategyKind kind = StrategyKind::random;
  std::size_t cal_neighbors = 10;

  friend bool operator==(const StrategySpec&, const StrategySpec&) = default;
};

std::string_view to_string(StrategyKind kind) noexcept;
/// Accepts "random", "entropy", "coreset", "badge", "cal".
StrategyKind parse_strategy(std::string_view name);

/// Which model outputs a strategy reads; lets the runner skip the rest.
struct StrategyNeeds {
  bool candidate_probs = false;
  bool candidate_embeddings = false;
  bool labeled_embeddings = false;
  bool labeled_probs = false;
  bool grad_embeddings = false;
  bool labeled_pool = false;  ///< refuses an empty labeled pool
};
StrategyNeeds needs(StrategyKind kind) noexcept;

/// Everything a strategy may look at for one query round. Candidate-aligned
/// fields share row order with `candidate_indices`.
struct StrategyInput {
  std::vector<std::size_t> candidate_indices;
  ProbMatrix candidate_probs;
  FeatureMatrix candidate_embeddings;
  FeatureMatrix labeled_embeddings;
  ProbMatrix labeled_probs;
  std::optional<RowMatrix> grad_embeddings;
};

inline constexpr double kLogEpsilon = 1e-12;

/// Shannon entropy in nats, one value per row.
std::vector<double> entropy_scores(const ProbMatrix& probs, double epsilon = kLogEpsilon);

/// KL(p || q) with both sides floored at epsilon inside the log.
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     double epsilon = kLogEpsilon);

/// Positions of the b largest scores, ties to the lower position, best first.
std::vector<std::size_t> top_b(std::span<const double> scores, std::size_t b);

/// Greedy k-center over candidate rows with the given rows as initial centers.
/// Returns candidate positions in selection order.
std::vector<std::size_t> greedy_k_center(const FeatureMatrix& candidates,
                                         const FeatureMatrix& centers, std::size_t b);

/// Mean KL(neighbor || candidate) over the min(k, |labeled|) nearest labeled rows.
std::vector<double> cal_scores(const FeatureMatrix& candidate_embeddings,
                               const ProbMatrix& candidate_probs,
                               const FeatureMatrix& labeled_embeddings,
                               const ProbMatrix& labeled_probs, std::size_t k);

/// k-means++ seeding (no Lloyd steps). First pick is proportional to the
/// squared norm; later picks to the squared distance to the nearest pick.
std::vector<std::size_t> kmeanspp_select(const RowMatrix& points, std::size_t b, Rng& rng);

QueryBatch query_random(const StrategyInput& input, std::size_t b, Rng& rng);
QueryBatch query_entropy(const StrategyInput& input, std::size_t b);
QueryBatch query_coreset(const StrategyInput& input, std::size_t b);
QueryBatch query_badge(const StrategyInput& input, std::size_t b, Rng& rng);
QueryBatch query_cal(const StrategyInput& input, std::size_t b, std::size_t k);

QueryBatch select_batch(const StrategySpec& spec, const StrategyInput& input, std::size_t b,
                        Rng& rng);

}  // namespace aglae
