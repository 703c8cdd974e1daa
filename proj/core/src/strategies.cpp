#include "aglae/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "aglae/error.hpp"

namespace aglae {

std::string_view to_string(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::random: return "random";
    case StrategyKind::entropy: return "entropy";
    case StrategyKind::coreset: return "coreset";
    case StrategyKind::badge: return "badge";
    case StrategyKind::cal: return "cal";
  }
  return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
  for (auto k : {StrategyKind::random, StrategyKind::entropy, StrategyKind::coreset,
                 StrategyKind::badge, StrategyKind::cal}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::invalid_config, "unknown strategy '" + std::string(name) + "'");
}

StrategyNeeds needs(StrategyKind kind) noexcept {
  StrategyNeeds n;
  switch (kind) {
    case StrategyKind::random:
      break;
    case StrategyKind::entropy:
      n.candidate_probs = true;
      break;
    case StrategyKind::coreset:
      n.candidate_embeddings = n.labeled_embeddings = n.labeled_pool = true;
      break;
    case StrategyKind::badge:
      n.grad_embeddings = true;
      break;
    case StrategyKind::cal:
      n.candidate_probs = n.candidate_embeddings = true;
      n.labeled_embeddings = n.labeled_probs = n.labeled_pool = true;
      break;
  }
  return n;
}

namespace {

void require_candidates(std::size_t available, std::size_t b) {
  if (b > available) {
    throw Error(ErrorCode::insufficient_candidates,
                "asked for " + std::to_string(b) + " of " + std::to_string(available) +
                    " candidates");
  }
}

void require_rows(std::size_t rows, std::size_t expected, const char* field) {
  if (rows != expected) {
    throw Error(ErrorCode::invalid_input, std::string(field) + " has " + std::to_string(rows) +
                                              " rows, expected " + std::to_string(expected));
  }
}

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    s += diff * diff;
  }
  return s;
}

std::span<const double> row_span(const RowMatrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

QueryBatch to_batch(const StrategyInput& input, const std::vector<std::size_t>& positions) {
  QueryBatch batch;
  batch.indices.reserve(positions.size());
  for (auto p : positions) batch.indices.push_back(input.candidate_indices[p]);
  return batch;
}

}  // namespace

std::vector<double> entropy_scores(const ProbMatrix& probs, double epsilon) {
  std::vector<double> h(static_cast<std::size_t>(probs.rows()), 0.0);
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < probs.cols(); ++c) {
      const double p = probs(r, c);
      s -= p * std::log(std::max(p, epsilon));
    }
    h[static_cast<std::size_t>(r)] = s;
  }
  return h;
}

double kl_divergence(std::span<const double> p, std::span<const double> q, double epsilon) {
  double s = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    s += p[c] * std::log(std::max(p[c], epsilon) / std::max(q[c], epsilon));
  }
  return s;
}

std::vector<std::size_t> top_b(std::span<const double> scores, std::size_t b) {
  require_candidates(scores.size(), b);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(b), order.end(),
                    [&](std::size_t a, std::size_t c) {
                      if (scores[a] != scores[c]) return scores[a] > scores[c];
                      return a < c;
                    });
  order.resize(b);
  return order;
}

std::vector<std::size_t> greedy_k_center(const FeatureMatrix& candidates,
                                         const FeatureMatrix& centers, std::size_t b) {
  require_candidates(candidates.rows(), b);
  if (centers.empty()) {
    throw Error(ErrorCode::needs_warm_start, "coreset needs at least one labeled instance");
  }
  if (centers.cols() != candidates.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "candidate and center dims differ");
  }
  const std::size_t n = candidates.rows();
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = candidates.row(i);
    for (std::size_t c = 0; c < centers.rows(); ++c) {
      min_dist[i] = std::min(min_dist[i], squared_distance(x, centers.row(c)));
    }
  }
  std::vector<bool> taken(n, false);
  std::vector<std::size_t> picked;
  picked.reserve(b);
  for (std::size_t round = 0; round < b; ++round) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best == n || min_dist[i] > min_dist[best]) best = i;
    }
    taken[best] = true;
    picked.push_back(best);
    const auto center = candidates.row(best);
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i]) min_dist[i] = std::min(min_dist[i], squared_distance(candidates.row(i), center));
    }
  }
  return picked;
}

std::vector<double> cal_scores(const FeatureMatrix& candidate_embeddings,
                               const ProbMatrix& candidate_probs,
                               const FeatureMatrix& labeled_embeddings,
                               const ProbMatrix& labeled_probs, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::invalid_config, "cal needs k >= 1");
  if (labeled_embeddings.empty()) {
    throw Error(ErrorCode::needs_warm_start, "cal needs at least one labeled instance");
  }
  require_rows(static_cast<std::size_t>(candidate_probs.rows()), candidate_embeddings.rows(),
               "candidate_probs");
  require_rows(static_cast<std::size_t>(labeled_probs.rows()), labeled_embeddings.rows(),
               "labeled_probs");
  if (labeled_embeddings.cols() != candidate_embeddings.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "candidate and labeled dims differ");
  }
  const std::size_t n_labeled = labeled_embeddings.rows();
  const std::size_t neighbors = std::min(k, n_labeled);
  std::vector<double> scores(candidate_embeddings.rows());
  std::vector<std::pair<double, std::size_t>> dist(n_labeled);
  for (std::size_t i = 0; i < candidate_embeddings.rows(); ++i) {
    const auto x = candidate_embeddings.row(i);
    for (std::size_t j = 0; j < n_labeled; ++j) {
      dist[j] = {squared_distance(x, labeled_embeddings.row(j)), j};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(neighbors),
                      dist.end());
    const auto q = row_span(candidate_probs, static_cast<Eigen::Index>(i));
    double total = 0.0;
    for (std::size_t m = 0; m < neighbors; ++m) {
      const auto p = row_span(labeled_probs, static_cast<Eigen::Index>(dist[m].second));
      total += std::max(0.0, kl_divergence(p, q));
    }
    scores[i] = total / static_cast<double>(neighbors);
  }
  return scores;
}

std::vector<std::size_t> kmeanspp_select(const RowMatrix& points, std::size_t b, Rng& rng) {
  const auto n = static_cast<std::size_t>(points.rows());
  require_candidates(n, b);
  std::vector<std::size_t> picked;
  picked.reserve(b);
  if (b == 0) return picked;

  std::vector<double> weight(n);
  for (std::size_t i = 0; i < n; ++i) {
    weight[i] = points.row(static_cast<Eigen::Index>(i)).squaredNorm();
  }
  std::vector<bool> taken(n, false);

  for (std::size_t round = 0; round < b; ++round) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i]) total += weight[i];
    }
    std::size_t choice = n;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      std::size_t last_positive = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i] || weight[i] <= 0.0) continue;
        last_positive = i;
        acc += weight[i];
        if (u < acc) {
          choice = i;
          break;
        }
      }
      if (choice == n) choice = last_positive;  // u landed on the rounding gap
    } else {
      const auto remaining = n - round;
      auto skip = static_cast<std::size_t>(rng.below(remaining));
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        if (skip-- == 0) {
          choice = i;
          break;
        }
      }
    }
    taken[choice] = true;
    picked.push_back(choice);
    const auto center = points.row(static_cast<Eigen::Index>(choice));
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) {
        weight[i] = 0.0;
        continue;
      }
      const double d2 = (points.row(static_cast<Eigen::Index>(i)) - center).squaredNorm();
      // The first round weighs by distance to the origin, not to a pick.
      weight[i] = round == 0 ? d2 : std::min(weight[i], d2);
    }
  }
  return picked;
}

QueryBatch query_random(const StrategyInput& input, std::size_t b, Rng& rng) {
  require_candidates(input.candidate_indices.size(), b);
  return to_batch(input, rng.sample_without_replacement(input.candidate_indices.size(), b));
}

QueryBatch query_entropy(const StrategyInput& input, std::size_t b) {
  require_rows(static_cast<std::size_t>(input.candidate_probs.rows()),
               input.candidate_indices.size(), "candidate_probs");
  const auto scores = entropy_scores(input.candidate_probs);
  return to_batch(input, top_b(scores, b));
}

QueryBatch query_coreset(const StrategyInput& input, std::size_t b) {
  require_rows(input.candidate_embeddings.rows(), input.candidate_indices.size(),
               "candidate_embeddings");
  return to_batch(input, greedy_k_center(input.candidate_embeddings, input.labeled_embeddings, b));
}

QueryBatch query_badge(const StrategyInput& input, std::size_t b, Rng& rng) {
  if (!input.grad_embeddings) {
    throw Error(ErrorCode::invalid_input, "badge needs gradient embeddings");
  }
  const RowMatrix& grads = *input.grad_embeddings;
  require_rows(static_cast<std::size_t>(grads.rows()), input.candidate_indices.size(),
               "grad_embeddings");
  require_candidates(input.candidate_indices.size(), b);

  // Zero-gradient candidates carry no seeding mass but still sit at a
  // positive distance from earlier picks; hold them back until every
  // informative candidate is used.
  std::vector<std::size_t> informative, inert;
  for (Eigen::Index r = 0; r < grads.rows(); ++r) {
    (grads.row(r).squaredNorm() > 0.0 ? informative : inert).push_back(static_cast<std::size_t>(r));
  }
  std::vector<std::size_t> positions;
  positions.reserve(b);
  const std::size_t from_informative = std::min(b, informative.size());
  if (from_informative > 0) {
    RowMatrix sub(static_cast<Eigen::Index>(informative.size()), grads.cols());
    for (std::size_t i = 0; i < informative.size(); ++i) {
      sub.row(static_cast<Eigen::Index>(i)) = grads.row(static_cast<Eigen::Index>(informative[i]));
    }
    for (auto p : kmeanspp_select(sub, from_informative, rng)) positions.push_back(informative[p]);
  }
  if (b > from_informative) {
    for (auto p : rng.sample_without_replacement(inert.size(), b - from_informative)) {
      positions.push_back(inert[p]);
    }
  }
  return to_batch(input, positions);
}

QueryBatch query_cal(const StrategyInput& input, std::size_t b, std::size_t k) {
  require_rows(input.candidate_embeddings.rows(), input.candidate_indices.size(),
               "candidate_embeddings");
  require_candidates(input.candidate_indices.size(), b);
  const auto scores = cal_scores(input.candidate_embeddings, input.candidate_probs,
                                 input.labeled_embeddings, input.labeled_probs, k);
  return to_batch(input, top_b(scores, b));
}

QueryBatch select_batch(const StrategySpec& spec, const StrategyInput& input, std::size_t b,
                        Rng& rng) {
  switch (spec.kind) {
    case StrategyKind::random: return query_random(input, b, rng);
    case StrategyKind::entropy: return query_entropy(input, b);
    case StrategyKind::coreset: return query_coreset(input, b);
    case StrategyKind::badge: return query_badge(input, b, rng);
    case StrategyKind::cal: return query_cal(input, b, spec.cal_neighbors);
  }
  throw Error(ErrorCode::invalid_config, "unhandled strategy");
}

}  // namespace aglae
