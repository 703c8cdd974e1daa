// Acceptance checks, one PASS/FAIL line per criterion.
//   aglae_acceptance               run everything
//   aglae_acceptance --only NAME   run one criterion
//   aglae_acceptance --list        print criterion names

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "aglae/classifier.hpp"
#include "aglae/config.hpp"
#include "aglae/metrics.hpp"
#include "aglae/runner.hpp"
#include "aglae/strategies.hpp"
#include "oracles.hpp"

namespace {

using namespace aglae;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

struct RandomInstance {
  StrategyInput input;
  oracle::Rows cand_x, cand_p, lab_x, lab_p;
  std::size_t b = 0;
};

RandomInstance random_instance(std::uint64_t trial) {
  Rng rng(trial, 0, Purpose::test);
  RandomInstance r;
  const std::size_t n = 1 + rng.below(12);
  const std::size_t m = 1 + rng.below(8);
  const std::size_t d = 1 + rng.below(5);
  const std::size_t c = 2 + rng.below(4);
  r.b = rng.below(std::min<std::size_t>(3, n) + 1);
  // Coarse coordinates make exact distance ties common.
  const bool coarse = rng.below(2) == 0;
  auto fill = [&](std::size_t rows, FeatureMatrix& x, ProbMatrix& p, oracle::Rows& ox,
                  oracle::Rows& op) {
    x = FeatureMatrix(rows, d);
    p = ProbMatrix(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(c));
    for (std::size_t i = 0; i < rows; ++i) {
      std::vector<double> row;
      for (std::size_t j = 0; j < d; ++j) {
        const double v = coarse ? static_cast<double>(rng.below(4)) : rng.normal();
        x(i, j) = static_cast<float>(v);
        row.push_back(x(i, j));
      }
      std::vector<double> pr(c);
      double total = 0.0;
      const bool one_hot = rng.below(6) == 0;
      for (std::size_t k = 0; k < c; ++k) total += pr[k] = one_hot ? (k == 0) : rng.uniform() + 1e-3;
      for (std::size_t k = 0; k < c; ++k) {
        pr[k] /= total;
        p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = pr[k];
      }
      ox.push_back(std::move(row));
      op.push_back(std::move(pr));
    }
  };
  fill(n, r.input.candidate_embeddings, r.input.candidate_probs, r.cand_x, r.cand_p);
  fill(m, r.input.labeled_embeddings, r.input.labeled_probs, r.lab_x, r.lab_p);
  r.input.candidate_indices.resize(n);
  std::iota(r.input.candidate_indices.begin(), r.input.candidate_indices.end(), std::size_t{0});
  return r;
}

Outcome strategy_oracles() {
  const auto start = Clock::now();
  constexpr std::uint64_t kTrials = 500;
  std::size_t mismatches[3] = {0, 0, 0};
  for (std::uint64_t t = 0; t < kTrials; ++t) {
    const auto inst = random_instance(t);
    const std::size_t k = 1 + t % 4;
    if (query_entropy(inst.input, inst.b).indices != oracle::entropy_select(inst.cand_p, inst.b)) {
      ++mismatches[0];
    }
    if (query_coreset(inst.input, inst.b).indices !=
        oracle::coreset_select(inst.cand_x, inst.lab_x, inst.b)) {
      ++mismatches[1];
    }
    if (query_cal(inst.input, inst.b, k).indices !=
        oracle::cal_select(inst.cand_x, inst.cand_p, inst.lab_x, inst.lab_p, k, inst.b)) {
      ++mismatches[2];
    }
  }
  const double secs = seconds_since(start);
  const bool ok = mismatches[0] + mismatches[1] + mismatches[2] == 0 && secs < 60.0;
  return {ok, fmt("mismatches entropy=%zu coreset=%zu cal=%zu over %llu trials each, %.2fs",
                  mismatches[0], mismatches[1], mismatches[2],
                  static_cast<unsigned long long>(kTrials), secs)};
}

Outcome badge_gradients() {
  Rng rng(2024, 0, Purpose::test);
  double worst = 0.0;
  constexpr int kInstances = 100;
  for (int trial = 0; trial < kInstances; ++trial) {
    const std::size_t d = 1 + rng.below(8), c = 2 + rng.below(4);
    auto params = init_params(d, c, rng);
    for (Eigen::Index i = 0; i < params.bias.size(); ++i) params.bias[i] = rng.normal();
    FeatureMatrix x(1, d);
    for (std::size_t j = 0; j < d; ++j) x(0, j) = static_cast<float>(rng.normal());
    const auto g = grad_embedding(params, x);
    const auto label = argmax_rows(predict_proba(params, x))[0];

    std::vector<double> theta, xv(x.row(0).begin(), x.row(0).end());
    for (std::size_t k = 0; k < c; ++k) {
      for (std::size_t j = 0; j < d; ++j) theta.push_back(params.weights(k, j));
      theta.push_back(params.bias[k]);
    }
    const double h = 1e-5;
    double diff = 0.0, norm_an = 0.0, norm_fd = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      auto up = theta, down = theta;
      up[i] += h;
      down[i] -= h;
      const double fd = (oracle::pseudo_label_loss(up, xv, c, label) -
                         oracle::pseudo_label_loss(down, xv, c, label)) / (2 * h);
      const double an = g(0, static_cast<Eigen::Index>(i));
      diff += (fd - an) * (fd - an);
      norm_an += an * an;
      norm_fd += fd * fd;
    }
    const double denom = std::max(std::sqrt(std::max(norm_an, norm_fd)), 1e-300);
    worst = std::max(worst, std::sqrt(diff) / denom);
  }
  return {worst <= 1e-5, fmt("max relative error %.3g over %d instances (limit 1e-5)", worst, kInstances)};
}

Outcome kmeanspp_distribution() {
  const oracle::Rows pts{{1.0, 0.0}, {0.0, 2.0}, {-3.0, -1.0}};
  RowMatrix m(3, 2);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) m(i, j) = pts[i][j];
  }
  const auto exact = oracle::kmeanspp_pair_distribution(pts);
  std::map<std::pair<std::size_t, std::size_t>, int> counts;
  constexpr int kTrials = 20000;
  for (int t = 0; t < kTrials; ++t) {
    Rng rng(static_cast<std::uint64_t>(t), 0, Purpose::test);
    const auto pick = kmeanspp_select(m, 2, rng);
    ++counts[{pick[0], pick[1]}];
  }
  double worst = 0.0;
  std::ostringstream detail;
  for (const auto& [pair, p] : exact) {
    const double emp = counts[pair] / static_cast<double>(kTrials);
    worst = std::max(worst, std::abs(emp - p));
    detail << "(" << pair.first << "," << pair.second << ") " << fmt("%.4f/%.4f ", emp, p);
  }
  std::size_t outcomes = 0;
  for (const auto& [pair, c] : counts) outcomes += exact.count(pair);
  return {worst <= 0.02 && outcomes == counts.size(),
          detail.str() + fmt("max deviation %.4f (limit 0.02)", worst)};
}

Outcome metric_fixed_points() {
  bool ok = true;
  std::string detail;
  for (double a : {0.0, 0.1, 0.3, 0.8, 1.0 / 3.0, 0.987654321}) {
    for (std::size_t t = 1; t <= 60; ++t) {
      if (normalized_auc(std::vector<double>(t + 1, a)) != a) {
        ok = false;
        detail += fmt("constant %.17g over T=%zu differs; ", a, t);
      }
    }
  }
  const double auc = normalized_auc(std::vector<double>{0.5, 0.7, 0.9});
  if (std::abs(auc - 0.7) > 1e-12) ok = false;
  std::vector<std::uint32_t> truth(100, 0), pred(100, 0);
  std::fill(truth.begin() + 90, truth.end(), 1u);
  const double bal = balanced_accuracy(pred, truth, 2);
  if (bal != 0.5) ok = false;
  return {ok, detail + fmt("auc([0.5,0.7,0.9])=%.15f, majority balanced accuracy=%.17g", auc, bal)};
}

Outcome cycle_counts() {
  DalConfig high;
  high.budget = 1600;
  DalConfig small = high;
  small.query_size = 25;
  const auto a = n_cycles(high), b = n_cycles(small);
  return {a == 15 && b == 60, fmt("(100,100,1600)->%zu, (100,25,1600)->%zu", a, b)};
}

Outcome table_delta() {
  // Reference per-dataset AUC means (x100) of the badge and random LT rows, low budget.
  const std::vector<std::string> datasets{"ag_news", "banking77", "dbpedia", "fnc1", "mnli",
                                          "qnli", "rotten", "sst2", "trec6", "wikitalk"};
  const std::vector<double> badge{88.5, 34.1, 96.9, 46.0, 44.9, 66.5, 83.2, 92.3, 78.7, 48.4};
  const std::vector<double> random{87.7, 34.5, 96.6, 43.92, 46.1, 67.6, 82.1, 90.7, 72.2, 48.8};
  std::vector<RunSummary> rows;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    rows.push_back(summarize_curve("badge", datasets[i], "lt-low", 0,
                                   {{{100, badge[i] / 100}, {500, badge[i] / 100}}}));
    rows.push_back(summarize_curve("random", datasets[i], "lt-low", 0,
                                   {{{100, random[i] / 100}, {500, random[i] / 100}}}));
  }
  const auto table = aggregate(rows, SummaryField::auc, true, datasets);
  const double b_avg = *table.row("badge", "lt-low").average * 100;
  const double r_avg = *table.row("random", "lt-low").average * 100;
  const double delta = *table.row("badge", "lt-low").delta * 100;
  const bool ok = std::abs(b_avg - 67.97) <= 0.01 && std::abs(r_avg - 67.3) <= 0.01 &&
                  std::abs(delta - 0.95) <= 0.01;
  return {ok, fmt("badge average %.3f (expected 67.97), random average %.3f (expected 67.3), "
                  "delta %+.3f (expected +0.95)",
                  b_avg, r_avg, delta)};
}

DatasetBundle imbalanced_blobs() {
  BlobSpec spec;
  spec.name = "blobs95";
  spec.n_train = 5000;
  spec.n_test = 2000;
  spec.dim = 16;
  spec.class_weights = {0.95, 0.05};
  spec.cluster_spread = 0.3;
  return synth_blobs(spec, 0);
}

Outcome qualitative_imbalance() {
  const auto start = Clock::now();
  const auto data = imbalanced_blobs();
  constexpr std::uint64_t kSeeds = 10;
  DalConfig cfg;
  cfg.id = "low";
  auto run_all = [&](StrategyKind kind, std::vector<double>& fac_out) {
    cfg.strategy.kind = kind;
    std::vector<double> auc;
    for (std::uint64_t s = 0; s < kSeeds; ++s) {
      const auto r = run_experiment(cfg, data, s);
      auc.push_back(normalized_auc(r.curve()));
      fac_out.push_back(fac(r.curve()));
    }
    return auc;
  };
  std::vector<double> fr, fe, fb;
  const auto random = run_all(StrategyKind::random, fr);
  const auto entropy = run_all(StrategyKind::entropy, fe);
  const auto badge = run_all(StrategyKind::badge, fb);
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  auto paired = [&](const std::vector<double>& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] - random[i];
    return s / static_cast<double>(a.size());
  };
  const double random_final = mean(fr);
  const double gain_entropy = paired(entropy), gain_badge = paired(badge);
  const double secs = seconds_since(start);
  const bool calibrated = random_final >= 0.7 && random_final <= 0.9;
  const bool ok = calibrated && gain_entropy > 0 && gain_badge > 0 && secs < 300.0;
  return {ok, fmt("random final balanced accuracy %.4f (target [0.7,0.9]); mean AUC random %.4f "
                  "entropy %.4f badge %.4f; paired gain entropy %+.4f badge %+.4f; %.1fs",
                  random_final, mean(random), mean(entropy), mean(badge), gain_entropy,
                  gain_badge, secs)};
}

std::vector<DatasetBundle> two_small_bundles() {
  BlobSpec a;
  a.name = "even";
  a.n_train = 1500;
  a.n_test = 300;
  a.dim = 8;
  a.class_weights = {0.25, 0.25, 0.25, 0.25};
  a.cluster_spread = 0.6;
  BlobSpec b = a;
  b.name = "skewed";
  b.class_weights = {0.7, 0.2, 0.1};
  return {synth_blobs(a, 1), synth_blobs(b, 2)};
}

std::string table_text(const SuiteResult& r) {
  std::ostringstream out;
  write_table(out, r.auc);
  write_table(out, r.fac);
  return out.str();
}

Outcome reproducibility() {
  const auto bundles = two_small_bundles();
  std::size_t differing = 0, runs = 0;
  for (const auto& data : bundles) {
    for (auto kind : {StrategyKind::random, StrategyKind::entropy, StrategyKind::coreset,
                      StrategyKind::badge, StrategyKind::cal}) {
      for (auto start : {ModelStart::cold, ModelStart::warm}) {
        DalConfig cfg;
        cfg.strategy.kind = kind;
        cfg.model_start = start;
        cfg.subset_size = 600;
        ++runs;
        if (serialize_record(run_experiment(cfg, data, 7)) !=
            serialize_record(run_experiment(cfg, data, 7))) {
          ++differing;
        }
      }
    }
  }

  SuiteSpec spec;
  spec.strategies = {{StrategyKind::random, 10}, {StrategyKind::entropy, 10},
                     {StrategyKind::cal, 10}, {StrategyKind::coreset, 10}};
  spec.seeds = {0, 1, 2};
  DalConfig low;
  low.id = "low";
  low.train = short_training();
  spec.configs = {low};
  SuiteOptions serial;
  const auto reference = table_text(run_suite(spec, bundles, serial));
  std::size_t table_diffs = 0;
  auto reordered = spec;
  std::reverse(reordered.strategies.begin(), reordered.strategies.end());
  std::reverse(reordered.seeds.begin(), reordered.seeds.end());
  for (std::size_t jobs : {1, 2, 8}) {
    SuiteOptions opts;
    opts.jobs = jobs;
    if (table_text(run_suite(spec, bundles, opts)) != reference) ++table_diffs;
    if (table_text(run_suite(reordered, bundles, opts)) != reference) ++table_diffs;
  }
  return {differing == 0 && table_diffs == 0,
          fmt("%zu/%zu repeated runs differ; %zu/6 suite tables differ from the serial one",
              differing, runs, table_diffs)};
}

Outcome subset_neutrality() {
  const auto bundles = two_small_bundles();
  std::size_t cycle_diffs = 0, record_diffs = 0, runs = 0;
  for (const auto& data : bundles) {
    const std::size_t n_u = data.train.features.rows() - 100;
    for (auto kind : {StrategyKind::random, StrategyKind::entropy, StrategyKind::coreset,
                      StrategyKind::badge, StrategyKind::cal}) {
      for (std::size_t subset : {n_u, n_u + 1, std::size_t{10000}}) {
        DalConfig full;
        full.strategy.kind = kind;
        full.subset_size.reset();
        DalConfig sub = full;
        sub.subset_size = subset;
        std::vector<std::vector<std::size_t>> seen_full, seen_sub;
        RunOptions a, b;
        a.hooks.on_candidates = [&](std::size_t, std::span<const std::size_t> c) {
          seen_full.emplace_back(c.begin(), c.end());
        };
        b.hooks.on_candidates = [&](std::size_t, std::span<const std::size_t> c) {
          seen_sub.emplace_back(c.begin(), c.end());
        };
        const auto ra = run_experiment(full, data, 3, a);
        const auto rb = run_experiment(sub, data, 3, b);
        ++runs;
        if (seen_full != seen_sub) ++cycle_diffs;
        if (serialize_record(ra) != serialize_record(rb)) ++record_diffs;
      }
    }
  }
  return {cycle_diffs == 0 && record_diffs == 0,
          fmt("%zu run pairs: %zu with differing candidate sets, %zu with differing records",
              runs, cycle_diffs, record_diffs)};
}

struct Criterion {
  const char* name;
  Outcome (*check)();
};

constexpr Criterion kCriteria[] = {
    {"strategy_oracles", strategy_oracles},
    {"badge_gradients", badge_gradients},
    {"kmeanspp_distribution", kmeanspp_distribution},
    {"metric_fixed_points", metric_fixed_points},
    {"cycle_counts", cycle_counts},
    {"table_delta", table_delta},
    {"qualitative_imbalance", qualitative_imbalance},
    {"reproducibility", reproducibility},
    {"subset_neutrality", subset_neutrality},
};

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--list") {
      for (const auto& c : kCriteria) std::cout << c.name << '\n';
      return 0;
    }
    if (arg == "--only" && i + 1 < argc) {
      only = argv[++i];
    } else {
      std::cerr << "usage: aglae_acceptance [--list] [--only NAME]\n";
      return 2;
    }
  }
  int failed = 0, ran = 0;
  for (const auto& c : kCriteria) {
    if (!only.empty() && only != c.name) continue;
    ++ran;
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion: " << only << '\n';
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
