#include "aglae/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <thread>

#include "aglae/pools.hpp"
#include "aglae/rng.hpp"
#include "aglae/strategies.hpp"

namespace aglae {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::uint32_t> gather_labels(const LabelVector& labels, std::span<const std::size_t> idx) {
  std::vector<std::uint32_t> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(labels.labels[i]);
  return out;
}

/// A subset at least as large as the initial unlabeled pool never samples.
DalConfig effective_config(DalConfig cfg, std::size_t n_train) {
  if (cfg.subset_size && *cfg.subset_size >= n_train - std::min(n_train, cfg.init_size)) {
    cfg.subset_size.reset();
  }
  return cfg;
}

StrategyInput build_input(const StrategySpec& strategy, const HeadParams& params,
                          const DatasetBundle& data, const PoolState& pools,
                          std::vector<std::size_t> candidates) {
  const auto need = needs(strategy.kind);
  StrategyInput in;
  const auto& train_x = data.train.features;
  FeatureMatrix cand_x;
  if (need.candidate_probs || need.candidate_embeddings || need.grad_embeddings) {
    cand_x = train_x.gather(candidates);
  }
  if (need.candidate_probs) in.candidate_probs = predict_proba(params, cand_x);
  if (need.grad_embeddings) in.grad_embeddings = grad_embedding(params, cand_x);
  if (need.labeled_embeddings || need.labeled_probs) {
    in.labeled_embeddings = train_x.gather(pools.labeled());
    if (need.labeled_probs) in.labeled_probs = predict_proba(params, in.labeled_embeddings);
  }
  if (need.candidate_embeddings) in.candidate_embeddings = std::move(cand_x);
  in.candidate_indices = std::move(candidates);
  return in;
}

}  // namespace

MetricKind metric_for(const DatasetBundle& bundle) noexcept {
  return bundle.imbalanced ? MetricKind::balanced_accuracy : MetricKind::accuracy;
}

double evaluate(const HeadParams& params, const DatasetBundle& bundle) {
  const auto predicted = argmax_rows(predict_proba(params, bundle.test.features));
  const auto& truth = bundle.test.labels.labels;
  return metric_for(bundle) == MetricKind::balanced_accuracy
             ? balanced_accuracy(predicted, truth, bundle.num_classes)
             : accuracy(predicted, truth);
}

RunRecord run_experiment(const DalConfig& requested, const DatasetBundle& data, std::uint64_t seed,
                         const RunOptions& options) {
  validate(data);
  const std::size_t n_train = data.train.features.rows();
  requested.validate_for(n_train);
  const DalConfig cfg = effective_config(requested, n_train);
  const std::size_t cycles = n_cycles(cfg);
  const auto& hooks = options.hooks;

  RunRecord record;
  record.header.dataset = data.name;
  record.header.strategy = std::string(to_string(cfg.strategy.kind));
  record.header.seed = seed;
  record.header.config_id = cfg.id;
  record.header.config_hash = config_hash(cfg);
  record.header.engine_version = engine_version();
  record.header.planned_cycles = cycles;

  std::size_t cycle = 0;
  try {
    // Keyed by seed only: every strategy at a given seed starts from the same L(0).
    Rng init_rng(seed, 0, Purpose::init);
    PoolState pools = init_pools(n_train, cfg.init_size, init_rng);
    record.header.initial_labeled.assign(pools.labeled().begin(), pools.labeled().end());

    HeadParams params;
    auto fit = [&](std::size_t t, CycleEntry& entry) {
      const auto start = Clock::now();
      Rng model_rng(seed, static_cast<std::uint32_t>(t), Purpose::model_init);
      Rng shuffle_rng(seed, static_cast<std::uint32_t>(t), Purpose::shuffle);
      const auto labeled = pools.labeled();
      const bool continue_previous = cfg.model_start == ModelStart::warm && t > 0;
      if (hooks.on_train) hooks.on_train(t, continue_previous ? &params : nullptr);
      if (labeled.empty()) {
        // Data cold start: the cycle-0 model is an untrained initialization.
        params = init_params(data.dim(), data.num_classes, model_rng);
      } else {
        const auto x = data.train.features.gather(labeled);
        const auto y = gather_labels(data.train.labels, labeled);
        TrainResult fitted = continue_previous
                                 ? train(params, x, y, cfg.train, shuffle_rng)
                                 : train_from_scratch(data.num_classes, x, y, cfg.train, model_rng,
                                                      shuffle_rng);
        params = std::move(fitted.params);
        entry.train_loss = fitted.final_loss;
      }
      if (options.record_timings) entry.train_seconds = seconds_since(start);
      entry.labeled_size = labeled.size();
      entry.metric = metric_for(data);
      entry.score = evaluate(params, data);
    };

    CycleEntry first;
    first.cycle = 0;
    fit(0, first);
    record.cycles.push_back(std::move(first));

    for (cycle = 1; cycle <= cycles; ++cycle) {
      const auto t32 = static_cast<std::uint32_t>(cycle);
      CycleEntry entry;
      entry.cycle = cycle;

      const auto query_start = Clock::now();
      std::vector<std::size_t> candidates;
      if (cfg.subset_size) {
        Rng subset_rng(seed, t32, Purpose::subset);
        candidates = draw_subset(pools, *cfg.subset_size, subset_rng);
      } else {
        candidates.assign(pools.unlabeled().begin(), pools.unlabeled().end());
      }
      if (hooks.on_candidates) hooks.on_candidates(cycle, candidates);

      const auto input = build_input(cfg.strategy, params, data, pools, std::move(candidates));
      Rng strategy_rng(seed, t32, Purpose::strategy);
      QueryBatch batch = select_batch(cfg.strategy, input, cfg.query_size, strategy_rng);
      batch.cycle = cycle;
      if (options.record_timings) entry.query_seconds = seconds_since(query_start);

      pools = update_pools(pools, annotate(batch, data.train.labels));
      entry.queried = std::move(batch.indices);
      fit(cycle, entry);
      record.cycles.push_back(std::move(entry));
    }
  } catch (const RunFailure&) {
    throw;
  } catch (const Error& e) {
    throw RunFailure(e.code(), "cycle " + std::to_string(cycle) + ": " + e.what(), record);
  }
  return record;
}

SuiteResult run_suite(const SuiteSpec& spec, std::span<const DatasetBundle> datasets,
                      const SuiteOptions& options) {
  const bool has_random =
      std::any_of(spec.strategies.begin(), spec.strategies.end(),
                  [](const StrategySpec& s) { return s.kind == StrategyKind::random; });
  if (spec.deltas && !has_random) {
    throw Error(ErrorCode::incomplete_suite, "deltas requested but the grid has no random strategy");
  }

  struct Task {
    const DatasetBundle* data;
    DalConfig cfg;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  std::vector<std::string> names;
  for (const auto& d : datasets) {
    names.push_back(d.name);
    for (const auto& base : spec.configs) {
      for (const auto& strategy : spec.strategies) {
        DalConfig cfg = base;
        cfg.strategy = strategy;
        cfg.seeds = spec.seeds;
        for (auto seed : spec.seeds) tasks.push_back({&d, cfg, seed});
      }
    }
  }

  std::vector<std::optional<RunRecord>> results(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto& task = tasks[i];
      try {
        results[i] = run_experiment(task.cfg, *task.data, task.seed, options.run);
      } catch (const RunFailure& f) {
        errors[i] = f.what();
        results[i] = f.partial();
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
      if (options.records_dir && results[i]) {
        write_record(*results[i], *options.records_dir / record_file_name(results[i]->header));
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, tasks.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  SuiteResult out;
  std::vector<RunSummary> summaries;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!errors[i].empty()) {
      out.failures.push_back(tasks[i].data->name + "/" + tasks[i].cfg.id + "/" +
                             std::string(to_string(tasks[i].cfg.strategy.kind)) + "/seed" +
                             std::to_string(tasks[i].seed) + ": " + errors[i]);
    }
    if (results[i] && results[i]->complete()) summaries.push_back(results[i]->summary());
    if (results[i]) out.records.push_back(std::move(*results[i]));
  }
  std::sort(out.records.begin(), out.records.end(), [](const RunRecord& a, const RunRecord& b) {
    const auto& x = a.header;
    const auto& y = b.header;
    return std::tie(x.dataset, x.config_id, x.strategy, x.seed) <
           std::tie(y.dataset, y.config_id, y.strategy, y.seed);
  });
  // Failed cells stay NA in the table; deltas are only demanded when every
  // random cell completed.
  auto table = [&](SummaryField field) {
    try {
      return aggregate(summaries, field, spec.deltas, names);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::incomplete_suite || out.failures.empty()) throw;
      return aggregate(summaries, field, false, names);
    }
  };
  out.auc = table(SummaryField::auc);
  out.fac = table(SummaryField::fac);
  return out;
}

SuiteResult run_suite(const SuiteSpec& spec, const SuiteOptions& options) {
  const Manifest manifest = read_manifest(spec.manifest);
  std::vector<DatasetBundle> bundles;
  if (spec.datasets.empty()) {
    for (const auto& e : manifest.datasets) bundles.push_back(load_bundle(e));
  } else {
    for (const auto& name : spec.datasets) bundles.push_back(load_bundle(manifest.find(name)));
  }
  return run_suite(spec, bundles, options);
}

SummaryResult summarize_records(const std::filesystem::path& dir) {
  SummaryResult out;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunSummary> summaries;
  bool has_random = false;
  for (const auto& f : files) {
    try {
      const auto loaded = read_record(f);
      out.version_mismatches += loaded.engine_version_mismatch;
      if (!loaded.record.complete()) {
        ++out.skipped;
        continue;
      }
      has_random |= loaded.record.header.strategy == kBaselineStrategy;
      summaries.push_back(loaded.record.summary());
    } catch (const Error&) {
      ++out.skipped;
    }
  }
  out.records = summaries.size();
  auto table = [&](SummaryField field) {
    try {
      return aggregate(summaries, field, has_random);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::incomplete_suite) throw;
      return aggregate(summaries, field, false);
    }
  };
  out.auc = table(SummaryField::auc);
  out.fac = table(SummaryField::fac);
  return out;
}

}  // namespace aglae
