// aglae: command line front end for the active learning harness.
//
//   aglae synth      write a synthetic blob dataset and register it in a manifest
//   aglae validate   check every file referenced by a manifest
//   aglae run        one experiment (dataset x strategy x seed)
//   aglae suite      a grid of experiments from a suite file
//   aglae summarize  benchmark tables from a directory of run records
//
// Output goes to --out, else $AGLAE_OUTPUT_DIR, else ./aglae-out.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aglae/config.hpp"
#include "aglae/error.hpp"
#include "aglae/featureio.hpp"
#include "aglae/record.hpp"
#include "aglae/runner.hpp"

namespace fs = std::filesystem;

namespace {

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("AGLAE_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "aglae-out";
}

void write_tables(const aglae::BenchmarkTable& auc, const aglae::BenchmarkTable& fac,
                  const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& [name, table] : {std::pair{"summary_auc.tsv", &auc}, std::pair{"summary_fac.tsv", &fac}}) {
    std::ofstream out(dir / name);
    aglae::write_table(out, *table);
  }
  std::cout << "AUC\n";
  aglae::write_table(std::cout, auc);
  std::cout << "\nFAC\n";
  aglae::write_table(std::cout, fac);
}

std::vector<double> parse_weights(const std::string& text) {
  std::vector<double> w;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) w.push_back(std::stod(item));
  return w;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-based deep active learning harness"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Emit a synthetic Gaussian-blob bundle");
  std::string synth_out, synth_manifest, weights_text = "0.5,0.5";
  aglae::BlobSpec blob;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "Directory for the four dataset files");
  synth->add_option("--manifest", synth_manifest, "Manifest to update (default <out>/manifest.json)");
  synth->add_option("--name", blob.name, "Dataset name")->capture_default_str();
  synth->add_option("--n-train", blob.n_train, "Train rows")->capture_default_str();
  synth->add_option("--n-test", blob.n_test, "Test rows")->capture_default_str();
  synth->add_option("--dim", blob.dim, "Embedding dimension")->capture_default_str();
  synth->add_option("--weights", weights_text, "Comma-separated class weights summing to 1")
      ->capture_default_str();
  synth->add_option("--spread", blob.cluster_spread, "Isotropic cluster standard deviation")
      ->capture_default_str();
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();

  // validate
  auto* check = app.add_subcommand("validate", "Load and validate every dataset in a manifest");
  std::string check_manifest;
  check->add_option("--manifest", check_manifest, "Manifest file")->required();

  // run
  auto* run = app.add_subcommand("run", "Run one experiment");
  std::string run_manifest, run_dataset, run_strategy, run_config, run_out;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::size_t> run_cal_k;
  bool run_timings = false;
  run->add_option("--manifest", run_manifest, "Manifest file")->required();
  run->add_option("--dataset", run_dataset, "Dataset name in the manifest")->required();
  run->add_option("--strategy", run_strategy, "random|entropy|coreset|badge|cal");
  run->add_option("--seed", run_seed, "Seed (default: first seed of the config)");
  run->add_option("--config", run_config, "DalConfig JSON file");
  run->add_option("--cal-k", run_cal_k, "CAL neighborhood size");
  run->add_option("--out", run_out, "Record output directory");
  run->add_flag("--timings", run_timings, "Store wall-clock train/query durations");

  // suite
  auto* suite = app.add_subcommand("suite", "Run an experiment grid");
  std::string suite_config, suite_out;
  std::size_t jobs = 1;
  bool suite_timings = false;
  suite->add_option("--config", suite_config, "Suite JSON file")->required();
  suite->add_option("--jobs", jobs, "Parallel runs")->capture_default_str();
  suite->add_option("--out", suite_out, "Output directory (records/ and tables)");
  suite->add_flag("--timings", suite_timings, "Store wall-clock train/query durations");

  // summarize
  auto* summarize = app.add_subcommand("summarize", "Tables from a records directory");
  std::string records_dir, summary_out;
  summarize->add_option("--records", records_dir, "Directory of *.jsonl run records")->required();
  summarize->add_option("--out", summary_out, "Where to write summary_{auc,fac}.tsv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      blob.class_weights = parse_weights(weights_text);
      const fs::path dir = output_dir(synth_out);
      const auto bundle = aglae::synth_blobs(blob, synth_seed);
      const auto entry = aglae::save_bundle(bundle, dir);
      const fs::path manifest_path = synth_manifest.empty() ? dir / "manifest.json" : fs::path(synth_manifest);
      aglae::Manifest manifest;
      if (fs::exists(manifest_path)) manifest = aglae::read_manifest(manifest_path);
      manifest.upsert(entry);
      aglae::write_manifest(manifest, manifest_path);
      std::cout << "wrote " << bundle.name << " (" << bundle.train.features.rows() << " train, "
                << bundle.test.features.rows() << " test, d=" << bundle.dim()
                << ", c=" << bundle.num_classes << ") -> " << manifest_path.string() << "\n";
    } else if (*check) {
      const auto manifest = aglae::read_manifest(check_manifest);
      for (const auto& e : manifest.datasets) {
        const auto b = aglae::load_bundle(e);
        std::cout << "ok " << e.name << " train=" << b.train.features.rows()
                  << " test=" << b.test.features.rows() << " d=" << b.dim()
                  << " c=" << b.num_classes << (b.imbalanced ? " imbalanced" : "") << "\n";
      }
    } else if (*run) {
      aglae::DalConfig cfg;
      if (!run_config.empty()) cfg = aglae::load_config(run_config);
      if (!run_strategy.empty()) cfg.strategy.kind = aglae::parse_strategy(run_strategy);
      if (run_cal_k) cfg.strategy.cal_neighbors = *run_cal_k;
      const std::uint64_t seed = run_seed.value_or(cfg.seeds.empty() ? 0 : cfg.seeds.front());
      const auto manifest = aglae::read_manifest(run_manifest);
      const auto bundle = aglae::load_bundle(manifest.find(run_dataset));
      aglae::RunOptions options;
      options.record_timings = run_timings;
      const fs::path dir = output_dir(run_out);
      try {
        const auto record = aglae::run_experiment(cfg, bundle, seed, options);
        const auto path = dir / aglae::record_file_name(record.header);
        aglae::write_record(record, path);
        const auto s = record.summary();
        std::cout << record.header.dataset << " " << record.header.strategy << " seed=" << seed
                  << " auc=" << s.auc << " fac=" << s.fac << " -> " << path.string() << "\n";
      } catch (const aglae::RunFailure& f) {
        aglae::write_record(f.partial(), dir / aglae::record_file_name(f.partial().header));
        throw;
      }
    } else if (*suite) {
      const auto spec = aglae::load_suite(suite_config);
      const fs::path dir = output_dir(suite_out);
      aglae::SuiteOptions options;
      options.jobs = jobs;
      options.records_dir = dir / "records";
      options.run.record_timings = suite_timings;
      const auto result = aglae::run_suite(spec, options);
      for (const auto& f : result.failures) std::cerr << "FAILED " << f << "\n";
      write_tables(result.auc, result.fac, dir);
      if (!result.failures.empty()) return 2;
    } else if (*summarize) {
      const auto result = aglae::summarize_records(records_dir);
      if (result.version_mismatches > 0) {
        std::cerr << "warning: " << result.version_mismatches
                  << " record(s) written by a different engine version\n";
      }
      if (result.skipped > 0) std::cerr << "skipped " << result.skipped << " incomplete record(s)\n";
      write_tables(result.auc, result.fac, summary_out.empty() ? fs::path(records_dir) : fs::path(summary_out));
    }
  } catch (const aglae::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
