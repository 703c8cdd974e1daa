#include "aglae/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aglae/error.hpp"

namespace aglae {

using nlohmann::json;

std::string_view to_string(ModelStart start) noexcept {
  return start == ModelStart::cold ? "cold" : "warm";
}

void DalConfig::validate() const {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::invalid_config, "config '" + id + "': " + what);
  };
  if (query_size < 1) fail("query_size must be >= 1");
  if (budget < init_size) fail("budget smaller than init_size");
  if ((budget - init_size) % query_size != 0) {
    fail("budget - init_size = " + std::to_string(budget - init_size) +
         " is not a multiple of query_size " + std::to_string(query_size));
  }
  if (subset_size && *subset_size < 1) fail("subset_size must be >= 1");
  if (needs(strategy.kind).labeled_pool && init_size < 1) {
    fail(std::string(to_string(strategy.kind)) + " needs init_size >= 1 (data warm-start)");
  }
  if (strategy.kind == StrategyKind::cal && strategy.cal_neighbors < 1) fail("cal k must be >= 1");
  train.validate();
}

void DalConfig::validate_for(std::size_t n_train) const {
  validate();
  if (budget > n_train) {
    throw Error(ErrorCode::invalid_config, "config '" + id + "': budget " + std::to_string(budget) +
                                               " exceeds train size " + std::to_string(n_train));
  }
}

std::size_t n_cycles(const DalConfig& cfg) {
  cfg.validate();
  return (cfg.budget - cfg.init_size) / cfg.query_size;
}

namespace {

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string canonical_text(const DalConfig& cfg) {
  std::ostringstream os;
  os << "init_size=" << cfg.init_size << '\n'
     << "query_size=" << cfg.query_size << '\n'
     << "budget=" << cfg.budget << '\n'
     << "subset_size=" << (cfg.subset_size ? std::to_string(*cfg.subset_size) : "none") << '\n'
     << "model_start=" << to_string(cfg.model_start) << '\n'
     << "strategy=" << to_string(cfg.strategy.kind) << '\n';
  if (cfg.strategy.kind == StrategyKind::cal) os << "cal_neighbors=" << cfg.strategy.cal_neighbors << '\n';
  const auto& t = cfg.train;
  os << "epochs=" << t.epochs << '\n'
     << "learning_rate=" << exact(t.learning_rate) << '\n'
     << "warmup_fraction=" << exact(t.warmup_fraction) << '\n'
     << "weight_decay=" << exact(t.weight_decay) << '\n'
     << "minibatch_size=" << t.minibatch_size << '\n'
     << "numeric_epsilon=" << exact(t.numeric_epsilon) << '\n'
     << "beta1=" << exact(t.beta1) << '\n'
     << "beta2=" << exact(t.beta2) << '\n'
     << "adam_epsilon=" << exact(t.adam_epsilon) << '\n';
  return os.str();
}

std::string config_hash(const DalConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : canonical_text(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

StrategySpec strategy_from(const json& j) {
  StrategySpec s;
  if (j.is_string()) {
    s.kind = parse_strategy(j.get<std::string>());
  } else {
    s.kind = parse_strategy(j.at("name").get<std::string>());
    if (j.contains("k")) s.cal_neighbors = j.at("k").get<std::size_t>();
  }
  return s;
}

json strategy_to(const StrategySpec& s) {
  json j;
  j["name"] = std::string(to_string(s.kind));
  if (s.kind == StrategyKind::cal) j["k"] = s.cal_neighbors;
  return j;
}

void train_from(const json& j, TrainConfig& t) {
  if (j.contains("epochs")) t.epochs = j["epochs"].get<std::size_t>();
  if (j.contains("learning_rate")) t.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("warmup_fraction")) t.warmup_fraction = j["warmup_fraction"].get<double>();
  if (j.contains("weight_decay")) t.weight_decay = j["weight_decay"].get<double>();
  if (j.contains("minibatch_size")) t.minibatch_size = j["minibatch_size"].get<std::size_t>();
  if (j.contains("numeric_epsilon")) t.numeric_epsilon = j["numeric_epsilon"].get<double>();
}

void config_from(const json& j, DalConfig& c) {
  if (!j.is_object()) throw Error(ErrorCode::parse, "config must be a JSON object");
  if (j.contains("id")) c.id = j["id"].get<std::string>();
  if (j.contains("init_size")) c.init_size = j["init_size"].get<std::size_t>();
  if (j.contains("query_size")) c.query_size = j["query_size"].get<std::size_t>();
  if (j.contains("budget")) c.budget = j["budget"].get<std::size_t>();
  if (j.contains("subset_size")) {
    const auto& v = j["subset_size"];
    if (v.is_null() || (v.is_boolean() && !v.get<bool>())) {
      c.subset_size.reset();
    } else {
      c.subset_size = v.get<std::size_t>();
    }
  }
  if (j.contains("model_start")) {
    const auto s = j["model_start"].get<std::string>();
    if (s == "cold") {
      c.model_start = ModelStart::cold;
    } else if (s == "warm") {
      c.model_start = ModelStart::warm;
    } else {
      throw Error(ErrorCode::parse, "model_start must be \"cold\" or \"warm\"");
    }
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    if (t.is_string()) {
      const auto preset = t.get<std::string>();
      if (preset == "st") {
        c.train = short_training();
      } else if (preset == "lt") {
        c.train = long_training();
      } else if (preset == "lt+") {
        c.train = long_plus_training();
      } else {
        throw Error(ErrorCode::parse, "unknown training preset '" + preset + "'");
      }
    } else {
      train_from(t, c.train);
    }
  }
  if (j.contains("strategy")) c.strategy = strategy_from(j["strategy"]);
  if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse, e.what());
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

DalConfig parse_config(std::string_view text) {
  DalConfig c;
  try {
    config_from(parse_json(text), c);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

DalConfig load_config(const std::filesystem::path& path) { return parse_config(slurp(path)); }

std::string dump_config(const DalConfig& c) {
  nlohmann::ordered_json j;
  j["id"] = c.id;
  j["init_size"] = c.init_size;
  j["query_size"] = c.query_size;
  j["budget"] = c.budget;
  j["subset_size"] = c.subset_size ? nlohmann::ordered_json(*c.subset_size) : nullptr;
  j["model_start"] = std::string(to_string(c.model_start));
  j["train"] = {{"epochs", c.train.epochs},
                {"learning_rate", c.train.learning_rate},
                {"warmup_fraction", c.train.warmup_fraction},
                {"weight_decay", c.train.weight_decay},
                {"minibatch_size", c.train.minibatch_size},
                {"numeric_epsilon", c.train.numeric_epsilon}};
  j["strategy"] = strategy_to(c.strategy);
  j["seeds"] = c.seeds;
  return j.dump(2);
}

SuiteSpec parse_suite(std::string_view text, const std::filesystem::path& base_dir) {
  SuiteSpec s;
  try {
    const json j = parse_json(text);
    std::filesystem::path manifest = j.at("manifest").get<std::string>();
    s.manifest = manifest.is_absolute() || base_dir.empty() ? manifest : base_dir / manifest;
    if (j.contains("datasets")) s.datasets = j["datasets"].get<std::vector<std::string>>();
    for (const auto& st : j.at("strategies")) s.strategies.push_back(strategy_from(st));
    if (j.contains("seeds")) s.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("deltas")) s.deltas = j["deltas"].get<bool>();
    for (const auto& cj : j.at("configs")) {
      DalConfig c;
      config_from(cj, c);
      s.configs.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("suite: ") + e.what());
  }
  if (s.strategies.empty()) throw Error(ErrorCode::invalid_config, "suite lists no strategies");
  if (s.configs.empty()) throw Error(ErrorCode::invalid_config, "suite lists no configs");
  return s;
}

SuiteSpec load_suite(const std::filesystem::path& path) {
  return parse_suite(slurp(path), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace aglae
