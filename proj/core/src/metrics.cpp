#include "aglae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "aglae/error.hpp"

namespace aglae {

namespace {

void check_pair(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth) {
  if (truth.empty()) throw Error(ErrorCode::undefined_metric, "metric of an empty set");
  if (predicted.size() != truth.size()) {
    throw Error(ErrorCode::dimension_mismatch, "prediction/truth lengths differ");
  }
}

}  // namespace

double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth) {
  check_pair(predicted, truth);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double balanced_accuracy(std::span<const std::uint32_t> predicted,
                         std::span<const std::uint32_t> truth, std::uint32_t num_classes) {
  check_pair(predicted, truth);
  std::vector<std::size_t> support(num_classes, 0), hits(num_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= num_classes) {
      throw Error(ErrorCode::label_range, "true label " + std::to_string(truth[i]) + " >= c");
    }
    ++support[truth[i]];
    hits[truth[i]] += predicted[i] == truth[i];
  }
  double sum = 0.0;
  std::size_t present = 0;
  for (std::uint32_t c = 0; c < num_classes; ++c) {
    if (support[c] == 0) continue;
    sum += static_cast<double>(hits[c]) / static_cast<double>(support[c]);
    ++present;
  }
  return sum / static_cast<double>(present);
}

std::string_view to_string(MetricKind kind) noexcept {
  return kind == MetricKind::accuracy ? "accuracy" : "balanced_accuracy";
}

MetricKind parse_metric(std::string_view name) {
  if (name == "accuracy") return MetricKind::accuracy;
  if (name == "balanced_accuracy") return MetricKind::balanced_accuracy;
  throw Error(ErrorCode::parse, "unknown metric '" + std::string(name) + "'");
}

double normalized_auc(std::span<const double> s) {
  if (s.size() < 2) {
    throw Error(ErrorCode::undefined_metric, "AUC needs at least one cycle (two curve points)");
  }
  const std::size_t cycles = s.size() - 1;
  double area = 0.0;
  for (std::size_t t = 1; t <= cycles; ++t) area += (s[t - 1] + s[t]) / 2.0;
  const double auc = area / static_cast<double>(cycles);
  // Keep the result inside the score range despite rounding (constant curves map to themselves).
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  return std::clamp(auc, *lo, *hi);
}

namespace {
std::vector<double> scores_of(const LearningCurve& curve) {
  std::vector<double> s;
  s.reserve(curve.points.size());
  for (const auto& p : curve.points) s.push_back(p.score);
  return s;
}
}  // namespace

double normalized_auc(const LearningCurve& curve) { return normalized_auc(scores_of(curve)); }

double fac(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::undefined_metric, "FAC of an empty curve");
  return scores.back();
}

double fac(const LearningCurve& curve) { return fac(scores_of(curve)); }

RunSummary summarize_curve(std::string strategy, std::string dataset, std::string config_id,
                           std::uint64_t seed, LearningCurve curve) {
  RunSummary s;
  s.strategy = std::move(strategy);
  s.dataset = std::move(dataset);
  s.config_id = std::move(config_id);
  s.seed = seed;
  s.auc = normalized_auc(curve);
  s.fac = fac(curve);
  s.curve = std::move(curve);
  return s;
}

const TableRow& BenchmarkTable::row(const std::string& strategy, const std::string& config_id) const {
  for (const auto& r : rows) {
    if (r.strategy == strategy && r.config_id == config_id) return r;
  }
  throw Error(ErrorCode::invalid_input, "no row for " + strategy + " / " + config_id);
}

BenchmarkTable aggregate(std::span<const RunSummary> summaries, SummaryField field,
                         bool require_deltas, std::vector<std::string> datasets) {
  BenchmarkTable table;
  table.field = field;
  if (datasets.empty()) {
    std::set<std::string> names;
    for (const auto& s : summaries) names.insert(s.dataset);
    datasets.assign(names.begin(), names.end());
  }
  table.datasets = datasets;

  // (config, strategy) -> dataset -> values, kept in a sorted container so the
  // reduction order is independent of the input order.
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::vector<double>>> groups;
  for (const auto& s : summaries) {
    groups[{s.config_id, s.strategy}][s.dataset].push_back(field == SummaryField::auc ? s.auc : s.fac);
  }

  std::map<std::string, std::vector<TableRow>> by_config;
  for (auto& [key, per_dataset] : groups) {
    TableRow row;
    row.config_id = key.first;
    row.strategy = key.second;
    bool complete = true;
    double sum = 0.0;
    for (const auto& name : datasets) {
      auto it = per_dataset.find(name);
      if (it == per_dataset.end() || it->second.empty()) {
        complete = false;
        continue;
      }
      auto values = it->second;
      std::sort(values.begin(), values.end());
      CellStats cell;
      cell.seeds = values.size();
      cell.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
      if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - cell.mean) * (v - cell.mean);
        cell.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
      }
      sum += cell.mean;
      row.cells[name] = cell;
    }
    if (complete && !datasets.empty()) row.average = sum / static_cast<double>(datasets.size());
    by_config[row.config_id].push_back(std::move(row));
  }

  for (auto& [config_id, rows] : by_config) {
    const TableRow* baseline = nullptr;
    for (const auto& r : rows) {
      if (r.strategy == kBaselineStrategy) baseline = &r;
    }
    if (require_deltas && (baseline == nullptr || !baseline->average)) {
      throw Error(ErrorCode::incomplete_suite,
                  "config '" + config_id + "' has no complete random baseline for deltas");
    }
    const std::optional<double> base_avg = baseline ? baseline->average : std::nullopt;
    for (auto& r : rows) {
      if (r.average && base_avg) r.delta = *r.average - *base_avg;
    }
    std::vector<TableRow*> ranked;
    for (auto& r : rows) {
      if (r.average) ranked.push_back(&r);
    }
    std::sort(ranked.begin(), ranked.end(), [](const TableRow* a, const TableRow* b) {
      if (*a->average != *b->average) return *a->average > *b->average;
      return a->strategy < b->strategy;
    });
    for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i]->rank = i + 1;
    std::sort(rows.begin(), rows.end(), [](const TableRow& a, const TableRow& b) {
      const auto ra = a.rank.value_or(std::numeric_limits<std::size_t>::max());
      const auto rb = b.rank.value_or(std::numeric_limits<std::size_t>::max());
      if (ra != rb) return ra < rb;
      return a.strategy < b.strategy;
    });
    for (auto& r : rows) table.rows.push_back(std::move(r));
  }
  return table;
}

namespace {
std::string percent(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * v;
  return os.str();
}
}  // namespace

void write_table(std::ostream& out, const BenchmarkTable& table, char delimiter) {
  out << "strategy" << delimiter << "config";
  for (const auto& d : table.datasets) out << delimiter << d;
  out << delimiter << "Average" << delimiter << "Delta" << delimiter << "Rank\n";
  for (const auto& r : table.rows) {
    out << r.strategy << delimiter << r.config_id;
    for (const auto& d : table.datasets) {
      out << delimiter;
      auto it = r.cells.find(d);
      if (it == r.cells.end()) {
        out << "NA";
      } else {
        out << percent(it->second.mean) << "+-" << percent(it->second.stddev);
      }
    }
    out << delimiter << (r.average ? percent(*r.average) : "NA");
    out << delimiter;
    if (r.delta) {
      out << (*r.delta >= 0 ? "+" : "") << percent(*r.delta);
    } else {
      out << "NA";
    }
    out << delimiter << (r.rank ? std::to_string(*r.rank) : "NA") << '\n';
  }
}

}  // namespace aglae
