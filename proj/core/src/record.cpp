#include "aglae/record.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace aglae {

using nlohmann::ordered_json;

#ifndef AGLAE_VERSION_STRING
#define AGLAE_VERSION_STRING "dev"
#endif

std::string engine_version() { return std::string("aglae/") + AGLAE_VERSION_STRING; }

LearningCurve RunRecord::curve() const {
  LearningCurve c;
  for (const auto& e : cycles) c.points.push_back({e.labeled_size, e.score});
  return c;
}

RunSummary RunRecord::summary() const {
  return summarize_curve(header.strategy, header.dataset, header.config_id, header.seed, curve());
}

RecordParseError::RecordParseError(std::size_t line, std::optional<std::size_t> last_complete_cycle,
                                   const std::string& message)
    : Error(ErrorCode::parse,
            "record line " + std::to_string(line) + ": " + message +
                (last_complete_cycle ? " (last complete cycle " + std::to_string(*last_complete_cycle) + ")"
                                     : " (no complete cycle)")),
      line_(line),
      last_cycle_(last_complete_cycle) {}

std::string serialize_record(const RunRecord& r) {
  std::string out;
  ordered_json h;
  h["kind"] = "header";
  h["dataset"] = r.header.dataset;
  h["strategy"] = r.header.strategy;
  h["seed"] = r.header.seed;
  h["config_id"] = r.header.config_id;
  h["config_hash"] = r.header.config_hash;
  h["engine_version"] = r.header.engine_version;
  h["planned_cycles"] = r.header.planned_cycles;
  h["initial_labeled"] = r.header.initial_labeled;
  out += h.dump();
  out += '\n';
  for (const auto& e : r.cycles) {
    ordered_json c;
    c["cycle"] = e.cycle;
    c["queried"] = e.queried;
    c["labeled_size"] = e.labeled_size;
    c["score"] = e.score;
    c["metric"] = std::string(to_string(e.metric));
    c["train_loss"] = e.train_loss ? ordered_json(*e.train_loss) : ordered_json(nullptr);
    c["train_seconds"] = e.train_seconds;
    c["query_seconds"] = e.query_seconds;
    out += c.dump();
    out += '\n';
  }
  return out;
}

LoadedRecord parse_record(const std::string& text) {
  LoadedRecord loaded;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> last_cycle;
  bool have_header = false;
  std::size_t consumed = 0;

  while (std::getline(in, line)) {
    ++line_no;
    consumed += line.size() + 1;
    const bool terminated = consumed <= text.size();
    if (line.empty() && terminated) continue;
    if (!terminated) {
      throw RecordParseError(line_no, last_cycle, "truncated line (no newline)");
    }
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const ordered_json::parse_error& e) {
      throw RecordParseError(line_no, last_cycle, e.what());
    }
    try {
      if (!have_header) {
        if (j.at("kind").get<std::string>() != "header") {
          throw RecordParseError(line_no, last_cycle, "first line is not a header");
        }
        auto& h = loaded.record.header;
        h.dataset = j.at("dataset").get<std::string>();
        h.strategy = j.at("strategy").get<std::string>();
        h.seed = j.at("seed").get<std::uint64_t>();
        h.config_id = j.at("config_id").get<std::string>();
        h.config_hash = j.at("config_hash").get<std::string>();
        h.engine_version = j.at("engine_version").get<std::string>();
        h.planned_cycles = j.at("planned_cycles").get<std::size_t>();
        h.initial_labeled = j.at("initial_labeled").get<std::vector<std::size_t>>();
        loaded.engine_version_mismatch = h.engine_version != engine_version();
        have_header = true;
        continue;
      }
      CycleEntry e;
      e.cycle = j.at("cycle").get<std::size_t>();
      const std::size_t expected = loaded.record.cycles.size();
      if (e.cycle != expected) {
        throw RecordParseError(line_no, last_cycle,
                               "cycle " + std::to_string(e.cycle) + " where " +
                                   std::to_string(expected) + " was expected");
      }
      e.queried = j.at("queried").get<std::vector<std::size_t>>();
      e.labeled_size = j.at("labeled_size").get<std::size_t>();
      e.score = j.at("score").get<double>();
      e.metric = parse_metric(j.at("metric").get<std::string>());
      if (!j.at("train_loss").is_null()) e.train_loss = j.at("train_loss").get<double>();
      e.train_seconds = j.at("train_seconds").get<double>();
      e.query_seconds = j.at("query_seconds").get<double>();
      loaded.record.cycles.push_back(std::move(e));
      last_cycle = expected;
    } catch (const ordered_json::exception& e) {
      throw RecordParseError(line_no, last_cycle, e.what());
    }
  }
  if (!have_header) throw RecordParseError(line_no, last_cycle, "missing header line");
  return loaded;
}

void write_record(const RunRecord& record, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + tmp.string());
    out << serialize_record(record);
    if (!out) throw Error(ErrorCode::io, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedRecord read_record(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_record(os.str());
}

std::string record_file_name(const RunHeader& h) {
  return h.dataset + "__" + h.config_id + "__" + h.strategy + "__seed" + std::to_string(h.seed) +
         ".jsonl";
}

}  // namespace aglae
