#include "aglae/featureio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "aglae/error.hpp"

namespace aglae {

namespace fs = std::filesystem;

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0f) {}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw Error(ErrorCode::dimension_mismatch,
                "feature matrix " + std::to_string(rows) + "x" + std::to_string(cols) +
                    " given " + std::to_string(values_.size()) + " values");
  }
}

FeatureMatrix FeatureMatrix::gather(std::span<const std::size_t> indices) const {
  FeatureMatrix out(indices.size(), cols_);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= rows_) {
      throw Error(ErrorCode::index_out_of_range,
                  "row " + std::to_string(indices[r]) + " of " + std::to_string(rows_));
    }
    const auto src = row(indices[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

namespace {

constexpr std::size_t kFeatureHeaderSize = 4 + 2 + 8 + 4;
constexpr std::size_t kLabelHeaderSize = 4 + 2 + 8 + 4;

class Writer {
 public:
  void magic(const char (&tag)[5]) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::byte>(tag[i]));
  }
  template <typename T>
  void le(T value) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xFF));
    }
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::byte> take() { return std::move(out_); }
  void reserve(std::size_t n) { out_.reserve(n); }

 private:
  std::vector<std::byte> out_;
};

class Reader {
 public:
  Reader(std::span<const std::byte> bytes, const char* what) : bytes_(bytes), what_(what) {}

  void expect_magic(const char (&tag)[5]) {
    need(4);
    for (int i = 0; i < 4; ++i) {
      if (bytes_[pos_ + i] != static_cast<std::byte>(tag[i])) {
        fail("bad magic, expected \"" + std::string(tag) + "\"");
      }
    }
    pos_ += 4;
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(std::to_integer<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  [[noreturn]] void fail(const std::string& message) const {
    throw Error(ErrorCode::format,
                std::string(what_) + " at offset " + std::to_string(pos_) + ": " + message);
  }

  void need(std::size_t n) const {
    if (remaining() < n) {
      fail("truncated, need " + std::to_string(n) + " bytes, have " +
           std::to_string(remaining()));
    }
  }

 private:
  std::span<const std::byte> bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

std::vector<std::byte> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> bytes(raw.size());
  std::memcpy(bytes.data(), raw.data(), raw.size());
  return bytes;
}

void write_file_atomic(const fs::path& path, std::span<const std::byte> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void check_finite(const FeatureMatrix& m) {
  const auto& v = m.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw Error(ErrorCode::format, "non-finite feature at row " + std::to_string(i / m.cols()) +
                                         " col " + std::to_string(i % m.cols()));
    }
  }
}

}  // namespace

std::vector<std::byte> encode_features(const FeatureMatrix& m) {
  check_finite(m);
  Writer w;
  w.reserve(kFeatureHeaderSize + 4 * m.values().size());
  w.magic("AGLF");
  w.le(kFormatVersion);
  w.le(static_cast<std::uint64_t>(m.rows()));
  w.le(static_cast<std::uint32_t>(m.cols()));
  for (float v : m.values()) w.f32(v);
  return w.take();
}

FeatureMatrix decode_features(std::span<const std::byte> bytes) {
  Reader r(bytes, "AGLF");
  r.expect_magic("AGLF");
  const auto version = r.le<std::uint16_t>();
  if (version != kFormatVersion) r.fail("unsupported version " + std::to_string(version));
  const auto n = r.le<std::uint64_t>();
  const auto d = r.le<std::uint32_t>();
  if (d == 0 && n > 0) r.fail("zero feature dimension");
  const std::uint64_t payload = n * d * 4;
  if (d != 0 && payload / d / 4 != n) r.fail("header overflow");
  if (r.remaining() < payload) {
    r.fail("truncated payload: header declares " + std::to_string(n) + " rows, " +
           std::to_string(r.remaining() / (4ull * std::max<std::uint32_t>(d, 1))) + " present");
  }
  if (r.remaining() > payload) r.fail("trailing bytes after payload");
  std::vector<float> values(n * d);
  for (auto& v : values) {
    v = r.f32();
    if (!std::isfinite(v)) r.fail("non-finite value");
  }
  return FeatureMatrix(n, d, std::move(values));
}

std::vector<std::byte> encode_labels(const LabelVector& labels) {
  Writer w;
  w.reserve(kLabelHeaderSize + 4 * labels.size());
  w.magic("AGLL");
  w.le(kFormatVersion);
  w.le(static_cast<std::uint64_t>(labels.size()));
  w.le(labels.num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.labels[i] >= labels.num_classes) {
      throw Error(ErrorCode::label_range, "label " + std::to_string(labels.labels[i]) +
                                              " at row " + std::to_string(i) + " >= c=" +
                                              std::to_string(labels.num_classes));
    }
    w.le(labels.labels[i]);
  }
  return w.take();
}

LabelVector decode_labels(std::span<const std::byte> bytes) {
  Reader r(bytes, "AGLL");
  r.expect_magic("AGLL");
  const auto version = r.le<std::uint16_t>();
  if (version != kFormatVersion) r.fail("unsupported version " + std::to_string(version));
  const auto n = r.le<std::uint64_t>();
  LabelVector out;
  out.num_classes = r.le<std::uint32_t>();
  if (r.remaining() < n * 4) {
    r.fail("truncated payload: header declares " + std::to_string(n) + " labels, " +
           std::to_string(r.remaining() / 4) + " present");
  }
  if (r.remaining() > n * 4) r.fail("trailing bytes after payload");
  out.labels.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto label = r.le<std::uint32_t>();
    if (label >= out.num_classes) {
      throw Error(ErrorCode::label_range, "label " + std::to_string(label) + " at row " +
                                              std::to_string(i) + " >= c=" +
                                              std::to_string(out.num_classes));
    }
    out.labels[i] = label;
  }
  return out;
}

void write_features(const FeatureMatrix& m, const fs::path& path) {
  write_file_atomic(path, encode_features(m));
}

FeatureMatrix read_features(const fs::path& path) { return decode_features(read_file(path)); }

void write_labels(const LabelVector& labels, const fs::path& path) {
  write_file_atomic(path, encode_labels(labels));
}

LabelVector read_labels(const fs::path& path) { return decode_labels(read_file(path)); }

void validate(const DatasetBundle& b) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::bundle_consistency, "dataset '" + b.name + "': " + what);
  };
  if (b.num_classes < 2) fail("num_classes must be >= 2");
  for (const auto* split : {&b.train, &b.test}) {
    const char* tag = split == &b.train ? "train" : "test";
    if (split->features.rows() != split->labels.size()) {
      fail(std::string(tag) + " has " + std::to_string(split->features.rows()) +
           " feature rows but " + std::to_string(split->labels.size()) + " labels");
    }
    if (split->labels.num_classes != b.num_classes) {
      fail(std::string(tag) + " labels declare c=" + std::to_string(split->labels.num_classes) +
           ", manifest says " + std::to_string(b.num_classes));
    }
    for (auto y : split->labels.labels) {
      if (y >= b.num_classes) fail(std::string(tag) + " label out of range");
    }
  }
  if (b.train.features.cols() != b.test.features.cols()) {
    fail("train dim " + std::to_string(b.train.features.cols()) + " != test dim " +
         std::to_string(b.test.features.cols()));
  }
  if (b.train.features.rows() == 0) fail("empty train split");
  if (b.test.features.rows() == 0) fail("empty test split");
}

const ManifestEntry& Manifest::find(const std::string& name) const {
  for (const auto& e : datasets) {
    if (e.name == name) return e;
  }
  throw Error(ErrorCode::invalid_config, "dataset '" + name + "' not in manifest");
}

void Manifest::upsert(ManifestEntry entry) {
  for (auto& e : datasets) {
    if (e.name == entry.name) {
      e = std::move(entry);
      return;
    }
  }
  datasets.push_back(std::move(entry));
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open manifest " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, "manifest " + path.string() + ": " + e.what());
  }
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  auto resolve = [&](const std::string& p) {
    fs::path q(p);
    return q.is_absolute() ? q : base / q;
  };
  Manifest m;
  try {
    for (const auto& item : doc.at("datasets")) {
      ManifestEntry e;
      e.name = item.at("name").get<std::string>();
      e.train_features = resolve(item.at("train_features").get<std::string>());
      e.train_labels = resolve(item.at("train_labels").get<std::string>());
      e.test_features = resolve(item.at("test_features").get<std::string>());
      e.test_labels = resolve(item.at("test_labels").get<std::string>());
      e.num_classes = item.at("num_classes").get<std::uint32_t>();
      e.imbalanced = item.at("imbalanced").get<bool>();
      m.datasets.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, "manifest " + path.string() + ": " + e.what());
  }
  return m;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  const fs::path abs_base = fs::absolute(base).lexically_normal();
  auto rel = [&](const fs::path& p) {
    const auto r = fs::absolute(p).lexically_normal().lexically_relative(abs_base);
    return (r.empty() ? fs::absolute(p) : r).generic_string();
  };
  nlohmann::ordered_json doc;
  doc["datasets"] = nlohmann::ordered_json::array();
  for (const auto& e : manifest.datasets) {
    nlohmann::ordered_json item;
    item["name"] = e.name;
    item["train_features"] = rel(e.train_features);
    item["train_labels"] = rel(e.train_labels);
    item["test_features"] = rel(e.test_features);
    item["test_labels"] = rel(e.test_labels);
    item["num_classes"] = e.num_classes;
    item["imbalanced"] = e.imbalanced;
    doc["datasets"].push_back(std::move(item));
  }
  const std::string text = doc.dump(2) + "\n";
  std::vector<std::byte> bytes(text.size());
  std::memcpy(bytes.data(), text.data(), text.size());
  write_file_atomic(path, bytes);
}

DatasetBundle load_bundle(const ManifestEntry& entry) {
  DatasetBundle b;
  b.name = entry.name;
  b.num_classes = entry.num_classes;
  b.imbalanced = entry.imbalanced;
  b.train.features = read_features(entry.train_features);
  b.train.labels = read_labels(entry.train_labels);
  b.test.features = read_features(entry.test_features);
  b.test.labels = read_labels(entry.test_labels);
  validate(b);
  return b;
}

ManifestEntry save_bundle(const DatasetBundle& bundle, const fs::path& dir) {
  validate(bundle);
  ManifestEntry e;
  e.name = bundle.name;
  e.train_features = dir / (bundle.name + ".train.features");
  e.train_labels = dir / (bundle.name + ".train.labels");
  e.test_features = dir / (bundle.name + ".test.features");
  e.test_labels = dir / (bundle.name + ".test.labels");
  e.num_classes = bundle.num_classes;
  e.imbalanced = bundle.imbalanced;
  write_features(bundle.train.features, e.train_features);
  write_labels(bundle.train.labels, e.train_labels);
  write_features(bundle.test.features, e.test_features);
  write_labels(bundle.test.labels, e.test_labels);
  return e;
}

namespace {

Split draw_split(std::size_t n, const std::vector<std::vector<double>>& means,
                 const std::vector<double>& cumulative, double spread, Rng rng) {
  const std::size_t d = means.front().size();
  Split s;
  s.features = FeatureMatrix(n, d);
  s.labels.num_classes = static_cast<std::uint32_t>(means.size());
  s.labels.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    std::uint32_t y = 0;
    while (y + 1 < cumulative.size() && u >= cumulative[y]) ++y;
    s.labels.labels[i] = y;
    auto row = s.features.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = static_cast<float>(means[y][j] + spread * rng.normal());
    }
  }
  return s;
}

}  // namespace

DatasetBundle synth_blobs(const BlobSpec& spec, std::uint64_t seed) {
  const auto c = spec.class_weights.size();
  if (c < 2) throw Error(ErrorCode::invalid_config, "synth_blobs needs at least 2 classes");
  if (spec.dim < 1) throw Error(ErrorCode::invalid_config, "synth_blobs needs dim >= 1");
  if (!(spec.cluster_spread > 0.0) || !std::isfinite(spec.cluster_spread)) {
    throw Error(ErrorCode::invalid_config, "cluster_spread must be positive");
  }
  for (double w : spec.class_weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::invalid_config, "negative class weight");
  }
  const double total = std::accumulate(spec.class_weights.begin(), spec.class_weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::invalid_config, "class weights must sum to 1");
  }
  if (spec.n_train == 0 || spec.n_test == 0) {
    throw Error(ErrorCode::invalid_config, "synth_blobs needs non-empty splits");
  }

  Rng mean_rng(seed, 0, Purpose::synth);
  std::vector<std::vector<double>> means(c, std::vector<double>(spec.dim));
  for (auto& mu : means) {
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (auto& v : mu) {
        v = mean_rng.normal();
        norm2 += v * v;
      }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : mu) v *= inv;
  }

  std::vector<double> cumulative(c);
  std::partial_sum(spec.class_weights.begin(), spec.class_weights.end(), cumulative.begin());

  DatasetBundle b;
  b.name = spec.name;
  b.num_classes = static_cast<std::uint32_t>(c);
  b.imbalanced = spec.imbalanced.value_or(std::any_of(
      spec.class_weights.begin(), spec.class_weights.end(),
      [&](double w) { return std::abs(w - 1.0 / static_cast<double>(c)) > 1e-9; }));
  b.train = draw_split(spec.n_train, means, cumulative, spec.cluster_spread,
                       Rng(seed, 1, Purpose::synth));
  b.test = draw_split(spec.n_test, means, cumulative, spec.cluster_spread,
                      Rng(seed, 2, Purpose::synth));
  return b;
}

}  // namespace aglae
