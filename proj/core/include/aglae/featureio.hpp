#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aglae/rng.hpp"

namespace aglae {

/// Dense row-major N x D matrix of 32-bit embeddings. Values are finite.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols);
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const float> row(std::size_t i) const noexcept {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<float> row(std::size_t i) noexcept { return {values_.data() + i * cols_, cols_}; }

  float operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }
  float& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * cols_ + j]; }

  const std::vector<float>& values() const noexcept { return values_; }

  /// Rows at the given positions, in that order.
  FeatureMatrix gather(std::span<const std::size_t> indices) const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> values_;
};

/// Class ids in [0, num_classes).
struct LabelVector {
  std::vector<std::uint32_t> labels;
  std::uint32_t num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

struct Split {
  FeatureMatrix features;
  LabelVector labels;
  friend bool operator==(const Split&, const Split&) = default;
};

struct DatasetBundle {
  std::string name;
  Split train;
  Split test;
  std::uint32_t num_classes = 0;
  bool imbalanced = false;

  std::size_t dim() const noexcept { return train.features.cols(); }
  friend bool operator==(const DatasetBundle&, const DatasetBundle&) = default;
};

/// Throws bundle_consistency if any DatasetBundle invariant is violated.
void validate(const DatasetBundle& bundle);

// Binary containers. All integers little-endian.
//   features: "AGLF" u16 version, u64 n, u32 d, n*d f32 row-major
//   labels:   "AGLL" u16 version, u64 n, u32 c, n u32
inline constexpr std::uint16_t kFormatVersion = 1;

void write_features(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_features(const std::filesystem::path& path);
void write_labels(const LabelVector& labels, const std::filesystem::path& path);
LabelVector read_labels(const std::filesystem::path& path);

std::vector<std::byte> encode_features(const FeatureMatrix& m);
FeatureMatrix decode_features(std::span<const std::byte> bytes);
std::vector<std::byte> encode_labels(const LabelVector& labels);
LabelVector decode_labels(std::span<const std::byte> bytes);

struct ManifestEntry {
  std::string name;
  std::filesystem::path train_features;
  std::filesystem::path train_labels;
  std::filesystem::path test_features;
  std::filesystem::path test_labels;
  std::uint32_t num_classes = 0;
  bool imbalanced = false;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::vector<ManifestEntry> datasets;

  const ManifestEntry& find(const std::string& name) const;
  /// Replaces an entry with the same name or appends.
  void upsert(ManifestEntry entry);
};

/// Relative paths inside the manifest resolve against the manifest's directory.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Loads the four files and validates. Either returns a consistent bundle or throws.
DatasetBundle load_bundle(const ManifestEntry& entry);

/// Writes `<dir>/<name>.{train,test}.{features,labels}` and returns the entry
/// pointing at them. write_manifest stores the paths relative to the manifest.
ManifestEntry save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);

struct BlobSpec {
  std::string name = "blobs";
  std::size_t n_train = 1000;
  std::size_t n_test = 500;
  std::size_t dim = 8;
  std::vector<double> class_weights{0.5, 0.5};
  double cluster_spread = 0.1;
  /// Flag stored in the bundle; defaults to "any weight differs from 1/C".
  std::optional<bool> imbalanced;
};

/// Isotropic Gaussian clusters with class means on the unit sphere.
DatasetBundle synth_blobs(const BlobSpec& spec, std::uint64_t seed);

}  // namespace aglae
