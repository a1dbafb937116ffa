#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deunet/tensor.hpp"

namespace deunet {

/// Per-feature affine record: stored_feature = (raw - shift) / scale.
struct Normalization {
  std::vector<double> shift, scale;
  bool empty() const { return shift.empty(); }
};

struct Dataset {
  Tensor2D features;  // n x d
  std::vector<int> labels;
  int num_classes = 0;
  Normalization normalization;

  int size() const { return features.rows; }
  void validate() const;
};

/// Big-endian IDX pair (image magic 2051, label magic 2049), raw or
/// gzip-compressed (detected by magic bytes). Pixels are scaled to [0, 1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Rectangular numeric CSV with a header row. Features are standardized per
/// column (constant columns get scale 1); labels map to dense indices in
/// first-appearance order. label_column is a header name, or a 0-based column
/// index if no header matches.
Dataset load_csv(const std::string& path, const std::string& label_column);

enum class SyntheticKind { Moons, Circles, Spirals };
std::optional<SyntheticKind> synthetic_kind_from_string(std::string_view s);
const char* to_string(SyntheticKind k);

/// Two-class 2-D generators, deterministic in seed, classes balanced within 1.
Dataset make_synthetic(SyntheticKind kind, int n, double noise, std::uint64_t seed);

/// Seeded row split (e.g. 0.8 keeps 80% in the first part). Both parts share
/// the source num_classes and normalization record.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double first_fraction,
                                          std::uint64_t seed);

struct Batch {
  Tensor2D x;
  std::vector<int> labels;
};

/// Seeded epoch shuffling; each epoch visits every sample exactly once and the
/// permutation is fully determined by (seed, epoch). The final partial batch
/// is kept.
class BatchIterator {
 public:
  BatchIterator(const Dataset& dataset, int batch_size, std::uint64_t seed);

  void start_epoch(long epoch);
  std::optional<Batch> next();
  long batches_per_epoch() const;

 private:
  const Dataset* dataset_;
  int batch_size_;
  std::uint64_t seed_;
  std::vector<std::size_t> perm_;
  std::size_t pos_ = 0;
};

}  // namespace deunet
