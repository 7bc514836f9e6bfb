#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qksvm/matrix.hpp"

namespace qksvm {

// Labeled embedding table. Class 0 is the majority class by convention.
struct Dataset {
  std::vector<std::string> ids;
  std::vector<int> labels;
  Matrix features;  // N x D

  std::size_t size() const { return labels.size(); }
};

// CSV with header id,label,e0,...,e{D-1}.
Dataset load_dataset_csv(const std::string& path);
void save_dataset_csv(const Dataset& ds, const std::string& path);

struct DatasetManifest {
  std::string model_name;
  std::size_t dim = 0;
  std::string seed_tag;
};

// Sidecar at csv_path + ".json"; absent sidecar is fine.
std::optional<DatasetManifest> load_manifest(const std::string& csv_path);

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

// Stratified 80/10/10 split. Global sizes are floor(0.8 N) and floor(0.1 N)
// with the remainder as test; per-class allocation uses largest-remainder
// apportionment so every split keeps class proportions within one sample.
// Within each class the order is a seeded Fisher-Yates shuffle.
SplitIndices split_dataset(const Dataset& ds, std::uint64_t seed);

// Standardize -> PCA-q -> rescale to [-1,1], all statistics from the
// training rows only.
class FittedPipeline {
 public:
  static FittedPipeline fit(const Matrix& features, std::span<const std::size_t> train_idx,
                            std::size_t q);

  // Rows with D columns -> n x q; training rows land in [-1,1], held-out rows
  // may exceed the interval (no clipping).
  Matrix transform(const Matrix& rows) const;

  std::size_t input_dim() const { return means_.size(); }
  std::size_t output_dim() const { return components_.rows(); }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& stds() const { return stds_; }
  const Matrix& components() const { return components_; }  // q x D, orthonormal rows
  const std::vector<double>& explained_fraction() const { return explained_; }
  const std::vector<double>& minmax_lo() const { return lo_; }
  const std::vector<double>& minmax_hi() const { return hi_; }

 private:
  std::vector<double> means_, stds_;
  Matrix components_;
  std::vector<double> explained_;
  std::vector<double> lo_, hi_;
};

Matrix take_rows(const Matrix& m, std::span<const std::size_t> idx);

std::vector<int> take_labels(std::span<const int> labels, std::span<const std::size_t> idx);

// How far outside [-1,1] a transformed block lands; 0 when fully inside.
double minmax_overflow(const Matrix& transformed);

}  // namespace qksvm
