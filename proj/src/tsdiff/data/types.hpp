#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace tsdiff {

// One multivariate series: L rows (timesteps) by F columns (channels).
struct TimeSeries {
  Eigen::MatrixXd values;

  Eigen::Index horizon() const { return values.rows(); }
  Eigen::Index channels() const { return values.cols(); }
};

// Per-timestep conditions paired with a series. Categorical labels are
// integers in [0, cardinality_k); continuous features are raw reals.
struct Metadata {
  Eigen::MatrixXi categorical;  // L x K_cat
  Eigen::MatrixXd continuous;   // L x K_cont
  std::vector<int> cardinalities;

  Eigen::Index horizon() const {
    return categorical.cols() > 0 ? categorical.rows() : continuous.rows();
  }
  Eigen::Index n_categorical() const { return categorical.cols(); }
  Eigen::Index n_continuous() const { return continuous.cols(); }
};

struct Sample {
  TimeSeries series;
  Metadata meta;
};

enum class SplitTag { train, val, test, unsplit };

std::string to_string(SplitTag tag);
SplitTag split_tag_from_string(const std::string& s);

// Dimensionally homogeneous collection of (series, metadata) pairs.
struct PairedDataset {
  std::vector<Sample> samples;
  SplitTag split_tag = SplitTag::unsplit;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  Eigen::Index horizon() const { return samples.empty() ? 0 : samples[0].series.horizon(); }
  Eigen::Index channels() const { return samples.empty() ? 0 : samples[0].series.channels(); }
  Eigen::Index n_categorical() const {
    return samples.empty() ? 0 : samples[0].meta.n_categorical();
  }
  Eigen::Index n_continuous() const {
    return samples.empty() ? 0 : samples[0].meta.n_continuous();
  }
  const std::vector<int>& cardinalities() const {
    static const std::vector<int> kEmpty;
    return samples.empty() ? kEmpty : samples[0].meta.cardinalities;
  }
};

// Throws DataError on non-finite entries, dimension mismatches across
// samples, or categorical labels outside their cardinality.
void validate(const PairedDataset& ds);

struct DatasetSplits {
  PairedDataset train;
  PairedDataset val;
  PairedDataset test;
};

// Shape contract a model was built against; checked when loading data.
struct DataSchema {
  Eigen::Index horizon = 0;
  Eigen::Index channels = 0;
  std::vector<int> cardinalities;
  Eigen::Index k_cont = 0;

  static DataSchema from_dataset(const PairedDataset& ds) {
    return {ds.horizon(), ds.channels(), ds.cardinalities(), ds.n_continuous()};
  }
  bool operator==(const DataSchema&) const = default;
};

// Throws DataError describing the first mismatch.
void check_schema(const DataSchema& expected, const PairedDataset& ds);

}  // namespace tsdiff
