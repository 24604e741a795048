#include "tsdiff/data/types.hpp"

#include <cmath>

#include "tsdiff/common/errors.hpp"

namespace tsdiff {

std::string to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::train: return "train";
    case SplitTag::val: return "val";
    case SplitTag::test: return "test";
    case SplitTag::unsplit: return "unsplit";
  }
  return "unsplit";
}

SplitTag split_tag_from_string(const std::string& s) {
  if (s == "train") return SplitTag::train;
  if (s == "val") return SplitTag::val;
  if (s == "test") return SplitTag::test;
  if (s == "unsplit") return SplitTag::unsplit;
  throw DataError("unknown split tag: " + s);
}

void check_schema(const DataSchema& expected, const PairedDataset& ds) {
  if (ds.empty()) throw DataError("schema check: empty dataset");
  if (ds.horizon() != expected.horizon)
    throw DataError("schema check: horizon " + std::to_string(ds.horizon()) +
                    " != expected " + std::to_string(expected.horizon));
  if (ds.channels() != expected.channels)
    throw DataError("schema check: channel count " + std::to_string(ds.channels()) +
                    " != expected " + std::to_string(expected.channels));
  if (ds.cardinalities() != expected.cardinalities)
    throw DataError("schema check: categorical cardinalities differ");
  if (ds.n_continuous() != expected.k_cont)
    throw DataError("schema check: continuous feature count differs");
}

void validate(const PairedDataset& ds) {
  if (ds.empty()) return;
  const auto L = ds.horizon();
  const auto F = ds.channels();
  const auto kc = ds.n_categorical();
  const auto kn = ds.n_continuous();
  const auto& cards = ds.cardinalities();
  if (L < 1 || F < 1) throw DataError("dataset requires L >= 1 and F >= 1");
  if (kc + kn < 1) throw DataError("dataset requires at least one metadata feature");
  if (static_cast<Eigen::Index>(cards.size()) != kc)
    throw DataError("cardinality list length does not match K_cat");

  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    const std::string where = "sample " + std::to_string(i);
    if (s.series.horizon() != L || s.series.channels() != F)
      throw DataError(where + ": series shape mismatch");
    if (s.meta.n_categorical() != kc || s.meta.n_continuous() != kn)
      throw DataError(where + ": metadata width mismatch");
    if ((kc > 0 && s.meta.categorical.rows() != L) ||
        (kn > 0 && s.meta.continuous.rows() != L))
      throw DataError(where + ": metadata horizon mismatch");
    if (s.meta.cardinalities != cards)
      throw DataError(where + ": cardinality mismatch");
    if (!s.series.values.allFinite())
      throw DataError(where + ": non-finite series value");
    if (kn > 0 && !s.meta.continuous.allFinite())
      throw DataError(where + ": non-finite continuous metadata");
    for (Eigen::Index t = 0; t < s.meta.categorical.rows(); ++t) {
      for (Eigen::Index k = 0; k < kc; ++k) {
        int label = s.meta.categorical(t, k);
        if (label < 0 || label >= cards[static_cast<std::size_t>(k)])
          throw DataError(where + ": categorical label " + std::to_string(label) +
                          " out of range for feature " + std::to_string(k));
      }
    }
  }
}

}  // namespace tsdiff
