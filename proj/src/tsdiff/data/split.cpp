#include "tsdiff/data/split.hpp"

#include <algorithm>
#include <cmath>

#include "tsdiff/common/errors.hpp"
#include "tsdiff/common/rng.hpp"

namespace tsdiff {

DatasetSplits split(const PairedDataset& ds, std::array<double, 3> ratios, std::uint64_t seed) {
  for (double r : ratios)
    if (!(r > 0.0)) throw DataError("split: ratios must be positive");
  double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9) throw DataError("split: ratios must sum to 1");
  const std::size_t n = ds.size();
  if (n < 3) throw DataError("split: dataset must have at least 3 samples");

  // Largest-remainder apportionment of n across the three splits.
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    double exact = ratios[static_cast<std::size_t>(i)] * static_cast<double>(n);
    sizes[static_cast<std::size_t>(i)] = static_cast<std::size_t>(std::floor(exact));
    frac[static_cast<std::size_t>(i)] = exact - std::floor(exact);
    assigned += sizes[static_cast<std::size_t>(i)];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return frac[static_cast<std::size_t>(a)] > frac[static_cast<std::size_t>(b)]; });
  for (std::size_t leftover = n - assigned, i = 0; i < leftover; ++i)
    ++sizes[static_cast<std::size_t>(order[i % 3])];

  Rng rng(seed);
  auto perm = rng.permutation(n);

  DatasetSplits out;
  auto take = [&](PairedDataset& dst, std::size_t from, std::size_t count, SplitTag tag) {
    dst.split_tag = tag;
    dst.samples.reserve(count);
    for (std::size_t i = from; i < from + count; ++i)
      dst.samples.push_back(ds.samples[perm[i]]);
  };
  take(out.train, 0, sizes[0], SplitTag::train);
  take(out.val, sizes[0], sizes[1], SplitTag::val);
  take(out.test, sizes[0] + sizes[1], sizes[2], SplitTag::test);
  return out;
}

}  // namespace tsdiff
