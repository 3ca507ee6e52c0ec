#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "fairtree/dataset.hpp"
#include "fairtree/error.hpp"

namespace fairtree {

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for sub-stream `index` of stream `stream` under `master`. Streams
/// used by the harness: 1 = hold-out split, 2 = inner folds.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return mix64(mix64(mix64(master) ^ stream) ^ index);
}

/// Platform-stable random source. std::mt19937_64 output is fully specified
/// by the standard; the distributions below are implemented here because the
/// standard library's are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw Error("Rng::below: n must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller.
  double normal() {
    if (spare_) {
      double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

inline std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Random partition with round(n * train_fraction) training rows. Both index
/// lists are returned in ascending (file) order.
inline SplitIndices holdout_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error("holdout_split: train_fraction must lie in (0, 1)");
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
  if (n_train == 0 || n_train >= n) throw Error("holdout_split: a partition would be empty");
  auto perm = permutation(n, seed);
  SplitIndices out;
  out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

inline std::pair<Dataset, Dataset> holdout_split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  auto idx = holdout_indices(data.size(), train_fraction, seed);
  return {data.subset(idx.train), data.subset(idx.test)};
}

/// k disjoint validation parts covering all rows. The first n % k parts get
/// one extra row. Each entry's `test` is the validation part.
inline std::vector<SplitIndices> k_fold_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error("k_folds: k must be >= 2");
  if (n < k) throw Error("k_folds: fewer rows than folds");
  auto perm = permutation(n, seed);
  std::vector<SplitIndices> folds(k);
  std::size_t start = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t len = n / k + (f < n % k ? 1 : 0);
    std::vector<bool> in_val(n, false);
    for (std::size_t i = start; i < start + len; ++i) in_val[perm[i]] = true;
    for (std::size_t r = 0; r < n; ++r) (in_val[r] ? folds[f].test : folds[f].train).push_back(r);
    start += len;
  }
  return folds;
}

inline std::vector<std::pair<Dataset, Dataset>> k_folds(const Dataset& data, std::size_t k, std::uint64_t seed) {
  std::vector<std::pair<Dataset, Dataset>> out;
  for (const auto& f : k_fold_indices(data.size(), k, seed))
    out.emplace_back(data.subset(f.train), data.subset(f.test));
  return out;
}

/// Synthetic biased dataset: numeric x0..x2 and binary b0, b1.
///  - y = [x0 + 0.5 * noise > 0]
///  - s = y with probability `bias`, otherwise an independent fair coin
///  - x1 is a noisy proxy of s, b1 a weak proxy of y, x2 and b0 are noise
inline Dataset synth_biased(std::size_t n, double bias, std::uint64_t seed) {
  if (n < 4) throw Error("synth_biased: n must be >= 4");
  if (!(bias >= 0.0 && bias <= 1.0)) throw Error("synth_biased: bias must lie in [0, 1]");
  Rng rng(seed);
  std::vector<double> x0(n), x1(n), x2(n), b0(n), b1(n);
  std::vector<std::uint8_t> y(n), s(n);
  for (std::size_t i = 0; i < n; ++i) {
    x0[i] = rng.normal();
    y[i] = (x0[i] + 0.5 * rng.normal()) > 0.0 ? 1 : 0;
    const bool coupled = rng.uniform() < bias;
    const bool coin = rng.bernoulli(0.5);
    s[i] = coupled ? y[i] : static_cast<std::uint8_t>(coin);
    x1[i] = rng.normal() + 1.5 * (static_cast<double>(s[i]) - 0.5);
    x2[i] = rng.normal();
    b0[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    b1[i] = rng.bernoulli(y[i] ? 0.65 : 0.35) ? 1.0 : 0.0;
  }
  std::vector<FeatureColumn> cols;
  cols.push_back({"x0", ColumnKind::numeric, "x0", std::move(x0)});
  cols.push_back({"x1", ColumnKind::numeric, "x1", std::move(x1)});
  cols.push_back({"x2", ColumnKind::numeric, "x2", std::move(x2)});
  cols.push_back({"b0", ColumnKind::binary, "b0", std::move(b0)});
  cols.push_back({"b1", ColumnKind::binary, "b1", std::move(b1)});
  return Dataset(std::move(cols), std::move(y), std::move(s));
}

}  // namespace fairtree
