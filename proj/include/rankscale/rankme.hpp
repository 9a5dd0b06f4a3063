#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rankscale/numerics.hpp"

namespace rankscale {

inline constexpr double kDefaultEpsilon = 1e-7;
inline constexpr std::size_t kDefaultSampleRows = 30000;

struct RankMeScore {
  double value = 0.0;
  std::size_t sample_rows = 0;
  std::size_t embed_dim = 0;
  double epsilon = kDefaultEpsilon;
};

/// Effective rank of a singular spectrum:
///   p_k = σ_k / ‖σ‖₁ + ε,   RankMe = exp(−Σ p_k ln p_k).
/// The ε offset is applied after normalization and the distribution is not
/// renormalized, so Σ p_k slightly exceeds one.
RankMeScore rankme_from_spectrum(std::span<const double> spectrum,
                                 double epsilon = kDefaultEpsilon);

/// RankMe of an embedding matrix (rows are samples). Embeddings are not
/// mean-centered.
RankMeScore rankme(const Matrix& z, double epsilon = kDefaultEpsilon);

/// `n` distinct rows drawn uniformly without replacement (partial Fisher–Yates).
/// The selected rows keep their original relative order, so n == rows returns z.
Matrix subsample_rows(const Matrix& z, std::size_t n, std::uint64_t seed);

struct StabilityEntry {
  std::size_t size = 0;
  std::vector<double> values;  // one RankMe per trial
  double mean = 0.0;
  double stddev = 0.0;  // population
  double relative_deviation = 0.0;      // |mean − full| / full
  double max_relative_deviation = 0.0;  // max over trials of |value − full| / full
};

struct StabilityReport {
  double full_value = 0.0;
  std::size_t rows = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<StabilityEntry> entries;
};

StabilityReport subsample_stability_sweep(const Matrix& z, std::span<const std::size_t> sizes,
                                          std::size_t trials, std::uint64_t seed,
                                          double epsilon = kDefaultEpsilon);

}  // namespace rankscale
