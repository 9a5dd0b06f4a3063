#include "rankscale/rankme.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rankscale/error.hpp"
#include "rankscale/random.hpp"

namespace rankscale {

RankMeScore rankme_from_spectrum(std::span<const double> spectrum, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorKind::invalid_input, "epsilon must be a positive finite number");
  }
  if (spectrum.empty()) throw Error(ErrorKind::invalid_input, "empty spectrum");
  long double l1 = 0.0L;
  for (double s : spectrum) {
    if (!std::isfinite(s)) throw Error(ErrorKind::invalid_input, "non-finite singular value");
    if (s < 0.0) throw Error(ErrorKind::invalid_input, "negative singular value");
    l1 += s;
  }
  if (l1 == 0.0L) throw Error(ErrorKind::degenerate_spectrum, "all singular values are zero");

  long double entropy = 0.0L;
  for (double s : spectrum) {
    const long double p = static_cast<long double>(s) / l1 + epsilon;
    entropy -= p * std::log(p);
  }
  RankMeScore score;
  score.value = static_cast<double>(std::exp(entropy));
  score.embed_dim = spectrum.size();
  score.sample_rows = spectrum.size();
  score.epsilon = epsilon;
  return score;
}

RankMeScore rankme(const Matrix& z, double epsilon) {
  const Spectrum s = singular_values(z);
  RankMeScore score = rankme_from_spectrum(s, epsilon);
  score.sample_rows = z.rows();
  score.embed_dim = z.cols();
  return score;
}

Matrix subsample_rows(const Matrix& z, std::size_t n, std::uint64_t seed) {
  if (n < 1 || n > z.rows()) {
    throw Error(ErrorKind::invalid_input, "subsample size " + std::to_string(n) +
                                              " outside [1, " + std::to_string(z.rows()) + "]");
  }
  std::vector<std::size_t> index(z.rows());
  std::iota(index.begin(), index.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.below(z.rows() - i);
    std::swap(index[i], index[j]);
  }
  index.resize(n);
  std::sort(index.begin(), index.end());

  Matrix out(n, z.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = z.row(index[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

StabilityReport subsample_stability_sweep(const Matrix& z, std::span<const std::size_t> sizes,
                                          std::size_t trials, std::uint64_t seed,
                                          double epsilon) {
  if (trials < 1) throw Error(ErrorKind::invalid_input, "stability sweep needs at least one trial");
  for (std::size_t size : sizes) {
    if (size < 1 || size > z.rows()) {
      throw Error(ErrorKind::invalid_input,
                  "sweep size " + std::to_string(size) + " exceeds " + std::to_string(z.rows()) +
                      " rows");
    }
  }

  StabilityReport report;
  report.full_value = rankme(z, epsilon).value;
  report.rows = z.rows();
  report.trials = trials;
  report.seed = seed;

  for (std::size_t s = 0; s < sizes.size(); ++s) {
    StabilityEntry entry;
    entry.size = sizes[s];
    for (std::size_t t = 0; t < trials; ++t) {
      const std::uint64_t trial_seed = derive_seed(seed, s * trials + t);
      entry.values.push_back(rankme(subsample_rows(z, sizes[s], trial_seed), epsilon).value);
    }
    const double count = static_cast<double>(trials);
    entry.mean = std::accumulate(entry.values.begin(), entry.values.end(), 0.0) / count;
    double var = 0.0;
    for (double v : entry.values) var += (v - entry.mean) * (v - entry.mean);
    entry.stddev = std::sqrt(var / count);
    entry.relative_deviation = std::fabs(entry.mean - report.full_value) / report.full_value;
    for (double v : entry.values) {
      entry.max_relative_deviation = std::max(
          entry.max_relative_deviation, std::fabs(v - report.full_value) / report.full_value);
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace rankscale
