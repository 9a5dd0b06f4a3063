#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rankscale/numerics.hpp"

namespace rankscale {

enum class SpectrumProfile { explicit_values, uniform, geometric, power };

/// A prescribed singular-value profile, descending, at least one value positive.
class SpectrumSpec {
 public:
  static SpectrumSpec explicit_values(std::vector<double> values);
  static SpectrumSpec uniform(std::size_t count, double value = 1.0);
  /// σ_k = ratio^k for k = 1..count, 0 < ratio ≤ 1.
  static SpectrumSpec geometric(double ratio, std::size_t count);
  /// σ_k = k^(−exponent) for k = 1..count, exponent ≥ 0.
  static SpectrumSpec power(double exponent, std::size_t count);

  /// Parses "uniform:K", "geometric:RATIO:K", "power:EXPONENT:K" or
  /// "explicit:v1,v2,...". `default_count` fills a missing K.
  static SpectrumSpec parse(std::string_view text, std::size_t default_count = 0);

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  SpectrumProfile profile() const noexcept { return profile_; }
  double parameter() const noexcept { return parameter_; }
  std::string describe() const;

 private:
  SpectrumSpec(SpectrumProfile profile, double parameter, std::vector<double> values);

  SpectrumProfile profile_;
  double parameter_;
  std::vector<double> values_;
};

/// n×n orthogonal matrix: seeded Gaussian fill, then modified Gram–Schmidt
/// with one re-orthogonalization pass.
Matrix random_orthogonal(std::size_t n, std::uint64_t seed);

/// rows×K matrix U·diag(spec)·Vᵀ with U orthonormal columns and V orthogonal.
Matrix synth_embeddings(const SpectrumSpec& spec, std::size_t rows, std::uint64_t seed);

}  // namespace rankscale
