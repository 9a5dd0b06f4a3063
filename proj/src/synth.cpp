#include "rankscale/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "rankscale/error.hpp"
#include "rankscale/random.hpp"

namespace rankscale {

namespace {

double parse_number(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw Error(ErrorKind::invalid_input,
                "cannot parse " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

std::size_t parse_count(std::string_view text) {
  const double v = parse_number(text, "count");
  if (v < 1.0 || v != std::floor(v)) {
    throw Error(ErrorKind::invalid_input, "count must be a positive integer: " + std::string(text));
  }
  return static_cast<std::size_t>(v);
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

// Orthonormalizes the columns of a column-major rows×cols block in place.
void orthonormalize_columns(std::vector<double>& a, std::size_t rows, std::size_t cols) {
  for (std::size_t j = 0; j < cols; ++j) {
    double* vj = a.data() + j * rows;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        const double* vi = a.data() + i * rows;
        double dot = 0.0;
        for (std::size_t r = 0; r < rows; ++r) dot += vi[r] * vj[r];
        for (std::size_t r = 0; r < rows; ++r) vj[r] -= dot * vi[r];
      }
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < rows; ++r) norm += vj[r] * vj[r];
    norm = std::sqrt(norm);
    if (norm == 0.0) throw Error(ErrorKind::invalid_input, "rank-deficient Gaussian draw");
    for (std::size_t r = 0; r < rows; ++r) vj[r] /= norm;
  }
}

std::vector<double> gaussian_block(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> a(rows * cols);
  for (double& v : a) v = rng.normal();
  return a;
}

}  // namespace

SpectrumSpec::SpectrumSpec(SpectrumProfile profile, double parameter, std::vector<double> values)
    : profile_(profile), parameter_(parameter), values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorKind::invalid_input, "spectrum spec is empty");
  bool any_positive = false;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double v = values_[i];
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorKind::invalid_input, "spectrum values must be finite and non-negative");
    }
    if (i > 0 && v > values_[i - 1]) {
      throw Error(ErrorKind::invalid_input, "spectrum values must be descending");
    }
    any_positive = any_positive || v > 0.0;
  }
  if (!any_positive) throw Error(ErrorKind::invalid_input, "spectrum has no positive value");
}

SpectrumSpec SpectrumSpec::explicit_values(std::vector<double> values) {
  return SpectrumSpec(SpectrumProfile::explicit_values, 0.0, std::move(values));
}

SpectrumSpec SpectrumSpec::uniform(std::size_t count, double value) {
  return SpectrumSpec(SpectrumProfile::uniform, value, std::vector<double>(count, value));
}

SpectrumSpec SpectrumSpec::geometric(double ratio, std::size_t count) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw Error(ErrorKind::invalid_input, "geometric ratio must lie in (0, 1]");
  }
  std::vector<double> values(count);
  for (std::size_t k = 0; k < count; ++k) values[k] = std::pow(ratio, static_cast<double>(k + 1));
  return SpectrumSpec(SpectrumProfile::geometric, ratio, std::move(values));
}

SpectrumSpec SpectrumSpec::power(double exponent, std::size_t count) {
  if (!(exponent >= 0.0)) throw Error(ErrorKind::invalid_input, "power exponent must be >= 0");
  std::vector<double> values(count);
  for (std::size_t k = 0; k < count; ++k) {
    values[k] = std::pow(static_cast<double>(k + 1), -exponent);
  }
  return SpectrumSpec(SpectrumProfile::power, exponent, std::move(values));
}

SpectrumSpec SpectrumSpec::parse(std::string_view text, std::size_t default_count) {
  const auto parts = split(text, ':');
  const std::string_view kind = parts[0];
  auto count_at = [&](std::size_t i) {
    if (parts.size() > i) return parse_count(parts[i]);
    if (default_count == 0) {
      throw Error(ErrorKind::invalid_input, "spectrum '" + std::string(text) + "' needs a count");
    }
    return default_count;
  };
  if (kind == "uniform" && parts.size() <= 2) return uniform(count_at(1));
  if (kind == "geometric" && parts.size() >= 2 && parts.size() <= 3) {
    return geometric(parse_number(parts[1], "ratio"), count_at(2));
  }
  if (kind == "power" && parts.size() >= 2 && parts.size() <= 3) {
    return power(parse_number(parts[1], "exponent"), count_at(2));
  }
  if (kind == "explicit" && parts.size() == 2) {
    std::vector<double> values;
    for (auto item : split(parts[1], ',')) values.push_back(parse_number(item, "value"));
    return explicit_values(std::move(values));
  }
  throw Error(ErrorKind::invalid_input, "unknown spectrum profile '" + std::string(text) + "'");
}

std::string SpectrumSpec::describe() const {
  std::ostringstream out;
  const auto num = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  switch (profile_) {
    case SpectrumProfile::uniform: out << "uniform:" << values_.size(); break;
    case SpectrumProfile::geometric: out << "geometric:" << num(parameter_) << ':' << values_.size(); break;
    case SpectrumProfile::power: out << "power:" << num(parameter_) << ':' << values_.size(); break;
    case SpectrumProfile::explicit_values:
      out << "explicit:";
      for (std::size_t i = 0; i < values_.size(); ++i) out << (i ? "," : "") << num(values_[i]);
      break;
  }
  return out.str();
}

Matrix random_orthogonal(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::invalid_input, "orthogonal matrix order must be >= 1");
  auto a = gaussian_block(n, n, seed);
  orthonormalize_columns(a, n, n);
  Matrix q(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) q(r, c) = a[c * n + r];
  }
  return q;
}

Matrix synth_embeddings(const SpectrumSpec& spec, std::size_t rows, std::uint64_t seed) {
  const std::size_t k = spec.size();
  if (rows < k) {
    throw Error(ErrorKind::invalid_input, "synthetic embeddings need rows >= spectrum length (" +
                                              std::to_string(rows) + " < " + std::to_string(k) +
                                              ")");
  }
  auto u = gaussian_block(rows, k, derive_seed(seed, 0));
  orthonormalize_columns(u, rows, k);
  const Matrix v = random_orthogonal(k, derive_seed(seed, 1));

  // w = diag(σ)·Vᵀ, so row i of z is Σ_k U(i,k)·w.row(k).
  Matrix w(k, k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) w(a, b) = spec.values()[a] * v(b, a);
  }
  Matrix z(rows, k);
  for (std::size_t i = 0; i < rows; ++i) {
    auto dst = z.row(i);
    for (std::size_t a = 0; a < k; ++a) {
      const double uia = u[a * rows + i];
      const auto src = w.row(a);
      for (std::size_t b = 0; b < k; ++b) dst[b] += uia * src[b];
    }
  }
  return z;
}

}  // namespace rankscale
