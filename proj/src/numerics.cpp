#include "rankscale/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "rankscale/error.hpp"

namespace rankscale {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::degenerate_spectrum: return "degenerate-spectrum";
    case ErrorKind::domain: return "domain";
    case ErrorKind::invalid_law: return "invalid-law";
    case ErrorKind::unreachable_target: return "unreachable-target";
    case ErrorKind::invalid_config: return "invalid-config";
    case ErrorKind::divergent_start: return "divergent-start";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::degenerate_variance: return "degenerate-variance";
    case ErrorKind::insufficient_pairs: return "insufficient-pairs";
    case ErrorKind::ambiguous_record: return "ambiguous-record";
    case ErrorKind::unsupported_config: return "unsupported-config";
    case ErrorKind::invalid_record: return "invalid-record";
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
  }
  return "unknown";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {
  if (rows == 0 || cols == 0) {
    throw Error(ErrorKind::invalid_input, "matrix dimensions must be positive");
  }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows == 0 || cols == 0) {
    throw Error(ErrorKind::invalid_input, "matrix dimensions must be positive");
  }
  if (values_.size() != rows * cols) {
    throw Error(ErrorKind::invalid_input,
                "matrix value count " + std::to_string(values_.size()) + " does not match " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  if (rows_ == 0 || cols_ == 0) {
    throw Error(ErrorKind::invalid_input, "matrix dimensions must be positive");
  }
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorKind::invalid_input, "ragged matrix literal");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  }
  return t;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::invalid_input, "matrix product dimension mismatch");
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto src = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

Matrix scaled(const Matrix& m, double factor) {
  Matrix out = m;
  for (double& v : out.values()) v *= factor;
  return out;
}

bool all_finite(const Matrix& m) {
  return std::all_of(m.values().begin(), m.values().end(),
                     [](double v) { return std::isfinite(v); });
}

namespace {

void require_valid(const Matrix& m) {
  if (m.empty()) throw Error(ErrorKind::invalid_input, "matrix has no columns");
  if (!all_finite(m)) throw Error(ErrorKind::invalid_input, "matrix contains non-finite values");
}

// Lower triangle of the smaller Gram matrix, accumulated in long double.
std::vector<long double> gram_lower(const Matrix& m, std::size_t& order) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  if (rows >= cols) {
    order = cols;
    std::vector<long double> g(cols * cols, 0.0L);
    std::vector<long double> row(cols);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto src = m.row(r);
      std::copy(src.begin(), src.end(), row.begin());
      for (std::size_t i = 0; i < cols; ++i) {
        const long double ri = row[i];
        if (ri == 0.0L) continue;
        long double* gi = g.data() + i * cols;
        for (std::size_t j = 0; j <= i; ++j) gi[j] += ri * row[j];
      }
    }
    return g;
  }
  order = rows;
  std::vector<long double> g(rows * rows, 0.0L);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto a = m.row(i);
    for (std::size_t j = 0; j <= i; ++j) {
      const auto b = m.row(j);
      long double acc = 0.0L;
      for (std::size_t c = 0; c < cols; ++c) acc += static_cast<long double>(a[c]) * b[c];
      g[i * rows + j] = acc;
    }
  }
  return g;
}

}  // namespace

double frobenius_norm(const Matrix& m) {
  if (!all_finite(m)) throw Error(ErrorKind::invalid_input, "matrix contains non-finite values");
  long double acc = 0.0L;
  for (double v : m.values()) acc += static_cast<long double>(v) * v;
  return static_cast<double>(std::sqrt(acc));
}

std::vector<long double> symmetric_eigenvalues(std::vector<long double> a, std::size_t n) {
  using T = long double;
  std::vector<T> d(n, 0.0L);
  std::vector<T> e(n, 0.0L);
  auto at = [&](std::size_t i, std::size_t j) -> T& { return a[i * n + j]; };

  // Householder reduction to tridiagonal form (eigenvalues only).
  for (std::size_t i = n; i-- > 1;) {
    const std::size_t l = i - 1;
    T h = 0.0L;
    if (l > 0) {
      T scale = 0.0L;
      for (std::size_t k = 0; k <= l; ++k) scale += std::fabs(at(i, k));
      if (scale == 0.0L) {
        e[i] = at(i, l);
      } else {
        for (std::size_t k = 0; k <= l; ++k) {
          at(i, k) /= scale;
          h += at(i, k) * at(i, k);
        }
        T f = at(i, l);
        T g = f >= 0.0L ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        at(i, l) = f - g;
        f = 0.0L;
        for (std::size_t j = 0; j <= l; ++j) {
          g = 0.0L;
          for (std::size_t k = 0; k <= j; ++k) g += at(j, k) * at(i, k);
          for (std::size_t k = j + 1; k <= l; ++k) g += at(k, j) * at(i, k);
          e[j] = g / h;
          f += e[j] * at(i, j);
        }
        const T hh = f / (h + h);
        for (std::size_t j = 0; j <= l; ++j) {
          f = at(i, j);
          e[j] = g = e[j] - hh * f;
          for (std::size_t k = 0; k <= j; ++k) at(j, k) -= (f * e[k] + g * at(i, k));
        }
      }
    } else {
      e[i] = at(i, l);
    }
    d[i] = h;
  }
  for (std::size_t i = 0; i < n; ++i) d[i] = at(i, i);

  // Implicit QL on the tridiagonal (d, e).
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  if (n > 0) e[n - 1] = 0.0L;
  const T eps = std::numeric_limits<T>::epsilon();
  const auto count = static_cast<std::ptrdiff_t>(n);
  for (std::ptrdiff_t l = 0; l < count; ++l) {
    int iterations = 0;
    std::ptrdiff_t m = l;
    do {
      for (m = l; m < count - 1; ++m) {
        const T dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
        if (std::fabs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (++iterations > 60) {
          throw Error(ErrorKind::degenerate_spectrum, "tridiagonal QL failed to converge");
        }
        T g = (d[l + 1] - d[l]) / (2.0L * e[l]);
        T r = std::hypot(g, 1.0L);
        g = d[m] - d[l] + e[l] / (g + (g >= 0.0L ? std::fabs(r) : -std::fabs(r)));
        T s = 1.0L;
        T c = 1.0L;
        T p = 0.0L;
        std::ptrdiff_t i = m - 1;
        bool underflow = false;
        for (; i >= l; --i) {
          const T f = s * e[i];
          const T b = c * e[i];
          e[i + 1] = (r = std::hypot(f, g));
          if (r == 0.0L) {
            d[i + 1] -= p;
            e[m] = 0.0L;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0L * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0L;
      }
    } while (m != l);
  }
  std::sort(d.begin(), d.end());
  return d;
}

Spectrum singular_values(const Matrix& m) {
  require_valid(m);
  std::size_t order = 0;
  auto gram = gram_lower(m, order);
  const auto eig = symmetric_eigenvalues(std::move(gram), order);
  Spectrum out(order);
  for (std::size_t i = 0; i < order; ++i) {
    const long double v = eig[order - 1 - i];
    out[i] = static_cast<double>(std::sqrt(std::max(v, 0.0L)));
  }
  return out;
}

Spectrum gram_eigenvalues_oracle(const Matrix& m) {
  require_valid(m);
  const std::size_t n = m.cols();
  if (n > 64) {
    throw Error(ErrorKind::invalid_input, "Jacobi oracle is limited to 64 columns");
  }
  std::vector<double> g(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < m.rows(); ++r) acc += m(r, i) * m(r, j);
      g[i * n + j] = acc;
    }
  }
  auto at = [&](std::size_t i, std::size_t j) -> double& { return g[i * n + j]; };

  double total = 0.0;
  for (double v : g) total += v * v;
  const double threshold = 1e-14 * std::sqrt(total);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) off += at(i, j) * at(i, j);
      }
    }
    if (std::sqrt(off) < threshold || off == 0.0) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // G ← JᵀGJ with the rotation in the (p, q) plane.
        for (std::size_t k = 0; k < n; ++k) {
          const double gkp = at(k, p);
          const double gkq = at(k, q);
          at(k, p) = c * gkp - s * gkq;
          at(k, q) = s * gkp + c * gkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double gpk = at(p, k);
          const double gqk = at(q, k);
          at(p, k) = c * gpk - s * gqk;
          at(q, k) = s * gpk + c * gqk;
        }
      }
    }
  }

  Spectrum out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::sqrt(std::max(at(i, i), 0.0));
  std::sort(out.begin(), out.end(), std::greater<>());
  if (m.rows() < n) out.resize(m.rows());
  return out;
}

}  // namespace rankscale
