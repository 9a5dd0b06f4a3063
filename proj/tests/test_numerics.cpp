#include <doctest.h>

#include <cmath>

#include "rankscale/error.hpp"
#include "rankscale/numerics.hpp"
#include "rankscale/synth.hpp"
#include "support.hpp"

using namespace rankscale;
using rankscale::testing::gaussian_matrix;
using rankscale::testing::spectrum_mismatch;

TEST_CASE("matrix construction rejects empty shapes") {
  CHECK_THROWS_AS(Matrix(0, 3), Error);
  CHECK_THROWS_AS(Matrix(2, 0), Error);
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), Error);
  const Matrix m{{1, 2}, {3, 4}, {5, 6}};
  CHECK(m.rows() == 3);
  CHECK(m(2, 1) == 6);
  CHECK(transpose(m)(1, 2) == 6);
}

TEST_CASE("singular values of small hand matrices") {
  const auto a = singular_values(Matrix{{1, 0}, {0, 1}, {0, 0}});
  REQUIRE(a.size() == 2);
  CHECK(a[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(a[1] == doctest::Approx(1.0).epsilon(1e-14));

  const auto b = singular_values(Matrix{{3, 0}, {0, 0}});
  REQUIRE(b.size() == 2);
  CHECK(b[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(b[1] == 0.0);
}

TEST_CASE("jacobi oracle on diagonal matrices") {
  const auto id = gram_eigenvalues_oracle(Matrix{{1, 0}, {0, 1}});
  CHECK(id[0] == doctest::Approx(1.0));
  CHECK(id[1] == doctest::Approx(1.0));
  const auto d = gram_eigenvalues_oracle(Matrix{{2, 0}, {0, 1}});
  CHECK(d[0] == doctest::Approx(2.0));
  CHECK(d[1] == doctest::Approx(1.0));
}

TEST_CASE("seeded 4x3 and 8x4 matrices agree with the jacobi oracle") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Matrix a = gaussian_matrix(4, 3, seed);
    CHECK(spectrum_mismatch(singular_values(a), gram_eigenvalues_oracle(a)) < 1e-9);
    const Matrix b = gaussian_matrix(8, 4, seed + 100);
    CHECK(spectrum_mismatch(singular_values(b), gram_eigenvalues_oracle(b)) < 1e-9);
  }
}

TEST_CASE("wide matrices use the smaller gram side") {
  const Matrix m = gaussian_matrix(3, 7, 5);
  const auto s = singular_values(m);
  const auto t = singular_values(transpose(m));
  REQUIRE(s.size() == 3);
  CHECK(spectrum_mismatch(s, t) < 1e-12);
  CHECK(spectrum_mismatch(s, gram_eigenvalues_oracle(m)) < 1e-9);
}

TEST_CASE("frobenius norm") {
  CHECK(frobenius_norm(Matrix{{3, 4}}) == 5.0);
  CHECK(frobenius_norm(Matrix(3, 3)) == 0.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix m = gaussian_matrix(5, 3, seed);
    double ss = 0.0;
    for (double s : singular_values(m)) ss += s * s;
    CHECK(std::sqrt(ss) == doctest::Approx(frobenius_norm(m)).epsilon(1e-10));
  }
}

TEST_CASE("spectrum is descending and non-negative") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix m = gaussian_matrix(20, 9, seed);
    const auto s = singular_values(m);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) CHECK(s[i] >= s[i + 1]);
    CHECK(s.back() >= 0.0);
  }
}

TEST_CASE("orthogonal invariance and scale equivariance") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix m = gaussian_matrix(12, 6, seed);
    const Matrix q = random_orthogonal(12, seed + 77);
    const auto base = singular_values(m);
    CHECK(spectrum_mismatch(singular_values(multiply(q, m)), base) < 1e-8);
    const double c = 3.75;
    auto expected = base;
    for (double& v : expected) v *= c;
    CHECK(spectrum_mismatch(singular_values(scaled(m, c)), expected) < 1e-10);
  }
}

TEST_CASE("rank-deficient matrices") {
  Matrix m(10, 4);
  for (std::size_t r = 0; r < 10; ++r) {
    m(r, 0) = static_cast<double>(r + 1);
    m(r, 1) = 2.0 * static_cast<double>(r + 1);
  }
  const auto s = singular_values(m);
  CHECK(s[0] > 1.0);
  // Gram-based zeros sit near sqrt(eps)·σ_max.
  for (std::size_t i = 1; i < 4; ++i) CHECK(s[i] <= 1e-9 * s[0]);
  for (double v : s) CHECK(v >= 0.0);
}

TEST_CASE("non-finite input is rejected") {
  Matrix m(2, 2, 1.0);
  m(0, 1) = NAN;
  CHECK_THROWS_AS(singular_values(m), Error);
}

TEST_CASE("tridiagonal solver matches jacobi on random symmetric matrices") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix m = gaussian_matrix(30, 30, seed);
    const auto s = singular_values(m);
    const auto o = gram_eigenvalues_oracle(m);
    CHECK(spectrum_mismatch(s, o) < 1e-9);
  }
}
