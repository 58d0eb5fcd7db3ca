#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gbc/error.hpp"
#include "gbc/linalg.hpp"
#include "gbc/parallel.hpp"
#include "gbc/rng.hpp"
#include "oracles.hpp"

using namespace gbc;

namespace {

Matrix random_symmetric(Rng& rng, std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = rng.normal();
  return m;
}

oracle::Mat to_ref(const Matrix& m) {
  oracle::Mat r(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
  return r;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) d = std::max(d, std::abs(a(i, j) - b(i, j)));
  return d;
}

}  // namespace

TEST_SUITE("linalg") {
  TEST_CASE("matrix arithmetic and blocks") {
    const Matrix a{{1, 2}, {3, 4}};
    const Matrix b{{0, 1}, {1, 0}};
    CHECK((a * b) == Matrix{{2, 1}, {4, 3}});
    CHECK((a + b) == Matrix{{1, 3}, {4, 4}});
    CHECK((a - b) == Matrix{{1, 1}, {2, 4}});
    CHECK((2.0 * a) == Matrix{{2, 4}, {6, 8}});
    CHECK(a.transpose() == Matrix{{1, 3}, {2, 4}});
    CHECK(a.trace() == 5.0);
    CHECK(frobenius_dot(a, b) == 5.0);
    CHECK(a.frobenius_norm() == doctest::Approx(std::sqrt(30.0)));
    const Matrix d = block_diag(a, Matrix{{5}});
    CHECK(d.rows() == 3);
    CHECK(d(2, 2) == 5.0);
    CHECK(d(0, 2) == 0.0);
    CHECK(d.block(0, 0, 2, 2) == a);
    CHECK(congruence(b, a) == Matrix{{4, 3}, {2, 1}});
    CHECK_THROWS_AS(Matrix({{1, 2}, {3}}), InputError);
    CHECK_THROWS_AS(a + Matrix(3, 3), InputError);
  }

  TEST_CASE("determinant and inverse agree with elimination oracle") {
    Rng rng(11);
    for (std::size_t n = 1; n <= 6; ++n) {
      Matrix m(n, n);
      for (double& v : m.data()) v = rng.normal();
      CHECK(determinant(m) == doctest::Approx(oracle::det(to_ref(m))).epsilon(1e-10));
      CHECK(max_abs_diff(m * inverse(m), Matrix::identity(n)) < 1e-9);
    }
    CHECK_THROWS_AS(inverse(Matrix{{1, 2}, {2, 4}}), SingularityError);
  }

  TEST_CASE("SymMatrix symmetrizes and validates") {
    const SymMatrix s(Matrix{{1, 2}, {4, 3}});
    CHECK(s(0, 1) == 3.0);
    CHECK(s(1, 0) == s(0, 1));
    CHECK_THROWS_AS(SymMatrix(Matrix{{1, NAN}, {0, 1}}), InputError);
    CHECK_THROWS_AS(SymMatrix(Matrix(0, 0)), InputError);
    CHECK_THROWS_AS(SymMatrix(Matrix(2, 3)), InputError);
  }

  TEST_CASE("sym_eigen fixed examples") {
    const EigenDecomposition d = sym_eigen(SymMatrix{{3, 0}, {0, 1}});
    CHECK(d.values[0] == doctest::Approx(1.0));
    CHECK(d.values[1] == doctest::Approx(3.0));
    CHECK(std::abs(d.vectors(1, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(d.vectors(0, 1)) == doctest::Approx(1.0));

    for (double v : sym_eigen(SymMatrix::identity(4)).values) CHECK(v == doctest::Approx(1.0));

    // characteristic polynomial (2 - x)^2 - 1 has roots 1 and 3
    const EigenDecomposition e = sym_eigen(SymMatrix{{2, 1}, {1, 2}});
    CHECK(e.values[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.values[1] == doctest::Approx(3.0).epsilon(1e-14));
  }

  TEST_CASE("sym_eigen reconstruction and orthonormality on random matrices") {
    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n = 1 + trial % 8;
      const Matrix a = random_symmetric(rng, n);
      const EigenDecomposition e = sym_eigen(SymMatrix(a));
      const Matrix recon = e.recompose([](double mu) { return mu; });
      CHECK((recon - a).frobenius_norm() <= 1e-10 * (1.0 + a.frobenius_norm()));
      const Matrix qtq = e.vectors.transpose() * e.vectors;
      CHECK(max_abs_diff(qtq, Matrix::identity(n)) <= 1e-10);
      for (std::size_t k = 1; k < n; ++k) CHECK(e.values[k - 1] <= e.values[k]);
      if (n == 2) {
        const auto [lo, hi] = oracle::eig2(a(0, 0), a(0, 1), a(1, 1));
        CHECK(e.values[0] == doctest::Approx(lo).epsilon(1e-12));
        CHECK(e.values[1] == doctest::Approx(hi).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("PsdMatrix tolerance") {
    CHECK_NOTHROW(PsdMatrix{{1, 0}, {0, -1e-12}});
    const PsdMatrix clipped{{1, 0}, {0, -1e-12}};
    CHECK(sym_eigen(clipped.sym()).values[0] >= 0.0);
    CHECK_THROWS_AS((PsdMatrix{{1, 0}, {0, -1e-6}}), InputError);
    CHECK_THROWS_WITH_AS((PsdMatrix{{1, 0}, {0, -0.1}}), doctest::Contains("not PSD"), InputError);
  }

  TEST_CASE("logdet examples") {
    CHECK(logdet_psd(PsdMatrix::identity(3)) == doctest::Approx(0.0));
    CHECK(logdet_psd(PsdMatrix{{std::numbers::e, 0}, {0, std::exp(2.0)}}) == doctest::Approx(3.0));
    CHECK(logdet_psd(PsdMatrix{{2, 1}, {1, 2}}) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
    CHECK_THROWS_AS(logdet_psd(PsdMatrix{{1, 1}, {1, 1}}), SingularityError);
  }

  TEST_CASE("logdet of L L^T equals twice the log-diagonal of L") {
    Rng rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t n = 1 + trial % 6;
      Matrix l(n, n);
      double expected = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) l(i, j) = rng.normal();
        l(i, i) = 0.2 + rng.uniform() * 2.0;
        expected += 2.0 * std::log(l(i, i));
      }
      const double got = logdet_psd(PsdMatrix(l * l.transpose()));
      CHECK(std::abs(got - expected) <= 1e-9 * std::max(1.0, std::abs(expected)));
    }
  }

  TEST_CASE("cholesky reproduces its input") {
    Rng rng(3);
    const Matrix a = random_psd(rng, 5, 1.0) + Matrix::identity(5);
    const Matrix l = cholesky(a);
    CHECK(max_abs_diff(l * l.transpose(), a) < 1e-12);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = i + 1; j < 5; ++j) CHECK(l(i, j) == 0.0);
  }

  TEST_CASE("loewner_leq") {
    CHECK(loewner_leq(SymMatrix::identity(2), SymMatrix(2.0 * Matrix::identity(2)), 1e-9));
    CHECK_FALSE(loewner_leq(SymMatrix(2.0 * Matrix::identity(2)), SymMatrix::identity(2), 1e-9));
    // I - [[1, .9], [.9, 1]] has eigenvalues +-0.9
    CHECK_FALSE(loewner_leq(SymMatrix{{1, 0.9}, {0.9, 1}}, SymMatrix::identity(2), 1e-9));
    CHECK_THROWS_AS(loewner_leq(SymMatrix::identity(2), SymMatrix::identity(3), 1e-9), InputError);
  }

  TEST_CASE("sqrt_psd") {
    CHECK(max_abs_diff(sqrt_psd(PsdMatrix::identity(3)).matrix(), Matrix::identity(3)) < 1e-14);
    CHECK(max_abs_diff(sqrt_psd(PsdMatrix{{4, 0}, {0, 9}}).matrix(), Matrix{{2, 0}, {0, 3}}) < 1e-14);
    const PsdMatrix a{{2, 1}, {1, 2}};
    const Matrix r = sqrt_psd(a).matrix();
    CHECK((r * r - a.matrix()).frobenius_norm() <= 1e-9 * a.matrix().frobenius_norm());
  }

  TEST_CASE("clip_spectrum") {
    const SymMatrix d{{-0.2, 0, 0}, {0, 0.5, 0}, {0, 0, 1.3}};
    CHECK(max_abs_diff(clip_spectrum(d, 0.0, 1.0).matrix(), Matrix{{0, 0, 0}, {0, 0.5, 0}, {0, 0, 1}}) < 1e-14);
    const SymMatrix in{{0.6, 0.1}, {0.1, 0.4}};
    CHECK(clip_spectrum(in, 0.0, 1.0).matrix() == in.matrix());
    // eigenvalues 2 and 1 both clip to 1, so the result is the identity
    CHECK(max_abs_diff(clip_spectrum(SymMatrix{{1.5, 0.5}, {0.5, 1.5}}, 0.0, 1.0).matrix(), Matrix::identity(2)) < 1e-12);
    CHECK_THROWS_AS(clip_spectrum(in, 1.0, 0.0), InputError);

    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
      const SymMatrix a(random_symmetric(rng, 4));
      const SymMatrix once = clip_spectrum(a, 0.0, 1.0);
      const SymMatrix twice = clip_spectrum(once, 0.0, 1.0);
      CHECK(max_abs_diff(once.matrix(), twice.matrix()) < 1e-12);
      const EigenDecomposition e = sym_eigen(once);
      CHECK(e.values.front() >= -1e-12);
      CHECK(e.values.back() <= 1.0 + 1e-12);
      const SymMatrix b(random_symmetric(rng, 4));
      const SymMatrix lo = clip_spectrum(a, 0.0, 1.0);
      const SymMatrix hi(clip_spectrum(b, 0.0, 1.0).matrix());
      if (loewner_leq(lo, hi, 0.0)) CHECK(loewner_leq(clip_spectrum(lo, 0, 1), clip_spectrum(hi, 0, 1), 1e-12));
    }
  }

  TEST_CASE("range_factor and pinv_psd on singular input") {
    const PsdMatrix k{{1, 1}, {1, 1}};
    const Matrix f = range_factor(k);
    CHECK(f.rows() == 2);
    CHECK(f.cols() == 1);
    CHECK(max_abs_diff(f * f.transpose(), k.matrix()) < 1e-12);
    CHECK(range_factor(PsdMatrix::zero(3)).cols() == 0);
    const Matrix p = pinv_psd(k.sym());
    CHECK(max_abs_diff(k.matrix() * p * k.matrix(), k.matrix()) < 1e-12);
  }
}

TEST_SUITE("rng") {
  TEST_CASE("streams are reproducible and distinct") {
    Rng a(Rng::derive(42, 3));
    Rng b(Rng::derive(42, 3));
    Rng c(Rng::derive(42, 4));
    for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
    CHECK(Rng(Rng::derive(42, 3)).next() != c.next());
  }

  TEST_CASE("uniform and normal moments") {
    Rng rng(1);
    double s = 0.0, s2 = 0.0, n1 = 0.0, n2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform();
      CHECK_UNARY(u >= 0.0 && u < 1.0);
      s += u;
      s2 += u * u;
      const double z = rng.normal();
      n1 += z;
      n2 += z * z;
    }
    CHECK(s / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(s2 / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));
    CHECK(std::abs(n1 / n) < 0.01);
    CHECK(n2 / n == doctest::Approx(1.0).epsilon(0.01));
  }

  TEST_CASE("random matrix helpers") {
    Rng rng(2);
    const Matrix q = random_orthogonal(rng, 5);
    CHECK(max_abs_diff(q.transpose() * q, Matrix::identity(5)) < 1e-12);
    const EigenDecomposition e = sym_eigen(SymMatrix(random_spectrum(rng, 4, 0.25, 0.75)));
    CHECK(e.values.front() >= 0.25 - 1e-12);
    CHECK(e.values.back() <= 0.75 + 1e-12);
    CHECK_NOTHROW(PsdMatrix(random_psd(rng, 4, 2.0)));
    CHECK(std::abs(determinant(random_gain(rng, 3))) > 0.05);
  }
}

TEST_SUITE("parallel") {
  TEST_CASE("parallel_for visits every index once, for any worker count") {
    for (std::size_t w : {1u, 2u, 4u}) {
      set_worker_override(w);
      CHECK(worker_count() == w);
      std::vector<int> hits(1000, 0);
      parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
      for (int h : hits) CHECK(h == 1);
    }
    set_worker_override(0);
  }

  TEST_CASE("parallel_for rethrows and nests inline") {
    set_worker_override(3);
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                      if (i == 7) throw ParameterError("boom");
                    }),
                    ParameterError);
    std::vector<int> out(16, 0);
    parallel_for(4, [&](std::size_t i) { parallel_for(4, [&](std::size_t j) { out[4 * i + j] = 1; }); });
    for (int v : out) CHECK(v == 1);
    set_worker_override(0);
  }
}
