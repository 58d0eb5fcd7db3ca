#include "gbc/rng.hpp"

#include <cmath>
#include <vector>

namespace gbc {

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(th);
  has_spare_ = true;
  return r * std::cos(th);
}

Matrix random_orthogonal(Rng& rng, std::size_t n) {
  Matrix q(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> v(n);
    double norm = 0.0;
    do {
      for (double& x : v) x = rng.normal();
      for (std::size_t k = 0; k < j; ++k) {
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) d += v[i] * q(i, k);
        for (std::size_t i = 0; i < n; ++i) v[i] -= d * q(i, k);
      }
      norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
    } while (norm < 1e-8);
    for (std::size_t i = 0; i < n; ++i) q(i, j) = v[i] / norm;
  }
  return q;
}

Matrix random_spectrum(Rng& rng, std::size_t n, double lo, double hi) {
  const Matrix q = random_orthogonal(rng, n);
  std::vector<double> d(n);
  for (double& x : d) x = rng.uniform(lo, hi);
  return q * Matrix::diagonal(d) * q.transpose();
}

Matrix random_psd(Rng& rng, std::size_t n, double scale) {
  Matrix b(n, n);
  for (double& x : b.data()) x = rng.normal();
  Matrix k = b * b.transpose();
  k *= scale / static_cast<double>(n);
  return k;
}

Matrix random_gain(Rng& rng, std::size_t n) {
  for (;;) {
    Matrix g(n, n);
    for (double& x : g.data()) x = rng.normal() / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) g(i, i) += rng.uniform() < 0.5 ? -1.0 : 1.0;
    if (std::abs(determinant(g)) > 0.05) return g;
  }
}

}  // namespace gbc
