#pragma once

// Seeded randomness with platform-independent output. std::mt19937_64 is fully
// specified by the standard; the distribution layer is written out here because
// the std:: distributions are implementation-defined.

#include <cstdint>
#include <random>

#include "gbc/linalg.hpp"

namespace gbc {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Independent stream seed for (seed, stream); used so that restart k or trace
  /// point k draws the same numbers regardless of scheduling.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next() { return eng_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Haar-ish orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
Matrix random_orthogonal(Rng& rng, std::size_t n);

/// Q diag(u) Q^T with u_i uniform in [lo, hi].
Matrix random_spectrum(Rng& rng, std::size_t n, double lo, double hi);

/// B B^T / n for a standard Gaussian n x n matrix B, times `scale`.
Matrix random_psd(Rng& rng, std::size_t n, double scale = 1.0);

/// Gaussian matrix shifted so that it stays comfortably invertible.
Matrix random_gain(Rng& rng, std::size_t n);

}  // namespace gbc
