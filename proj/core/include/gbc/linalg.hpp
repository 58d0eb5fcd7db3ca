#pragma once

// Dense kernels for the small (t <= a few dozen) symmetric and PSD matrices
// used throughout the rate and optimization code. Storage is row-major.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace gbc {

/// Absolute eigenvalue tolerance used to decide PSD / PD membership.
inline constexpr double kEpsPsd = 1e-10;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  Matrix transpose() const;
  double trace() const;
  double frobenius_norm() const;
  bool all_finite() const;

  /// Rows [r0, r0+nr) x cols [c0, c0+nc).
  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Matrix& b);

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, Matrix a);
Matrix operator*(Matrix a, double s);

/// Frobenius inner product <a, b> = tr(a^T b).
double frobenius_dot(const Matrix& a, const Matrix& b);

/// a * b * a^T
Matrix congruence(const Matrix& a, const Matrix& b);

Matrix block_diag(const Matrix& a, const Matrix& b);

/// Determinant by partially pivoted LU.
double determinant(const Matrix& a);

/// Inverse by partially pivoted LU; throws SingularityError on a zero pivot.
Matrix inverse(const Matrix& a);

/// Symmetric real matrix. Construction symmetrizes entries as (a + a^T) / 2.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& a);
  SymMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static SymMatrix identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }
  static SymMatrix zero(std::size_t n) { return SymMatrix(Matrix(n, n)); }

  std::size_t dim() const noexcept { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const noexcept { return m_; }
  operator const Matrix&() const noexcept { return m_; }

 private:
  Matrix m_;
};

/// Eigenvalues ascending, eigenvectors stored as the columns of `vectors`.
struct EigenDecomposition {
  std::vector<double> values;
  Matrix vectors;

  /// Q diag(f(mu)) Q^T
  template <class F>
  Matrix recompose(F&& f) const {
    const std::size_t n = values.size();
    Matrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
      const double w = f(values[k]);
      if (w == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) {
        const double qi = vectors(i, k) * w;
        for (std::size_t j = 0; j < n; ++j) out(i, j) += qi * vectors(j, k);
      }
    }
    return out;
  }
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
EigenDecomposition sym_eigen(const SymMatrix& a);

/// Positive semidefinite matrix. Eigenvalues in [-kEpsPsd, 0) are clipped to 0 on
/// construction; anything more negative throws InputError.
class PsdMatrix {
 public:
  PsdMatrix() = default;
  explicit PsdMatrix(const SymMatrix& a);
  explicit PsdMatrix(const Matrix& a) : PsdMatrix(SymMatrix(a)) {}
  PsdMatrix(std::initializer_list<std::initializer_list<double>> rows)
      : PsdMatrix(SymMatrix(rows)) {}

  static PsdMatrix identity(std::size_t n) { return PsdMatrix(SymMatrix::identity(n)); }
  static PsdMatrix zero(std::size_t n) { return PsdMatrix(SymMatrix::zero(n)); }

  std::size_t dim() const noexcept { return base_.dim(); }
  double operator()(std::size_t i, std::size_t j) const { return base_(i, j); }
  const SymMatrix& sym() const noexcept { return base_; }
  const Matrix& matrix() const noexcept { return base_.matrix(); }
  operator const Matrix&() const noexcept { return base_.matrix(); }

 private:
  SymMatrix base_;
};

/// Lower Cholesky factor of a symmetric positive definite matrix. Throws
/// SingularityError if a pivot falls at or below kEpsPsd.
Matrix cholesky(const Matrix& a);

/// log det of a symmetric positive definite matrix via Cholesky (natural log).
double logdet_spd(const Matrix& a);

/// logdet_spd for a validated PSD matrix; singular within kEpsPsd throws.
double logdet_psd(const PsdMatrix& a);

/// True iff min eig(b - a) >= -tol.
bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol);

PsdMatrix sqrt_psd(const PsdMatrix& a);

/// Eigenvalues clamped into [lo, hi], eigenvectors kept.
SymMatrix clip_spectrum(const SymMatrix& a, double lo, double hi);

/// Orthonormal basis (t x r) of the eigenvectors whose eigenvalue exceeds
/// `tol` together with the square roots of those eigenvalues scaled in, so that
/// factor * factor^T reproduces the PSD matrix restricted to its range.
Matrix range_factor(const PsdMatrix& a, double tol = kEpsPsd);

/// Moore-Penrose pseudo-inverse of a PSD matrix, eigenvalues <= tol treated as 0.
Matrix pinv_psd(const SymMatrix& a, double tol = kEpsPsd);

}  // namespace gbc
