#include "gbc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>

#include "gbc/error.hpp"

namespace gbc {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InputError(std::string(what) + ": dimension mismatch (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
  }
}

void require_square(const Matrix& a, const char* what) {
  if (!a.square()) throw InputError(std::string(what) + ": matrix is not square");
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw InputError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t nr = rows.size();
  const std::size_t nc = nr == 0 ? 0 : rows.front().size();
  Matrix m(nr, nc);
  for (std::size_t i = 0; i < nr; ++i) {
    if (rows[i].size() != nc) throw InputError("Matrix: ragged rows");
    for (std::size_t j = 0; j < nc; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::trace() const {
  double s = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
  return s;
}

double Matrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) throw InputError("Matrix::block: out of range");
  Matrix b(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
  if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_) throw InputError("Matrix::set_block: out of range");
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require_same_shape(*this, o, "Matrix::operator+=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require_same_shape(*this, o, "Matrix::operator-=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }
Matrix operator*(Matrix a, double s) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InputError("Matrix product: inner dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

double frobenius_dot(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "frobenius_dot");
  const auto x = a.data();
  const auto y = b.data();
  return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

Matrix congruence(const Matrix& a, const Matrix& b) { return a * b * a.transpose(); }

Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix m(a.rows() + b.rows(), a.cols() + b.cols());
  m.set_block(0, 0, a);
  m.set_block(a.rows(), a.cols(), b);
  return m;
}

namespace {

struct Lu {
  Matrix lu;
  std::vector<std::size_t> perm;
  int sign = 1;
  bool singular = false;
};

Lu lu_decompose(const Matrix& a) {
  require_square(a, "LU");
  Lu f{a, std::vector<std::size_t>(a.rows()), 1, false};
  std::iota(f.perm.begin(), f.perm.end(), std::size_t{0});
  const std::size_t n = a.rows();
  Matrix& m = f.lu;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
    if (m(piv, k) == 0.0) {
      f.singular = true;
      continue;
    }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
      std::swap(f.perm[k], f.perm[piv]);
      f.sign = -f.sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = m(i, k) / m(k, k);
      m(i, k) = l;
      for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= l * m(k, j);
    }
  }
  return f;
}

}  // namespace

double determinant(const Matrix& a) {
  const Lu f = lu_decompose(a);
  if (f.singular) return 0.0;
  double d = f.sign;
  for (std::size_t i = 0; i < a.rows(); ++i) d *= f.lu(i, i);
  return d;
}

Matrix inverse(const Matrix& a) {
  const Lu f = lu_decompose(a);
  if (f.singular) throw SingularityError("inverse: matrix is singular");
  const std::size_t n = a.rows();
  Matrix inv(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = f.perm[i] == c ? 1.0 : 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < i; ++k) x[i] -= f.lu(i, k) * x[k];
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t k = i + 1; k < n; ++k) x[i] -= f.lu(i, k) * x[k];
      x[i] /= f.lu(i, i);
    }
    for (std::size_t i = 0; i < n; ++i) inv(i, c) = x[i];
  }
  return inv;
}

SymMatrix::SymMatrix(const Matrix& a) : m_(a) {
  require_square(a, "SymMatrix");
  if (a.rows() == 0) throw InputError("SymMatrix: dimension must be >= 1");
  if (!a.all_finite()) throw InputError("SymMatrix: non-finite entry");
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      m_(i, j) = v;
      m_(j, i) = v;
    }
}

SymMatrix::SymMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : SymMatrix(Matrix(rows)) {}

EigenDecomposition sym_eigen(const SymMatrix& s) {
  const std::size_t n = s.dim();
  Matrix a = s.matrix();
  Matrix v = Matrix::identity(n);

  const double scale = a.frobenius_norm();
  const double eps = std::numeric_limits<double>::epsilon();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off == 0.0 || std::sqrt(off) <= eps * eps * scale) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Negligible relative to both diagonal entries: drop it.
        if (sweep > 3 && std::abs(app) + 100.0 * std::abs(apq) == std::abs(app) &&
            std::abs(aqq) + 100.0 * std::abs(apq) == std::abs(aqq)) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;

        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = a(p, r) = c * arp - sn * arq;
          a(r, q) = a(q, r) = sn * arp + c * arq;
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = 0.0;

        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = c * vrp - sn * vrq;
          v(r, q) = sn * vrp + c * vrq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

PsdMatrix::PsdMatrix(const SymMatrix& a) : base_(a) {
  const EigenDecomposition e = sym_eigen(a);
  const double mu_min = e.values.front();
  if (mu_min < -kEpsPsd) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "matrix not PSD: min eigenvalue %.6g", mu_min);
    throw InputError(buf);
  }
  if (mu_min < 0.0) base_ = SymMatrix(e.recompose([](double mu) { return std::max(mu, 0.0); }));
}

Matrix cholesky(const Matrix& a) {
  require_square(a, "cholesky");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > kEpsPsd)) throw SingularityError("cholesky: matrix is not positive definite");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

double logdet_spd(const Matrix& a) {
  const Matrix l = cholesky(a);
  double s = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

double logdet_psd(const PsdMatrix& a) { return logdet_spd(a.matrix()); }

bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol) {
  if (a.dim() != b.dim()) throw InputError("loewner_leq: dimension mismatch");
  const EigenDecomposition e = sym_eigen(SymMatrix(b.matrix() - a.matrix()));
  return e.values.front() >= -tol;
}

PsdMatrix sqrt_psd(const PsdMatrix& a) {
  const EigenDecomposition e = sym_eigen(a.sym());
  return PsdMatrix(SymMatrix(e.recompose([](double mu) { return std::sqrt(std::max(mu, 0.0)); })));
}

SymMatrix clip_spectrum(const SymMatrix& a, double lo, double hi) {
  if (lo > hi) throw InputError("clip_spectrum: lo > hi");
  const EigenDecomposition e = sym_eigen(a);
  if (e.values.front() >= lo && e.values.back() <= hi) return a;
  return SymMatrix(e.recompose([&](double mu) { return std::clamp(mu, lo, hi); }));
}

Matrix range_factor(const PsdMatrix& a, double tol) {
  const EigenDecomposition e = sym_eigen(a.sym());
  const std::size_t n = a.dim();
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < n; ++k)
    if (e.values[k] > tol) keep.push_back(k);
  Matrix f(n, keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const double s = std::sqrt(e.values[keep[c]]);
    for (std::size_t i = 0; i < n; ++i) f(i, c) = e.vectors(i, keep[c]) * s;
  }
  return f;
}

Matrix pinv_psd(const SymMatrix& a, double tol) {
  const EigenDecomposition e = sym_eigen(a);
  return e.recompose([&](double mu) { return mu > tol ? 1.0 / mu : 0.0; });
}

}  // namespace gbc
