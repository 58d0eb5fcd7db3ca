#include "gbc/rates.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gbc/error.hpp"

namespace gbc {

namespace {

constexpr double kMinAbsDet = 1e-12;

void check_gain(const Matrix& g, const char* name) {
  if (!g.square() || g.rows() == 0) throw InputError(std::string(name) + " must be a non-empty square matrix");
  if (!g.all_finite()) throw InputError(std::string(name) + " has non-finite entries");
  if (std::abs(determinant(g)) <= kMinAbsDet) throw SingularityError(std::string(name) + ": gain not invertible");
}

Matrix submatrix(const Matrix& m, std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
  Matrix s(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) s(i, j) = m(rows[i], cols[j]);
  return s;
}

/// Orthonormal eigenvectors of the non-negligible part of a PSD block, plus the
/// log of the kept eigenvalues' product.
struct RangeBasis {
  Matrix q;
  double logdet = 0.0;
};

RangeBasis range_basis(const Matrix& block) {
  const EigenDecomposition e = sym_eigen(SymMatrix(block));
  const double tol = 1e-12 * std::max(1.0, std::abs(e.values.back()));
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < e.values.size(); ++k)
    if (e.values[k] > tol) keep.push_back(k);
  RangeBasis rb{Matrix(block.rows(), keep.size()), 0.0};
  for (std::size_t c = 0; c < keep.size(); ++c) {
    rb.logdet += std::log(e.values[keep[c]]);
    for (std::size_t i = 0; i < block.rows(); ++i) rb.q(i, c) = e.vectors(i, keep[c]);
  }
  return rb;
}

/// Whitened cross term: I(A;B) = -1/2 sum log(1 - sigma_i^2) for the canonical
/// correlations sigma_i of a jointly Gaussian pair with PD marginals.
double cross_information(const Matrix& caa, const Matrix& cab, const Matrix& cbb) {
  const Matrix la_inv = inverse(cholesky(caa));
  const Matrix lb_inv = inverse(cholesky(cbb));
  const Matrix m = la_inv * cab * lb_inv.transpose();
  const EigenDecomposition e = sym_eigen(SymMatrix(m * m.transpose()));
  double s = 0.0;
  for (double mu : e.values) {
    const double r = std::max(mu, 0.0);
    if (r >= 1.0) throw NumericalError("cross_information: canonical correlation reaches 1");
    s += -0.5 * std::log1p(-r);
  }
  return s;
}

}  // namespace

ChannelPair::ChannelPair(Matrix g1, Matrix g2) : g1_(std::move(g1)), g2_(std::move(g2)) {
  check_gain(g1_, "g1");
  check_gain(g2_, "g2");
  if (g1_.rows() != g2_.rows()) throw InputError("g1 and g2 must have the same dimension");
}

ChannelPair ChannelPair::two_letter() const {
  return ChannelPair(block_diag(g1_, g1_), block_diag(g2_, g2_));
}

void LambdaWeights::validate_common() const {
  if (!(lambda0 > 0.0 && lambda1 > 0.0 && lambda2 > 0.0))
    throw ParameterError("lambda0, lambda1, lambda2 must all be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
  if (!(lambda0 > lambda1 + lambda2)) throw ParameterError("weights require lambda0 > lambda1 + lambda2");
}

double gauss_mi(const Matrix& g, const PsdMatrix& k) {
  if (g.cols() != k.dim()) throw InputError("gauss_mi: dimension mismatch between gain and covariance");
  Matrix c = congruence(g, k.matrix());
  for (std::size_t i = 0; i < c.rows(); ++i) c(i, i) += 1.0;
  return std::max(0.0, 0.5 * logdet_spd(c));
}

Matrix gauss_mi_gradient(const Matrix& g, const Matrix& k) {
  Matrix c = congruence(g, k);
  for (std::size_t i = 0; i < c.rows(); ++i) c(i, i) += 1.0;
  const Matrix grad = g.transpose() * inverse(c) * g;
  return 0.5 * SymMatrix(grad).matrix();
}

double s_lambda_gauss(const ChannelPair& ch, const PsdMatrix& k_prime, double lambda) {
  if (!(lambda > 1.0)) throw ParameterError("s_lambda requires lambda > 1");
  return gauss_mi(ch.g1(), k_prime) - lambda * gauss_mi(ch.g2(), k_prime);
}

BoundReport c_lambda_bound(const ChannelPair& ch, double lambda) {
  if (!(lambda > 1.0)) throw ParameterError("c_lambda_bound requires lambda > 1");
  const Matrix s1 = inverse(ch.g1().transpose() * ch.g1());
  const Matrix s2 = inverse(ch.g2().transpose() * ch.g2());
  const EigenDecomposition e1 = sym_eigen(SymMatrix(s1));
  const EigenDecomposition e2 = sym_eigen(SymMatrix(s2));

  BoundReport r;
  r.mut_sigma1 = e1.values.back();
  r.mu1_sigma2 = e2.values.front();
  r.mu_star = std::max(0.0, (r.mu1_sigma2 - lambda * r.mut_sigma1) / (lambda - 1.0));

  double logdet1 = 0.0;
  double logdet2 = 0.0;
  for (double mu : e1.values) logdet1 += std::log(mu);
  for (double mu : e2.values) logdet2 += std::log(mu);
  const double t = static_cast<double>(ch.dim());
  r.c_lambda = 0.5 * (-logdet1 + lambda * logdet2 +
                      t * (std::log(r.mu_star + r.mut_sigma1) - lambda * std::log(r.mu_star + r.mu1_sigma2)));
  return r;
}

double t_lambda_gauss(const ChannelPair& ch, const PsdMatrix& k1, const PsdMatrix& k2,
                      const LambdaWeights& w) {
  w.validate_common();
  if (k1.dim() != ch.dim() || k2.dim() != ch.dim()) throw InputError("t_lambda_gauss: dimension mismatch");
  const PsdMatrix k12(k1.matrix() + k2.matrix());
  const double i1 = gauss_mi(ch.g1(), k12);
  const double i2 = gauss_mi(ch.g2(), k12);
  return -w.lambda0 * w.alpha * i1 - w.lambda0 * (1.0 - w.alpha) * i2 + (w.lambda1 + w.lambda2) * i2 +
         w.lambda1 * s_lambda_gauss(ch, k1, w.inner_lambda());
}

DpcConstruction dpc_matrix(const Matrix& g, const PsdMatrix& k_prime, const PsdMatrix& k_v) {
  if (g.cols() != k_prime.dim() || k_prime.dim() != k_v.dim()) throw InputError("dpc_matrix: dimension mismatch");
  Matrix c = congruence(g, k_prime.matrix());
  for (std::size_t i = 0; i < c.rows(); ++i) c(i, i) += 1.0;
  return DpcConstruction{k_prime.matrix() * g.transpose() * inverse(c), k_prime, k_v};
}

IdentityPair dpc_identity_check(const Matrix& g, const DpcConstruction& d) {
  const std::size_t t = d.k_prime.dim();
  const Matrix& kp = d.k_prime.matrix();
  const Matrix& kv = d.k_v.matrix();
  const Matrix& a = d.a_matrix;
  const Matrix gt = g.transpose();

  // The interference reaches the receiver as G V, so U = X' + A (G V).
  const Matrix b = a * g;
  const Matrix akv = b * kv;
  Matrix cy = g * (kp + kv) * gt;
  for (std::size_t i = 0; i < t; ++i) cy(i, i) += 1.0;

  // (U, V, Y) laid out as blocks of size t.
  Matrix joint(3 * t, 3 * t);
  joint.set_block(0, 0, kp + akv * b.transpose());
  joint.set_block(t, t, kv);
  joint.set_block(2 * t, 2 * t, cy);
  const Matrix cuv = akv;
  const Matrix cuy = (kp + akv) * gt;
  const Matrix cvy = kv * gt;
  joint.set_block(0, t, cuv);
  joint.set_block(t, 0, cuv.transpose());
  joint.set_block(0, 2 * t, cuy);
  joint.set_block(2 * t, 0, cuy.transpose());
  joint.set_block(t, 2 * t, cvy);
  joint.set_block(2 * t, t, cvy.transpose());

  std::vector<std::size_t> u(t), v(t), y(t);
  for (std::size_t i = 0; i < t; ++i) {
    u[i] = i;
    v[i] = t + i;
    y[i] = 2 * t + i;
  }
  PsdMatrix cov;
  try {
    cov = PsdMatrix(joint);
  } catch (const InputError& e) {
    throw NumericalError(std::string("dpc_identity_check: joint covariance of (U, V, Y) invalid: ") + e.what());
  }

  IdentityPair out;
  out.lhs = gauss_mi(g, d.k_prime);
  out.rhs = gaussian_mi(cov, u, y) - gaussian_mi(cov, u, v);
  return out;
}

ProductMiTerms product_mi_identity(const Matrix& g, const PsdMatrix& joint_k) {
  const std::size_t t = g.rows();
  if (!g.square() || joint_k.dim() != 2 * t) throw InputError("product_mi_identity: joint_k must be 2t x 2t");
  const Matrix& j = joint_k.matrix();
  const Matrix k11 = j.block(0, 0, t, t);
  const Matrix k22 = j.block(t, t, t, t);
  const Matrix k12 = j.block(0, t, t, t);

  ProductMiTerms r;
  r.joint = gauss_mi(block_diag(g, g), joint_k);
  r.sum_marginals = gauss_mi(g, PsdMatrix(k11)) + gauss_mi(g, PsdMatrix(k22));

  Matrix c11 = congruence(g, k11);
  Matrix c22 = congruence(g, k22);
  for (std::size_t i = 0; i < t; ++i) {
    c11(i, i) += 1.0;
    c22(i, i) += 1.0;
  }
  r.cross = cross_information(c11, g * k12 * g.transpose(), c22);
  return r;
}

Matrix rotation_matrix(std::size_t t) {
  const double h = 1.0 / std::sqrt(2.0);
  Matrix r(2 * t, 2 * t);
  for (std::size_t i = 0; i < t; ++i) {
    r(i, i) = h;
    r(i, t + i) = h;
    r(t + i, i) = h;
    r(t + i, t + i) = -h;
  }
  return r;
}

RotationTerms rotation_check(const Matrix& g, const PsdMatrix& joint_k) {
  const std::size_t t = g.rows();
  if (!g.square() || joint_k.dim() != 2 * t) throw InputError("rotation_check: joint_k must be 2t x 2t");
  const Matrix g2 = block_diag(g, g);
  const PsdMatrix rotated(congruence(rotation_matrix(t), joint_k.matrix()));
  return RotationTerms{gauss_mi(g2, joint_k), gauss_mi(g2, rotated)};
}

double gaussian_mi(const PsdMatrix& joint, std::span<const std::size_t> a, std::span<const std::size_t> b) {
  const Matrix& m = joint.matrix();
  const RangeBasis ra = range_basis(submatrix(m, a, a));
  const RangeBasis rb = range_basis(submatrix(m, b, b));
  const std::size_t na = ra.q.cols();
  const std::size_t nb = rb.q.cols();
  if (na == 0 || nb == 0) return 0.0;

  const Matrix qat = ra.q.transpose();
  const Matrix qbt = rb.q.transpose();
  Matrix restricted(na + nb, na + nb);
  restricted.set_block(0, 0, qat * submatrix(m, a, a) * ra.q);
  restricted.set_block(na, na, qbt * submatrix(m, b, b) * rb.q);
  const Matrix cab = qat * submatrix(m, a, b) * rb.q;
  restricted.set_block(0, na, cab);
  restricted.set_block(na, 0, cab.transpose());

  double joint_logdet = 0.0;
  try {
    joint_logdet = logdet_spd(SymMatrix(restricted).matrix());
  } catch (const SingularityError&) {
    throw NumericalError("gaussian_mi: groups are deterministically related (infinite mutual information)");
  }
  return 0.5 * (ra.logdet + rb.logdet - joint_logdet);
}

}  // namespace gbc
