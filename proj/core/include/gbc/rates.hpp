#pragma once

// Closed-form rate functionals for Gaussian inputs on the two-receiver vector
// Gaussian broadcast channel Y_i = G_i X + Z_i, Z_i ~ N(0, I). Every quantity is
// a mutual information in nats, so each log-det carries a factor 1/2.

#include <cstddef>
#include <span>

#include "gbc/linalg.hpp"

namespace gbc {

/// Gain matrices of the two receivers. Both must be square, of equal size and
/// invertible (|det| > 1e-12).
class ChannelPair {
 public:
  ChannelPair(Matrix g1, Matrix g2);

  std::size_t dim() const noexcept { return g1_.rows(); }
  const Matrix& g1() const noexcept { return g1_; }
  const Matrix& g2() const noexcept { return g2_; }
  const Matrix& gain(int receiver) const noexcept { return receiver == 1 ? g1_ : g2_; }

  /// Receivers interchanged.
  ChannelPair swapped() const { return ChannelPair(g2_, g1_); }

  /// The two-letter product channel: diag(G_i, G_i) at each receiver.
  ChannelPair two_letter() const;

 private:
  Matrix g1_;
  Matrix g2_;
};

/// Weights (lambda0, lambda1, lambda2) and mixing alpha of the common-message
/// objective lambda0 R0 + lambda1 R1 + (lambda1 + lambda2) R2.
struct LambdaWeights {
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double alpha = 0.5;

  /// Throws ParameterError unless all lambdas > 0, alpha in [0, 1] and
  /// lambda0 > lambda1 + lambda2.
  void validate_common() const;

  /// (lambda1 + lambda2) / lambda1, the weight of the inner private functional.
  double inner_lambda() const noexcept { return (lambda1 + lambda2) / lambda1; }
};

/// Covariances of the layered signal X = W + X1 + V.
struct GaussianSplit {
  PsdMatrix kw;
  PsdMatrix k1;
  PsdMatrix k2;
};

struct DpcConstruction {
  Matrix a_matrix;
  PsdMatrix k_prime;
  PsdMatrix k_v;
};

struct BoundReport {
  double c_lambda = 0.0;
  double mu_star = 0.0;
  double mu1_sigma2 = 0.0;
  double mut_sigma1 = 0.0;
};

/// 1/2 logdet(I + G K G^T).
double gauss_mi(const Matrix& g, const PsdMatrix& k);

/// Gradient of gauss_mi with respect to K: 1/2 G^T (I + G K G^T)^{-1} G, symmetrized.
Matrix gauss_mi_gradient(const Matrix& g, const Matrix& k);

/// gauss_mi(g1, k') - lambda gauss_mi(g2, k'); lambda must exceed 1.
double s_lambda_gauss(const ChannelPair& ch, const PsdMatrix& k_prime, double lambda);

/// Uniform upper bound on s_lambda over all covariances, from the eigenvalue
/// interlacing of Sigma_i + K with Sigma_i = (G_i^T G_i)^{-1}.
BoundReport c_lambda_bound(const ChannelPair& ch, double lambda);

/// The common-message functional at X = X1 + X2 (independent, covariances k1,
/// k2), with the envelope term taken as its Gaussian-split value at k1:
///   -l0 a I1(k1+k2) - l0 (1-a) I2(k1+k2) + (l1+l2) I2(k1+k2)
///   + l1 s_{(l1+l2)/l1}(k1).
double t_lambda_gauss(const ChannelPair& ch, const PsdMatrix& k1, const PsdMatrix& k2,
                      const LambdaWeights& w);

/// Dirty-paper coefficient A = K' G^T (G K' G^T + I)^{-1}.
DpcConstruction dpc_matrix(const Matrix& g, const PsdMatrix& k_prime, const PsdMatrix& k_v);

struct IdentityPair {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// lhs = I(X; Y | V) = 1/2 logdet(I + G K' G^T); rhs = I(U; Y) - I(U; V) from the
/// joint covariance of (U, V, Y), U = X + A G V, Y = G (X + V) + Z. A acts on the
/// interference as seen at the receiver, G V.
IdentityPair dpc_identity_check(const Matrix& g, const DpcConstruction& d);

struct ProductMiTerms {
  double joint = 0.0;          ///< I(X1, X2; Y1, Y2)
  double sum_marginals = 0.0;  ///< I(X1; Y1) + I(X2; Y2)
  double cross = 0.0;          ///< I(Y1; Y2)
};

/// Terms of I(X1,X2;Y1,Y2) = I(X1;Y1) + I(X2;Y2) - I(Y1;Y2) on the two-letter
/// product of the point-to-point channel with gain g; joint_k is 2t x 2t.
ProductMiTerms product_mi_identity(const Matrix& g, const PsdMatrix& joint_k);

/// (1/sqrt 2) [[I, I], [I, -I]] of size 2t.
Matrix rotation_matrix(std::size_t t);

struct RotationTerms {
  double original = 0.0;
  double rotated = 0.0;
};

/// I(X1,X2; Y1,Y2) before and after the sum/difference rotation of the inputs.
RotationTerms rotation_check(const Matrix& g, const PsdMatrix& joint_k);

/// Mutual information between index groups a and b of a jointly Gaussian vector
/// with covariance `joint`. Each group is first restricted to the range of its
/// own covariance block, so degenerate components contribute nothing. Throws
/// NumericalError if the restricted joint block is singular (infinite MI).
double gaussian_mi(const PsdMatrix& joint, std::span<const std::size_t> a,
                   std::span<const std::size_t> b);

}  // namespace gbc
