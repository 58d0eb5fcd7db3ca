#pragma once

// Covariance-constrained maximization of the Gaussian rate functionals.
//
// Feasible sets {K' : 0 <= K' <= K} are parameterized as K' = F M F^T where
// F F^T = K restricted to the range of K and 0 <= M <= I, so projection is a
// spectral clip of M. The ascent is a spectral projected gradient method with
// Armijo backtracking and multi-start; see OptConfig for the knobs.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gbc/linalg.hpp"
#include "gbc/rates.hpp"

namespace gbc {

struct OptConfig {
  double tol_obj = 1e-15;  ///< relative objective change counted as a stall
  double tol_grad = 1e-9;  ///< projected-gradient norm for convergence
  int max_iter = 5000;
  int restarts = 8;
  std::uint64_t seed = 0;
  double step_init = 1.0;

  void validate() const;
};

struct OptResult {
  PsdMatrix k_opt;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> restart_values;
  std::vector<bool> restart_converged;
};

/// Result of the two-block (K1, K2) maximization.
struct SplitOptResult {
  PsdMatrix k1;
  PsdMatrix k2;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> restart_values;
  std::vector<bool> restart_converged;
};

/// max_{K' <= K} I(X; Y) over Gaussians, which is attained at K' = K.
double v_point(const Matrix& g, const PsdMatrix& k);

/// max over 0 <= K' <= K of s_lambda_gauss(ch, K', lambda), lambda > 1.
/// `warm_starts` are extra initial K' tried in addition to cfg.restarts seeded
/// starts (they are projected into the feasible set first).
OptResult v_lambda(const ChannelPair& ch, const PsdMatrix& k, double lambda, const OptConfig& cfg,
                   std::span<const PsdMatrix> warm_starts = {});

/// One ascent run of the v_lambda problem from a given K'; no restarts.
OptResult v_lambda_from(const ChannelPair& ch, const PsdMatrix& k, double lambda, const PsdMatrix& start,
                        const OptConfig& cfg);

/// max over K1, K2 >= 0, K1 + K2 <= K of t_lambda_gauss(ch, K1, K2, w).
SplitOptResult v_hat_lambda(const ChannelPair& ch, const PsdMatrix& k, const LambdaWeights& w,
                            const OptConfig& cfg, std::span<const GaussianSplit> warm_starts = {});

struct TwoLetterReport {
  double two_letter_value = 0.0;  ///< optimum on the product channel
  double single_value = 0.0;      ///< v_lambda(K) of one letter
  double cross_norm = 0.0;        ///< ||cross block of the two-letter optimizer||_F
  bool converged = false;
  PsdMatrix joint_opt;
};

/// Maximizes s_lambda of the two-letter product channel over joint 2t x 2t
/// covariances <= diag(K, K) and compares with twice the single-letter value.
TwoLetterReport two_letter_check(const ChannelPair& ch, const PsdMatrix& k, double lambda, const OptConfig& cfg,
                                 std::optional<PsdMatrix> initial_joint = std::nullopt);

/// F(alpha) = l0 [alpha I1(K) + (1 - alpha) I2(K)] + v_hat_lambda(alpha).value
double minimax_objective(const ChannelPair& ch, const PsdMatrix& k, double l0, double l1, double l2, double alpha,
                         const OptConfig& cfg);

struct MinimaxResult {
  double alpha_star = 0.0;
  double outer_value = 0.0;
  GaussianSplit split;
  bool converged = false;
  int evaluations = 0;
};

/// Golden-section minimization of the convex F over alpha in [0, 1] with 60
/// interval reductions. Each evaluation warm-starts the inner optimizer from
/// the split found at the nearest alpha evaluated so far.
MinimaxResult minimax_alpha(const ChannelPair& ch, const PsdMatrix& k, double l0, double l1, double l2,
                            const OptConfig& cfg);

/// Largest relative error between the analytic gradient of s_lambda (w.r.t. K')
/// and central finite differences along `probes` random symmetric directions.
double s_lambda_gradient_check(const ChannelPair& ch, const PsdMatrix& k_prime, double lambda, std::uint64_t seed,
                               int probes = 8);

/// Same cross-check for t_lambda with respect to (K1, K2).
double t_lambda_gradient_check(const ChannelPair& ch, const PsdMatrix& k1, const PsdMatrix& k2,
                               const LambdaWeights& w, std::uint64_t seed, int probes = 8);

}  // namespace gbc
