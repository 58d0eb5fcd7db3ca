#pragma once

// Scalar (t = 1) laboratory on lattice distributions: output entropies through
// Gaussian noise, the doubling iteration X -> (X1 + X2)/sqrt 2, the
// sum/difference independence measure and a mixture search for the envelope.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace gbc {

/// Lattice geometry: points -half_width, ..., +half_width with spacing dx.
struct Grid {
  double half_width = 12.0;
  double dx = 0.05;

  std::size_t size() const;
  double x0() const;
};

/// Probability mass on the lattice x0 + i dx, i = 0..n-1.
class GridDistribution {
 public:
  GridDistribution(double x0, double dx, std::vector<double> probs, bool zero_mean = false);

  static GridDistribution point_mass(const Grid& grid = {});
  /// +-a with probability 1/2 each; a must be a lattice point.
  static GridDistribution rademacher(double a = 1.0, const Grid& grid = {});
  /// Equal mass on every lattice point with |x| <= half_support.
  static GridDistribution uniform(double half_support, const Grid& grid = {});
  /// Equal mass on n consecutive lattice points centered at 0 (n odd) or at dx/2 (n even).
  static GridDistribution uniform_points(std::size_t n, const Grid& grid = {});
  /// Weights proportional to exp(-(x - mean)^2 / 2 variance).
  static GridDistribution discretized_gaussian(double variance, const Grid& grid = {}, double mean = 0.0);

  double x0() const noexcept { return x0_; }
  double dx() const noexcept { return dx_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double x(std::size_t i) const noexcept { return x0_ + static_cast<double>(i) * dx_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  bool zero_mean() const noexcept { return zero_mean_; }

  double mean() const;
  double variance() const;
  double second_moment() const;

  /// Same law with x0 shifted by `offset`.
  GridDistribution shifted(double offset) const;

 private:
  double x0_;
  double dx_;
  std::vector<double> probs_;
  bool zero_mean_;
};

/// h(gain X + Z) in nats, Z standard normal, by composite Simpson with panel
/// width <= 0.01 aligned to the lattice. Throws ConfigError if the quadrature
/// would need more than `max_panels` panels.
double output_entropy(const GridDistribution& p, double gain, std::size_t max_panels = 4'000'000);

/// I(X; Y1) - lambda I(X; Y2) for scalar gains; lambda > 1.
double s_lambda_discrete(const GridDistribution& p, double g1, double g2, double lambda);

/// Support points and masses of (X1 + X2)/sqrt 2 before rebinning, with zero
/// masses dropped and coincident points merged.
std::vector<std::pair<double, double>> self_convolution_points(const GridDistribution& p);

/// (X1 + X2)/sqrt 2 rebinned onto the grid of p. Each atom is spread as a box
/// of width dx/sqrt 2 projected onto the piecewise-linear hat basis, which keeps
/// the mean exactly. Atom positions are contracted about the mean so that the
/// variance also matches the exact convolution whenever the law is wider than
/// the rebinning spread. Throws ConfigError if more than 1e-12 mass falls outside.
GridDistribution doubling_step(const GridDistribution& p);

/// 1/2 sum |p_i - q_i| against the same-mean, same-variance discretized Gaussian.
double tv_to_gaussian(const GridDistribution& p);

/// Mutual information of (X1 + X2, X1 - X2) for iid X1, X2 ~ p, conditioned on
/// the lattice parity of the index sum (which both coordinates share), so the
/// value vanishes for laws that factor on the lattice.
double sum_diff_mi(const GridDistribution& p);

struct LabIterate {
  int iteration = 0;
  double s_lambda = 0.0;
  double tv = 0.0;
  double variance = 0.0;
  double sum_diff_mi = 0.0;
};

struct LabReport {
  std::vector<LabIterate> iterates;  ///< iteration 0 is the start
  double envelope = 0.0;             ///< v_lambda at K = variance of the start
  double final_gap = 0.0;            ///< envelope - s_lambda of the last iterate
};

LabReport doubling_experiment(const GridDistribution& p0, double g1, double g2, double lambda, int n_steps);

struct EnvelopeConfig {
  std::uint64_t seed = 0;
  int restarts = 3;
  int max_evaluations = 400;   ///< per restart
  double min_step = 1e-3;
  Grid grid;
  std::optional<double> initial_variance;  ///< extra start: one Gaussian of this variance
};

struct MixtureComponent {
  double weight = 0.0;
  GridDistribution law;
};

struct EnvelopeResult {
  double value = 0.0;
  std::vector<MixtureComponent> mixture;
  int evaluations = 0;
};

/// Best found sum_c w_c s_lambda(p_c) over mixtures of at most m laws, each a
/// discretized (1 - b) N(0, v) + b/2 [N(a, v) + N(-a, v)], with
/// sum_c w_c E[X_c^2] <= k.
EnvelopeResult envelope_discrete(double g1, double g2, double k, double lambda, int m, const EnvelopeConfig& cfg);

}  // namespace gbc
