#pragma once

// Boundary points of the private-message and common-message capacity regions,
// one per supporting-hyperplane weight vector.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "gbc/envelope_opt.hpp"
#include "gbc/rates.hpp"

namespace gbc {

enum class Unit { nats, bits };

/// Converts a value in nats to `unit`.
double to_unit(double nats, Unit unit) noexcept;

struct RatePoint {
  double r0 = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;

  bool common = false;      ///< common-message point (weights) vs private point (lambda)
  bool swapped = false;     ///< roles of the receivers interchanged
  double lambda = 0.0;      ///< private points
  LambdaWeights weights;    ///< common points; weights.alpha holds alpha*
  std::array<double, 3> hyperplane{};  ///< normal w with w . (r0, r1, r2) maximized

  double value = 0.0;       ///< optimizer value of the weighted sum
  PsdMatrix k_prime;        ///< private points: covariance of the receiver-1 layer
  GaussianSplit split;      ///< common points
  bool converged = false;
  bool interpolated = false;  ///< lambda = 1 obtained from the one-sided limits
  bool balanced = false;      ///< the two common-rate constraints tie within 1e-9
  std::string error;          ///< non-empty when the point failed inside a trace

  double weighted_sum() const noexcept { return hyperplane[0] * r0 + hyperplane[1] * r1 + hyperplane[2] * r2; }
};

struct TraceConfig {
  std::vector<double> lambda_grid;          ///< private trace, lambda > 0
  std::vector<LambdaWeights> weight_grid;   ///< common trace, alpha ignored
  bool swap_roles = false;  ///< maximize R2 + lambda R1 (private) or l0 R0 + (l1+l2) R1 + l2 R2 (common)
  OptConfig opt;
  Unit output_unit = Unit::nats;
};

/// Boundary point maximizing R1 + lambda R2 (R2 + lambda R1 when swap is set).
/// lambda < 1 runs the interchanged problem with 1/lambda; lambda = 1 is the
/// average of the limits from both sides and flagged as interpolated.
RatePoint private_point(const ChannelPair& ch, const PsdMatrix& k, double lambda, const OptConfig& cfg,
                        bool swap = false);

/// Boundary point maximizing l0 R0 + l1 R1 + (l1+l2) R2, or with swap set
/// l0 R0 + (l1+l2) R1 + l2 R2.
RatePoint common_point(const ChannelPair& ch, const PsdMatrix& k, double l0, double l1, double l2,
                       const OptConfig& cfg, bool swap = false);

/// Private points for the sorted lambda grid followed by common points for the
/// sorted weight grid. Failures are recorded per point. Rates are reported in
/// cfg.output_unit.
std::vector<RatePoint> trace(const ChannelPair& ch, const PsdMatrix& k, const TraceConfig& cfg);

struct HyperplaneViolation {
  std::size_t point = 0;  ///< index whose hyperplane is beaten
  std::size_t other = 0;  ///< index of the point beating it
  double excess = 0.0;
};

/// Pairs (p, q) with hyperplane(p) . q > hyperplane(p) . p + 1e-6. Points that
/// carry an error are skipped.
std::vector<HyperplaneViolation> hyperplane_self_check(const std::vector<RatePoint>& points);

}  // namespace gbc
