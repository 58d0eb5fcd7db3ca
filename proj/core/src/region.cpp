#include "gbc/region.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <tuple>

#include "gbc/error.hpp"
#include "gbc/parallel.hpp"
#include "gbc/rng.hpp"

namespace gbc {

namespace {

constexpr double kRateFloor = -1e-12;
constexpr double kBalanceTol = 1e-9;
constexpr double kLambdaOneOffset = 1e-6;

double clip_rate(double r, const char* name) {
  if (r < kRateFloor) throw NumericalError(std::string("negative rate ") + name + ": " + std::to_string(r));
  return std::max(0.0, r);
}

RatePoint mirror(RatePoint p) {
  std::swap(p.r1, p.r2);
  return p;
}

// lambda > 1, receivers as given.
RatePoint private_core(const ChannelPair& ch, const PsdMatrix& k, double lambda, const OptConfig& cfg) {
  const OptResult res = v_lambda(ch, k, lambda, cfg);
  RatePoint p;
  p.r1 = clip_rate(gauss_mi(ch.g1(), res.k_opt), "R1");
  p.r2 = clip_rate(gauss_mi(ch.g2(), k) - gauss_mi(ch.g2(), res.k_opt), "R2");
  p.value = lambda * gauss_mi(ch.g2(), k) + res.value;
  p.k_prime = res.k_opt;
  p.converged = res.converged;
  return p;
}

// Any lambda > 0: maximizes R1 + lambda R2.
RatePoint private_any(const ChannelPair& ch, const PsdMatrix& k, double lambda, const OptConfig& cfg) {
  if (lambda > 1.0) return private_core(ch, k, lambda, cfg);
  if (lambda < 1.0) {
    RatePoint p = mirror(private_core(ch.swapped(), k, 1.0 / lambda, cfg));
    p.value *= lambda;
    return p;
  }
  const RatePoint hi = private_any(ch, k, 1.0 + kLambdaOneOffset, cfg);
  const RatePoint lo = private_any(ch, k, 1.0 - kLambdaOneOffset, cfg);
  RatePoint p = hi;
  p.r1 = 0.5 * (hi.r1 + lo.r1);
  p.r2 = 0.5 * (hi.r2 + lo.r2);
  p.value = p.r1 + p.r2;
  p.k_prime = PsdMatrix(0.5 * (hi.k_prime.matrix() + lo.k_prime.matrix()));
  p.converged = hi.converged && lo.converged;
  p.interpolated = true;
  return p;
}

RatePoint common_core(const ChannelPair& ch, const PsdMatrix& k, double l0, double l1, double l2,
                      const OptConfig& cfg) {
  const MinimaxResult mm = minimax_alpha(ch, k, l0, l1, l2, cfg);
  const PsdMatrix k12(mm.split.k1.matrix() + mm.split.k2.matrix());
  const double w1 = gauss_mi(ch.g1(), k) - gauss_mi(ch.g1(), k12);
  const double w2 = gauss_mi(ch.g2(), k) - gauss_mi(ch.g2(), k12);
  RatePoint p;
  p.common = true;
  p.r0 = clip_rate(std::min(w1, w2), "R0");
  p.r1 = clip_rate(gauss_mi(ch.g1(), mm.split.k1), "R1");
  p.r2 = clip_rate(gauss_mi(ch.g2(), k12) - gauss_mi(ch.g2(), mm.split.k1), "R2");
  p.balanced = std::abs(w1 - w2) <= kBalanceTol;
  p.weights = LambdaWeights{l0, l1, l2, mm.alpha_star};
  p.value = mm.outer_value;
  p.split = mm.split;
  p.converged = mm.converged;
  return p;
}

}  // namespace

double to_unit(double nats, Unit unit) noexcept { return unit == Unit::bits ? nats / std::numbers::ln2 : nats; }

RatePoint private_point(const ChannelPair& ch, const PsdMatrix& k, double lambda, const OptConfig& cfg,
                        bool swap) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be positive and finite");
  if (k.dim() != ch.dim()) throw InputError("covariance dimension does not match the channel");
  RatePoint p = swap ? mirror(private_any(ch.swapped(), k, lambda, cfg)) : private_any(ch, k, lambda, cfg);
  p.lambda = lambda;
  p.swapped = swap;
  p.hyperplane = swap ? std::array<double, 3>{0.0, lambda, 1.0} : std::array<double, 3>{0.0, 1.0, lambda};
  return p;
}

RatePoint common_point(const ChannelPair& ch, const PsdMatrix& k, double l0, double l1, double l2,
                       const OptConfig& cfg, bool swap) {
  LambdaWeights{l0, l1, l2, 0.5}.validate_common();
  RatePoint p;
  if (swap) {
    p = mirror(common_core(ch.swapped(), k, l0, l2, l1, cfg));
    p.weights = LambdaWeights{l0, l1, l2, p.weights.alpha};
    p.hyperplane = {l0, l1 + l2, l2};
  } else {
    p = common_core(ch, k, l0, l1, l2, cfg);
    p.hyperplane = {l0, l1, l1 + l2};
  }
  p.swapped = swap;
  return p;
}

std::vector<RatePoint> trace(const ChannelPair& ch, const PsdMatrix& k, const TraceConfig& cfg) {
  if (cfg.lambda_grid.empty() && cfg.weight_grid.empty()) throw ParameterError("trace grid is empty");
  for (double l : cfg.lambda_grid)
    if (!(l > 0.0) || !std::isfinite(l)) throw ParameterError("lambda grid values must be positive");
  cfg.opt.validate();

  std::vector<double> lambdas = cfg.lambda_grid;
  std::sort(lambdas.begin(), lambdas.end());
  std::vector<LambdaWeights> weights = cfg.weight_grid;
  std::sort(weights.begin(), weights.end(), [](const LambdaWeights& a, const LambdaWeights& b) {
    return std::tie(a.lambda0, a.lambda1, a.lambda2) < std::tie(b.lambda0, b.lambda1, b.lambda2);
  });

  const std::size_t n = lambdas.size() + weights.size();
  std::vector<RatePoint> out(n);
  parallel_for(n, [&](std::size_t i) {
    OptConfig opt = cfg.opt;
    opt.seed = Rng::derive(cfg.opt.seed, i);
    RatePoint p;
    const bool is_private = i < lambdas.size();
    try {
      if (is_private) {
        p = private_point(ch, k, lambdas[i], opt, cfg.swap_roles);
      } else {
        const LambdaWeights& w = weights[i - lambdas.size()];
        p = common_point(ch, k, w.lambda0, w.lambda1, w.lambda2, opt, cfg.swap_roles);
      }
    } catch (const Error& e) {
      p = RatePoint{};
      p.common = !is_private;
      p.swapped = cfg.swap_roles;
      if (is_private) {
        p.lambda = lambdas[i];
      } else {
        p.weights = weights[i - lambdas.size()];
      }
      p.error = e.what();
    }
    p.r0 = to_unit(p.r0, cfg.output_unit);
    p.r1 = to_unit(p.r1, cfg.output_unit);
    p.r2 = to_unit(p.r2, cfg.output_unit);
    p.value = to_unit(p.value, cfg.output_unit);
    out[i] = std::move(p);
  });
  return out;
}

std::vector<HyperplaneViolation> hyperplane_self_check(const std::vector<RatePoint>& points) {
  constexpr double kSlack = 1e-6;
  std::vector<HyperplaneViolation> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].error.empty()) continue;
    const double own = points[i].weighted_sum();
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i || !points[j].error.empty()) continue;
      const auto& w = points[i].hyperplane;
      const double other = w[0] * points[j].r0 + w[1] * points[j].r1 + w[2] * points[j].r2;
      if (other > own + kSlack) out.push_back({i, j, other - own});
    }
  }
  return out;
}

}  // namespace gbc
