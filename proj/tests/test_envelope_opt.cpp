#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gbc/envelope_opt.hpp"
#include "gbc/error.hpp"
#include "gbc/rng.hpp"
#include "oracles.hpp"

using namespace gbc;

namespace {

const ChannelPair kScalar(Matrix{{1}}, Matrix{{0.5}});

bool feasible(const PsdMatrix& kp, const PsdMatrix& k) {
  return loewner_leq(SymMatrix::zero(k.dim()), kp.sym(), 1e-8) && loewner_leq(kp.sym(), k.sym(), 1e-8);
}

double spread_of_converged(const std::vector<double>& values, const std::vector<bool>& converged) {
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!converged[i]) continue;
    lo = std::min(lo, values[i]);
    hi = std::max(hi, values[i]);
  }
  return hi >= lo ? hi - lo : 0.0;
}

}  // namespace

TEST_SUITE("envelope_opt") {
  TEST_CASE("OptConfig validation") {
    OptConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.restarts = 0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = OptConfig{};
    cfg.tol_obj = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
  }

  TEST_CASE("v_point") {
    CHECK(v_point(Matrix{{1}}, PsdMatrix{{1}}) == doctest::Approx(0.5 * std::log(2.0)));
    CHECK(v_point(Matrix{{2}}, PsdMatrix::zero(1)) == 0.0);

    // grid over K' = L M L^T with 0 <= M <= I, L the Cholesky factor of K
    const Matrix g{{1.0, 0.4}, {-0.3, 0.9}};
    const double k11 = 1.0, k12 = 0.3, k22 = 0.8;
    const double l11 = std::sqrt(k11), l21 = k12 / l11, l22 = std::sqrt(k22 - l21 * l21);
    double best = -1.0;
    const int n = 20;
    for (int i = 0; i <= n; ++i)
      for (int j = -n / 2; j <= n / 2; ++j)
        for (int m = 0; m <= n; ++m) {
          const double a = static_cast<double>(i) / n, b = static_cast<double>(j) / n, c = static_cast<double>(m) / n;
          const auto [lo, hi] = oracle::eig2(a, b, c);
          if (lo < -1e-12 || hi > 1.0 + 1e-12) continue;
          const oracle::Mat lm{{l11, 0.0}, {l21, l22}};
          const oracle::Mat kp = oracle::mul(oracle::mul(lm, oracle::Mat{{a, b}, {b, c}}), oracle::tr(lm));
          best = std::max(best, oracle::gauss_mi({{g(0, 0), g(0, 1)}, {g(1, 0), g(1, 1)}}, kp));
        }
    CHECK(std::abs(v_point(g, PsdMatrix{{k11, k12}, {k12, k22}}) - best) <= 1e-4);
  }

  TEST_CASE("v_lambda matches the scalar grid oracle") {
    OptConfig cfg;
    cfg.seed = 1;
    for (double lambda : {1.2, 2.0, 4.0}) {
      const OptResult r = v_lambda(kScalar, PsdMatrix{{1}}, lambda, cfg);
      const oracle::PrivateGrid o = oracle::private_grid(1.0, 0.5, 1.0, lambda, 1e-5);
      CHECK(r.converged);
      CHECK(std::abs(r.value - o.value) <= 1e-5);
      CHECK(std::abs(r.k_opt(0, 0) - o.k_prime) <= 1e-4);
      // stationary point of s_lambda in k', clipped to [0, K]
      const double stat = (1.0 - lambda * 0.25) / (0.25 * (lambda - 1.0));
      CHECK(std::abs(r.k_opt(0, 0) - std::clamp(stat, 0.0, 1.0)) <= 1e-4);
    }
  }

  TEST_CASE("v_lambda trivial cases and errors") {
    OptConfig cfg;
    const ChannelPair same(Matrix{{1, 0.5}, {0, 1}}, Matrix{{1, 0.5}, {0, 1}});
    const OptResult r = v_lambda(same, PsdMatrix{{2, 0.5}, {0.5, 1}}, 2.0, cfg);
    CHECK(r.value == doctest::Approx(0.0));
    CHECK(r.k_opt.matrix().frobenius_norm() <= 1e-8);

    const OptResult z = v_lambda(kScalar, PsdMatrix::zero(1), 2.0, cfg);
    CHECK(z.value == 0.0);
    CHECK(z.converged);

    CHECK_THROWS_AS(v_lambda(kScalar, PsdMatrix{{1}}, 1.0, cfg), ParameterError);
    CHECK_THROWS_AS(v_lambda(kScalar, PsdMatrix{{1}}, 0.7, cfg), ParameterError);
  }

  TEST_CASE("v_lambda feasibility, bound, monotonicity and restart spread") {
    Rng rng(31);
    OptConfig cfg;
    for (int trial = 0; trial < 12; ++trial) {
      const std::size_t t = 1 + trial % 3;
      const ChannelPair ch(random_gain(rng, t), random_gain(rng, t));
      const double lambda = 1.2 + 3.0 * rng.uniform();
      const Matrix k = random_psd(rng, t, 0.5 + 2.0 * rng.uniform());
      const Matrix kplus = k + random_psd(rng, t, 0.5);
      cfg.seed = static_cast<std::uint64_t>(trial);
      const OptResult r = v_lambda(ch, PsdMatrix(k), lambda, cfg);
      const OptResult rp = v_lambda(ch, PsdMatrix(kplus), lambda, cfg);
      CHECK(feasible(r.k_opt, PsdMatrix(k)));
      CHECK(r.value >= 0.0);
      CHECK(r.value <= c_lambda_bound(ch, lambda).c_lambda + 1e-9);
      CHECK(r.value <= rp.value + 1e-6);
      CHECK(r.value == doctest::Approx(s_lambda_gauss(ch, r.k_opt, lambda)).epsilon(1e-12));
      CHECK(r.restart_values.size() >= static_cast<std::size_t>(cfg.restarts));
    }
  }

  TEST_CASE("restart stability on scalar and diagonal channels") {
    OptConfig cfg;
    cfg.seed = 4;
    const ChannelPair diag(Matrix{{2, 0}, {0, 0.7}}, Matrix{{0.6, 0}, {0, 1.5}});
    for (double lambda : {1.3, 2.0, 3.0}) {
      const OptResult a = v_lambda(kScalar, PsdMatrix{{1.5}}, lambda, cfg);
      CHECK(spread_of_converged(a.restart_values, a.restart_converged) <= 1e-4);
      const OptResult b = v_lambda(diag, PsdMatrix{{1, 0}, {0, 2}}, lambda, cfg);
      CHECK(spread_of_converged(b.restart_values, b.restart_converged) <= 1e-4);
    }
  }

  TEST_CASE("gradient cross-checks") {
    Rng rng(32);
    const ChannelPair ch(random_gain(rng, 3), random_gain(rng, 3));
    const PsdMatrix k1(random_psd(rng, 3, 1.0));
    const PsdMatrix k2(random_psd(rng, 3, 1.0));
    CHECK(s_lambda_gradient_check(ch, k1, 2.5, 7) <= 1e-5);
    CHECK(t_lambda_gradient_check(ch, k1, k2, LambdaWeights{4.0, 1.0, 1.5, 0.3}, 7) <= 1e-5);
  }

  TEST_CASE("v_hat_lambda matches a 2-D grid at t = 1") {
    OptConfig cfg;
    cfg.seed = 2;
    for (const LambdaWeights& w : {LambdaWeights{3.0, 1.0, 1.0, 0.3}, LambdaWeights{4.0, 1.0, 0.5, 0.0},
                                   LambdaWeights{3.0, 1.0, 1.0, 1.0}}) {
      const SplitOptResult r = v_hat_lambda(kScalar, PsdMatrix{{1}}, w, cfg);
      const double h = 1e-3;
      double best = -1e300;
      for (int i = 0; i <= 1000; ++i)
        for (int j = 0; i + j <= 1000; ++j) {
          const double k1 = i * h, k12 = (i + j) * h;
          const double v = -w.lambda0 * w.alpha * oracle::mi(1.0, k12) - w.lambda0 * (1 - w.alpha) * oracle::mi(0.5, k12) +
                           (w.lambda1 + w.lambda2) * oracle::mi(0.5, k12) + w.lambda1 * oracle::mi(1.0, k1) -
                           (w.lambda1 + w.lambda2) * oracle::mi(0.5, k1);
          best = std::max(best, v);
        }
      CHECK(std::abs(r.value - best) <= 1e-3);
      CHECK(r.value >= best - 1e-9);
      CHECK(r.k1(0, 0) >= -1e-12);
      CHECK(r.k2(0, 0) >= -1e-12);
      CHECK(r.k1(0, 0) + r.k2(0, 0) <= 1.0 + 1e-8);
    }
  }

  TEST_CASE("v_hat_lambda trivial cases and errors") {
    OptConfig cfg;
    const SplitOptResult heavy = v_hat_lambda(kScalar, PsdMatrix{{1}}, LambdaWeights{100.0, 1.0, 1.0, 0.5}, cfg);
    CHECK(heavy.value == doctest::Approx(0.0));
    CHECK(heavy.k1(0, 0) + heavy.k2(0, 0) <= 1e-8);
    const SplitOptResult zero = v_hat_lambda(kScalar, PsdMatrix::zero(1), LambdaWeights{3.0, 1.0, 1.0, 0.5}, cfg);
    CHECK(zero.value == 0.0);
    CHECK_THROWS_AS(v_hat_lambda(kScalar, PsdMatrix{{1}}, LambdaWeights{2.0, 1.0, 1.0, 0.5}, cfg), ParameterError);

    const ChannelPair diag(Matrix{{2, 0}, {0, 0.7}}, Matrix{{0.6, 0}, {0, 1.5}});
    const PsdMatrix k{{1, 0.2}, {0.2, 2}};
    const SplitOptResult r = v_hat_lambda(diag, k, LambdaWeights{6.0, 1.0, 2.0, 0.4}, cfg);
    CHECK(feasible(r.k1, k));
    CHECK(feasible(r.k2, k));
    CHECK(feasible(PsdMatrix(r.k1.matrix() + r.k2.matrix()), k));
  }

  TEST_CASE("two-letter check") {
    OptConfig cfg;
    cfg.seed = 3;
    const ChannelPair same(Matrix{{1}}, Matrix{{1}});
    const TwoLetterReport s = two_letter_check(same, PsdMatrix{{1}}, 2.0, cfg);
    CHECK(s.two_letter_value == doctest::Approx(0.0));
    CHECK(s.single_value == doctest::Approx(0.0));

    const TwoLetterReport r = two_letter_check(kScalar, PsdMatrix{{1}}, 2.0, cfg);
    const double oracle_value = oracle::private_grid(1.0, 0.5, 1.0, 2.0, 1e-5).value;
    CHECK(std::abs(r.two_letter_value - 2.0 * oracle_value) <= 1e-3);
    CHECK(std::abs(r.two_letter_value - 2.0 * r.single_value) <= 1e-3 * (1.0 + std::abs(r.two_letter_value)));
    CHECK(r.cross_norm <= 1e-3);

    // start from a strongly correlated joint covariance below diag(K, K)
    for (double lambda : {1.5, 2.0, 3.0}) {
      const PsdMatrix start{{0.9, 0.8}, {0.8, 0.9}};
      const TwoLetterReport c = two_letter_check(kScalar, PsdMatrix{{1}}, lambda, cfg, start);
      CHECK(c.cross_norm <= 1e-3);
      const OptResult run = v_lambda_from(kScalar.two_letter(), PsdMatrix::identity(2), lambda, start, cfg);
      CHECK(std::abs(run.k_opt(0, 1)) <= 1e-3);
    }
  }

  TEST_CASE("minimax_alpha on a scalar channel") {
    OptConfig cfg;
    cfg.seed = 5;
    const PsdMatrix k{{1}};
    const MinimaxResult m = minimax_alpha(kScalar, k, 3.0, 1.0, 1.0, cfg);
    CHECK(m.converged);
    for (double a : {0.0, 0.25, 0.5, 0.75, 1.0})
      CHECK(m.outer_value <= minimax_objective(kScalar, k, 3.0, 1.0, 1.0, a, cfg) + 1e-6);
    const oracle::AlphaGrid o = oracle::alpha_grid({{1.0, 0.5, 1.0}}, 3.0, 1.0, 1.0, 2000, 500);
    CHECK(std::abs(m.outer_value - o.value) <= 1e-4);
    const Matrix sum = m.split.kw.matrix() + m.split.k1.matrix() + m.split.k2.matrix();
    CHECK(std::abs(sum(0, 0) - 1.0) <= 1e-8);
  }

  TEST_CASE("minimax_alpha with identical receivers is flat in alpha") {
    OptConfig cfg;
    const ChannelPair same(Matrix{{0.8}}, Matrix{{0.8}});
    const double f0 = minimax_objective(same, PsdMatrix{{1}}, 3.0, 1.0, 1.0, 0.0, cfg);
    const double f1 = minimax_objective(same, PsdMatrix{{1}}, 3.0, 1.0, 1.0, 0.7, cfg);
    CHECK(f0 == doctest::Approx(f1).epsilon(1e-10));
    const MinimaxResult m = minimax_alpha(same, PsdMatrix{{1}}, 3.0, 1.0, 1.0, cfg);
    CHECK(m.outer_value == doctest::Approx(f0).epsilon(1e-10));
    CHECK_THROWS_AS(minimax_alpha(same, PsdMatrix{{1}}, 2.0, 1.0, 1.0, cfg), ParameterError);
  }
}
