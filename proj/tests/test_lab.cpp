#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "gbc/envelope_opt.hpp"
#include "gbc/error.hpp"
#include "gbc/lab.hpp"
#include "gbc/rates.hpp"
#include "oracles.hpp"

using namespace gbc;

namespace {

const double kNoise = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

double scalar_v_lambda(double g1, double g2, double k, double lambda) {
  OptConfig cfg;
  return v_lambda(ChannelPair(Matrix{{g1}}, Matrix{{g2}}), PsdMatrix{{k}}, lambda, cfg).value;
}

}  // namespace

TEST_SUITE("lab") {
  TEST_CASE("grid distributions") {
    const Grid grid;
    CHECK(grid.size() == 481);
    CHECK(grid.x0() == doctest::Approx(-12.0));
    const GridDistribution pm = GridDistribution::point_mass();
    CHECK(pm.mean() == 0.0);
    CHECK(pm.variance() == 0.0);
    const GridDistribution r = GridDistribution::rademacher();
    CHECK(r.mean() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(r.variance() == doctest::Approx(1.0));
    const GridDistribution u = GridDistribution::uniform_points(3, Grid{12.0, 0.1});
    CHECK(u.variance() == doctest::Approx(2.0 * 0.01 / 3.0));
    const GridDistribution g = GridDistribution::discretized_gaussian(1.0);
    CHECK(g.variance() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(g.shifted(0.5).mean() == doctest::Approx(0.5));
    CHECK_THROWS_AS(GridDistribution(0.0, 0.1, {0.5, 0.4}), InputError);
    CHECK_THROWS_AS(GridDistribution(0.0, 0.1, {1.5, -0.5}), InputError);
    CHECK_THROWS_AS(GridDistribution(0.0, 0.0, {1.0}), InputError);
    CHECK_THROWS_AS(GridDistribution::rademacher(0.33), InputError);
  }

  TEST_CASE("output entropy examples") {
    CHECK(output_entropy(GridDistribution::point_mass(), 1.0) == doctest::Approx(kNoise).epsilon(1e-10));
    CHECK(kNoise == doctest::Approx(1.41894).epsilon(1e-5));

    const GridDistribution g = GridDistribution::discretized_gaussian(1.0, Grid{8.0, 0.01});
    CHECK(std::abs(output_entropy(g, 1.0) - oracle::gaussian_entropy(2.0)) <= 1e-4);

    const double ref = oracle::entropy_quadrature({-1.0, 1.0}, {0.5, 0.5}, 1.0, 0.005 / 10.0);
    CHECK(std::abs(output_entropy(GridDistribution::rademacher(), 1.0) - ref) <= 1e-8);
    const double ref2 = oracle::entropy_quadrature({-1.0, 1.0}, {0.5, 0.5}, 2.5, 0.0005);
    CHECK(std::abs(output_entropy(GridDistribution::rademacher(), 2.5) - ref2) <= 1e-8);
    CHECK_THROWS_AS(output_entropy(GridDistribution::point_mass(), 0.0), ParameterError);
  }

  TEST_CASE("output entropy is translation invariant and above the noise floor") {
    for (const GridDistribution& p : {GridDistribution::rademacher(), GridDistribution::uniform(std::sqrt(3.0)),
                                      GridDistribution::uniform_points(3), GridDistribution::discretized_gaussian(0.4)}) {
      const double h = output_entropy(p, 1.0);
      CHECK(h >= kNoise - 1e-6);
      for (double off : {0.05, 0.37, -2.013})
        CHECK(std::abs(output_entropy(p.shifted(off), 1.0) - h) <= 1e-9);
      CHECK(output_entropy(p, 0.5) >= kNoise - 1e-6);
    }
  }

  TEST_CASE("s_lambda_discrete") {
    CHECK(s_lambda_discrete(GridDistribution::point_mass(), 1.0, 0.5, 2.0) == doctest::Approx(0.0).epsilon(1e-12));
    const ChannelPair ch(Matrix{{1}}, Matrix{{0.5}});
    for (double var : {0.25, 0.6, 1.0}) {
      const GridDistribution g = GridDistribution::discretized_gaussian(var);
      for (double lambda : {1.5, 2.0, 3.0}) {
        const double exact = s_lambda_gauss(ch, PsdMatrix{{g.variance()}}, lambda);
        CHECK(std::abs(s_lambda_discrete(g, 1.0, 0.5, lambda) - exact) <= 2e-4);
      }
    }
    const double v = scalar_v_lambda(1.0, 0.5, 1.0, 2.0);
    const double c = c_lambda_bound(ch, 2.0).c_lambda;
    for (const GridDistribution& p : {GridDistribution::rademacher(), GridDistribution::uniform(std::sqrt(3.0)),
                                      GridDistribution::uniform_points(7), GridDistribution::discretized_gaussian(0.8)}) {
      REQUIRE(p.variance() <= 1.0 + 1e-12);
      const double s = s_lambda_discrete(p, 1.0, 0.5, 2.0);
      CHECK(s <= v + 1e-3);
      CHECK(s <= c + 1e-3);
    }
    CHECK_THROWS_AS(s_lambda_discrete(GridDistribution::point_mass(), 1.0, 0.5, 1.0), ParameterError);
  }

  TEST_CASE("self convolution of the Rademacher law") {
    const auto pts = self_convolution_points(GridDistribution::rademacher());
    REQUIRE(pts.size() == 3);
    const double r2 = std::sqrt(2.0);
    CHECK(pts[0].first == doctest::Approx(-r2));
    CHECK(pts[1].first == doctest::Approx(0.0));
    CHECK(pts[2].first == doctest::Approx(r2));
    CHECK(pts[0].second == doctest::Approx(0.25));
    CHECK(pts[1].second == doctest::Approx(0.5));
    CHECK(pts[2].second == doctest::Approx(0.25));
  }

  TEST_CASE("doubling step moments and fixed point") {
    const GridDistribution g = GridDistribution::discretized_gaussian(1.0);
    CHECK(tv_to_gaussian(g) <= 1e-12);
    CHECK(tv_to_gaussian(doubling_step(g)) <= 1e-3);

    const GridDistribution u = GridDistribution::uniform_points(11, Grid{12.0, 0.1});
    const GridDistribution d = doubling_step(u);
    CHECK(std::abs(d.mean() - u.mean()) <= 1e-9);
    CHECK(std::abs(d.variance() - u.variance()) <= 1e-3 * u.variance());
    CHECK(std::abs(doubling_step(d).variance() - u.variance()) <= 1e-3 * u.variance());

    for (const GridDistribution& p : {GridDistribution::rademacher(), GridDistribution::uniform(std::sqrt(3.0))}) {
      const GridDistribution q = doubling_step(p);
      CHECK(std::abs(q.mean() - p.mean()) <= 1e-9);
      CHECK(std::abs(q.variance() - p.variance()) <= 1e-3 * p.variance());
    }
    CHECK_THROWS_AS(doubling_step(GridDistribution::rademacher(12.0)), ConfigError);
  }

  TEST_CASE("doubling experiment") {
    const double v = scalar_v_lambda(1.0, 0.5, 1.0, 2.0);

    const LabReport gauss = doubling_experiment(GridDistribution::discretized_gaussian(1.0), 1.0, 0.5, 2.0, 8);
    REQUIRE(gauss.iterates.size() == 9);
    for (const LabIterate& it : gauss.iterates) CHECK(it.tv <= 2e-3);

    const LabReport uni = doubling_experiment(GridDistribution::uniform(std::sqrt(3.0)), 1.0, 0.5, 2.0, 8);
    REQUIRE(uni.iterates.size() == 9);
    CHECK(uni.iterates.back().tv <= 2e-2);
    CHECK(std::abs(uni.envelope - scalar_v_lambda(1.0, 0.5, uni.iterates.front().variance, 2.0)) <= 1e-9);
    for (std::size_t i = 0; i < uni.iterates.size(); ++i) {
      const LabIterate& it = uni.iterates[i];
      CHECK(it.iteration == static_cast<int>(i));
      CHECK(it.s_lambda <= v + 1e-3);
      CHECK(std::abs(it.variance - uni.iterates.front().variance) <= 5e-3);
      if (i == 0) continue;
      CHECK(it.tv <= uni.iterates[i - 1].tv + 1e-3);
      CHECK(it.sum_diff_mi <= uni.iterates[i - 1].sum_diff_mi + 1e-3);
    }
    CHECK(uni.final_gap == doctest::Approx(uni.envelope - uni.iterates.back().s_lambda));
    CHECK_THROWS_AS(doubling_experiment(GridDistribution::point_mass(), 1.0, 0.5, 2.0, -1), ParameterError);
  }

  TEST_CASE("sum/difference mutual information") {
    CHECK(sum_diff_mi(GridDistribution::rademacher()) == doctest::Approx(std::log(2.0)).epsilon(1e-13));
    CHECK(sum_diff_mi(GridDistribution::point_mass()) == 0.0);
    CHECK(sum_diff_mi(GridDistribution::discretized_gaussian(1.0, Grid{12.0, 0.05})) <= 5e-3);
    const Grid coarse{12.0, 0.1};
    CHECK(sum_diff_mi(GridDistribution::uniform_points(3, coarse)) > 1e-2);
    CHECK(sum_diff_mi(GridDistribution::uniform_points(5, coarse)) > 1e-2);
    CHECK(sum_diff_mi(GridDistribution(-0.1, 0.1, {0.2, 0.5, 0.3})) > 1e-2);
    CHECK(sum_diff_mi(GridDistribution::rademacher(1.0, coarse)) > 1e-2);
    CHECK(sum_diff_mi(GridDistribution::uniform(1.0, coarse)) > 1e-2);
    CHECK(sum_diff_mi(GridDistribution(0.0, 0.1, {0.7, 0.0, 0.3})) > 1e-2);
  }

  TEST_CASE("mixture envelope") {
    EnvelopeConfig cfg;
    const EnvelopeResult zero = envelope_discrete(1.0, 0.5, 0.0, 2.0, 2, cfg);
    CHECK(zero.value == 0.0);
    REQUIRE(zero.mixture.size() == 1);
    CHECK(zero.mixture[0].law.variance() == 0.0);

    // optimum of the Gaussian problem at lambda = 1.2 is interior-free: K' = K
    const double v = scalar_v_lambda(1.0, 0.5, 1.0, 1.2);
    cfg.initial_variance = 1.0;
    cfg.seed = 1;
    const EnvelopeResult one = envelope_discrete(1.0, 0.5, 1.0, 1.2, 1, cfg);
    CHECK(std::abs(one.value - v) <= 1e-2);
    CHECK(one.value <= v + 1e-2);

    EnvelopeConfig mix;
    const double v2 = scalar_v_lambda(1.0, 0.5, 1.0, 2.0);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      mix.seed = seed;
      const EnvelopeResult r = envelope_discrete(1.0, 0.5, 1.0, 2.0, 2, mix);
      CHECK(r.value <= v2 + 1e-2);
      CHECK(r.mixture.size() <= 2);
      double w = 0.0, m2 = 0.0;
      for (const MixtureComponent& c : r.mixture) {
        w += c.weight;
        m2 += c.weight * c.law.second_moment();
      }
      CHECK(w == doctest::Approx(1.0));
      CHECK(m2 <= 1.0 + 1e-9);
    }
    CHECK_THROWS_AS(envelope_discrete(1.0, 0.5, 1.0, 2.0, 0, mix), ParameterError);
  }
}
