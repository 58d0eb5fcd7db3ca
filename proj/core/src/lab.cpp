#include "gbc/lab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <string>

#include "gbc/envelope_opt.hpp"
#include "gbc/error.hpp"
#include "gbc/rng.hpp"

namespace gbc {

namespace {

constexpr double kMassTol = 1e-12;
constexpr double kOverflowTol = 1e-12;
constexpr double kMaxPanelWidth = 0.01;
constexpr double kNoiseReach = 8.0;

double noise_entropy() { return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Antiderivative of the unit hat max(0, 1 - |u|), equal to 0 at u = -1.
double hat_integral(double u) {
  u = std::clamp(u, -1.0, 1.0);
  return u < 0.0 ? 0.5 * (1.0 + u) * (1.0 + u) : 1.0 - 0.5 * (1.0 - u) * (1.0 - u);
}

std::size_t first_positive(const std::vector<double>& p) {
  return static_cast<std::size_t>(std::find_if(p.begin(), p.end(), [](double v) { return v > 0.0; }) - p.begin());
}

std::size_t last_positive(const std::vector<double>& p) {
  std::size_t i = p.size();
  while (i > 0 && !(p[i - 1] > 0.0)) --i;
  return i - 1;
}

// Adds `mass` at position y onto the hat basis of the grid (linear split).
void deposit_linear(std::vector<double>& probs, double x0, double dx, double y, double mass) {
  const double f = (y - x0) / dx;
  const double fl = std::floor(f);
  const double frac = f - fl;
  const auto i = static_cast<long>(fl);
  const long n = static_cast<long>(probs.size());
  if (i >= 0 && i < n) probs[static_cast<std::size_t>(i)] += mass * (1.0 - frac);
  if (i + 1 >= 0 && i + 1 < n) probs[static_cast<std::size_t>(i + 1)] += mass * frac;
}

GridDistribution centered(const GridDistribution& p) {
  const double m = p.mean();
  if (m == 0.0) return p;
  std::vector<double> out(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p.probs()[i] > 0.0) deposit_linear(out, p.x0(), p.dx(), p.x(i) - m, p.probs()[i]);
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  if (std::abs(1.0 - total) > kOverflowTol) throw ConfigError("centering moved mass off the grid; widen the grid");
  for (double& v : out) v /= total;
  return GridDistribution(p.x0(), p.dx(), std::move(out), true);
}

}  // namespace

std::size_t Grid::size() const {
  if (!(dx > 0.0) || !(half_width >= 0.0)) throw ConfigError("grid needs dx > 0 and half_width >= 0");
  return 2 * static_cast<std::size_t>(std::llround(half_width / dx)) + 1;
}

double Grid::x0() const { return -static_cast<double>((size() - 1) / 2) * dx; }

GridDistribution::GridDistribution(double x0, double dx, std::vector<double> probs, bool zero_mean)
    : x0_(x0), dx_(dx), probs_(std::move(probs)), zero_mean_(zero_mean) {
  if (!(dx_ > 0.0) || !std::isfinite(dx_) || !std::isfinite(x0_)) throw InputError("grid needs finite x0 and dx > 0");
  if (probs_.empty()) throw InputError("distribution has no support points");
  double total = 0.0;
  for (double v : probs_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("probabilities must be finite and nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > kMassTol) throw InputError("probabilities must sum to 1, got " + std::to_string(total));
}

GridDistribution GridDistribution::point_mass(const Grid& grid) {
  std::vector<double> p(grid.size(), 0.0);
  p[p.size() / 2] = 1.0;
  return GridDistribution(grid.x0(), grid.dx, std::move(p), true);
}

GridDistribution GridDistribution::rademacher(double a, const Grid& grid) {
  std::vector<double> p(grid.size(), 0.0);
  const double steps = a / grid.dx;
  const auto k = static_cast<std::size_t>(std::llround(steps));
  if (std::abs(steps - static_cast<double>(k)) > 1e-9 || k == 0 || k > p.size() / 2)
    throw InputError("rademacher amplitude must be a nonzero lattice point inside the grid");
  const std::size_t c = p.size() / 2;
  p[c - k] = 0.5;
  p[c + k] = 0.5;
  return GridDistribution(grid.x0(), grid.dx, std::move(p), true);
}

GridDistribution GridDistribution::uniform(double half_support, const Grid& grid) {
  std::vector<double> p(grid.size(), 0.0);
  const double x0 = grid.x0();
  std::size_t count = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (std::abs(x0 + static_cast<double>(i) * grid.dx) <= half_support + 1e-12) {
      p[i] = 1.0;
      ++count;
    }
  }
  if (count == 0) throw InputError("uniform support contains no lattice point");
  for (double& v : p) v /= static_cast<double>(count);
  return GridDistribution(x0, grid.dx, std::move(p), true);
}

GridDistribution GridDistribution::uniform_points(std::size_t n, const Grid& grid) {
  std::vector<double> p(grid.size(), 0.0);
  if (n == 0 || n > p.size()) throw InputError("uniform_points: n must be in [1, grid size]");
  const std::size_t start = p.size() / 2 - (n - 1) / 2;
  for (std::size_t i = 0; i < n; ++i) p[start + i] = 1.0 / static_cast<double>(n);
  return GridDistribution(grid.x0(), grid.dx, std::move(p), n % 2 == 1);
}

GridDistribution GridDistribution::discretized_gaussian(double variance, const Grid& grid, double mean) {
  if (!(variance > 0.0)) throw InputError("discretized_gaussian needs variance > 0");
  std::vector<double> p(grid.size(), 0.0);
  const double x0 = grid.x0();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = x0 + static_cast<double>(i) * grid.dx - mean;
    p[i] = std::exp(-d * d / (2.0 * variance));
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= total;
  return GridDistribution(x0, grid.dx, std::move(p), mean == 0.0);
}

double GridDistribution::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) m += probs_[i] * x(i);
  return m;
}

double GridDistribution::variance() const {
  const double m = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) v += probs_[i] * (x(i) - m) * (x(i) - m);
  return v;
}

double GridDistribution::second_moment() const {
  double v = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) v += probs_[i] * x(i) * x(i);
  return v;
}

GridDistribution GridDistribution::shifted(double offset) const {
  return GridDistribution(x0_ + offset, dx_, probs_, false);
}

double output_entropy(const GridDistribution& p, double gain, std::size_t max_panels) {
  if (!(gain != 0.0) || !std::isfinite(gain)) throw ParameterError("output_entropy needs a finite nonzero gain");
  std::vector<double> probs = p.probs();
  if (gain < 0.0) std::reverse(probs.begin(), probs.end());
  const double g = std::abs(gain);
  const std::size_t f = first_positive(probs);
  const std::size_t l = last_positive(probs);

  const double spacing = g * p.dx();
  const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(spacing / kMaxPanelWidth - 1e-9)));
  const double h = spacing / static_cast<double>(k);
  const double reach = std::ceil(kNoiseReach / h);
  const double span = static_cast<double>(l - f) * static_cast<double>(k) + 2.0 * reach;
  if (!(span + 1.0 < static_cast<double>(max_panels)))
    throw ConfigError("output_entropy: lattice spacing times gain too fine for the panel cap");
  const auto nl = static_cast<std::size_t>(reach);
  std::size_t nodes = (l - f) * k + 2 * nl + 1;
  if ((nodes - 1) % 2 == 1) ++nodes;

  std::vector<double> kernel(nl + 1);
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t m = 0; m <= nl; ++m) {
    const double z = static_cast<double>(m) * h;
    kernel[m] = norm * std::exp(-0.5 * z * z);
  }

  std::vector<double> dens(nodes, 0.0);
  for (std::size_t i = f; i <= l; ++i) {
    const double w = probs[i];
    if (!(w > 0.0)) continue;
    const std::size_t c = nl + (i - f) * k;
    double* out = dens.data() + (c - nl);
    for (std::size_t m = nl; m > 0; --m) *out++ += w * kernel[m];
    for (std::size_t m = 0; m <= nl; ++m) *out++ += w * kernel[m];
  }

  double acc = 0.0;
  for (std::size_t j = 0; j < nodes; ++j) {
    const double v = dens[j];
    if (!(v > 0.0)) continue;
    const double weight = (j == 0 || j + 1 == nodes) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    acc -= weight * v * std::log(v);
  }
  return acc * h / 3.0;
}

double s_lambda_discrete(const GridDistribution& p, double g1, double g2, double lambda) {
  if (!(lambda > 1.0)) throw ParameterError("s_lambda requires lambda > 1");
  const double base = noise_entropy();
  return (output_entropy(p, g1) - base) - lambda * (output_entropy(p, g2) - base);
}

std::vector<std::pair<double, double>> self_convolution_points(const GridDistribution& p) {
  const std::vector<double>& q = p.probs();
  const std::size_t n = q.size();
  std::vector<double> conv(2 * n - 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(q[i] > 0.0)) continue;
    for (std::size_t j = 0; j < n; ++j) conv[i + j] += q[i] * q[j];
  }
  std::vector<std::pair<double, double>> out;
  for (std::size_t m = 0; m < conv.size(); ++m)
    if (conv[m] > 0.0) out.emplace_back((2.0 * p.x0() + static_cast<double>(m) * p.dx()) / std::numbers::sqrt2, conv[m]);
  return out;
}

GridDistribution doubling_step(const GridDistribution& p_in) {
  const GridDistribution p = p_in.zero_mean() ? centered(p_in) : p_in;
  const double dx = p.dx();
  const double x0 = p.x0();
  const double width = dx / std::numbers::sqrt2;
  const long n = static_cast<long>(p.size());
  const std::vector<std::pair<double, double>> atoms = self_convolution_points(p);
  double mu = 0.0;
  for (const auto& [y, mass] : atoms) mu += mass * y;
  double target = 0.0;
  for (const auto& [y, mass] : atoms) target += mass * (y - mu) * (y - mu);

  // Deposits the atoms with positions contracted about mu by c.
  double lost = 0.0;
  const auto rebin = [&](double c) {
    std::vector<double> out(p.size(), 0.0);
    lost = 0.0;
    for (const auto& [y0, mass] : atoms) {
      const double y = mu + c * (y0 - mu);
      const double a = y - 0.5 * width;
      const double b = y + 0.5 * width;
      const auto j0 = static_cast<long>(std::floor((a - x0) / dx));
      for (long j = j0; j <= j0 + 2; ++j) {
        const double xj = x0 + static_cast<double>(j) * dx;
        const double share = (hat_integral((b - xj) / dx) - hat_integral((a - xj) / dx)) * dx / width;
        if (share <= 0.0) continue;
        if (j < 0 || j >= n) {
          lost += mass * share;
        } else {
          out[static_cast<std::size_t>(j)] += mass * share;
        }
      }
    }
    return out;
  };
  const auto spread = [&](const std::vector<double>& q) {
    double m1 = 0.0, m2 = 0.0;
    for (long j = 0; j < n; ++j) {
      const double d = x0 + static_cast<double>(j) * dx - mu;
      m1 += q[static_cast<std::size_t>(j)] * d;
      m2 += q[static_cast<std::size_t>(j)] * d * d;
    }
    return m2 - m1 * m1;
  };

  // The box and hat add a fixed O(dx^2) spread; contract the atoms so the
  // rebinned variance equals the exact one when that is attainable.
  std::vector<double> out = rebin(1.0);
  if (target > 0.0) {
    double c = 1.0;
    for (int it = 0; it < 30; ++it) {
      const double v = spread(out);
      if (std::abs(v - target) <= 1e-14 * target) break;
      const double excess = v - c * c * target;
      if (!(target - excess > 0.0)) {
        out = rebin(1.0);
        break;
      }
      c = std::sqrt((target - excess) / target);
      out = rebin(c);
    }
  }
  if (lost > kOverflowTol) throw ConfigError("doubling_step: mass left the grid; widen the grid extent");
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& v : out) v /= total;
  return GridDistribution(x0, dx, std::move(out), p.zero_mean());
}

double tv_to_gaussian(const GridDistribution& p) {
  const double m = p.mean();
  const double v = p.variance();
  std::vector<double> q(p.size(), 0.0);
  if (v > 0.0) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = p.x(i) - m;
      q[i] = std::exp(-d * d / (2.0 * v));
    }
  } else {
    deposit_linear(q, p.x0(), p.dx(), m, 1.0);
  }
  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p.probs()[i] - q[i] / total);
  return 0.5 * tv;
}

double sum_diff_mi(const GridDistribution& p) {
  const std::vector<double>& q = p.probs();
  const std::size_t f = first_positive(q);
  const std::size_t l = last_positive(q);
  const std::size_t n = l - f + 1;
  std::vector<double> sum(2 * n - 1, 0.0);
  std::vector<double> dif(2 * n - 1, 0.0);
  std::array<double, 2> parity{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double pi = q[f + i];
    if (!(pi > 0.0)) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = pi * q[f + j];
      if (!(w > 0.0)) continue;
      sum[i + j] += w;
      dif[i + n - 1 - j] += w;
      parity[(i + j) % 2] += w;
    }
  }
  double mi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pi = q[f + i];
    if (!(pi > 0.0)) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = pi * q[f + j];
      if (!(w > 0.0)) continue;
      mi += w * (std::log(w) + std::log(parity[(i + j) % 2]) - std::log(sum[i + j]) - std::log(dif[i + n - 1 - j]));
    }
  }
  return std::max(0.0, mi);
}

LabReport doubling_experiment(const GridDistribution& p0, double g1, double g2, double lambda, int n_steps) {
  if (n_steps < 0) throw ParameterError("n_steps must be nonnegative");
  if (!(lambda > 1.0)) throw ParameterError("doubling_experiment requires lambda > 1");
  LabReport rep;
  GridDistribution p = p0;
  for (int it = 0; it <= n_steps; ++it) {
    if (it > 0) p = doubling_step(p);
    rep.iterates.push_back(
        LabIterate{it, s_lambda_discrete(p, g1, g2, lambda), tv_to_gaussian(p), p.variance(), sum_diff_mi(p)});
  }
  const ChannelPair ch(Matrix{{g1}}, Matrix{{g2}});
  rep.envelope = v_lambda(ch, PsdMatrix{{p0.variance()}}, lambda, OptConfig{}).value;
  rep.final_gap = rep.envelope - rep.iterates.back().s_lambda;
  return rep;
}

namespace {

struct Shape {
  double v = 0.0;     // variance of each Gaussian piece
  double beta = 0.0;  // mass moved to the +-a pieces
  double a = 0.0;

  auto key() const { return std::array<double, 3>{v, beta, a}; }
};

GridDistribution discretize(const Shape& s, const Grid& grid) {
  std::vector<double> p(grid.size(), 0.0);
  const double x0 = grid.x0();
  const double dx = grid.dx;
  const std::array<std::pair<double, double>, 3> pieces{
      {{0.0, 1.0 - s.beta}, {s.a, 0.5 * s.beta}, {-s.a, 0.5 * s.beta}}};
  const double sigma = std::sqrt(s.v);
  for (const auto& [mu, w] : pieces) {
    if (!(w > 0.0)) continue;
    if (sigma < 1e-3 * dx) {
      deposit_linear(p, x0, dx, mu, w);
      continue;
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double xi = x0 + static_cast<double>(i) * dx;
      p[i] += w * (normal_cdf((xi + 0.5 * dx - mu) / sigma) - normal_cdf((xi - 0.5 * dx - mu) / sigma));
    }
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= total;
  return GridDistribution(x0, dx, std::move(p), true);
}

class MixtureSearch {
 public:
  MixtureSearch(double g1, double g2, double k, double lambda, int m, const EnvelopeConfig& cfg)
      : g1_(g1), g2_(g2), k_(k), lambda_(lambda), m_(static_cast<std::size_t>(m)), cfg_(cfg) {}

  struct Candidate {
    std::vector<double> weights;
    std::vector<Shape> shapes;
    double value = 0.0;
  };

  // theta per component: [sqrt v, beta, a, weight logit].
  Candidate decode(const std::vector<double>& theta) {
    Candidate c;
    double zmax = -1e300;
    for (std::size_t i = 0; i < m_; ++i) zmax = std::max(zmax, theta[4 * i + 3]);
    double zsum = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const double w = std::exp(theta[4 * i + 3] - zmax);
      c.weights.push_back(w);
      zsum += w;
      const double sv = theta[4 * i];
      c.shapes.push_back(Shape{sv * sv, std::clamp(theta[4 * i + 1], 0.0, 1.0), std::abs(theta[4 * i + 2])});
    }
    for (double& w : c.weights) w /= zsum;

    // Scale the spatial parameters until the realized mixture moment fits.
    for (int pass = 0; pass < 12; ++pass) {
      double moment = 0.0;
      for (std::size_t i = 0; i < m_; ++i) moment += c.weights[i] * law(c.shapes[i]).second_moment();
      if (moment <= k_) break;
      const double s = std::sqrt(k_ / moment) * (1.0 - 1e-9);
      for (Shape& sh : c.shapes) {
        sh.v *= s * s;
        sh.a *= s;
      }
    }
    c.value = 0.0;
    for (std::size_t i = 0; i < m_; ++i) c.value += c.weights[i] * s_value(c.shapes[i]);
    ++evaluations_;
    return c;
  }

  Candidate search(std::vector<double> theta) {
    Candidate best = decode(theta);
    double step = 0.5;
    int used = 1;
    while (step >= cfg_.min_step && used < cfg_.max_evaluations) {
      bool improved = false;
      for (std::size_t c = 0; c < theta.size() && used < cfg_.max_evaluations; ++c) {
        if (m_ == 1 && c == 3) continue;
        for (double dir : {1.0, -1.0}) {
          std::vector<double> trial = theta;
          trial[c] += dir * step;
          Candidate cand = decode(trial);
          ++used;
          if (cand.value > best.value + 1e-12) {
            best = std::move(cand);
            theta = std::move(trial);
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    return best;
  }

  const GridDistribution& law(const Shape& s) {
    auto it = laws_.find(s.key());
    if (it == laws_.end()) it = laws_.emplace(s.key(), discretize(s, cfg_.grid)).first;
    return it->second;
  }

  double s_value(const Shape& s) {
    auto it = values_.find(s.key());
    if (it == values_.end()) it = values_.emplace(s.key(), s_lambda_discrete(law(s), g1_, g2_, lambda_)).first;
    return it->second;
  }

  int evaluations() const { return evaluations_; }

 private:
  double g1_, g2_, k_, lambda_;
  std::size_t m_;
  EnvelopeConfig cfg_;
  std::map<std::array<double, 3>, GridDistribution> laws_;
  std::map<std::array<double, 3>, double> values_;
  int evaluations_ = 0;
};

}  // namespace

EnvelopeResult envelope_discrete(double g1, double g2, double k, double lambda, int m, const EnvelopeConfig& cfg) {
  if (m < 1) throw ParameterError("envelope_discrete needs m >= 1");
  if (!(k >= 0.0) || !std::isfinite(k)) throw ParameterError("variance bound must be finite and nonnegative");
  if (!(lambda > 1.0)) throw ParameterError("envelope_discrete requires lambda > 1");
  if (cfg.restarts < 1) throw ParameterError("envelope_discrete needs at least one restart");
  EnvelopeResult res;
  if (k == 0.0) {
    res.mixture.push_back(MixtureComponent{1.0, GridDistribution::point_mass(cfg.grid)});
    return res;
  }

  MixtureSearch search(g1, g2, k, lambda, m, cfg);
  const auto mz = static_cast<std::size_t>(m);
  std::vector<std::vector<double>> starts;
  if (cfg.initial_variance) {
    std::vector<double> theta(4 * mz, 0.0);
    theta[0] = std::sqrt(std::max(0.0, *cfg.initial_variance));
    for (std::size_t i = 1; i < mz; ++i) theta[4 * i + 3] = -20.0;
    starts.push_back(std::move(theta));
  }
  for (int r = 0; r < cfg.restarts; ++r) {
    Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(r)));
    std::vector<double> theta(4 * mz);
    for (std::size_t i = 0; i < mz; ++i) {
      theta[4 * i] = std::sqrt(rng.uniform(0.0, k));
      theta[4 * i + 1] = rng.uniform();
      theta[4 * i + 2] = rng.uniform(0.0, 2.0 * std::sqrt(k));
      theta[4 * i + 3] = rng.normal();
    }
    starts.push_back(std::move(theta));
  }

  bool have = false;
  MixtureSearch::Candidate best;
  for (const auto& theta : starts) {
    MixtureSearch::Candidate c = search.search(theta);
    if (!have || c.value > best.value) {
      best = std::move(c);
      have = true;
    }
  }
  res.evaluations = search.evaluations();
  if (best.value < 0.0) {
    res.mixture.push_back(MixtureComponent{1.0, GridDistribution::point_mass(cfg.grid)});
    return res;
  }
  res.value = best.value;
  for (std::size_t i = 0; i < mz; ++i) res.mixture.push_back(MixtureComponent{best.weights[i], search.law(best.shapes[i])});
  return res;
}

}  // namespace gbc
