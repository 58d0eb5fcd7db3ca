#include "gbc/envelope_opt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "gbc/error.hpp"
#include "gbc/parallel.hpp"
#include "gbc/rng.hpp"

namespace gbc {

namespace {

using Point = std::vector<Matrix>;

struct Problem {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
  std::function<Point(const Point&)> project;
};

struct Ascent {
  Point x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

double dot(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += frobenius_dot(a[i], b[i]);
  return s;
}

Point axpy(const Point& x, double t, const Point& d) {
  Point out = x;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += t * d[i];
  return out;
}

Point diff(const Point& a, const Point& b) {
  Point out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] -= b[i];
  return out;
}

// 1/2 logdet(I + G K G^T) without PSD validation, for the inner loop.
double half_logdet(const Matrix& g, const Matrix& k) {
  Matrix c = congruence(g, k);
  for (std::size_t i = 0; i < c.rows(); ++i) c(i, i) += 1.0;
  return 0.5 * logdet_spd(c);
}

// Spectral projected gradient ascent with nonmonotone-free Armijo backtracking.
Ascent projected_ascent(const Problem& p, const Point& x0, const OptConfig& cfg) {
  constexpr double kArmijo = 1e-4;
  constexpr double kStepMin = 1e-12;
  constexpr double kStepMax = 1e12;
  constexpr int kStallLimit = 30;

  Ascent a;
  a.x = p.project(x0);
  a.value = p.value(a.x);
  Point g = p.gradient(a.x);
  double step = cfg.step_init;
  int stall = 0;

  for (int it = 1; it <= cfg.max_iter; ++it) {
    a.iterations = it;
    const Point pg = diff(p.project(axpy(a.x, 1.0, g)), a.x);
    if (std::sqrt(dot(pg, pg)) <= cfg.tol_grad) {
      a.converged = true;
      break;
    }

    const Point d = diff(p.project(axpy(a.x, step, g)), a.x);
    const double slope = dot(g, d);
    if (!(slope > 0.0)) {
      step = cfg.step_init;
      if (++stall >= kStallLimit) {
        a.converged = true;
        break;
      }
      continue;
    }

    double t = 1.0;
    Point xn;
    double fn = 0.0;
    bool accepted = false;
    while (t >= 1e-20) {
      xn = axpy(a.x, t, d);
      fn = p.value(xn);
      if (std::isfinite(fn) && fn >= a.value + kArmijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      a.converged = true;  // no ascent direction resolvable at working precision
      break;
    }

    const Point gn = p.gradient(xn);
    const Point s = diff(xn, a.x);
    const Point y = diff(gn, g);
    const double sy = dot(s, y);
    const double ss = dot(s, s);
    step = sy < 0.0 ? std::clamp(ss / -sy, kStepMin, kStepMax) : kStepMax;

    const double change = fn - a.value;
    stall = change <= cfg.tol_obj * (1.0 + std::abs(a.value)) ? stall + 1 : 0;
    a.x = xn;
    a.value = fn;
    g = gn;
    if (stall >= kStallLimit) {
      a.converged = true;
      break;
    }
  }
  return a;
}

PsdMatrix as_psd(const Matrix& m) { return PsdMatrix(SymMatrix(m)); }

// Largest eigenvalue of a symmetric matrix.
double max_eig(const Matrix& m) { return sym_eigen(SymMatrix(m)).values.back(); }

// Projection of (M1, M2) onto {M1, M2 >= 0, M1 + M2 <= I}: Dykstra alternation
// followed by an exact feasibility repair.
Point project_pair(const Point& z) {
  constexpr int kMaxSweeps = 500;
  constexpr double kTol = 1e-14;
  const std::size_t r = z[0].rows();
  Point x = z;
  Point p{Matrix(r, r), Matrix(r, r)};
  Point q{Matrix(r, r), Matrix(r, r)};
  const auto proj_sum = [](const Point& v) {
    const Matrix s = v[0] + v[1];
    const Matrix excess = s - clip_spectrum(SymMatrix(s), -std::numeric_limits<double>::infinity(), 1.0).matrix();
    return Point{v[0] - 0.5 * excess, v[1] - 0.5 * excess};
  };
  const auto proj_psd = [](const Point& v) {
    const double inf = std::numeric_limits<double>::infinity();
    return Point{clip_spectrum(SymMatrix(v[0]), 0.0, inf).matrix(), clip_spectrum(SymMatrix(v[1]), 0.0, inf).matrix()};
  };
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const Point y = proj_sum(axpy(x, 1.0, p));
    p = diff(axpy(x, 1.0, p), y);
    const Point xn = proj_psd(axpy(y, 1.0, q));
    q = diff(axpy(y, 1.0, q), xn);
    const Point delta = diff(xn, x);
    x = xn;
    if (dot(delta, delta) <= kTol * kTol) break;
  }
  const double top = max_eig(x[0] + x[1]);
  if (top > 1.0) {
    x[0] *= 1.0 / top;
    x[1] *= 1.0 / top;
  }
  return x;
}

struct RangeSpace {
  Matrix f;   // t x r, F F^T = K
  Matrix ft;  // r x t
  std::size_t r = 0;
};

RangeSpace range_space(const PsdMatrix& k) {
  RangeSpace rs;
  rs.f = range_factor(k);
  rs.r = rs.f.cols();
  rs.ft = rs.f.transpose();
  return rs;
}

// Maps a t x t covariance K' into M with F M F^T ~ K' (least squares on the range).
Matrix to_m(const RangeSpace& rs, const Matrix& kp) {
  const Matrix fp = pinv_psd(SymMatrix(rs.ft * rs.f));  // (F^T F)^{-1}
  const Matrix l = fp * rs.ft;
  return SymMatrix(l * kp * l.transpose()).matrix();
}

Matrix random_unit_box(Rng& rng, std::size_t r) { return random_spectrum(rng, r, 0.0, 1.0); }

template <class Run>
std::vector<Ascent> run_starts(std::size_t n, Run&& run) {
  std::vector<Ascent> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = run(i); });
  return out;
}

std::size_t best_index(const std::vector<Ascent>& runs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (runs[i].value > runs[best].value) best = i;
  return best;
}

Problem s_problem(const ChannelPair& ch, const RangeSpace& rs, double lambda) {
  const Matrix a1 = ch.g1() * rs.f;
  const Matrix a2 = ch.g2() * rs.f;
  Problem p;
  p.value = [a1, a2, lambda](const Point& x) { return half_logdet(a1, x[0]) - lambda * half_logdet(a2, x[0]); };
  p.gradient = [a1, a2, lambda](const Point& x) {
    return Point{gauss_mi_gradient(a1, x[0]) - lambda * gauss_mi_gradient(a2, x[0])};
  };
  p.project = [](const Point& x) { return Point{clip_spectrum(SymMatrix(x[0]), 0.0, 1.0).matrix()}; };
  return p;
}

Problem t_problem(const ChannelPair& ch, const RangeSpace& rs, const LambdaWeights& w) {
  const Matrix a1 = ch.g1() * rs.f;
  const Matrix a2 = ch.g2() * rs.f;
  const double c1 = -w.lambda0 * w.alpha;
  const double c2 = -w.lambda0 * (1.0 - w.alpha) + w.lambda1 + w.lambda2;
  const double l1 = w.lambda1;
  const double l12 = w.lambda1 + w.lambda2;
  Problem p;
  p.value = [=](const Point& x) {
    const Matrix s = x[0] + x[1];
    return c1 * half_logdet(a1, s) + c2 * half_logdet(a2, s) + l1 * half_logdet(a1, x[0]) -
           l12 * half_logdet(a2, x[0]);
  };
  p.gradient = [=](const Point& x) {
    const Matrix s = x[0] + x[1];
    const Matrix common = c1 * gauss_mi_gradient(a1, s) + c2 * gauss_mi_gradient(a2, s);
    return Point{common + l1 * gauss_mi_gradient(a1, x[0]) - l12 * gauss_mi_gradient(a2, x[0]), common};
  };
  p.project = project_pair;
  return p;
}

OptResult zero_result(std::size_t t) {
  OptResult r;
  r.k_opt = PsdMatrix::zero(t);
  r.converged = true;
  r.restart_values = {0.0};
  r.restart_converged = {true};
  return r;
}

OptResult finish_single(const RangeSpace& rs, const std::vector<Ascent>& runs, std::size_t t) {
  OptResult r;
  std::size_t b = best_index(runs);
  for (const Ascent& a : runs) {
    r.restart_values.push_back(a.value);
    r.restart_converged.push_back(a.converged);
  }
  if (runs[b].value < 0.0) {
    // K' = 0 is feasible with value 0
    r.k_opt = PsdMatrix::zero(t);
    r.value = 0.0;
    r.converged = true;
    r.iterations = runs[b].iterations;
    return r;
  }
  r.k_opt = as_psd(congruence(rs.f, runs[b].x[0]));
  r.value = runs[b].value;
  r.iterations = runs[b].iterations;
  r.converged = runs[b].converged;
  return r;
}

void check_k(const ChannelPair& ch, const PsdMatrix& k) {
  if (k.dim() != ch.dim()) throw InputError("covariance dimension does not match the channel");
}

}  // namespace

void OptConfig::validate() const {
  if (!(tol_obj > 0.0)) throw ParameterError("tol_obj must be positive");
  if (!(tol_grad > 0.0)) throw ParameterError("tol_grad must be positive");
  if (max_iter < 1) throw ParameterError("max_iter must be at least 1");
  if (restarts < 1) throw ParameterError("restarts must be at least 1");
  if (!(step_init > 0.0)) throw ParameterError("step_init must be positive");
}

double v_point(const Matrix& g, const PsdMatrix& k) { return gauss_mi(g, k); }

OptResult v_lambda(const ChannelPair& ch, const PsdMatrix& k, double lambda, const OptConfig& cfg,
                   std::span<const PsdMatrix> warm_starts) {
  if (!(lambda > 1.0)) throw ParameterError("v_lambda requires lambda > 1");
  cfg.validate();
  check_k(ch, k);
  const RangeSpace rs = range_space(k);
  if (rs.r == 0) return zero_result(ch.dim());

  const Problem p = s_problem(ch, rs, lambda);
  const std::size_t n_seeded = static_cast<std::size_t>(cfg.restarts);
  const std::vector<Ascent> runs = run_starts(n_seeded + warm_starts.size(), [&](std::size_t i) {
    Matrix m0;
    if (i >= n_seeded) {
      m0 = to_m(rs, warm_starts[i - n_seeded]);
    } else if (i == 0) {
      m0 = 0.5 * Matrix::identity(rs.r);
    } else if (i == 1) {
      m0 = Matrix::identity(rs.r);
    } else if (i == 2) {
      m0 = 1e-3 * Matrix::identity(rs.r);
    } else {
      Rng rng(Rng::derive(cfg.seed, i));
      m0 = random_unit_box(rng, rs.r);
    }
    return projected_ascent(p, Point{m0}, cfg);
  });
  return finish_single(rs, runs, ch.dim());
}

OptResult v_lambda_from(const ChannelPair& ch, const PsdMatrix& k, double lambda, const PsdMatrix& start,
                        const OptConfig& cfg) {
  if (!(lambda > 1.0)) throw ParameterError("v_lambda requires lambda > 1");
  cfg.validate();
  check_k(ch, k);
  const RangeSpace rs = range_space(k);
  if (rs.r == 0) return zero_result(ch.dim());
  const Ascent a = projected_ascent(s_problem(ch, rs, lambda), Point{to_m(rs, start)}, cfg);
  OptResult r;
  r.k_opt = as_psd(congruence(rs.f, a.x[0]));
  r.value = a.value;
  r.iterations = a.iterations;
  r.converged = a.converged;
  r.restart_values = {a.value};
  r.restart_converged = {a.converged};
  return r;
}

SplitOptResult v_hat_lambda(const ChannelPair& ch, const PsdMatrix& k, const LambdaWeights& w,
                            const OptConfig& cfg, std::span<const GaussianSplit> warm_starts) {
  w.validate_common();
  cfg.validate();
  check_k(ch, k);
  const std::size_t t = ch.dim();
  const RangeSpace rs = range_space(k);
  SplitOptResult out;
  if (rs.r == 0) {
    out.k1 = PsdMatrix::zero(t);
    out.k2 = PsdMatrix::zero(t);
    out.converged = true;
    out.restart_values = {0.0};
    out.restart_converged = {true};
    return out;
  }

  const Problem p = t_problem(ch, rs, w);
  const std::size_t r = rs.r;
  const std::size_t n_seeded = static_cast<std::size_t>(cfg.restarts);
  const std::vector<Ascent> runs = run_starts(n_seeded + warm_starts.size(), [&](std::size_t i) {
    Point x0;
    const Matrix id = Matrix::identity(r);
    if (i >= n_seeded) {
      const GaussianSplit& s = warm_starts[i - n_seeded];
      x0 = {to_m(rs, s.k1), to_m(rs, s.k2)};
    } else if (i == 0) {
      x0 = {(1.0 / 3.0) * id, (1.0 / 3.0) * id};
    } else if (i == 1) {
      x0 = {0.5 * id, Matrix(r, r)};
    } else if (i == 2) {
      x0 = {Matrix(r, r), 0.5 * id};
    } else {
      Rng rng(Rng::derive(cfg.seed, i));
      const double share = rng.uniform();
      x0 = {share * random_unit_box(rng, r), (1.0 - share) * random_unit_box(rng, r)};
    }
    return projected_ascent(p, x0, cfg);
  });

  const std::size_t b = best_index(runs);
  for (const Ascent& a : runs) {
    out.restart_values.push_back(a.value);
    out.restart_converged.push_back(a.converged);
  }
  out.iterations = runs[b].iterations;
  if (runs[b].value < 0.0) {
    out.k1 = PsdMatrix::zero(t);
    out.k2 = PsdMatrix::zero(t);
    out.converged = true;
    return out;
  }
  out.k1 = as_psd(congruence(rs.f, runs[b].x[0]));
  out.k2 = as_psd(congruence(rs.f, runs[b].x[1]));
  out.value = runs[b].value;
  out.converged = runs[b].converged;
  return out;
}

TwoLetterReport two_letter_check(const ChannelPair& ch, const PsdMatrix& k, double lambda, const OptConfig& cfg,
                                 std::optional<PsdMatrix> initial_joint) {
  const ChannelPair ch2 = ch.two_letter();
  const PsdMatrix k2(block_diag(k.matrix(), k.matrix()));
  std::vector<PsdMatrix> warm;
  if (initial_joint) warm.push_back(*initial_joint);
  const OptResult joint = v_lambda(ch2, k2, lambda, cfg, warm);
  const OptResult single = v_lambda(ch, k, lambda, cfg);
  const std::size_t t = ch.dim();
  TwoLetterReport rep;
  rep.two_letter_value = joint.value;
  rep.single_value = single.value;
  rep.cross_norm = joint.k_opt.matrix().block(0, t, t, t).frobenius_norm();
  rep.converged = joint.converged && single.converged;
  rep.joint_opt = joint.k_opt;
  return rep;
}

double minimax_objective(const ChannelPair& ch, const PsdMatrix& k, double l0, double l1, double l2, double alpha,
                         const OptConfig& cfg) {
  const LambdaWeights w{l0, l1, l2, alpha};
  const SplitOptResult inner = v_hat_lambda(ch, k, w, cfg);
  return l0 * (alpha * gauss_mi(ch.g1(), k) + (1.0 - alpha) * gauss_mi(ch.g2(), k)) + inner.value;
}

MinimaxResult minimax_alpha(const ChannelPair& ch, const PsdMatrix& k, double l0, double l1, double l2,
                            const OptConfig& cfg) {
  LambdaWeights{l0, l1, l2, 0.5}.validate_common();
  cfg.validate();
  check_k(ch, k);
  const double i1 = gauss_mi(ch.g1(), k);
  const double i2 = gauss_mi(ch.g2(), k);

  struct Eval {
    double f;
    SplitOptResult inner;
  };
  std::map<double, Eval> evals;
  const auto evaluate = [&](double alpha) -> double {
    if (auto it = evals.find(alpha); it != evals.end()) return it->second.f;
    std::vector<GaussianSplit> warm;
    if (!evals.empty()) {
      auto hi = evals.lower_bound(alpha);
      auto nearest = hi;
      if (hi == evals.end() || (hi != evals.begin() && alpha - std::prev(hi)->first < hi->first - alpha))
        nearest = std::prev(hi);
      const SplitOptResult& s = nearest->second.inner;
      warm.push_back(GaussianSplit{PsdMatrix::zero(ch.dim()), s.k1, s.k2});
    }
    SplitOptResult inner = v_hat_lambda(ch, k, LambdaWeights{l0, l1, l2, alpha}, cfg, warm);
    const double f = l0 * (alpha * i1 + (1.0 - alpha) * i2) + inner.value;
    evals.emplace(alpha, Eval{f, std::move(inner)});
    return f;
  };

  constexpr int kIterations = 60;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  evaluate(0.0);
  evaluate(1.0);
  double a = 0.0;
  double b = 1.0;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = evaluate(c);
  double fd = evaluate(d);
  for (int i = 0; i < kIterations; ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = evaluate(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = evaluate(d);
    }
  }
  evaluate(0.5 * (a + b));

  auto best = evals.begin();
  for (auto it = evals.begin(); it != evals.end(); ++it)
    if (it->second.f < best->second.f) best = it;

  MinimaxResult res;
  res.alpha_star = best->first;
  res.outer_value = best->second.f;
  const SplitOptResult& s = best->second.inner;
  res.split.k1 = s.k1;
  res.split.k2 = s.k2;
  res.split.kw = PsdMatrix(k.matrix() - s.k1.matrix() - s.k2.matrix());
  res.evaluations = static_cast<int>(evals.size());
  res.converged = true;
  for (const auto& [alpha, e] : evals) res.converged = res.converged && e.inner.converged;
  return res;
}

namespace {

Matrix random_symmetric(Rng& rng, std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = rng.normal();
  return m;
}

template <class F, class G>
double fd_check(const Point& x, F&& f, G&& grad, std::uint64_t seed, int probes) {
  constexpr double h = 1e-5;
  const Point g = grad(x);
  Rng rng(seed);
  double worst = 0.0;
  for (int k = 0; k < probes; ++k) {
    Point dir;
    for (const Matrix& m : x) dir.push_back(random_symmetric(rng, m.rows()));
    const double analytic = dot(g, dir);
    const double numeric = (f(axpy(x, h, dir)) - f(axpy(x, -h, dir))) / (2.0 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  }
  return worst;
}

}  // namespace

double s_lambda_gradient_check(const ChannelPair& ch, const PsdMatrix& k_prime, double lambda, std::uint64_t seed,
                               int probes) {
  check_k(ch, k_prime);
  RangeSpace id;
  id.f = Matrix::identity(ch.dim());
  id.ft = id.f;
  id.r = ch.dim();
  const Problem p = s_problem(ch, id, lambda);
  return fd_check(Point{k_prime.matrix()}, p.value, p.gradient, seed, probes);
}

double t_lambda_gradient_check(const ChannelPair& ch, const PsdMatrix& k1, const PsdMatrix& k2,
                               const LambdaWeights& w, std::uint64_t seed, int probes) {
  w.validate_common();
  check_k(ch, k1);
  check_k(ch, k2);
  RangeSpace id;
  id.f = Matrix::identity(ch.dim());
  id.ft = id.f;
  id.r = ch.dim();
  const Problem p = t_problem(ch, id, w);
  return fd_check(Point{k1.matrix(), k2.matrix()}, p.value, p.gradient, seed, probes);
}

}  // namespace gbc
