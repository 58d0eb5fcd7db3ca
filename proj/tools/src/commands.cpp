#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gbc/envelope_opt.hpp"
#include "gbc/error.hpp"
#include "gbc/lab.hpp"
#include "gbc/parallel.hpp"
#include "gbc/region.hpp"
#include "gbc/rng.hpp"
#include "gbc_cli/cli.hpp"

namespace gbc::cli {

namespace {

using nlohmann::json;

struct Globals {
  std::string spec_path;
  std::uint64_t seed = 0;
  bool bits = false;
  bool plot = false;
  std::string out_dir = ".";
  int restarts = 8;
  int max_iter = 5000;
  std::size_t threads = 0;
  CLI::Option* seed_opt = nullptr;
};

struct Run {
  Globals g;
  std::ostream* out = nullptr;
  bool flagged = false;  // some result did not converge

  double u(double nats) const { return g.bits ? nats / std::numbers::ln2 : nats; }

  OptConfig opt() const {
    OptConfig c;
    c.restarts = g.restarts;
    c.max_iter = g.max_iter;
    c.seed = g.seed;
    return c;
  }

  void require_seed(const std::string& cmd) const {
    if (g.seed_opt->count() == 0) throw CliError(kUsage, cmd + ": --seed is required (stochastic command)");
  }

  ChannelSpecFile spec(const std::string& cmd) const {
    if (g.spec_path.empty()) throw CliError(kUsage, cmd + ": --spec is required");
    return parse_spec(g.spec_path);
  }

  Manifest manifest(const std::string& cmd, const ChannelSpecFile* s, bool seeded, json options) const {
    Manifest m;
    m.command = cmd;
    if (s != nullptr) m.spec_hash = sha256_hex(s->canonical.dump());
    if (seeded) m.seed = g.seed;
    m.unit = g.bits ? "bits" : "nats";
    options["restarts"] = g.restarts;
    options["max_iter"] = g.max_iter;
    m.options = std::move(options);
    return m;
  }

  void emit(const OutputBundle& b, const Manifest& m) {
    write_outputs(g.out_dir, b, m, g.plot);
    *out << b.stem << ": " << b.table.rows() << " rows -> " << (std::filesystem::path(g.out_dir) / (b.stem + ".csv")).string()
         << "\n";
  }
};

std::vector<LambdaWeights> parse_weights(const std::string& text) {
  const Matrix rows = parse_matrix(text);
  if (rows.cols() != 3) throw CliError(kUsage, "--weights needs triples l0,l1,l2 separated by ';'");
  std::vector<LambdaWeights> out;
  for (std::size_t i = 0; i < rows.rows(); ++i) out.push_back(LambdaWeights{rows(i, 0), rows(i, 1), rows(i, 2), 0.5});
  return out;
}

PsdMatrix psd_flag(const std::string& text, std::size_t t, const char* name) {
  const Matrix m = parse_matrix(text);
  if (m.rows() != t || m.cols() != t) throw CliError(kUsage, std::string(name) + " must be t x t");
  try {
    return PsdMatrix(m);
  } catch (const InputError& e) {
    throw CliError(kUsage, std::string(name) + ": " + e.what());
  }
}

// ---- rates -----------------------------------------------------------------

struct RatesArgs {
  std::string kprime;
  double lambda = 2.0;
  std::string k1;
  std::string k2;
  std::string weights;
  double alpha = 0.5;
};

void cmd_rates(Run& run, const RatesArgs& a) {
  const ChannelSpecFile s = run.spec("rates");
  const ChannelPair ch = s.channel();
  const PsdMatrix kp = a.kprime.empty() ? s.k : psd_flag(a.kprime, s.t, "--kprime");
  OutputBundle b{"rates", CsvTable({"quantity", "value"})};
  const auto row = [&](const char* name, double v) {
    b.table.add_row({name, cell(run.u(v))});
    b.summary[name] = run.u(v);
  };
  row("I1_K", gauss_mi(ch.g1(), s.k));
  row("I2_K", gauss_mi(ch.g2(), s.k));
  row("I1_kprime", gauss_mi(ch.g1(), kp));
  row("I2_kprime", gauss_mi(ch.g2(), kp));
  json options{{"kprime", a.kprime}, {"lambda", a.lambda}};
  if (a.lambda > 1.0) {
    row("s_lambda_kprime", s_lambda_gauss(ch, kp, a.lambda));
    row("c_lambda", c_lambda_bound(ch, a.lambda).c_lambda);
  }
  if (!a.weights.empty()) {
    const std::vector<LambdaWeights> ws = parse_weights(a.weights);
    if (ws.size() != 1) throw CliError(kUsage, "rates: --weights takes a single triple");
    LambdaWeights w = ws.front();
    w.alpha = a.alpha;
    const PsdMatrix k1 = a.k1.empty() ? PsdMatrix::zero(s.t) : psd_flag(a.k1, s.t, "--k1");
    const PsdMatrix k2 = a.k2.empty() ? PsdMatrix::zero(s.t) : psd_flag(a.k2, s.t, "--k2");
    row("t_lambda", t_lambda_gauss(ch, k1, k2, w));
    options["weights"] = a.weights;
    options["alpha"] = a.alpha;
    options["k1"] = a.k1;
    options["k2"] = a.k2;
  }
  run.emit(b, run.manifest("rates", &s, false, options));
}

// ---- regions ---------------------------------------------------------------

void cmd_region_private(Run& run, const std::string& lambdas_text, bool swap) {
  run.require_seed("region-private");
  const ChannelSpecFile s = run.spec("region-private");
  TraceConfig tc;
  tc.lambda_grid = parse_list(lambdas_text);
  tc.swap_roles = swap;
  tc.opt = run.opt();
  const std::vector<RatePoint> pts = trace(s.channel(), s.k, tc);

  OutputBundle b{"region_private", CsvTable({"lambda", "R1", "R2", "value", "converged"})};
  double max_residual = 0.0;
  int failed = 0;
  for (const RatePoint& p : pts) {
    const bool ok = p.error.empty() && p.converged;
    if (!ok) run.flagged = true;
    if (!p.error.empty()) {
      ++failed;
      b.table.add_row({cell(p.lambda), "nan", "nan", "nan", cell(false)});
      continue;
    }
    max_residual = std::max(max_residual, std::abs(p.weighted_sum() - p.value));
    b.table.add_row({cell(p.lambda), cell(run.u(p.r1)), cell(run.u(p.r2)), cell(run.u(p.value)), cell(ok)});
  }
  b.summary = {{"points", pts.size()},
               {"failed", failed},
               {"hyperplane_violations", hyperplane_self_check(pts).size()},
               {"max_weighted_sum_residual", run.u(max_residual)}};
  b.plot_x = "R1";
  b.plot_y = {"R2"};
  run.emit(b, run.manifest("region-private", &s, true, json{{"lambdas", lambdas_text}, {"swap", swap}}));
}

void cmd_region_common(Run& run, const std::string& weights_text, bool swap) {
  run.require_seed("region-common");
  const ChannelSpecFile s = run.spec("region-common");
  TraceConfig tc;
  tc.weight_grid = parse_weights(weights_text);
  for (const LambdaWeights& w : tc.weight_grid) {
    try {
      w.validate_common();
    } catch (const ParameterError& e) {
      throw CliError(kUsage, std::string("--weights: ") + e.what());
    }
  }
  tc.swap_roles = swap;
  tc.opt = run.opt();
  const std::vector<RatePoint> pts = trace(s.channel(), s.k, tc);

  OutputBundle b{"region_common",
                 CsvTable({"l0", "l1", "l2", "alpha_star", "R0", "R1", "R2", "value", "converged"})};
  double max_residual = 0.0;
  int failed = 0;
  int balanced = 0;
  for (const RatePoint& p : pts) {
    const bool ok = p.error.empty() && p.converged;
    if (!ok) run.flagged = true;
    const LambdaWeights& w = p.weights;
    if (!p.error.empty()) {
      ++failed;
      b.table.add_row({cell(w.lambda0), cell(w.lambda1), cell(w.lambda2), "nan", "nan", "nan", "nan", "nan", cell(false)});
      continue;
    }
    if (p.balanced) ++balanced;
    max_residual = std::max(max_residual, std::abs(p.weighted_sum() - p.value));
    b.table.add_row({cell(w.lambda0), cell(w.lambda1), cell(w.lambda2), cell(w.alpha), cell(run.u(p.r0)),
                     cell(run.u(p.r1)), cell(run.u(p.r2)), cell(run.u(p.value)), cell(ok)});
  }
  b.summary = {{"points", pts.size()},
               {"failed", failed},
               {"balanced", balanced},
               {"hyperplane_violations", hyperplane_self_check(pts).size()},
               {"max_weighted_sum_residual", run.u(max_residual)}};
  b.plot_x = "R1";
  b.plot_y = {"R0", "R2"};
  run.emit(b, run.manifest("region-common", &s, true, json{{"weights", weights_text}, {"swap", swap}}));
}

// ---- verify ----------------------------------------------------------------

struct VerifyArgs {
  int trials = 100;
  std::string lambdas = "2";
  std::string weights = "3,1,1";
};

Matrix random_joint(Rng& rng, std::size_t t) { return random_psd(rng, 2 * t, rng.uniform(0.1, 3.0)); }

void cmd_verify_dpc(Run& run, const VerifyArgs& a) {
  run.require_seed("verify dpc");
  std::optional<ChannelSpecFile> s;
  if (!run.g.spec_path.empty()) s = run.spec("verify dpc");
  OutputBundle b{"verify_dpc", CsvTable({"trial", "t", "lhs", "rhs", "residual"})};
  double worst = 0.0;
  for (int i = 0; i < a.trials; ++i) {
    Rng rng(Rng::derive(run.g.seed, static_cast<std::uint64_t>(i)));
    Matrix g;
    if (s) {
      g = i % 2 == 0 ? s->g1 : s->g2;
    } else {
      g = random_gain(rng, 1 + rng.next() % 4);
    }
    const std::size_t t = g.rows();
    const PsdMatrix kp(random_psd(rng, t, rng.uniform(0.1, 3.0)));
    const PsdMatrix kv(random_psd(rng, t, rng.uniform(0.1, 3.0)));
    const IdentityPair r = dpc_identity_check(g, dpc_matrix(g, kp, kv));
    const double res = std::abs(r.lhs - r.rhs);
    worst = std::max(worst, res);
    b.table.add_row({cell(static_cast<long long>(i)), cell(static_cast<long long>(t)), cell(run.u(r.lhs)),
                     cell(run.u(r.rhs)), cell(run.u(res))});
  }
  b.summary = {{"trials", a.trials}, {"max_residual", run.u(worst)}};
  run.emit(b, run.manifest("verify dpc", s ? &*s : nullptr, true, json{{"trials", a.trials}}));
}

void cmd_verify_rotation(Run& run, const VerifyArgs& a, bool product) {
  const std::string name = product ? "verify product-mi" : "verify rotation";
  run.require_seed(name);
  const ChannelSpecFile s = run.spec(name);
  OutputBundle b{product ? "verify_product_mi" : "verify_rotation",
                 product ? CsvTable({"trial", "receiver", "joint", "sum_marginals", "cross", "residual"})
                         : CsvTable({"trial", "receiver", "original", "rotated", "residual"})};
  double worst = 0.0;
  for (int i = 0; i < a.trials; ++i) {
    Rng rng(Rng::derive(run.g.seed, static_cast<std::uint64_t>(i)));
    const int receiver = 1 + i % 2;
    const Matrix& g = receiver == 1 ? s.g1 : s.g2;
    const PsdMatrix joint(random_joint(rng, s.t));
    const auto id = static_cast<long long>(i);
    if (product) {
      const ProductMiTerms r = product_mi_identity(g, joint);
      const double res = std::abs(r.joint - (r.sum_marginals - r.cross));
      worst = std::max(worst, res);
      b.table.add_row({cell(id), cell(static_cast<long long>(receiver)), cell(run.u(r.joint)),
                       cell(run.u(r.sum_marginals)), cell(run.u(r.cross)), cell(run.u(res))});
    } else {
      const RotationTerms r = rotation_check(g, joint);
      const double res = std::abs(r.original - r.rotated);
      worst = std::max(worst, res);
      b.table.add_row({cell(id), cell(static_cast<long long>(receiver)), cell(run.u(r.original)),
                       cell(run.u(r.rotated)), cell(run.u(res))});
    }
  }
  b.summary = {{"trials", a.trials}, {"max_residual", run.u(worst)}};
  run.emit(b, run.manifest(name, &s, true, json{{"trials", a.trials}}));
}

void cmd_verify_bound(Run& run, const VerifyArgs& a) {
  run.require_seed("verify bound");
  const ChannelSpecFile s = run.spec("verify bound");
  const ChannelPair ch = s.channel();
  OutputBundle b{"verify_bound", CsvTable({"trial", "lambda", "s_lambda", "c_lambda", "slack"})};
  double min_slack = std::numeric_limits<double>::infinity();
  for (int i = 0; i < a.trials; ++i) {
    Rng rng(Rng::derive(run.g.seed, static_cast<std::uint64_t>(i)));
    const double lambda = 1.0 + rng.uniform(1e-3, 9.0);
    const PsdMatrix kp(random_psd(rng, s.t, rng.uniform(0.01, 20.0)));
    const double sv = s_lambda_gauss(ch, kp, lambda);
    const double c = c_lambda_bound(ch, lambda).c_lambda;
    min_slack = std::min(min_slack, c - sv);
    b.table.add_row({cell(static_cast<long long>(i)), cell(lambda), cell(run.u(sv)), cell(run.u(c)), cell(run.u(c - sv))});
  }
  b.summary = {{"trials", a.trials}, {"min_slack", run.u(min_slack)}, {"violations", min_slack < -1e-9 ? 1 : 0}};
  run.emit(b, run.manifest("verify bound", &s, true, json{{"trials", a.trials}}));
}

void cmd_verify_two_letter(Run& run, const VerifyArgs& a) {
  run.require_seed("verify two-letter");
  const ChannelSpecFile s = run.spec("verify two-letter");
  OutputBundle b{"verify_two_letter",
                 CsvTable({"lambda", "two_letter_value", "single_value", "gap", "cross_norm", "converged"})};
  double worst_gap = 0.0;
  double worst_cross = 0.0;
  for (double lambda : parse_list(a.lambdas)) {
    if (!(lambda > 1.0)) throw CliError(kUsage, "verify two-letter: lambdas must exceed 1");
    const TwoLetterReport r = two_letter_check(s.channel(), s.k, lambda, run.opt());
    if (!r.converged) run.flagged = true;
    const double gap = r.two_letter_value - 2.0 * r.single_value;
    worst_gap = std::max(worst_gap, std::abs(gap));
    worst_cross = std::max(worst_cross, r.cross_norm);
    b.table.add_row({cell(lambda), cell(run.u(r.two_letter_value)), cell(run.u(r.single_value)), cell(run.u(gap)),
                     cell(r.cross_norm), cell(r.converged)});
  }
  b.summary = {{"max_abs_gap", run.u(worst_gap)}, {"max_cross_norm", worst_cross}};
  run.emit(b, run.manifest("verify two-letter", &s, true, json{{"lambdas", a.lambdas}}));
}

void cmd_verify_minimax(Run& run, const VerifyArgs& a) {
  run.require_seed("verify minimax");
  const ChannelSpecFile s = run.spec("verify minimax");
  const ChannelPair ch = s.channel();
  OutputBundle b{"verify_minimax", CsvTable({"l0", "l1", "l2", "alpha_star", "outer_value", "weighted_sum",
                                             "residual", "converged"})};
  double worst = 0.0;
  for (const LambdaWeights& w : parse_weights(a.weights)) {
    try {
      w.validate_common();
    } catch (const ParameterError& e) {
      throw CliError(kUsage, std::string("--weights: ") + e.what());
    }
    const RatePoint p = common_point(ch, s.k, w.lambda0, w.lambda1, w.lambda2, run.opt());
    if (!p.converged) run.flagged = true;
    const double res = std::abs(p.weighted_sum() - p.value);
    worst = std::max(worst, res);
    b.table.add_row({cell(w.lambda0), cell(w.lambda1), cell(w.lambda2), cell(p.weights.alpha), cell(run.u(p.value)),
                     cell(run.u(p.weighted_sum())), cell(run.u(res)), cell(p.converged)});
  }
  b.summary = {{"max_residual", run.u(worst)}};
  run.emit(b, run.manifest("verify minimax", &s, true, json{{"weights", a.weights}}));
}

// ---- lab -------------------------------------------------------------------

struct LabArgs {
  double g1 = 1.0;
  double g2 = 0.5;
  double k = 1.0;
  double lambda = 2.0;
  double dx = 0.05;
  double half_width = 12.0;
  std::string start = "uniform";
  int steps = 8;
  int m = 2;
  int searches = 50;

  json options() const {
    return json{{"g1", g1}, {"g2", g2}, {"k", k}, {"lambda", lambda}, {"dx", dx}, {"half_width", half_width}};
  }
};

GridDistribution lab_start(const LabArgs& a, const Grid& grid) {
  if (a.start == "uniform") return GridDistribution::uniform(std::sqrt(3.0 * a.k), grid);
  if (a.start == "gaussian") return GridDistribution::discretized_gaussian(a.k, grid);
  if (a.start == "rademacher") return GridDistribution::rademacher(std::round(std::sqrt(a.k) / grid.dx) * grid.dx, grid);
  if (a.start == "uniform3") return GridDistribution::uniform_points(3, grid);
  throw CliError(kUsage, "--start must be one of uniform, gaussian, rademacher, uniform3");
}

void cmd_lab_doubling(Run& run, const LabArgs& a) {
  const Grid grid{a.half_width, a.dx};
  const LabReport rep = doubling_experiment(lab_start(a, grid), a.g1, a.g2, a.lambda, a.steps);
  OutputBundle b{"lab_doubling", CsvTable({"iter", "s_lambda", "tv", "variance"})};
  double max_excess = -std::numeric_limits<double>::infinity();
  for (const LabIterate& it : rep.iterates) {
    b.table.add_row({cell(static_cast<long long>(it.iteration)), cell(run.u(it.s_lambda)), cell(it.tv), cell(it.variance)});
    max_excess = std::max(max_excess, it.s_lambda - rep.envelope);
  }
  b.summary = {{"final_tv", rep.iterates.back().tv},
               {"envelope", run.u(rep.envelope)},
               {"final_gap", run.u(rep.final_gap)},
               {"max_excess_over_envelope", run.u(max_excess)},
               {"final_sum_diff_mi", run.u(rep.iterates.back().sum_diff_mi)}};
  b.plot_x = "iter";
  b.plot_y = {"tv"};
  json opts = a.options();
  opts["start"] = a.start;
  opts["steps"] = a.steps;
  run.emit(b, run.manifest("lab doubling", nullptr, false, opts));
}

void cmd_lab_independence(Run& run, const LabArgs& a) {
  const Grid grid{a.half_width, a.dx};
  OutputBundle b{"lab_independence", CsvTable({"law", "sum_diff_mi"})};
  const std::vector<std::pair<std::string, GridDistribution>> laws{
      {"point_mass", GridDistribution::point_mass(grid)},
      {"rademacher", GridDistribution::rademacher(std::round(1.0 / grid.dx) * grid.dx, grid)},
      {"uniform3", GridDistribution::uniform_points(3, grid)},
      {"uniform5", GridDistribution::uniform_points(5, grid)},
      {"uniform", GridDistribution::uniform(std::sqrt(3.0), grid)},
      {"gaussian", GridDistribution::discretized_gaussian(1.0, grid)},
  };
  for (const auto& [name, p] : laws) {
    const double v = sum_diff_mi(p);
    b.table.add_row({name, cell(run.u(v))});
    b.summary[name] = run.u(v);
  }
  run.emit(b, run.manifest("lab independence", nullptr, false, json{{"dx", a.dx}, {"half_width", a.half_width}}));
}

void cmd_lab_envelope(Run& run, const LabArgs& a) {
  run.require_seed("lab envelope");
  const ChannelPair ch(Matrix{{a.g1}}, Matrix{{a.g2}});
  const double v = v_lambda(ch, PsdMatrix{{a.k}}, a.lambda, run.opt()).value;
  OutputBundle b{"lab_envelope", CsvTable({"search", "value", "v_lambda", "excess"})};
  std::vector<double> values(static_cast<std::size_t>(std::max(0, a.searches)));
  parallel_for(values.size(), [&](std::size_t i) {
    EnvelopeConfig ec;
    ec.seed = Rng::derive(run.g.seed, i);
    ec.grid = Grid{a.half_width, a.dx};
    values[i] = envelope_discrete(a.g1, a.g2, a.k, a.lambda, a.m, ec).value;
  });
  double max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    max_excess = std::max(max_excess, values[i] - v);
    b.table.add_row({cell(static_cast<long long>(i)), cell(run.u(values[i])), cell(run.u(v)), cell(run.u(values[i] - v))});
  }
  b.summary = {{"searches", a.searches}, {"v_lambda", run.u(v)}, {"max_excess", run.u(max_excess)}};
  json opts = a.options();
  opts["m"] = a.m;
  opts["searches"] = a.searches;
  run.emit(b, run.manifest("lab envelope", nullptr, true, opts));
}

}  // namespace

int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Capacity regions of the two-receiver vector Gaussian broadcast channel", "gbc"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  Run run;
  run.out = &out;
  Globals& g = run.g;
  app.add_option("--spec", g.spec_path, "Channel spec (JSON)");
  g.seed_opt = app.add_option("--seed", g.seed, "Seed for multi-start and random trials");
  app.add_flag("--bits", g.bits, "Report information in bits instead of nats");
  app.add_flag("--plot", g.plot, "Also write a gnuplot script next to the CSV");
  app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--restarts", g.restarts, "Optimizer multi-starts")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--max-iter", g.max_iter, "Optimizer iteration cap")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (overrides GBC_THREADS)");

  RatesArgs ra;
  auto* rates = app.add_subcommand("rates", "Evaluate the rate functionals at given covariances");
  rates->add_option("--kprime", ra.kprime, "K' as rows 'a,b;c,d' (default: K)");
  rates->add_option("--lambda", ra.lambda, "lambda for s_lambda and the bound")->capture_default_str();
  rates->add_option("--k1", ra.k1, "K1 for t_lambda");
  rates->add_option("--k2", ra.k2, "K2 for t_lambda");
  rates->add_option("--weights", ra.weights, "l0,l1,l2 for t_lambda");
  rates->add_option("--alpha", ra.alpha, "alpha for t_lambda")->capture_default_str();

  std::string lambdas;
  std::string weights;
  bool swap = false;
  auto* rp = app.add_subcommand("region-private", "Trace private-message boundary points");
  rp->add_option("--lambdas", lambdas, "Comma-separated lambda values")->required();
  rp->add_flag("--swap", swap, "Maximize R2 + lambda R1 instead");
  auto* rc = app.add_subcommand("region-common", "Trace common-message boundary points");
  rc->add_option("--weights", weights, "Triples l0,l1,l2 separated by ';'")->required();
  rc->add_flag("--swap", swap, "Maximize l0 R0 + (l1+l2) R1 + l2 R2 instead");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->require_subcommand(1);
  auto* v_dpc = verify->add_subcommand("dpc", "Dirty-paper identity on random instances");
  auto* v_rot = verify->add_subcommand("rotation", "Sum/difference rotation invariance");
  auto* v_pmi = verify->add_subcommand("product-mi", "Two-letter mutual information identity");
  auto* v_bnd = verify->add_subcommand("bound", "Uniform upper bound on s_lambda");
  auto* v_two = verify->add_subcommand("two-letter", "Two-letter optimum versus twice the single letter");
  auto* v_mm = verify->add_subcommand("minimax", "Inner/outer matching of the common-message objective");
  for (auto* sub : {v_dpc, v_rot, v_pmi, v_bnd})
    sub->add_option("--trials", va.trials, "Number of random instances")->check(CLI::NonNegativeNumber)->capture_default_str();
  v_two->add_option("--lambdas", va.lambdas, "Comma-separated lambda values")->capture_default_str();
  v_mm->add_option("--weights", va.weights, "Triples l0,l1,l2 separated by ';'")->capture_default_str();

  LabArgs la;
  auto* lab = app.add_subcommand("lab", "Scalar discrete-distribution experiments");
  lab->require_subcommand(1);
  auto* l_dbl = lab->add_subcommand("doubling", "Iterate X -> (X1 + X2)/sqrt 2");
  auto* l_ind = lab->add_subcommand("independence", "Sum/difference mutual information of reference laws");
  auto* l_env = lab->add_subcommand("envelope", "Mixture search against the Gaussian optimum");
  for (auto* sub : {l_dbl, l_ind, l_env}) {
    sub->add_option("--dx", la.dx, "Lattice spacing")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--half-width", la.half_width, "Lattice half width")->check(CLI::PositiveNumber)->capture_default_str();
  }
  for (auto* sub : {l_dbl, l_env}) {
    sub->add_option("--g1", la.g1, "Receiver 1 gain")->capture_default_str();
    sub->add_option("--g2", la.g2, "Receiver 2 gain")->capture_default_str();
    sub->add_option("--k", la.k, "Variance bound")->check(CLI::NonNegativeNumber)->capture_default_str();
    sub->add_option("--lambda", la.lambda, "lambda > 1")->capture_default_str();
  }
  l_dbl->add_option("--start", la.start, "uniform | gaussian | rademacher | uniform3")->capture_default_str();
  l_dbl->add_option("--steps", la.steps, "Doubling steps")->check(CLI::NonNegativeNumber)->capture_default_str();
  l_env->add_option("--m", la.m, "Mixture size")->check(CLI::PositiveNumber)->capture_default_str();
  l_env->add_option("--searches", la.searches, "Seeded searches")->check(CLI::NonNegativeNumber)->capture_default_str();

  std::vector<std::string> args(argv.rbegin(), argv.rend() - 1);  // CLI11 wants reversed, without argv[0]
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << kToolVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  if (g.threads > 0) set_worker_override(g.threads);
  struct ResetOverride {
    bool active;
    ~ResetOverride() {
      if (active) set_worker_override(0);
    }
  } reset{g.threads > 0};

  try {
    if (*rates) {
      cmd_rates(run, ra);
    } else if (*rp) {
      cmd_region_private(run, lambdas, swap);
    } else if (*rc) {
      cmd_region_common(run, weights, swap);
    } else if (*v_dpc) {
      cmd_verify_dpc(run, va);
    } else if (*v_rot) {
      cmd_verify_rotation(run, va, false);
    } else if (*v_pmi) {
      cmd_verify_rotation(run, va, true);
    } else if (*v_bnd) {
      cmd_verify_bound(run, va);
    } else if (*v_two) {
      cmd_verify_two_letter(run, va);
    } else if (*v_mm) {
      cmd_verify_minimax(run, va);
    } else if (*l_dbl) {
      cmd_lab_doubling(run, la);
    } else if (*l_ind) {
      cmd_lab_independence(run, la);
    } else if (*l_env) {
      cmd_lab_envelope(run, la);
    }
  } catch (const CliError& e) {
    err << "error: " << e.what() << "\n";
    return e.code();
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  if (run.flagged) {
    err << "warning: some results did not converge (flagged in the output)\n";
    return kNotConverged;
  }
  return kOk;
}

}  // namespace gbc::cli
