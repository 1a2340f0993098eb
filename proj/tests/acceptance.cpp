// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "riesub/datagen.hpp"
#include "riesub/metrics.hpp"
#include "riesub/solvers.hpp"
#include "riesub/stationarity.hpp"

using namespace riesub;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// Sphere Haystack instance shared by the DPCP criteria.
struct DpcpInstance {
  RsrDataset ds;
  ProblemPtr p;
  StiefelPoint<double> x0;
  ErrorMetric dist;
};

DpcpInstance dpcp_instance() {
  Rng data(1);
  RsrDataset ds = gen_haystack_sphere(100, 90, 1500, 3500, data);
  ProblemPtr p = dpcp_problem(ds.data, 10);
  Rng init(101);
  StiefelPoint<double> x0 = random_init(100, 10, init);
  ErrorMetric dist = distance_metric(RotationSolutionSet<double>(ds.S_perp));
  return {std::move(ds), p, std::move(x0), std::move(dist)};
}

long first_at_or_below(const Trace& t, double level) {
  for (const TraceRow& r : t.rows)
    if (*r.dist <= level) return r.iter;
  return -1;
}

// Criterion 1: linear convergence of the full method on DPCP.
void criterion1(const DpcpInstance& in) {
  SolverConfig base;
  base.units = StepUnits::sum;
  const std::vector<double> betas = {0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
  const BetaSearchResult sweep = beta_grid_search(*in.p, in.x0, 0.1, betas, 200, in.dist, base);

  SolverConfig cfg = base;
  cfg.iterations = 200;
  cfg.schedule = StepSchedule::geometric(0.1, sweep.best_beta);
  cfg.error_metric = in.dist;
  const auto t0 = Clock::now();
  const SolveResult res = solve(*in.p, in.x0, cfg);
  const double secs = seconds_since(t0);

  const long hit = first_at_or_below(res.trace, 1e-8);
  // Pre-floor range: iterates before the distance comes within 10x of its
  // smallest value, where round-off in the distance takes over.
  double floor_dist = std::numeric_limits<double>::infinity();
  for (const TraceRow& r : res.trace.rows) floor_dist = std::min(floor_dist, *r.dist);
  std::vector<double> ks, logs;
  for (const TraceRow& r : res.trace.rows) {
    if (*r.dist <= 10.0 * floor_dist) break;
    ks.push_back(static_cast<double>(r.iter));
    logs.push_back(std::log(*r.dist));
  }
  const oracle::LineFit fit = oracle::fit_line(ks, logs);
  const bool pass = hit >= 0 && hit <= 200 && fit.r2 >= 0.95 && fit.slope < 0.0 && secs <= 60.0;
  report(1, pass,
         fmt("beta=%.3g first dist<=1e-8 at k=%ld, floor %.2g, fit over %zu pts slope=%.4g R2=%.4f, runtime %.2fs",
             sweep.best_beta, hit, floor_dist, ks.size(), fit.slope, fit.r2, secs));
}

// Criterion 2: sublinear regime with gamma_k = 0.1 / sqrt(k).
void criterion2(const DpcpInstance& in) {
  const long T = 1000;
  bool pass = true;
  std::string detail;
  for (Method m : {Method::full, Method::incremental, Method::stochastic}) {
    SolverConfig cfg;
    cfg.method = m;
    cfg.iterations = T;
    cfg.units = StepUnits::sum;
    cfg.schedule = StepSchedule::polynomial(0.1);
    cfg.error_metric = in.dist;
    cfg.seed = 7;
    if (m == Method::stochastic) cfg.return_rule = ReturnRule::uniform_random_iterate;
    const SolveResult res = solve(*in.p, in.x0, cfg);
    // Block averages of 100 iterations must strictly decrease after burn-in (k >= 100).
    std::vector<double> blocks;
    for (long b = 1; b < T / 100; ++b) {
      double s = 0.0;
      for (long k = b * 100; k < (b + 1) * 100; ++k) s += *res.trace.rows[static_cast<std::size_t>(k)].dist;
      blocks.push_back(s / 100.0);
    }
    bool monotone = true;
    for (std::size_t i = 1; i < blocks.size(); ++i) monotone = monotone && blocks[i] < blocks[i - 1];
    const double final_dist = in.dist(res.point.matrix());
    const bool ok = monotone && final_dist <= 1e-2;
    pass = pass && ok;
    detail += fmt("%s final=%.3g monotone=%s; ", method_name(m).c_str(), final_dist, monotone ? "yes" : "no");
  }
  report(2, pass, detail);
}

// Criterion 3: ODL linear convergence with a swept beta.
void criterion3() {
  Rng data(1);
  const OdlDataset ds = gen_odl(30, 1643, 0.3, data);
  const auto p = odl_problem(ds.data, OdlFrame::full);
  Rng init(101);
  const StiefelPoint<double> x0 = random_init(30, 30, init);
  const ErrorMetric err = odl_error_metric(ds.A.matrix());
  SolverConfig base;
  base.units = StepUnits::sum;
  const std::vector<double> betas = {0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95, 0.98};
  const auto t0 = Clock::now();
  const BetaSearchResult sweep = beta_grid_search(*p, x0, 0.1, betas, 300, err, base);
  const double secs = seconds_since(t0);
  const Trace& best = sweep.traces[sweep.best_index];
  const long hit = first_at_or_below(best, 1e-6);
  const bool pass = hit >= 0 && hit <= 300 && secs <= 300.0;
  report(3, pass,
         fmt("beta=%.3g first err<=1e-6 at k=%ld, final err=%.3g, sweep runtime %.2fs", sweep.best_beta, hit,
             sweep.final_errors[sweep.best_index], secs));
}

// Criterion 4: min Theta against the rate bound for T in {100, 400, 1600}.
void criterion4(const DpcpInstance& in) {
  const FiniteSumProblem& p = *in.p;
  const double L = p.lipschitz(), tau = p.weak_convexity();
  const double f0 = p.value(in.x0.matrix());
  MoreauConfig mc = MoreauConfig::defaults_for(p);
  // Warm start only; the minimum is over every T/4-th iterate.
  mc.restarts = 1;
  bool pass = true;
  double prev = std::numeric_limits<double>::infinity();
  std::string detail;
  for (long T : {100L, 400L, 1600L}) {
    SolverConfig cfg;
    cfg.method = Method::incremental;
    cfg.iterations = T;
    cfg.schedule = constant_stepsize(T, p.m());
    cfg.theta_every = T / 4;
    cfg.seed = 4;
    const double min_theta = min_theta_curve(p, in.x0, cfg, mc, {T}).front().min_theta;
    const double bound =
        2.0 * std::sqrt(f0 + 2.0 * L * L * (L + tau) * (1.0 + L + tau)) / std::pow(static_cast<double>(T + 1), 0.25);
    const bool ok = min_theta <= bound && min_theta <= prev;
    pass = pass && ok;
    prev = min_theta;
    detail += fmt("T=%ld min=%.4g bound=%.4g; ", T, min_theta, bound);
  }
  report(4, pass, detail);
}

// Criterion 5: the subgradient inequality on 10^3 pairs per problem.
void criterion5(const DpcpInstance& in) {
  Rng rng(55);
  const Matrix Y = gaussian_matrix(20, 300, rng);
  const auto lad = lad_problem(Y, 15);
  Rng odl_rng(56);
  const OdlDataset od = gen_odl(30, 1643, 0.3, odl_rng);
  const auto odl = odl_problem(od.data, OdlFrame::full);
  const double v_dpcp = subgradient_inequality_check(*in.p, 1000, rng);
  const double v_lad = subgradient_inequality_check(*lad, 1000, rng);
  const double v_odl = subgradient_inequality_check(*odl, 1000, rng);
  const double worst = std::max({v_dpcp, v_lad, v_odl});
  report(5, worst <= 1e-10, fmt("max violation dpcp=%.3g lad=%.3g odl=%.3g", v_dpcp, v_lad, v_odl));
}

// Criterion 6: ||R_X(xi) - Y|| <= ||X + xi - Y|| for the polar retraction.
void criterion6() {
  Rng rng(66);
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 1000; ++t) {
    const Index n = 2 + static_cast<Index>(rng.uniform_index(29));
    const Index r = 1 + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    const Matrix X = random_stiefel_matrix(n, r, rng);
    const Matrix Y = random_stiefel_matrix(n, r, rng);
    const double scale = std::pow(10.0, -3.0 + 4.0 * rng.uniform());
    const Matrix xi = scale * tangent_projection(X, gaussian_matrix(n, r, rng));
    const double slack = (X + xi - Y).norm() - (polar_retraction(X, xi) - Y).norm();
    worst = std::min(worst, slack);
  }
  report(6, worst >= -1e-12, fmt("min slack over 1000 triples %.3g", worst));
}

// Criterion 7: inner-solver Theta against a 10^5-point grid on St(2, 1).
void criterion7() {
  Rng rng(77);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto p = dpcp_problem(gaussian_matrix(2, 5, rng), 1);
    const StiefelPoint<double> X = random_stiefel(2, 1, rng);
    const MoreauConfig mc = MoreauConfig::defaults_for(*p);
    const double inner = prox_point(*p, X, mc, rng).theta;
    const double grid = theta_bruteforce_circle(*p, X, mc.lambda, 100000);
    worst = std::max(worst, std::abs(inner - grid));
  }
  report(7, worst <= 1e-3, fmt("max |Theta_inner - Theta_grid| over 20 instances %.3g", worst));
}

struct GaussianInstance {
  RsrDataset ds;
  ProblemPtr p;
  SharpnessEstimates sharp;
};

GaussianInstance gaussian_instance() {
  Rng data(7);
  RsrDataset ds = gen_haystack_gaussian(10, 7, 1000, 200, data);
  EstimatorConfig ec;
  ec.restarts = 10;
  SharpnessEstimates sharp = estimate_sharpness(ds, 3, ec, Rng(11));
  ProblemPtr p = dpcp_problem(ds.data, 3);
  return {std::move(ds), p, std::move(sharp)};
}

// Criterion 8: empirical sharpness ratio against the estimated alpha.
void criterion8(const GaussianInstance& g) {
  if (!g.sharp.condition_holds) {
    report(8, false, "condition_holds is false on the chosen instance");
    return;
  }
  const double alpha = *g.sharp.alpha;
  Rng rng(13);
  const SharpnessRatio ratio =
      empirical_sharpness_ratio(*g.p, RotationSolutionSet<double>(g.ds.S_perp), 10000, rng);
  const bool pass = ratio.min_ratio >= 0.5 * alpha && ratio.min_ratio > 0.0;
  report(8, pass,
         fmt("alpha=%.4g min ratio=%.4g over %ld points (%ld skipped)", alpha, ratio.min_ratio, ratio.evaluated,
             ratio.skipped));
}

// Criterion 9: concentration bounds with c1 = c2 = 3 on 20 seeded instances.
void criterion9() {
  EstimatorConfig ec;
  ec.restarts = 3;
  ec.iterations = 200;
  int held = 0;
  double min_out_margin = std::numeric_limits<double>::infinity();
  int vacuous = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng data = run_stream(900 + s, 0);
    const RsrDataset ds = gen_haystack_gaussian(100, 90, 1500, 3500, data);
    const HaystackBoundReport rep = haystack_bound_check(ds, 10, 3.0, 3.0, ec, run_stream(900 + s, 5));
    if (rep.inlier_holds && rep.outlier_holds) ++held;
    if (rep.inlier_vacuous) ++vacuous;
    min_out_margin = std::min(min_out_margin, rep.outlier_margin);
  }
  report(9, held >= 19,
         fmt("both bounds hold on %d/20 (inlier side vacuous on %d), min outlier margin %.3g", held, vacuous,
             min_out_margin));
}

// Criterion 10: planner schedule keeps dist_k <= beta^k e0.
void criterion10(const GaussianInstance& g) {
  if (!g.sharp.alpha) {
    report(10, false, "no sharpness estimate on the chosen instance");
    return;
  }
  const FiniteSumProblem& p = *g.p;
  const double alpha = *g.sharp.alpha, L = p.lipschitz(), tau = p.weak_convexity();
  const Matrix& B = g.ds.S_perp.matrix();
  const double target = 0.45 * alpha / (L + tau);
  // Start on a tangent ray from a solution, bisected to the target distance.
  Rng rng(17);
  const Matrix xi = tangent_projection(B, gaussian_matrix(B.rows(), B.cols(), rng));
  double lo = 0.0, hi = 1.0;
  Matrix X = B;
  for (int it = 0; it < 60; ++it) {
    const double t = 0.5 * (lo + hi);
    X = polar_retraction(B, Matrix(t * xi));
    (procrustes_distance(X, B).distance < target ? lo : hi) = t;
  }
  const double dist0 = procrustes_distance(X, B).distance;
  const GeometricPlan plan = geometric_plan(alpha, L, tau, 1, std::numeric_limits<double>::infinity(), dist0);
  SolverConfig cfg;
  cfg.iterations = 300;
  cfg.schedule = StepSchedule::geometric(plan.gamma0_opt, plan.beta_min_opt);
  cfg.error_metric = distance_metric(RotationSolutionSet<double>(g.ds.S_perp));
  const SolveResult res = solve(p, StiefelPoint<double>(X), cfg);
  double worst = -std::numeric_limits<double>::infinity();
  for (const TraceRow& r : res.trace.rows)
    worst = std::max(worst, *r.dist - std::pow(plan.beta_min_opt, static_cast<double>(r.iter)) * plan.e0);
  report(10, worst <= 1e-9,
         fmt("gamma0=%.4g beta=%.6g e0=%.4g, max excess over 300 iterations %.3g", plan.gamma0_opt,
             plan.beta_min_opt, plan.e0, worst));
}

// Criterion 11: identical traces for identical seeds.
void criterion11(const DpcpInstance& in) {
  SolverConfig cfg;
  cfg.method = Method::stochastic;
  cfg.iterations = 20;
  cfg.schedule = StepSchedule::polynomial(0.1);
  cfg.units = StepUnits::sum;
  cfg.error_metric = in.dist;
  cfg.return_rule = ReturnRule::uniform_random_iterate;
  cfg.theta_every = 10;
  MoreauConfig mc = MoreauConfig::defaults_for(*in.p);
  mc.inner_iterations = 200;
  cfg.moreau = mc;
  cfg.seed = 1234;
  const SolveResult a = solve(*in.p, in.x0, cfg);
  const SolveResult b = solve(*in.p, in.x0, cfg);
  const bool pass = trace_to_csv(a.trace, false) == trace_to_csv(b.trace, false) &&
                    a.trace.returned_index == b.trace.returned_index;
  report(11, pass, fmt("%zu trace rows compared, returned index %ld", a.trace.rows.size(), a.trace.returned_index));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const DpcpInstance dpcp = dpcp_instance();
  const GaussianInstance gauss = gaussian_instance();
  const std::vector<std::function<void()>> steps = {
      [&] { criterion1(dpcp); }, [&] { criterion2(dpcp); }, [] { criterion3(); },
      [&] { criterion4(dpcp); }, [&] { criterion5(dpcp); }, [] { criterion6(); },
      [] { criterion7(); },      [&] { criterion8(gauss); }, [] { criterion9(); },
      [&] { criterion10(gauss); }, [&] { criterion11(dpcp); }};
  for (const auto& step : steps) step();
  std::printf("%d of 11 criteria failed, total %.1fs\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
