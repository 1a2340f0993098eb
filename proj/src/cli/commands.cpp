#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>

#include <CLI11/CLI11.hpp>

#include "riesub/cli.hpp"
#include "riesub/io.hpp"
#include "riesub/metrics.hpp"

namespace riesub::cli {

namespace {

using nlohmann::json;

// Holds every option value; each subcommand binds the subset it uses.
struct Options {
  RunSpec spec;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string config;
  std::string summary;
  std::string betas;
  long seeds = 10;
  double lambda = 0.0;
  long inner_iters = 2000;
  int restarts = 3;
  int est_restarts = 50;
  long est_iters = 500;
};

template <class T>
CLI::Option* opt(CLI::App* app, const std::string& name, T& target, const std::string& help) {
  return app->add_option(name, target, help)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

void add_common(CLI::App* app, Options& o) {
  opt(app, "--seed", o.seed, "Master seed (required)")->required();
  opt(app, "--out", o.spec.out, "Output path");
  opt(app, "--jobs", o.jobs, "Worker threads for sweep and bench")->check(CLI::PositiveNumber);
  opt(app, "--config", o.config, "key=value file; flags override its values");
}

void add_data(CLI::App* app, Options& o) {
  RunSpec& s = o.spec;
  opt(app, "--problem", s.problem, "dpcp | lad | odl | odl-sphere");
  opt(app, "--data", s.data, "Data CSV, columns are points");
  opt(app, "--truth", s.truth, "Ground-truth basis CSV for --data");
  opt(app, "--generator", s.generator, "haystack-sphere | haystack-gaussian | odl");
  opt(app, "--n", s.n, "Ambient dimension");
  opt(app, "--d", s.d, "Inlier subspace dimension");
  opt(app, "--m1", s.m1, "Inlier count");
  opt(app, "--m2", s.m2, "Outlier count");
  opt(app, "--m", s.m, "ODL sample count");
  opt(app, "--theta", s.theta, "ODL Bernoulli parameter");
  opt(app, "--r", s.r, "Number of columns of X");
  opt(app, "--init", s.init, "random | spectral | CSV path");
}

void add_solver(CLI::App* app, Options& o) {
  RunSpec& s = o.spec;
  opt(app, "--method", s.method, "full | incremental | stochastic");
  opt(app, "--step", s.step, "constant | diminishing | geometric");
  opt(app, "--gamma0", s.gamma0, "Initial stepsize");
  opt(app, "--beta", s.beta, "Geometric decay factor");
  opt(app, "--iters", s.iters, "Outer iterations");
  opt(app, "--step-units", s.step_units, "mean | sum (scale of the full step)");
  opt(app, "--return", s.return_rule, "last | random");
  opt(app, "--theta-every", s.theta_every, "Evaluate Theta every K iterations");
  app->add_flag("--track-dist", s.track_dist, "Record distance to the ground truth");
  app->add_flag("--inner-checks", s.inner_checks, "Check the inner drift bound");
}

json error_record(const std::string& kind, const std::string& message, std::optional<long> iteration = {}) {
  json j{{"error", kind}, {"message", message}};
  j["iteration"] = iteration ? json(*iteration) : json(nullptr);
  return j;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string beta_file_name(double beta) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "beta_%.6g.csv", beta);
  return buf;
}

std::vector<double> parse_betas(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size()) throw ConfigError("bad beta: '" + cell + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--betas is empty");
  return out;
}

const std::vector<double> kDefaultBetas = {0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 0.99, 0.995, 0.999};

json stats(std::vector<double> v) {
  if (v.empty()) return nullptr;
  std::sort(v.begin(), v.end());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  const std::size_t h = v.size() / 2;
  const double median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  return json{{"mean", mean}, {"median", median}, {"min", v.front()}, {"max", v.back()}};
}

void write_json(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

int cmd_gen(Options& o, std::ostream& out) {
  RunSpec s = o.spec;
  if (s.out.empty()) throw ConfigError("gen needs --out PREFIX");
  s.problem = s.generator == "odl" ? "odl" : "dpcp";
  s.r = 0;
  s = resolve(s);
  const Workspace ws = build_workspace(s);
  const std::string prefix = s.out;
  json side{{"generator", s.generator}, {"seed", *s.seed}, {"data_stream", kDataStream}, {"build_id", build_id()}};
  json files{{"data", prefix + ".csv"}};
  if (ws.odl) {
    side["n"] = s.n;
    side["m"] = s.m;
    side["theta"] = s.theta;
    write_matrix_csv(prefix + ".csv", ws.odl->data);
    write_matrix_csv(prefix + "_A.csv", ws.odl->A.matrix());
    write_matrix_csv(prefix + "_codes.csv", ws.odl->codes);
    files["A"] = prefix + "_A.csv";
    files["codes"] = prefix + "_codes.csv";
  } else {
    side["n"] = s.n;
    side["d"] = s.d;
    side["m1"] = s.m1;
    side["m2"] = s.m2;
    write_matrix_csv(prefix + ".csv", ws.rsr->data);
    write_matrix_csv(prefix + "_S.csv", ws.rsr->S.matrix());
    write_matrix_csv(prefix + "_S_perp.csv", ws.rsr->S_perp.matrix());
    Matrix perm(static_cast<Index>(ws.rsr->permutation.size()), 1);
    for (Index j = 0; j < perm.rows(); ++j) perm(j, 0) = static_cast<double>(ws.rsr->permutation[j]);
    write_matrix_csv(prefix + "_perm.csv", perm);
    files["S"] = prefix + "_S.csv";
    files["S_perp"] = prefix + "_S_perp.csv";
    files["permutation"] = prefix + "_perm.csv";
  }
  side["files"] = files;
  write_json(prefix + ".json", side);
  out << side.dump(2) << "\n";
  return kExitOk;
}

int cmd_solve(Options& o, std::ostream& out) {
  const RunOutput r = run_spec(o.spec);
  const json j = summary_to_json(r.summary);
  if (!o.summary.empty()) write_json(o.summary, j);
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_sweep(Options& o, std::ostream& out) {
  RunSpec s = o.spec;
  s.step = "geometric";
  const std::string dir = s.out;
  s.out.clear();
  s = resolve(s);
  const std::vector<double> betas = o.betas.empty() ? kDefaultBetas : parse_betas(o.betas);
  const Workspace ws = build_workspace(s);
  SolverConfig base = solver_config(s, ws);
  const bool by_error = static_cast<bool>(ws.error_metric);
  const ProblemPtr p = ws.problem;
  const ErrorMetric target = by_error ? ws.error_metric : ErrorMetric([p](const Matrix& X) { return p->value(X); });
  const BetaSearchResult res = beta_grid_search(*p, ws.x0, s.gamma0, betas, s.iters, target, base, o.jobs);

  json j{{"best_beta", res.best_beta},
         {"best_index", res.best_index},
         {"betas", res.betas},
         {"final_errors", res.final_errors},
         {"target", by_error ? "error" : "f"},
         {"gamma0", s.gamma0},
         {"iters", s.iters},
         {"seed", *s.seed},
         {"build_id", build_id()}};
  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
    json traces = json::array();
    for (std::size_t i = 0; i < res.traces.size(); ++i) {
      const std::string path = (std::filesystem::path(dir) / beta_file_name(res.betas[i])).string();
      write_text_file(path, trace_to_csv(res.traces[i]));
      traces.push_back(path);
    }
    j["traces"] = traces;
    write_json((std::filesystem::path(dir) / "best.json").string(), j);
  }
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_theta(Options& o, std::ostream& out) {
  const RunSpec s = resolve(o.spec);
  const Workspace ws = build_workspace(s);
  MoreauConfig mc = MoreauConfig::defaults_for(*ws.problem);
  if (o.lambda > 0.0) mc.lambda = o.lambda;
  mc.inner_iterations = o.inner_iters;
  mc.restarts = o.restarts;
  Rng rng = run_stream(*s.seed, kThetaStream);
  const ThetaEstimate t = prox_point(*ws.problem, ws.x0, mc, rng);
  const json j{{"theta", t.theta},
               {"envelope_value", t.envelope_value},
               {"lambda", mc.lambda},
               {"inner_iterations", t.inner_iterations},
               {"inner_residual", t.inner_residual}};
  if (!s.out.empty()) write_json(s.out, j);
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_sharpness(Options& o, std::ostream& out) {
  RunSpec s = o.spec;
  if (!s.data.empty()) throw ConfigError("sharpness needs generated data (inlier labels)");
  s.problem = "dpcp";
  s = resolve(s);
  const Workspace ws = build_workspace(s);
  EstimatorConfig ec;
  ec.restarts = o.est_restarts;
  ec.iterations = o.est_iters;
  const SharpnessEstimates e = estimate_sharpness(*ws.rsr, s.r, ec, run_stream(*s.seed, kSharpnessStream));
  const json j{{"c_inlier_min", e.c_inlier_min},
               {"c_outlier_max", e.c_outlier_max},
               {"alpha", optional_number(e.alpha)},
               {"condition_holds", e.condition_holds},
               {"restarts", e.restarts},
               {"seed", *s.seed}};
  if (!s.out.empty()) write_json(s.out, j);
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_bench(Options& o, std::ostream& out) {
  if (o.seeds < 1) throw ConfigError("--seeds must be positive");
  RunSpec base = o.spec;
  const std::string dir = base.out;
  base.out.clear();
  resolve(base);
  if (!dir.empty()) std::filesystem::create_directories(dir);

  const auto count = static_cast<std::size_t>(o.seeds);
  std::vector<RunSummary> results(count);
  parallel_for(count, o.jobs, [&](std::size_t i) {
    RunSpec s = base;
    s.seed = *base.seed + i;
    if (!dir.empty()) s.out = (std::filesystem::path(dir) / ("seed_" + std::to_string(*s.seed) + ".csv")).string();
    results[i] = run_spec(s).summary;
  });

  json runs = json::array();
  std::vector<double> errors, fvals;
  for (const RunSummary& r : results) {
    runs.push_back({{"seed", *r.config.seed},
                    {"final_dist", optional_number(r.final_dist)},
                    {"final_fval", r.final_fval},
                    {"wall_ms", r.wall_ms}});
    if (r.final_dist) errors.push_back(*r.final_dist);
    fvals.push_back(r.final_fval);
  }
  json j{{"runs", runs}, {"final_dist", stats(errors)}, {"final_fval", stats(fvals)}, {"build_id", build_id()}};
  if (!dir.empty()) write_json((std::filesystem::path(dir) / "bench.json").string(), j);
  out << j.dump(2) << "\n";
  return kExitOk;
}

// Splices the --config file's pairs in right after the subcommand name.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      path = args[i].substr(9);
  }
  if (path.empty() || args.empty()) return args;
  const std::vector<std::string> extra = config_to_args(parse_config_text(read_text_file(path)));
  std::vector<std::string> out{args.front()};
  out.insert(out.end(), extra.begin(), extra.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Riemannian subgradient methods on the Stiefel manifold", "riesub"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  add_common(gen, o);
  add_data(gen, o);

  auto* solve_cmd = app.add_subcommand("solve", "Run one solver and emit a trace");
  add_common(solve_cmd, o);
  add_data(solve_cmd, o);
  add_solver(solve_cmd, o);
  opt(solve_cmd, "--summary", o.summary, "Write the run summary JSON here");

  auto* sweep = app.add_subcommand("sweep", "Geometric stepsize sweep over beta");
  add_common(sweep, o);
  add_data(sweep, o);
  add_solver(sweep, o);
  opt(sweep, "--betas", o.betas, "Comma-separated beta grid");

  auto* theta = app.add_subcommand("theta", "Moreau-envelope stationarity at the initial point");
  add_common(theta, o);
  add_data(theta, o);
  opt(theta, "--lambda", o.lambda, "Envelope parameter (default 1/(4(L + tau)))");
  opt(theta, "--inner-iters", o.inner_iters, "Inner iterations per restart");
  opt(theta, "--restarts", o.restarts, "Inner restarts, warm start included");

  auto* sharp = app.add_subcommand("sharpness", "Estimate the DPCP sharpness constants");
  add_common(sharp, o);
  add_data(sharp, o);
  opt(sharp, "--restarts", o.est_restarts, "Estimator restarts");
  opt(sharp, "--est-iters", o.est_iters, "Estimator iterations per restart");

  auto* bench = app.add_subcommand("bench", "Repeat a run over consecutive seeds");
  add_common(bench, o);
  add_data(bench, o);
  add_solver(bench, o);
  opt(bench, "--seeds", o.seeds, "Number of seeds");

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::CallForHelp&) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      err << error_record("usage", e.what()).dump() << "\n";
      return kExitUsage;
    }
    o.spec.seed = o.seed;
    if (gen->parsed()) return cmd_gen(o, out);
    if (solve_cmd->parsed()) return cmd_solve(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out);
    if (theta->parsed()) return cmd_theta(o, out);
    if (sharp->parsed()) return cmd_sharpness(o, out);
    return cmd_bench(o, out);
  } catch (const NumericalError& e) {
    err << error_record("numerical", e.what(), e.iteration()).dump() << "\n";
    return kExitNumerical;
  } catch (const SingularityError& e) {
    err << error_record("numerical", e.what()).dump() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << error_record("usage", e.what()).dump() << "\n";
    return kExitUsage;
  }
}

}  // namespace riesub::cli
