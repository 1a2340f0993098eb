#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "riesub/datagen.hpp"
#include "riesub/solvers.hpp"

namespace riesub::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

// Rng streams derived from --seed: run_stream(seed, k).
inline constexpr std::uint64_t kDataStream = 0;
inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kThetaStream = 3;
inline constexpr std::uint64_t kSharpnessStream = 5;

// One solver run. Sizes left at 0 take the problem defaults in resolve().
struct RunSpec {
  std::string problem = "dpcp";  // dpcp | lad | odl | odl-sphere
  std::string data;              // CSV path; generated when empty
  std::string truth;             // CSV basis for dist / err when data is a file
  std::string generator;         // haystack-sphere | haystack-gaussian | odl
  long n = 0, d = 0, m1 = -1, m2 = -1, m = 0;
  double theta = 0.3;
  long r = 0;
  std::string init = "random";  // random | spectral | CSV path
  std::string method = "full";
  std::string step = "diminishing";  // constant | diminishing | geometric
  double gamma0 = 0.1;
  double beta = 0.9;
  long iters = 100;
  std::string step_units = "mean";
  std::string return_rule = "last";  // last | random
  bool track_dist = false;
  long theta_every = 0;
  bool inner_checks = false;
  std::optional<std::uint64_t> seed;
  std::string out;

  bool operator==(const RunSpec&) const = default;
};

// Fills problem defaults and validates the run; idempotent.
RunSpec resolve(RunSpec spec);

// Flat key=value form, keys equal to the long flag names.
std::vector<std::pair<std::string, std::string>> to_kv(const RunSpec& spec);
RunSpec from_kv(const std::map<std::string, std::string>& kv);

// Parses `key = value` lines; `#` starts a comment.
std::map<std::string, std::string> parse_config_text(const std::string& text);
// Turns config pairs into --key value tokens placed ahead of argv so that
// command-line flags win.
std::vector<std::string> config_to_args(const std::map<std::string, std::string>& kv);

// Materialized inputs of a resolved spec.
struct Workspace {
  ProblemPtr problem;
  StiefelPoint<double> x0;
  ErrorMetric error_metric;  // empty when no ground truth is available
  std::optional<RsrDataset> rsr;
  std::optional<OdlDataset> odl;
};

Workspace build_workspace(const RunSpec& spec);
SolverConfig solver_config(const RunSpec& spec, const Workspace& ws);

// Serialized with the solver summary keys method, schedule, final_fval,
// final_dist (dist for RSR, err for ODL), iterations, seed, wall_ms.
struct RunSummary {
  std::string method;
  std::string schedule;
  std::optional<double> final_dist;
  double final_fval = 0.0;
  long iterations = 0;
  double wall_ms = 0.0;
  RunSpec config;
  std::string build_id;
};

nlohmann::json summary_to_json(const RunSummary& s);
RunSummary summary_from_json(const nlohmann::json& j);

struct RunOutput {
  SolveResult result;
  RunSummary summary;
};

RunOutput run_spec(const RunSpec& spec);

std::string build_id();

// Full command-line entry point; returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace riesub::cli
