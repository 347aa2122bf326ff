#pragma once

// Run configurations for the benchmark harness: validation, dispatch to the
// solvers, and a key=value suite format.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <exception>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lptr/baselines.hpp"
#include "lptr/errors.hpp"
#include "lptr/pde_problems.hpp"
#include "lptr/report.hpp"
#include "lptr/tr_driver.hpp"

namespace lptr {

struct RunConfig {
  std::string problem = "poisson";
  Space space = Space::L2;
  bool constrained = true;
  double p = 0.5;
  int n = 64;
  std::string variant = "tr-mm-spg";
  double tau0 = 1e-4;
  std::int64_t max_iter = 500;
  std::uint64_t seed = 0;
  std::string out;
};

inline const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names{"pg",        "mm",        "tr-gcp",    "tr-nc-gcp",
                                              "tr-spg",    "tr-nc-spg", "tr-mm-spg", "tr-nc-mm-spg"};
  return names;
}

inline std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

inline Space parse_space(std::string_view s) {
  if (s == "l2") return Space::L2;
  if (s == "h01") return Space::H01;
  throw UsageError("unknown space '" + std::string(s) + "' (expected l2 or h01)");
}

inline void validate(const RunConfig& c) {
  const auto& ids = builtin_problem_ids();
  if (std::find(ids.begin(), ids.end(), c.problem) == ids.end())
    throw UsageError("unknown problem '" + c.problem + "'");
  const auto& vs = variant_names();
  if (std::find(vs.begin(), vs.end(), c.variant) == vs.end())
    throw UsageError("unknown variant '" + c.variant + "'");
  if (!(c.p > 0.0 && c.p <= 1.0)) throw UsageError("p must lie in (0, 1]");
  if (c.n < 2) throw UsageError("n must be at least 2");
  if (!(c.tau0 > 0.0)) throw UsageError("tau0 must be positive");
  if (c.max_iter < 0) throw UsageError("max-iter must be nonnegative");
  if (c.space == Space::H01) {
    if (c.variant != "mm" && c.variant != "tr-mm-spg")
      throw UsageError("variant " + c.variant + " needs l2 controls; h01 supports mm and tr-mm-spg");
    if (c.constrained) throw UsageError("h01 controls are unconstrained");
  }
}

/// Trust-region settings for a variant name.
inline TRConfig tr_config_for(const std::string& variant) {
  TRConfig cfg;
  if (variant == "tr-gcp") {
  } else if (variant == "tr-nc-gcp") {
    cfg.gcp_mode = ProxMode::Nonconvex;
  } else if (variant == "tr-spg") {
    cfg.subsolver = Subsolver::Spg;
  } else if (variant == "tr-nc-spg") {
    cfg.gcp_mode = ProxMode::Nonconvex;
    cfg.subsolver = Subsolver::Spg;
  } else if (variant == "tr-mm-spg") {
    cfg.subsolver = Subsolver::MmSpg;
  } else if (variant == "tr-nc-mm-spg") {
    cfg.gcp_mode = ProxMode::Nonconvex;
    cfg.subsolver = Subsolver::MmSpg;
  } else {
    throw UsageError("not a trust-region variant: " + variant);
  }
  return cfg;
}

struct RunResult {
  RunConfig config;
  SolveResult solve;
  std::string error;  // set when the run threw
};

/// Builds the problem and runs one solver. Deterministic given the config.
inline SolveResult run(const RunConfig& c) {
  validate(c);
  const ProblemSpec spec = make_problem(c.problem, Grid(c.n), c.space, c.constrained, c.p);
  TrackingObjective f(spec);
  const std::string alg = upper(c.variant);
  if (c.variant == "pg") {
    PgParams prm;
    prm.max_iter = c.max_iter;
    return pg_solve(f, spec.reg, prm, alg);
  }
  if (c.variant == "mm") {
    MmParams prm;
    prm.max_outer = c.max_iter;
    return mm_solve(f, spec.reg, prm, alg);
  }
  TRConfig cfg = tr_config_for(c.variant);
  cfg.tau0 = c.tau0;
  cfg.max_outer = c.max_iter;
  return tr_solve(f, spec.reg, cfg, alg);
}

namespace detail {

inline bool parse_bool(std::string_view v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw UsageError("not a boolean: '" + std::string(v) + "'");
}

template <class T>
T parse_value(std::string_view key, std::string_view v) {
  std::istringstream is{std::string(v)};
  T x{};
  is >> x;
  if (!is || !is.eof()) throw UsageError("bad value for " + std::string(key) + ": '" + std::string(v) + "'");
  return x;
}

}  // namespace detail

/// Applies one "key=value" setting to c.
inline void apply_setting(RunConfig& c, std::string_view key, std::string_view v) {
  if (key == "problem") c.problem = std::string(v);
  else if (key == "space") c.space = parse_space(v);
  else if (key == "constrained") c.constrained = detail::parse_bool(v);
  else if (key == "p") c.p = detail::parse_value<double>(key, v);
  else if (key == "n") c.n = detail::parse_value<int>(key, v);
  else if (key == "variant") c.variant = std::string(v);
  else if (key == "tau0") c.tau0 = detail::parse_value<double>(key, v);
  else if (key == "max_iter" || key == "max-iter") c.max_iter = detail::parse_value<std::int64_t>(key, v);
  else if (key == "seed") c.seed = detail::parse_value<std::uint64_t>(key, v);
  else throw UsageError("unknown key '" + std::string(key) + "'");
}

/// One config per non-empty line, whitespace-separated key=value pairs on top
/// of the defaults; '#' starts a comment.
inline std::vector<RunConfig> parse_suite(std::string_view text, const RunConfig& defaults = {}) {
  std::vector<RunConfig> out;
  std::istringstream lines{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string tok;
    RunConfig c = defaults;
    bool any = false;
    while (tokens >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos || eq == 0)
        throw UsageError("line " + std::to_string(lineno) + ": expected key=value, got '" + tok + "'");
      apply_setting(c, std::string_view(tok).substr(0, eq), std::string_view(tok).substr(eq + 1));
      any = true;
    }
    if (!any) continue;
    if (c.space == Space::H01) c.constrained = false;
    validate(c);
    out.push_back(std::move(c));
  }
  return out;
}

/// Runs every config, up to `jobs` at a time. Results keep the input order.
inline std::vector<RunResult> run_suite(const std::vector<RunConfig>& configs, int jobs = 1) {
  std::vector<RunResult> results(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < configs.size();) {
      results[i].config = configs[i];
      try {
        results[i].solve = run(configs[i]);
      } catch (const UsageError&) {
        throw;
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
  if (n_threads == 1) {
    worker();
    return results;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t)
    pool.emplace_back([&, t] {
      try {
        worker();
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

}  // namespace lptr
