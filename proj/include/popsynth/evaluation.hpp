#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "popsynth/constraints.hpp"
#include "popsynth/error.hpp"
#include "popsynth/feature_index.hpp"
#include "popsynth/maxent.hpp"
#include "popsynth/population.hpp"
#include "popsynth/raking.hpp"
#include "popsynth/random.hpp"

namespace popsynth {

/// alpha-hat_j for every constraint, in one pass over the population.
inline std::vector<double> achieved_frequencies(const Population& pop, const ConstraintSet& cs) {
  if (!(pop.schema() == cs.schema))
    throw SchemaMismatchError("population and constraints use different schemas");
  if (pop.empty()) throw DegenerateInputError("evaluating an empty population");
  std::vector<Pattern> patterns;
  for (const auto& c : cs.constraints) patterns.push_back(c.pattern);
  std::vector<double> out(cs.size(), 0.0);
  if (patterns.empty()) return out;
  const FeatureIndex features(cs.schema, patterns);
  std::vector<double> flat(features.flat_size(), 0.0);
  std::vector<int> digits(cs.schema.size());
  for (const auto& [cell, c] : pop.counts()) {
    cs.schema.decode(cell, digits);
    for (std::size_t g = 0; g < features.groups().size(); ++g)
      flat[features.groups()[g].offset + features.combo(g, digits)] += static_cast<double>(c);
  }
  features.gather(flat, out);
  for (auto& v : out) v /= static_cast<double>(pop.total());
  return out;
}

struct ConstraintError {
  std::size_t index = 0;
  double target = 0.0;
  double achieved = 0.0;
  double relative_error = 0.0;
};

struct EvalResult {
  double mre = 0.0;
  std::map<int, double> per_arity_mre;
  std::map<int, std::size_t> per_arity_count;
  /// Largest relative errors, worst first (at most 10).
  std::vector<ConstraintError> worst;
  std::int64_t n = 0;
  double wall_seconds = 0.0;

  double arity_mre(int arity) const {
    auto it = per_arity_mre.find(arity);
    return it == per_arity_mre.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
  }
};

/// Mean relative constraint error (1/m) sum_j |alpha-hat_j - alpha_j| / alpha_j.
inline EvalResult mre(const Population& pop, const ConstraintSet& cs) {
  const auto t0 = std::chrono::steady_clock::now();
  cs.validate();
  const auto achieved = achieved_frequencies(pop, cs);
  EvalResult r;
  r.n = pop.total();
  std::vector<ConstraintError> errs;
  std::map<int, double> sums;
  double total = 0.0;
  for (std::size_t j = 0; j < cs.size(); ++j) {
    const double a = cs.constraints[j].target;
    const double rel = std::abs(achieved[j] - a) / a;
    errs.push_back({j, a, achieved[j], rel});
    total += rel;
    const int arity = static_cast<int>(cs.constraints[j].arity());
    sums[arity] += rel;
    ++r.per_arity_count[arity];
  }
  r.mre = cs.empty() ? 0.0 : total / static_cast<double>(cs.size());
  for (const auto& [arity, s] : sums)
    r.per_arity_mre[arity] = s / static_cast<double>(r.per_arity_count[arity]);
  std::stable_sort(errs.begin(), errs.end(), [](const auto& a, const auto& b) {
    return a.relative_error > b.relative_error;
  });
  errs.resize(std::min<std::size_t>(errs.size(), 10));
  r.worst = std::move(errs);
  r.wall_seconds = detail::seconds_since(t0);
  return r;
}

// --- benchmark harness -------------------------------------------------------

enum class Method { MaxEnt, Raking };

inline const char* method_name(Method m) { return m == Method::MaxEnt ? "maxent" : "raking"; }

inline Method parse_method(const std::string& s) {
  if (s == "maxent") return Method::MaxEnt;
  if (s == "raking") return Method::Raking;
  throw ValidationError("unknown method '" + s + "' (expected maxent or raking)");
}

struct BenchmarkProblem {
  std::string label;
  ConstraintSet constraints;
};

struct BenchmarkGrid {
  std::vector<BenchmarkProblem> problems;
  std::vector<std::int64_t> sizes;
  std::vector<Method> methods{Method::MaxEnt, Method::Raking};
  std::vector<std::uint64_t> seeds;
  FitOptions fit;
  RakeOptions rake;
  /// Worker threads for the per-(problem, method) jobs; 0 means hardware concurrency.
  unsigned jobs = 0;

  void validate() const {
    if (problems.empty() || sizes.empty() || methods.empty() || seeds.empty())
      throw ValidationError("benchmark grid axes must be nonempty");
    for (auto n : sizes)
      if (n < 1) throw ValidationError("population sizes must be >= 1");
    auto s = seeds;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end())
      throw ValidationError("benchmark seeds must be distinct");
    auto m = methods;
    std::sort(m.begin(), m.end());
    if (std::adjacent_find(m.begin(), m.end()) != m.end())
      throw ValidationError("benchmark methods must be distinct");
  }
};

struct BenchmarkRow {
  std::string problem;
  std::size_t K = 0;
  std::size_t max_arity = 0;
  Method method = Method::MaxEnt;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  double mre = std::numeric_limits<double>::quiet_NaN();
  double mre_unary = std::numeric_limits<double>::quiet_NaN();
  double mre_binary = std::numeric_limits<double>::quiet_NaN();
  double mre_ternary = std::numeric_limits<double>::quiet_NaN();
  double fit_seconds = 0.0;
  double sample_seconds = 0.0;
  bool converged = false;
  /// Empty on success, otherwise the failure message.
  std::string error;
};

struct BenchmarkSummaryRow {
  std::string problem;
  std::int64_t n = 0;
  double maxent_mre = std::numeric_limits<double>::quiet_NaN();
  double raking_mre = std::numeric_limits<double>::quiet_NaN();
  /// Number of seeds on which each method had the strictly lower MRE.
  int maxent_wins = 0;
  int raking_wins = 0;
  std::string winner;
  /// (loser - winner) / loser on the seed-averaged MRE.
  double gap = std::numeric_limits<double>::quiet_NaN();
  /// The same gap, signed positive when MaxEnt wins.
  double maxent_advantage = std::numeric_limits<double>::quiet_NaN();
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  std::vector<BenchmarkSummaryRow> summary;
};

/// Stream seed of one sampling job. Both methods share it for a given
/// (seed, N), so they are compared on common random numbers.
inline std::uint64_t sampling_stream(std::uint64_t seed, std::int64_t n) {
  return mix_seed(seed, static_cast<std::uint64_t>(n));
}

/// "Gap = relative reduction over the weaker method".
inline double relative_gap(double a, double b) {
  const double loser = std::max(a, b), winner = std::min(a, b);
  return loser > 0.0 ? (loser - winner) / loser : 0.0;
}

inline std::vector<BenchmarkSummaryRow> summarize(const BenchmarkGrid& grid,
                                                  const std::vector<BenchmarkRow>& rows) {
  std::vector<BenchmarkSummaryRow> out;
  for (const auto& prob : grid.problems) {
    for (auto n : grid.sizes) {
      BenchmarkSummaryRow s;
      s.problem = prob.label;
      s.n = n;
      std::map<std::uint64_t, std::map<Method, double>> by_seed;
      std::map<Method, std::pair<double, int>> acc;
      for (const auto& r : rows) {
        if (r.problem != prob.label || r.n != n || !r.error.empty()) continue;
        by_seed[r.seed][r.method] = r.mre;
        acc[r.method].first += r.mre;
        ++acc[r.method].second;
      }
      if (acc.count(Method::MaxEnt)) s.maxent_mre = acc[Method::MaxEnt].first / acc[Method::MaxEnt].second;
      if (acc.count(Method::Raking)) s.raking_mre = acc[Method::Raking].first / acc[Method::Raking].second;
      for (const auto& [seed, m] : by_seed) {
        if (m.size() != 2) continue;
        if (m.at(Method::MaxEnt) < m.at(Method::Raking)) ++s.maxent_wins;
        if (m.at(Method::Raking) < m.at(Method::MaxEnt)) ++s.raking_wins;
      }
      if (std::isfinite(s.maxent_mre) && std::isfinite(s.raking_mre)) {
        s.gap = relative_gap(s.maxent_mre, s.raking_mre);
        if (s.maxent_mre < s.raking_mre) {
          s.winner = "maxent";
          s.maxent_advantage = s.gap;
        } else if (s.raking_mre < s.maxent_mre) {
          s.winner = "raking";
          s.maxent_advantage = -s.gap;
        } else {
          s.winner = "equal";
          s.maxent_advantage = 0.0;
        }
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

namespace detail {

/// A fitted method ready to be sampled: cell distribution plus fit diagnostics.
struct FittedJob {
  std::vector<double> cell_weights;
  double fit_seconds = 0.0;
  bool converged = false;
  std::string error;
};

inline FittedJob fit_job(const BenchmarkProblem& prob, Method method, const BenchmarkGrid& grid) {
  FittedJob job;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (method == Method::MaxEnt) {
      auto fit = fit_hard(prob.constraints, grid.fit);
      job.cell_weights = cell_probabilities(fit.model);
      job.converged = fit.report.converged;
    } else {
      auto wv = rake(prob.constraints, grid.rake);
      job.cell_weights = std::move(wv.weights);
      job.converged = grid.rake.tolerance > 0.0 ? wv.passes < grid.rake.iterations : true;
    }
  } catch (const std::exception& ex) {
    job.error = ex.what();
  }
  job.fit_seconds = seconds_since(t0);
  return job;
}

}  // namespace detail

/// Fits each (problem, method) once, then samples and scores every (N, seed).
/// Rows come out in grid order: problem, method, N, seed.
inline BenchmarkReport run_benchmark(const BenchmarkGrid& grid) {
  grid.validate();
  struct Task {
    std::size_t problem;
    Method method;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < grid.problems.size(); ++p)
    for (auto m : grid.methods) tasks.push_back({p, m});

  const std::size_t per_task = grid.sizes.size() * grid.seeds.size();
  std::vector<BenchmarkRow> rows(tasks.size() * per_task);

  auto run_task = [&](std::size_t t) {
    const auto& prob = grid.problems[tasks[t].problem];
    const auto method = tasks[t].method;
    auto job = detail::fit_job(prob, method, grid);
    std::optional<AliasTable> table;
    if (job.error.empty()) {
      try {
        table.emplace(job.cell_weights);
      } catch (const std::exception& ex) {
        job.error = ex.what();
      }
    }
    std::size_t slot = t * per_task;
    for (auto n : grid.sizes) {
      for (auto seed : grid.seeds) {
        auto& row = rows[slot++];
        row.problem = prob.label;
        row.K = prob.constraints.schema.size();
        row.max_arity = prob.constraints.max_arity();
        row.method = method;
        row.n = n;
        row.seed = seed;
        row.fit_seconds = job.fit_seconds;
        row.converged = job.converged;
        row.error = job.error;
        if (!job.error.empty()) continue;
        try {
          const auto t0 = std::chrono::steady_clock::now();
          Rng rng(sampling_stream(seed, n));
          std::vector<CellIndex> draws(static_cast<std::size_t>(n));
          for (auto& d : draws) d = table->sample(rng);
          const auto pop = Population::from_cells(prob.constraints.schema, draws);
          row.sample_seconds = detail::seconds_since(t0);
          const auto ev = mre(pop, prob.constraints);
          row.mre = ev.mre;
          row.mre_unary = ev.arity_mre(1);
          row.mre_binary = ev.arity_mre(2);
          row.mre_ternary = ev.arity_mre(3);
        } catch (const std::exception& ex) {
          row.error = ex.what();
        }
      }
    }
  };

  unsigned jobs = grid.jobs ? grid.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, tasks.size()));
  if (jobs <= 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
  } else {
    std::size_t next = 0;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t t;
          {
            std::lock_guard lock(mu);
            if (next >= tasks.size()) return;
            t = next++;
          }
          run_task(t);
        }
      });
    for (auto& th : pool) th.join();
  }

  BenchmarkReport report;
  report.rows = std::move(rows);
  report.summary = summarize(grid, report.rows);
  return report;
}

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace detail

/// Flat results table. With timing off the two seconds columns are written
/// as 0 so that reruns are byte-identical.
inline void write_results(std::ostream& out, const BenchmarkReport& report, bool timing = true) {
  out << "problem,K,max_arity,method,N,seed,mre,mre_unary,mre_binary,mre_ternary,"
         "fit_seconds,sample_seconds,converged,error\n";
  for (const auto& r : report.rows) {
    out << detail::csv_field(r.problem) << ',' << r.K << ',' << r.max_arity << ','
        << method_name(r.method) << ',' << r.n << ',' << r.seed << ',' << detail::fmt_double(r.mre)
        << ',' << detail::fmt_double(r.mre_unary) << ',' << detail::fmt_double(r.mre_binary) << ','
        << detail::fmt_double(r.mre_ternary) << ','
        << detail::fmt_double(timing ? r.fit_seconds : 0.0) << ','
        << detail::fmt_double(timing ? r.sample_seconds : 0.0) << ','
        << (r.converged ? "true" : "false") << ',' << detail::csv_field(r.error) << '\n';
  }
}

inline void write_summary(std::ostream& out, const BenchmarkReport& report) {
  out << "problem,N,maxent_mre,raking_mre,maxent_wins,raking_wins,winner,gap,maxent_advantage\n";
  for (const auto& s : report.summary)
    out << detail::csv_field(s.problem) << ',' << s.n << ',' << detail::fmt_double(s.maxent_mre) << ','
        << detail::fmt_double(s.raking_mre) << ',' << s.maxent_wins << ',' << s.raking_wins << ','
        << (s.winner.empty() ? "NA" : s.winner) << ',' << detail::fmt_double(s.gap) << ','
        << detail::fmt_double(s.maxent_advantage) << '\n';
}

}  // namespace popsynth
