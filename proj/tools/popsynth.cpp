// popsynth: extract, fit, sample, rake, eval and benchmark from the shell.
//
// Exit codes: 0 success, 1 unexpected failure, 2 invalid input or options,
// 3 non-convergence, 4 attribute space above the enumeration cap.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "popsynth/popsynth.hpp"

using namespace popsynth;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitCapacity = 4;

// --- shared plumbing -------------------------------------------------------

/// Every option of a subcommand with its resolved value (flag, config file
/// or default), for the provenance header. Output destinations are left out
/// so the same run written to two paths yields identical bytes.
json resolved_config(const CLI::App& sub) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& name = opt->get_lnames().front();
    if (name == "help" || name == "output" || name == "summary" || name == "sample-output") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (opt->get_expected_max() > 1 || res.size() > 1)
        cfg[name] = res;
      else
        cfg[name] = res.empty() ? "" : res.front();
    } else if (!opt->get_default_str().empty()) {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

Provenance provenance(const CLI::App& sub, const std::vector<std::string>& inputs) {
  Provenance p;
  p.command = sub.get_name();
  for (const auto& path : inputs) p.input_digests[path] = file_digest(path);
  p.config = resolved_config(sub);
  return p;
}

std::vector<std::string> provenance_comments(const Provenance& p) {
  return {std::string(kToolName) + " " + kToolVersion + " " + p.command,
          "provenance " + p.to_json().dump()};
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw ValidationError("'" + path + "' is not valid JSON: " + ex.what());
  }
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << body;
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_population_file(const std::string& path, const Population& pop, const Provenance& p) {
  std::ostringstream ss;
  write_population(ss, pop, provenance_comments(p));
  write_text(path, ss.str());
}

/// Whitespace- or comma-separated numbers; '#' starts a comment line.
std::vector<double> read_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open weights file '" + path + "'");
  std::vector<double> w;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '#') continue;
    for (auto& c : line)
      if (c == ',') c = ' ';
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        w.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ValidationError("weights file '" + path + "': '" + tok + "' is not a number");
      }
    }
  }
  return w;
}

ConstraintSet load_constraints(const std::string& path) {
  return constraint_set_from_json(read_json_file(path));
}

void print_constraint_summary(std::ostream& out, const ConstraintSet& cs) {
  std::size_t scopes[4] = {0, 0, 0, 0};
  for (const auto& s : cs.scopes) ++scopes[s.attributes.size()];
  char buf[96];
  out << "  arity     scopes   atomic\n";
  static const char* names[4] = {"", "unary", "binary", "ternary"};
  for (int a = 1; a <= 3; ++a) {
    std::snprintf(buf, sizeof(buf), "  %-8s %7zu %8zu\n", names[a], scopes[a], cs.count_with_arity(a));
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "  %-8s %7zu %8zu\n", "total", cs.scopes.size(), cs.size());
  out << buf;
}

void print_fit_report(std::ostream& out, const FitReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%s: %s after %d iterations, moment residual %.3g, dual %.10g, %.2fs\n",
                r.method.c_str(), r.status.c_str(), r.iterations, r.moment_residual, r.dual_value,
                r.wall_seconds);
  out << buf;
}

// --- options ---------------------------------------------------------------

struct GenerateArgs {
  std::vector<int> domains;
  std::int64_t n = 5000;
  int parents = 2;
  double dependence = 1.0;
  std::uint64_t seed = 0;
  std::string output;
};

struct ExtractArgs {
  std::string input, output;
  std::vector<std::string> vars, missing;
  std::int64_t n2 = 0, n3 = 0;
  double rho2 = 1.0, rho3 = 1.0;
  int max_arity = 3;
  double ipf_tol = IpfOptions{}.tolerance;
  int ipf_sweeps = IpfOptions{}.max_sweeps;
};

struct FitArgs {
  std::string constraints, output, weights;
  double tol = FitOptions{}.tolerance;
  int iters = FitOptions{}.max_iterations;
  int history = FitOptions{}.history;
  CellIndex enum_cap = kDefaultEnumerationCap;
  double soft_beta = 0.0;
  bool restrict_support = false;
  bool metropolis = false;
  std::uint64_t seed = 0;
  std::int64_t sweeps = MetropolisFitOptions{}.sweeps_per_iteration;
  std::int64_t burn_in = MetropolisFitOptions{}.burn_in;
  double step = MetropolisFitOptions{}.step;
  bool timing = false;
};

struct SampleArgs {
  std::string model, output;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
};

struct RakeArgs {
  std::string constraints, output, base, sample_output;
  int iters = kDefaultRakingPasses;
  double tol = 0.0;
  CellIndex enum_cap = kDefaultEnumerationCap;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
};

struct EvalArgs {
  std::string population, constraints, output;
  std::size_t worst = 10;
};

struct BenchmarkArgs {
  std::vector<std::string> problems, methods{"maxent", "raking"};
  std::vector<std::int64_t> sizes;
  std::vector<std::uint64_t> seeds;
  std::uint64_t seed = 0;
  int replicates = 0;
  unsigned jobs = 0;
  double tol = FitOptions{}.tolerance;
  int iters = FitOptions{}.max_iterations;
  int rake_iters = kDefaultRakingPasses;
  double rake_tol = 0.0;
  CellIndex enum_cap = kDefaultEnumerationCap;
  std::string output, summary;
  bool no_timing = false;
};

// --- subcommands -----------------------------------------------------------

int run_generate(const CLI::App& sub, const GenerateArgs& a) {
  SyntheticSpec spec{a.domains, a.n, a.parents, a.dependence, a.seed};
  auto pop = synthesize_population(spec);
  write_population_file(a.output, pop, provenance(sub, {}));
  std::cerr << "wrote " << pop.total() << " individuals over " << pop.schema().size()
            << " attributes to " << a.output << "\n";
  return kExitOk;
}

int run_extract(const CLI::App& sub, const ExtractArgs& a) {
  ExtractionBudget budget;
  budget.binary = sub.count("--n2") ? ArityBudget::count(a.n2) : ArityBudget::rate(a.rho2);
  budget.ternary = sub.count("--n3") ? ArityBudget::count(a.n3) : ArityBudget::rate(a.rho3);
  budget.max_arity = a.max_arity;
  if (!(a.ipf_tol > 0.0) || a.ipf_sweeps < 1)
    throw ValidationError("--ipf-tol must be > 0 and --ipf-sweeps >= 1");

  ReadOptions ro;
  ro.columns = a.vars;
  ro.missing = a.missing;
  auto pop = read_population_file(a.input, ro);
  auto cs = extract_constraints(pop, budget, {a.ipf_tol, a.ipf_sweeps});
  write_json(a.output, to_json(cs, provenance(sub, {a.input})));

  std::cout << "extracted " << cs.size() << " atomic constraints from " << pop.total()
            << " individuals (K = " << pop.schema().size() << ")\n";
  print_constraint_summary(std::cout, cs);
  return kExitOk;
}

int run_fit(const CLI::App& sub, const FitArgs& a) {
  auto cs = load_constraints(a.constraints);
  if (cs.empty()) std::cerr << "warning: no constraints; the fitted model is uniform\n";

  auto fit = [&]() -> FitResult {
  if (a.metropolis) {
    if (!sub.count("--seed")) throw ValidationError("--metropolis needs an explicit --seed");
    MetropolisFitOptions mo;
    mo.iterations = a.iters;
    mo.sweeps_per_iteration = a.sweeps;
    mo.burn_in = a.burn_in;
    mo.step = a.step;
    mo.tolerance = a.tol;
    mo.seed = a.seed;
    return fit_metropolis(cs, mo, a.enum_cap);
  } else {
    FitOptions fo;
    fo.tolerance = a.tol;
    fo.max_iterations = a.iters;
    fo.history = a.history;
    fo.enumeration_cap = a.enum_cap;
    fo.restrict_support = a.restrict_support;
    if (cs.schema.cell_count() > a.enum_cap)
      throw CapacityError("the attribute space has " + std::to_string(cs.schema.cell_count()) +
                          " cells, above --enum-cap " + std::to_string(a.enum_cap) +
                          "; raise --enum-cap or fit with --metropolis --seed N");
    if (sub.count("--soft-beta") || !a.weights.empty()) {
      if (!sub.count("--soft-beta")) throw ValidationError("--weights needs --soft-beta");
      SoftFitConfig soft{a.soft_beta, a.weights.empty() ? std::vector<double>{} : read_weights(a.weights)};
      return fit_soft(cs, soft, fo);
    } else {
      return fit_hard(cs, fo);
    }
  }
  }();

  print_fit_report(std::cerr, fit.report);
  auto report = fit.report;
  // wall time differs between identical runs; keep it out of the artifact
  if (!a.timing) report.wall_seconds = 0.0;
  std::vector<std::string> inputs{a.constraints};
  if (!a.weights.empty()) inputs.push_back(a.weights);
  write_json(a.output, to_json(fit.model, report, provenance(sub, inputs)));
  return fit.report.converged ? kExitOk : kExitConvergence;
}

int run_sample(const CLI::App& sub, const SampleArgs& a) {
  auto loaded = model_from_json(read_json_file(a.model));
  auto pop = sample_population(loaded.model, a.n, a.seed);
  write_population_file(a.output, pop, provenance(sub, {a.model}));
  std::cerr << "sampled " << pop.total() << " individuals (" << pop.counts().size()
            << " distinct cells)\n";
  return kExitOk;
}

int run_rake(const CLI::App& sub, const RakeArgs& a) {
  auto cs = load_constraints(a.constraints);
  std::optional<Population> base;
  std::vector<std::string> inputs{a.constraints};
  if (!a.base.empty()) {
    ReadOptions ro;
    ro.schema = cs.schema;
    base = read_population_file(a.base, ro);
    inputs.push_back(a.base);
  }
  RakeOptions ro{a.iters, a.tol, a.enum_cap};
  if (!a.sample_output.empty() && (!sub.count("--seed") || a.n < 1))
    throw ValidationError("--sample-output needs --n >= 1 and an explicit --seed");

  auto wv = rake(cs, ro, base ? &*base : nullptr);
  const auto prov = provenance(sub, inputs);
  if (!a.output.empty()) write_json(a.output, to_json(wv, prov));
  char buf[160];
  std::snprintf(buf, sizeof(buf), "raking: %d passes, max constraint residual %.3g\n", wv.passes,
                wv.residual);
  std::cerr << buf;
  if (!a.sample_output.empty()) {
    auto pop = sample_weighted(wv, a.n, a.seed);
    write_population_file(a.sample_output, pop, prov);
    std::cerr << "sampled " << pop.total() << " individuals\n";
  }
  return kExitOk;
}

int run_eval(const CLI::App& sub, const EvalArgs& a) {
  auto cs = load_constraints(a.constraints);
  ReadOptions ro;
  ro.schema = cs.schema;
  auto pop = read_population_file(a.population, ro);
  auto r = mre(pop, cs);

  char buf[200];
  std::snprintf(buf, sizeof(buf), "MRE %.6g over %zu constraints, N = %lld\n", r.mre, cs.size(),
                static_cast<long long>(r.n));
  std::cout << buf;
  for (const auto& [arity, v] : r.per_arity_mre) {
    std::snprintf(buf, sizeof(buf), "  arity %d: %.6g (%zu constraints)\n", arity, v,
                  r.per_arity_count.at(arity));
    std::cout << buf;
  }
  const std::size_t shown = std::min(a.worst, r.worst.size());
  if (shown) std::cout << "worst constraints:\n";
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& e = r.worst[i];
    std::snprintf(buf, sizeof(buf), "  %-40s target %.6g achieved %.6g rel %.4g\n",
                  cs.constraints[e.index].pattern.describe(cs.schema).c_str(), e.target, e.achieved,
                  e.relative_error);
    std::cout << buf;
  }

  if (!a.output.empty()) {
    json j;
    j["format"] = "popsynth.evaluation";
    j["provenance"] = provenance(sub, {a.population, a.constraints}).to_json();
    j["constraint_digest"] = cs.digest();
    j["n"] = r.n;
    j["mre"] = r.mre;
    json per = json::object();
    for (const auto& [arity, v] : r.per_arity_mre)
      per[std::to_string(arity)] = {{"mre", v}, {"count", r.per_arity_count.at(arity)}};
    j["per_arity"] = per;
    json worst = json::array();
    for (const auto& e : r.worst)
      worst.push_back({{"index", e.index},
                       {"pattern", cs.constraints[e.index].pattern.describe(cs.schema)},
                       {"target", e.target},
                       {"achieved", e.achieved},
                       {"relative_error", e.relative_error}});
    j["worst"] = worst;
    write_json(a.output, j);
  }
  return kExitOk;
}

int run_benchmark_cmd(const CLI::App& sub, const BenchmarkArgs& a) {
  BenchmarkGrid grid;
  std::vector<std::string> inputs;
  for (const auto& spec : a.problems) {
    const auto eq = spec.find('=');
    std::string label, path;
    if (eq == std::string::npos) {
      path = spec;
      const auto slash = path.find_last_of('/');
      label = path.substr(slash == std::string::npos ? 0 : slash + 1);
      const auto dot = label.find_last_of('.');
      if (dot != std::string::npos && dot > 0) label = label.substr(0, dot);
    } else {
      label = spec.substr(0, eq);
      path = spec.substr(eq + 1);
    }
    grid.problems.push_back({label, load_constraints(path)});
    inputs.push_back(path);
  }
  grid.sizes = a.sizes;
  if (!a.seeds.empty()) {
    if (sub.count("--replicates")) throw ValidationError("give either --seeds or --seed with --replicates");
    grid.seeds = a.seeds;
  } else if (sub.count("--seed") && a.replicates >= 1) {
    for (int r = 0; r < a.replicates; ++r) grid.seeds.push_back(a.seed + static_cast<std::uint64_t>(r));
  } else {
    throw ValidationError("benchmark needs explicit seeds: --seeds 1,2,3 or --seed S --replicates R");
  }
  grid.methods.clear();
  for (const auto& m : a.methods) grid.methods.push_back(parse_method(m));
  grid.fit.tolerance = a.tol;
  grid.fit.max_iterations = a.iters;
  grid.fit.enumeration_cap = a.enum_cap;
  grid.rake = {a.rake_iters, a.rake_tol, a.enum_cap};
  grid.jobs = a.jobs;

  auto report = run_benchmark(grid);
  const auto comments = provenance_comments(provenance(sub, inputs));

  std::ostringstream results;
  for (const auto& c : comments) results << "# " << c << "\n";
  write_results(results, report, !a.no_timing);
  if (a.output.empty())
    std::cout << results.str();
  else
    write_text(a.output, results.str());

  std::ostringstream summary;
  for (const auto& c : comments) summary << "# " << c << "\n";
  write_summary(summary, report);
  if (!a.summary.empty()) write_text(a.summary, summary.str());

  char buf[200];
  std::cerr << "problem              N   maxent_mre   raking_mre  wins(me/rk)  winner   gap\n";
  for (const auto& s : report.summary) {
    std::snprintf(buf, sizeof(buf), "%-14s %8lld %12.6g %12.6g %6d/%-5d %-8s %+.1f%%\n",
                  s.problem.c_str(), static_cast<long long>(s.n), s.maxent_mre, s.raking_mre,
                  s.maxent_wins, s.raking_wins, s.winner.empty() ? "NA" : s.winner.c_str(),
                  100.0 * s.maxent_advantage);
    std::cerr << buf;
  }
  int failures = 0;
  for (const auto& r : report.rows) failures += !r.error.empty();
  if (failures) {
    std::cerr << failures << " grid cells failed; see the error column\n";
    for (const auto& r : report.rows)
      if (!r.error.empty()) {
        std::cerr << "first failure: " << r.error << "\n";
        break;
      }
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximum-entropy population synthesis with a generalized-raking baseline"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.set_config("--config", "", "TOML config file; [subcommand] sections, flags win on conflict");
  app.require_subcommand(1);

  // generate
  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic population with planted dependence");
  g->add_option("--domains", gen.domains, "Categories per attribute, e.g. 3,2,4")->delimiter(',')->required();
  g->add_option("-n,--n", gen.n, "Number of individuals")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--parents", gen.parents, "Earlier attributes each one depends on")->capture_default_str();
  g->add_option("--dependence", gen.dependence, "Scale of the random logits")->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed")->required();
  g->add_option("-o,--output", gen.output, "Population file")->required();

  // extract
  ExtractArgs ext;
  auto* e = app.add_subcommand("extract", "Extract unary, binary and ternary constraints from a population");
  e->add_option("-i,--input", ext.input, "Population file (CSV or TSV)")->required()->check(CLI::ExistingFile);
  e->add_option("-o,--output", ext.output, "Constraint file (JSON)")->required();
  e->add_option("--vars", ext.vars, "Columns to use, in order")->delimiter(',');
  e->add_option("--missing", ext.missing, "Labels treated as missing; such records are skipped")->delimiter(',');
  auto* n2 = e->add_option("--n2", ext.n2, "Number of pairs to keep")->check(CLI::PositiveNumber);
  auto* r2 = e->add_option("--rho2", ext.rho2, "Fraction of pairs to keep")->capture_default_str();
  auto* n3 = e->add_option("--n3", ext.n3, "Number of triples to keep")->check(CLI::PositiveNumber);
  auto* r3 = e->add_option("--rho3", ext.rho3, "Fraction of triples to keep")->capture_default_str();
  n2->excludes(r2);
  n3->excludes(r3);
  e->add_option("--max-arity", ext.max_arity, "Highest arity extracted")->capture_default_str()->check(CLI::Range(1, 3));
  e->add_option("--ipf-tol", ext.ipf_tol, "IPF tolerance for triple scoring")->capture_default_str();
  e->add_option("--ipf-sweeps", ext.ipf_sweeps, "IPF sweep cap for triple scoring")->capture_default_str();

  // fit
  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit the maximum-entropy model to a constraint file");
  f->add_option("-c,--constraints", fit.constraints, "Constraint file")->required()->check(CLI::ExistingFile);
  f->add_option("-o,--output", fit.output, "Model file (JSON)")->required();
  f->add_option("--tol", fit.tol, "Max-norm gradient tolerance")->capture_default_str();
  f->add_option("--iters", fit.iters, "Iteration cap")->capture_default_str();
  f->add_option("--history", fit.history, "L-BFGS memory")->capture_default_str();
  f->add_option("--enum-cap", fit.enum_cap, "Largest attribute space enumerated exactly")->capture_default_str();
  f->add_option("--soft-beta", fit.soft_beta, "Fit the penalized model with this beta")->check(CLI::PositiveNumber);
  f->add_option("--weights", fit.weights, "Per-constraint penalty weights (soft mode)")->check(CLI::ExistingFile);
  f->add_flag("--restrict-support", fit.restrict_support, "Exclude cells the targets force to zero");
  f->add_flag("--metropolis", fit.metropolis, "Stochastic fit on a Metropolis chain (no enumeration)");
  f->add_option("--seed", fit.seed, "Random seed (Metropolis)");
  f->add_option("--sweeps", fit.sweeps, "Sweeps per stochastic-gradient step")->capture_default_str();
  f->add_option("--burn-in", fit.burn_in, "Burn-in sweeps")->capture_default_str();
  f->add_option("--step", fit.step, "Initial stochastic-gradient step")->capture_default_str();
  f->add_flag("--timing", fit.timing, "Record wall time in the model file");

  // sample
  SampleArgs smp;
  auto* s = app.add_subcommand("sample", "Draw an i.i.d. population from a fitted model");
  s->add_option("-m,--model", smp.model, "Model file")->required()->check(CLI::ExistingFile);
  s->add_option("-n,--n", smp.n, "Population size")->required()->check(CLI::PositiveNumber);
  s->add_option("--seed", smp.seed, "Random seed")->required();
  s->add_option("-o,--output", smp.output, "Population file")->required();

  // rake
  RakeArgs rk;
  auto* r = app.add_subcommand("rake", "Generalized raking over the enumerated cells");
  r->add_option("-c,--constraints", rk.constraints, "Constraint file")->required()->check(CLI::ExistingFile);
  r->add_option("-o,--output", rk.output, "Weight file (JSON)");
  r->add_option("--iters", rk.iters, "Full passes over the constraints")->capture_default_str();
  r->add_option("--tol", rk.tol, "Stop once every constraint is within this (0: run all passes)")->capture_default_str();
  r->add_option("--enum-cap", rk.enum_cap, "Largest attribute space enumerated")->capture_default_str();
  r->add_option("--base", rk.base, "Start from this population instead of uniform")->check(CLI::ExistingFile);
  r->add_option("-n,--n", rk.n, "Also sample this many individuals");
  r->add_option("--seed", rk.seed, "Random seed for sampling");
  r->add_option("--sample-output", rk.sample_output, "Sampled population file");

  // eval
  EvalArgs ev;
  auto* v = app.add_subcommand("eval", "Mean relative constraint error of a population");
  v->add_option("-p,--population", ev.population, "Population file")->required()->check(CLI::ExistingFile);
  v->add_option("-c,--constraints", ev.constraints, "Constraint file")->required()->check(CLI::ExistingFile);
  v->add_option("-o,--output", ev.output, "Evaluation report (JSON)");
  v->add_option("--worst", ev.worst, "Worst constraints to list")->capture_default_str();

  // benchmark
  BenchmarkArgs bm;
  auto* b = app.add_subcommand("benchmark", "MaxEnt against raking over sizes and seeds");
  b->add_option("--problem", bm.problems, "Constraint file, optionally LABEL=PATH (repeatable)")->required();
  b->add_option("--sizes", bm.sizes, "Population sizes, e.g. 100,1000,100000")->delimiter(',')->required();
  b->add_option("--seeds", bm.seeds, "Seeds, e.g. 1,2,3")->delimiter(',');
  b->add_option("--seed", bm.seed, "First seed when using --replicates");
  b->add_option("--replicates", bm.replicates, "Number of consecutive seeds from --seed");
  b->add_option("--methods", bm.methods, "maxent, raking")->delimiter(',')->capture_default_str();
  b->add_option("--jobs", bm.jobs, "Worker threads (0: all cores)")->capture_default_str();
  b->add_option("--tol", bm.tol, "MaxEnt gradient tolerance")->capture_default_str();
  b->add_option("--iters", bm.iters, "MaxEnt iteration cap")->capture_default_str();
  b->add_option("--rake-iters", bm.rake_iters, "Raking passes")->capture_default_str();
  b->add_option("--rake-tol", bm.rake_tol, "Raking early-stop tolerance")->capture_default_str();
  b->add_option("--enum-cap", bm.enum_cap, "Largest attribute space enumerated")->capture_default_str();
  b->add_option("-o,--output", bm.output, "Results table (default: stdout)");
  b->add_option("--summary", bm.summary, "Per-(problem, N) summary table");
  b->add_flag("--no-timing", bm.no_timing, "Write zero timings so reruns are byte-identical");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*g) return run_generate(*g, gen);
    if (*e) return run_extract(*e, ext);
    if (*f) return run_fit(*f, fit);
    if (*s) return run_sample(*s, smp);
    if (*r) return run_rake(*r, rk);
    if (*v) return run_eval(*v, ev);
    if (*b) return run_benchmark_cmd(*b, bm);
  } catch (const CapacityError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitCapacity;
  } catch (const ConvergenceError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConvergence;
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitValidation;
  } catch (const nlohmann::json::exception& ex) {
    std::cerr << "error: malformed input: " << ex.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
