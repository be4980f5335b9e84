#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "popsynth/constraints.hpp"
#include "popsynth/error.hpp"
#include "popsynth/feature_index.hpp"
#include "popsynth/lbfgs.hpp"
#include "popsynth/population.hpp"
#include "popsynth/provenance.hpp"
#include "popsynth/random.hpp"

namespace popsynth {

inline constexpr CellIndex kDefaultEnumerationCap = CellIndex{1} << 24;

/// Exponential-family model p(x) = exp(sum_j lambda_j f_j(x)) / Z(lambda)
/// over the attribute space, one multiplier per atomic constraint.
///
/// With `restrict_support`, cells that every distribution meeting the targets
/// must leave empty are removed from the space: when the targets of one
/// attribute set sum to 1, combinations of that set without a constraint
/// carry no mass. This is the limit the unrestricted family only reaches as
/// some multipliers diverge.
class MaxEntModel {
 public:
  explicit MaxEntModel(ConstraintSet constraints, std::vector<double> lambda = {},
                       CellIndex enumeration_cap = kDefaultEnumerationCap,
                       bool restrict_support = false)
      : cap_(enumeration_cap), restricted_(restrict_support) {
    constraints.validate();
    for (std::size_t j = 0; j < constraints.size(); ++j)
      if (constraints.constraints[j].target >= 1.0)
        throw ValidationError("constraint " + std::to_string(j) + " (" +
                              constraints.constraints[j].pattern.describe(constraints.schema) +
                              ") has target 1; the maximum-entropy solution is not attained "
                              "at finite multipliers");
    std::vector<Pattern> patterns;
    patterns.reserve(constraints.size());
    for (const auto& c : constraints.constraints) patterns.push_back(c.pattern);
    features_ = std::make_shared<const FeatureIndex>(constraints.schema, patterns);
    constraints_ = std::make_shared<const ConstraintSet>(std::move(constraints));
    if (restricted_) forbidden_ = std::make_shared<const std::vector<char>>(implied_zero_slots());
    set_lambda(std::move(lambda));
  }

  const AttributeSchema& schema() const noexcept { return constraints_->schema; }
  const ConstraintSet& constraints() const noexcept { return *constraints_; }
  const FeatureIndex& features() const noexcept { return *features_; }
  std::span<const double> lambda() const noexcept { return lambda_; }
  std::size_t size() const noexcept { return lambda_.size(); }
  CellIndex enumeration_cap() const noexcept { return cap_; }
  bool exact_mode() const noexcept { return schema().cell_count() <= cap_; }
  bool restricted_support() const noexcept { return restricted_; }

  /// Per flat slot of the feature index: 1 if cells in that slot are excluded.
  /// Empty when the support is not restricted.
  std::span<const char> forbidden_slots() const noexcept {
    return forbidden_ ? std::span<const char>(*forbidden_) : std::span<const char>();
  }

  /// Per-slot energy contributions for a multiplier vector; excluded slots get -inf.
  void theta(std::span<const double> lambda, std::span<double> out) const {
    features_->scatter(lambda, out);
    if (forbidden_)
      for (std::size_t s = 0; s < out.size(); ++s)
        if ((*forbidden_)[s]) out[s] = -std::numeric_limits<double>::infinity();
  }

  /// Same constraints, new multipliers.
  MaxEntModel with_lambda(std::vector<double> lambda) const {
    MaxEntModel m(*this);
    m.set_lambda(std::move(lambda));
    return m;
  }

  void require_exact() const {
    if (!exact_mode())
      throw CapacityError("attribute space has " + std::to_string(schema().cell_count()) +
                          " cells, above the enumeration cap of " + std::to_string(cap_) +
                          "; use Metropolis mode");
  }

 private:
  void set_lambda(std::vector<double> lambda) {
    if (lambda.empty()) lambda.assign(constraints_->size(), 0.0);
    if (lambda.size() != constraints_->size())
      throw ValidationError("lambda has " + std::to_string(lambda.size()) + " entries for " +
                            std::to_string(constraints_->size()) + " constraints");
    for (double v : lambda)
      if (!std::isfinite(v)) throw ValidationError("lambda must be finite");
    lambda_ = std::move(lambda);
  }

  std::vector<char> implied_zero_slots() const {
    const auto& fi = *features_;
    std::vector<char> forbidden(fi.flat_size(), 0);
    std::vector<char> covered(fi.flat_size(), 0);
    std::vector<double> sum(fi.groups().size(), 0.0);
    for (std::size_t j = 0; j < constraints_->size(); ++j) {
      const auto s = fi.slot(j);
      if (covered[s]) continue;  // a repeated pattern counts once
      covered[s] = 1;
      sum[fi.group_of(j)] += constraints_->constraints[j].target;
    }
    for (std::size_t g = 0; g < fi.groups().size(); ++g) {
      if (std::abs(sum[g] - 1.0) > 1e-9) continue;
      const auto& grp = fi.groups()[g];
      for (std::size_t c = 0; c < grp.combos; ++c)
        if (!covered[grp.offset + c]) forbidden[grp.offset + c] = 1;
    }
    return forbidden;
  }

  std::shared_ptr<const ConstraintSet> constraints_;
  std::shared_ptr<const FeatureIndex> features_;
  std::shared_ptr<const std::vector<char>> forbidden_;
  std::vector<double> lambda_;
  CellIndex cap_;
  bool restricted_ = false;
};

/// f_j(x) = 1[x in S_j].
inline int feature_value(const AttributeSchema& schema, const Pattern& pattern, CellIndex cell) {
  return pattern.matches(schema, cell) ? 1 : 0;
}

/// Reusable buffers for exact evaluation of log Z and moments by enumeration.
class ExactEvaluator {
 public:
  explicit ExactEvaluator(const MaxEntModel& model)
      : model_(&model), features_(&model.features()) {
    model.require_exact();
    cells_.resize(model.schema().cell_count());
    theta_.resize(features_->flat_size());
    mass_.resize(features_->flat_size());
  }

  /// Returns log Z(lambda) and writes E_p[f_j] into moments.
  double evaluate(std::span<const double> lambda, std::span<double> moments) {
    const double shift = unnormalized(lambda);
    features_->accumulate(cells_, mass_);
    for (auto& m : mass_) m /= z_;
    features_->gather(mass_, moments);
    return shift + std::log(z_);
  }

  double log_partition(std::span<const double> lambda) {
    return unnormalized(lambda) + std::log(z_);
  }

  std::vector<double> probabilities(std::span<const double> lambda) {
    unnormalized(lambda);
    std::vector<double> p(cells_.size());
    for (std::size_t x = 0; x < p.size(); ++x) p[x] = cells_[x] / z_;
    return p;
  }

 private:
  /// Fills cells_ with exp(energy - max energy); returns the shift.
  double unnormalized(std::span<const double> lambda) {
    model_->theta(lambda, theta_);
    features_->energies(theta_, cells_);
    double shift = -std::numeric_limits<double>::infinity();
    for (double e : cells_) shift = std::max(shift, e);
    if (!std::isfinite(shift))
      throw ValidationError("the constraints leave no admissible cell in the attribute space");
    // Neumaier summation: Z feeds the line search, so its rounding noise
    // must stay well below the decrease the optimizer is looking for.
    double sum = 0.0, comp = 0.0;
    for (auto& e : cells_) {
      e = std::exp(e - shift);
      const double t = sum + e;
      comp += std::abs(sum) >= e ? (sum - t) + e : (e - t) + sum;
      sum = t;
    }
    z_ = sum + comp;
    return shift;
  }

  const MaxEntModel* model_;
  const FeatureIndex* features_;
  std::vector<double> cells_, theta_, mass_;
  double z_ = 1.0;
};

inline double log_partition(const MaxEntModel& model) {
  ExactEvaluator ev(model);
  return ev.log_partition(model.lambda());
}

inline std::vector<double> model_moments(const MaxEntModel& model) {
  ExactEvaluator ev(model);
  std::vector<double> m(model.size());
  ev.evaluate(model.lambda(), m);
  return m;
}

/// p_lambda over all cells in canonical order.
inline std::vector<double> cell_probabilities(const MaxEntModel& model) {
  ExactEvaluator ev(model);
  return ev.probabilities(model.lambda());
}

struct DualValue {
  double value = 0.0;
  std::vector<double> gradient;
};

/// Phi(lambda) = log Z(lambda) - lambda . alpha, gradient E_p[f] - alpha.
inline DualValue dual_objective(const MaxEntModel& model) {
  ExactEvaluator ev(model);
  DualValue d;
  d.gradient.resize(model.size());
  d.value = ev.evaluate(model.lambda(), d.gradient);
  const auto& cs = model.constraints().constraints;
  for (std::size_t j = 0; j < cs.size(); ++j) {
    d.value -= model.lambda()[j] * cs[j].target;
    d.gradient[j] -= cs[j].target;
  }
  return d;
}

// --- fitting -----------------------------------------------------------------

struct FitOptions {
  /// Max-norm gradient tolerance (the moment residual in hard mode).
  double tolerance = 1e-6;
  int max_iterations = 5000;
  int history = 10;
  CellIndex enumeration_cap = kDefaultEnumerationCap;
  /// Exclude cells the targets force to zero (see MaxEntModel). Applies to
  /// hard fits; soft fits always use the full space.
  bool restrict_support = false;
};

struct SoftFitConfig {
  double beta = 1.0;
  /// Per-constraint weights w_j >= 0; empty means all 1. w_j = 0 drops constraint j.
  std::vector<double> weights;

  void validate(std::size_t m) const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("soft beta must be > 0");
    if (!weights.empty() && weights.size() != m)
      throw ValidationError("soft weights: expected " + std::to_string(m) + " values");
    for (double w : weights)
      if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("soft weights must be >= 0");
  }
};

struct FitReport {
  int iterations = 0;
  /// Phi(lambda) at the returned multipliers.
  double dual_value = 0.0;
  /// Value actually minimized (Phi plus the soft penalty, if any).
  double objective = 0.0;
  /// max_j |E_p[f_j] - alpha_j|.
  double moment_residual = 0.0;
  bool converged = false;
  double wall_seconds = 0.0;
  std::string method;
  std::string status;
};

struct FitResult {
  MaxEntModel model;
  FitReport report;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline const char* status_name(LbfgsStatus s) {
  switch (s) {
    case LbfgsStatus::Converged: return "converged";
    case LbfgsStatus::IterationLimit: return "iteration-limit";
    case LbfgsStatus::LineSearchFailed: return "line-search-failed";
  }
  return "unknown";
}

/// Minimizes Phi(lambda) + sum_j lambda_j^2 * penalty_j / 2 over the
/// constraints with finite penalty; infinite penalty pins lambda_j to 0.
inline FitResult fit_exact(const ConstraintSet& cs, std::span<const double> penalty,
                           const FitOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  if (opts.max_iterations < 0) throw ValidationError("max_iterations must be >= 0");
  if (!(opts.tolerance > 0.0)) throw ValidationError("tolerance must be > 0");
  if (opts.history < 1) throw ValidationError("history must be >= 1");
  MaxEntModel model(cs, {}, opts.enumeration_cap, penalty.empty() && opts.restrict_support);
  model.require_exact();
  const std::size_t m = cs.size();

  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < m; ++j)
    if (penalty.empty() || std::isfinite(penalty[j])) active.push_back(j);

  ExactEvaluator ev(model);
  std::vector<double> lambda(m, 0.0), moments(m);
  const auto targets = cs.targets();

  auto objective = [&](std::span<const double> x, std::span<double> grad) {
    for (std::size_t i = 0; i < active.size(); ++i) lambda[active[i]] = x[i];
    double value = ev.evaluate(lambda, moments);
    for (std::size_t i = 0; i < active.size(); ++i) {
      const std::size_t j = active[i];
      value -= x[i] * targets[j];
      grad[i] = moments[j] - targets[j];
      if (!penalty.empty()) {
        value += 0.5 * penalty[j] * x[i] * x[i];
        grad[i] += penalty[j] * x[i];
      }
    }
    return value;
  };

  LbfgsOptions lo;
  lo.history = opts.history;
  lo.max_iterations = opts.max_iterations;
  lo.gradient_tolerance = opts.tolerance;
  // Var(f_j) at the solution is about alpha_j (1 - alpha_j): scale each
  // coordinate by its inverse so rare patterns are not starved of step.
  lo.preconditioner.resize(active.size());
  for (std::size_t i = 0; i < active.size(); ++i) {
    const double a = targets[active[i]];
    double curvature = a * (1.0 - a);
    if (!penalty.empty()) curvature += penalty[active[i]];
    lo.preconditioner[i] = 1.0 / std::max(curvature, 1e-12);
  }
  const auto res = minimize_lbfgs(objective, std::vector<double>(active.size(), 0.0), lo);

  std::fill(lambda.begin(), lambda.end(), 0.0);
  for (std::size_t i = 0; i < active.size(); ++i) lambda[active[i]] = res.x[i];

  FitReport rep;
  rep.iterations = res.iterations;
  rep.objective = res.value;
  rep.dual_value = ev.evaluate(lambda, moments);
  for (std::size_t j = 0; j < m; ++j) {
    rep.dual_value -= lambda[j] * targets[j];
    rep.moment_residual = std::max(rep.moment_residual, std::abs(moments[j] - targets[j]));
  }
  rep.converged = res.converged();
  rep.status = status_name(res.status);
  rep.method = penalty.empty() ? "exact-lbfgs" : "exact-lbfgs-soft";
  rep.wall_seconds = seconds_since(t0);
  return {model.with_lambda(std::move(lambda)), rep};
}

}  // namespace detail

/// Minimizes the dual log Z(lambda) - lambda . alpha from lambda = 0. A run
/// that stops at the iteration cap is reported with converged = false.
inline FitResult fit_hard(const ConstraintSet& cs, const FitOptions& opts = {}) {
  return detail::fit_exact(cs, {}, opts);
}

/// Minimizes Phi(lambda) + (1/(2 beta)) sum_j lambda_j^2 / w_j, the dual of the
/// entropy objective with quadratic penalties on the moment gaps.
inline FitResult fit_soft(const ConstraintSet& cs, const SoftFitConfig& cfg,
                          const FitOptions& opts = {}) {
  cfg.validate(cs.size());
  std::vector<double> penalty(cs.size());
  for (std::size_t j = 0; j < cs.size(); ++j) {
    const double w = cfg.weights.empty() ? 1.0 : cfg.weights[j];
    penalty[j] = w > 0.0 ? 1.0 / (cfg.beta * w) : std::numeric_limits<double>::infinity();
  }
  return detail::fit_exact(cs, penalty, opts);
}

// --- sampling ----------------------------------------------------------------

/// n i.i.d. draws from p_lambda by alias sampling over the enumerated cells.
inline Population sample_population(const MaxEntModel& model, std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("sample size must be >= 1");
  const auto p = cell_probabilities(model);
  const AliasTable table(p);
  Rng rng(seed);
  std::vector<CellIndex> draws(static_cast<std::size_t>(n));
  for (auto& d : draws) d = table.sample(rng);
  return Population::from_cells(model.schema(), draws);
}

/// Single-site Metropolis chain on the Gibbs distribution of a model. Works
/// without enumerating the attribute space. On a restricted support, moves
/// that leave the support are rejected and moves toward it accepted; note
/// that single-site moves need not connect every admissible cell.
class MetropolisChain {
 public:
  MetropolisChain(const MaxEntModel& model, std::uint64_t seed)
      : features_(&model.features()), forbidden_(model.forbidden_slots()), rng_(seed) {
    const auto& schema = model.schema();
    digits_.resize(schema.size());
    for (std::size_t k = 0; k < schema.size(); ++k)
      digits_[k] = static_cast<int>(rng_.below(static_cast<std::uint64_t>(schema.domain_size(k))));
    theta_.resize(features_->flat_size());
    set_lambda(model.lambda());
  }

  void set_lambda(std::span<const double> lambda) { features_->scatter(lambda, theta_); }

  /// K single-site proposals: uniform attribute, uniform category, accepted
  /// with probability min(1, exp(energy change)).
  void sweep() {
    const auto& schema = features_->schema();
    const std::size_t K = schema.size();
    for (std::size_t step = 0; step < K; ++step) {
      const auto k = static_cast<std::size_t>(rng_.below(K));
      const int proposal = static_cast<int>(rng_.below(static_cast<std::uint64_t>(schema.domain_size(k))));
      const int current = digits_[k];
      ++proposed_;
      if (proposal == current) {
        ++accepted_;
        continue;
      }
      double delta = 0.0;
      int violations = 0;
      for (std::size_t g : features_->attribute_groups(k)) {
        const auto& grp = features_->groups()[g];
        const double* th = theta_.data() + grp.offset;
        const std::uint32_t before = features_->combo(g, digits_);
        std::uint32_t stride = 0;
        for (std::size_t i = 0; i < grp.attributes.size(); ++i)
          if (static_cast<std::size_t>(grp.attributes[i]) == k) stride = grp.strides[i];
        const std::uint32_t after = before - static_cast<std::uint32_t>(current) * stride +
                                    static_cast<std::uint32_t>(proposal) * stride;
        delta += th[after] - th[before];
        if (!forbidden_.empty())
          violations += forbidden_[grp.offset + after] - forbidden_[grp.offset + before];
      }
      if (violations > 0) continue;
      if (violations < 0 || delta >= 0.0 || rng_.uniform() < std::exp(delta)) {
        digits_[k] = proposal;
        ++accepted_;
      }
    }
  }

  /// flat[slot of the current state in every group] += 1.
  void record(std::span<double> flat) const {
    for (std::size_t g = 0; g < features_->groups().size(); ++g)
      flat[features_->groups()[g].offset + features_->combo(g, digits_)] += 1.0;
  }

  std::span<const int> state() const noexcept { return digits_; }
  double acceptance_rate() const noexcept {
    return proposed_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(proposed_);
  }

 private:
  const FeatureIndex* features_;
  std::span<const char> forbidden_;
  Rng rng_;
  std::vector<int> digits_;
  std::vector<double> theta_;
  std::int64_t proposed_ = 0, accepted_ = 0;
};

/// Post-burn-in time averages of every feature along one Metropolis chain.
/// `sweeps` counts all sweeps, burn-in included.
inline std::vector<double> metropolis_moments(const MaxEntModel& model, std::int64_t sweeps,
                                              std::int64_t burn_in, std::uint64_t seed) {
  if (burn_in < 0 || sweeps <= burn_in)
    throw ValidationError("metropolis_moments needs sweeps > burn_in >= 0");
  MetropolisChain chain(model, seed);
  std::vector<double> flat(model.features().flat_size(), 0.0);
  for (std::int64_t s = 0; s < sweeps; ++s) {
    chain.sweep();
    if (s >= burn_in) chain.record(flat);
  }
  const double kept = static_cast<double>(sweeps - burn_in);
  for (auto& v : flat) v /= kept;
  std::vector<double> out(model.size());
  model.features().gather(flat, out);
  return out;
}

struct MetropolisFitOptions {
  int iterations = 2000;
  std::int64_t sweeps_per_iteration = 200;
  std::int64_t burn_in = 1000;
  /// Step size at iteration t is step / sqrt(t).
  double step = 0.1;
  /// Converged when the estimated moment residual drops to this.
  double tolerance = 1e-2;
  std::uint64_t seed = 0;
};

/// Stochastic-gradient fit with moments estimated on a persistent Metropolis
/// chain; the fallback when the space is too large to enumerate.
inline FitResult fit_metropolis(const ConstraintSet& cs, const MetropolisFitOptions& opts,
                                CellIndex enumeration_cap = kDefaultEnumerationCap) {
  const auto t0 = std::chrono::steady_clock::now();
  if (opts.iterations < 1 || opts.sweeps_per_iteration < 1 || opts.burn_in < 0 || !(opts.step > 0.0))
    throw ValidationError("invalid Metropolis fit options");
  MaxEntModel model(cs, {}, enumeration_cap);
  const std::size_t m = cs.size();
  const auto targets = cs.targets();
  std::vector<double> lambda(m, 0.0), est(m), flat(model.features().flat_size());
  MetropolisChain chain(model, opts.seed);
  for (std::int64_t s = 0; s < opts.burn_in; ++s) chain.sweep();

  FitReport rep;
  rep.method = "metropolis-sgd";
  for (int t = 1; t <= opts.iterations; ++t) {
    std::fill(flat.begin(), flat.end(), 0.0);
    for (std::int64_t s = 0; s < opts.sweeps_per_iteration; ++s) {
      chain.sweep();
      chain.record(flat);
    }
    for (auto& v : flat) v /= static_cast<double>(opts.sweeps_per_iteration);
    model.features().gather(flat, est);
    rep.moment_residual = 0.0;
    const double eta = opts.step / std::sqrt(static_cast<double>(t));
    for (std::size_t j = 0; j < m; ++j) {
      const double g = est[j] - targets[j];
      rep.moment_residual = std::max(rep.moment_residual, std::abs(g));
      lambda[j] -= eta * g;
    }
    chain.set_lambda(lambda);
    rep.iterations = t;
    if (rep.moment_residual <= opts.tolerance) {
      rep.converged = true;
      break;
    }
  }
  rep.status = rep.converged ? "converged" : "iteration-limit";
  if (model.exact_mode()) {
    auto fitted = model.with_lambda(lambda);
    const auto d = dual_objective(fitted);
    rep.dual_value = rep.objective = d.value;
  } else {
    rep.dual_value = rep.objective = std::numeric_limits<double>::quiet_NaN();
  }
  rep.wall_seconds = detail::seconds_since(t0);
  return {model.with_lambda(std::move(lambda)), rep};
}

// --- serialization -----------------------------------------------------------

inline nlohmann::json to_json(const FitReport& r) {
  nlohmann::json j = {{"iterations", r.iterations},
                      {"moment_residual", r.moment_residual},
                      {"converged", r.converged},
                      {"wall_seconds", r.wall_seconds},
                      {"method", r.method},
                      {"status", r.status}};
  // NaN is not representable in JSON
  j["dual_value"] = std::isfinite(r.dual_value) ? nlohmann::json(r.dual_value) : nlohmann::json();
  j["objective"] = std::isfinite(r.objective) ? nlohmann::json(r.objective) : nlohmann::json();
  return j;
}

inline FitReport fit_report_from_json(const nlohmann::json& j) {
  FitReport r;
  r.iterations = j.value("iterations", 0);
  r.moment_residual = j.value("moment_residual", 0.0);
  r.converged = j.value("converged", false);
  r.wall_seconds = j.value("wall_seconds", 0.0);
  r.method = j.value("method", "");
  r.status = j.value("status", "");
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  r.dual_value = j.contains("dual_value") && j["dual_value"].is_number() ? j["dual_value"].get<double>() : nan;
  r.objective = j.contains("objective") && j["objective"].is_number() ? j["objective"].get<double>() : nan;
  return r;
}

inline nlohmann::json to_json(const MaxEntModel& model, const FitReport& report,
                              const Provenance& prov = {}) {
  nlohmann::json j;
  j["format"] = "popsynth.model";
  j["format_version"] = 1;
  j["provenance"] = prov.to_json();
  j["schema_digest"] = model.schema().digest();
  j["constraint_digest"] = model.constraints().digest();
  j["enumeration_cap"] = model.enumeration_cap();
  j["restricted_support"] = model.restricted_support();
  j["lambda"] = std::vector<double>(model.lambda().begin(), model.lambda().end());
  j["report"] = to_json(report);
  j["constraints"] = to_json(model.constraints());
  return j;
}

struct LoadedModel {
  MaxEntModel model;
  FitReport report;
};

inline LoadedModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "popsynth.model") throw ValidationError("not a popsynth model file");
  try {
    auto cs = constraint_set_from_json(j.at("constraints"));
    if (j.at("schema_digest") != cs.schema.digest()) throw ValidationError("schema digest mismatch");
    if (j.at("constraint_digest") != cs.digest()) throw ValidationError("constraint digest mismatch");
    MaxEntModel model(std::move(cs), j.at("lambda").get<std::vector<double>>(),
                      j.value("enumeration_cap", kDefaultEnumerationCap),
                      j.value("restricted_support", false));
    return {std::move(model), fit_report_from_json(j.at("report"))};
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("malformed model file: ") + ex.what());
  }
}

}  // namespace popsynth
