#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace popsynth;
using testing_support::make_constraints;
using testing_support::synthetic_problem;

namespace {

std::vector<double> random_lambda(Rng& rng, std::size_t m, double scale) {
  std::vector<double> l(m);
  for (auto& v : l) v = scale * (2.0 * rng.uniform() - 1.0);
  return l;
}

/// Random constraint set of mixed arity over the given domains.
ConstraintSet random_constraints(Rng& rng, const std::vector<int>& dims, std::size_t m) {
  ConstraintSet cs;
  cs.schema = AttributeSchema::with_domain_sizes(dims);
  const int K = static_cast<int>(dims.size());
  while (cs.size() < m) {
    const int arity = 1 + static_cast<int>(rng.below(std::min(3, K)));
    std::vector<Literal> lits;
    while (static_cast<int>(lits.size()) < arity) {
      const int a = static_cast<int>(rng.below(K));
      bool dup = false;
      for (const auto& l : lits) dup |= l.attribute == a;
      if (!dup) lits.push_back({a, static_cast<int>(rng.below(dims[a]))});
    }
    cs.constraints.push_back({Pattern(lits), 0.05 + 0.5 * rng.uniform()});
  }
  return cs;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST(Lbfgs, Quadratic) {
  // f(x) = sum_i i * (x_i - 1)^2
  auto f = [](std::span<const double> x, std::span<double> g) {
    double v = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double c = static_cast<double>(i + 1);
      v += c * (x[i] - 1.0) * (x[i] - 1.0);
      g[i] = 2.0 * c * (x[i] - 1.0);
    }
    return v;
  };
  auto r = minimize_lbfgs(f, std::vector<double>(8, 0.0));
  EXPECT_TRUE(r.converged());
  for (double v : r.x) EXPECT_NEAR(v, 1.0, 1e-6);
}

TEST(Lbfgs, Rosenbrock) {
  auto f = [](std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  LbfgsOptions o;
  o.gradient_tolerance = 1e-8;
  auto r = minimize_lbfgs(f, {-1.2, 1.0}, o);
  EXPECT_TRUE(r.converged());
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.x[1], 1.0, 1e-6);
}

TEST(FeatureValue, Examples) {
  auto s = AttributeSchema::with_domain_sizes(std::vector<int>{2, 2});
  EXPECT_EQ(feature_value(s, Pattern{{0, 0}}, s.encode(std::vector<int>{0, 1})), 1);
  EXPECT_EQ(feature_value(s, Pattern{{0, 0}, {1, 1}}, s.encode(std::vector<int>{0, 0})), 0);
  int hits = 0;
  for (CellIndex x = 0; x < 4; ++x) hits += feature_value(s, Pattern{{0, 0}}, x);
  EXPECT_EQ(hits, 2);
}

TEST(LogPartition, Examples) {
  auto empty = make_constraints({4, 9}, {});
  EXPECT_NEAR(log_partition(MaxEntModel(empty)), std::log(36.0), 1e-14);

  // A=0 and A=1 partition the space; equal multipliers shift log Z by c.
  auto cover = make_constraints({3, 2, 2}, {{Pattern{{0, 0}}, 0.3}, {Pattern{{0, 1}}, 0.3}, {Pattern{{0, 2}}, 0.3}});
  const double c = 1.7;
  EXPECT_NEAR(log_partition(MaxEntModel(cover, {c, c, c})), std::log(12.0) + c, 1e-13);

  auto one = make_constraints({2, 2}, {{Pattern{{0, 0}}, 0.5}});
  EXPECT_NEAR(log_partition(MaxEntModel(one, {std::log(3.0)})), std::log(8.0), 1e-14);
}

TEST(LogPartition, MatchesOracleIncludingBlockedSpaces) {
  Rng rng(2024);
  // The last space has more cells than one enumeration block.
  for (const auto& dims : {std::vector<int>{2, 3, 4}, std::vector<int>{3, 3, 2, 2, 3},
                           std::vector<int>{4, 4, 4, 4, 4, 4, 2}}) {
    auto cs = random_constraints(rng, dims, 25);
    for (int t = 0; t < 3; ++t) {
      auto lambda = random_lambda(rng, cs.size(), 2.0);
      MaxEntModel model(cs, lambda);
      EXPECT_NEAR(log_partition(model), oracle::log_partition(cs, lambda), 1e-10);
      EXPECT_LT(max_abs_diff(model_moments(model), oracle::moments(cs, lambda)), 1e-12);
      EXPECT_LT(max_abs_diff(cell_probabilities(model), oracle::probabilities(cs, lambda)), 1e-13);
    }
  }
}

TEST(Moments, UniformModel) {
  Rng rng(5);
  std::vector<int> dims{3, 2, 4};
  auto cs = random_constraints(rng, dims, 12);
  auto m = model_moments(MaxEntModel(cs));
  for (std::size_t j = 0; j < cs.size(); ++j) {
    const double frac = static_cast<double>(cs.constraints[j].pattern.cell_count(cs.schema)) / 24.0;
    EXPECT_NEAR(m[j], frac, 1e-14);
  }
}

TEST(Moments, SaturateMonotonically) {
  auto cs = make_constraints({2, 3}, {{Pattern{{0, 0}, {1, 2}}, 0.5}});
  double prev = 0.0;
  for (double l : {0.0, 2.0, 5.0}) {
    const double m = model_moments(MaxEntModel(cs, {l}))[0];
    EXPECT_NEAR(m, oracle::moments(cs, {l})[0], 1e-14);
    EXPECT_GT(m, prev);
    prev = m;
  }
  EXPECT_GT(prev, 0.95);
}

TEST(Dual, AtZero) {
  Rng rng(8);
  auto cs = random_constraints(rng, {2, 3, 3}, 10);
  auto d = dual_objective(MaxEntModel(cs));
  EXPECT_NEAR(d.value, std::log(18.0), 1e-14);
  for (std::size_t j = 0; j < cs.size(); ++j)
    EXPECT_NEAR(d.gradient[j],
                static_cast<double>(cs.constraints[j].pattern.cell_count(cs.schema)) / 18.0 -
                    cs.constraints[j].target,
                1e-14);
}

TEST(Dual, GradientMatchesFiniteDifferences) {
  Rng rng(77);
  for (int t = 0; t < 20; ++t) {
    std::vector<int> dims;
    const int K = 2 + static_cast<int>(rng.below(4));
    for (int k = 0; k < K; ++k) dims.push_back(2 + static_cast<int>(rng.below(3)));
    auto cs = random_constraints(rng, dims, 4 + rng.below(12));
    auto lambda = random_lambda(rng, cs.size(), 1.5);
    auto d = dual_objective(MaxEntModel(cs, lambda));
    EXPECT_NEAR(d.value, oracle::dual(cs, lambda), 1e-10);
    const double h = 1e-5;
    for (std::size_t j = 0; j < cs.size(); ++j) {
      auto up = lambda, dn = lambda;
      up[j] += h;
      dn[j] -= h;
      const double fd = (oracle::dual(cs, up) - oracle::dual(cs, dn)) / (2 * h);
      EXPECT_LE(std::abs(fd - d.gradient[j]), 1e-5 * std::max(std::abs(d.gradient[j]), 1e-3))
          << "trial " << t << " coordinate " << j;
    }
  }
}

TEST(Dual, ConvexityProbe) {
  Rng rng(13);
  for (int t = 0; t < 50; ++t) {
    auto cs = random_constraints(rng, {3, 2, 3, 2}, 10);
    auto a = random_lambda(rng, cs.size(), 4.0), b = random_lambda(rng, cs.size(), 4.0);
    const double s = 0.05 + 0.9 * rng.uniform();
    std::vector<double> mix(cs.size());
    for (std::size_t j = 0; j < mix.size(); ++j) mix[j] = s * a[j] + (1 - s) * b[j];
    const double lhs = dual_objective(MaxEntModel(cs, mix)).value;
    const double rhs = s * dual_objective(MaxEntModel(cs, a)).value +
                       (1 - s) * dual_objective(MaxEntModel(cs, b)).value;
    EXPECT_LE(lhs, rhs + 1e-9);
  }
}

TEST(Model, NormalizedForExtremeMultipliers) {
  Rng rng(3);
  auto cs = random_constraints(rng, {3, 3, 3, 3}, 30);
  for (double scale : {1.0, 50.0, 600.0}) {
    auto p = cell_probabilities(MaxEntModel(cs, random_lambda(rng, cs.size(), scale)));
    double s = 0.0;
    for (double v : p) {
      ASSERT_TRUE(std::isfinite(v));
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-10);
  }
}

TEST(Model, Validation) {
  auto cs = make_constraints({2, 2}, {{Pattern{{0, 0}}, 1.0}});
  EXPECT_THROW(MaxEntModel{cs}, ValidationError);
  auto bad = make_constraints({2, 2}, {{Pattern{{0, 0}}, 0.0}});
  EXPECT_THROW(MaxEntModel{bad}, ValidationError);
  auto out = make_constraints({2, 2}, {{Pattern{{2, 0}}, 0.5}});
  EXPECT_THROW(MaxEntModel{out}, DomainError);
  auto ok = make_constraints({2, 2}, {{Pattern{{0, 0}}, 0.5}});
  EXPECT_THROW(MaxEntModel(ok, {1.0, 2.0}), ValidationError);
}

TEST(Model, CapacityError) {
  auto cs = make_constraints({4, 4, 4}, {{Pattern{{0, 0}}, 0.5}});
  FitOptions o;
  o.enumeration_cap = 32;
  EXPECT_THROW(fit_hard(cs, o), CapacityError);
  EXPECT_THROW(log_partition(MaxEntModel(cs, {}, 32)), CapacityError);
}

TEST(FitHard, SyntheticProblemsConverge) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto cs = synthetic_problem({3, 2, 4, 2, 3}, 3000, seed);
    auto fit = fit_hard(cs);
    EXPECT_TRUE(fit.report.converged) << fit.report.status;
    EXPECT_LE(fit.report.moment_residual, 1e-6);
    EXPECT_LT(max_abs_diff(model_moments(fit.model), cs.targets()), 1e-6);
  }
}

TEST(FitHard, EmptyProblemIsUniform) {
  auto fit = fit_hard(make_constraints({3, 4}, {}));
  EXPECT_EQ(fit.report.iterations, 0);
  EXPECT_TRUE(fit.report.converged);
  for (double p : cell_probabilities(fit.model)) EXPECT_NEAR(p, 1.0 / 12.0, 1e-15);
}

TEST(FitHard, UnaryOnlyIsProductOfTargets) {
  auto cs = make_constraints({2, 3}, {{Pattern{{0, 0}}, 0.25},
                                      {Pattern{{0, 1}}, 0.75},
                                      {Pattern{{1, 0}}, 0.2},
                                      {Pattern{{1, 1}}, 0.3},
                                      {Pattern{{1, 2}}, 0.5}});
  // The 1e-8 distribution-level check needs a tighter gradient tolerance
  // than the 1e-6 default.
  FitOptions tight;
  tight.tolerance = 1e-10;
  auto fit = fit_hard(cs, tight);
  auto m = model_moments(fit.model);
  EXPECT_NEAR(m[0], 0.25, 1e-8);
  EXPECT_NEAR(m[1], 0.75, 1e-8);
  const double a[2] = {0.25, 0.75}, b[3] = {0.2, 0.3, 0.5};
  std::vector<double> product;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) product.push_back(a[i] * b[j]);
  EXPECT_LE(oracle::total_variation(cell_probabilities(fit.model), product), 1e-8);
}

TEST(FitHard, DuplicatedConstraintLeavesDistributionUnchanged) {
  auto cs = synthetic_problem({3, 2, 3}, 2000, 9);
  auto dup = cs;
  dup.constraints.push_back(cs.constraints[4]);
  dup.constraints.push_back(cs.constraints[cs.size() - 1]);
  FitOptions tight;
  tight.tolerance = 1e-10;
  auto a = fit_hard(cs, tight), b = fit_hard(dup, tight);
  ASSERT_TRUE(b.report.converged);
  EXPECT_LE(oracle::total_variation(cell_probabilities(a.model), cell_probabilities(b.model)), 1e-8);
}

TEST(FitHard, RestrictedSupportExcludesImpliedZeros) {
  // A and B are copies, so off-diagonal pairs have no support and the pair
  // targets on the diagonal sum to one.
  auto pop = testing_support::make_population({2, 2, 2}, {{{0, 0, 0}, 3}, {{0, 0, 1}, 2}, {{1, 1, 0}, 1}, {{1, 1, 1}, 4}});
  auto cs = extract_constraints(pop);
  FitOptions o;
  o.restrict_support = true;
  auto fit = fit_hard(cs, o);
  EXPECT_TRUE(fit.report.converged);
  EXPECT_TRUE(fit.model.restricted_support());
  auto p = cell_probabilities(fit.model);
  for (CellIndex x = 0; x < p.size(); ++x) {
    auto d = cs.schema.decode(x);
    if (d[0] != d[1]) EXPECT_EQ(p[x], 0.0);
  }
  EXPECT_LE(max_abs_diff(model_moments(fit.model), cs.targets()), 1e-6);
  // Without the restriction the same targets are approached only in the limit.
  auto loose = fit_hard(cs);
  EXPECT_LT(oracle::total_variation(p, cell_probabilities(loose.model)), 1e-3);
}

TEST(FitSoft, LargeBetaMatchesHardFit) {
  auto cs = synthetic_problem({2, 3, 2, 2}, 3000, 4);
  auto hard = fit_hard(cs);
  auto soft = fit_soft(cs, {1e8, {}});
  EXPECT_LE(oracle::total_variation(cell_probabilities(hard.model), cell_probabilities(soft.model)), 1e-4);
}

TEST(FitSoft, ResidualShrinksWithBeta) {
  auto cs = synthetic_problem({3, 2, 3, 2}, 3000, 6);
  double prev = 1.0;
  for (double beta : {1e2, 1e4, 1e6}) {
    auto fit = fit_soft(cs, {beta, {}});
    EXPECT_TRUE(fit.report.converged);
    EXPECT_LT(fit.report.moment_residual, prev);
    prev = fit.report.moment_residual;
  }
  EXPECT_LE(prev, 1e-3);
}

TEST(FitSoft, InconsistentTargetsSplitTheDisagreement) {
  auto cs = make_constraints({2, 2}, {{Pattern{{0, 0}}, 0.3}, {Pattern{{0, 0}}, 0.6}});
  EXPECT_THROW(cs.validate_extracted(), ValidationError);
  // From the uniform start (moment 0.5) the moment moves toward the midpoint
  // 0.45 as beta grows; the worst residual falls toward 0.15 from above.
  double prev_residual = 1.0, prev_moment = 0.5;
  for (double beta : {1e1, 1e3, 1e5}) {
    auto fit = fit_soft(cs, {beta, {}});
    EXPECT_TRUE(fit.report.converged);
    auto m = model_moments(fit.model);
    EXPECT_NEAR(m[0], m[1], 1e-12);
    EXPECT_LT(m[0], prev_moment);
    EXPECT_GT(m[0], 0.45);
    EXPECT_LT(fit.report.moment_residual, prev_residual);
    EXPECT_GT(fit.report.moment_residual, 0.15);
    prev_residual = fit.report.moment_residual;
    prev_moment = m[0];
  }
  EXPECT_NEAR(prev_moment, 0.45, 1e-3);
}

TEST(FitSoft, ZeroWeightsGiveUniform) {
  auto cs = synthetic_problem({2, 3, 2}, 1000, 3);
  auto fit = fit_soft(cs, {1e1, std::vector<double>(cs.size(), 0.0)});
  for (double p : cell_probabilities(fit.model)) EXPECT_NEAR(p, 1.0 / 12.0, 1e-15);
}

TEST(FitSoft, Validation) {
  auto cs = make_constraints({2, 2}, {{Pattern{{0, 0}}, 0.5}});
  EXPECT_THROW(fit_soft(cs, {0.0, {}}), ValidationError);
  EXPECT_THROW(fit_soft(cs, {1.0, {1.0, 1.0}}), ValidationError);
  EXPECT_THROW(fit_soft(cs, {1.0, {-1.0}}), ValidationError);
}

TEST(Sampling, UniformConcentration) {
  auto model = MaxEntModel(make_constraints({2, 2}, {}));
  auto pop = sample_population(model, 400000, 1);
  EXPECT_EQ(pop.total(), 400000);
  for (CellIndex x = 0; x < 4; ++x) EXPECT_NEAR(pop.count(x) / 400000.0, 0.25, 0.005);
}

TEST(Sampling, SizesAndDeterminism) {
  auto fit = fit_hard(synthetic_problem({3, 2, 2}, 500, 2));
  auto one = sample_population(fit.model, 1, 3);
  EXPECT_EQ(one.total(), 1);
  EXPECT_EQ(one.counts().size(), 1u);
  EXPECT_EQ(sample_population(fit.model, 5000, 42), sample_population(fit.model, 5000, 42));
  EXPECT_FALSE(sample_population(fit.model, 5000, 42) == sample_population(fit.model, 5000, 43));
  EXPECT_THROW(sample_population(fit.model, 0, 1), ValidationError);
}

TEST(Sampling, AliasTableMatchesWeights) {
  const std::vector<double> w{0.0, 3.0, 1.0, 0.0, 6.0};
  AliasTable table(w);
  Rng rng(99);
  std::vector<int> hits(w.size(), 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++hits[table.sample(rng)];
  EXPECT_EQ(hits[0], 0);
  EXPECT_EQ(hits[3], 0);
  EXPECT_NEAR(hits[1] / double(n), 0.3, 0.005);
  EXPECT_NEAR(hits[2] / double(n), 0.1, 0.005);
  EXPECT_NEAR(hits[4] / double(n), 0.6, 0.005);
}

TEST(Metropolis, UniformModel) {
  auto cs = make_constraints({2, 2, 2}, {{Pattern{{0, 0}}, 0.5}, {Pattern{{1, 1}, {2, 0}}, 0.25}, {Pattern{{0, 1}, {1, 0}, {2, 1}}, 0.125}});
  auto est = metropolis_moments(MaxEntModel(cs), 100000, 1000, 5);
  EXPECT_NEAR(est[0], 0.5, 0.01);
  EXPECT_NEAR(est[1], 0.25, 0.01);
  EXPECT_NEAR(est[2], 0.125, 0.01);
  EXPECT_THROW(metropolis_moments(MaxEntModel(cs), 100, 100, 5), ValidationError);
}

TEST(Metropolis, MatchesExactMomentsOnFittedModel) {
  auto fit = fit_hard(synthetic_problem({3, 2, 3, 2}, 3000, 17));
  auto exact = model_moments(fit.model);
  auto est = metropolis_moments(fit.model, 1000000, 1000, 1);
  EXPECT_LE(max_abs_diff(est, exact), 0.01);
}

TEST(Metropolis, StochasticFitApproachesTargets) {
  auto cs = synthetic_problem({2, 3, 2}, 2000, 5);
  MetropolisFitOptions o;
  o.seed = 3;
  o.iterations = 3000;
  o.step = 0.5;
  o.tolerance = 0.02;
  auto fit = fit_metropolis(cs, o);
  EXPECT_EQ(fit.report.method, "metropolis-sgd");
  EXPECT_LE(max_abs_diff(model_moments(fit.model), cs.targets()), 0.05);
}

TEST(Serialization, ModelRoundTrip) {
  auto cs = synthetic_problem({3, 2, 2}, 800, 12);
  auto fit = fit_hard(cs);
  auto j = nlohmann::json::parse(to_json(fit.model, fit.report).dump());
  auto back = model_from_json(j);
  ASSERT_EQ(back.model.size(), fit.model.size());
  for (std::size_t i = 0; i < fit.model.size(); ++i) EXPECT_EQ(back.model.lambda()[i], fit.model.lambda()[i]);
  EXPECT_EQ(back.model.constraints().digest(), cs.digest());
  EXPECT_EQ(back.report.iterations, fit.report.iterations);
  EXPECT_EQ(back.report.moment_residual, fit.report.moment_residual);
  j["constraint_digest"] = "0000";
  EXPECT_THROW(model_from_json(j), ValidationError);
}
