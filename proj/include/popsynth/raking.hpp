#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "popsynth/constraints.hpp"
#include "popsynth/error.hpp"
#include "popsynth/feature_index.hpp"
#include "popsynth/maxent.hpp"
#include "popsynth/population.hpp"
#include "popsynth/provenance.hpp"
#include "popsynth/random.hpp"

namespace popsynth {

inline constexpr int kDefaultRakingPasses = 1000;

/// Raking state: one nonnegative weight per enumerated cell, summing to 1.
struct WeightVector {
  AttributeSchema schema;
  std::vector<double> weights;
  /// Full passes actually performed.
  int passes = 0;
  /// max_j |weighted mass of S_j - alpha_j| after the last pass.
  double residual = 0.0;
  std::string constraint_digest;
};

struct RakeOptions {
  int iterations = kDefaultRakingPasses;
  /// Stop after a pass in which no constraint's mass was further than this
  /// from its target before its own update. 0 runs every pass.
  double tolerance = 0.0;
  CellIndex enumeration_cap = kDefaultEnumerationCap;
};

/// Mass of every pattern under a cell weight vector.
inline std::vector<double> pattern_masses(const FeatureIndex& features, std::span<const double> weights) {
  std::vector<double> flat(features.flat_size()), out(features.pattern_count());
  features.accumulate(weights, flat);
  features.gather(flat, out);
  return out;
}

/// Generalized raking over the enumerated cells. Constraints are processed in
/// set order; constraint j rescales its pattern to mass alpha_j and the
/// complement to 1 - alpha_j, which leaves the total at 1. Starts from
/// uniform weights, or from the empirical distribution of `base`.
inline WeightVector rake(const ConstraintSet& cs, const RakeOptions& opts = {},
                         const Population* base = nullptr) {
  if (opts.iterations < 1) throw ValidationError("raking needs at least one pass");
  if (!(opts.tolerance >= 0.0)) throw ValidationError("raking tolerance must be >= 0");
  cs.validate();
  const auto& schema = cs.schema;
  if (schema.empty()) throw ValidationError("raking over an empty schema");
  if (schema.cell_count() > opts.enumeration_cap)
    throw CapacityError("attribute space has " + std::to_string(schema.cell_count()) +
                        " cells, above the enumeration cap of " + std::to_string(opts.enumeration_cap));

  std::vector<Pattern> patterns;
  for (const auto& c : cs.constraints) patterns.push_back(c.pattern);
  const FeatureIndex features(schema, patterns);

  WeightVector wv;
  wv.schema = schema;
  wv.constraint_digest = cs.digest();
  auto& w = wv.weights;
  if (base) {
    if (!(base->schema() == schema)) throw SchemaMismatchError("base population schema differs");
    if (base->empty()) throw DegenerateInputError("empty base population");
    w.assign(schema.cell_count(), 0.0);
    for (const auto& [cell, c] : base->counts())
      w[cell] = static_cast<double>(c) / static_cast<double>(base->total());
  } else {
    w.assign(schema.cell_count(), 1.0 / static_cast<double>(schema.cell_count()));
  }

  std::size_t max_combos = 1;
  for (const auto& g : features.groups()) max_combos = std::max<std::size_t>(max_combos, g.combos);
  std::vector<double> mass(max_combos), factor(max_combos);

  for (int pass = 0; pass < opts.iterations; ++pass) {
    double worst = 0.0;
    // Consecutive constraints on the same attribute set have disjoint
    // patterns, so one scan yields all their masses and one scan applies
    // the accumulated factors.
    for (std::size_t start = 0; start < cs.size();) {
      const std::size_t g = features.group_of(start);
      std::size_t end = start + 1;
      while (end < cs.size() && features.group_of(end) == g) ++end;

      const auto& grp = features.groups()[g];
      features.accumulate_group(g, w, mass);
      std::fill(factor.begin(), factor.begin() + grp.combos, 1.0);
      for (std::size_t j = start; j < end; ++j) {
        const std::size_t c = features.slot(j) - grp.offset;
        const double alpha = cs.constraints[j].target;
        const double m = mass[c];
        if (!(m > 0.0))
          throw UnmatchableConstraintError("constraint " + std::to_string(j) + " (" +
                                               cs.constraints[j].pattern.describe(schema) +
                                               ") has zero mass and positive target",
                                           j);
        worst = std::max(worst, std::abs(m - alpha));
        const double outside = 1.0 - m;
        double out_factor = 1.0;
        if (outside > 0.0) {
          out_factor = (1.0 - alpha) / outside;
        } else if (alpha < 1.0) {
          throw UnmatchableConstraintError("constraint " + std::to_string(j) + " (" +
                                               cs.constraints[j].pattern.describe(schema) +
                                               ") holds all the mass; its complement cannot be raised",
                                           j);
        }
        for (std::size_t k = 0; k < grp.combos; ++k) {
          if (k == c) continue;
          factor[k] *= out_factor;
          mass[k] *= out_factor;
        }
        factor[c] *= alpha / m;
        mass[c] = alpha;
      }
      features.scale_group(g, std::span<const double>(factor.data(), grp.combos), w);
      start = end;
    }
    // clear accumulated rounding drift
    double total = 0.0;
    for (double v : w) total += v;
    for (auto& v : w) v /= total;
    wv.passes = pass + 1;
    if (opts.tolerance > 0.0 && worst <= opts.tolerance) break;
  }

  const auto masses = pattern_masses(features, w);
  for (std::size_t j = 0; j < cs.size(); ++j)
    wv.residual = std::max(wv.residual, std::abs(masses[j] - cs.constraints[j].target));
  return wv;
}

/// n i.i.d. draws from the weight distribution.
inline Population sample_weighted(const WeightVector& wv, std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("sample size must be >= 1");
  const AliasTable table(wv.weights);
  Rng rng(seed);
  std::vector<CellIndex> draws(static_cast<std::size_t>(n));
  for (auto& d : draws) d = table.sample(rng);
  return Population::from_cells(wv.schema, draws);
}

inline nlohmann::json to_json(const WeightVector& wv, const Provenance& prov = {}) {
  nlohmann::json j;
  j["format"] = "popsynth.weights";
  j["format_version"] = 1;
  j["provenance"] = prov.to_json();
  j["schema"] = schema_to_json(wv.schema);
  j["schema_digest"] = wv.schema.digest();
  j["constraint_digest"] = wv.constraint_digest;
  j["passes"] = wv.passes;
  j["residual"] = wv.residual;
  j["weights"] = wv.weights;
  return j;
}

inline WeightVector weights_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "popsynth.weights") throw ValidationError("not a popsynth weights file");
  WeightVector wv;
  try {
    wv.schema = schema_from_json(j.at("schema"));
    if (j.at("schema_digest") != wv.schema.digest()) throw ValidationError("schema digest mismatch");
    wv.constraint_digest = j.at("constraint_digest").get<std::string>();
    wv.passes = j.at("passes").get<int>();
    wv.residual = j.at("residual").get<double>();
    wv.weights = j.at("weights").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("malformed weights file: ") + ex.what());
  }
  if (wv.weights.size() != wv.schema.cell_count())
    throw ValidationError("weights file does not cover the attribute space");
  return wv;
}

}  // namespace popsynth
