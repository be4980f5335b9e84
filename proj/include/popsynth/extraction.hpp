#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "popsynth/constraints.hpp"
#include "popsynth/error.hpp"
#include "popsynth/population.hpp"

namespace popsynth {

/// Either an absolute count n >= 1 or a rate in (0, 1] of the candidates.
class ArityBudget {
 public:
  static ArityBudget count(std::int64_t n) {
    if (n < 1) throw ValidationError("budget count must be >= 1");
    ArityBudget b;
    b.count_ = n;
    return b;
  }

  static ArityBudget rate(double r) {
    if (!(r > 0.0 && r <= 1.0)) throw ValidationError("budget rate must be in (0, 1]");
    ArityBudget b;
    b.rate_ = r;
    return b;
  }

  bool is_count() const noexcept { return count_.has_value(); }
  std::int64_t count_value() const { return count_.value(); }
  double rate_value() const { return rate_.value(); }

  /// Number of candidates to keep: n, or ceil(rate * candidates); clamped.
  std::size_t resolve(std::size_t candidates) const {
    std::size_t k = 0;
    if (count_) {
      k = static_cast<std::size_t>(*count_);
    } else {
      // the slack absorbs representation error such as 0.1 * 30 = 3.0000000000000004
      k = static_cast<std::size_t>(std::ceil(*rate_ * static_cast<double>(candidates) - 1e-9));
    }
    return std::min(k, candidates);
  }

 private:
  ArityBudget() = default;
  std::optional<std::int64_t> count_;
  std::optional<double> rate_;
};

struct ExtractionBudget {
  ArityBudget binary = ArityBudget::rate(1.0);
  ArityBudget ternary = ArityBudget::rate(1.0);
  /// Highest arity extracted (1, 2 or 3); phases above it are skipped.
  int max_arity = 3;
};

struct ScoredScope {
  std::vector<int> attributes;
  double score = 0.0;
};

// --- scores ----------------------------------------------------------------

namespace detail {

inline double entropy_of(const MarginalTable& m) {
  double h = 0.0;
  for (std::size_t i = 0; i < m.cells.size(); ++i) {
    const double p = m.frequency_at(i);
    h -= p * std::log(p);
  }
  return h;
}

inline double nmi_from(const MarginalTable& mi, const MarginalTable& mj, const MarginalTable& mij) {
  const double hi = entropy_of(mi);
  const double hj = entropy_of(mj);
  if (hi <= 0.0 || hj <= 0.0) return 0.0;
  const double mutual = hi + hj - entropy_of(mij);
  return std::max(0.0, mutual) / (0.5 * (hi + hj));
}

}  // namespace detail

/// Normalized mutual information I(Ai;Aj) / mean(H(Ai), H(Aj)), natural logs.
inline double nmi(const Population& pop, int i, int j) {
  if (i == j) throw DomainError("nmi needs two distinct attributes");
  if (pop.empty()) throw DegenerateInputError("nmi of an empty population");
  const int pair[2] = {i, j};
  return detail::nmi_from(marginal(pop, {i}), marginal(pop, {j}), marginal(pop, pair));
}

/// KL(p || q) in nats over aligned dense vectors.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (!(q[i] > 0.0)) throw DomainError("kl_divergence: q is zero where p is positive");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

// --- IPF over a triple -----------------------------------------------------

struct IpfOptions {
  double tolerance = 1e-10;
  int max_sweeps = 10000;
};

struct IpfResult {
  std::array<int, 3> scope{};
  std::array<int, 3> dims{};
  /// Dense joint over the triple, row-major in scope order.
  std::vector<double> joint;
  int sweeps = 0;
  /// Max absolute gap between a pairwise projection and its target.
  double residual = 0.0;
};

/// Rescales a joint table over the triple, starting from uniform, until its
/// three pairwise projections match the given pair marginals. Pair tables may
/// list their attributes in any order.
inline IpfResult ipf_fit(std::span<const MarginalTable> pairs, std::span<const int> triple,
                         const IpfOptions& opts = {}) {
  if (triple.size() != 3) throw DomainError("ipf_fit needs a 3-attribute scope");
  if (pairs.size() != 3) throw DomainError("ipf_fit needs exactly three pair marginals");

  IpfResult r;
  std::copy(triple.begin(), triple.end(), r.scope.begin());
  r.dims = {0, 0, 0};
  // which triple positions each pair covers, in the pair's own order
  std::array<std::array<int, 2>, 3> pos{};
  std::array<bool, 3> covered_pair{false, false, false};
  for (std::size_t p = 0; p < 3; ++p) {
    const auto& m = pairs[p];
    if (m.scope.size() != 2) throw DomainError("ipf_fit: marginal is not pairwise");
    for (int s = 0; s < 2; ++s) {
      auto it = std::find(triple.begin(), triple.end(), m.scope[s]);
      if (it == triple.end()) throw DomainError("ipf_fit: pair attribute outside the triple");
      const int t = static_cast<int>(it - triple.begin());
      pos[p][s] = t;
      if (r.dims[t] != 0 && r.dims[t] != m.dims[s])
        throw DomainError("ipf_fit: inconsistent domain sizes");
      r.dims[t] = m.dims[s];
    }
    if (pos[p][0] == pos[p][1]) throw DomainError("ipf_fit: degenerate pair");
    const int missing = 3 - pos[p][0] - pos[p][1];
    if (covered_pair[missing]) throw DomainError("ipf_fit: duplicate pair");
    covered_pair[missing] = true;
  }

  const std::size_t n = static_cast<std::size_t>(r.dims[0]) * r.dims[1] * r.dims[2];
  std::array<std::vector<std::uint32_t>, 3> code;  // joint cell -> pair combo
  std::array<std::vector<double>, 3> target;
  for (std::size_t p = 0; p < 3; ++p) {
    target[p] = pairs[p].dense();
    code[p].resize(n);
  }
  for (int a = 0, idx = 0; a < r.dims[0]; ++a)
    for (int b = 0; b < r.dims[1]; ++b)
      for (int c = 0; c < r.dims[2]; ++c, ++idx) {
        const int v[3] = {a, b, c};
        for (std::size_t p = 0; p < 3; ++p)
          code[p][idx] = static_cast<std::uint32_t>(v[pos[p][0]] * pairs[p].dims[1] + v[pos[p][1]]);
      }

  r.joint.assign(n, 1.0 / static_cast<double>(n));
  std::vector<double> proj;
  auto project = [&](std::size_t p) {
    proj.assign(target[p].size(), 0.0);
    for (std::size_t x = 0; x < n; ++x) proj[code[p][x]] += r.joint[x];
  };

  for (r.sweeps = 0; r.sweeps < opts.max_sweeps;) {
    for (std::size_t p = 0; p < 3; ++p) {
      project(p);
      for (std::size_t x = 0; x < n; ++x) {
        const double cur = proj[code[p][x]];
        r.joint[x] = cur > 0.0 ? r.joint[x] * (target[p][code[p][x]] / cur) : 0.0;
      }
    }
    ++r.sweeps;
    r.residual = 0.0;
    for (std::size_t p = 0; p < 3; ++p) {
      project(p);
      for (std::size_t c = 0; c < proj.size(); ++c)
        r.residual = std::max(r.residual, std::abs(proj[c] - target[p][c]));
    }
    if (r.residual < opts.tolerance) return r;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "ipf_fit on triple (%d, %d, %d) did not converge within %d sweeps "
                "(residual %.3g, tolerance %.3g)",
                r.scope[0], r.scope[1], r.scope[2], opts.max_sweeps, r.residual, opts.tolerance);
  throw ConvergenceError(buf, r.residual);
}

// --- ranking ---------------------------------------------------------------

namespace detail {

/// Caches the unary and pairwise marginals of a population.
class MarginalCache {
 public:
  explicit MarginalCache(const Population& pop) : pop_(pop) {
    const int K = static_cast<int>(pop.schema().size());
    for (int i = 0; i < K; ++i) unary_.push_back(marginal(pop, {i}));
  }

  const MarginalTable& unary(int i) const { return unary_.at(i); }

  const MarginalTable& pair(int i, int j) {
    auto key = std::make_pair(std::min(i, j), std::max(i, j));
    auto it = pairs_.find(key);
    if (it == pairs_.end()) {
      const int scope[2] = {key.first, key.second};
      it = pairs_.emplace(key, marginal(pop_, scope)).first;
    }
    return it->second;
  }

 private:
  const Population& pop_;
  std::vector<MarginalTable> unary_;
  std::map<std::pair<int, int>, MarginalTable> pairs_;
};

/// Descending by score; equal scores keep lexicographic scope order.
inline void rank_descending(std::vector<ScoredScope>& scored) {
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ScoredScope& a, const ScoredScope& b) { return a.score > b.score; });
}

inline std::vector<ScoredScope> rank_pairs(const Population& pop, MarginalCache& cache) {
  const int K = static_cast<int>(pop.schema().size());
  std::vector<ScoredScope> out;
  for (int i = 0; i < K; ++i)
    for (int j = i + 1; j < K; ++j)
      out.push_back({{i, j}, nmi_from(cache.unary(i), cache.unary(j), cache.pair(i, j))});
  rank_descending(out);
  return out;
}

inline std::vector<ScoredScope> rank_triples(const Population& pop, MarginalCache& cache,
                                             const IpfOptions& opts) {
  const int K = static_cast<int>(pop.schema().size());
  std::vector<ScoredScope> out;
  for (int i = 0; i < K; ++i)
    for (int j = i + 1; j < K; ++j)
      for (int k = j + 1; k < K; ++k) {
        const int triple[3] = {i, j, k};
        const MarginalTable pairs[3] = {cache.pair(i, j), cache.pair(i, k), cache.pair(j, k)};
        const auto ref = ipf_fit(pairs, triple, opts);
        const auto observed = marginal(pop, triple).dense();
        out.push_back({{i, j, k}, kl_divergence(observed, ref.joint)});
      }
  rank_descending(out);
  return out;
}

}  // namespace detail

/// All attribute pairs scored by NMI, best first.
inline std::vector<ScoredScope> rank_pairs(const Population& pop) {
  if (pop.empty()) throw DegenerateInputError("ranking pairs of an empty population");
  detail::MarginalCache cache(pop);
  return detail::rank_pairs(pop, cache);
}

/// All attribute triples scored by KL(observed || pairwise IPF reference), best first.
inline std::vector<ScoredScope> rank_triples(const Population& pop, const IpfOptions& opts = {}) {
  if (pop.empty()) throw DegenerateInputError("ranking triples of an empty population");
  detail::MarginalCache cache(pop);
  return detail::rank_triples(pop, cache, opts);
}

// --- extraction ------------------------------------------------------------

namespace detail {

inline void append_marginal(ConstraintSet& cs, const MarginalTable& m, double score, int rank) {
  const int id = static_cast<int>(cs.scopes.size());
  cs.scopes.push_back({m.scope, score, rank});
  for (std::size_t i = 0; i < m.cells.size(); ++i)
    cs.constraints.push_back({m.pattern(i), m.frequency_at(i), id, m.cells[i].second});
}

/// Keeps the top-k of a ranked list and returns them in lexicographic order
/// together with their 1-based ranks.
inline std::vector<std::pair<ScoredScope, int>> top_k_lexicographic(
    const std::vector<ScoredScope>& ranked, std::size_t k) {
  std::vector<std::pair<ScoredScope, int>> kept;
  for (std::size_t r = 0; r < k && r < ranked.size(); ++r)
    kept.emplace_back(ranked[r], static_cast<int>(r + 1));
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.first.attributes < b.first.attributes;
  });
  return kept;
}

}  // namespace detail

/// Builds the reference constraint set of a population: every unary marginal,
/// the top-k2 pairs by NMI and the top-k3 triples by KL against the pairwise
/// IPF reference, one atomic constraint per observed combination. Constraints
/// are ordered unary, binary, ternary, each in lexicographic scope order.
inline ConstraintSet extract_constraints(const Population& pop, const ExtractionBudget& budget = {},
                                         const IpfOptions& ipf = {}) {
  if (pop.empty()) throw DegenerateInputError("extraction from an empty population");
  if (budget.max_arity < 1 || budget.max_arity > 3)
    throw ValidationError("max_arity must be 1, 2 or 3");
  const int K = static_cast<int>(pop.schema().size());

  ConstraintSet cs;
  cs.schema = pop.schema();
  cs.source_total = pop.total();
  detail::MarginalCache cache(pop);

  for (int i = 0; i < K; ++i) detail::append_marginal(cs, cache.unary(i), 0.0, i + 1);

  if (budget.max_arity >= 2 && K >= 2) {
    const auto ranked = detail::rank_pairs(pop, cache);
    const auto k2 = budget.binary.resolve(ranked.size());
    for (const auto& [s, rank] : detail::top_k_lexicographic(ranked, k2))
      detail::append_marginal(cs, cache.pair(s.attributes[0], s.attributes[1]), s.score, rank);
  }

  if (budget.max_arity >= 3 && K >= 3) {
    const auto ranked = detail::rank_triples(pop, cache, ipf);
    const auto k3 = budget.ternary.resolve(ranked.size());
    for (const auto& [s, rank] : detail::top_k_lexicographic(ranked, k3))
      detail::append_marginal(cs, marginal(pop, s.attributes), s.score, rank);
  }
  return cs;
}

/// Constraint set from explicitly chosen scopes (no ranking), one constraint
/// per observed combination of each scope.
inline ConstraintSet constraints_from_scopes(const Population& pop,
                                             const std::vector<std::vector<int>>& scopes) {
  if (pop.empty()) throw DegenerateInputError("constraints from an empty population");
  ConstraintSet cs;
  cs.schema = pop.schema();
  cs.source_total = pop.total();
  int rank = 0;
  for (const auto& s : scopes) detail::append_marginal(cs, marginal(pop, s), 0.0, ++rank);
  return cs;
}

}  // namespace popsynth
