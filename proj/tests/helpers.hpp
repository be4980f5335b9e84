#pragma once

#include <map>
#include <string>
#include <vector>

#include "popsynth/popsynth.hpp"

namespace testing_support {

using namespace popsynth;

/// Population over the given domains from (assignment, count) pairs.
inline Population make_population(const std::vector<int>& dims,
                                  const std::vector<std::pair<std::vector<int>, std::int64_t>>& rows) {
  auto schema = AttributeSchema::with_domain_sizes(dims);
  std::map<CellIndex, std::int64_t> counts;
  for (const auto& [x, c] : rows) counts[schema.encode(x)] += c;
  return Population(schema, counts);
}

/// Four ternary attributes whose retained marginals reproduce the 4-variable
/// support profile: every pair has full 3x3 support and the four triples
/// observe 22, 23, 25 and 22 of their 27 combinations.
inline Population four_var_population() {
  static const char* cells[] = {
      "0000", "0001", "0012", "0100", "0120", "0200", "0201", "0202", "0220", "0221", "0222",
      "1001", "1012", "1020", "1021", "1022", "1100", "1102", "1111", "1112", "1120", "1200",
      "1202", "1210", "1211", "1212", "1220", "1221", "2000", "2001", "2002", "2011", "2012",
      "2020", "2021", "2022", "2102", "2111", "2112", "2200", "2210", "2211"};
  std::vector<std::pair<std::vector<int>, std::int64_t>> rows;
  int i = 0;
  for (const char* s : cells) {
    std::vector<int> x;
    for (int k = 0; k < 4; ++k) x.push_back(s[k] - '0');
    rows.push_back({x, 1 + (i++ % 5)});
  }
  return make_population({3, 3, 3, 3}, rows);
}

/// Constraint set with explicitly given patterns and targets.
inline ConstraintSet make_constraints(const std::vector<int>& dims,
                                      const std::vector<std::pair<Pattern, double>>& items) {
  ConstraintSet cs;
  cs.schema = AttributeSchema::with_domain_sizes(dims);
  for (const auto& [p, t] : items) cs.constraints.push_back({p, t});
  return cs;
}

/// Full-budget extraction from a synthetic population.
inline ConstraintSet synthetic_problem(std::vector<int> dims, std::int64_t n, std::uint64_t seed,
                                       double dependence = 1.0) {
  return extract_constraints(synthesize_population({std::move(dims), n, 2, dependence, seed}));
}

}  // namespace testing_support
