#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "popsynth/error.hpp"
#include "popsynth/population.hpp"
#include "popsynth/random.hpp"
#include "popsynth/schema.hpp"

namespace popsynth {

/// Recipe for a synthetic source population: attributes are drawn in order,
/// each conditioned on up to `parents` earlier attributes through random
/// softmax tables, so the population carries pairwise and three-way structure.
struct SyntheticSpec {
  std::vector<int> domain_sizes;
  std::int64_t n = 5000;
  int parents = 2;
  /// Scale of the random logits; 0 gives independent uniform attributes.
  double dependence = 1.0;
  std::uint64_t seed = 1;
};

namespace detail {

inline double standard_normal(Rng& rng) {
  // Box-Muller on two 53-bit uniforms; keeps draws platform independent
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline int draw_categorical(Rng& rng, const std::vector<double>& probs) {
  double u = rng.uniform();
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    if (u < probs[i]) return static_cast<int>(i);
    u -= probs[i];
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace detail

inline Population synthesize_population(const SyntheticSpec& spec) {
  if (spec.domain_sizes.empty()) throw ValidationError("synthetic spec needs attributes");
  if (spec.n < 1) throw ValidationError("synthetic population size must be >= 1");
  if (spec.parents < 0) throw ValidationError("parents must be >= 0");
  const auto schema = AttributeSchema::with_domain_sizes(spec.domain_sizes);
  const std::size_t K = schema.size();
  Rng rng(spec.seed);

  struct Node {
    std::vector<std::size_t> parents;
    std::vector<std::vector<double>> tables;  // parent combo -> category probs
  };
  std::vector<Node> nodes(K);
  for (std::size_t k = 0; k < K; ++k) {
    auto& node = nodes[k];
    std::vector<std::size_t> pool;
    for (std::size_t p = 0; p < k; ++p) pool.push_back(p);
    for (int i = 0; i < spec.parents && !pool.empty(); ++i) {
      const auto pick = static_cast<std::size_t>(rng.below(pool.size()));
      node.parents.push_back(pool[pick]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    std::size_t combos = 1;
    for (auto p : node.parents) combos *= static_cast<std::size_t>(schema.domain_size(p));
    const int d = schema.domain_size(k);
    std::vector<double> base(d);
    for (auto& b : base) b = spec.dependence * detail::standard_normal(rng);
    for (std::size_t c = 0; c < combos; ++c) {
      std::vector<double> probs(d);
      double z = 0.0;
      for (int v = 0; v < d; ++v) {
        probs[v] = std::exp(base[v] + spec.dependence * detail::standard_normal(rng));
        z += probs[v];
      }
      for (auto& p : probs) p /= z;
      node.tables.push_back(std::move(probs));
    }
  }

  std::map<CellIndex, std::int64_t> counts;
  std::vector<int> x(K);
  for (std::int64_t i = 0; i < spec.n; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      std::size_t combo = 0;
      for (auto p : nodes[k].parents)
        combo = combo * static_cast<std::size_t>(schema.domain_size(p)) + static_cast<std::size_t>(x[p]);
      x[k] = detail::draw_categorical(rng, nodes[k].tables[combo]);
    }
    ++counts[schema.encode(x)];
  }
  return Population(schema, counts);
}

}  // namespace popsynth
