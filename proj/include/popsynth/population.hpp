#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "popsynth/error.hpp"
#include "popsynth/schema.hpp"

namespace popsynth {

/// One fixed attribute value inside a pattern.
struct Literal {
  int attribute = 0;
  int category = 0;

  auto operator<=>(const Literal&) const = default;
};

/// A subset of X obtained by fixing 1 to 3 attribute values. Literals are kept
/// sorted by attribute index.
class Pattern {
 public:
  static constexpr std::size_t kMaxArity = 3;

  Pattern() = default;

  explicit Pattern(std::vector<Literal> fixed) : fixed_(std::move(fixed)) {
    if (fixed_.empty() || fixed_.size() > kMaxArity)
      throw DomainError("pattern arity must be 1..3, got " +
                        std::to_string(fixed_.size()));
    std::sort(fixed_.begin(), fixed_.end());
    for (std::size_t i = 0; i < fixed_.size(); ++i) {
      if (fixed_[i].attribute < 0 || fixed_[i].category < 0)
        throw DomainError("pattern indices must be nonnegative");
      if (i > 0 && fixed_[i].attribute == fixed_[i - 1].attribute)
        throw DomainError("pattern fixes attribute " +
                          std::to_string(fixed_[i].attribute) + " twice");
    }
  }

  Pattern(std::initializer_list<Literal> fixed)
      : Pattern(std::vector<Literal>(fixed)) {}

  std::size_t arity() const noexcept { return fixed_.size(); }
  const std::vector<Literal>& literals() const noexcept { return fixed_; }

  std::vector<int> scope() const {
    std::vector<int> s;
    for (const auto& l : fixed_) s.push_back(l.attribute);
    return s;
  }

  void validate(const AttributeSchema& schema) const {
    for (const auto& l : fixed_) {
      if (static_cast<std::size_t>(l.attribute) >= schema.size())
        throw DomainError("pattern attribute " + std::to_string(l.attribute) +
                          " out of range");
      if (l.category >= schema.domain_size(l.attribute))
        throw DomainError("pattern category " + std::to_string(l.category) +
                          " out of range for attribute '" +
                          schema.attribute(l.attribute).name + "'");
    }
  }

  /// Indicator feature f(x) = 1[x in S].
  bool matches(const AttributeSchema& schema, CellIndex cell) const noexcept {
    for (const auto& l : fixed_)
      if (schema.digit(cell, l.attribute) != l.category) return false;
    return true;
  }

  /// Number of cells of X inside the pattern.
  CellIndex cell_count(const AttributeSchema& schema) const {
    CellIndex n = schema.cell_count();
    for (const auto& l : fixed_) n /= static_cast<CellIndex>(schema.domain_size(l.attribute));
    return n;
  }

  std::string describe(const AttributeSchema& schema) const {
    std::string out;
    for (const auto& l : fixed_) {
      if (!out.empty()) out += ", ";
      const auto& a = schema.attribute(l.attribute);
      out += a.name + "=" + a.categories.at(l.category);
    }
    return out;
  }

  auto operator<=>(const Pattern&) const = default;
  bool operator==(const Pattern&) const = default;

 private:
  std::vector<Literal> fixed_;
};

/// Multiset of complete assignments stored as a sparse contingency table.
/// Cells are kept in ascending cell-index order; stored counts are >= 1.
class Population {
 public:
  Population() = default;

  Population(AttributeSchema schema, const std::map<CellIndex, std::int64_t>& counts)
      : schema_(std::move(schema)) {
    counts_.reserve(counts.size());
    for (const auto& [cell, c] : counts) {
      if (c < 0) throw ValidationError("negative count in population");
      if (cell >= schema_.cell_count()) throw DomainError("cell index out of range");
      if (c == 0) continue;
      counts_.emplace_back(cell, c);
      total_ += c;
    }
  }

  static Population from_cells(AttributeSchema schema, std::span<const CellIndex> cells) {
    std::map<CellIndex, std::int64_t> counts;
    for (auto c : cells) ++counts[c];
    return Population(std::move(schema), counts);
  }

  const AttributeSchema& schema() const noexcept { return schema_; }
  const std::vector<std::pair<CellIndex, std::int64_t>>& counts() const noexcept {
    return counts_;
  }
  std::int64_t total() const noexcept { return total_; }
  bool empty() const noexcept { return total_ == 0; }

  std::int64_t count(CellIndex cell) const {
    auto it = std::lower_bound(counts_.begin(), counts_.end(), cell,
                               [](const auto& e, CellIndex v) { return e.first < v; });
    return (it != counts_.end() && it->first == cell) ? it->second : 0;
  }

  bool operator==(const Population&) const = default;

 private:
  AttributeSchema schema_;
  std::vector<std::pair<CellIndex, std::int64_t>> counts_;
  std::int64_t total_ = 0;
};

/// Empirical joint frequency table over 1 to 3 attributes. Only combinations
/// observed at least once are stored, keyed by their mixed-radix code within
/// the scope (first scope attribute most significant).
struct MarginalTable {
  std::vector<int> scope;
  std::vector<int> dims;
  std::int64_t total = 0;
  /// (combination code, count), ascending by code.
  std::vector<std::pair<std::uint32_t, std::int64_t>> cells;

  std::size_t support_size() const noexcept { return cells.size(); }

  std::uint32_t combo_count() const {
    std::uint32_t n = 1;
    for (int d : dims) n *= static_cast<std::uint32_t>(d);
    return n;
  }

  double frequency_at(std::size_t i) const {
    return static_cast<double>(cells.at(i).second) / static_cast<double>(total);
  }

  /// Frequency of a combination code; zero if unobserved.
  double frequency(std::uint32_t code) const {
    auto it = std::lower_bound(cells.begin(), cells.end(), code,
                               [](const auto& e, std::uint32_t v) { return e.first < v; });
    if (it == cells.end() || it->first != code) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(total);
  }

  std::uint32_t encode(std::span<const int> combo) const {
    std::uint32_t code = 0;
    for (std::size_t i = 0; i < dims.size(); ++i)
      code = code * static_cast<std::uint32_t>(dims[i]) + static_cast<std::uint32_t>(combo[i]);
    return code;
  }

  std::vector<int> decode(std::uint32_t code) const {
    std::vector<int> combo(dims.size());
    for (std::size_t i = dims.size(); i-- > 0;) {
      combo[i] = static_cast<int>(code % static_cast<std::uint32_t>(dims[i]));
      code /= static_cast<std::uint32_t>(dims[i]);
    }
    return combo;
  }

  Pattern pattern(std::size_t i) const {
    auto combo = decode(cells.at(i).first);
    std::vector<Literal> lits;
    for (std::size_t k = 0; k < scope.size(); ++k) lits.push_back({scope[k], combo[k]});
    return Pattern(std::move(lits));
  }

  /// Dense frequency vector over all combinations of the scope.
  std::vector<double> dense() const {
    std::vector<double> out(combo_count(), 0.0);
    for (const auto& [code, c] : cells)
      out[code] = static_cast<double>(c) / static_cast<double>(total);
    return out;
  }
};

inline void validate_scope(const AttributeSchema& schema, std::span<const int> scope) {
  if (scope.empty() || scope.size() > Pattern::kMaxArity)
    throw DomainError("scope must contain 1..3 attributes");
  for (std::size_t i = 0; i < scope.size(); ++i) {
    if (scope[i] < 0 || static_cast<std::size_t>(scope[i]) >= schema.size())
      throw DomainError("scope attribute " + std::to_string(scope[i]) + " out of range");
    for (std::size_t j = 0; j < i; ++j)
      if (scope[i] == scope[j]) throw DomainError("scope attributes must be distinct");
  }
}

inline MarginalTable marginal(const Population& pop, std::span<const int> scope) {
  const auto& schema = pop.schema();
  validate_scope(schema, scope);
  if (pop.empty()) throw DegenerateInputError("marginal of an empty population");

  MarginalTable m;
  m.scope.assign(scope.begin(), scope.end());
  for (int a : scope) m.dims.push_back(schema.domain_size(a));
  m.total = pop.total();

  std::vector<std::int64_t> dense(m.combo_count(), 0);
  for (const auto& [cell, c] : pop.counts()) {
    std::uint32_t code = 0;
    for (std::size_t i = 0; i < scope.size(); ++i)
      code = code * static_cast<std::uint32_t>(m.dims[i]) +
             static_cast<std::uint32_t>(schema.digit(cell, scope[i]));
    dense[code] += c;
  }
  for (std::uint32_t code = 0; code < dense.size(); ++code)
    if (dense[code] > 0) m.cells.emplace_back(code, dense[code]);
  return m;
}

inline MarginalTable marginal(const Population& pop, std::initializer_list<int> scope) {
  return marginal(pop, std::span<const int>(scope.begin(), scope.size()));
}

/// Number of individuals inside the pattern.
inline std::int64_t pattern_count(const Population& pop, const Pattern& pattern) {
  pattern.validate(pop.schema());
  std::int64_t n = 0;
  for (const auto& [cell, c] : pop.counts())
    if (pattern.matches(pop.schema(), cell)) n += c;
  return n;
}

inline double empirical_frequency(const Population& pop, const Pattern& pattern) {
  if (pop.empty()) throw DegenerateInputError("frequency in an empty population");
  return static_cast<double>(pattern_count(pop, pattern)) /
         static_cast<double>(pop.total());
}

inline std::size_t support_size(const MarginalTable& m) noexcept {
  return m.support_size();
}

}  // namespace popsynth
