#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "popsynth/digest.hpp"
#include "popsynth/error.hpp"
#include "popsynth/population.hpp"
#include "popsynth/provenance.hpp"
#include "popsynth/schema.hpp"

namespace popsynth {

/// One (pattern, target frequency) pair.
struct Constraint {
  Pattern pattern;
  double target = 0.0;
  /// Index into ConstraintSet::scopes, or -1 for a hand-built constraint.
  int scope_id = -1;
  /// Source count behind the target (target == count / source_total), 0 if unknown.
  std::int64_t count = 0;

  std::size_t arity() const noexcept { return pattern.arity(); }
};

/// A marginal retained by extraction, with its informativeness score.
struct RetainedScope {
  std::vector<int> attributes;
  /// NMI for pairs, KL for triples, 0 for single attributes.
  double score = 0.0;
  /// 1-based rank among candidates of the same arity.
  int rank = 0;

  std::size_t arity() const noexcept { return attributes.size(); }
};

struct ConstraintSet {
  AttributeSchema schema;
  std::vector<RetainedScope> scopes;
  std::vector<Constraint> constraints;
  /// Size of the population the targets were read from (0 if not extracted).
  std::int64_t source_total = 0;

  std::size_t size() const noexcept { return constraints.size(); }
  bool empty() const noexcept { return constraints.empty(); }

  std::size_t count_with_arity(std::size_t arity) const {
    std::size_t n = 0;
    for (const auto& c : constraints) n += c.arity() == arity ? 1 : 0;
    return n;
  }

  std::size_t max_arity() const {
    std::size_t a = 0;
    for (const auto& c : constraints) a = std::max(a, c.arity());
    return a;
  }

  std::vector<double> targets() const {
    std::vector<double> t;
    t.reserve(constraints.size());
    for (const auto& c : constraints) t.push_back(c.target);
    return t;
  }

  /// Fingerprint of schema plus ordered constraints (patterns and exact target bits).
  std::string digest() const {
    Digest d;
    d.update_field(schema.digest());
    char buf[40];
    for (const auto& c : constraints) {
      for (const auto& l : c.pattern.literals()) {
        d.update_field(std::to_string(l.attribute));
        d.update_field(std::to_string(l.category));
      }
      std::snprintf(buf, sizeof(buf), "%a", c.target);
      d.update_field(buf);
      d.update("\x1e");
    }
    return d.hex();
  }

  /// Checks what every consumer relies on: patterns valid for the schema and
  /// targets in (0, 1].
  void validate() const {
    for (std::size_t j = 0; j < constraints.size(); ++j) {
      const auto& c = constraints[j];
      c.pattern.validate(schema);
      if (!(c.target > 0.0 && c.target <= 1.0))
        throw ValidationError("constraint " + std::to_string(j) + " target " +
                              std::to_string(c.target) + " is outside (0, 1]");
      if (c.scope_id < -1 || c.scope_id >= static_cast<int>(scopes.size()))
        throw ValidationError("constraint " + std::to_string(j) + " has invalid scope id");
    }
  }

  /// Invariants of an extracted set: no duplicate patterns, each scope's
  /// targets sum to one.
  void validate_extracted(double tol = 1e-9) const {
    validate();
    std::set<Pattern> seen;
    for (const auto& c : constraints)
      if (!seen.insert(c.pattern).second)
        throw ValidationError("duplicate pattern " + c.pattern.describe(schema));
    std::vector<double> sums(scopes.size(), 0.0);
    for (const auto& c : constraints)
      if (c.scope_id >= 0) sums[c.scope_id] += c.target;
    for (std::size_t s = 0; s < scopes.size(); ++s)
      if (std::abs(sums[s] - 1.0) > tol)
        throw ValidationError("targets of scope " + std::to_string(s) + " sum to " +
                              std::to_string(sums[s]));
  }
};

// --- serialization ---------------------------------------------------------

inline nlohmann::json schema_to_json(const AttributeSchema& schema) {
  auto arr = nlohmann::json::array();
  for (const auto& a : schema.attributes())
    arr.push_back({{"name", a.name}, {"categories", a.categories}});
  return arr;
}

inline AttributeSchema schema_from_json(const nlohmann::json& j) {
  std::vector<Attribute> attrs;
  for (const auto& a : j)
    attrs.push_back({a.at("name").get<std::string>(),
                     a.at("categories").get<std::vector<std::string>>()});
  return AttributeSchema(std::move(attrs));
}

inline nlohmann::json to_json(const ConstraintSet& cs, const Provenance& prov = {}) {
  nlohmann::json j;
  j["format"] = "popsynth.constraints";
  j["format_version"] = 1;
  j["provenance"] = prov.to_json();
  j["schema"] = schema_to_json(cs.schema);
  j["schema_digest"] = cs.schema.digest();
  j["constraint_digest"] = cs.digest();
  j["source_total"] = cs.source_total;
  j["summary"] = {{"unary", cs.count_with_arity(1)},
                  {"binary", cs.count_with_arity(2)},
                  {"ternary", cs.count_with_arity(3)},
                  {"total", cs.size()}};
  auto scopes = nlohmann::json::array();
  for (std::size_t s = 0; s < cs.scopes.size(); ++s) {
    const auto& sc = cs.scopes[s];
    std::vector<std::string> names;
    for (int a : sc.attributes) names.push_back(cs.schema.attribute(a).name);
    scopes.push_back({{"id", s}, {"attributes", names}, {"score", sc.score}, {"rank", sc.rank}});
  }
  j["scopes"] = scopes;
  auto cons = nlohmann::json::array();
  for (const auto& c : cs.constraints) {
    std::vector<std::string> names, labels;
    for (const auto& l : c.pattern.literals()) {
      const auto& a = cs.schema.attribute(l.attribute);
      names.push_back(a.name);
      labels.push_back(a.categories[l.category]);
    }
    nlohmann::json e = {{"attributes", names}, {"categories", labels}, {"target", c.target}};
    if (c.scope_id >= 0) e["scope"] = c.scope_id;
    if (c.count > 0) e["count"] = c.count;
    cons.push_back(std::move(e));
  }
  j["constraints"] = cons;
  return j;
}

inline ConstraintSet constraint_set_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "popsynth.constraints")
    throw ValidationError("not a popsynth constraint file");
  ConstraintSet cs;
  try {
    cs.schema = schema_from_json(j.at("schema"));
    cs.source_total = j.value("source_total", std::int64_t{0});
    auto attr_index = [&](const std::string& name) {
      auto k = cs.schema.find_attribute(name);
      if (!k) throw ValidationError("unknown attribute '" + name + "'");
      return static_cast<int>(*k);
    };
    for (const auto& s : j.value("scopes", nlohmann::json::array())) {
      RetainedScope sc;
      for (const auto& n : s.at("attributes")) sc.attributes.push_back(attr_index(n.get<std::string>()));
      sc.score = s.value("score", 0.0);
      sc.rank = s.value("rank", 0);
      cs.scopes.push_back(std::move(sc));
    }
    for (const auto& e : j.at("constraints")) {
      const auto names = e.at("attributes").get<std::vector<std::string>>();
      const auto labels = e.at("categories").get<std::vector<std::string>>();
      if (names.size() != labels.size())
        throw ValidationError("constraint attributes and categories differ in length");
      std::vector<Literal> lits;
      for (std::size_t i = 0; i < names.size(); ++i) {
        const int a = attr_index(names[i]);
        auto cat = cs.schema.find_category(a, labels[i]);
        if (!cat)
          throw DomainError("unknown category '" + labels[i] + "' for attribute '" + names[i] + "'");
        lits.push_back({a, *cat});
      }
      Constraint c{Pattern(std::move(lits)), e.at("target").get<double>(), e.value("scope", -1),
                   e.value("count", std::int64_t{0})};
      cs.constraints.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("malformed constraint file: ") + ex.what());
  }
  cs.validate();
  if (j.contains("constraint_digest") && j["constraint_digest"] != cs.digest())
    throw ValidationError("constraint digest mismatch");
  return cs;
}

}  // namespace popsynth
