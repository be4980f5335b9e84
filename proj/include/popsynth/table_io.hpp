#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "popsynth/digest.hpp"
#include "popsynth/error.hpp"
#include "popsynth/population.hpp"
#include "popsynth/schema.hpp"

namespace popsynth {

/// Reserved final column holding integer multiplicities.
inline constexpr std::string_view kCountColumn = "__count";

namespace detail {

inline std::vector<std::string> split_record(std::string_view line, char delim,
                                             std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == delim) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted)
    throw ValidationError("line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string quote_field(std::string_view s, char delim) {
  if (s.find_first_of(std::string{delim, '"', '\n', '\r'}) == std::string_view::npos &&
      (s.empty() || s.front() != '#'))
    return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::int64_t parse_count(const std::string& s, std::size_t line_no) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || v < 0)
    throw ValidationError("line " + std::to_string(line_no) + ": invalid count '" + s + "'");
  return v;
}

}  // namespace detail

struct ReadOptions {
  /// Columns to keep, in the order they become attributes; empty keeps all.
  std::vector<std::string> columns;
  /// Labels treated as missing; records with a missing kept field are skipped.
  std::vector<std::string> missing;
  /// Fixes the domains; columns are then matched by name.
  std::optional<AttributeSchema> schema;
};

/// Reads a delimited population. The delimiter is a tab if the header line
/// contains one, otherwise a comma. Lines starting with '#' before the header
/// are provenance comments and are skipped.
///
/// Without a schema, domains are the observed labels in order of first
/// appearance. With a schema an unseen label is a DomainError.
inline Population read_population(std::istream& in, const ReadOptions& opts) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    have_header = true;
    break;
  }
  if (!have_header) throw ValidationError("population input has no header line");

  const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
  auto header = detail::split_record(line, delim, line_no);
  const std::size_t width = header.size();
  const bool counted = !header.empty() && header.back() == kCountColumn;
  if (counted) header.pop_back();

  // kept attribute -> source column
  std::vector<std::size_t> source;
  std::vector<std::string> names;
  if (opts.columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) source.push_back(c);
    names = header;
  } else {
    for (const auto& name : opts.columns) {
      auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) throw SchemaMismatchError("no column named '" + name + "'");
      if (std::find(names.begin(), names.end(), name) != names.end())
        throw ValidationError("column '" + name + "' selected twice");
      source.push_back(static_cast<std::size_t>(it - header.begin()));
      names.push_back(name);
    }
  }
  const std::size_t K = source.size();
  if (K == 0) throw ValidationError("population header has no attributes");

  const auto& schema = opts.schema;
  std::vector<std::size_t> column_attr(K);
  std::vector<std::unordered_map<std::string, int>> lookup(K);
  std::vector<std::vector<std::string>> labels(K);
  if (schema) {
    if (schema->size() != K)
      throw SchemaMismatchError("population has " + std::to_string(K) +
                                " attributes, schema has " + std::to_string(schema->size()));
    std::vector<bool> seen(K, false);
    for (std::size_t c = 0; c < K; ++c) {
      auto k = schema->find_attribute(names[c]);
      if (!k) throw SchemaMismatchError("unknown attribute '" + names[c] + "'");
      if (seen[*k]) throw ValidationError("duplicate column '" + names[c] + "'");
      seen[*k] = true;
      column_attr[c] = *k;
      const auto& cats = schema->attribute(*k).categories;
      for (std::size_t i = 0; i < cats.size(); ++i) lookup[c].emplace(cats[i], static_cast<int>(i));
    }
  } else {
    for (std::size_t c = 0; c < K; ++c) column_attr[c] = c;
  }
  auto is_missing = [&](const std::string& v) {
    return std::find(opts.missing.begin(), opts.missing.end(), v) != opts.missing.end();
  };

  std::vector<std::pair<std::vector<int>, std::int64_t>> rows;
  std::vector<int> assignment(K);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_record(line, delim, line_no);
    if (fields.size() != width)
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(width) + " fields, got " + std::to_string(fields.size()));
    bool skip = false;
    for (std::size_t c = 0; c < K && !skip; ++c) skip = is_missing(fields[source[c]]);
    if (skip) continue;
    const std::int64_t mult = counted ? detail::parse_count(fields.back(), line_no) : 1;
    for (std::size_t c = 0; c < K; ++c) {
      const auto& v = fields[source[c]];
      auto it = lookup[c].find(v);
      int idx = 0;
      if (it != lookup[c].end()) {
        idx = it->second;
      } else if (schema) {
        throw DomainError("line " + std::to_string(line_no) + ": unseen category '" + v +
                          "' for attribute '" + names[c] + "'");
      } else {
        idx = static_cast<int>(labels[c].size());
        labels[c].push_back(v);
        lookup[c].emplace(v, idx);
      }
      assignment[column_attr[c]] = idx;
    }
    rows.emplace_back(assignment, mult);
  }

  if (rows.empty()) throw DegenerateInputError("population input has no records");

  AttributeSchema resolved;
  if (schema) {
    resolved = *schema;
  } else {
    std::vector<Attribute> attrs;
    for (std::size_t c = 0; c < K; ++c) attrs.push_back({names[c], labels[c]});
    resolved = AttributeSchema(std::move(attrs));
  }
  std::map<CellIndex, std::int64_t> counts;
  for (const auto& [a, mult] : rows)
    if (mult > 0) counts[resolved.encode(a)] += mult;
  return Population(std::move(resolved), counts);
}

inline Population read_population(std::istream& in,
                                  const std::optional<AttributeSchema>& schema = std::nullopt) {
  return read_population(in, ReadOptions{{}, {}, schema});
}

inline Population read_population_file(const std::string& path, const ReadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open population file '" + path + "'");
  return read_population(in, opts);
}

/// Writes the counted form: one row per nonempty cell in canonical order.
inline void write_population(std::ostream& out, const Population& pop,
                             const std::vector<std::string>& comments = {},
                             char delim = ',') {
  for (const auto& c : comments) out << "# " << c << '\n';
  const auto& schema = pop.schema();
  for (std::size_t k = 0; k < schema.size(); ++k)
    out << detail::quote_field(schema.attribute(k).name, delim) << delim;
  out << kCountColumn << '\n';
  std::vector<int> assignment(schema.size());
  for (const auto& [cell, c] : pop.counts()) {
    schema.decode(cell, assignment);
    for (std::size_t k = 0; k < schema.size(); ++k)
      out << detail::quote_field(schema.attribute(k).categories[assignment[k]], delim) << delim;
    out << c << '\n';
  }
}

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return digest_hex(ss.str());
}

}  // namespace popsynth
