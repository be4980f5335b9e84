#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "popsynth/digest.hpp"
#include "popsynth/error.hpp"

namespace popsynth {

using CellIndex = std::uint64_t;

struct Attribute {
  std::string name;
  std::vector<std::string> categories;

  bool operator==(const Attribute&) const = default;
};

/// Ordered list of categorical attributes. Defines the product space X and
/// the mixed-radix cell code (attribute 0 most significant).
class AttributeSchema {
 public:
  AttributeSchema() = default;

  explicit AttributeSchema(std::vector<Attribute> attributes)
      : attributes_(std::move(attributes)) {
    std::unordered_set<std::string> names;
    for (const auto& a : attributes_) {
      if (!names.insert(a.name).second)
        throw ValidationError("duplicate attribute name '" + a.name + "'");
      if (a.categories.size() < 2)
        throw ValidationError("attribute '" + a.name +
                              "' needs at least 2 categories");
      std::unordered_set<std::string> labels;
      for (const auto& c : a.categories)
        if (!labels.insert(c).second)
          throw ValidationError("duplicate category '" + c +
                                "' in attribute '" + a.name + "'");
    }
    sizes_.reserve(attributes_.size());
    for (const auto& a : attributes_)
      sizes_.push_back(static_cast<int>(a.categories.size()));

    strides_.assign(attributes_.size(), 1);
    CellIndex total = 1;
    for (std::size_t k = attributes_.size(); k-- > 0;) {
      strides_[k] = total;
      const auto d = static_cast<CellIndex>(sizes_[k]);
      if (total > std::numeric_limits<CellIndex>::max() / d)
        throw ValidationError("attribute space exceeds the 64-bit cell index");
      total *= d;
    }
    cell_count_ = attributes_.empty() ? 0 : total;
  }

  /// Schema with attributes A0..A{K-1} and categories "0".."d-1".
  static AttributeSchema with_domain_sizes(std::span<const int> sizes) {
    std::vector<Attribute> attrs;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      Attribute a{"A" + std::to_string(k), {}};
      for (int c = 0; c < sizes[k]; ++c) a.categories.push_back(std::to_string(c));
      attrs.push_back(std::move(a));
    }
    return AttributeSchema(std::move(attrs));
  }

  std::size_t size() const noexcept { return attributes_.size(); }
  bool empty() const noexcept { return attributes_.empty(); }
  const std::vector<Attribute>& attributes() const noexcept { return attributes_; }
  const Attribute& attribute(std::size_t k) const { return attributes_.at(k); }
  int domain_size(std::size_t k) const { return sizes_.at(k); }
  std::span<const int> domain_sizes() const noexcept { return sizes_; }
  CellIndex stride(std::size_t k) const { return strides_.at(k); }

  /// |X|.
  CellIndex cell_count() const noexcept { return cell_count_; }

  CellIndex encode(std::span<const int> assignment) const {
    if (assignment.size() != size())
      throw DomainError("assignment has " + std::to_string(assignment.size()) +
                        " values, schema has " + std::to_string(size()) +
                        " attributes");
    CellIndex cell = 0;
    for (std::size_t k = 0; k < size(); ++k) {
      if (assignment[k] < 0 || assignment[k] >= sizes_[k])
        throw DomainError("category index " + std::to_string(assignment[k]) +
                          " out of range for attribute '" +
                          attributes_[k].name + "'");
      cell += static_cast<CellIndex>(assignment[k]) * strides_[k];
    }
    return cell;
  }

  void decode(CellIndex cell, std::span<int> out) const {
    if (cell >= cell_count_) throw DomainError("cell index out of range");
    if (out.size() != size()) throw DomainError("output span has wrong length");
    for (std::size_t k = 0; k < size(); ++k) {
      out[k] = static_cast<int>(cell / strides_[k]);
      cell %= strides_[k];
    }
  }

  std::vector<int> decode(CellIndex cell) const {
    std::vector<int> out(size());
    decode(cell, out);
    return out;
  }

  /// Category of attribute k in the given cell.
  int digit(CellIndex cell, std::size_t k) const noexcept {
    return static_cast<int>((cell / strides_[k]) % static_cast<CellIndex>(sizes_[k]));
  }

  std::optional<std::size_t> find_attribute(std::string_view name) const {
    for (std::size_t k = 0; k < size(); ++k)
      if (attributes_[k].name == name) return k;
    return std::nullopt;
  }

  std::optional<int> find_category(std::size_t k, std::string_view label) const {
    const auto& cats = attributes_.at(k).categories;
    for (std::size_t c = 0; c < cats.size(); ++c)
      if (cats[c] == label) return static_cast<int>(c);
    return std::nullopt;
  }

  std::string digest() const {
    Digest d;
    for (const auto& a : attributes_) {
      d.update_field(a.name);
      for (const auto& c : a.categories) d.update_field(c);
      d.update("\x1e");
    }
    return d.hex();
  }

  bool operator==(const AttributeSchema& other) const {
    return attributes_ == other.attributes_;
  }

 private:
  std::vector<Attribute> attributes_;
  std::vector<int> sizes_;
  std::vector<CellIndex> strides_;
  CellIndex cell_count_ = 0;
};

}  // namespace popsynth
