#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "popsynth/error.hpp"
#include "popsynth/population.hpp"
#include "popsynth/schema.hpp"

namespace popsynth {

/// Groups patterns by the attribute set they fix. Every group owns a dense
/// slot table over its combinations; a pattern maps to one slot, so feature
/// sums per cell reduce to one table lookup per group.
///
/// Cell scans run block-wise: trailing attributes whose product fits a block
/// are the "inner" part, enumerated once into per-group offset tables; the
/// leading attributes are walked as an odometer, one step per block.
class FeatureIndex {
 public:
  struct Group {
    std::vector<int> attributes;
    /// Mixed-radix stride of each attribute inside the group's combination code.
    std::vector<std::uint32_t> strides;
    std::uint32_t combos = 1;
    /// Start of the group's slots in the flat table.
    std::size_t offset = 0;
    bool has_outer = false;
    bool has_inner = false;
  };

  static constexpr std::size_t kMaxBlock = 4096;

  FeatureIndex() = default;

  FeatureIndex(const AttributeSchema& schema, std::span<const Pattern> patterns) : schema_(schema) {
    if (schema_.empty()) throw ValidationError("feature index over an empty schema");
    std::map<std::vector<int>, std::size_t> by_scope;
    slot_.reserve(patterns.size());
    group_of_.reserve(patterns.size());
    for (const auto& p : patterns) {
      p.validate(schema_);
      auto scope = p.scope();
      auto [it, inserted] = by_scope.emplace(scope, groups_.size());
      if (inserted) {
        Group g;
        g.attributes = scope;
        g.strides.assign(scope.size(), 1);
        for (std::size_t i = scope.size(); i-- > 0;) {
          g.strides[i] = g.combos;
          g.combos *= static_cast<std::uint32_t>(schema_.domain_size(scope[i]));
        }
        g.offset = flat_size_;
        flat_size_ += g.combos;
        groups_.push_back(std::move(g));
      }
      const auto& g = groups_[it->second];
      std::uint32_t code = 0;
      for (std::size_t i = 0; i < p.literals().size(); ++i)
        code += static_cast<std::uint32_t>(p.literals()[i].category) * g.strides[i];
      group_of_.push_back(it->second);
      slot_.push_back(g.offset + code);
    }

    attribute_groups_.assign(schema_.size(), {});
    for (std::size_t g = 0; g < groups_.size(); ++g)
      for (int a : groups_[g].attributes) attribute_groups_[a].push_back(g);

    plan_blocks();
  }

  const AttributeSchema& schema() const noexcept { return schema_; }
  std::size_t pattern_count() const noexcept { return slot_.size(); }
  const std::vector<Group>& groups() const noexcept { return groups_; }
  std::size_t flat_size() const noexcept { return flat_size_; }
  std::size_t slot(std::size_t j) const { return slot_.at(j); }
  std::size_t group_of(std::size_t j) const { return group_of_.at(j); }
  const std::vector<std::size_t>& attribute_groups(std::size_t k) const {
    return attribute_groups_.at(k);
  }

  /// Combination code of a full assignment within group g.
  std::uint32_t combo(std::size_t g, std::span<const int> digits) const {
    const auto& grp = groups_[g];
    std::uint32_t code = 0;
    for (std::size_t i = 0; i < grp.attributes.size(); ++i)
      code += static_cast<std::uint32_t>(digits[grp.attributes[i]]) * grp.strides[i];
    return code;
  }

  /// theta[slot] = sum of weights of the patterns sharing that slot.
  void scatter(std::span<const double> per_pattern, std::span<double> flat) const {
    std::fill(flat.begin(), flat.end(), 0.0);
    for (std::size_t j = 0; j < slot_.size(); ++j) flat[slot_[j]] += per_pattern[j];
  }

  void gather(std::span<const double> flat, std::span<double> per_pattern) const {
    for (std::size_t j = 0; j < slot_.size(); ++j) per_pattern[j] = flat[slot_[j]];
  }

  /// energy[x] = sum over groups of theta[slot of x in that group].
  void energies(std::span<const double> theta, std::span<double> energy) const {
    check_cells(energy.size());
    std::vector<double> inner_energy(block_, 0.0);
    for (std::size_t g : inner_only_) {
      const auto& tab = inner_code_[g];
      const double* th = theta.data() + groups_[g].offset;
      for (std::size_t b = 0; b < block_; ++b) inner_energy[b] += th[tab[b]];
    }
    walk_blocks([&](CellIndex start, std::span<const std::uint32_t> outer_base) {
      double base = 0.0;
      for (std::size_t g : outer_only_) base += theta[groups_[g].offset + outer_base[g]];
      double* e = energy.data() + start;
      for (std::size_t b = 0; b < block_; ++b) e[b] = base + inner_energy[b];
      for (std::size_t g : mixed_) {
        const double* th = theta.data() + groups_[g].offset + outer_base[g];
        const std::uint32_t* tab = inner_code_[g].data();
        for (std::size_t b = 0; b < block_; ++b) e[b] += th[tab[b]];
      }
    });
  }

  /// flat[slot of x in g] += values[x] for every group g.
  void accumulate(std::span<const double> values, std::span<double> flat) const {
    check_cells(values.size());
    std::fill(flat.begin(), flat.end(), 0.0);
    std::vector<double> inner_acc(block_, 0.0);
    walk_blocks([&](CellIndex start, std::span<const std::uint32_t> outer_base) {
      const double* v = values.data() + start;
      if (!outer_only_.empty()) {
        double s = 0.0;
        for (std::size_t b = 0; b < block_; ++b) s += v[b];
        for (std::size_t g : outer_only_) flat[groups_[g].offset + outer_base[g]] += s;
      }
      if (!inner_only_.empty())
        for (std::size_t b = 0; b < block_; ++b) inner_acc[b] += v[b];
      for (std::size_t g : mixed_) {
        double* f = flat.data() + groups_[g].offset + outer_base[g];
        const std::uint32_t* tab = inner_code_[g].data();
        for (std::size_t b = 0; b < block_; ++b) f[tab[b]] += v[b];
      }
    });
    for (std::size_t g : inner_only_) {
      double* f = flat.data() + groups_[g].offset;
      const auto& tab = inner_code_[g];
      for (std::size_t b = 0; b < block_; ++b) f[tab[b]] += inner_acc[b];
    }
  }

  /// sums[c] = total of values over cells whose combination in group g is c.
  void accumulate_group(std::size_t g, std::span<const double> values, std::span<double> sums) const {
    check_cells(values.size());
    const auto& grp = groups_.at(g);
    std::fill(sums.begin(), sums.begin() + grp.combos, 0.0);
    const std::uint32_t* tab = inner_code_[g].data();
    walk_blocks([&](CellIndex start, std::span<const std::uint32_t> outer_base) {
      const double* v = values.data() + start;
      if (!grp.has_inner) {
        double s = 0.0;
        for (std::size_t b = 0; b < block_; ++b) s += v[b];
        sums[outer_base[g]] += s;
      } else {
        double* f = sums.data() + outer_base[g];
        for (std::size_t b = 0; b < block_; ++b) f[tab[b]] += v[b];
      }
    }, g);
  }

  /// values[x] *= factors[combination of x in group g].
  void scale_group(std::size_t g, std::span<const double> factors, std::span<double> values) const {
    check_cells(values.size());
    const auto& grp = groups_.at(g);
    const std::uint32_t* tab = inner_code_[g].data();
    walk_blocks([&](CellIndex start, std::span<const std::uint32_t> outer_base) {
      double* v = values.data() + start;
      if (!grp.has_inner) {
        const double f = factors[outer_base[g]];
        if (f != 1.0)
          for (std::size_t b = 0; b < block_; ++b) v[b] *= f;
      } else {
        const double* f = factors.data() + outer_base[g];
        for (std::size_t b = 0; b < block_; ++b) v[b] *= f[tab[b]];
      }
    }, g);
  }

 private:
  void check_cells(std::size_t n) const {
    if (n != schema_.cell_count()) throw DomainError("cell vector does not span the attribute space");
  }

  void plan_blocks() {
    const std::size_t K = schema_.size();
    split_ = K;
    block_ = 1;
    while (split_ > 0 && block_ * static_cast<std::size_t>(schema_.domain_size(split_ - 1)) <= kMaxBlock) {
      --split_;
      block_ *= static_cast<std::size_t>(schema_.domain_size(split_));
    }
    inner_code_.assign(groups_.size(), {});
    std::vector<int> digits(K, 0);
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      auto& grp = groups_[g];
      for (int a : grp.attributes) (static_cast<std::size_t>(a) < split_ ? grp.has_outer : grp.has_inner) = true;
      if (grp.has_inner && grp.has_outer) mixed_.push_back(g);
      else if (grp.has_inner) inner_only_.push_back(g);
      else outer_only_.push_back(g);
      if (!grp.has_inner) continue;
      auto& tab = inner_code_[g];
      tab.resize(block_);
      for (std::size_t b = 0; b < block_; ++b) {
        std::size_t rem = b;
        for (std::size_t k = K; k-- > split_;) {
          digits[k] = static_cast<int>(rem % schema_.domain_size(k));
          rem /= schema_.domain_size(k);
        }
        std::uint32_t code = 0;
        for (std::size_t i = 0; i < grp.attributes.size(); ++i)
          if (static_cast<std::size_t>(grp.attributes[i]) >= split_)
            code += static_cast<std::uint32_t>(digits[grp.attributes[i]]) * grp.strides[i];
        tab[b] = code;
      }
    }
  }

  /// Calls fn(first cell of block, outer offset per group) for every block in
  /// canonical order. With only_group set, only that group's offset is kept current.
  template <class Fn>
  void walk_blocks(Fn&& fn, std::size_t only_group = static_cast<std::size_t>(-1)) const {
    const CellIndex blocks = schema_.cell_count() / block_;
    std::vector<int> outer(split_, 0);
    std::vector<std::uint32_t> base(groups_.size(), 0);
    auto refresh = [&](std::size_t g) {
      const auto& grp = groups_[g];
      std::uint32_t code = 0;
      for (std::size_t i = 0; i < grp.attributes.size(); ++i)
        if (static_cast<std::size_t>(grp.attributes[i]) < split_)
          code += static_cast<std::uint32_t>(outer[grp.attributes[i]]) * grp.strides[i];
      base[g] = code;
    };
    for (CellIndex blk = 0; blk < blocks; ++blk) {
      fn(blk * block_, std::span<const std::uint32_t>(base));
      // odometer step over the outer attributes; refresh only the groups touched
      for (std::size_t k = split_; k-- > 0;) {
        if (++outer[k] < schema_.domain_size(k)) {
          update_groups(k, only_group, refresh);
          break;
        }
        outer[k] = 0;
        update_groups(k, only_group, refresh);
      }
    }
  }

  template <class Refresh>
  void update_groups(std::size_t k, std::size_t only_group, Refresh& refresh) const {
    if (only_group != static_cast<std::size_t>(-1)) {
      refresh(only_group);
      return;
    }
    for (std::size_t g : attribute_groups_[k]) refresh(g);
  }

  AttributeSchema schema_;
  std::vector<Group> groups_;
  std::vector<std::size_t> slot_;
  std::vector<std::size_t> group_of_;
  std::size_t flat_size_ = 0;
  std::vector<std::vector<std::size_t>> attribute_groups_;

  std::size_t split_ = 0;
  std::size_t block_ = 1;
  std::vector<std::vector<std::uint32_t>> inner_code_;
  std::vector<std::size_t> mixed_, inner_only_, outer_only_;
};

}  // namespace popsynth
