#pragma once

#include "inblock/errors.hpp"
#include "inblock/prefix.hpp"
#include "inblock/rational.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace inblock {

enum class NodeState : std::uint8_t { Free, Split, Allocated };

std::string_view to_string(NodeState s) noexcept;

struct Utilization {
  std::map<unsigned, std::uint64_t> allocated_by_length;
  Rational free_fraction;
};

template <class Prefix>
struct ContiguousGrant {
  Prefix prefix;
  bool aggregatable;
};

/// Binary allocation tree over a single root prefix.
///
/// Nodes are materialized lazily: a node exists only once its parent has
/// been split. Invariants:
///   - a Split node has both halves present; Free/Allocated nodes have none;
///   - no Split node has two Free children (free buddies are merged).
/// Under these rules the tree is a pure function of the allocated set, so
/// equal allocation histories compare equal.
template <unsigned Width>
class BasicPool {
public:
  using Prefix = BasicPrefix<Width>;

  explicit BasicPool(Prefix root) : root_(root) {
    nodes_.emplace(root, NodeState::Free);
    free_.emplace(root.length(), root.address());
  }

  const Prefix& root() const noexcept { return root_; }
  const std::map<Prefix, NodeState>& nodes() const noexcept { return nodes_; }

  /// Where allocate_sparse would place a block of `length`, without mutating.
  /// Placement: the shortest free node, lowest address on ties, descending
  /// through lower halves.
  std::optional<Prefix> find_sparse_slot(unsigned length) const {
    check_length(length);
    if (free_.empty())
      return std::nullopt;
    auto [len, addr] = *free_.begin();
    if (len > length)
      return std::nullopt;
    return Prefix::make(addr, len).first_subprefix(length);
  }

  Prefix allocate_sparse(unsigned length) {
    auto slot = find_sparse_slot(length);
    if (!slot)
      throw Error(errc::PoolExhausted, "no free block of length " + std::to_string(length));
    allocate_exact(*slot);
    return *slot;
  }

  /// Allocates the buddy of `existing` when it is entirely free, otherwise a
  /// sparse block of the same length flagged as not aggregatable.
  ContiguousGrant<Prefix> allocate_contiguous(const Prefix& existing) {
    if (!is_allocated(existing))
      throw Error(errc::NotAllocated, to_debug_string(existing));
    if (existing.length() > root_.length()) {
      Prefix b = existing.buddy();
      if (is_free(b)) {
        allocate_exact(b);
        return {b, true};
      }
    }
    return {allocate_sparse(existing.length()), false};
  }

  /// Marks exactly `block` Allocated. Throws PoolExhausted if any part of it
  /// is already in use.
  void allocate_exact(const Prefix& block) {
    Prefix free_node = descend_to_free(block);
    split_down(free_node, block);
    set_state(block, NodeState::Allocated);
  }

  /// Allocates every `unit_length` sub-block of `block` as a separate node.
  std::vector<Prefix> allocate_tiled(const Prefix& block, unsigned unit_length) {
    check_length(unit_length);
    if (unit_length < block.length())
      throw Error(errc::LengthOutOfRange, "unit longer than block");
    Prefix free_node = descend_to_free(block);
    split_down(free_node, block);
    std::vector<Prefix> out;
    tile(block, unit_length, out);
    return out;
  }

  void release(const Prefix& p) {
    if (!is_allocated(p))
      throw Error(errc::NotAllocated, to_debug_string(p));
    set_state(p, NodeState::Free);
    Prefix cur = p;
    while (cur != root_) {
      Prefix sib = cur.buddy();
      if (nodes_.at(sib) != NodeState::Free)
        break;
      erase_node(cur);
      erase_node(sib);
      cur = cur.parent();
      set_state(cur, NodeState::Free);
    }
  }

  bool is_allocated(const Prefix& p) const {
    auto it = nodes_.find(p);
    return it != nodes_.end() && it->second == NodeState::Allocated;
  }

  /// True when no address of `p` is allocated.
  bool is_free(const Prefix& p) const {
    if (!root_.contains(p))
      return false;
    Prefix cur = root_;
    for (;;) {
      NodeState st = nodes_.at(cur);
      if (st == NodeState::Free)
        return true;
      if (st == NodeState::Allocated || cur == p)
        return false;
      auto [lo, hi] = cur.split();
      cur = lo.contains(p) ? lo : hi;
    }
  }

  std::vector<Prefix> allocated() const {
    std::vector<Prefix> out;
    for (const auto& [p, st] : nodes_)
      if (st == NodeState::Allocated)
        out.push_back(p);
    return out;
  }

  std::vector<Prefix> free_blocks() const {
    std::vector<Prefix> out;
    for (const auto& [p, st] : nodes_)
      if (st == NodeState::Free)
        out.push_back(p);
    return out;
  }

  Utilization utilization() const {
    Utilization u;
    u.free_fraction = 0;
    for (const auto& [p, st] : nodes_) {
      if (st == NodeState::Allocated)
        ++u.allocated_by_length[p.length()];
      else if (st == NodeState::Free)
        u.free_fraction += Rational(BigInt(1), pow2(p.length() - root_.length()));
    }
    return u;
  }

  /// Empty string when all structural invariants hold, else a description.
  std::string check_invariants() const {
    auto root_it = nodes_.find(root_);
    if (root_it == nodes_.end())
      return "root missing";
    std::size_t free_count = 0;
    for (const auto& [p, st] : nodes_) {
      if (!root_.contains(p))
        return "node outside root: " + to_debug_string(p);
      if (p != root_) {
        auto parent = nodes_.find(p.parent());
        if (parent == nodes_.end() || parent->second != NodeState::Split)
          return "orphan node: " + to_debug_string(p);
      }
      bool has_children = p.length() < Width && nodes_.count(p.split().first) != 0;
      if (st == NodeState::Split) {
        if (p.length() >= Width)
          return "split host node";
        auto [lo, hi] = p.split();
        auto a = nodes_.find(lo);
        auto b = nodes_.find(hi);
        if (a == nodes_.end() || b == nodes_.end())
          return "split node missing child: " + to_debug_string(p);
        if (a->second == NodeState::Free && b->second == NodeState::Free)
          return "unmerged free siblings under " + to_debug_string(p);
      } else if (has_children) {
        return "leaf node with children: " + to_debug_string(p);
      }
      if (st == NodeState::Free) {
        ++free_count;
        if (free_.count({p.length(), p.address()}) == 0)
          return "free index missing " + to_debug_string(p);
      }
    }
    if (free_count != free_.size())
      return "free index has stale entries";
    return {};
  }

  /// Rebuilds a pool from a node listing; throws CorruptSnapshot if the
  /// listing breaks any tree invariant.
  static BasicPool from_nodes(Prefix root, const std::map<Prefix, NodeState>& nodes) {
    BasicPool pool(root);
    pool.nodes_ = nodes;
    pool.free_.clear();
    for (const auto& [p, st] : nodes)
      if (st == NodeState::Free)
        pool.free_.emplace(p.length(), p.address());
    if (auto why = pool.check_invariants(); !why.empty())
      throw Error(errc::CorruptSnapshot, why);
    return pool;
  }

  friend bool operator==(const BasicPool& a, const BasicPool& b) {
    return a.root_ == b.root_ && a.nodes_ == b.nodes_;
  }

private:
  void check_length(unsigned length) const {
    if (length <= root_.length() || length > Width)
      throw Error(errc::LengthOutOfRange,
                  "length " + std::to_string(length) + " not inside pool root");
  }

  // Walks from the root to the Free node that contains `block`.
  Prefix descend_to_free(const Prefix& block) const {
    if (!root_.contains(block))
      throw Error(errc::PoolExhausted, "block outside pool");
    Prefix cur = root_;
    for (;;) {
      NodeState st = nodes_.at(cur);
      if (st == NodeState::Free)
        return cur;
      if (st == NodeState::Allocated || cur == block)
        throw Error(errc::PoolExhausted, "block in use: " + to_debug_string(block));
      auto [lo, hi] = cur.split();
      cur = lo.contains(block) ? lo : hi;
    }
  }

  // Splits free node `from` until `target` exists as a Free node.
  void split_down(Prefix from, const Prefix& target) {
    while (from != target) {
      auto [lo, hi] = from.split();
      set_state(from, NodeState::Split);
      set_state(lo, NodeState::Free);
      set_state(hi, NodeState::Free);
      from = lo.contains(target) ? lo : hi;
    }
  }

  void tile(const Prefix& p, unsigned unit_length, std::vector<Prefix>& out) {
    if (p.length() == unit_length) {
      set_state(p, NodeState::Allocated);
      out.push_back(p);
      return;
    }
    auto [lo, hi] = p.split();
    set_state(p, NodeState::Split);
    tile(lo, unit_length, out);
    tile(hi, unit_length, out);
  }

  void set_state(const Prefix& p, NodeState st) {
    auto [it, inserted] = nodes_.try_emplace(p, st);
    if (!inserted) {
      if (it->second == NodeState::Free)
        free_.erase({p.length(), p.address()});
      it->second = st;
    }
    if (st == NodeState::Free)
      free_.emplace(p.length(), p.address());
  }

  void erase_node(const Prefix& p) {
    auto it = nodes_.find(p);
    if (it->second == NodeState::Free)
      free_.erase({p.length(), p.address()});
    nodes_.erase(it);
  }

  Prefix root_;
  std::map<Prefix, NodeState> nodes_;
  // Free nodes keyed by (length, address): begin() is the sparse placement.
  std::set<std::pair<unsigned, u128>> free_;
};

using PoolState = BasicPool<128>;

} // namespace inblock
