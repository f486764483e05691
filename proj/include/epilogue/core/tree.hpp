#pragma once

#include <algorithm>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "epilogue/core/error.hpp"

namespace epilogue {

/// A name-keyed tree whose leaves carry values of type Leaf. Children are kept
/// sorted by byte-wise name order, which is also the canonical visiting order
/// for serialization. A default-constructed tree is an empty interior node.
template <class Leaf>
class Tree {
 public:
  struct Entry {
    std::string name;
    Tree value;
    bool operator==(const Entry&) const = default;
  };

  Tree() = default;
  Tree(Leaf leaf) : leaf_(std::move(leaf)) {}  // NOLINT(google-explicit-constructor)
  Tree(std::initializer_list<std::pair<std::string, Tree>> children) {
    for (const auto& [name, child] : children) set(name, child);
  }

  bool is_leaf() const { return leaf_.has_value(); }
  bool empty() const { return !leaf_ && children_.empty(); }

  const Leaf& leaf() const {
    if (!leaf_) fail(ErrorCode::invalid_argument, "tree node is not a leaf");
    return *leaf_;
  }
  Leaf& leaf() {
    if (!leaf_) fail(ErrorCode::invalid_argument, "tree node is not a leaf");
    return *leaf_;
  }

  const std::vector<Entry>& children() const { return children_; }

  const Tree* find(std::string_view name) const {
    auto it = lower(name);
    return it != children_.end() && it->name == name ? &it->value : nullptr;
  }
  Tree* find(std::string_view name) {
    return const_cast<Tree*>(static_cast<const Tree*>(this)->find(name));
  }

  // Resolves a '/'-separated path; the empty path is this node.
  const Tree* find_path(std::string_view path) const {
    const Tree* node = this;
    while (!path.empty() && node) {
      auto slash = path.find('/');
      node = node->find(path.substr(0, slash));
      path = slash == std::string_view::npos ? std::string_view{} : path.substr(slash + 1);
    }
    return node;
  }

  void set(std::string name, Tree child) {
    if (leaf_) fail(ErrorCode::invalid_argument, "cannot add children to a leaf");
    auto it = lower(name);
    if (it != children_.end() && it->name == name) {
      it->value = std::move(child);
    } else {
      children_.insert(it, Entry{std::move(name), std::move(child)});
    }
  }

  bool erase(std::string_view name) {
    auto it = lower(name);
    if (it == children_.end() || it->name != name) return false;
    children_.erase(it);
    return true;
  }

  // Visits leaves depth-first in canonical order as f(path, leaf).
  template <class F>
  void for_each_leaf(F&& f, const std::string& prefix = {}) const {
    if (leaf_) {
      f(prefix, *leaf_);
      return;
    }
    for (const auto& e : children_) {
      e.value.for_each_leaf(f, prefix.empty() ? e.name : prefix + "/" + e.name);
    }
  }
  template <class F>
  void for_each_leaf_mut(F&& f) {
    if (leaf_) {
      f(*leaf_);
      return;
    }
    for (auto& e : children_) e.value.for_each_leaf_mut(f);
  }

  // Number of interior levels above the deepest leaf; a bare leaf has depth 0.
  std::size_t depth() const {
    std::size_t d = 0;
    for (const auto& e : children_) d = std::max(d, 1 + e.value.depth());
    return d;
  }

  // Builds a tree of the same structure with every leaf mapped through f.
  template <class F>
  auto map_leaves(F&& f) const -> Tree<std::decay_t<decltype(f(std::declval<const Leaf&>()))>> {
    using Out = Tree<std::decay_t<decltype(f(std::declval<const Leaf&>()))>>;
    if (leaf_) return Out(f(*leaf_));
    Out out;
    for (const auto& e : children_) out.set(e.name, e.value.map_leaves(f));
    return out;
  }

  bool operator==(const Tree&) const = default;

 private:
  auto lower(std::string_view name) const {
    return std::lower_bound(children_.begin(), children_.end(), name,
                            [](const Entry& e, std::string_view n) { return e.name < n; });
  }
  auto lower(std::string_view name) {
    return std::lower_bound(children_.begin(), children_.end(), name,
                            [](const Entry& e, std::string_view n) { return e.name < n; });
  }

  std::optional<Leaf> leaf_;
  std::vector<Entry> children_;
};

}  // namespace epilogue
