#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace mtdist {

/// Raised when a parent array does not describe a single rooted tree.
class TreeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rooted, unordered, scalar-labeled tree.
///
/// Node ids are dense (0..n-1). The constructor only guarantees that the
/// parent array forms a single rooted tree; the merge-tree conditions
/// (root degree one, inner degree at least two, strictly increasing
/// scalars towards the leaves) are checked by `validate`.
class MergeTree {
 public:
  MergeTree() : MergeTree(std::vector<double>{0.0}, std::vector<int>{-1}) {}

  MergeTree(std::vector<double> scalars, std::vector<int> parents)
      : scalar_(std::move(scalars)), parent_(std::move(parents)) {
    build();
  }

  /// The empty tree: a single node without edges.
  static MergeTree empty(double root_scalar = 0.0) {
    return MergeTree({root_scalar}, {-1});
  }

  int size() const { return static_cast<int>(parent_.size()); }
  int root() const { return root_; }
  bool is_empty_tree() const { return size() == 1; }

  double scalar(int v) const { return scalar_[v]; }
  int parent(int v) const { return parent_[v]; }
  const std::vector<int>& children(int v) const { return children_[v]; }
  int degree(int v) const { return static_cast<int>(children_[v].size()); }
  bool is_leaf(int v) const { return children_[v].empty() && v != root_; }
  bool is_root(int v) const { return v == root_; }

  const std::vector<double>& scalars() const { return scalar_; }
  const std::vector<int>& parents() const { return parent_; }

  /// Length of the edge from `v` to its parent (0 for the root).
  double up_length(int v) const {
    return v == root_ ? 0.0 : scalar_[v] - scalar_[parent_[v]];
  }

  /// Nodes in preorder, children visited in increasing id order.
  const std::vector<int>& preorder() const { return preorder_; }
  int preorder_index(int v) const { return pre_index_[v]; }
  int subtree_size(int v) const { return subtree_size_[v]; }
  int depth(int v) const { return depth_[v]; }

  /// True iff `u` is a strict ancestor of `v`.
  bool is_ancestor(int u, int v) const {
    return u != v && pre_index_[u] <= pre_index_[v] &&
           pre_index_[v] < pre_index_[u] + subtree_size_[u];
  }

  friend bool operator==(const MergeTree& a, const MergeTree& b) {
    return a.parent_ == b.parent_ && a.scalar_ == b.scalar_;
  }

 private:
  void build() {
    const int n = size();
    if (n == 0) throw TreeError("not a tree: no nodes");
    if (static_cast<int>(scalar_.size()) != n)
      throw TreeError("not a tree: scalar/parent size mismatch");
    children_.assign(n, {});
    root_ = -1;
    for (int v = 0; v < n; ++v) {
      const int p = parent_[v];
      if (p < 0) {
        if (root_ >= 0) throw TreeError("not a tree: more than one root");
        root_ = v;
        parent_[v] = -1;
      } else if (p >= n || p == v) {
        throw TreeError("not a tree: invalid parent of node " + std::to_string(v));
      } else {
        children_[p].push_back(v);
      }
    }
    if (root_ < 0) throw TreeError("not a tree: no root");

    pre_index_.assign(n, -1);
    subtree_size_.assign(n, 1);
    depth_.assign(n, 0);
    preorder_.clear();
    preorder_.reserve(n);
    std::vector<int> stack{root_};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      pre_index_[v] = static_cast<int>(preorder_.size());
      preorder_.push_back(v);
      for (auto it = children_[v].rbegin(); it != children_[v].rend(); ++it) {
        depth_[*it] = depth_[v] + 1;
        stack.push_back(*it);
      }
    }
    if (static_cast<int>(preorder_.size()) != n)
      throw TreeError("not a tree: parent cycle or disconnected nodes");
    for (auto it = preorder_.rbegin(); it != preorder_.rend(); ++it)
      if (parent_[*it] >= 0) subtree_size_[parent_[*it]] += subtree_size_[*it];
  }

  std::vector<double> scalar_;
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  std::vector<int> preorder_;
  std::vector<int> pre_index_;
  std::vector<int> subtree_size_;
  std::vector<int> depth_;
  int root_ = -1;
};

/// Lists every violated merge-tree condition; an empty result means valid.
inline std::vector<std::string> validate(const MergeTree& tree) {
  std::vector<std::string> violations;
  if (tree.is_empty_tree()) return violations;
  const int r = tree.root();
  if (tree.degree(r) != 1)
    violations.push_back("root degree != 1 (node " + std::to_string(r) + " has " +
                         std::to_string(tree.degree(r)) + " children)");
  for (int v = 0; v < tree.size(); ++v) {
    if (v != r && tree.degree(v) == 1)
      violations.push_back("inner node degree 1 (node " + std::to_string(v) + ")");
    if (v != r && !(tree.scalar(v) > tree.scalar(tree.parent(v))))
      violations.push_back("scalar not above parent (node " + std::to_string(v) + ")");
  }
  return violations;
}

inline bool is_valid(const MergeTree& tree) { return validate(tree).empty(); }

/// Throws std::invalid_argument listing the violations if `tree` is invalid.
inline void require_valid(const MergeTree& tree, const std::string& what = "tree") {
  auto violations = validate(tree);
  if (violations.empty()) return;
  std::string msg = what + " is not a valid merge tree:";
  for (const auto& v : violations) msg += "\n  " + v;
  throw std::invalid_argument(msg);
}

/// Sum of all edge lengths.
inline double total_persistence(const MergeTree& tree) {
  require_valid(tree);
  double sum = 0.0;
  for (int v = 0; v < tree.size(); ++v) sum += tree.up_length(v);
  return sum;
}

/// Edge-label view of a tree: `length[v]` is the length of the edge above v.
struct EdgeLengthView {
  std::vector<int> parents;
  std::vector<double> length;  // 0 at the root
  double total = 0.0;
};

inline EdgeLengthView edge_lengths(const MergeTree& tree) {
  require_valid(tree);
  EdgeLengthView view{tree.parents(), std::vector<double>(tree.size(), 0.0), 0.0};
  for (int v = 0; v < tree.size(); ++v) {
    view.length[v] = tree.up_length(v);
    view.total += view.length[v];
  }
  return view;
}

/// Rebuilds node scalars from edge lengths by prefix sums from the root.
inline MergeTree scalars_from_lengths(const std::vector<int>& parents,
                                      const std::vector<double>& lengths,
                                      double root_scalar = 0.0) {
  if (parents.size() != lengths.size())
    throw std::invalid_argument("scalars_from_lengths: size mismatch");
  MergeTree shape(std::vector<double>(parents.size(), 0.0), parents);
  std::vector<double> scalars(parents.size(), root_scalar);
  for (int v : shape.preorder()) {
    if (v == shape.root()) continue;
    if (!(lengths[v] > 0.0))
      throw std::invalid_argument("scalars_from_lengths: nonpositive length at node " +
                                  std::to_string(v));
    scalars[v] = scalars[shape.parent(v)] + lengths[v];
  }
  return MergeTree(std::move(scalars), parents);
}

inline MergeTree scalars_from_lengths(const EdgeLengthView& view, double root_scalar = 0.0) {
  return scalars_from_lengths(view.parents, view.length, root_scalar);
}

/// Downward path v1..vk (k >= 2), v1 an ancestor of vk.
struct TreePath {
  std::vector<int> vertices;

  int start() const { return vertices.front(); }
  int end() const { return vertices.back(); }
};

inline double path_length(const MergeTree& tree, const TreePath& path) {
  return tree.scalar(path.end()) - tree.scalar(path.start());
}

/// All downward paths, ordered by end node id, then by start from nearest ancestor.
inline std::vector<TreePath> enumerate_paths(const MergeTree& tree) {
  std::vector<TreePath> paths;
  for (int v = 0; v < tree.size(); ++v) {
    std::vector<int> chain{v};
    for (int u = tree.parent(v); u >= 0; u = tree.parent(u)) {
      chain.push_back(u);
      TreePath p;
      p.vertices.assign(chain.rbegin(), chain.rend());
      paths.push_back(std::move(p));
    }
  }
  return paths;
}

namespace detail {

// Drops nodes marked removed and renumbers the rest densely in id order.
inline MergeTree compact(const MergeTree& tree, const std::vector<int>& new_parent_old_ids,
                         const std::vector<bool>& removed,
                         std::vector<int>* id_map = nullptr) {
  const int n = tree.size();
  std::vector<int> remap(n, -1);
  int next = 0;
  for (int v = 0; v < n; ++v)
    if (!removed[v]) remap[v] = next++;
  std::vector<double> scalars(next);
  std::vector<int> parents(next);
  for (int v = 0; v < n; ++v) {
    if (removed[v]) continue;
    scalars[remap[v]] = tree.scalar(v);
    parents[remap[v]] = new_parent_old_ids[v] < 0 ? -1 : remap[new_parent_old_ids[v]];
  }
  if (id_map) *id_map = remap;
  return MergeTree(std::move(scalars), std::move(parents));
}

inline double scalar_range(const MergeTree& tree) {
  auto [lo, hi] = std::minmax_element(tree.scalars().begin(), tree.scalars().end());
  return *hi - *lo;
}

// Total order on trees used to fix operand order in symmetric computations.
inline bool canonical_less(const MergeTree& a, const MergeTree& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  if (a.scalars() != b.scalars()) return a.scalars() < b.scalars();
  return a.parents() < b.parents();
}

}  // namespace detail

/// Contracts inner edges shorter than `epsilon_relative` times the scalar
/// range of the input. The merged saddle keeps the parent's scalar. Edges
/// hanging off the root are never contracted.
inline MergeTree epsilon_collapse(const MergeTree& tree, double epsilon_relative) {
  require_valid(tree);
  if (!(epsilon_relative >= 0.0) || epsilon_relative >= 1.0)
    throw std::invalid_argument("epsilon_collapse: epsilon must lie in [0, 1)");
  if (epsilon_relative == 0.0 || tree.is_empty_tree()) return tree;

  const double threshold = epsilon_relative * detail::scalar_range(tree);
  const int n = tree.size();
  std::vector<int> parent = tree.parents();
  std::vector<bool> removed(n, false);
  std::vector<int> child_count(n, 0);
  for (int v = 0; v < n; ++v)
    if (parent[v] >= 0) ++child_count[parent[v]];

  bool changed = true;
  while (changed) {
    changed = false;
    for (int c = 0; c < n; ++c) {
      if (removed[c] || parent[c] < 0) continue;
      const int p = parent[c];
      if (parent[p] < 0 || child_count[c] == 0) continue;
      if (!(tree.scalar(c) - tree.scalar(p) < threshold)) continue;
      for (int g = 0; g < n; ++g)
        if (!removed[g] && parent[g] == c) parent[g] = p;
      child_count[p] += child_count[c] - 1;
      removed[c] = true;
      changed = true;
    }
  }
  return detail::compact(tree, parent, removed);
}

/// Removes leaf edges shorter than `tau`, shortest first (ties by lowest id),
/// pruning any saddle that is left with a single child.
inline MergeTree leaf_simplify(const MergeTree& tree, double tau) {
  require_valid(tree);
  if (tau < 0.0) throw std::invalid_argument("leaf_simplify: tau must be nonnegative");
  const int n = tree.size();
  std::vector<int> parent = tree.parents();
  std::vector<bool> removed(n, false);
  std::vector<int> child_count(n, 0);
  for (int v = 0; v < n; ++v)
    if (parent[v] >= 0) ++child_count[parent[v]];

  while (true) {
    int best = -1;
    double best_len = tau;
    for (int v = 0; v < n; ++v) {
      // The root's only child carries the global branch and always stays.
      if (removed[v] || parent[v] < 0 || parent[parent[v]] < 0 || child_count[v] != 0) continue;
      const double len = tree.scalar(v) - tree.scalar(parent[v]);
      if (len < best_len) {
        best_len = len;
        best = v;
      }
    }
    if (best < 0) break;
    const int p = parent[best];
    removed[best] = true;
    --child_count[p];
    if (parent[p] >= 0 && child_count[p] == 1) {
      for (int s = 0; s < n; ++s) {
        if (!removed[s] && parent[s] == p) {
          parent[s] = parent[p];
          break;
        }
      }
      removed[p] = true;
    }
  }
  return detail::compact(tree, parent, removed);
}

/// Serializes to {"nodes": [{"id", "scalar", "parent"}...]}, ids ascending.
inline nlohmann::json to_json(const MergeTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (int v = 0; v < tree.size(); ++v) {
    nlohmann::json node{{"id", v}, {"scalar", tree.scalar(v)}};
    if (tree.parent(v) < 0)
      node["parent"] = nullptr;
    else
      node["parent"] = tree.parent(v);
    nodes.push_back(std::move(node));
  }
  return nlohmann::json{{"nodes", std::move(nodes)}};
}

/// Parse failure in a tree file; `what()` names the offending node/field.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds a tree from the JSON object form, then validates it.
inline MergeTree tree_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array())
    throw ParseError("expected an object with a \"nodes\" array");
  const auto& nodes = doc["nodes"];
  const int n = static_cast<int>(nodes.size());
  if (n == 0) throw ParseError("\"nodes\" is empty");
  std::vector<double> scalars(n);
  std::vector<int> parents(n);
  std::vector<bool> seen(n, false);
  for (int i = 0; i < n; ++i) {
    const auto& node = nodes[i];
    const std::string where = "nodes[" + std::to_string(i) + "]";
    if (!node.is_object()) throw ParseError(where + ": expected an object");
    if (!node.contains("id") || !node["id"].is_number_integer())
      throw ParseError(where + ".id: expected an integer");
    if (!node.contains("scalar") || !node["scalar"].is_number())
      throw ParseError(where + ".scalar: expected a number");
    if (!node.contains("parent") || !(node["parent"].is_null() || node["parent"].is_number_integer()))
      throw ParseError(where + ".parent: expected an integer or null");
    const long long id = node["id"].get<long long>();
    if (id < 0 || id >= n) throw ParseError(where + ".id: ids must be dense in 0.." + std::to_string(n - 1));
    if (seen[id]) throw ParseError(where + ".id: duplicate id " + std::to_string(id));
    seen[id] = true;
    scalars[id] = node["scalar"].get<double>();
    parents[id] = node["parent"].is_null() ? -1 : node["parent"].get<int>();
  }
  MergeTree tree(std::move(scalars), std::move(parents));
  require_valid(tree);
  return tree;
}

inline void save_tree(const MergeTree& tree, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json(tree).dump(2) << '\n';
}

inline MergeTree load_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  try {
    return tree_from_json(doc);
  } catch (const std::exception& e) {
    // Structural and validation failures are reported as parse errors too.
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace mtdist
