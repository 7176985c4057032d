#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "merge_tree.hpp"

namespace mtdist {

// ---------------------------------------------------------------------------
// Edit operations (edge-label view: lengths of untouched edges never change)

/// Set the length of the edge above `node`.
struct Relabel {
  int node;
  double new_length;
};

/// Remove the edge above `node`. A leaf edge disappears and a parent left
/// with one child is pruned; an inner edge merges `node` into its parent.
struct Contract {
  int node;
};

/// Attach a new leaf below `node`, which must be the root of the empty tree
/// or a node that already has at least two children.
struct InsertLeaf {
  int node;
  double length;
};

/// Split the edge above `node` at `offset` from its upper end and hang a new
/// leaf of `length` from the split point. Inverse of a pruning contraction.
struct SplitInsert {
  int node;
  double offset;
  double length;
};

/// Insert a new node of up-length `length` below `node` and move `moved`
/// (at least two, but not all, children of `node`) under it.
struct InsertInner {
  int node;
  std::vector<int> moved;
  double length;
};

using EditOperation = std::variant<Relabel, Contract, InsertLeaf, SplitInsert, InsertInner>;

class EditError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

struct Workspace {
  std::vector<int> parent;
  std::vector<double> length;  // edge above node, 0 for the root
  std::vector<bool> removed;
  double root_scalar = 0.0;

  explicit Workspace(const MergeTree& t)
      : parent(t.parents()), length(t.size()), removed(t.size(), false),
        root_scalar(t.scalar(t.root())) {
    for (int v = 0; v < t.size(); ++v) length[v] = t.up_length(v);
  }

  int add(int p, double len) {
    parent.push_back(p);
    length.push_back(len);
    removed.push_back(false);
    return static_cast<int>(parent.size()) - 1;
  }

  std::vector<int> children(int v) const {
    std::vector<int> out;
    for (int c = 0; c < static_cast<int>(parent.size()); ++c)
      if (!removed[c] && parent[c] == v) out.push_back(c);
    return out;
  }

  MergeTree finish(std::vector<int>* id_map) const {
    const int n = static_cast<int>(parent.size());
    std::vector<int> remap(n, -1);
    std::vector<int> keep;
    for (int v = 0; v < n; ++v)
      if (!removed[v]) {
        remap[v] = static_cast<int>(keep.size());
        keep.push_back(v);
      }
    std::vector<int> parents(keep.size());
    std::vector<double> lens(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
      parents[i] = parent[keep[i]] < 0 ? -1 : remap[parent[keep[i]]];
      lens[i] = length[keep[i]];
    }
    MergeTree shape(std::vector<double>(keep.size(), 0.0), parents);
    std::vector<double> scalars(keep.size(), root_scalar);
    for (int v : shape.preorder())
      if (v != shape.root()) scalars[v] = scalars[shape.parent(v)] + lens[v];
    if (id_map) id_map->assign(remap.begin(), remap.end());
    return MergeTree(std::move(scalars), std::move(parents));
  }
};

inline void check_node(const MergeTree& t, int v, const char* op) {
  if (v < 0 || v >= t.size())
    throw EditError(std::string(op) + ": node " + std::to_string(v) + " does not exist");
}

inline void check_length(double len, const char* op) {
  if (!(len > 0.0) || !std::isfinite(len))
    throw EditError(std::string(op) + ": length must be positive");
}

}  // namespace detail

/// Cost of a single operation applied to `tree`.
inline double operation_cost(const MergeTree& tree, const EditOperation& op) {
  return std::visit(
      [&](const auto& o) -> double {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Relabel>) {
          detail::check_node(tree, o.node, "relabel");
          return std::abs(tree.up_length(o.node) - o.new_length);
        } else if constexpr (std::is_same_v<T, Contract>) {
          detail::check_node(tree, o.node, "contract");
          return tree.up_length(o.node);
        } else {
          return o.length;
        }
      },
      op);
}

/// Applies `op` and returns the new tree; ids are renumbered densely in the
/// order of the old ids, with inserted nodes last. If `id_map` is given it
/// receives old id -> new id (-1 for removed nodes).
inline MergeTree apply_edit(const MergeTree& tree, const EditOperation& op,
                            std::vector<int>* id_map = nullptr) {
  require_valid(tree);
  detail::Workspace ws(tree);
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Relabel>) {
          detail::check_node(tree, o.node, "relabel");
          if (tree.is_root(o.node)) throw EditError("relabel: the root has no edge");
          detail::check_length(o.new_length, "relabel");
          ws.length[o.node] = o.new_length;
        } else if constexpr (std::is_same_v<T, Contract>) {
          detail::check_node(tree, o.node, "contract");
          const int v = o.node;
          if (tree.is_root(v)) throw EditError("contract: the root has no edge");
          const int p = tree.parent(v);
          if (tree.degree(v) == 0) {
            ws.removed[v] = true;
            if (!tree.is_root(p) && tree.degree(p) == 2) {
              const int sibling = tree.children(p)[0] == v ? tree.children(p)[1] : tree.children(p)[0];
              ws.length[sibling] += ws.length[p];
              ws.parent[sibling] = tree.parent(p);
              ws.removed[p] = true;
            }
          } else {
            if (tree.is_root(p))
              throw EditError("contract: merging an inner node into the root breaks root degree one");
            for (int c : tree.children(v)) ws.parent[c] = p;
            ws.removed[v] = true;
          }
        } else if constexpr (std::is_same_v<T, InsertLeaf>) {
          detail::check_node(tree, o.node, "insert");
          detail::check_length(o.length, "insert");
          const bool empty_root = tree.is_empty_tree();
          if (!empty_root && tree.degree(o.node) < 2)
            throw EditError("insert: target node needs at least two children");
          ws.add(o.node, o.length);
        } else if constexpr (std::is_same_v<T, SplitInsert>) {
          detail::check_node(tree, o.node, "split insert");
          if (tree.is_root(o.node)) throw EditError("split insert: the root has no edge");
          detail::check_length(o.length, "split insert");
          const double full = tree.up_length(o.node);
          if (!(o.offset > 0.0) || !(o.offset < full))
            throw EditError("split insert: offset must lie strictly inside the edge");
          const int mid = ws.add(tree.parent(o.node), o.offset);
          ws.parent[o.node] = mid;
          ws.length[o.node] = full - o.offset;
          ws.add(mid, o.length);
        } else {
          detail::check_node(tree, o.node, "inner insert");
          detail::check_length(o.length, "inner insert");
          const auto& kids = tree.children(o.node);
          std::vector<int> moved = o.moved;
          std::sort(moved.begin(), moved.end());
          moved.erase(std::unique(moved.begin(), moved.end()), moved.end());
          if (moved.size() < 2 || moved.size() >= kids.size())
            throw EditError("inner insert: move at least two but not all children");
          for (int c : moved)
            if (c < 0 || c >= tree.size() || tree.parent(c) != o.node)
              throw EditError("inner insert: node " + std::to_string(c) + " is not a child");
          const int mid = ws.add(o.node, o.length);
          for (int c : moved) ws.parent[c] = mid;
        }
      },
      op);
  MergeTree out = ws.finish(id_map);
  require_valid(out, "edit result");
  return out;
}

/// Total cost of applying `ops` in order; throws EditError if any step is
/// inapplicable. `result` receives the final tree when given.
inline double sequence_cost(const MergeTree& tree, const std::vector<EditOperation>& ops,
                            MergeTree* result = nullptr) {
  MergeTree current = tree;
  double cost = 0.0;
  for (const auto& op : ops) {
    cost += operation_cost(current, op);
    current = apply_edit(current, op);
  }
  if (result) *result = std::move(current);
  return cost;
}

// ---------------------------------------------------------------------------
// Edit mappings

/// Node correspondence between two trees, stored as sorted (T1 id, T2 id) pairs.
struct EditMapping {
  std::vector<std::pair<int, int>> pairs;

  void normalize() { std::sort(pairs.begin(), pairs.end()); }

  EditMapping transposed() const {
    EditMapping t;
    for (auto [a, b] : pairs) t.pairs.emplace_back(b, a);
    t.normalize();
    return t;
  }

  friend bool operator==(const EditMapping&, const EditMapping&) = default;
};

inline std::string check_mapping(const MergeTree& t1, const MergeTree& t2, const EditMapping& m) {
  std::vector<int> used1(t1.size(), 0), used2(t2.size(), 0);
  bool roots = false;
  for (auto [a, b] : m.pairs) {
    if (a < 0 || a >= t1.size() || b < 0 || b >= t2.size())
      return "pair (" + std::to_string(a) + "," + std::to_string(b) + ") out of range";
    if (used1[a]++ || used2[b]++) return "mapping is not one-to-one";
    if (a == t1.root() && b == t2.root()) roots = true;
  }
  if (!roots) return "roots are not paired";
  for (std::size_t i = 0; i < m.pairs.size(); ++i)
    for (std::size_t j = 0; j < m.pairs.size(); ++j) {
      if (i == j) continue;
      auto [a, b] = m.pairs[i];
      auto [x, y] = m.pairs[j];
      if (t1.is_ancestor(a, x) != t2.is_ancestor(b, y))
        return "ancestry differs between (" + std::to_string(a) + "," + std::to_string(b) +
               ") and (" + std::to_string(x) + "," + std::to_string(y) + ")";
    }
  return {};
}

inline void require_mapping(const MergeTree& t1, const MergeTree& t2, const EditMapping& m) {
  auto why = check_mapping(t1, t2, m);
  if (!why.empty()) throw std::invalid_argument("invalid mapping: " + why);
}

enum class NodeStatus { mapped, pruned, charged };

inline const char* to_string(NodeStatus s) {
  switch (s) {
    case NodeStatus::mapped: return "mapped";
    case NodeStatus::pruned: return "pruned";
    case NodeStatus::charged: return "charged";
  }
  return "?";
}

/// Status of every node given which nodes are mapped. An unmapped node is
/// pruned iff exactly one of its child subtrees contains a mapped node.
inline std::vector<NodeStatus> classify_unmapped(const MergeTree& tree, const std::vector<bool>& mapped) {
  const int n = tree.size();
  std::vector<bool> has_mapped(n, false);
  for (auto it = tree.preorder().rbegin(); it != tree.preorder().rend(); ++it) {
    const int v = *it;
    has_mapped[v] = has_mapped[v] || mapped[v];
    if (tree.parent(v) >= 0 && has_mapped[v]) has_mapped[tree.parent(v)] = true;
  }
  std::vector<NodeStatus> status(n, NodeStatus::charged);
  for (int v = 0; v < n; ++v) {
    if (mapped[v]) {
      status[v] = NodeStatus::mapped;
      continue;
    }
    int survivors = 0;
    for (int c : tree.children(v)) survivors += has_mapped[c] ? 1 : 0;
    status[v] = survivors == 1 ? NodeStatus::pruned : NodeStatus::charged;
  }
  return status;
}

struct MappingCostBreakdown {
  double relabel_total = 0.0;
  double deleted_total_t1 = 0.0;
  double inserted_total_t2 = 0.0;
  std::vector<double> run_t1;  // 0 for unmapped nodes and the root
  std::vector<double> run_t2;
  std::vector<int> run_top_t1;  // imaginary parent of each mapped non-root node, -1 otherwise
  std::vector<int> run_top_t2;
  std::vector<NodeStatus> status_t1;
  std::vector<NodeStatus> status_t2;

  double cost() const { return relabel_total + deleted_total_t1 + inserted_total_t2; }
};

namespace detail {

inline void compute_runs(const MergeTree& t, const std::vector<NodeStatus>& status,
                         std::vector<double>& run, std::vector<int>& top) {
  run.assign(t.size(), 0.0);
  top.assign(t.size(), -1);
  for (int v = 0; v < t.size(); ++v) {
    if (status[v] != NodeStatus::mapped || t.is_root(v)) continue;
    int u = t.parent(v);
    while (status[u] == NodeStatus::pruned) u = t.parent(u);
    top[v] = u;
    run[v] = t.scalar(v) - t.scalar(u);
  }
}

}  // namespace detail

namespace detail {

inline MappingCostBreakdown mapping_cost_unchecked(const MergeTree& t1, const MergeTree& t2,
                                                   const EditMapping& m, double total1, double total2) {
  std::vector<bool> mapped1(t1.size(), false), mapped2(t2.size(), false);
  for (auto [a, b] : m.pairs) mapped1[a] = mapped2[b] = true;

  MappingCostBreakdown out;
  out.status_t1 = classify_unmapped(t1, mapped1);
  out.status_t2 = classify_unmapped(t2, mapped2);
  compute_runs(t1, out.status_t1, out.run_t1, out.run_top_t1);
  compute_runs(t2, out.status_t2, out.run_t2, out.run_top_t2);

  double kept1 = 0.0, kept2 = 0.0;
  for (auto [a, b] : m.pairs) {
    if (t1.is_root(a)) continue;
    out.relabel_total += std::abs(out.run_t1[a] - out.run_t2[b]);
    kept1 += out.run_t1[a];
    kept2 += out.run_t2[b];
  }
  out.deleted_total_t1 = std::max(0.0, total1 - kept1);
  out.inserted_total_t2 = std::max(0.0, total2 - kept2);
  return out;
}

}  // namespace detail

/// Cost of a mapping: for each mapped non-root pair the runs are relabeled,
/// and every edge outside a run is deleted (T1) or inserted (T2).
inline MappingCostBreakdown mapping_cost(const MergeTree& t1, const MergeTree& t2, const EditMapping& m) {
  require_valid(t1, "T1");
  require_valid(t2, "T2");
  require_mapping(t1, t2, m);
  return detail::mapping_cost_unchecked(t1, t2, m, total_persistence(t1), total_persistence(t2));
}

/// Edits that remove every node not in `keep` (the root must be kept):
/// fully deleted subtrees go leaf by leaf, then charged inner nodes are
/// merged into their parents. `kept_ids` receives the final id of each
/// original node (-1 if removed). Throws EditError if a charged child of
/// the root would have to be merged into the root.
inline std::vector<EditOperation> deletion_sequence(const MergeTree& tree, const std::vector<bool>& keep,
                                                    MergeTree* result = nullptr,
                                                    std::vector<int>* kept_ids = nullptr) {
  MergeTree current = tree;
  std::vector<int> where(tree.size());
  std::iota(where.begin(), where.end(), 0);
  std::vector<int> original(tree.size());
  std::iota(original.begin(), original.end(), 0);
  std::vector<EditOperation> ops;

  auto apply = [&](EditOperation op) {
    std::vector<int> remap;
    current = apply_edit(current, op, &remap);
    std::vector<int> next_original(current.size(), -1);
    for (int v = 0; v < static_cast<int>(where.size()); ++v)
      if (where[v] >= 0) where[v] = remap[where[v]];
    for (int v = 0; v < static_cast<int>(where.size()); ++v)
      if (where[v] >= 0) next_original[where[v]] = v;
    original = std::move(next_original);
    ops.push_back(std::move(op));
  };

  for (bool progress = true; progress;) {
    progress = false;
    for (int v = 0; v < current.size(); ++v) {
      if (current.is_root(v) || !current.is_leaf(v) || keep[original[v]]) continue;
      apply(Contract{v});
      progress = true;
      break;
    }
  }
  for (bool progress = true; progress;) {
    progress = false;
    for (int v = 0; v < current.size(); ++v) {
      if (current.is_root(v) || keep[original[v]]) continue;
      apply(Contract{v});
      progress = true;
      break;
    }
  }
  if (result) *result = current;
  if (kept_ids) *kept_ids = where;
  return ops;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle

enum class SolveStatus { optimal, upper_bound_only, infeasible_error };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::upper_bound_only: return "upper_bound_only";
    case SolveStatus::infeasible_error: return "infeasible_error";
  }
  return "?";
}

struct IterationRecord {
  double upper_bound = 0.0;
  double lower_bound = 0.0;
  std::size_t variables = 0;
  std::size_t pm_variables = 0;
  double time_limit = 0.0;
  long long node_limit = 0;
  double seconds = 0.0;
};

struct SolveStats {
  long long nodes = 0;
  double seconds = 0.0;
  int iterations = 0;
  std::vector<IterationRecord> log;
};

struct SolveResult {
  double value = 0.0;
  SolveStatus status = SolveStatus::optimal;
  EditMapping witness;
  double lower_bound = 0.0;
  SolveStats stats;
  std::string message;  // set for infeasible_error
};

class SizeCapError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Minimum mapping cost by enumerating every valid mapping. Among optimal
/// mappings the one with the lexicographically smallest pair list wins.
namespace detail {

inline SolveResult brute_force_ordered(const MergeTree& t1, const MergeTree& t2) {
  constexpr double tol = 1e-9;
  const int n1 = t1.size(), n2 = t2.size();
  const double total1 = total_persistence(t1), total2 = total_persistence(t2);
  std::vector<int> assign(n1, -1);
  std::vector<bool> used(n2, false);
  std::vector<std::pair<int, int>> pairs;
  SolveResult best;
  best.value = std::numeric_limits<double>::infinity();
  long long count = 0;

  std::function<void(int)> rec = [&](int i) {
    if (i == n1) {
      ++count;
      EditMapping m{pairs};
      m.normalize();
      const double c = detail::mapping_cost_unchecked(t1, t2, m, total1, total2).cost();
      if (c < best.value - tol || (c <= best.value + tol && m.pairs < best.witness.pairs)) {
        best.value = c;
        best.witness = std::move(m);
      }
      return;
    }
    const int a = i;
    if (t1.is_root(a)) {
      assign[a] = t2.root();
      used[t2.root()] = true;
      pairs.emplace_back(a, t2.root());
      rec(i + 1);
      pairs.pop_back();
      used[t2.root()] = false;
      assign[a] = -1;
      return;
    }
    rec(i + 1);
    for (int b = 0; b < n2; ++b) {
      if (used[b] || t2.is_root(b)) continue;
      bool ok = true;
      for (auto [x, y] : pairs)
        if (t1.is_ancestor(a, x) != t2.is_ancestor(b, y) || t1.is_ancestor(x, a) != t2.is_ancestor(y, b)) {
          ok = false;
          break;
        }
      if (!ok) continue;
      used[b] = true;
      pairs.emplace_back(a, b);
      rec(i + 1);
      pairs.pop_back();
      used[b] = false;
    }
  };
  rec(0);
  best.status = SolveStatus::optimal;
  best.lower_bound = best.value;
  best.stats.nodes = count;
  best.stats.iterations = 1;
  return best;
}

}  // namespace detail

inline SolveResult brute_force_distance(const MergeTree& t1, const MergeTree& t2, int max_nodes = 10) {
  require_valid(t1, "T1");
  require_valid(t2, "T2");
  if (t1.size() > max_nodes || t2.size() > max_nodes)
    throw SizeCapError("oracle size cap exceeded: trees have " + std::to_string(t1.size()) + " and " +
                       std::to_string(t2.size()) + " nodes, cap is " + std::to_string(max_nodes));
  // Fixed operand order keeps the result exactly symmetric.
  if (!detail::canonical_less(t2, t1)) return detail::brute_force_ordered(t1, t2);
  SolveResult r = detail::brute_force_ordered(t2, t1);
  r.witness = r.witness.transposed();
  return r;
}

}  // namespace mtdist
