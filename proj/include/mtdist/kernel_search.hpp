#pragma once

// Exact branch and bound over edit mappings.
//
// Fixing a mapped pair (a, b) splits the problem: the cost below the pair
// depends only on a and b. For a pair, the search chooses the mapped nodes
// directly below it on both sides (two antichains and a bijection), which
// fixes every run inside the pair. The cost of a run pair is |L - M| if the
// path pair is permitted by the filter and L + M otherwise; all material
// outside runs is paid in full. Results per pair are memoized.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "edit_model.hpp"
#include "merge_tree.hpp"

namespace mtdist {

inline constexpr double kTolerance = 1e-9;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Dense ids for the downward paths (top, end) of a tree.
class PathIndex {
 public:
  PathIndex() = default;
  explicit PathIndex(const MergeTree& t) : base_(t.size()), depth_(t.size()) {
    int next = 0;
    for (int v = 0; v < t.size(); ++v) {
      depth_[v] = t.depth(v);
      base_[v] = next;
      for (int u = t.parent(v); u >= 0; u = t.parent(u)) {
        top_.push_back(u);
        end_.push_back(v);
        ++next;
      }
    }
  }

  int count() const { return static_cast<int>(top_.size()); }
  int id(int top, int end) const { return base_[end] + depth_[end] - depth_[top] - 1; }
  int top(int path) const { return top_[path]; }
  int end(int path) const { return end_[path]; }

 private:
  std::vector<int> base_;
  std::vector<int> depth_;
  std::vector<int> top_;
  std::vector<int> end_;
};

/// Set of path pairs whose runs may be matched at relabel cost.
class PathPairFilter {
 public:
  PathPairFilter() = default;
  PathPairFilter(int paths1, int paths2, bool value)
      : cols_(paths2), bits_((static_cast<std::size_t>(paths1) * paths2 + 63) / 64, value ? ~0ULL : 0ULL) {}

  bool test(int path1, int path2) const {
    const std::size_t k = static_cast<std::size_t>(path1) * cols_ + path2;
    return (bits_[k >> 6] >> (k & 63)) & 1ULL;
  }
  void set(int path1, int path2, bool value) {
    const std::size_t k = static_cast<std::size_t>(path1) * cols_ + path2;
    if (value)
      bits_[k >> 6] |= 1ULL << (k & 63);
    else
      bits_[k >> 6] &= ~(1ULL << (k & 63));
  }

 private:
  std::size_t cols_ = 0;
  std::vector<std::uint64_t> bits_;
};

/// Leaf symmetry keeps run pairs whose ends are both leaves or both inner;
/// root symmetry keeps run pairs whose tops are both roots or both not.
inline bool kept_by_symmetry(const MergeTree& t1, const MergeTree& t2, int top1, int end1, int top2, int end2,
                             bool leaf_symmetry, bool root_symmetry) {
  if (leaf_symmetry && t1.is_leaf(end1) != t2.is_leaf(end2)) return false;
  if (root_symmetry && t1.is_root(top1) != t2.is_root(top2)) return false;
  return true;
}

inline PathPairFilter symmetry_filter(const MergeTree& t1, const MergeTree& t2, const PathIndex& p1,
                                      const PathIndex& p2, bool leaf_symmetry, bool root_symmetry) {
  PathPairFilter f(p1.count(), p2.count(), true);
  if (!leaf_symmetry && !root_symmetry) return f;
  for (int i = 0; i < p1.count(); ++i)
    for (int j = 0; j < p2.count(); ++j)
      if (!kept_by_symmetry(t1, t2, p1.top(i), p1.end(i), p2.top(j), p2.end(j), leaf_symmetry, root_symmetry))
        f.set(i, j, false);
  return f;
}

struct SearchLimits {
  long long node_budget = 0;  // 0: unlimited
  double time_limit = 0.0;    // seconds, 0: unlimited
};

/// Shared node/time allowance for one search, including nested pair solves.
class Budget {
 public:
  explicit Budget(SearchLimits limits = {}) : limits_(limits), start_(Clock::now()) {}

  bool tick() {
    ++nodes_;
    if (limits_.node_budget > 0 && nodes_ > limits_.node_budget) exhausted_ = true;
    if (limits_.time_limit > 0.0 && (nodes_ & 1023) == 0 && elapsed() > limits_.time_limit) exhausted_ = true;
    return !exhausted_;
  }
  bool exhausted() const { return exhausted_; }
  long long nodes() const { return nodes_; }
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

 private:
  using Clock = std::chrono::steady_clock;
  SearchLimits limits_;
  Clock::time_point start_;
  long long nodes_ = 0;
  bool exhausted_ = false;
};

class MappingSearch {
 public:
  struct Outcome {
    double lower_bound = 0.0;
    double upper_bound = kInfinity;
    bool exact = false;
  };

  MappingSearch(MergeTree t1, MergeTree t2, PathPairFilter filter)
      : side1_(std::move(t1)), side2_(std::move(t2)), filter_(std::move(filter)) {
    n1_ = side1_.tree.size();
    n2_ = side2_.tree.size();
    memo_.resize(static_cast<std::size_t>(n1_) * n2_);
    relaxed_.assign(static_cast<std::size_t>(n1_) * n2_, 0.0);
    compute_relaxed_bounds();
  }

  /// Builds a search permitting every path pair allowed by the symmetry toggles.
  static MappingSearch unrestricted(const MergeTree& t1, const MergeTree& t2, bool leaf_symmetry = true,
                                    bool root_symmetry = true) {
    PathIndex p1(t1), p2(t2);
    return MappingSearch(t1, t2, symmetry_filter(t1, t2, p1, p2, leaf_symmetry, root_symmetry));
  }

  const MergeTree& tree1() const { return side1_.tree; }
  const MergeTree& tree2() const { return side2_.tree; }
  const PathIndex& paths1() const { return side1_.paths; }
  const PathIndex& paths2() const { return side2_.paths; }
  double subtree_persistence1(int v) const { return side1_.sub[v]; }
  double subtree_persistence2(int v) const { return side2_.sub[v]; }

  /// Relaxed lower bound on the cost below a mapped pair, ignoring ancestry
  /// conflicts between sibling choices.
  double relaxed_bound(int a, int b) const { return relaxed_[index(a, b)]; }

  /// Best known lower bound on the cost below a mapped pair.
  double pair_lower_bound(int a, int b) const {
    if (is_trivial(a, b)) return trivial_cost(a, b);
    const auto& m = memo_[index(a, b)];
    return std::max(relaxed_[index(a, b)], m.lower_bound);
  }

  /// Solves the subproblem below the pair (a, b). Only values up to `cutoff`
  /// are of interest: if the result is above it, only the lower bound is
  /// guaranteed to be tight enough to prove that.
  Outcome solve_pair(int a, int b, double cutoff, Budget& budget);

  /// Distance between the two trees with the roots paired.
  Outcome solve(double cutoff, Budget& budget) {
    return solve_pair(side1_.tree.root(), side2_.tree.root(), cutoff, budget);
  }

  /// Offers a known mapping of value `value` as incumbent for the root pair.
  void offer_incumbent(const EditMapping& mapping);

  /// Mapping realizing the best upper bound found below (a, b), pair included.
  EditMapping best_mapping(int a, int b) const {
    EditMapping m;
    collect(a, b, m.pairs);
    m.normalize();
    return m;
  }
  EditMapping best_mapping() const { return best_mapping(side1_.tree.root(), side2_.tree.root()); }

 private:
  struct Side {
    MergeTree tree;
    PathIndex paths;
    std::vector<double> sub;  // persistence strictly below each node
    std::vector<int> order;   // preorder

    explicit Side(MergeTree t) : tree(std::move(t)), paths(tree), sub(tree.size(), 0.0), order(tree.preorder()) {
      for (auto it = order.rbegin(); it != order.rend(); ++it)
        if (!tree.is_root(*it)) sub[tree.parent(*it)] += sub[*it] + tree.up_length(*it);
    }
    double f(int v) const { return tree.scalar(v); }
    double unc(int v) const { return tree.up_length(v) + sub[v]; }
    double material(int node, int top) const { return f(node) - f(top) + sub[node]; }
    // Nodes of the subtree of v in preorder, v first.
    auto subtree(int v) const {
      const int s = tree.preorder_index(v);
      return std::pair{order.begin() + s, order.begin() + s + tree.subtree_size(v)};
    }
  };

  struct Memo {
    double lower_bound = 0.0;
    double upper_bound = kInfinity;
    bool exact = false;
    std::vector<std::pair<int, int>> pairs;
  };

  struct Item {
    int node;
    int top;
    int group;
    bool optional;
    bool credited;
  };

  struct Group {
    int required;
    int nonempty;
    int open;
  };

  struct State {
    std::vector<Item> items1;  // sorted by preorder of node
    std::vector<Item> items2;
    std::vector<Group> groups;
    std::vector<std::pair<int, int>> pairs;
    double committed_lb = 0.0;
    double committed_ub = 0.0;
    double bound = 0.0;
    int pending_a = -1;  // pair whose subproblem is only bounded so far
    int pending_b = -1;
    double pending_lb = 0.0;
  };

  struct KernelTables {
    std::vector<double> excess1;  // by T1 path id
    std::vector<double> excess2;  // by T2 path id
  };

  std::size_t index(int a, int b) const { return static_cast<std::size_t>(a) * n2_ + b; }

  bool is_trivial(int a, int b) const {
    return side1_.tree.degree(a) == 0 || side2_.tree.degree(b) == 0;
  }
  double trivial_cost(int a, int b) const { return side1_.sub[a] + side2_.sub[b]; }

  // Lower bound on the excess of mapping x (T1) onto w (T2) measured on the
  // T2 side: C = (sub1 - sub2) + 2 * excess2 = (sub2 - sub1) + 2 * excess1.
  double excess2_lb(int x, int w) const {
    return std::max(0.0, (pair_lower_bound(x, w) - side1_.sub[x] + side2_.sub[w]) / 2.0);
  }
  double excess1_lb(int w, int y) const {
    return std::max(0.0, (pair_lower_bound(w, y) - side2_.sub[y] + side1_.sub[w]) / 2.0);
  }

  // Fills `excess` for the item paths of `items` below `root_items`, where
  // terminals pair with nodes strictly below `root_partner` on `partner`.
  // Returns the summed excess over the children of `root_items`.
  template <class ExcessLb>
  static double fill_excess(const Side& items, int root_items, const Side& partner, int root_partner,
                            ExcessLb&& excess_lb, std::vector<double>& excess) {
    std::vector<std::pair<double, double>> cands;  // (max pendant, excess lb)
    auto [pb, pe] = partner.subtree(root_partner);
    auto [ib, ie] = items.subtree(root_items);
    const MergeTree& t = items.tree;
    for (auto it = std::make_reverse_iterator(ie); it != std::make_reverse_iterator(ib); ++it) {
      const int w = *it;
      if (w == root_items) continue;
      cands.clear();
      for (auto p = pb + 1; p < pe; ++p)
        cands.emplace_back(partner.f(*p) - partner.f(root_partner), excess_lb(*p, w));
      const auto& kids = t.children(w);
      double unc_sum = 0.0;
      for (int c : kids) unc_sum += items.unc(c);

      double branch_base = 0.0;
      if (!kids.empty()) {
        std::vector<double> extra;
        int taken = 0;
        for (int c : kids) {
          const double ex = excess[items.paths.id(w, c)];
          const double un = items.unc(c);
          if (ex <= un) {
            branch_base += ex;
            ++taken;
          } else {
            branch_base += un;
            extra.push_back(ex - un);
          }
        }
        std::sort(extra.begin(), extra.end());
        for (int k = 0; taken < 2 && k < static_cast<int>(extra.size()); ++k, ++taken) branch_base += extra[k];
        if (taken < 2) branch_base = kInfinity;
      }

      for (int top = t.parent(w);; top = t.parent(top)) {
        const double len = items.f(w) - items.f(top);
        double best = kInfinity;
        for (auto [h, g] : cands) best = std::min(best, std::max(0.0, len - h) + g);
        if (!kids.empty()) {
          for (int c : kids) best = std::min(best, excess[items.paths.id(top, c)] + unc_sum - items.unc(c));
          best = std::min(best, len + branch_base);
        }
        excess[items.paths.id(top, w)] = best;
        if (top == root_items) break;
      }
    }
    double total = 0.0;
    for (int c : t.children(root_items)) total += std::min(excess[items.paths.id(root_items, c)], items.unc(c));
    return total;
  }

  double pair_bound_from_tables(int a, int b, KernelTables& tables) const {
    const double d = side1_.sub[a] - side2_.sub[b];
    const double ex2 = fill_excess(side2_, b, side1_, a, [&](int x, int w) { return excess2_lb(x, w); },
                                   tables.excess2);
    const double ex1 = fill_excess(side1_, a, side2_, b, [&](int y, int w) { return excess1_lb(w, y); },
                                   tables.excess1);
    return std::max({std::abs(d), d + 2.0 * ex2, -d + 2.0 * ex1});
  }

  void compute_relaxed_bounds() {
    KernelTables tables{std::vector<double>(side1_.paths.count(), 0.0),
                        std::vector<double>(side2_.paths.count(), 0.0)};
    for (auto ia = side1_.order.rbegin(); ia != side1_.order.rend(); ++ia)
      for (auto ib = side2_.order.rbegin(); ib != side2_.order.rend(); ++ib) {
        const int a = *ia, b = *ib;
        relaxed_[index(a, b)] = is_trivial(a, b) ? trivial_cost(a, b) : pair_bound_from_tables(a, b, tables);
      }
  }

  bool run_allowed(int top1, int end1, int top2, int end2) const {
    return filter_.test(side1_.paths.id(top1, end1), side2_.paths.id(top2, end2));
  }

  double state_bound(const State& s, const KernelTables& tables) const {
    for (const auto& g : s.groups)
      if (g.nonempty + g.open < g.required) return kInfinity;
    double r1 = 0.0, r2 = 0.0, x1 = 0.0, x2 = 0.0;
    for (const auto& it : s.items1) {
      const double mat = side1_.material(it.node, it.top);
      const double ex = tables.excess1[side1_.paths.id(it.top, it.node)];
      r1 += mat;
      x1 += it.optional ? std::min(ex, mat) : ex;
    }
    for (const auto& it : s.items2) {
      const double mat = side2_.material(it.node, it.top);
      const double ex = tables.excess2[side2_.paths.id(it.top, it.node)];
      r2 += mat;
      x2 += it.optional ? std::min(ex, mat) : ex;
    }
    return s.committed_lb + std::max({std::abs(r1 - r2), r1 - r2 + 2.0 * x2, r2 - r1 + 2.0 * x1});
  }

  static void credit(State& s, Item& it) {
    if (it.credited) return;
    it.credited = true;
    auto& g = s.groups[it.group];
    ++g.nonempty;
    --g.open;
  }

  void insert_item1(State& s, Item it) const {
    const int key = side1_.tree.preorder_index(it.node);
    auto pos = std::find_if(s.items1.begin(), s.items1.end(),
                            [&](const Item& o) { return side1_.tree.preorder_index(o.node) > key; });
    s.items1.insert(pos, it);
  }

  void expand(const State& s, std::vector<State>& out) const;
  Outcome search_pair(int a, int b, double cutoff, Budget& budget);
  void collect(int a, int b, std::vector<std::pair<int, int>>& pairs) const {
    pairs.emplace_back(a, b);
    if (is_trivial(a, b)) return;
    for (auto [x, y] : memo_[index(a, b)].pairs) collect(x, y, pairs);
  }

  Side side1_;
  Side side2_;
  PathPairFilter filter_;
  int n1_ = 0;
  int n2_ = 0;
  std::vector<Memo> memo_;
  std::vector<double> relaxed_;
};

inline void MappingSearch::expand(const State& s, std::vector<State>& out) const {
  const MergeTree& t1 = side1_.tree;
  const MergeTree& t2 = side2_.tree;
  const Item item = s.items1.front();
  const int w = item.node;

  auto base = [&]() {
    State c = s;
    c.items1.erase(c.items1.begin());
    return c;
  };

  // The item holds no mapped node.
  if (item.optional) {
    State c = base();
    --c.groups[item.group].open;
    const double mat = side1_.material(w, item.top);
    c.committed_lb += mat;
    c.committed_ub += mat;
    out.push_back(std::move(c));
  }

  // w is mapped to some y inside a T2 item.
  const double len1 = side1_.f(w) - side1_.f(item.top);
  for (std::size_t k = 0; k < s.items2.size(); ++k) {
    const Item host = s.items2[k];
    auto [yb, ye] = side2_.subtree(host.node);
    for (auto yi = yb; yi != ye; ++yi) {
      const int y = *yi;
      std::vector<int> path;  // host.node .. parent(y)
      for (int z = y; z != host.node;) {
        z = t2.parent(z);
        path.push_back(z);
      }
      std::reverse(path.begin(), path.end());
      const int steps = static_cast<int>(path.size());
      for (std::uint32_t mask = 0; mask < (1U << steps); ++mask) {
        State c = base();
        Item used1 = item;
        credit(c, used1);
        Item used2 = host;
        c.items2.erase(c.items2.begin() + static_cast<std::ptrdiff_t>(k));
        credit(c, used2);
        int top = host.top;
        double extra = 0.0;
        for (int i = 0; i < steps; ++i) {
          const int z = path[i];
          const int next = i + 1 < steps ? path[i + 1] : y;
          if (mask & (1U << i)) {
            extra += side2_.f(z) - side2_.f(top);
            const int gid = static_cast<int>(c.groups.size());
            c.groups.push_back(Group{2, 1, t2.degree(z) - 1});
            for (int ch : t2.children(z))
              if (ch != next) c.items2.push_back(Item{ch, z, gid, true, false});
            top = z;
          } else {
            for (int ch : t2.children(z))
              if (ch != next) extra += side2_.unc(ch);
          }
        }
        const double len2 = side2_.f(y) - side2_.f(top);
        extra += run_allowed(item.top, w, top, y) ? std::abs(len1 - len2) : len1 + len2;
        c.committed_lb += extra;
        c.committed_ub += extra;
        c.pairs.emplace_back(w, y);
        if (is_trivial(w, y)) {
          c.committed_lb += trivial_cost(w, y);
          c.committed_ub += trivial_cost(w, y);
        } else {
          c.pending_a = w;
          c.pending_b = y;
          c.pending_lb = pair_lower_bound(w, y);
          c.committed_lb += c.pending_lb;
        }
        out.push_back(std::move(c));
      }
    }
  }

  if (t1.degree(w) == 0) return;

  // w is pruned: exactly one child subtree keeps mapped nodes.
  double unc_sum = 0.0;
  for (int ch : t1.children(w)) unc_sum += side1_.unc(ch);
  for (int ch : t1.children(w)) {
    State c = base();
    Item cont = item;
    credit(c, cont);
    cont.node = ch;
    cont.optional = false;
    const double cost = unc_sum - side1_.unc(ch);
    c.committed_lb += cost;
    c.committed_ub += cost;
    insert_item1(c, cont);
    out.push_back(std::move(c));
  }

  // w is deleted with at least two surviving child subtrees.
  {
    State c = base();
    Item used = item;
    credit(c, used);
    c.committed_lb += len1;
    c.committed_ub += len1;
    const int gid = static_cast<int>(c.groups.size());
    c.groups.push_back(Group{2, 0, t1.degree(w)});
    for (int ch : t1.children(w)) insert_item1(c, Item{ch, w, gid, true, false});
    out.push_back(std::move(c));
  }
}

inline MappingSearch::Outcome MappingSearch::solve_pair(int a, int b, double cutoff, Budget& budget) {
  if (is_trivial(a, b)) {
    const double v = trivial_cost(a, b);
    return Outcome{v, v, true};
  }
  Memo& m = memo_[index(a, b)];
  if (m.exact) return Outcome{m.upper_bound, m.upper_bound, true};
  const double lb = pair_lower_bound(a, b);
  if (lb > cutoff + kTolerance || budget.exhausted()) return Outcome{lb, m.upper_bound, false};
  return search_pair(a, b, cutoff, budget);
}

inline MappingSearch::Outcome MappingSearch::search_pair(int a, int b, double cutoff, Budget& budget) {
  KernelTables tables{std::vector<double>(side1_.paths.count(), 0.0),
                      std::vector<double>(side2_.paths.count(), 0.0)};
  pair_bound_from_tables(a, b, tables);

  double incumbent = memo_[index(a, b)].upper_bound;
  std::vector<std::pair<int, int>> incumbent_pairs = memo_[index(a, b)].pairs;
  double proven = kInfinity;  // min over closed-off parts of the search space

  auto limit = [&]() { return std::min(cutoff + kTolerance, incumbent - kTolerance); };

  State root;
  root.groups.push_back(Group{0, 0, 0});
  for (int c : side1_.tree.children(a)) {
    insert_item1(root, Item{c, a, 0, true, false});
    ++root.groups[0].open;
  }
  for (int c : side2_.tree.children(b)) {
    root.items2.push_back(Item{c, b, 0, true, false});
    ++root.groups[0].open;
  }
  root.bound = state_bound(root, tables);

  std::vector<State> stack;
  stack.push_back(std::move(root));
  std::vector<State> children;
  std::vector<int> order;

  while (!stack.empty()) {
    State s = std::move(stack.back());
    stack.pop_back();
    if (s.bound > limit()) {
      proven = std::min(proven, s.bound);
      continue;
    }
    if (!budget.tick()) {
      proven = std::min(proven, s.bound);
      for (const auto& rest : stack) proven = std::min(proven, rest.bound);
      stack.clear();
      break;
    }
    if (s.pending_a >= 0) {
      const double others = s.bound - s.pending_lb;
      const Outcome sub = solve_pair(s.pending_a, s.pending_b, limit() - others, budget);
      s.committed_lb += sub.lower_bound - s.pending_lb;
      s.bound = others + sub.lower_bound;
      s.committed_ub += sub.upper_bound;
      s.pending_a = s.pending_b = -1;
      if (s.bound > limit() || !(sub.upper_bound < kInfinity)) {
        proven = std::min(proven, s.bound);
        continue;
      }
    }
    if (s.items1.empty()) {
      bool ok = true;
      double rest = 0.0;
      for (const auto& it : s.items2) {
        if (!it.optional) ok = false;
        rest += side2_.material(it.node, it.top);
      }
      for (const auto& g : s.groups)
        if (g.nonempty < g.required) ok = false;
      if (!ok) continue;
      proven = std::min(proven, s.committed_lb + rest);
      const double value = s.committed_ub + rest;
      if (value < incumbent - kTolerance) {
        incumbent = value;
        incumbent_pairs = s.pairs;
      }
      continue;
    }
    children.clear();
    expand(s, children);
    order.resize(children.size());
    for (std::size_t i = 0; i < children.size(); ++i) {
      children[i].bound = state_bound(children[i], tables);
      order[i] = static_cast<int>(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return children[x].bound < children[y].bound; });
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      State& c = children[*it];
      if (c.bound > limit()) {
        proven = std::min(proven, c.bound);
        continue;
      }
      stack.push_back(std::move(c));
    }
  }

  Memo& m = memo_[index(a, b)];
  if (incumbent < m.upper_bound) {
    m.upper_bound = incumbent;
    m.pairs = incumbent_pairs;
  }
  m.lower_bound = std::max({m.lower_bound, std::min(proven, m.upper_bound), relaxed_[index(a, b)]});
  if (m.lower_bound >= m.upper_bound - kTolerance) {
    m.exact = true;
    m.lower_bound = m.upper_bound;
  }
  return Outcome{m.lower_bound, m.upper_bound, m.exact};
}

inline void MappingSearch::offer_incumbent(const EditMapping& mapping) {
  // Walk the mapping top-down and record, for every mapped pair, the pairs
  // directly below it together with the induced cost.
  const MergeTree& t1 = side1_.tree;
  const MergeTree& t2 = side2_.tree;
  std::vector<int> partner(t1.size(), -1);
  for (auto [x, y] : mapping.pairs) partner[x] = y;
  const MappingCostBreakdown cost = detail::mapping_cost_unchecked(
      t1, t2, mapping, side1_.sub[t1.root()], side2_.sub[t2.root()]);

  // Process pairs bottom-up so that children are recorded before parents.
  std::vector<int> nodes;
  for (auto it = side1_.order.rbegin(); it != side1_.order.rend(); ++it)
    if (partner[*it] >= 0) nodes.push_back(*it);
  for (int a : nodes) {
    const int b = partner[a];
    if (is_trivial(a, b)) continue;
    std::vector<std::pair<int, int>> below;
    double kept1 = 0.0, kept2 = 0.0, value = 0.0;
    for (auto [x, y] : mapping.pairs) {
      if (!t1.is_ancestor(a, x)) continue;
      int u = t1.parent(x);
      while (u != a && partner[u] < 0) u = t1.parent(u);
      if (u != a) continue;
      below.emplace_back(x, y);
      const int top1 = cost.run_top_t1[x], top2 = cost.run_top_t2[y];
      const double l1 = cost.run_t1[x], l2 = cost.run_t2[y];
      value += run_allowed(top1, x, top2, y) ? std::abs(l1 - l2) : l1 + l2;
      value += is_trivial(x, y) ? trivial_cost(x, y) : memo_[index(x, y)].upper_bound;
      kept1 += l1 + side1_.sub[x];
      kept2 += l2 + side2_.sub[y];
    }
    value += side1_.sub[a] - kept1 + side2_.sub[b] - kept2;
    Memo& m = memo_[index(a, b)];
    if (value < m.upper_bound - kTolerance) {
      m.upper_bound = value;
      m.pairs = std::move(below);
      if (m.lower_bound >= m.upper_bound - kTolerance) {
        m.exact = true;
        m.lower_bound = m.upper_bound;
      }
    }
  }
}

}  // namespace mtdist
