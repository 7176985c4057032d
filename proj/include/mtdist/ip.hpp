#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "edit_model.hpp"
#include "kernel_search.hpp"
#include "merge_tree.hpp"

namespace mtdist {

enum class VarRole { m, d, dhat, dbar, p, pm, aux };

inline const char* to_string(VarRole r) {
  switch (r) {
    case VarRole::m: return "m";
    case VarRole::d: return "d";
    case VarRole::dhat: return "dhat";
    case VarRole::dbar: return "dbar";
    case VarRole::p: return "p";
    case VarRole::pm: return "pm";
    case VarRole::aux: return "aux";
  }
  return "?";
}

/// A 0/1 variable. Meaning of the fields by role:
///   m: a = T1 node, b = T2 node
///   d, dhat, dbar, aux: side (1|2), a = node
///   p: side, a = run top, b = run end
///   pm: a = T1 path id, b = T2 path id
struct Variable {
  VarRole role;
  int side = 0;
  int a = -1;
  int b = -1;
};

enum class Sense { le, ge, eq };

enum class RowKind {
  root_pair,
  assign,
  dhat_le_d,
  dhat_le_child,
  dhat_ge,
  survivors_ge,
  survivors_le,
  dbar_le_d,
  dbar_le_aux,
  dbar_le_dhat,
  dbar_ge,
  p_end,
  p_mid,
  p_top,
  p_ge,
  pm_m,
  pm_p1,
  pm_p2,
  exclusion,
};

struct RowTag {
  RowKind kind;
  int side = 0;
  int a = -1;
  int b = -1;
  int c = -1;
};

struct Term {
  int var;
  double coef;
};

struct EncodeConfig {
  bool enable_leaf_symmetry = true;
  bool enable_root_symmetry = true;
  bool enable_pruning = true;
  double initial_time_limit = 10.0;  // seconds per first iteration
  double backoff_factor = 2.0;
  double total_budget = 3600.0;  // seconds for the whole loop
  bool deterministic_budget_mode = false;
  long long initial_node_budget = 200000;  // used instead of time in deterministic mode
  long long total_node_budget = 50000000;
  double recursion_time_limit = 0.25;  // per recursive subtree bound
  long long recursion_node_budget = 2000;

  void validate() const {
    if (!(initial_time_limit > 0.0) || !(total_budget > 0.0) || !(recursion_time_limit > 0.0))
      throw std::invalid_argument("encode config: time limits must be positive");
    if (initial_node_budget <= 0 || total_node_budget <= 0 || recursion_node_budget <= 0)
      throw std::invalid_argument("encode config: node budgets must be positive");
    if (!(backoff_factor >= 1.0)) throw std::invalid_argument("encode config: backoff factor must be >= 1");
  }

  SearchLimits recursion_limits() const {
    SearchLimits l;
    if (deterministic_budget_mode)
      l.node_budget = recursion_node_budget;
    else
      l.time_limit = recursion_time_limit;
    return l;
  }
};

/// Lower-bound components for activating one run pair.
struct PruningBounds {
  double path_cost = 0.0;
  double forced_prune_deletions = 0.0;
  double subtree_bound = 0.0;
  double complement_bound = 0.0;

  double sum() const { return path_cost + forced_prune_deletions + subtree_bound + complement_bound; }
};

/// State shared by the bound computations of one tree pair: the subtree
/// solver keeps its memo across calls and reencoding iterations.
class PruningContext {
 public:
  PruningContext(const MergeTree& t1, const MergeTree& t2, EncodeConfig config)
      : config_(config), solver_(MappingSearch::unrestricted(t1, t2, false, false)) {
    total1_ = solver_.subtree_persistence1(t1.root());
    total2_ = solver_.subtree_persistence2(t2.root());
  }

  const MappingSearch& solver() const { return solver_; }

  /// Bounds for the run pair (top1 -> end1, top2 -> end2). The recursive
  /// subtree solve only runs when the cheap components do not already
  /// exceed `upper_bound`.
  PruningBounds compute(int top1, int end1, int top2, int end2, std::optional<double> upper_bound) {
    const MergeTree& t1 = solver_.tree1();
    const MergeTree& t2 = solver_.tree2();
    PruningBounds pb;
    const double len1 = t1.scalar(end1) - t1.scalar(top1);
    const double len2 = t2.scalar(end2) - t2.scalar(top2);
    pb.path_cost = std::abs(len1 - len2);
    const double forced1 = hanging(t1, top1, end1, 1);
    const double forced2 = hanging(t2, top2, end2, 2);
    pb.forced_prune_deletions = forced1 + forced2;
    const double sub1 = solver_.subtree_persistence1(end1);
    const double sub2 = solver_.subtree_persistence2(end2);
    pb.subtree_bound = std::max(std::abs(sub1 - sub2), solver_.pair_lower_bound(end1, end2));
    const double rest1 = total1_ - sub1 - len1 - forced1;
    const double rest2 = total2_ - sub2 - len2 - forced2;
    pb.complement_bound = std::abs(rest1 - rest2);
    if (upper_bound && pb.sum() <= *upper_bound + kTolerance) {
      Budget budget(config_.recursion_limits());
      const double others = pb.sum() - pb.subtree_bound;
      auto out = solver_.solve_pair(end1, end2, *upper_bound - others, budget);
      pb.subtree_bound = std::max(pb.subtree_bound, out.lower_bound);
    }
    return pb;
  }

 private:
  double hanging(const MergeTree& t, int top, int end, int side) const {
    double sum = 0.0;
    int below = end;
    for (int w = t.parent(end); w != top; below = w, w = t.parent(w))
      for (int c : t.children(w))
        if (c != below)
          sum += side == 1 ? t.up_length(c) + solver_.subtree_persistence1(c)
                           : t.up_length(c) + solver_.subtree_persistence2(c);
    return sum;
  }

  EncodeConfig config_;
  MappingSearch solver_;
  double total1_ = 0.0;
  double total2_ = 0.0;
};

inline PruningBounds compute_pruning_bounds(const MergeTree& t1, const MergeTree& t2, int top1, int end1,
                                            int top2, int end2, const EncodeConfig& config,
                                            std::optional<double> upper_bound = std::nullopt) {
  PruningContext ctx(t1, t2, config);
  return ctx.compute(top1, end1, top2, end2, upper_bound);
}

/// 0/1 program whose optimum is the edit distance. Ancestry exclusion rows
/// between m variables are implicit and enumerated on demand.
class IpInstance {
 public:
  MergeTree tree1;
  MergeTree tree2;
  PathIndex paths1;
  PathIndex paths2;
  std::vector<Variable> variables;
  std::vector<double> objective;
  double objective_constant = 0.0;
  std::optional<double> upper_bound;

  std::size_t variable_count() const { return variables.size(); }

  std::size_t count(VarRole role) const {
    return static_cast<std::size_t>(std::count_if(variables.begin(), variables.end(),
                                                  [&](const Variable& v) { return v.role == role; }));
  }

  int m_var(int u, int v) const { return m_index_[static_cast<std::size_t>(u) * tree2.size() + v]; }

  std::size_t explicit_row_count() const { return tags_.size(); }

  std::size_t exclusion_row_count() const {
    std::size_t n = 0;
    for_each_exclusion([&](int, int) { ++n; });
    return n;
  }

  std::size_t constraint_count() const { return explicit_row_count() + exclusion_row_count(); }

  /// Calls f(tag, terms, sense, rhs) for every constraint, explicit rows
  /// first, then exclusions ordered by their first and second m variable.
  template <class F>
  void for_each_constraint(F&& f) const {
    for (std::size_t r = 0; r < tags_.size(); ++r) {
      const std::vector<Term> terms(terms_.begin() + row_start_[r], terms_.begin() + row_start_[r + 1]);
      f(tags_[r], terms, senses_[r], rhs_[r]);
    }
    std::vector<Term> pair(2);
    for_each_exclusion([&](int i, int j) {
      pair[0] = Term{i, 1.0};
      pair[1] = Term{j, 1.0};
      f(RowTag{RowKind::exclusion, 0, i, j}, pair, Sense::le, 1.0);
    });
  }

  std::string variable_name(int var) const {
    const Variable& v = variables[var];
    auto s = [](int x) { return std::to_string(x); };
    switch (v.role) {
      case VarRole::m: return "m_" + s(v.a) + "_" + s(v.b);
      case VarRole::d: return "d" + s(v.side) + "_" + s(v.a);
      case VarRole::dhat: return "dhat" + s(v.side) + "_" + s(v.a);
      case VarRole::dbar: return "dbar" + s(v.side) + "_" + s(v.a);
      case VarRole::aux: return "multi" + s(v.side) + "_" + s(v.a);
      case VarRole::p: return "p" + s(v.side) + "_" + s(v.a) + "_" + s(v.b);
      case VarRole::pm:
        return "pm_" + s(paths1.top(v.a)) + "_" + s(paths1.end(v.a)) + "_" + s(paths2.top(v.b)) + "_" +
               s(paths2.end(v.b));
    }
    return "?";
  }

  std::string row_name(const RowTag& t) const {
    auto s = [](int x) { return std::to_string(x); };
    const std::string side = s(t.side);
    switch (t.kind) {
      case RowKind::root_pair: return "root_pair";
      case RowKind::assign: return "assign" + side + "_" + s(t.a);
      case RowKind::dhat_le_d: return "dhat_le_d" + side + "_" + s(t.a);
      case RowKind::dhat_le_child: return "dhat_le_child" + side + "_" + s(t.a) + "_" + s(t.b);
      case RowKind::dhat_ge: return "dhat_ge" + side + "_" + s(t.a);
      case RowKind::survivors_ge: return "survivors_ge" + side + "_" + s(t.a);
      case RowKind::survivors_le: return "survivors_le" + side + "_" + s(t.a);
      case RowKind::dbar_le_d: return "dbar_le_d" + side + "_" + s(t.a);
      case RowKind::dbar_le_aux: return "dbar_le_multi" + side + "_" + s(t.a);
      case RowKind::dbar_le_dhat: return "dbar_le_dhat" + side + "_" + s(t.a);
      case RowKind::dbar_ge: return "dbar_ge" + side + "_" + s(t.a);
      case RowKind::p_end: return "p_end" + side + "_" + s(t.a) + "_" + s(t.b);
      case RowKind::p_mid: return "p_mid" + side + "_" + s(t.a) + "_" + s(t.b) + "_" + s(t.c);
      case RowKind::p_top: return "p_top" + side + "_" + s(t.a) + "_" + s(t.b);
      case RowKind::p_ge: return "p_ge" + side + "_" + s(t.a) + "_" + s(t.b);
      case RowKind::pm_m: return "pm_m_" + variable_name(t.a).substr(3);
      case RowKind::pm_p1: return "pm_p1_" + variable_name(t.a).substr(3);
      case RowKind::pm_p2: return "pm_p2_" + variable_name(t.a).substr(3);
      case RowKind::exclusion: return "excl_" + variable_name(t.a) + "_" + variable_name(t.b);
    }
    return "?";
  }

  /// Variable id by readable name, or -1.
  int find_variable(const std::string& name) const {
    if (name_index_.empty())
      for (int i = 0; i < static_cast<int>(variables.size()); ++i) name_index_.emplace(variable_name(i), i);
    auto it = name_index_.find(name);
    return it == name_index_.end() ? -1 : it->second;
  }

 private:
  friend class InstanceBuilder;

  template <class F>
  void for_each_exclusion(F&& f) const {
    for (std::size_t i = 0; i < m_vars_.size(); ++i) {
      const auto& vi = variables[m_vars_[i]];
      for (std::size_t j = i + 1; j < m_vars_.size(); ++j) {
        const auto& vj = variables[m_vars_[j]];
        if (vi.a == vj.a || vi.b == vj.b) continue;
        if (tree1.is_ancestor(vi.a, vj.a) != tree2.is_ancestor(vi.b, vj.b) ||
            tree1.is_ancestor(vj.a, vi.a) != tree2.is_ancestor(vj.b, vi.b))
          f(m_vars_[i], m_vars_[j]);
      }
    }
  }

  std::vector<int> m_index_;
  std::vector<int> m_vars_;
  std::vector<RowTag> tags_;
  std::vector<std::size_t> row_start_{0};
  std::vector<Term> terms_;
  std::vector<Sense> senses_;
  std::vector<double> rhs_;
  mutable std::unordered_map<std::string, int> name_index_;
};

class InstanceBuilder {
 public:
  explicit InstanceBuilder(IpInstance& ip) : ip_(ip) {}

  int add_var(Variable v, double cost = 0.0) {
    ip_.variables.push_back(v);
    ip_.objective.push_back(cost);
    return static_cast<int>(ip_.variables.size()) - 1;
  }

  void add_row(RowTag tag, std::vector<Term> terms, Sense sense, double rhs) {
    ip_.tags_.push_back(tag);
    ip_.terms_.insert(ip_.terms_.end(), terms.begin(), terms.end());
    ip_.row_start_.push_back(ip_.terms_.size());
    ip_.senses_.push_back(sense);
    ip_.rhs_.push_back(rhs);
  }

  void set_m_index(std::vector<int> index, std::vector<int> m_vars) {
    ip_.m_index_ = std::move(index);
    ip_.m_vars_ = std::move(m_vars);
  }

 private:
  IpInstance& ip_;
};

/// Builds the program. With `upper_bound` and pruning enabled, run pairs
/// whose bound sum exceeds it are left out; `context` may be shared across
/// calls to reuse subtree solves.
inline IpInstance encode(const MergeTree& t1, const MergeTree& t2, const EncodeConfig& config,
                         std::optional<double> upper_bound = std::nullopt, PruningContext* context = nullptr) {
  require_valid(t1, "T1");
  require_valid(t2, "T2");
  config.validate();
  IpInstance ip;
  ip.tree1 = t1;
  ip.tree2 = t2;
  ip.paths1 = PathIndex(t1);
  ip.paths2 = PathIndex(t2);
  ip.upper_bound = upper_bound;
  InstanceBuilder build(ip);
  const int n1 = t1.size(), n2 = t2.size();
  const PathIndex& p1 = ip.paths1;
  const PathIndex& p2 = ip.paths2;

  // Run pairs that survive symmetry reductions and pruning.
  std::optional<PruningContext> own_context;
  const bool prune = config.enable_pruning && upper_bound.has_value();
  if (prune && context == nullptr) context = &own_context.emplace(t1, t2, config);
  std::vector<std::pair<int, int>> pm_pairs;
  for (int i = 0; i < p1.count(); ++i)
    for (int j = 0; j < p2.count(); ++j) {
      if (!kept_by_symmetry(t1, t2, p1.top(i), p1.end(i), p2.top(j), p2.end(j), config.enable_leaf_symmetry,
                            config.enable_root_symmetry))
        continue;
      if (prune) {
        const auto pb = context->compute(p1.top(i), p1.end(i), p2.top(j), p2.end(j), upper_bound);
        if (pb.sum() > *upper_bound + kTolerance) continue;
      }
      pm_pairs.emplace_back(i, j);
    }

  std::vector<char> used_p1(p1.count(), 0), used_p2(p2.count(), 0);
  for (auto [i, j] : pm_pairs) used_p1[i] = used_p2[j] = 1;
  auto needed_dbar = [](const MergeTree& t, const PathIndex& p, const std::vector<char>& used) {
    std::vector<char> need(t.size(), 0);
    for (int k = 0; k < p.count(); ++k) {
      if (!used[k]) continue;
      for (int w = t.parent(p.end(k)); w != p.top(k); w = t.parent(w)) need[w] = 1;
      if (!t.is_root(p.top(k))) need[p.top(k)] = 1;
    }
    return need;
  };
  const auto need_db1 = needed_dbar(t1, p1, used_p1);
  const auto need_db2 = needed_dbar(t2, p2, used_p2);

  // Variables, grouped by role.
  std::vector<int> m_index(static_cast<std::size_t>(n1) * n2, -1), m_vars;
  for (int u = 0; u < n1; ++u)
    for (int v = 0; v < n2; ++v)
      if (t1.is_root(u) == t2.is_root(v)) {
        m_index[static_cast<std::size_t>(u) * n2 + v] = build.add_var({VarRole::m, 0, u, v});
        m_vars.push_back(m_index[static_cast<std::size_t>(u) * n2 + v]);
      }
  std::vector<int> d1(n1), d2(n2);
  for (int v = 0; v < n1; ++v) d1[v] = build.add_var({VarRole::d, 1, v});
  for (int v = 0; v < n2; ++v) d2[v] = build.add_var({VarRole::d, 2, v});
  std::vector<int> dh1(n1, -1), dh2(n2, -1);
  for (int v = 0; v < n1; ++v)
    if (!t1.is_root(v)) dh1[v] = build.add_var({VarRole::dhat, 1, v});
  for (int v = 0; v < n2; ++v)
    if (!t2.is_root(v)) dh2[v] = build.add_var({VarRole::dhat, 2, v});
  std::vector<int> db1(n1, -1), db2(n2, -1);
  for (int v = 0; v < n1; ++v)
    if (need_db1[v]) db1[v] = build.add_var({VarRole::dbar, 1, v});
  for (int v = 0; v < n2; ++v)
    if (need_db2[v]) db2[v] = build.add_var({VarRole::dbar, 2, v});
  std::vector<int> pv1(p1.count(), -1), pv2(p2.count(), -1);
  for (int k = 0; k < p1.count(); ++k)
    if (used_p1[k]) pv1[k] = build.add_var({VarRole::p, 1, p1.top(k), p1.end(k)});
  for (int k = 0; k < p2.count(); ++k)
    if (used_p2[k]) pv2[k] = build.add_var({VarRole::p, 2, p2.top(k), p2.end(k)});
  std::vector<int> pm_vars;
  for (auto [i, j] : pm_pairs) {
    const double l1 = t1.scalar(p1.end(i)) - t1.scalar(p1.top(i));
    const double l2 = t2.scalar(p2.end(j)) - t2.scalar(p2.top(j));
    pm_vars.push_back(build.add_var({VarRole::pm, 0, i, j}, -2.0 * std::min(l1, l2)));
  }
  std::vector<int> g1(n1, -1), g2(n2, -1);
  for (int v = 0; v < n1; ++v)
    if (need_db1[v]) g1[v] = build.add_var({VarRole::aux, 1, v});
  for (int v = 0; v < n2; ++v)
    if (need_db2[v]) g2[v] = build.add_var({VarRole::aux, 2, v});
  ip.objective_constant = total_persistence(t1) + total_persistence(t2);

  // Rows.
  build.add_row({RowKind::root_pair}, {{m_index[static_cast<std::size_t>(t1.root()) * n2 + t2.root()], 1.0}},
                Sense::eq, 1.0);
  for (int v = 0; v < n1; ++v) {
    std::vector<Term> row{{d1[v], 1.0}};
    for (int y = 0; y < n2; ++y)
      if (int k = m_index[static_cast<std::size_t>(v) * n2 + y]; k >= 0) row.push_back({k, 1.0});
    build.add_row({RowKind::assign, 1, v}, row, Sense::eq, 1.0);
  }
  for (int v = 0; v < n2; ++v) {
    std::vector<Term> row{{d2[v], 1.0}};
    for (int x = 0; x < n1; ++x)
      if (int k = m_index[static_cast<std::size_t>(x) * n2 + v]; k >= 0) row.push_back({k, 1.0});
    build.add_row({RowKind::assign, 2, v}, row, Sense::eq, 1.0);
  }

  auto side_rows = [&](int side, const MergeTree& t, const PathIndex& p, const std::vector<int>& d,
                       const std::vector<int>& dh, const std::vector<int>& db, const std::vector<int>& g,
                       const std::vector<int>& pv) {
    for (int v = 0; v < t.size(); ++v) {
      if (dh[v] < 0) continue;
      build.add_row({RowKind::dhat_le_d, side, v}, {{dh[v], 1.0}, {d[v], -1.0}}, Sense::le, 0.0);
      std::vector<Term> ge{{dh[v], 1.0}, {d[v], -1.0}};
      for (int c : t.children(v)) {
        build.add_row({RowKind::dhat_le_child, side, v, c}, {{dh[v], 1.0}, {dh[c], -1.0}}, Sense::le, 0.0);
        ge.push_back({dh[c], -1.0});
      }
      build.add_row({RowKind::dhat_ge, side, v}, ge, Sense::ge, -static_cast<double>(t.degree(v)));
    }
    for (int v = 0; v < t.size(); ++v) {
      if (g[v] < 0) continue;
      const double deg = t.degree(v);
      std::vector<Term> ge, le;
      for (int c : t.children(v)) {
        ge.push_back({dh[c], -1.0});
        le.push_back({dh[c], -1.0});
      }
      ge.push_back({g[v], -2.0});
      le.push_back({g[v], -(deg - 1.0)});
      build.add_row({RowKind::survivors_ge, side, v}, ge, Sense::ge, -deg);
      build.add_row({RowKind::survivors_le, side, v}, le, Sense::le, 1.0 - deg);
    }
    for (int v = 0; v < t.size(); ++v) {
      if (db[v] < 0) continue;
      build.add_row({RowKind::dbar_le_d, side, v}, {{db[v], 1.0}, {d[v], -1.0}}, Sense::le, 0.0);
      build.add_row({RowKind::dbar_le_aux, side, v}, {{db[v], 1.0}, {g[v], 1.0}}, Sense::le, 1.0);
      build.add_row({RowKind::dbar_le_dhat, side, v}, {{db[v], 1.0}, {dh[v], 1.0}}, Sense::le, 1.0);
      build.add_row({RowKind::dbar_ge, side, v}, {{db[v], 1.0}, {d[v], -1.0}, {g[v], 1.0}, {dh[v], 1.0}},
                    Sense::ge, 0.0);
    }
    for (int k = 0; k < p.count(); ++k) {
      if (pv[k] < 0) continue;
      const int top = p.top(k), end = p.end(k);
      build.add_row({RowKind::p_end, side, top, end}, {{pv[k], 1.0}, {d[end], 1.0}}, Sense::le, 1.0);
      std::vector<Term> ge{{pv[k], 1.0}, {d[end], 1.0}};
      int between = 0;
      for (int w = t.parent(end); w != top; w = t.parent(w)) {
        build.add_row({RowKind::p_mid, side, top, end, w}, {{pv[k], 1.0}, {db[w], -1.0}}, Sense::le, 0.0);
        ge.push_back({db[w], -1.0});
        ++between;
      }
      if (!t.is_root(top)) {
        build.add_row({RowKind::p_top, side, top, end}, {{pv[k], 1.0}, {db[top], 1.0}}, Sense::le, 1.0);
        ge.push_back({db[top], 1.0});
      }
      build.add_row({RowKind::p_ge, side, top, end}, ge, Sense::ge, 1.0 - between);
    }
  };
  side_rows(1, t1, p1, d1, dh1, db1, g1, pv1);
  side_rows(2, t2, p2, d2, dh2, db2, g2, pv2);

  for (std::size_t k = 0; k < pm_pairs.size(); ++k) {
    auto [i, j] = pm_pairs[k];
    const int pm = pm_vars[k];
    const int mv = m_index[static_cast<std::size_t>(p1.end(i)) * n2 + p2.end(j)];
    build.add_row({RowKind::pm_m, 0, pm}, {{pm, 1.0}, {mv, -1.0}}, Sense::le, 0.0);
    build.add_row({RowKind::pm_p1, 0, pm}, {{pm, 1.0}, {pv1[i], -1.0}}, Sense::le, 0.0);
    build.add_row({RowKind::pm_p2, 0, pm}, {{pm, 1.0}, {pv2[j], -1.0}}, Sense::le, 0.0);
  }
  build.set_m_index(std::move(m_index), std::move(m_vars));
  return ip;
}

/// Value of every variable implied by a mapping; pm is 1 exactly for the
/// run pairs of mapped pairs that the instance contains.
inline std::vector<double> assignment_from_mapping(const IpInstance& ip, const EditMapping& mapping) {
  const MergeTree& t1 = ip.tree1;
  const MergeTree& t2 = ip.tree2;
  const auto cost = mapping_cost(t1, t2, mapping);
  std::vector<int> partner1(t1.size(), -1);
  std::vector<char> mapped1(t1.size(), 0), mapped2(t2.size(), 0);
  for (auto [a, b] : mapping.pairs) {
    partner1[a] = b;
    mapped1[a] = mapped2[b] = 1;
  }
  auto dhat = [](const MergeTree& t, const std::vector<char>& mapped) {
    std::vector<char> out(t.size(), 1);
    for (auto it = t.preorder().rbegin(); it != t.preorder().rend(); ++it) {
      const int v = *it;
      bool all = !mapped[v];
      for (int c : t.children(v)) all = all && out[c];
      out[v] = all;
    }
    return out;
  };
  const auto dh1 = dhat(t1, mapped1);
  const auto dh2 = dhat(t2, mapped2);

  std::vector<double> x(ip.variable_count(), 0.0);
  for (std::size_t k = 0; k < ip.variables.size(); ++k) {
    const Variable& v = ip.variables[k];
    const MergeTree& t = v.side == 2 ? t2 : t1;
    const auto& mapped = v.side == 2 ? mapped2 : mapped1;
    const auto& status = v.side == 2 ? cost.status_t2 : cost.status_t1;
    const auto& dh = v.side == 2 ? dh2 : dh1;
    const auto& tops = v.side == 2 ? cost.run_top_t2 : cost.run_top_t1;
    switch (v.role) {
      case VarRole::m: x[k] = partner1[v.a] == v.b ? 1.0 : 0.0; break;
      case VarRole::d: x[k] = mapped[v.a] ? 0.0 : 1.0; break;
      case VarRole::dhat: x[k] = dh[v.a] ? 1.0 : 0.0; break;
      case VarRole::dbar: x[k] = status[v.a] == NodeStatus::pruned ? 1.0 : 0.0; break;
      case VarRole::aux: {
        int survivors = 0;
        for (int c : t.children(v.a)) survivors += dh[c] ? 0 : 1;
        x[k] = survivors >= 2 ? 1.0 : 0.0;
        break;
      }
      case VarRole::p: x[k] = mapped[v.b] && tops[v.b] == v.a ? 1.0 : 0.0; break;
      case VarRole::pm: {
        const int e1 = ip.paths1.end(v.a), e2 = ip.paths2.end(v.b);
        x[k] = partner1[e1] == e2 && cost.run_top_t1[e1] == ip.paths1.top(v.a) &&
                       cost.run_top_t2[e2] == ip.paths2.top(v.b)
                   ? 1.0
                   : 0.0;
        break;
      }
    }
  }
  return x;
}

struct AssignmentCheck {
  bool feasible = true;
  std::string violated;  // name of the first violated constraint
  double objective = 0.0;
};

inline AssignmentCheck evaluate_assignment(const IpInstance& ip, const std::vector<double>& x) {
  AssignmentCheck out;
  out.objective = ip.objective_constant;
  for (std::size_t k = 0; k < x.size(); ++k) out.objective += ip.objective[k] * x[k];
  ip.for_each_constraint([&](const RowTag& tag, const std::vector<Term>& terms, Sense sense, double rhs) {
    if (!out.feasible) return;
    double lhs = 0.0;
    for (const auto& t : terms) lhs += t.coef * x[t.var];
    const bool ok = sense == Sense::le   ? lhs <= rhs + kTolerance
                    : sense == Sense::ge ? lhs >= rhs - kTolerance
                                         : std::abs(lhs - rhs) <= kTolerance;
    if (!ok) {
      out.feasible = false;
      out.violated = ip.row_name(tag);
    }
  });
  return out;
}

/// Mapping encoded by the m variables of an assignment.
inline EditMapping mapping_from_assignment(const IpInstance& ip, const std::vector<double>& x) {
  EditMapping m;
  for (std::size_t k = 0; k < ip.variables.size(); ++k)
    if (ip.variables[k].role == VarRole::m && x[k] > 0.5) m.pairs.emplace_back(ip.variables[k].a, ip.variables[k].b);
  m.normalize();
  return m;
}

/// Run pairs present as pm variables.
inline PathPairFilter pm_filter(const IpInstance& ip) {
  PathPairFilter f(ip.paths1.count(), ip.paths2.count(), false);
  for (const auto& v : ip.variables)
    if (v.role == VarRole::pm) f.set(v.a, v.b, true);
  return f;
}

/// Debug listing: variables by role then ids, objective, constraints.
inline void dump(const IpInstance& ip, std::ostream& out) {
  out << "variables " << ip.variable_count() << "\n";
  for (std::size_t k = 0; k < ip.variables.size(); ++k)
    out << "  " << to_string(ip.variables[k].role) << " " << ip.variable_name(static_cast<int>(k)) << "\n";
  out << "minimize " << ip.objective_constant;
  for (std::size_t k = 0; k < ip.variables.size(); ++k)
    if (ip.objective[k] != 0.0) out << " + " << ip.objective[k] << " " << ip.variable_name(static_cast<int>(k));
  out << "\nconstraints " << ip.constraint_count() << "\n";
  ip.for_each_constraint([&](const RowTag& tag, const std::vector<Term>& terms, Sense sense, double rhs) {
    out << "  " << ip.row_name(tag) << ":";
    for (const auto& t : terms) out << " " << (t.coef >= 0 ? "+" : "") << t.coef << " " << ip.variable_name(t.var);
    out << (sense == Sense::le ? " <= " : sense == Sense::ge ? " >= " : " = ") << rhs << "\n";
  });
}

}  // namespace mtdist
