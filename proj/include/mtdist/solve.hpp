#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "edit_model.hpp"
#include "ip.hpp"
#include "kernel_search.hpp"
#include "merge_tree.hpp"

namespace mtdist {

/// Roots plus the k most persistent leaves of each tree paired by rank;
/// returns the cheapest over all k.
inline EditMapping greedy_mapping(const MergeTree& t1, const MergeTree& t2) {
  auto ranked_leaves = [](const MergeTree& t) {
    std::vector<int> leaves;
    for (int v = 0; v < t.size(); ++v)
      if (t.is_leaf(v)) leaves.push_back(v);
    std::stable_sort(leaves.begin(), leaves.end(), [&](int a, int b) {
      return t.scalar(a) - t.scalar(t.root()) > t.scalar(b) - t.scalar(t.root());
    });
    return leaves;
  };
  const auto l1 = ranked_leaves(t1);
  const auto l2 = ranked_leaves(t2);
  EditMapping best{{{t1.root(), t2.root()}}};
  double best_cost = mapping_cost(t1, t2, best).cost();
  EditMapping current = best;
  for (std::size_t k = 0; k < std::min(l1.size(), l2.size()); ++k) {
    current.pairs.emplace_back(l1[k], l2[k]);
    EditMapping sorted = current;
    sorted.normalize();
    const double c = mapping_cost(t1, t2, sorted).cost();
    if (c < best_cost - kTolerance) {
      best_cost = c;
      best = sorted;
    }
  }
  return best;
}

/// Exact search restricted to the run pairs present in `ip`. A known
/// mapping may be passed as starting incumbent. If nothing at or below the
/// instance's upper bound is found, `value` is infinite.
inline SolveResult solve_builtin(const IpInstance& ip, SearchLimits limits,
                                 const std::optional<EditMapping>& incumbent = std::nullopt) {
  MappingSearch search(ip.tree1, ip.tree2, pm_filter(ip));
  if (incumbent) search.offer_incumbent(*incumbent);
  Budget budget(limits);
  const auto out = search.solve(ip.upper_bound.value_or(kInfinity), budget);
  SolveResult r;
  r.lower_bound = out.lower_bound;
  r.stats.nodes = budget.nodes();
  r.stats.seconds = budget.elapsed();
  r.stats.iterations = 1;
  if (out.upper_bound < kInfinity) {
    r.witness = search.best_mapping();
    r.value = mapping_cost(ip.tree1, ip.tree2, r.witness).cost();
  } else {
    r.value = kInfinity;
  }
  r.status = out.exact ? SolveStatus::optimal : SolveStatus::upper_bound_only;
  if (out.exact) r.lower_bound = r.value;
  return r;
}

/// Direct search on a tree pair without building an instance.
inline SolveResult solve_builtin(const MergeTree& t1, const MergeTree& t2, SearchLimits limits,
                                 bool leaf_symmetry = true, bool root_symmetry = true) {
  require_valid(t1, "T1");
  require_valid(t2, "T2");
  auto search = MappingSearch::unrestricted(t1, t2, leaf_symmetry, root_symmetry);
  const EditMapping greedy = greedy_mapping(t1, t2);
  search.offer_incumbent(greedy);
  Budget budget(limits);
  const auto out = search.solve(kInfinity, budget);
  SolveResult r;
  r.witness = search.best_mapping();
  r.value = mapping_cost(t1, t2, r.witness).cost();
  r.lower_bound = out.exact ? r.value : out.lower_bound;
  r.status = out.exact ? SolveStatus::optimal : SolveStatus::upper_bound_only;
  r.stats.nodes = budget.nodes();
  r.stats.seconds = budget.elapsed();
  r.stats.iterations = 1;
  return r;
}

enum class Decision { yes, no, unknown };

inline const char* to_string(Decision d) {
  switch (d) {
    case Decision::yes: return "yes";
    case Decision::no: return "no";
    case Decision::unknown: return "unknown";
  }
  return "?";
}

struct DecisionResult {
  Decision answer = Decision::unknown;
  double lower_bound = 0.0;
  double upper_bound = kInfinity;
  EditMapping witness;  // set when the answer is yes
  long long nodes = 0;
};

/// Is the distance at most c?
inline DecisionResult decide_threshold(const MergeTree& t1, const MergeTree& t2, double c, SearchLimits limits) {
  require_valid(t1, "T1");
  require_valid(t2, "T2");
  if (c < 0.0) throw std::invalid_argument("decide_threshold: threshold must be nonnegative");
  DecisionResult r;
  const EditMapping greedy = greedy_mapping(t1, t2);
  const double greedy_cost = mapping_cost(t1, t2, greedy).cost();
  r.upper_bound = greedy_cost;
  if (greedy_cost <= c + kTolerance) {
    r.answer = Decision::yes;
    r.witness = greedy;
    return r;
  }
  auto search = MappingSearch::unrestricted(t1, t2);
  Budget budget(limits);
  const auto out = search.solve(c, budget);
  r.nodes = budget.nodes();
  r.lower_bound = out.lower_bound;
  if (out.upper_bound <= c + kTolerance) {
    r.answer = Decision::yes;
    r.witness = search.best_mapping();
    r.upper_bound = mapping_cost(t1, t2, r.witness).cost();
  } else if (out.lower_bound > c + kTolerance) {
    r.answer = Decision::no;
  }
  return r;
}

// ---------------------------------------------------------------------------
// MPS interchange

namespace detail {

inline std::string mps_number(double v) {
  char buf[64];
  for (int prec = 12; prec >= 1; --prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strlen(buf) <= 12) return buf;
  }
  return buf;
}

// Index names stay within 8 characters up to 9999999 entries.
inline std::string mps_name(char prefix, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%07zu", prefix, k + 1);
  return buf;
}
inline std::string mps_var(std::size_t k) { return mps_name('X', k); }
inline std::string mps_row(std::size_t k) { return mps_name('R', k); }

inline std::string mps_line(const std::string& f1, const std::string& f2, const std::string& f3 = {},
                            const std::string& f4 = {}, const std::string& f5 = {}, const std::string& f6 = {}) {
  char buf[128];
  std::snprintf(buf, sizeof buf, " %-2s %-8s  %-8s  %12s   %-8s  %12s", f1.c_str(), f2.c_str(), f3.c_str(),
                f4.c_str(), f5.c_str(), f6.c_str());
  std::string s = buf;
  s.erase(s.find_last_not_of(' ') + 1);
  return s;
}

}  // namespace detail

/// Writes fixed-format MPS with 8-character index names. Comment lines map
/// index names back to readable variable names and carry the objective
/// constant, which MPS has no field for.
inline void export_mps(const IpInstance& ip, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::size_t nv = ip.variable_count();
  if (nv >= 10000000) throw std::runtime_error("export_mps: too many variables for 8-character names");

  std::vector<std::vector<std::pair<std::size_t, double>>> columns(nv);
  std::vector<char> senses;
  std::vector<double> rhs;
  ip.for_each_constraint([&](const RowTag&, const std::vector<Term>& terms, Sense sense, double b) {
    const std::size_t r = senses.size();
    for (const auto& t : terms) columns[t.var].emplace_back(r, t.coef);
    senses.push_back(sense == Sense::le ? 'L' : sense == Sense::ge ? 'G' : 'E');
    rhs.push_back(b);
  });
  if (senses.size() >= 10000000) throw std::runtime_error("export_mps: too many rows for 8-character names");

  char constant[64];
  std::snprintf(constant, sizeof constant, "%.17g", ip.objective_constant);
  out << "* edit distance program: minimize OBJ + OBJCONST\n";
  out << "* OBJCONST " << constant << "\n";
  for (std::size_t k = 0; k < nv; ++k)
    out << "* VAR " << detail::mps_var(k) << " " << ip.variable_name(static_cast<int>(k)) << "\n";
  out << "NAME          MTDIST\n";
  out << "ROWS\n";
  out << " N  OBJ\n";
  for (std::size_t r = 0; r < senses.size(); ++r) out << " " << senses[r] << "  " << detail::mps_row(r) << "\n";
  out << "COLUMNS\n";
  out << detail::mps_line("", "MARKER", "'MARKER'", "", "'INTORG'") << "\n";
  for (std::size_t k = 0; k < nv; ++k) {
    const std::string name = detail::mps_var(k);
    std::vector<std::pair<std::string, double>> entries;
    if (ip.objective[k] != 0.0) entries.emplace_back("OBJ", ip.objective[k]);
    for (auto [r, c] : columns[k]) entries.emplace_back(detail::mps_row(r), c);
    if (entries.empty()) entries.emplace_back("OBJ", 0.0);
    for (std::size_t i = 0; i < entries.size(); i += 2) {
      if (i + 1 < entries.size())
        out << detail::mps_line("", name, entries[i].first, detail::mps_number(entries[i].second),
                                entries[i + 1].first, detail::mps_number(entries[i + 1].second))
            << "\n";
      else
        out << detail::mps_line("", name, entries[i].first, detail::mps_number(entries[i].second)) << "\n";
    }
  }
  out << detail::mps_line("", "MARKER", "'MARKER'", "", "'INTEND'") << "\n";
  out << "RHS\n";
  for (std::size_t r = 0; r < rhs.size(); ++r)
    if (rhs[r] != 0.0) out << detail::mps_line("", "RHS", detail::mps_row(r), detail::mps_number(rhs[r])) << "\n";
  out << "BOUNDS\n";
  for (std::size_t k = 0; k < nv; ++k) out << detail::mps_line("UP", "BND", detail::mps_var(k), "1") << "\n";
  out << "ENDATA\n";
  if (!out) throw std::runtime_error("error while writing " + path);
}

/// Reads "name value" lines ('#' starts a comment; index or readable
/// names) and checks the assignment against every constraint. A comment
/// line "# status: optimal" marks the assignment as proven optimal.
inline SolveResult import_solution(const IpInstance& ip, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  const std::size_t nv = ip.variable_count();
  std::vector<double> x(nv, 0.0);
  std::vector<char> seen(nv, 0);
  bool optimal = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      if (line.find("status: optimal", hash) != std::string::npos) optimal = true;
      line.erase(hash);
    }
    std::istringstream ls(line);
    std::string name, value, trailing;
    if (!(ls >> name)) continue;
    if (!(ls >> value) || (ls >> trailing))
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected \"name value\"");
    int k = -1;
    if (name.size() == 8 && name[0] == 'X' && name.find_first_not_of("0123456789", 1) == std::string::npos) {
      const long idx = std::stol(name.substr(1)) - 1;
      if (idx >= 0 && static_cast<std::size_t>(idx) < nv) k = static_cast<int>(idx);
    } else {
      k = ip.find_variable(name);
    }
    if (k < 0) throw ParseError(path + ":" + std::to_string(lineno) + ": unknown variable " + name);
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": bad value for " + name);
    }
    x[k] = v > 0.5 ? 1.0 : 0.0;
    seen[k] = 1;
  }
  for (std::size_t k = 0; k < nv; ++k)
    if (!seen[k])
      throw ParseError(path + ": missing variable " + ip.variable_name(static_cast<int>(k)) + " (" +
                       detail::mps_var(k) + ")");

  SolveResult r;
  const auto check = evaluate_assignment(ip, x);
  if (!check.feasible) {
    r.status = SolveStatus::infeasible_error;
    r.message = "constraint " + check.violated + " violated";
    r.value = kInfinity;
    return r;
  }
  r.value = check.objective;
  r.witness = mapping_from_assignment(ip, x);
  r.status = optimal ? SolveStatus::optimal : SolveStatus::upper_bound_only;
  r.lower_bound = optimal ? r.value : 0.0;
  r.stats.iterations = 1;
  return r;
}

/// Writes an assignment in the format read by import_solution.
inline void write_solution(const IpInstance& ip, const std::vector<double>& x, const std::string& path,
                           bool optimal) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  if (optimal) out << "# status: optimal\n";
  for (std::size_t k = 0; k < x.size(); ++k)
    out << ip.variable_name(static_cast<int>(k)) << " " << (x[k] > 0.5 ? 1 : 0) << "\n";
}

}  // namespace mtdist
