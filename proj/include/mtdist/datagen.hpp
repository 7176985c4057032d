#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "merge_tree.hpp"

namespace mtdist {

/// Accumulates a tree edge by edge, then places scalars by prefix sums.
class TreeBuilder {
 public:
  TreeBuilder() : parent_{-1}, length_{0.0} {}

  int root() const { return 0; }
  int add(int parent, double length) {
    parent_.push_back(parent);
    length_.push_back(length);
    return static_cast<int>(parent_.size()) - 1;
  }
  MergeTree build(double root_scalar = 0.0) const { return scalars_from_lengths(parent_, length_, root_scalar); }

 private:
  std::vector<int> parent_;
  std::vector<double> length_;
};

// ---------------------------------------------------------------------------
// Exact cover gadgets

struct X3CInstance {
  int m = 3;                               // universe {1..m}, m = 3k
  std::vector<std::array<int, 3>> sets;  // n sets of three elements

  int n() const { return static_cast<int>(sets.size()); }
  int k() const { return m / 3; }
};

inline void validate(const X3CInstance& inst) {
  if (inst.m < 3 || inst.m % 3 != 0) throw std::invalid_argument("x3c: m must be a positive multiple of 3");
  if (inst.sets.empty()) throw std::invalid_argument("x3c: at least one set is required");
  std::vector<int> count(inst.m + 1, 0);
  for (const auto& s : inst.sets) {
    for (int e : s)
      if (e < 1 || e > inst.m) throw std::invalid_argument("x3c: element out of range");
    if (s[0] == s[1] || s[0] == s[2] || s[1] == s[2]) throw std::invalid_argument("x3c: repeated element in a set");
    for (int e : s)
      if (++count[e] > 3) throw std::invalid_argument("x3c: element " + std::to_string(e) + " is in more than 3 sets");
  }
}

/// Exhaustive search for k pairwise disjoint sets covering the universe.
inline bool has_exact_cover(const X3CInstance& inst) {
  validate(inst);
  std::vector<char> covered(inst.m + 1, 0);
  auto rec = [&](auto&& self, int first_uncovered) -> bool {
    while (first_uncovered <= inst.m && covered[first_uncovered]) ++first_uncovered;
    if (first_uncovered > inst.m) return true;
    for (const auto& s : inst.sets) {
      if (std::find(s.begin(), s.end(), first_uncovered) == s.end()) continue;
      if (covered[s[0]] || covered[s[1]] || covered[s[2]]) continue;
      for (int e : s) covered[e] = 1;
      const bool ok = self(self, first_uncovered + 1);
      for (int e : s) covered[e] = 0;
      if (ok) return true;
    }
    return false;
  };
  return rec(rec, 1);
}

namespace detail {

// Base gadget: m leaves of lengths 2, 4, ..., 2m below one node.
inline int add_base_gadget(TreeBuilder& b, int attach, double attach_length, int m) {
  const int g = b.add(attach, attach_length);
  for (int i = 1; i <= m; ++i) b.add(g, 2.0 * i);
  return g;
}

// Element gadget i: like the base gadget, but leaf i is split in halves by
// a unit side edge.
inline int add_element_gadget(TreeBuilder& b, int attach, double attach_length, int m, int element) {
  const int g = b.add(attach, attach_length);
  for (int i = 1; i <= m; ++i) {
    if (i == element) {
      const int mid = b.add(g, i);
      b.add(mid, 1.0);
      b.add(mid, i);
    } else {
      b.add(g, 2.0 * i);
    }
  }
  return g;
}

}  // namespace detail

/// Base gadget G as a standalone tree, hung from a unit root edge.
inline MergeTree base_gadget(int m) {
  TreeBuilder b;
  detail::add_base_gadget(b, b.root(), 1.0, m);
  return b.build();
}

/// Element gadget G_i as a standalone tree, hung from a unit root edge.
inline MergeTree element_gadget(int m, int element) {
  if (element < 1 || element > m) throw std::invalid_argument("element gadget: element out of range");
  TreeBuilder b;
  detail::add_element_gadget(b, b.root(), 1.0, m, element);
  return b.build();
}

/// The tree pair of the exact cover reduction; the distance equals 3n - 2k
/// iff the instance has an exact cover. With a single set the spine node
/// of T1 would have one child, so it is merged into a root edge of length 2.
inline std::pair<MergeTree, MergeTree> x3c_trees(const X3CInstance& inst) {
  validate(inst);
  const int m = inst.m, n = inst.n(), k = inst.k();
  if (n < k) throw std::invalid_argument("x3c: fewer sets than needed for a cover");

  TreeBuilder b1;
  const int spine1 = n == 1 ? b1.root() : b1.add(b1.root(), 1.0);
  for (const auto& s : inst.sets) {
    const int hub = b1.add(spine1, n == 1 ? 2.0 : 1.0);
    for (int e : s) detail::add_element_gadget(b1, hub, 1.0, m, e);
  }

  TreeBuilder b2;
  const int spine2 = b2.add(b2.root(), 1.0);
  for (int e = 1; e <= m; ++e) detail::add_element_gadget(b2, spine2, 1.0, m, e);
  for (int j = 0; j < n - k; ++j) {
    const int hub = b2.add(spine2, 1.0);
    for (int r = 0; r < 3; ++r) detail::add_base_gadget(b2, hub, 1.0, m);
  }
  return {b1.build(), b2.build()};
}

/// Random instance. With `planted_cover` it contains a hidden exact cover
/// plus decoys; otherwise it is drawn until exhaustive search finds no cover.
inline X3CInstance sample_x3c(int m, int n, bool planted_cover, std::uint64_t seed) {
  if (m < 3 || m % 3 != 0) throw std::invalid_argument("sample_x3c: m must be a positive multiple of 3");
  const int k = m / 3;
  if (n < k) throw std::invalid_argument("sample_x3c: n must be at least m/3");
  if (n > m) throw std::invalid_argument("sample_x3c: n > m cannot respect the membership bound");
  if (!planted_cover && m > 12) throw std::invalid_argument("sample_x3c: no-cover instances need m <= 12");
  std::mt19937_64 rng(seed);

  auto random_set = [&](std::vector<int>& count) -> std::optional<std::array<int, 3>> {
    std::vector<int> open;
    for (int e = 1; e <= m; ++e)
      if (count[e] < 3) open.push_back(e);
    if (open.size() < 3) return std::nullopt;
    std::shuffle(open.begin(), open.end(), rng);
    std::array<int, 3> s{open[0], open[1], open[2]};
    std::sort(s.begin(), s.end());
    return s;
  };

  for (int attempt = 0; attempt < 10000; ++attempt) {
    X3CInstance inst;
    inst.m = m;
    std::vector<int> count(m + 1, 0);
    bool ok = true;
    if (planted_cover) {
      std::vector<int> perm(m);
      std::iota(perm.begin(), perm.end(), 1);
      std::shuffle(perm.begin(), perm.end(), rng);
      for (int j = 0; j < k; ++j) {
        std::array<int, 3> s{perm[3 * j], perm[3 * j + 1], perm[3 * j + 2]};
        std::sort(s.begin(), s.end());
        for (int e : s) ++count[e];
        inst.sets.push_back(s);
      }
    }
    while (inst.n() < n) {
      auto s = random_set(count);
      if (!s) {
        ok = false;
        break;
      }
      for (int e : *s) ++count[e];
      inst.sets.push_back(*s);
    }
    if (!ok) continue;
    std::shuffle(inst.sets.begin(), inst.sets.end(), rng);
    if (!planted_cover && has_exact_cover(inst)) continue;
    return inst;
  }
  throw std::invalid_argument("sample_x3c: could not draw an instance with these parameters");
}

// ---------------------------------------------------------------------------
// Saddle swap and ensembles

struct SaddleSwapLengths {
  double root = 1.0;
  double swap = 1.0;
  double a = 10.0;
  double b = 6.0;
  double c = 2.0;
};

/// Two trees with features A, B, C where C merges into A's branch in the
/// first tree and into B's branch in the second; all edge lengths agree.
inline std::pair<MergeTree, MergeTree> make_saddle_swap_pair(const SaddleSwapLengths& len = {}) {
  for (double v : {len.root, len.swap, len.a, len.b, len.c})
    if (!(v > 0.0)) throw std::invalid_argument("saddle swap: lengths must be positive");
  auto make = [&](bool c_with_a) {
    TreeBuilder b;
    const int s = b.add(b.root(), len.root);
    const int z = b.add(s, len.swap);
    b.add(c_with_a ? z : s, len.a);
    b.add(c_with_a ? s : z, len.b);
    b.add(z, len.c);
    return b.build();
  };
  return {make(true), make(false)};
}

enum class EnsembleKind { vertical, horizontal };

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::horizontal;
  int member_count = 20;
  double perturbation = 0.1;  // half-width of the uniform noise on every edge length
  std::uint64_t seed = 1;
  double swap_length = 1.0;   // horizontal only
};

inline EnsembleSpec default_ensemble_spec(EnsembleKind kind) {
  EnsembleSpec s;
  s.kind = kind;
  s.perturbation = kind == EnsembleKind::vertical ? 0.4 : 0.1;
  return s;
}

inline const char* to_string(EnsembleKind k) { return k == EnsembleKind::vertical ? "vertical" : "horizontal"; }

namespace detail {

struct EnsembleShape {
  std::vector<int> parent;
  std::vector<double> length;
};

// Horizontal shape: A (2 side peaks), B (1 side peak) and C. C hangs from
// the swap saddle together with A (even members) or B (odd members).
inline EnsembleShape horizontal_shape(double swap, bool c_with_a) {
  EnsembleShape s;
  auto add = [&](int p, double l) {
    s.parent.push_back(p);
    s.length.push_back(l);
    return static_cast<int>(s.parent.size()) - 1;
  };
  const int root = add(-1, 0.0);
  const int top = add(root, 1.0);
  const int swap_node = add(top, swap);
  const int a_attach = c_with_a ? swap_node : top;
  const int b_attach = c_with_a ? top : swap_node;
  const int a1 = add(a_attach, 3.0);
  add(a1, 1.5);
  const int a2 = add(a1, 2.5);
  add(a2, 1.2);
  add(a2, 2.5);  // A: 8 above its attachment
  const int b1 = add(b_attach, 3.0);
  add(b1, 1.6);
  add(b1, 3.0);  // B: 6 above its attachment
  add(swap_node, 4.0);  // C
  return s;
}

// Vertical shape: peaks 10, 9, 8, 7 on a saddle chain; the 9 peak carries
// five side branches.
inline EnsembleShape vertical_shape() {
  EnsembleShape s;
  auto add = [&](int p, double l) {
    s.parent.push_back(p);
    s.length.push_back(l);
    return static_cast<int>(s.parent.size()) - 1;
  };
  const int root = add(-1, 0.0);
  const int s1 = add(root, 1.0);
  add(s1, 9.0);  // peak 10
  const int s2 = add(s1, 1.0);
  int spine = s2;
  for (int i = 0; i < 5; ++i) {
    spine = add(spine, 1.0);
    add(spine, 1.0 + 0.25 * i);
  }
  add(spine, 2.0);  // peak 9
  const int s3 = add(s2, 1.0);
  add(s3, 5.0);  // peak 8
  add(s3, 4.0);  // peak 7
  return s;
}

}  // namespace detail

/// Worst-case relabel cost between two members: every edge can differ by
/// twice the perturbation.
inline double ensemble_budget(const EnsembleSpec& spec) {
  const auto shape = spec.kind == EnsembleKind::vertical ? detail::vertical_shape()
                                                        : detail::horizontal_shape(spec.swap_length, true);
  return 2.0 * spec.perturbation * static_cast<double>(shape.parent.size() - 1);
}

inline std::vector<MergeTree> make_ensemble(const EnsembleSpec& spec) {
  if (spec.member_count < 1) throw std::invalid_argument("ensemble: member count must be positive");
  if (!(spec.perturbation >= 0.0)) throw std::invalid_argument("ensemble: perturbation must be nonnegative");
  if (spec.kind == EnsembleKind::horizontal && !(spec.swap_length > 0.0))
    throw std::invalid_argument("ensemble: swap length must be positive");

  auto shape_of = [&](int member) {
    return spec.kind == EnsembleKind::vertical ? detail::vertical_shape()
                                               : detail::horizontal_shape(spec.swap_length, member % 2 == 0);
  };
  // Reject amplitudes that could produce nonpositive edges or, for the
  // horizontal kind, reorder the heights of A > B > C.
  for (int variant = 0; variant < 2; ++variant) {
    const auto shape = shape_of(variant);
    const double min_len = *std::min_element(shape.length.begin() + 1, shape.length.end());
    if (spec.perturbation >= min_len)
      throw std::invalid_argument("ensemble: perturbation must stay below the shortest edge length");
    if (spec.kind == EnsembleKind::horizontal) {
      // Leaves A, B, C are nodes 7, 10, 11; noise moves a leaf height by at
      // most perturbation times its depth.
      const MergeTree t = scalars_from_lengths(shape.parent, shape.length);
      auto separated = [&](int hi, int lo) {
        return t.scalar(hi) - t.scalar(lo) > spec.perturbation * (t.depth(hi) + t.depth(lo));
      };
      if (!separated(7, 10) || !separated(10, 11))
        throw std::invalid_argument("ensemble: perturbation could break the height order of the features");
    }
  }

  std::vector<MergeTree> out;
  for (int member = 0; member < spec.member_count; ++member) {
    auto shape = shape_of(member);
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(member)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> noise(-spec.perturbation, spec.perturbation);
    for (std::size_t e = 1; e < shape.length.size(); ++e)
      if (spec.perturbation > 0.0) shape.length[e] += noise(rng);
    out.push_back(scalars_from_lengths(shape.parent, shape.length));
  }
  return out;
}

inline nlohmann::json to_json(const EnsembleSpec& spec) {
  return nlohmann::json{{"kind", to_string(spec.kind)},
                        {"member_count", spec.member_count},
                        {"perturbation", spec.perturbation},
                        {"seed", spec.seed},
                        {"swap_length", spec.swap_length},
                        {"budget", ensemble_budget(spec)}};
}

// ---------------------------------------------------------------------------
// Random trees

/// Node counts a merge tree can have: 1, 2 and anything from 4 up.
inline bool valid_tree_size(int n) { return n == 1 || n == 2 || n >= 4; }

/// Random valid tree with exactly `nodes` nodes. Edge lengths are uniform in
/// [0.1, max_length], or uniform integers in [1, max_length] when
/// `integer_lengths` is set (to provoke ties).
inline MergeTree random_tree(int nodes, std::mt19937_64& rng, double max_length = 4.0,
                             bool integer_lengths = false) {
  if (!valid_tree_size(nodes)) throw std::invalid_argument("random_tree: no merge tree has this many nodes");
  if (nodes == 1) return MergeTree::empty();
  auto draw = [&]() {
    if (integer_lengths) {
      std::uniform_int_distribution<int> d(1, std::max(1, static_cast<int>(max_length)));
      return static_cast<double>(d(rng));
    }
    std::uniform_real_distribution<double> d(0.1, max_length);
    return d(rng);
  };
  std::vector<int> parent{-1, 0};
  std::vector<double> length{0.0, draw()};
  std::vector<int> degree{1, 0};
  while (static_cast<int>(parent.size()) < nodes) {
    const int left = nodes - static_cast<int>(parent.size());
    std::vector<int> saddles;
    for (int v = 1; v < static_cast<int>(parent.size()); ++v)
      if (degree[v] >= 2) saddles.push_back(v);
    const bool can_split = left >= 2;
    const bool can_attach = !saddles.empty();
    bool split = can_split && (!can_attach || std::uniform_int_distribution<int>(0, 1)(rng) == 0);
    if (split) {
      // New saddle on the edge above v, plus a new leaf below it.
      const int v = std::uniform_int_distribution<int>(1, static_cast<int>(parent.size()) - 1)(rng);
      const double full = length[v];
      const double cut = std::uniform_real_distribution<double>(0.2, 0.8)(rng);
      double upper = integer_lengths ? std::max(1.0, std::round(full * cut)) : full * cut;
      double lower = full - upper;
      if (integer_lengths && lower < 1.0) {
        length[v] += 1.0;  // keep integer pieces positive
        lower = length[v] - upper;
      }
      const int mid = static_cast<int>(parent.size());
      parent.push_back(parent[v]);
      length.push_back(upper);
      degree.push_back(2);
      parent[v] = mid;
      length[v] = lower;
      parent.push_back(mid);
      length.push_back(draw());
      degree.push_back(0);
    } else {
      const int s = saddles[std::uniform_int_distribution<int>(0, static_cast<int>(saddles.size()) - 1)(rng)];
      parent.push_back(s);
      length.push_back(draw());
      degree.push_back(0);
      ++degree[s];
    }
  }
  return scalars_from_lengths(parent, length);
}

inline MergeTree random_tree(int nodes, std::uint64_t seed, double max_length = 4.0, bool integer_lengths = false) {
  std::mt19937_64 rng(seed);
  return random_tree(nodes, rng, max_length, integer_lengths);
}

}  // namespace mtdist
