#include <gtest/gtest.h>

#include <random>

#include "mtdist/datagen.hpp"
#include "mtdist/kernel_search.hpp"

using namespace mtdist;

namespace {

std::pair<MergeTree, MergeTree> random_pair(std::mt19937_64& rng) {
  const int sizes[] = {1, 2, 4, 5, 6, 7, 8};
  MergeTree a = random_tree(sizes[rng() % 7], rng, 4.0, rng() % 3 == 0);
  MergeTree b = random_tree(sizes[rng() % 7], rng, 4.0, rng() % 3 == 0);
  return {a, b};
}

// Subtree of t below v (v becomes a child of a fresh root edge of length 1),
// so that pair costs can be checked against the oracle.
MergeTree hang_subtree(const MergeTree& t, int v) {
  std::vector<int> parents{-1};
  std::vector<double> lengths{0.0};
  std::vector<int> id(t.size(), -1);
  id[v] = 1;
  parents.push_back(0);
  lengths.push_back(1.0);
  for (int w : t.preorder()) {
    if (!t.is_ancestor(v, w)) continue;
    id[w] = static_cast<int>(parents.size());
    parents.push_back(id[t.parent(w)]);
    lengths.push_back(t.up_length(w));
  }
  return scalars_from_lengths(parents, lengths);
}

}  // namespace

TEST(PathIndex, IdsAreDenseAndConsistent) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 30; ++i) {
    const MergeTree t = random_tree(4 + static_cast<int>(rng() % 9), rng);
    const PathIndex p(t);
    EXPECT_EQ(static_cast<std::size_t>(p.count()), enumerate_paths(t).size());
    std::vector<char> seen(p.count(), 0);
    for (int k = 0; k < p.count(); ++k) {
      EXPECT_EQ(p.id(p.top(k), p.end(k)), k);
      EXPECT_TRUE(t.is_ancestor(p.top(k), p.end(k)));
      seen[k] = 1;
    }
  }
}

TEST(PathPairFilter, SetAndTest) {
  PathPairFilter f(5, 70, false);
  EXPECT_FALSE(f.test(4, 69));
  f.set(4, 69, true);
  f.set(0, 0, true);
  EXPECT_TRUE(f.test(4, 69));
  EXPECT_TRUE(f.test(0, 0));
  EXPECT_FALSE(f.test(3, 69));
  f.set(4, 69, false);
  EXPECT_FALSE(f.test(4, 69));
}

TEST(Budget, NodeLimit) {
  Budget b(SearchLimits{3, 0.0});
  EXPECT_TRUE(b.tick());
  EXPECT_TRUE(b.tick());
  EXPECT_TRUE(b.tick());
  EXPECT_FALSE(b.tick());
  EXPECT_TRUE(b.exhausted());
}

TEST(MappingSearch, MatchesOracleWithoutSymmetry) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    auto [t1, t2] = random_pair(rng);
    auto search = MappingSearch::unrestricted(t1, t2, false, false);
    Budget budget;
    const auto out = search.solve(kInfinity, budget);
    const double expected = brute_force_distance(t1, t2).value;
    ASSERT_TRUE(out.exact);
    EXPECT_NEAR(out.upper_bound, expected, 1e-9);
    EXPECT_NEAR(mapping_cost(t1, t2, search.best_mapping()).cost(), expected, 1e-9);
  }
}

TEST(MappingSearch, SymmetryReductionsKeepTheOptimum) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    auto [t1, t2] = random_pair(rng);
    const double expected = brute_force_distance(t1, t2).value;
    for (int mask = 0; mask < 4; ++mask) {
      auto search = MappingSearch::unrestricted(t1, t2, mask & 1, mask & 2);
      Budget budget;
      EXPECT_NEAR(search.solve(kInfinity, budget).upper_bound, expected, 1e-9) << "mask " << mask;
    }
  }
}

// The relaxed bound for a pair never exceeds the true cost below it.
TEST(MappingSearch, RelaxedBoundsAreAdmissible) {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 40; ++i) {
    const MergeTree t1 = random_tree(4 + static_cast<int>(rng() % 4), rng);
    const MergeTree t2 = random_tree(4 + static_cast<int>(rng() % 4), rng);
    const auto search = MappingSearch::unrestricted(t1, t2, false, false);
    for (int a = 1; a < t1.size(); ++a)
      for (int b = 1; b < t2.size(); ++b) {
        // Cost below (a, b) equals the distance of the hung subtrees.
        const double truth = brute_force_distance(hang_subtree(t1, a), hang_subtree(t2, b)).value;
        EXPECT_LE(search.relaxed_bound(a, b), truth + 1e-9);
      }
  }
}

TEST(MappingSearch, CutoffAndBudgetGiveValidBounds) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 100; ++i) {
    auto [t1, t2] = random_pair(rng);
    const double expected = brute_force_distance(t1, t2).value;
    {
      auto search = MappingSearch::unrestricted(t1, t2);
      Budget budget(SearchLimits{1 + static_cast<long long>(rng() % 20), 0.0});
      const auto out = search.solve(kInfinity, budget);
      EXPECT_LE(out.lower_bound, expected + 1e-9);
      EXPECT_GE(out.upper_bound, expected - 1e-9);
    }
    {
      // Below the optimum the search can only prove a lower bound above the cutoff.
      auto search = MappingSearch::unrestricted(t1, t2);
      Budget budget;
      const double cutoff = expected * 0.5;
      const auto out = search.solve(cutoff, budget);
      EXPECT_LE(out.lower_bound, expected + 1e-9);
      if (expected > 1e-9) { EXPECT_GT(out.lower_bound, cutoff); }
    }
  }
}

TEST(MappingSearch, IncumbentIsAccepted) {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 50; ++i) {
    auto [t1, t2] = random_pair(rng);
    const auto bf = brute_force_distance(t1, t2);
    auto search = MappingSearch::unrestricted(t1, t2, false, false);
    search.offer_incumbent(bf.witness);
    EXPECT_NEAR(mapping_cost(t1, t2, search.best_mapping()).cost(), bf.value, 1e-9);
    Budget budget;
    EXPECT_NEAR(search.solve(kInfinity, budget).upper_bound, bf.value, 1e-9);
  }
}

TEST(MappingSearch, EmptyTrees) {
  const MergeTree e = MergeTree::empty();
  const MergeTree t = random_tree(6, 5);
  auto search = MappingSearch::unrestricted(e, t);
  Budget budget;
  EXPECT_NEAR(search.solve(kInfinity, budget).upper_bound, total_persistence(t), 1e-12);
}
