#include <gtest/gtest.h>

#include <random>

#include "mtdist/datagen.hpp"
#include "mtdist/edit_model.hpp"

using namespace mtdist;

namespace {

// Random valid mapping: roots plus greedily added random pairs.
EditMapping random_mapping(const MergeTree& t1, const MergeTree& t2, std::mt19937_64& rng) {
  EditMapping m;
  m.pairs.emplace_back(t1.root(), t2.root());
  const int tries = static_cast<int>(rng() % 8);
  for (int i = 0; i < tries; ++i) {
    EditMapping next = m;
    next.pairs.emplace_back(static_cast<int>(rng() % t1.size()), static_cast<int>(rng() % t2.size()));
    if (check_mapping(t1, t2, next).empty()) m = next;
  }
  m.normalize();
  return m;
}

MergeTree scaled(const MergeTree& t, double alpha) {
  auto s = t.scalars();
  for (double& x : s) x *= alpha;
  return MergeTree(s, t.parents());
}

// x(0) -> y(1) -> {z(2) -> {A(3), B(4)}, C(5)}
MergeTree fig8_tree() { return MergeTree({0.0, 1.0, 2.0, 6.0, 5.0, 4.0}, {-1, 0, 1, 2, 2, 1}); }

}  // namespace

TEST(ApplyEdit, ContractPrunesTwoChildSaddle) {
  // root -> s1 -> {a, s2 -> {b, c}}; deleting c prunes s2.
  const MergeTree t = scalars_from_lengths({-1, 0, 1, 1, 3, 3}, {0.0, 1.0, 4.0, 1.0, 2.0, 0.5});
  std::vector<int> map;
  const MergeTree r = apply_edit(t, Contract{5}, &map);
  EXPECT_EQ(r.size(), 4);
  EXPECT_EQ(map[3], -1);
  EXPECT_EQ(map[5], -1);
  EXPECT_DOUBLE_EQ(r.up_length(map[4]), 3.0);
  EXPECT_EQ(r.parent(map[4]), map[1]);
  EXPECT_NEAR(total_persistence(t) - total_persistence(r), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(operation_cost(t, Contract{5}), 0.5);
}

TEST(ApplyEdit, ContractLeafOfThreeChildSaddle) {
  const MergeTree t = scalars_from_lengths({-1, 0, 1, 1, 1}, {0.0, 1.0, 2.0, 3.0, 4.0});
  const MergeTree r = apply_edit(t, Contract{2});
  EXPECT_TRUE(is_valid(r));
  EXPECT_EQ(r.size(), 4);
  EXPECT_EQ(r.degree(1), 2);
}

TEST(ApplyEdit, ContractInnerEdgeMergesIntoParent) {
  // root -> s1 -> {a, s2 -> {b, c}}; contracting s2 gives s1 three children.
  const MergeTree t = scalars_from_lengths({-1, 0, 1, 1, 3, 3}, {0.0, 1.0, 4.0, 1.0, 2.0, 0.5});
  const MergeTree r = apply_edit(t, Contract{3});
  EXPECT_EQ(r.degree(1), 3);
  EXPECT_NEAR(total_persistence(t) - total_persistence(r), 1.0, 1e-12);
  // Edge labels of the surviving edges are unchanged.
  EXPECT_DOUBLE_EQ(r.up_length(3), 2.0);
  EXPECT_DOUBLE_EQ(r.up_length(4), 0.5);
}

TEST(ApplyEdit, RelabelToSameLengthIsIdentity) {
  const MergeTree t = scalars_from_lengths({-1, 0, 1, 1}, {0.0, 1.0, 4.0, 2.0});
  EXPECT_EQ(apply_edit(t, Relabel{2, 4.0}), t);
  EXPECT_DOUBLE_EQ(operation_cost(t, Relabel{2, 4.0}), 0.0);
  EXPECT_DOUBLE_EQ(operation_cost(t, Relabel{2, 1.5}), 2.5);
}

TEST(ApplyEdit, InsertsInvertContract) {
  const MergeTree t = scalars_from_lengths({-1, 0, 1, 1, 3, 3}, {0.0, 1.0, 4.0, 1.0, 2.0, 0.5});
  // Re-inserting c at offset 1 on b's merged edge restores the tree shape.
  const MergeTree cut = apply_edit(t, Contract{5});
  const MergeTree back = apply_edit(cut, SplitInsert{3, 1.0, 0.5});
  EXPECT_NEAR(total_persistence(back), total_persistence(t), 1e-12);
  EXPECT_EQ(back.size(), t.size());
  // Re-inserting a contracted inner node.
  const MergeTree flat = apply_edit(t, Contract{3});
  const MergeTree inner = apply_edit(flat, InsertInner{1, {3, 4}, 1.0});
  EXPECT_EQ(inner.size(), t.size());
  EXPECT_NEAR(total_persistence(inner), total_persistence(t), 1e-12);
  // A leaf below a node with two children.
  const MergeTree more = apply_edit(t, InsertLeaf{3, 0.7});
  EXPECT_EQ(more.degree(3), 3);
  EXPECT_DOUBLE_EQ(operation_cost(t, InsertLeaf{3, 0.7}), 0.7);
  // The empty tree grows a first edge.
  EXPECT_EQ(apply_edit(MergeTree::empty(), InsertLeaf{0, 2.0}).size(), 2);
}

TEST(ApplyEdit, Errors) {
  const MergeTree t = scalars_from_lengths({-1, 0, 1, 1}, {0.0, 1.0, 4.0, 2.0});
  EXPECT_THROW(apply_edit(t, Contract{7}), EditError);
  EXPECT_THROW(apply_edit(t, Contract{0}), EditError);
  EXPECT_THROW(apply_edit(t, Relabel{2, 0.0}), EditError);
  EXPECT_THROW(apply_edit(t, Relabel{2, -1.0}), EditError);
  EXPECT_THROW(apply_edit(t, InsertLeaf{2, 1.0}), EditError);
  EXPECT_THROW(apply_edit(t, SplitInsert{2, 4.0, 1.0}), EditError);
  EXPECT_THROW(apply_edit(t, InsertInner{1, {2, 3}, 1.0}), EditError);
  // The root's only child cannot merge into the root.
  EXPECT_THROW(apply_edit(t, Contract{1}), EditError);
}

TEST(ApplyEdit, RandomOperationsKeepValidity) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    const MergeTree t = random_tree(4 + static_cast<int>(rng() % 8), rng);
    const int v = 1 + static_cast<int>(rng() % (t.size() - 1));
    for (EditOperation op : {EditOperation{Relabel{v, 0.5}}, EditOperation{Contract{v}},
                             EditOperation{SplitInsert{v, t.up_length(v) / 2, 0.3}}}) {
      try {
        const MergeTree r = apply_edit(t, op);
        EXPECT_TRUE(is_valid(r));
        if (std::holds_alternative<Contract>(op)) {
          EXPECT_NEAR(total_persistence(t) - total_persistence(r), t.up_length(v), 1e-9);
        }
      } catch (const EditError&) {
        // Only the merge into the root may be refused here.
        EXPECT_TRUE(std::holds_alternative<Contract>(op) && t.is_root(t.parent(v)) && !t.is_leaf(v));
      }
    }
  }
}

TEST(SequenceCost, Examples) {
  const MergeTree t = scalars_from_lengths({-1, 0, 1, 1}, {0.0, 1.0, 3.0, 2.0});
  EXPECT_DOUBLE_EQ(sequence_cost(t, {}), 0.0);
  EXPECT_DOUBLE_EQ(sequence_cost(t, {Relabel{2, 5.0}, Relabel{2, 3.0}}), 4.0);
  // Delete a unit leaf edge, then insert it again elsewhere.
  const MergeTree g = scalars_from_lengths({-1, 0, 1, 1, 1}, {0.0, 1.0, 2.0, 3.0, 1.0});
  MergeTree out;
  EXPECT_DOUBLE_EQ(sequence_cost(g, {Contract{4}, InsertLeaf{1, 1.0}}, &out), 2.0);
  EXPECT_THROW(sequence_cost(t, {Contract{2}, Contract{2}, Contract{2}}), EditError);
}

TEST(Classify, RootsOnlyChargesEverything) {
  const MergeTree t = fig8_tree();
  std::vector<bool> mapped(t.size(), false);
  mapped[0] = true;
  const auto s = classify_unmapped(t, mapped);
  EXPECT_EQ(s[0], NodeStatus::mapped);
  for (int v = 1; v < t.size(); ++v) EXPECT_EQ(s[v], NodeStatus::charged);
}

TEST(Classify, SaddleWithTwoSurvivorsIsCharged) {
  const MergeTree t = fig8_tree();
  std::vector<bool> mapped{true, true, false, true, true, true};
  EXPECT_EQ(classify_unmapped(t, mapped)[2], NodeStatus::charged);
}

TEST(Classify, SaddleWithOneSurvivorIsPruned) {
  const MergeTree t = fig8_tree();
  std::vector<bool> mapped{true, true, false, true, false, true};
  EXPECT_EQ(classify_unmapped(t, mapped)[2], NodeStatus::pruned);
  // A mapped node is never pruned even with one surviving child.
  std::vector<bool> mapped2{true, true, true, true, false, false};
  EXPECT_EQ(classify_unmapped(t, mapped2)[2], NodeStatus::mapped);
}

TEST(MappingCost, Examples) {
  const MergeTree t = fig8_tree();
  EditMapping identity;
  for (int v = 0; v < t.size(); ++v) identity.pairs.emplace_back(v, v);
  EXPECT_DOUBLE_EQ(mapping_cost(t, t, identity).cost(), 0.0);

  const MergeTree u = scalars_from_lengths({-1, 0, 1, 1}, {0.0, 1.0, 3.0, 2.0});
  const EditMapping roots{{{0, 0}}};
  const auto c = mapping_cost(t, u, roots);
  EXPECT_DOUBLE_EQ(c.cost(), total_persistence(t) + total_persistence(u));
  EXPECT_DOUBLE_EQ(c.relabel_total, 0.0);
}

TEST(MappingCost, RunThroughPrunedAncestors) {
  // z pruned: A's run reaches y, so A's run is 1 + 4 = 5 against 5.
  const MergeTree t = fig8_tree();
  const MergeTree u = scalars_from_lengths({-1, 0, 1, 1}, {0.0, 1.0, 5.0, 3.0});
  const EditMapping m{{{0, 0}, {1, 1}, {3, 2}, {5, 3}}};
  const auto c = mapping_cost(t, u, m);
  EXPECT_EQ(c.status_t1[2], NodeStatus::pruned);
  EXPECT_EQ(c.run_top_t1[3], 1);
  EXPECT_DOUBLE_EQ(c.run_t1[3], 5.0);
  EXPECT_DOUBLE_EQ(c.relabel_total, 0.0);
  EXPECT_DOUBLE_EQ(c.deleted_total_t1, 3.0);  // B's leaf edge
  EXPECT_DOUBLE_EQ(c.inserted_total_t2, 0.0);
}

TEST(MappingCost, SaddleSwapCostsTwiceTheSwapEdge) {
  for (double s : {0.5, 1.0, 3.0}) {
    SaddleSwapLengths len;
    len.swap = s;
    const auto [t1, t2] = make_saddle_swap_pair(len);
    // Nodes: 0 root, 1 s1, 2 z, 3 A, 4 B, 5 C in both trees; z unmapped.
    const EditMapping m{{{0, 0}, {1, 1}, {3, 3}, {4, 4}, {5, 5}}};
    const auto c = mapping_cost(t1, t2, m);
    EXPECT_EQ(c.status_t1[2], NodeStatus::charged);
    EXPECT_NEAR(c.cost(), 2.0 * s, 1e-12);
  }
}

TEST(MappingCost, RejectsInvalidMappings) {
  const MergeTree t = fig8_tree();
  EXPECT_THROW(mapping_cost(t, t, EditMapping{{{1, 1}}}), std::invalid_argument);
  EXPECT_THROW(mapping_cost(t, t, EditMapping{{{0, 0}, {1, 1}, {2, 1}}}), std::invalid_argument);
  // Ancestry reversed.
  EXPECT_THROW(mapping_cost(t, t, EditMapping{{{0, 0}, {1, 2}, {2, 1}}}), std::invalid_argument);
}

TEST(MappingCost, PropertiesOnRandomMappings) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 300; ++i) {
    const MergeTree t1 = random_tree(4 + static_cast<int>(rng() % 5), rng);
    const MergeTree t2 = random_tree(4 + static_cast<int>(rng() % 5), rng);
    const EditMapping m = random_mapping(t1, t2, rng);
    const auto c = mapping_cost(t1, t2, m);
    EXPECT_NEAR(c.cost(), mapping_cost(t2, t1, m.transposed()).cost(), 1e-9);
    EXPECT_GE(c.cost() + 1e-9, std::abs(total_persistence(t1) - total_persistence(t2)));
    EXPECT_LE(c.cost(), total_persistence(t1) + total_persistence(t2) + 1e-9);
    if (t1.size() <= 8 && t2.size() <= 8) { EXPECT_LE(brute_force_distance(t1, t2).value, c.cost() + 1e-9); }
  }
}

// A mapping whose kept nodes form valid trees after deletions is realized by
// an explicit edit sequence: deletions in T1, relabels, then the inverse of
// the deletions in T2. The sequence costs exactly the mapping cost.
TEST(MappingCost, RealizedByEditSequences) {
  std::mt19937_64 rng(29);
  int realized = 0;
  for (int i = 0; i < 400; ++i) {
    const MergeTree t1 = random_tree(4 + static_cast<int>(rng() % 6), rng);
    const MergeTree t2 = random_tree(4 + static_cast<int>(rng() % 6), rng);
    const EditMapping m = random_mapping(t1, t2, rng);
    std::vector<bool> keep1(t1.size(), false), keep2(t2.size(), false);
    for (auto [a, b] : m.pairs) keep1[a] = keep2[b] = true;
    MergeTree core1, core2;
    std::vector<int> id1, id2;
    double deleted = 0.0, inserted = 0.0;
    try {
      deleted = sequence_cost(t1, deletion_sequence(t1, keep1, &core1, &id1));
      inserted = sequence_cost(t2, deletion_sequence(t2, keep2, &core2, &id2));
    } catch (const EditError&) {
      continue;
    }
    bool intact = true;
    for (auto [a, b] : m.pairs) intact = intact && id1[a] >= 0 && id2[b] >= 0;
    if (!intact) continue;  // a mapped node lost all but one child: needs interleaved inserts

    std::vector<EditOperation> relabels;
    for (auto [a, b] : m.pairs) {
      if (t1.is_root(a)) continue;
      const double want = core2.up_length(id2[b]);
      if (std::abs(core1.up_length(id1[a]) - want) > 0.0) relabels.push_back(Relabel{id1[a], want});
    }
    MergeTree relabeled;
    const double relabel = sequence_cost(core1, relabels, &relabeled);
    // The cores are isomorphic under the mapping with equal lengths now.
    for (auto [a, b] : m.pairs) {
      if (t1.is_root(a)) continue;
      EXPECT_NEAR(relabeled.up_length(id1[a]), core2.up_length(id2[b]), 1e-9);
    }
    EXPECT_NEAR(deleted + relabel + inserted, mapping_cost(t1, t2, m).cost(), 1e-9);
    ++realized;
  }
  EXPECT_GT(realized, 100);
}

TEST(BruteForce, Examples) {
  const MergeTree t = fig8_tree();
  const auto self = brute_force_distance(t, t);
  EXPECT_DOUBLE_EQ(self.value, 0.0);
  EXPECT_EQ(self.status, SolveStatus::optimal);
  EXPECT_EQ(self.witness.pairs.size(), static_cast<std::size_t>(t.size()));
  EXPECT_DOUBLE_EQ(brute_force_distance(MergeTree::empty(), t).value, total_persistence(t));
  EXPECT_DOUBLE_EQ(brute_force_distance(t, MergeTree::empty()).value, total_persistence(t));
}

TEST(BruteForce, GadgetDistances) {
  const int m = 3;
  const MergeTree g = base_gadget(m);
  for (int i = 1; i <= m; ++i) {
    EXPECT_NEAR(brute_force_distance(g, element_gadget(m, i)).value, 1.0, 1e-9);
    for (int j = 1; j <= m; ++j)
      if (i != j) { EXPECT_NEAR(brute_force_distance(element_gadget(m, i), element_gadget(m, j)).value, 2.0, 1e-9); }
  }
}

TEST(BruteForce, SizeCap) {
  const MergeTree big = random_tree(12, 1);
  EXPECT_THROW(brute_force_distance(big, big), SizeCapError);
}

TEST(BruteForce, DeterministicTieBreak) {
  // Two leaves of equal length: either matching is optimal; the witness is
  // the lexicographically smallest.
  const MergeTree t = scalars_from_lengths({-1, 0, 1, 1}, {0.0, 1.0, 2.0, 2.0});
  const auto r = brute_force_distance(t, t);
  EXPECT_EQ(r.witness.pairs, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {2, 2}, {3, 3}}));
}

TEST(BruteForce, MetricProperties) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 40; ++i) {
    std::vector<MergeTree> ts;
    const int sizes[] = {2, 4, 5, 6, 7};
    for (int k = 0; k < 3; ++k) ts.push_back(random_tree(sizes[rng() % 5], rng, 3.0, i % 2 == 0));
    const double ab = brute_force_distance(ts[0], ts[1]).value;
    const double ba = brute_force_distance(ts[1], ts[0]).value;
    const double bc = brute_force_distance(ts[1], ts[2]).value;
    const double ac = brute_force_distance(ts[0], ts[2]).value;
    EXPECT_EQ(ab, ba);
    EXPECT_LE(ac, ab + bc + 1e-9);
    for (double alpha : {0.5, 2.0}) {
      EXPECT_NEAR(brute_force_distance(scaled(ts[0], alpha), scaled(ts[1], alpha)).value, alpha * ab, 1e-9);
    }
  }
}
