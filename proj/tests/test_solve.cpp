#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "mtdist/datagen.hpp"
#include "mtdist/reencode.hpp"
#include "mtdist/solve.hpp"

using namespace mtdist;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("mtdist_solve_" + name)).string();
}

std::pair<MergeTree, MergeTree> random_pair(std::mt19937_64& rng) {
  const int sizes[] = {2, 4, 5, 6, 7, 8};
  MergeTree a = random_tree(sizes[rng() % 6], rng, 4.0, rng() % 3 == 0);
  MergeTree b = random_tree(sizes[rng() % 6], rng, 4.0, rng() % 3 == 0);
  return {a, b};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Greedy, IsValidAndNoWorseThanRootsOnly) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    auto [t1, t2] = random_pair(rng);
    const EditMapping g = greedy_mapping(t1, t2);
    EXPECT_TRUE(check_mapping(t1, t2, g).empty());
    EXPECT_LE(mapping_cost(t1, t2, g).cost(), total_persistence(t1) + total_persistence(t2) + 1e-12);
  }
}

TEST(SolveBuiltin, IdenticalTrees) {
  const MergeTree t = random_tree(9, 4);
  const auto r = solve_builtin(t, t, {});
  EXPECT_EQ(r.status, SolveStatus::optimal);
  EXPECT_DOUBLE_EQ(r.value, 0.0);
  EXPECT_DOUBLE_EQ(r.lower_bound, 0.0);
}

TEST(SolveBuiltin, MatchesOracle) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 150; ++i) {
    auto [t1, t2] = random_pair(rng);
    const double expected = brute_force_distance(t1, t2).value;
    const auto direct = solve_builtin(t1, t2, {});
    EXPECT_NEAR(direct.value, expected, 1e-9);
    const IpInstance ip = encode(t1, t2, EncodeConfig{}, mapping_cost(t1, t2, greedy_mapping(t1, t2)).cost());
    const auto via_ip = solve_builtin(ip, {}, greedy_mapping(t1, t2));
    EXPECT_EQ(via_ip.status, SolveStatus::optimal);
    EXPECT_NEAR(via_ip.value, expected, 1e-9);
    EXPECT_NEAR(mapping_cost(t1, t2, via_ip.witness).cost(), via_ip.value, 1e-9);
  }
}

TEST(SolveBuiltin, GadgetPair) {
  const auto r = solve_builtin(element_gadget(5, 2), element_gadget(5, 3), {});
  EXPECT_EQ(r.status, SolveStatus::optimal);
  EXPECT_NEAR(r.value, 2.0, 1e-9);
}

TEST(SolveBuiltin, BudgetedResultIsConsistent) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) {
    const MergeTree t1 = random_tree(14, rng), t2 = random_tree(14, rng);
    const auto r = solve_builtin(t1, t2, SearchLimits{5, 0.0});
    EXPECT_LE(r.lower_bound, r.value + 1e-9);
    EXPECT_NEAR(mapping_cost(t1, t2, r.witness).cost(), r.value, 1e-9);
    const auto full = solve_builtin(t1, t2, {});
    EXPECT_LE(r.lower_bound, full.value + 1e-9);
    EXPECT_GE(r.value, full.value - 1e-9);
  }
}

TEST(DecideThreshold, Cases) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 60; ++i) {
    auto [t1, t2] = random_pair(rng);
    const double opt = brute_force_distance(t1, t2).value;
    EXPECT_EQ(decide_threshold(t1, t2, total_persistence(t1) + total_persistence(t2), {}).answer, Decision::yes);
    const auto at = decide_threshold(t1, t2, opt, {});
    EXPECT_EQ(at.answer, Decision::yes);
    EXPECT_LE(mapping_cost(t1, t2, at.witness).cost(), opt + 1e-9);
    if (opt > 1e-6) { EXPECT_EQ(decide_threshold(t1, t2, opt - 1e-6, {}).answer, Decision::no); }
  }
  EXPECT_THROW(decide_threshold(MergeTree::empty(), MergeTree::empty(), -1.0, {}), std::invalid_argument);
}

TEST(DecideThreshold, NoCoverInstance) {
  X3CInstance inst;
  inst.m = 6;
  inst.sets = {{1, 2, 3}, {1, 4, 5}};  // element 6 is never covered
  ASSERT_FALSE(has_exact_cover(inst));
  const auto [t1, t2] = x3c_trees(inst);
  const auto d = decide_threshold(t1, t2, 3 * inst.n() - 2 * inst.k(), {});
  EXPECT_EQ(d.answer, Decision::no);
  EXPECT_GT(d.lower_bound, 3 * inst.n() - 2 * inst.k() + 1e-6);
}

TEST(DecideThreshold, UnknownWhenBudgetRunsOut) {
  X3CInstance inst;
  inst.m = 6;
  inst.sets = {{1, 2, 3}, {1, 4, 5}, {2, 4, 6}};
  const auto [t1, t2] = x3c_trees(inst);
  const auto d = decide_threshold(t1, t2, 3 * inst.n() - 2 * inst.k(), SearchLimits{1, 0.0});
  EXPECT_NE(d.answer, Decision::yes);
}

TEST(Mps, ExportFormat) {
  const MergeTree t({0.0, 1.0}, {-1, 0});
  const IpInstance ip = encode(t, t, EncodeConfig{});
  const std::string path = temp_path("format.mps");
  export_mps(ip, path);
  const std::string text = read_file(path);
  for (const char* section : {"NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA", "'INTORG'", "'INTEND'"})
    EXPECT_NE(text.find(section), std::string::npos) << section;
  EXPECT_NE(text.find("* OBJCONST 2"), std::string::npos);
  EXPECT_NE(text.find("* VAR X0000001 m_0_0"), std::string::npos);
  // Every bound line caps a variable at 1.
  std::istringstream lines(text);
  std::string line;
  int bounds = 0;
  while (std::getline(lines, line))
    if (line.rfind(" UP BND", 0) == 0) ++bounds;
  EXPECT_EQ(static_cast<std::size_t>(bounds), ip.variable_count());
  std::remove(path.c_str());
}

TEST(Mps, HandSolvedTwoNodeInstance) {
  const MergeTree t({0.0, 1.0}, {-1, 0});
  const IpInstance ip = encode(t, t, EncodeConfig{});
  std::vector<double> x(ip.variable_count(), 0.0);
  x[ip.m_var(0, 0)] = 1.0;
  x[ip.m_var(1, 1)] = 1.0;
  x[ip.find_variable("p1_0_1")] = 1.0;
  x[ip.find_variable("p2_0_1")] = 1.0;
  x[ip.find_variable("pm_0_1_0_1")] = 1.0;
  const std::string path = temp_path("hand.sol");
  write_solution(ip, x, path, true);
  const auto r = import_solution(ip, path);
  EXPECT_EQ(r.status, SolveStatus::optimal);
  EXPECT_DOUBLE_EQ(r.value, 0.0);
  std::remove(path.c_str());
}

TEST(Mps, ImportErrors) {
  const MergeTree t({0.0, 1.0}, {-1, 0});
  const IpInstance ip = encode(t, t, EncodeConfig{});
  const std::string path = temp_path("bad.sol");

  std::ofstream(path) << "m_0_0 1\n";
  try {
    import_solution(ip, path);
    FAIL() << "truncated file accepted";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("missing variable m_1_1"), std::string::npos) << e.what();
  }

  std::ofstream(path) << "nonsense 1\n";
  EXPECT_THROW(import_solution(ip, path), ParseError);

  // Everything zero: the root pair row is violated.
  {
    std::ofstream out(path);
    for (std::size_t k = 0; k < ip.variable_count(); ++k) out << detail::mps_var(k) << " 0\n";
  }
  const auto r = import_solution(ip, path);
  EXPECT_EQ(r.status, SolveStatus::infeasible_error);
  EXPECT_NE(r.message.find("root_pair"), std::string::npos) << r.message;
  std::remove(path.c_str());
}

TEST(Mps, RoundTripThroughBackends) {
  std::mt19937_64 rng(13);
  const std::string model = temp_path("rt.mps");
  const std::string sol = temp_path("rt.sol");
  for (int i = 0; i < 10; ++i) {
    auto [t1, t2] = random_pair(rng);
    const auto builtin = reencode_loop(t1, t2, EncodeConfig{});
    ASSERT_EQ(builtin.status, SolveStatus::optimal);
    const auto exported = reencode_loop(t1, t2, EncodeConfig{}, Backend{BackendKind::mps_export, model});
    EXPECT_EQ(exported.status, SolveStatus::upper_bound_only);
    // The exported instance is the first one the loop encodes.
    const IpInstance ip = encode(t1, t2, EncodeConfig{}, mapping_cost(t1, t2, greedy_mapping(t1, t2)).cost());
    write_solution(ip, assignment_from_mapping(ip, builtin.witness), sol, true);
    const auto imported = reencode_loop(t1, t2, EncodeConfig{}, Backend{BackendKind::mps_import, sol});
    EXPECT_EQ(imported.status, SolveStatus::optimal);
    EXPECT_NEAR(imported.value, builtin.value, 1e-9);
  }
  std::remove(model.c_str());
  std::remove(sol.c_str());
}

TEST(Mps, MissingFileIsBackendError) {
  const MergeTree t = random_tree(4, 1);
  EXPECT_THROW(reencode_loop(t, t, EncodeConfig{}, Backend{BackendKind::mps_import, "/nonexistent/x.sol"}),
               BackendError);
}

TEST(ReencodeLoop, ExactlySymmetric) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    auto [t1, t2] = random_pair(rng);
    const auto ab = reencode_loop(t1, t2, EncodeConfig{});
    const auto ba = reencode_loop(t2, t1, EncodeConfig{});
    EXPECT_EQ(ab.value, ba.value);
    EXPECT_EQ(ab.witness, ba.witness.transposed());
    EXPECT_NEAR(mapping_cost(t1, t2, ab.witness).cost(), ab.value, 1e-9);
  }
}
