#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mtdist/datagen.hpp"
#include "mtdist/matrix.hpp"

using namespace mtdist;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("mtdist_matrix_" + name)).string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> names_for(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("t" + std::to_string(i));
  return out;
}

}  // namespace

TEST(Matrix, IdenticalTreesGiveZeros) {
  const MergeTree t = random_tree(9, 3);
  const auto m = compute_matrix({t, t, t}, names_for(3), MatrixOptions{});
  EXPECT_TRUE(m.complete());
  for (double v : m.values) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(Matrix, SymmetricAndMatchesPairwise) {
  std::vector<MergeTree> trees;
  for (int i = 0; i < 5; ++i) trees.push_back(random_tree(4 + i, 40 + i));
  MatrixOptions opt;
  opt.threads = 3;
  const auto m = compute_matrix(trees, names_for(trees.size()), opt);
  ASSERT_TRUE(m.complete());
  for (int i = 0; i < m.size(); ++i) {
    EXPECT_DOUBLE_EQ(m.value(i, i), 0.0);
    for (int j = 0; j < m.size(); ++j) {
      EXPECT_DOUBLE_EQ(m.value(i, j), m.value(j, i));
      if (i < j) { EXPECT_NEAR(m.value(i, j), reencode_loop(trees[i], trees[j], EncodeConfig{}).value, 1e-9); }
    }
  }
}

TEST(Matrix, ThreadCountDoesNotChangeValues) {
  std::vector<MergeTree> trees = make_ensemble(default_ensemble_spec(EnsembleKind::horizontal));
  trees.resize(6);
  MatrixOptions one, many;
  many.threads = 4;
  EXPECT_EQ(compute_matrix(trees, names_for(6), one).values, compute_matrix(trees, names_for(6), many).values);
}

TEST(Matrix, BudgetExhaustionIsMarked) {
  MatrixOptions opt;
  opt.config.deterministic_budget_mode = true;
  opt.config.initial_node_budget = 1;
  opt.config.total_node_budget = 1;
  X3CInstance inst;
  inst.m = 6;
  inst.sets = {{1, 2, 3}, {1, 4, 5}, {2, 4, 6}};
  const auto [t1, t2] = x3c_trees(inst);
  const auto m = compute_matrix({t1, t2}, names_for(2), opt);
  EXPECT_EQ(m.cell_status(0, 1), CellStatus::upper_bound_only);
  EXPECT_TRUE(std::isfinite(m.value(0, 1)));
  EXPECT_FALSE(m.complete());
}

TEST(Matrix, InputErrors) {
  const MergeTree t = random_tree(4, 1);
  EXPECT_THROW(compute_matrix({t}, names_for(1), MatrixOptions{}), std::invalid_argument);
  EXPECT_THROW(compute_matrix({t, t}, names_for(3), MatrixOptions{}), std::invalid_argument);
  const MergeTree bad({0.0, 1.0, 2.0}, {-1, 0, 0});
  EXPECT_THROW(compute_matrix({t, bad}, names_for(2), MatrixOptions{}), std::invalid_argument);
}

TEST(Matrix, CsvAndStatusFiles) {
  const auto m = compute_matrix({random_tree(5, 1), random_tree(6, 2)}, {"a", "b"}, MatrixOptions{});
  const std::string csv = temp_path("m.csv"), status = temp_path("m.status.csv");
  write_csv(m, csv);
  write_status_csv(m, status);
  const std::string text = read_file(csv);
  EXPECT_EQ(text.rfind("name,a,b\na,0,", 0), 0U) << text;
  // Full precision survives a text round trip.
  const auto comma = text.find(',', text.find("\na,") + 3);
  const auto eol = text.find('\n', comma);
  EXPECT_EQ(std::stod(text.substr(comma + 1, eol - comma - 1)), m.value(0, 1));
  EXPECT_EQ(read_file(status), "name,a,b\na,optimal,optimal\nb,optimal,optimal\n");
  std::remove(csv.c_str());
  std::remove(status.c_str());
}

TEST(Matrix, SvgHasOneRectPerCell) {
  const auto m =
      compute_matrix({random_tree(5, 1), random_tree(6, 2), random_tree(4, 3)}, {"a<1>", "b", "c"}, MatrixOptions{});
  const std::string path = temp_path("m.svg");
  write_svg(m, path);
  const std::string svg = read_file(path);
  std::size_t titles = 0;
  for (auto pos = svg.find("<title>"); pos != std::string::npos; pos = svg.find("<title>", pos + 1)) ++titles;
  EXPECT_EQ(titles, 9U);
  EXPECT_NE(svg.find("a&lt;1&gt;"), std::string::npos);
  // Zero diagonal maps to the bottom of the ramp.
  EXPECT_NE(svg.find("#440154"), std::string::npos);
  std::remove(path.c_str());
}

TEST(Matrix, RampEndpoints) {
  EXPECT_EQ(detail::ramp_color(0), (std::array<int, 3>{68, 1, 84}));
  EXPECT_EQ(detail::ramp_color(255), (std::array<int, 3>{253, 231, 37}));
}
