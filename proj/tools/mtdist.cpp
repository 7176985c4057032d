#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mtdist/mtdist.hpp"

namespace fs = std::filesystem;
using namespace mtdist;

namespace {

enum Exit { ok = 0, parse_failure = 1, solver_failure = 2, partial = 3, size_cap = 4 };

struct CommonFlags {
  std::string backend = "builtin";
  std::string mps_solution;
  double epsilon = 0.0;
  double pair_budget = 0.0;
  long long node_budget = 0;
  int threads = 0;
  std::uint64_t seed = 1;
  std::string output;
  bool no_leaf_symmetry = false;
  bool no_root_symmetry = false;
  bool no_pruning = false;

  EncodeConfig config() const {
    EncodeConfig c;
    c.enable_leaf_symmetry = !no_leaf_symmetry;
    c.enable_root_symmetry = !no_root_symmetry;
    c.enable_pruning = !no_pruning;
    if (pair_budget > 0.0) {
      c.total_budget = pair_budget;
      c.initial_time_limit = std::min(c.initial_time_limit, pair_budget);
      c.recursion_time_limit = std::min(c.recursion_time_limit, pair_budget);
    }
    if (node_budget > 0) {
      c.deterministic_budget_mode = true;
      c.total_node_budget = node_budget;
      c.initial_node_budget = std::min(c.initial_node_budget, node_budget);
    }
    return c;
  }

  int thread_count() const {
    if (threads > 0) return threads;
    if (const char* env = std::getenv("MTDIST_THREADS")) {
      const int n = std::atoi(env);
      if (n > 0) return n;
    }
    return std::max(1U, std::thread::hardware_concurrency());
  }
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--backend", f.backend, "builtin or mps")->check(CLI::IsMember({"builtin", "mps"}));
  app->add_option("--mps-solution", f.mps_solution, "solution file to import with --backend mps");
  app->add_option("--epsilon", f.epsilon, "contract inner edges shorter than this fraction of the scalar range")
      ->check(CLI::Range(0.0, 0.999999));
  app->add_option("--pair-budget", f.pair_budget, "seconds per distance");
  app->add_option("--node-budget", f.node_budget, "search nodes per distance (deterministic mode)");
  app->add_option("--threads", f.threads, "worker threads (default: MTDIST_THREADS or all cores)");
  app->add_option("--seed", f.seed, "random seed");
  app->add_option("-o,--output", f.output, "output path");
  app->add_flag("--no-leaf-symmetry", f.no_leaf_symmetry);
  app->add_flag("--no-root-symmetry", f.no_root_symmetry);
  app->add_flag("--no-pruning", f.no_pruning);
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

MergeTree load_input(const std::string& path, double epsilon) {
  MergeTree t = load_tree(path);
  return epsilon > 0.0 ? epsilon_collapse(t, epsilon) : t;
}

nlohmann::json witness_json(const MergeTree& t1, const MergeTree& t2, const SolveResult& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (auto [a, b] : r.witness.pairs) pairs.push_back({a, b});
  nlohmann::json doc{{"value", r.value},
                     {"status", to_string(r.status)},
                     {"lower_bound", r.lower_bound},
                     {"iterations", r.stats.iterations},
                     {"seconds", r.stats.seconds},
                     {"pairs", pairs}};
  if (!r.witness.pairs.empty() && check_mapping(t1, t2, r.witness).empty()) {
    const auto cost = mapping_cost(t1, t2, r.witness);
    doc["relabel"] = cost.relabel_total;
    doc["deleted_t1"] = cost.deleted_total_t1;
    doc["inserted_t2"] = cost.inserted_total_t2;
    auto statuses = [](const std::vector<NodeStatus>& s) {
      nlohmann::json out = nlohmann::json::array();
      for (NodeStatus v : s) out.push_back(to_string(v));
      return out;
    };
    doc["nodes_t1"] = statuses(cost.status_t1);
    doc["nodes_t2"] = statuses(cost.status_t2);
  }
  return doc;
}

int cmd_compute(const std::string& a, const std::string& b, const CommonFlags& f) {
  MergeTree t1, t2;
  try {
    t1 = load_input(a, f.epsilon);
    t2 = load_input(b, f.epsilon);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return parse_failure;
  }
  Backend backend;
  if (f.backend == "mps") {
    if (f.mps_solution.empty()) {
      std::cerr << "error: --backend mps needs --mps-solution (use export-mps to write the model)\n";
      return parse_failure;
    }
    backend = Backend{BackendKind::mps_import, f.mps_solution};
  }
  SolveResult r;
  try {
    r = reencode_loop(t1, t2, f.config(), backend);
  } catch (const BackendError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return solver_failure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return solver_failure;
  }
  if (r.status == SolveStatus::infeasible_error) {
    std::cerr << "error: " << r.message << "\n";
    return solver_failure;
  }
  std::cout << format_value(r.value) << " " << to_string(r.status) << "\n";
  if (!f.output.empty()) {
    std::ofstream out(f.output);
    out << witness_json(t1, t2, r).dump(2) << "\n";
    if (!out) {
      std::cerr << "error: cannot write " << f.output << "\n";
      return solver_failure;
    }
    std::cout << "witness " << f.output << "\n";
  }
  return r.status == SolveStatus::optimal ? ok : partial;
}

std::vector<fs::path> matrix_inputs(const fs::path& source) {
  std::vector<fs::path> files;
  if (fs::is_directory(source)) {
    for (const auto& e : fs::directory_iterator(source))
      if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename() != "manifest.json")
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
  }
  std::ifstream in(source);
  if (!in) throw std::runtime_error("cannot read " + source.string());
  const auto doc = nlohmann::json::parse(in);
  if (!doc.contains("members") || !doc["members"].is_array())
    throw ParseError(source.string() + ": manifest needs a \"members\" array");
  for (const auto& m : doc["members"]) files.push_back(source.parent_path() / m.get<std::string>());
  return files;
}

int cmd_matrix(const std::string& source, const std::string& svg, const CommonFlags& f) {
  std::vector<MergeTree> trees;
  std::vector<std::string> names;
  try {
    for (const auto& p : matrix_inputs(source)) {
      trees.push_back(load_tree(p.string()));
      names.push_back(p.stem().string());
    }
    if (trees.size() < 2) throw std::invalid_argument("need at least two trees, found " + std::to_string(trees.size()));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return parse_failure;
  }
  if (f.backend != "builtin") {
    std::cerr << "error: matrix supports only the builtin backend\n";
    return parse_failure;
  }
  MatrixOptions options{f.config(), f.epsilon, f.thread_count()};
  DistanceMatrix m;
  try {
    m = compute_matrix(std::move(trees), std::move(names), options);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return solver_failure;
  }
  const fs::path csv = f.output.empty() ? fs::path("matrix.csv") : fs::path(f.output);
  const fs::path stem = csv.parent_path() / csv.stem();
  try {
    write_csv(m, csv.string());
    write_status_csv(m, stem.string() + ".status.csv");
    nlohmann::json meta{{"config", to_json(options.config)},
                        {"epsilon", options.epsilon},
                        {"threads", m.threads},
                        {"wall_seconds", m.wall_seconds}};
    std::ofstream(stem.string() + ".meta.json") << meta.dump(2) << "\n";
    if (!svg.empty()) write_svg(m, svg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return solver_failure;
  }
  for (int i = 0; i < m.size(); ++i)
    for (int j = i + 1; j < m.size(); ++j)
      if (m.cell_status(i, j) != CellStatus::optimal)
        std::cerr << m.names[i] << " vs " << m.names[j] << ": " << to_string(m.cell_status(i, j))
                  << (m.messages[i * m.size() + j].empty() ? "" : " (" + m.messages[i * m.size() + j] + ")") << "\n";
  std::cout << "wrote " << csv.string() << "\n";
  return m.complete() ? ok : partial;
}

struct GenParams {
  std::string kind;
  int m = 3;
  int n = 1;
  bool planted = true;
  int members = 20;
  double perturbation = -1.0;  // negative: kind default
  double swap = 1.0;
  double root = 1.0, a = 10.0, b = 6.0, c = 2.0;
  int nodes = 8;
  int count = 2;
  bool integer_lengths = false;
};

int cmd_gen(const GenParams& g, const CommonFlags& f) {
  const fs::path dir = f.output.empty() ? fs::path(".") : fs::path(f.output);
  try {
    fs::create_directories(dir);
    nlohmann::json manifest{{"kind", g.kind}};
    nlohmann::json members = nlohmann::json::array();
    auto emit = [&](const MergeTree& t, const std::string& name) {
      save_tree(t, (dir / name).string());
      members.push_back(name);
    };
    if (g.kind == "x3c") {
      const X3CInstance inst = sample_x3c(g.m, g.n, g.planted, f.seed);
      auto [t1, t2] = x3c_trees(inst);
      emit(t1, "t1.json");
      emit(t2, "t2.json");
      manifest["m"] = inst.m;
      manifest["sets"] = inst.sets;
      manifest["planted_cover"] = g.planted;
      manifest["seed"] = f.seed;
      manifest["threshold"] = 3 * inst.n() - 2 * inst.k();
    } else if (g.kind == "vertical" || g.kind == "horizontal") {
      EnsembleSpec spec = default_ensemble_spec(g.kind == "vertical" ? EnsembleKind::vertical : EnsembleKind::horizontal);
      spec.member_count = g.members;
      spec.seed = f.seed;
      spec.swap_length = g.swap;
      if (g.perturbation >= 0.0) spec.perturbation = g.perturbation;
      const auto trees = make_ensemble(spec);
      for (std::size_t i = 0; i < trees.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "member_%02zu.json", i);
        emit(trees[i], name);
      }
      manifest["spec"] = to_json(spec);
    } else if (g.kind == "swap") {
      auto [t1, t2] = make_saddle_swap_pair(SaddleSwapLengths{g.root, g.swap, g.a, g.b, g.c});
      emit(t1, "t1.json");
      emit(t2, "t2.json");
      manifest["lengths"] = {{"root", g.root}, {"swap", g.swap}, {"a", g.a}, {"b", g.b}, {"c", g.c}};
    } else {
      std::mt19937_64 rng(f.seed);
      for (int i = 0; i < g.count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "tree_%02d.json", i);
        emit(random_tree(g.nodes, rng, 4.0, g.integer_lengths), name);
      }
      manifest["nodes"] = g.nodes;
      manifest["seed"] = f.seed;
    }
    manifest["members"] = members;
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return parse_failure;
  }
  std::cout << "wrote " << (dir / "manifest.json").string() << "\n";
  return ok;
}

int cmd_oracle(const std::string& a, const std::string& b, int max_nodes, const CommonFlags& f) {
  MergeTree t1, t2;
  try {
    t1 = load_input(a, f.epsilon);
    t2 = load_input(b, f.epsilon);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return parse_failure;
  }
  try {
    const SolveResult r = brute_force_distance(t1, t2, max_nodes);
    std::cout << format_value(r.value) << "\n";
  } catch (const SizeCapError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return size_cap;
  }
  return ok;
}

int cmd_export(const std::string& a, const std::string& b, const CommonFlags& f) {
  MergeTree t1, t2;
  try {
    t1 = load_input(a, f.epsilon);
    t2 = load_input(b, f.epsilon);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return parse_failure;
  }
  const std::string path = f.output.empty() ? "model.mps" : f.output;
  try {
    const SolveResult r = reencode_loop(t1, t2, f.config(), Backend{BackendKind::mps_export, path});
    std::cout << "wrote " << path << " (upper bound " << format_value(r.value) << ")\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return solver_failure;
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edit distance between merge trees"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::string tree_a, tree_b, source, svg;
  int max_nodes = 10;
  GenParams gen;

  auto* compute = app.add_subcommand("compute", "distance between two tree files");
  compute->add_option("tree_a", tree_a)->required();
  compute->add_option("tree_b", tree_b)->required();
  add_common(compute, flags);

  auto* matrix = app.add_subcommand("matrix", "all pairwise distances of a directory or manifest");
  matrix->add_option("source", source)->required();
  matrix->add_option("--svg", svg, "also write a heatmap");
  add_common(matrix, flags);

  auto* generate = app.add_subcommand("gen", "write generated trees and a manifest");
  generate->add_option("kind", gen.kind)->required()->check(
      CLI::IsMember({"x3c", "vertical", "horizontal", "swap", "random"}));
  generate->add_option("--m", gen.m, "x3c universe size");
  generate->add_option("--n", gen.n, "x3c set count");
  generate->add_flag("--planted,!--no-cover", gen.planted, "x3c: plant an exact cover (default) or draw a no-cover instance");
  generate->add_option("--members", gen.members, "ensemble size");
  generate->add_option("--perturbation", gen.perturbation, "ensemble noise amplitude");
  generate->add_option("--swap", gen.swap, "swap edge length");
  generate->add_option("--root-length", gen.root);
  generate->add_option("--a", gen.a);
  generate->add_option("--b", gen.b);
  generate->add_option("--c", gen.c);
  generate->add_option("--nodes", gen.nodes, "random tree size");
  generate->add_option("--count", gen.count, "number of random trees");
  generate->add_flag("--integer-lengths", gen.integer_lengths);
  add_common(generate, flags);

  auto* oracle = app.add_subcommand("oracle", "brute-force distance for small trees");
  oracle->add_option("tree_a", tree_a)->required();
  oracle->add_option("tree_b", tree_b)->required();
  oracle->add_option("--max-nodes", max_nodes, "size cap");
  add_common(oracle, flags);

  auto* export_mps_cmd = app.add_subcommand("export-mps", "write the integer program in MPS format");
  export_mps_cmd->add_option("tree_a", tree_a)->required();
  export_mps_cmd->add_option("tree_b", tree_b)->required();
  add_common(export_mps_cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : parse_failure;
  }

  if (compute->parsed()) return cmd_compute(tree_a, tree_b, flags);
  if (matrix->parsed()) return cmd_matrix(source, svg, flags);
  if (generate->parsed()) return cmd_gen(gen, flags);
  if (oracle->parsed()) return cmd_oracle(tree_a, tree_b, max_nodes, flags);
  if (export_mps_cmd->parsed()) return cmd_export(tree_a, tree_b, flags);
  return parse_failure;
}
