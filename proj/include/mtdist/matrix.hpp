#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "merge_tree.hpp"
#include "reencode.hpp"

namespace mtdist {

enum class CellStatus { optimal, upper_bound_only, error };

inline const char* to_string(CellStatus s) {
  switch (s) {
    case CellStatus::optimal: return "optimal";
    case CellStatus::upper_bound_only: return "upper_bound_only";
    case CellStatus::error: return "error";
  }
  return "?";
}

struct DistanceMatrix {
  std::vector<std::string> names;
  std::vector<double> values;  // row-major, symmetric
  std::vector<CellStatus> status;
  std::vector<std::string> messages;  // per cell, set for errors
  double wall_seconds = 0.0;
  int threads = 1;

  int size() const { return static_cast<int>(names.size()); }
  double value(int i, int j) const { return values[static_cast<std::size_t>(i) * names.size() + j]; }
  CellStatus cell_status(int i, int j) const { return status[static_cast<std::size_t>(i) * names.size() + j]; }
  bool complete() const {
    return std::all_of(status.begin(), status.end(), [](CellStatus s) { return s == CellStatus::optimal; });
  }
};

struct MatrixOptions {
  EncodeConfig config;
  double epsilon = 0.0;  // relative epsilon_collapse applied to every tree
  int threads = 1;
};

inline nlohmann::json to_json(const EncodeConfig& c) {
  return nlohmann::json{{"leaf_symmetry", c.enable_leaf_symmetry},
                        {"root_symmetry", c.enable_root_symmetry},
                        {"pruning", c.enable_pruning},
                        {"initial_time_limit", c.initial_time_limit},
                        {"backoff_factor", c.backoff_factor},
                        {"total_budget", c.total_budget},
                        {"deterministic_budget_mode", c.deterministic_budget_mode},
                        {"initial_node_budget", c.initial_node_budget},
                        {"total_node_budget", c.total_node_budget}};
}

/// Runs `task(k)` for k in [0, count) on a pool of `threads` workers.
template <class Task>
void parallel_for(std::size_t count, int threads, Task&& task) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t k = next++; k < count; k = next++) task(k);
  };
  if (workers == 1) {
    work();
    return;
  }
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
}

/// All pairwise distances. Each unordered pair is solved once; a pair that
/// runs out of budget keeps its best upper bound and is marked.
inline DistanceMatrix compute_matrix(std::vector<MergeTree> trees, std::vector<std::string> names,
                                     const MatrixOptions& options) {
  if (trees.size() != names.size()) throw std::invalid_argument("matrix: names and trees differ in count");
  if (trees.size() < 2) throw std::invalid_argument("matrix: need at least two trees");
  options.config.validate();
  for (std::size_t i = 0; i < trees.size(); ++i) {
    require_valid(trees[i], names[i]);
    if (options.epsilon > 0.0) trees[i] = epsilon_collapse(trees[i], options.epsilon);
  }
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = trees.size();
  DistanceMatrix out;
  out.names = std::move(names);
  out.values.assign(n * n, 0.0);
  out.status.assign(n * n, CellStatus::optimal);
  out.messages.assign(n * n, {});
  out.threads = std::max(1, options.threads);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  parallel_for(pairs.size(), out.threads, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    double value = std::numeric_limits<double>::quiet_NaN();
    CellStatus status = CellStatus::error;
    std::string message;
    try {
      const SolveResult r = reencode_loop(trees[i], trees[j], options.config);
      value = r.value;
      status = r.status == SolveStatus::optimal ? CellStatus::optimal : CellStatus::upper_bound_only;
    } catch (const BackendError& e) {
      value = e.partial().value;
      status = CellStatus::upper_bound_only;
      message = e.what();
    } catch (const std::exception& e) {
      message = e.what();
    }
    // Distinct cells per task, so no locking is needed.
    for (auto [r, c] : {std::pair{i, j}, std::pair{j, i}}) {
      out.values[r * n + c] = value;
      out.status[r * n + c] = status;
      out.messages[r * n + c] = message;
    }
  });
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

namespace detail {

inline std::string full_precision(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class Cell>
void write_table(const DistanceMatrix& m, const std::string& path, Cell&& cell) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "name";
  for (const auto& s : m.names) out << "," << s;
  out << "\n";
  for (int i = 0; i < m.size(); ++i) {
    out << m.names[i];
    for (int j = 0; j < m.size(); ++j) out << "," << cell(i, j);
    out << "\n";
  }
  if (!out) throw std::runtime_error("error while writing " + path);
}

inline std::string xml_escape(const std::string& s) {
  std::string r;
  for (char c : s) {
    switch (c) {
      case '&': r += "&amp;"; break;
      case '<': r += "&lt;"; break;
      case '>': r += "&gt;"; break;
      case '"': r += "&quot;"; break;
      default: r += c;
    }
  }
  return r;
}

// 256-step ramp interpolated between viridis anchor colors.
inline std::array<int, 3> ramp_color(int step) {
  static constexpr std::array<std::array<double, 3>, 9> anchors{{{68, 1, 84},
                                                                   {71, 44, 122},
                                                                   {59, 81, 139},
                                                                   {44, 113, 142},
                                                                   {33, 144, 141},
                                                                   {39, 173, 129},
                                                                   {92, 200, 99},
                                                                   {170, 220, 50},
                                                                   {253, 231, 37}}};
  const double t = std::clamp(step, 0, 255) / 255.0 * (anchors.size() - 1);
  const auto lo = std::min(static_cast<std::size_t>(t), anchors.size() - 2);
  const double f = t - static_cast<double>(lo);
  std::array<int, 3> rgb{};
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<int>(std::lround(anchors[lo][c] * (1.0 - f) + anchors[lo + 1][c] * f));
  return rgb;
}

}  // namespace detail

/// "name,<names…>" header and full-precision values.
inline void write_csv(const DistanceMatrix& m, const std::string& path) {
  detail::write_table(m, path, [&](int i, int j) { return detail::full_precision(m.value(i, j)); });
}

inline void write_status_csv(const DistanceMatrix& m, const std::string& path) {
  detail::write_table(m, path, [&](int i, int j) { return std::string(to_string(m.cell_status(i, j))); });
}

/// Heatmap with one rect per cell and a linear scale over [0, max].
inline void write_svg(const DistanceMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  double vmax = 0.0;
  for (double v : m.values)
    if (std::isfinite(v)) vmax = std::max(vmax, v);
  const int cell = 24, margin = 120, n = m.size();
  const int side = margin + n * cell + 10;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << side << "\" height=\"" << side << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int i = 0; i < n; ++i) {
    const std::string label = detail::xml_escape(m.names[i]);
    out << "<text x=\"" << margin - 4 << "\" y=\"" << margin + i * cell + cell * 0.7
        << "\" font-size=\"11\" text-anchor=\"end\">" << label << "</text>\n";
    out << "<text transform=\"translate(" << margin + i * cell + cell * 0.7 << "," << margin - 4
        << ") rotate(-90)\" font-size=\"11\">" << label << "</text>\n";
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double v = m.value(i, j);
      std::string fill = "#999999";
      if (std::isfinite(v)) {
        const int step = vmax > 0.0 ? static_cast<int>(std::lround(v / vmax * 255.0)) : 0;
        const auto rgb = detail::ramp_color(step);
        char buf[8];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
        fill = buf;
      }
      out << "<rect x=\"" << margin + j * cell << "\" y=\"" << margin + i * cell << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"" << fill << "\"><title>" << detail::full_precision(v) << " "
          << to_string(m.cell_status(i, j)) << "</title></rect>\n";
    }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("error while writing " + path);
}

}  // namespace mtdist
