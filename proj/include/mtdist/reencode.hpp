#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "edit_model.hpp"
#include "ip.hpp"
#include "solve.hpp"

namespace mtdist {

enum class BackendKind { builtin_bnb, mps_export, mps_import };

struct Backend {
  BackendKind kind = BackendKind::builtin_bnb;
  std::string path;  // MPS output path or solution input path
};

/// Raised when a backend fails; carries the iterations run so far.
class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, SolveResult partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const SolveResult& partial() const { return partial_; }

 private:
  SolveResult partial_;
};

namespace detail {

inline SolveResult reencode_loop_ordered(const MergeTree& t1, const MergeTree& t2, const EncodeConfig& config,
                                         const Backend& backend) {
  require_valid(t1, "T1");
  require_valid(t2, "T2");
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&]() { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  SolveResult result;
  EditMapping best = greedy_mapping(t1, t2);
  double upper = mapping_cost(t1, t2, best).cost();
  double lower = std::abs(total_persistence(t1) - total_persistence(t2));
  long long nodes_used = 0;

  std::optional<PruningContext> context;
  if (config.enable_pruning) context.emplace(t1, t2, config);
  std::optional<IpInstance> instance;

  auto finish = [&](SolveStatus status) {
    result.witness = best;
    result.value = mapping_cost(t1, t2, best).cost();
    result.status = status;
    result.lower_bound = status == SolveStatus::optimal ? result.value : std::min(lower, result.value);
    result.stats.seconds = elapsed();
    result.stats.nodes = nodes_used;
    return result;
  };

  for (int iteration = 0;; ++iteration) {
    if (!instance) instance = encode(t1, t2, config, upper, context ? &*context : nullptr);
    const double factor = std::pow(config.backoff_factor, iteration);
    IterationRecord rec;
    rec.variables = instance->variable_count();
    rec.pm_variables = instance->count(VarRole::pm);
    SearchLimits limits;
    if (config.deterministic_budget_mode) {
      const double want = static_cast<double>(config.initial_node_budget) * factor;
      const long long left = config.total_node_budget - nodes_used;
      limits.node_budget = std::max(1LL, static_cast<long long>(std::min(want, static_cast<double>(left))));
      rec.node_limit = limits.node_budget;
    } else {
      limits.time_limit = std::max(1e-3, std::min(config.initial_time_limit * factor, config.total_budget - elapsed()));
      rec.time_limit = limits.time_limit;
    }
    ++result.stats.iterations;

    if (backend.kind == BackendKind::mps_export) {
      try {
        export_mps(*instance, backend.path);
      } catch (const std::exception& e) {
        throw BackendError(e.what(), finish(SolveStatus::upper_bound_only));
      }
      rec.upper_bound = upper;
      rec.lower_bound = lower;
      result.stats.log.push_back(rec);
      return finish(SolveStatus::upper_bound_only);
    }
    if (backend.kind == BackendKind::mps_import) {
      SolveResult imported;
      try {
        imported = import_solution(*instance, backend.path);
      } catch (const std::exception& e) {
        throw BackendError(e.what(), finish(SolveStatus::upper_bound_only));
      }
      if (imported.status == SolveStatus::infeasible_error) {
        imported.stats = result.stats;
        return imported;
      }
      imported.stats.iterations = result.stats.iterations;
      imported.stats.seconds = elapsed();
      rec.upper_bound = imported.value;
      rec.lower_bound = imported.lower_bound;
      imported.stats.log = result.stats.log;
      imported.stats.log.push_back(rec);
      return imported;
    }

    const SolveResult run = solve_builtin(*instance, limits, best);
    nodes_used += run.stats.nodes;
    bool improved = false;
    if (run.value < upper - kTolerance) {
      upper = run.value;
      best = run.witness;
      improved = true;
    }
    if (run.status == SolveStatus::optimal) lower = std::max(lower, upper);
    else lower = std::max(lower, std::min(run.lower_bound, upper));
    rec.upper_bound = upper;
    rec.lower_bound = lower;
    rec.seconds = run.stats.seconds;
    result.stats.log.push_back(rec);

    if (lower >= upper - kTolerance) return finish(SolveStatus::optimal);
    const bool out_of_budget = config.deterministic_budget_mode ? nodes_used >= config.total_node_budget
                                                                : elapsed() >= config.total_budget;
    if (out_of_budget) return finish(SolveStatus::upper_bound_only);
    if (improved) instance.reset();
  }
}

}  // namespace detail

/// Solves with growing limits, re-encoding whenever the incumbent improves
/// so that pruning works against the tighter bound.
inline SolveResult reencode_loop(const MergeTree& t1, const MergeTree& t2, const EncodeConfig& config,
                                 const Backend& backend = {}) {
  require_valid(t1, "T1");
  require_valid(t2, "T2");
  // A fixed operand order repeats the same floating point operations when
  // the trees are swapped, so the distance is exactly symmetric. MPS files
  // name variables by side and keep the caller's order.
  if (backend.kind != BackendKind::builtin_bnb || !detail::canonical_less(t2, t1))
    return detail::reencode_loop_ordered(t1, t2, config, backend);
  SolveResult r = detail::reencode_loop_ordered(t2, t1, config, backend);
  r.witness = r.witness.transposed();
  return r;
}

}  // namespace mtdist
