#pragma once

#include <optional>
#include <ostream>
#include <string>

#include <Eigen/Dense>

#include "splitroa/compiler.hpp"
#include "splitroa/problem.hpp"
#include "splitroa/repair.hpp"
#include "splitroa/solver.hpp"

namespace splitroa {

struct RunOptions {
  CompileOptions compile;
  SolveOptions solve;
  /// Rebuild the Grams after the solve so the identities hold to ~1e-12.
  bool repair = true;
  RepairOptions repair_options;
  /// Also write the compiled program as CBF to this stream.
  std::ostream* dump_sdp = nullptr;
};

/// One compile, solve and repair of a problem with its partition attached.
struct RunResult {
  CompiledProgram program;
  SolveReport report;
  std::optional<RepairReport> repair;
  /// The solver's point, or the repaired point when the repair succeeded.
  Eigen::VectorXd x;
  /// c'x at `x`.
  double objective = 0.0;
  std::size_t nnz = 0;
  double compile_seconds = 0.0;
  double solve_seconds = 0.0;
  double repair_seconds = 0.0;

  bool ok() const { return report.ok(); }
};

RunResult run_problem(const RoaProblem& problem, const RunOptions& options = {});

}  // namespace splitroa
