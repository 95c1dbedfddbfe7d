#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "splitroa/compiler.hpp"
#include "splitroa/problem.hpp"
#include "splitroa/solver.hpp"

namespace splitroa {

/// Rebuilds the Gram matrices of every certificate for fixed v and w, so the
/// identities hold to the accuracy of a small well-posed SDP instead of the
/// accuracy of the full solve.
///
/// The Gram-free rows (facet equalities, divisibility identities) are first
/// met exactly by a minimum-norm change of v, w and the quotients. v and w
/// then receive the margin v += delta (T - t + 1) + eps phi_i and
/// w += delta (T + 2), where phi_i = -sum_k c_ik f_k over the state axes whose
/// dynamics do not involve u and c_i is the offset of cell i's centre. The
/// time part makes the Liouville, initial, terminal and w >= 0 conditions
/// strict by delta; the phi part makes facet conditions strict on the side
/// where h'f is active, and eps is small enough to keep the time margin. A
/// divisible facet's quotient absorbs the jump of phi. delta grows from 0 by
/// factors of ten until every certificate admits PSD Grams.
struct RepairOptions {
  double max_margin = 1e-2;
  /// Accepted primal residual of a certificate's own SDP, relative.
  double tol = 1e-12;
};

struct RepairReport {
  bool ok = false;
  double margin = 0.0;
  /// Certificates whose Grams could not be rebuilt at the final margin.
  std::vector<std::string> failed;
  /// c'x after the repair.
  double objective = 0.0;
  double seconds = 0.0;
};

/// Adds the margin above for a given delta.
void add_margin(const RoaProblem& problem, const DecisionLayout& layout, double delta, Eigen::VectorXd& x);

/// On success x holds the repaired point; on failure it is left unchanged.
RepairReport repair_certificates(const RoaProblem& problem, const CompiledProgram& program, Eigen::VectorXd& x,
                                 const RepairOptions& options = {});

}  // namespace splitroa
