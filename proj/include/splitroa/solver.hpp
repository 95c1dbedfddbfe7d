#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "splitroa/sdp.hpp"

namespace splitroa {

enum class SolveStatus { kOptimal, kNearOptimal, kInfeasible, kUnbounded, kNumericalFailure };

/// "optimal", "near-optimal", "infeasible", "unbounded", "numerical-failure".
const char* status_name(SolveStatus s);

struct SolveOptions {
  double tol_feas = 1e-8;
  double tol_gap = 1e-8;
  int max_iters = 200;
  std::string backend = "native";
  /// Per-iteration progress lines, when set.
  std::ostream* log = nullptr;
};

struct SolveReport {
  SolveStatus status = SolveStatus::kNumericalFailure;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  double seconds = 0.0;
  int iterations = 0;
  double primal_infeasibility = 0.0;  // ||b - Ax|| / (1 + ||b||)
  double dual_infeasibility = 0.0;    // ||c - A'y - z|| / (1 + ||c||)
  double relative_gap = 0.0;          // |c'x - b'y| / (1 + |c'x|)
  std::string backend;
  std::string message;

  bool ok() const { return status == SolveStatus::kOptimal || status == SolveStatus::kNearOptimal; }
};

/// Solves min c'x s.t. Ax = b, x in K with the selected backend. Throws
/// std::invalid_argument for an unknown backend or a malformed problem.
SolveReport solve(const SdpProblem& sdp, const SolveOptions& options = {});

std::vector<std::string> available_backends();

/// Smallest eigenvalue of each PSD block of x relative to the block's
/// Frobenius norm (positive means strictly inside); nonnegative blocks are
/// treated as 1x1 PSD blocks. Returns the minimum over blocks, or 0 if none.
double min_relative_eigenvalue(const SdpProblem& sdp, const Eigen::VectorXd& x);

}  // namespace splitroa
