#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace splitroa {

/// One block of the cone K. Free blocks hold unconstrained variables (the
/// dual of the zero cone), PSD blocks hold svec-vectorized symmetric matrices.
struct ConeBlock {
  enum class Kind { kFree, kNonnegative, kPsd };
  Kind kind = Kind::kFree;
  /// Variable count for free/nonnegative blocks, matrix order for PSD.
  std::size_t size = 0;

  std::size_t dim() const { return kind == Kind::kPsd ? size * (size + 1) / 2 : size; }
};

/// svec layout: lower triangle, column-major, off-diagonals scaled by sqrt(2)
/// so that svec(A).svec(B) = trace(AB).
inline std::size_t svec_index(std::size_t order, std::size_t row, std::size_t col) {
  if (row < col) std::swap(row, col);
  return col * order - col * (col + 1) / 2 + row;
}

Eigen::VectorXd svec(const Eigen::MatrixXd& S);
Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, std::size_t order);

/// min c'x  s.t.  Ax = b,  x in K.
struct SdpProblem {
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  std::vector<ConeBlock> cones;

  std::size_t n_vars() const;
  std::size_t n_rows() const { return static_cast<std::size_t>(A.rows()); }
  /// Throws if dimensions and cone sizes disagree.
  void validate() const;
};

/// nnz(A), the problem-size metric.
std::size_t problem_size(const SdpProblem& sdp);

/// Conic Benchmark Format (CBF v1) dump; scalar variables become VAR
/// entries (F / L+) and PSD blocks become PSDVAR entries.
void write_cbf(const SdpProblem& sdp, std::ostream& out);

}  // namespace splitroa
