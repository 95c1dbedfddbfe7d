#include "splitroa/repair.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/SparseCholesky>

namespace splitroa {

namespace {

void add_polynomial(const PieceLayout& piece, const Polynomial& p, Eigen::VectorXd& x) {
  const Polynomial local = substitute_affine(p, piece.chart.original_to_local());
  for (std::size_t j = 0; j < piece.basis.size(); ++j) {
    x(static_cast<Eigen::Index>(piece.offset + j)) += local.coefficient(piece.basis[j]);
  }
}

// Grams of one certificate for the free slots in x, or false.
bool rebuild(const CompiledProgram& program, const CertificateRecord& rec, Eigen::VectorXd& x, double tol) {
  const SdpProblem& sdp = program.sdp;
  const auto r0 = static_cast<Eigen::Index>(rec.row_begin);
  const auto nr = static_cast<Eigen::Index>(rec.row_count);

  std::vector<char> gram_col(static_cast<std::size_t>(sdp.A.cols()), 0);
  std::vector<Eigen::Index> sub_col(static_cast<std::size_t>(sdp.A.cols()), -1);
  SdpProblem sub;
  Eigen::Index n = 0;
  for (const auto& g : rec.grams) {
    const std::size_t q = g.basis.size();
    for (std::size_t j = 0; j < q * (q + 1) / 2; ++j) {
      gram_col[g.offset + j] = 1;
      sub_col[g.offset + j] = n++;
    }
    sub.cones.push_back({ConeBlock::Kind::kPsd, q});
  }

  Eigen::VectorXd rhs = sdp.b.segment(r0, nr);
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index j = 0; j < sdp.A.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(sdp.A, j); it; ++it) {
      if (it.row() < r0 || it.row() >= r0 + nr) continue;
      if (gram_col[static_cast<std::size_t>(j)]) {
        trip.emplace_back(static_cast<int>(it.row() - r0), static_cast<int>(sub_col[static_cast<std::size_t>(j)]),
                          it.value());
      } else {
        rhs(it.row() - r0) -= it.value() * x(j);
      }
    }
  }
  // Rows without Gram terms only involve v and w; the repair cannot move them.
  std::vector<Eigen::Index> keep(static_cast<std::size_t>(nr), -1);
  Eigen::Index kept = 0;
  for (const auto& t : trip) {
    if (keep[static_cast<std::size_t>(t.row())] < 0) keep[static_cast<std::size_t>(t.row())] = 0;
  }
  for (auto& k : keep) k = k < 0 ? -1 : kept++;
  for (auto& t : trip) t = Eigen::Triplet<double>(static_cast<int>(keep[static_cast<std::size_t>(t.row())]), t.col(), t.value());
  sub.A.resize(kept, n);
  sub.A.setFromTriplets(trip.begin(), trip.end());
  sub.b.resize(kept);
  for (Eigen::Index r = 0; r < nr; ++r) {
    if (keep[static_cast<std::size_t>(r)] >= 0) sub.b(keep[static_cast<std::size_t>(r)]) = rhs(r);
  }

  // Largest uniform margin: X = Y + t I with Y PSD, maximize t.
  SdpProblem lift;
  lift.cones.push_back({ConeBlock::Kind::kFree, 1});
  lift.cones.insert(lift.cones.end(), sub.cones.begin(), sub.cones.end());
  Eigen::VectorXd identity = Eigen::VectorXd::Zero(n);
  {
    Eigen::Index pos = 0;
    for (const auto& k : sub.cones) {
      for (std::size_t r = 0; r < k.size; ++r) identity(pos + static_cast<Eigen::Index>(svec_index(k.size, r, r))) = 1.0;
      pos += static_cast<Eigen::Index>(k.dim());
    }
  }
  const Eigen::VectorXd a_id = sub.A * identity;
  std::vector<Eigen::Triplet<double>> lt;
  for (Eigen::Index r = 0; r < kept; ++r) {
    if (a_id(r) != 0.0) lt.emplace_back(static_cast<int>(r), 0, a_id(r));
  }
  for (Eigen::Index j = 0; j < sub.A.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(sub.A, j); it; ++it) {
      lt.emplace_back(static_cast<int>(it.row()), static_cast<int>(j + 1), it.value());
    }
  }
  lift.A.resize(kept, n + 1);
  lift.A.setFromTriplets(lt.begin(), lt.end());
  lift.b = sub.b;
  lift.c = Eigen::VectorXd::Zero(n + 1);
  lift.c(0) = -1.0;

  SolveOptions lo;
  const SolveReport rep = solve(lift, lo);
  if (rep.x.size() != n + 1 || !(rep.x(0) > 0.0)) return false;
  Eigen::VectorXd g = rep.x.tail(n) + rep.x(0) * identity;

  // Minimum-norm correction of the remaining residual; it is far smaller
  // than the margin t, so the blocks stay positive definite.
  const Eigen::MatrixXd A = sub.A;
  const Eigen::VectorXd r = sub.b - A * g;
  const Eigen::VectorXd lam = (A * A.transpose()).completeOrthogonalDecomposition().solve(r);
  g += A.transpose() * lam;
  const double res = (sub.b - A * g).norm() / (1.0 + sub.b.norm());
  const double mineig = min_relative_eigenvalue(sub, g);
  if (!(res <= tol) || !(mineig > 0.0)) return false;
  for (const auto& gb : rec.grams) {
    const std::size_t q = gb.basis.size();
    for (std::size_t j = 0; j < q * (q + 1) / 2; ++j) x(static_cast<Eigen::Index>(gb.offset + j)) = g(sub_col[gb.offset + j]);
  }
  return true;
}

// Minimum-norm change of the free variables that makes the Gram-free rows
// (facet equalities and divisibility identities) hold exactly.
void project_identities(const CompiledProgram& program, Eigen::VectorXd& x) {
  const SdpProblem& sdp = program.sdp;
  const auto n_free = static_cast<Eigen::Index>(program.layout.n_free);
  std::vector<char> pure(static_cast<std::size_t>(sdp.A.rows()), 0);
  bool any = false;
  for (const auto& rec : program.layout.certificates) {
    if (!rec.grams.empty()) continue;
    for (std::size_t r = 0; r < rec.row_count; ++r) pure[rec.row_begin + r] = 1;
    any = any || rec.row_count > 0;
  }
  if (!any) return;
  std::vector<Eigen::Index> row_id(pure.size(), -1);
  Eigen::Index m = 0;
  for (std::size_t r = 0; r < pure.size(); ++r) {
    if (pure[r]) row_id[r] = m++;
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index j = 0; j < n_free; ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(sdp.A, j); it; ++it) {
      const Eigen::Index r = row_id[static_cast<std::size_t>(it.row())];
      if (r >= 0) trip.emplace_back(static_cast<int>(r), static_cast<int>(j), it.value());
    }
  }
  Eigen::SparseMatrix<double> A(m, n_free);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd b(m);
  for (std::size_t r = 0; r < pure.size(); ++r) {
    if (pure[r]) b(row_id[r]) = sdp.b(static_cast<Eigen::Index>(r));
  }
  // Corner points can make the rows dependent, hence the tiny shift.
  Eigen::SparseMatrix<double> AAt = A * A.transpose();
  for (Eigen::Index r = 0; r < m; ++r) AAt.coeffRef(r, r) += 1e-12;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(AAt);
  if (ldlt.info() != Eigen::Success) return;
  Eigen::VectorXd xf = x.head(n_free);
  for (int pass = 0; pass < 3; ++pass) {
    const Eigen::VectorXd r = b - A * xf;
    xf += A.transpose() * ldlt.solve(r);
  }
  x.head(n_free) = xf;
}

}  // namespace

void add_margin(const RoaProblem& problem, const DecisionLayout& layout, double delta, Eigen::VectorXd& x) {
  if (delta == 0.0) return;
  const std::size_t n = problem.system.n;
  // Axes whose f_k does not involve u: across a facet normal to such an axis
  // the potential below jumps by a positive multiple of h'f.
  std::vector<std::size_t> axes;
  for (std::size_t k = 0; k < n; ++k) {
    bool uses_u = false;
    for (VarId v : problem.system.f[k].variables()) uses_u = uses_u || v > n;
    if (!uses_u) axes.push_back(k);
  }
  const std::size_t I = layout.v.size();
  const Box& X = problem.X;
  auto center_offset = [&](std::size_t i, std::size_t k) {
    return problem.cells.empty() ? 0.0 : problem.cells[i].box[k].center() - X[k].center();
  };
  // phi_i = -sum_k c_ik f_k, bounded together with L phi_i through the
  // coefficient sums in each certificate's unit chart.
  std::vector<Polynomial> phi(I), lphi(I);
  double bound = 0.0;
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t k : axes) phi[i] -= problem.system.f[k] * center_offset(i, k);
    lphi[i] = lie_derivative(phi[i], problem.system);
  }
  auto coef_sum = [](const Polynomial& p, const Chart& chart) {
    double sum = 0.0;
    const Polynomial local = substitute_affine(p, chart.original_to_local());
    for (const auto& [m, c] : local.terms()) sum += std::abs(c);
    return sum;
  };
  for (const auto& rec : layout.certificates) {
    const auto& spec = rec.spec;
    if (spec.family == Family::kLiouville) bound = std::max(bound, coef_sum(lphi[spec.cell], spec.chart));
  }
  for (std::size_t i = 0; i < I; ++i) {
    for (const auto& piece : layout.v[i]) bound = std::max(bound, coef_sum(phi[i], piece.chart));
  }
  const double eps = bound > 0 ? 0.5 * delta / bound : 0.0;

  const Polynomial t(Monomial::var(kTimeVar));
  const Polynomial dv = Polynomial(delta * (problem.T + 1.0)) - t * delta;
  const Polynomial dw(delta * (problem.T + 2.0));
  for (std::size_t i = 0; i < I; ++i) {
    for (const auto& piece : layout.v[i]) add_polynomial(piece, dv + phi[i] * eps, x);
  }
  for (const auto& piece : layout.w) add_polynomial(piece, dw, x);

  // Quotients of divisible facets absorb the jump of phi exactly.
  if (eps == 0.0 || layout.aux.empty()) return;
  const auto facets = neighbor_facets(problem.cells);
  for (const auto& rec : layout.certificates) {
    if (rec.spec.family != Family::kFacetDivisible) continue;
    const Facet& f = facets.at(*rec.spec.facet);
    const double jump = eps * std::abs(center_offset(f.b, f.axis) - center_offset(f.a, f.axis));
    for (const auto& term : rec.spec.lhs) {
      if (term.kind == LhsTerm::Kind::kAux) add_polynomial(layout.aux.at(term.cell), Polynomial(jump), x);
    }
  }
}

RepairReport repair_certificates(const RoaProblem& problem, const CompiledProgram& program, Eigen::VectorXd& x,
                                 const RepairOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  RepairReport report;
  Eigen::VectorXd base = x;
  project_identities(program, base);
  // Certificates that failed at a smaller margin are retried first, and a
  // margin is abandoned at its first failure, except for the largest one,
  // which lists every failure.
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < program.layout.certificates.size(); ++j) {
    if (!program.layout.certificates[j].grams.empty()) order.push_back(j);
  }
  for (double delta = 0.0; delta <= options.max_margin; delta = delta == 0.0 ? 1e-9 : 10.0 * delta) {
    const bool last = 10.0 * delta > options.max_margin;
    Eigen::VectorXd trial = base;
    add_margin(problem, program.layout, delta, trial);
    report.failed.clear();
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const auto& rec = program.layout.certificates[order[pos]];
      if (rebuild(program, rec, trial, options.tol)) continue;
      report.failed.push_back(rec.spec.id);
      std::rotate(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(pos), order.begin() + static_cast<std::ptrdiff_t>(pos) + 1);
      if (!last) break;
    }
    report.margin = delta;
    if (report.failed.empty()) {
      x = trial;
      report.ok = true;
      break;
    }
  }
  report.objective = program.sdp.c.dot(x);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace splitroa
