#include <gtest/gtest.h>

#include <sstream>

#include "splitroa/sdp.hpp"
#include "splitroa/solver.hpp"

using namespace splitroa;

namespace {

SdpProblem problem(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                   std::vector<ConeBlock> cones) {
  SdpProblem p;
  p.A = A.sparseView();
  p.b = b;
  p.c = c;
  p.cones = std::move(cones);
  return p;
}

// min <C, X> s.t. trace X = 1, X PSD: the optimum is lambda_min(C).
SdpProblem min_eigenvalue_problem(const Eigen::MatrixXd& C) {
  const auto n = static_cast<std::size_t>(C.rows());
  const Eigen::VectorXd c = svec(C);
  Eigen::MatrixXd A = svec(Eigen::MatrixXd::Identity(C.rows(), C.cols())).transpose();
  return problem(A, Eigen::VectorXd::Ones(1), c, {{ConeBlock::Kind::kPsd, n}});
}

}  // namespace

TEST(Svec, InnerProductIsTrace) {
  Eigen::MatrixXd A(3, 3), B(3, 3);
  A << 2, 1, 0, 1, 3, -1, 0, -1, 1;
  B << 1, 0.5, 2, 0.5, -1, 0, 2, 0, 4;
  EXPECT_NEAR(svec(A).dot(svec(B)), (A * B).trace(), 1e-13);
  EXPECT_TRUE(smat(svec(A), 3).isApprox(A));
  EXPECT_EQ(svec_index(3, 0, 0), 0u);
  EXPECT_EQ(svec_index(3, 2, 0), 2u);
  EXPECT_EQ(svec_index(3, 1, 1), 3u);
  EXPECT_EQ(svec_index(3, 0, 2), svec_index(3, 2, 0));
}

TEST(NativeIpm, SmallestEigenvalue) {
  Eigen::MatrixXd C(3, 3);
  C << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  const auto rep = solve(min_eigenvalue_problem(C));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  EXPECT_EQ(rep.status, SolveStatus::kOptimal);
  EXPECT_NEAR(rep.primal_objective, es.eigenvalues()(0), 1e-7);
  EXPECT_LE(rep.relative_gap, 1e-6);
}

TEST(NativeIpm, LinearProgramWithFreeVariable) {
  // min -y + x1 + 2 x2  s.t. x1 + x2 = 1, y - x1 = 0.5; x >= 0, y free.
  // Substituting y gives 2 x2 - 0.5, so x2 = 0, x1 = 1, y = 1.5.
  Eigen::MatrixXd A(2, 3);
  A << 0, 1, 1, 1, -1, 0;
  Eigen::VectorXd b(2), c(3);
  b << 1, 0.5;
  c << -1, 1, 2;
  const auto rep = solve(problem(A, b, c, {{ConeBlock::Kind::kFree, 1}, {ConeBlock::Kind::kNonnegative, 2}}));
  ASSERT_TRUE(rep.ok());
  EXPECT_NEAR(rep.primal_objective, -0.5, 1e-7);
  EXPECT_NEAR(rep.x(0), 1.5, 1e-6);
  EXPECT_NEAR(rep.x(1), 1.0, 1e-6);
}

TEST(NativeIpm, SosOfAUnivariateQuartic) {
  // max gamma s.t. x^4 - 2x^2 + 1.5 - gamma = m' X m, m = (1, x, x^2):
  // the minimum of x^4 - 2x^2 + 1.5 is 0.5 at x = +-1.
  // Columns: gamma (free), svec(X) (6 entries).
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(5, 7);
  const double s2 = std::sqrt(2.0);
  // coefficient of x^k: X00 (k0), 2 X10 (k1), 2 X20 + X11 (k2), 2 X21 (k3), X22 (k4)
  A(0, 0) = 1.0;
  A(0, 1 + svec_index(3, 0, 0)) = 1.0;
  A(1, 1 + svec_index(3, 1, 0)) = s2;
  A(2, 1 + svec_index(3, 2, 0)) = s2;
  A(2, 1 + svec_index(3, 1, 1)) = 1.0;
  A(3, 1 + svec_index(3, 2, 1)) = s2;
  A(4, 1 + svec_index(3, 2, 2)) = 1.0;
  Eigen::VectorXd b(5), c = Eigen::VectorXd::Zero(7);
  b << 1.5, 0, -2, 0, 1;
  c(0) = -1.0;
  const auto rep = solve(problem(A, b, c, {{ConeBlock::Kind::kFree, 1}, {ConeBlock::Kind::kPsd, 3}}));
  ASSERT_TRUE(rep.ok()) << rep.message;
  EXPECT_NEAR(rep.x(0), 0.5, 1e-6);
}

TEST(NativeIpm, DetectsInfeasibility) {
  // x >= 0, x1 + x2 = -1.
  Eigen::MatrixXd A(1, 2);
  A << 1, 1;
  const auto rep = solve(problem(A, -Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(2),
                                 {{ConeBlock::Kind::kNonnegative, 2}}));
  EXPECT_EQ(rep.status, SolveStatus::kInfeasible);
  EXPECT_FALSE(rep.ok());
}

TEST(NativeIpm, DetectsUnboundedness) {
  // min -x1 s.t. x1 - x2 = 0, x >= 0.
  Eigen::MatrixXd A(1, 2);
  A << 1, -1;
  Eigen::VectorXd c(2);
  c << -1, 0;
  const auto rep = solve(problem(A, Eigen::VectorXd::Zero(1), c, {{ConeBlock::Kind::kNonnegative, 2}}));
  EXPECT_EQ(rep.status, SolveStatus::kUnbounded);
}

TEST(NativeIpm, IterationCapIsSurfaced) {
  Eigen::MatrixXd C(3, 3);
  C << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  SolveOptions opt;
  opt.max_iters = 2;
  const auto rep = solve(min_eigenvalue_problem(C), opt);
  EXPECT_NE(rep.status, SolveStatus::kOptimal);
  EXPECT_LE(rep.iterations, 2);
}

TEST(NativeIpm, Deterministic) {
  Eigen::MatrixXd C(4, 4);
  C << 4, 1, 0, 2, 1, 3, 1, 0, 0, 1, 2, -1, 2, 0, -1, 5;
  const auto a = solve(min_eigenvalue_problem(C));
  const auto b = solve(min_eigenvalue_problem(C));
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
}

TEST(Backends, UnknownNameThrows) {
  SolveOptions opt;
  opt.backend = "nope";
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(solve(min_eigenvalue_problem(C), opt), std::invalid_argument);
  EXPECT_EQ(available_backends(), std::vector<std::string>{"native"});
  EXPECT_STREQ(status_name(SolveStatus::kNearOptimal), "near-optimal");
  EXPECT_STREQ(status_name(SolveStatus::kNumericalFailure), "numerical-failure");
}

TEST(Validate, RejectsMismatchedShapes) {
  Eigen::MatrixXd A(1, 2);
  A << 1, 1;
  auto p = problem(A, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(2), {{ConeBlock::Kind::kNonnegative, 3}});
  EXPECT_THROW(p.validate(), std::invalid_argument);
  EXPECT_THROW(solve(p), std::invalid_argument);
}

TEST(MinRelativeEigenvalue, SignOfTheSmallestEigenvalue) {
  Eigen::MatrixXd C(2, 2);
  C << 1, 0, 0, -1;
  auto p = min_eigenvalue_problem(C);
  EXPECT_LT(min_relative_eigenvalue(p, svec(C)), 0.0);
  EXPECT_GT(min_relative_eigenvalue(p, svec(Eigen::MatrixXd::Identity(2, 2))), 0.0);
}

TEST(Cbf, HeaderAndCounts) {
  Eigen::MatrixXd C(2, 2);
  C << 2, 1, 1, 2;
  std::ostringstream os;
  write_cbf(min_eigenvalue_problem(C), os);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("VER\n1", 0), 0u);
  EXPECT_NE(s.find("PSDVAR\n1\n2"), std::string::npos);
  EXPECT_NE(s.find("CON\n1 1\nL= 1"), std::string::npos);
  EXPECT_EQ(problem_size(min_eigenvalue_problem(C)), 2u);
}
