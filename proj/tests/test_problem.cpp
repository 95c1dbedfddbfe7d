#include <gtest/gtest.h>

#include "splitroa/problem.hpp"

using namespace splitroa;

namespace {

Polynomial x(VarId v) { return Polynomial::var(v); }

}  // namespace

TEST(LieDerivative, ChainRuleOnTheDoubleIntegrator) {
  // v = t x1^2 + x2, f = (x2, u)  =>  Lv = x1^2 + 2 t x1 x2 + u
  const ControlSystem sys{2, 1, {x(2), x(3)}};
  const Polynomial v = x(0) * x(1) * x(1) + x(2);
  EXPECT_EQ(lie_derivative(v, sys), x(1) * x(1) + 2.0 * x(0) * x(1) * x(2) + x(3));
  EXPECT_THROW(lie_derivative(x(3), sys), std::invalid_argument);
}

TEST(ControlSystemTest, ValidatesShapeAndVariables) {
  ControlSystem ok{1, 0, {x(1) * x(1)}};
  EXPECT_NO_THROW(ok.validate());
  EXPECT_EQ(ok.degree(), 2u);
  ControlSystem wrong_len{2, 0, {x(1)}};
  EXPECT_THROW(wrong_len.validate(), std::invalid_argument);
  ControlSystem stray{1, 0, {x(5)}};
  EXPECT_THROW(stray.validate(), std::invalid_argument);
}

TEST(Builtins, ShapesOfTheThreeBenchmarks) {
  const auto cubic = builtin_problem("cubic");
  EXPECT_EQ(cubic.system.n, 1u);
  EXPECT_EQ(cubic.system.m, 0u);
  EXPECT_EQ(cubic.T, 100.0);
  EXPECT_EQ(cubic.X, (Box{{-1.0, 1.0}}));
  // f(x) = x (x - 0.5)(x + 0.5) vanishes at the ROA boundary.
  EXPECT_EQ(cubic.system.f[0].evaluate(std::vector<double>{0.0, 0.5}), 0.0);
  const auto di = builtin_problem("double_integrator");
  EXPECT_EQ(di.system.n, 2u);
  EXPECT_EQ(di.system.m, 1u);
  EXPECT_TRUE(di.U.has_value());
  const auto br = builtin_problem("brockett");
  EXPECT_EQ(br.system.n, 3u);
  EXPECT_EQ(br.system.m, 2u);
  EXPECT_EQ(br.system.f[2], x(4) * x(2) - x(5) * x(1));
  EXPECT_THROW(builtin_problem("pendulum"), std::invalid_argument);
}

TEST(Builtins, ValidOnceDegreeIsSet) {
  auto p = builtin_problem("brockett");
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.degree = 6;
  EXPECT_NO_THROW(p.validate());
  p.degree = 5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Validate, RejectsBadPartitions) {
  auto p = builtin_problem("cubic");
  p.degree = 4;
  set_partition(p, {Cell{0, {{-1.0, 0.0}}}}, TimeGrid({0.0, 100.0}));
  EXPECT_THROW(p.validate(), std::invalid_argument);
  set_partition(p, make_cells(p.X, PartitionSpec::parse("2", 0)), TimeGrid({0.0, 50.0}));
  EXPECT_THROW(p.validate(), std::invalid_argument);
  set_partition(p, make_cells(p.X, PartitionSpec::parse("2", 0)), TimeGrid({0.0, 50.0, 100.0}));
  EXPECT_NO_THROW(p.validate());
}

TEST(PartitionSpecTest, ParsesEveryForm) {
  EXPECT_EQ(PartitionSpec::parse("1", 0).kind, PartitionSpec::Kind::kUniform);
  const auto g = PartitionSpec::parse("2x3", 0);
  EXPECT_EQ(g.cells_per_axis, (std::vector<std::size_t>{2, 3}));
  const auto h = PartitionSpec::parse("halving:8", 5);
  EXPECT_EQ(h.kind, PartitionSpec::Kind::kHalving);
  EXPECT_EQ(h.n_cells, 8u);
  EXPECT_EQ(h.seed, 5u);
  const auto c = PartitionSpec::parse("cuts:-0.5,0.5", 0);
  ASSERT_EQ(c.cuts.size(), 1u);
  EXPECT_EQ(c.cuts[0], (std::vector<double>{-0.5, 0.5}));
  const auto c2 = PartitionSpec::parse("cuts:0|0.1,0.2", 0);
  ASSERT_EQ(c2.cuts.size(), 2u);
  EXPECT_EQ(c2.cuts[1].size(), 2u);
  EXPECT_THROW(PartitionSpec::parse("2xq", 0), std::invalid_argument);
  EXPECT_THROW(PartitionSpec::parse("halving:0", 0), std::invalid_argument);
  EXPECT_THROW(PartitionSpec::parse("cuts:a", 0), std::invalid_argument);
}

TEST(PartitionSpecTest, MakesCells) {
  const Box X{{-0.7, 0.7}, {-1.2, 1.2}};
  EXPECT_EQ(make_cells(X, PartitionSpec::parse("2x2", 0)).size(), 4u);
  EXPECT_EQ(make_cells(X, PartitionSpec::parse("halving:16", 1)).size(), 16u);
  EXPECT_EQ(make_cells(Box{{-1, 1}}, PartitionSpec::parse("cuts:-0.5,0.5", 0)).size(), 3u);
}

TEST(Config, FullSystemDescription) {
  const auto cfg = parse_problem_config(R"(
name = "di"
[system]
n = 2
m = 1
f = ["x2", "u1"]
[sets]
X = [[-0.7, 0.7], [-1.2, 1.2]]
U = ["1 - u1^2"]
XT = "origin"
[roa]
T = 1.0
degree = 6
cells_per_axis = [2, 2]
time_knots = [0.0, 0.5, 1.0]
)");
  const auto& p = cfg.problem;
  EXPECT_EQ(p.name, "di");
  EXPECT_EQ(p.cells.size(), 4u);
  EXPECT_EQ(p.time_grid.intervals(), 2u);
  EXPECT_EQ(p.U_box, (Box{{-1.0, 1.0}}));
  EXPECT_EQ(p.degree, 6u);
  EXPECT_NO_THROW(p.validate());
}

TEST(Config, BuiltinWithPartition) {
  const auto cfg = parse_problem_config("builtin = \"cubic\"\n[roa]\ndegree = 8\ncuts = [[-0.5, 0.5]]\n");
  EXPECT_EQ(cfg.problem.cells.size(), 3u);
  EXPECT_EQ(cfg.problem.T, 100.0);
}

TEST(Config, MalformedPolynomialReportsLineAndColumn) {
  try {
    parse_problem_config("[system]\nn = 1\nf = [\"x1 * * x1\"]\n[sets]\nX = [[-1, 1]]\n");
    FAIL() << "expected a config error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_GT(e.column(), 0u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Config, MissingPiecesAreReported) {
  EXPECT_THROW(parse_problem_config("[roa]\ndegree = 4\n"), ConfigError);
  EXPECT_THROW(parse_problem_config("builtin = \"nope\"\n"), ConfigError);
  EXPECT_THROW(parse_problem_config("builtin = \"cubic\"\n[roa]\ndegree = \"four\"\n"), ConfigError);
  EXPECT_THROW(parse_problem_config("builtin = \"cubic\"\n[roa\n"), ConfigError);
  EXPECT_THROW(load_problem_config("/nonexistent/file.toml"), ConfigError);
}
