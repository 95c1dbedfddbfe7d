#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <memory>
#include <random>

#include "splitroa/analysis.hpp"
#include "splitroa/pipeline.hpp"

using namespace splitroa;

namespace {

struct Solved {
  RoaProblem problem;
  RunResult result;
  std::unique_ptr<RoaCertificate> cert;
};

const Solved& solved(const std::string& name, std::uint32_t d, const std::string& cells, std::size_t K) {
  static std::map<std::string, std::unique_ptr<Solved>> cache;
  const std::string key = name + "/" + std::to_string(d) + "/" + cells + "/" + std::to_string(K);
  auto& slot = cache[key];
  if (!slot) {
    slot = std::make_unique<Solved>();
    slot->problem = builtin_problem(name);
    slot->problem.degree = d;
    set_partition(slot->problem, make_cells(slot->problem.X, PartitionSpec::parse(cells, 1)),
                  TimeGrid::uniform(slot->problem.T, K));
    slot->result = run_problem(slot->problem);
    slot->cert = std::make_unique<RoaCertificate>(slot->problem, slot->result.program.layout, slot->result.x);
  }
  return *slot;
}

std::vector<std::vector<double>> random_points(const Box& X, std::size_t count, std::uint64_t seed) {
  const auto flat = sample_box(X, 0, count, seed);
  std::vector<std::vector<double>> pts;
  for (std::size_t j = 0; j < count; ++j) pts.emplace_back(flat.begin() + j * X.size(), flat.begin() + (j + 1) * X.size());
  return pts;
}

// w >= max(0, v0 + 1), time stitches non-increasing, facet jumps downhill.
void check_invariants(const Solved& s) {
  const auto& p = s.problem;
  const auto& sol = s.cert->solution();
  const std::size_t n = p.system.n, m = p.system.m;
  for (const auto& x : random_points(p.X, 500, 17)) {
    const double w = s.cert->w(x), v0 = s.cert->v0(x);
    EXPECT_GE(w, std::max(0.0, v0 + 1.0) - 1e-6);
  }
  const auto& knots = p.time_grid.knots();
  for (std::size_t i = 0; i < p.cells.size(); ++i) {
    for (const auto& x : random_points(p.cells[i].box, 100, 18 + i)) {
      for (std::size_t k = 0; k + 1 < p.time_grid.intervals(); ++k) {
        std::vector<double> z(1 + n + m, 0.0);
        z[0] = knots[k + 1];
        std::copy(x.begin(), x.end(), z.begin() + 1);
        EXPECT_GE(sol.v[i][k].evaluate(z) - sol.v[i][k + 1].evaluate(z), -1e-6);
      }
    }
  }
  std::mt19937 rng(19);
  for (const auto& f : neighbor_facets(p.cells)) {
    for (const auto& x : random_points(f.box, 100, 20 + f.a * 31 + f.b)) {
      std::vector<double> z(1 + n + m, 0.0);
      std::copy(x.begin(), x.end(), z.begin() + 1);
      for (std::size_t j = 0; j < m; ++j) {
        std::uniform_real_distribution<double> U(p.U_box[j].lo, p.U_box[j].hi);
        z[1 + n + j] = U(rng);
      }
      if (p.U && !p.U->contains(z)) continue;
      z[0] = std::uniform_real_distribution<double>(0.0, p.T)(rng);
      const std::size_t k = p.time_grid.locate(z[0]);
      const double hf = f.sign * p.system.f[f.axis].evaluate(z);
      EXPECT_GE((sol.v[f.a][k].evaluate(z) - sol.v[f.b][k].evaluate(z)) * hf, -1e-6);
    }
  }
}

double combined(const VolumeEstimate& a, const VolumeEstimate& b) {
  return std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
}

}  // namespace

TEST(CubicExactSplit, MembershipAndVolume) {
  const auto& s = solved("cubic", 8, "cuts:-0.5,0.5", 1);
  ASSERT_TRUE(s.result.ok()) << s.result.report.message;
  ASSERT_TRUE(s.result.repair && s.result.repair->ok);
  const auto& c = *s.cert;
  EXPECT_TRUE(member_v(c, std::vector<double>{0.0}));
  EXPECT_TRUE(member_v(c, std::vector<double>{0.4}));
  EXPECT_FALSE(member_v(c, std::vector<double>{0.9}));
  EXPECT_FALSE(member_w(c, std::vector<double>{0.75}));
  EXPECT_GE(s.result.objective, 1.0);
  const auto v = volume(c, VolumeMode::kVSet, 100000);
  EXPECT_GE(v.mean, 1.0 - 3.0 * v.std_error);
  check_invariants(s);
  for (const auto& [fam, r] : identity_residuals(s.problem, s.result.program, s.result.x, 200, 5)) {
    EXPECT_LE(r, 1e-6) << family_name(fam);
  }
}

TEST(CubicExactSplit, IndicatorIsSharperThanTheUnsplitProgram) {
  const auto& split = solved("cubic", 8, "cuts:-0.5,0.5", 1);
  const auto& whole = solved("cubic", 8, "1", 1);
  ASSERT_TRUE(split.result.ok());
  ASSERT_TRUE(whole.result.ok());
  const double a = indicator_symmetric_difference(*split.cert, -0.5, 0.5, 2000);
  const double b = indicator_symmetric_difference(*whole.cert, -0.5, 0.5, 2000);
  EXPECT_LE(a, 0.02);
  EXPECT_GT(b, a);
}

TEST(DoubleIntegratorSplit, InvariantsAndOuterApproximation) {
  const auto& s = solved("double_integrator", 4, "2x2", 2);
  ASSERT_TRUE(s.result.ok()) << s.result.report.message;
  check_invariants(s);
  const auto v = volume(*s.cert, VolumeMode::kVSet, 100000);
  const auto o = monte_carlo_volume(
      s.problem.X, [&](std::span<const double> x) { return oracle_member("double_integrator", x, 1.0, s.problem.X); },
      100000, kDefaultSeed + 1);
  EXPECT_GE(v.mean, o.mean - 3.0 * combined(v, o));
  for (const auto& [fam, r] : identity_residuals(s.problem, s.result.program, s.result.x, 200, 5)) {
    EXPECT_LE(r, 1e-6) << family_name(fam);
  }
}

TEST(Brockett, VSetContainsTheMinimumTimeSet) {
  const auto& s = solved("brockett", 4, "1", 1);
  ASSERT_TRUE(s.result.ok()) << s.result.report.message;
  check_invariants(s);
  const auto v = volume(*s.cert, VolumeMode::kVSet, 100000);
  const auto o = monte_carlo_volume(
      s.problem.X, [&](std::span<const double> x) { return oracle_member("brockett", x, 1.0, s.problem.X); }, 100000,
      kDefaultSeed + 1);
  EXPECT_GE(v.mean, o.mean - 3.0 * combined(v, o));
  // Every oracle point lies in the v-set.
  for (const auto& x : random_points(s.problem.X, 3000, 23)) {
    if (oracle_member("brockett", x, 1.0, s.problem.X)) EXPECT_GE(s.cert->v0(x), -1e-6);
  }
}

TEST(DoubleIntegratorSplit, CutAcrossPositionRepairs) {
  // A facet normal to x1 is divisible (h'f = x2), so the repair moves the quotient.
  const auto& s = solved("double_integrator", 4, "2x1", 1);
  ASSERT_TRUE(s.result.ok()) << s.result.report.message;
  ASSERT_TRUE(s.result.repair && s.result.repair->ok);
  check_invariants(s);
  for (const auto& [fam, r] : identity_residuals(s.problem, s.result.program, s.result.x, 200, 5)) {
    EXPECT_LE(r, 1e-9) << family_name(fam);
  }
}
