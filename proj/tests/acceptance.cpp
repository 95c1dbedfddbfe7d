// Acceptance run: one PASS/FAIL line per criterion A1..A8.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "splitroa/analysis.hpp"
#include "splitroa/pipeline.hpp"

using namespace splitroa;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Instance {
  std::string label;
  RoaProblem problem;
  RunResult result;
  std::unique_ptr<RoaCertificate> cert;
  double seconds = 0.0;
};

std::map<std::string, std::unique_ptr<Instance>> g_instances;

RoaProblem make_problem(const std::string& name, std::uint32_t d, const std::string& cells) {
  RoaProblem p = builtin_problem(name);
  p.degree = d;
  set_partition(p, make_cells(p.X, PartitionSpec::parse(cells, 1)), TimeGrid({0.0, p.T}));
  return p;
}

std::string label_of(const std::string& name, std::uint32_t d, const std::string& cells) {
  return name + " d" + std::to_string(d) + " " + cells;
}

Instance& solved(const std::string& name, std::uint32_t d, const std::string& cells) {
  const std::string label = label_of(name, d, cells);
  auto& slot = g_instances[label];
  if (!slot) {
    const auto t0 = Clock::now();
    slot = std::make_unique<Instance>();
    slot->label = label;
    slot->problem = make_problem(name, d, cells);
    slot->result = run_problem(slot->problem);
    slot->cert = std::make_unique<RoaCertificate>(slot->problem, slot->result.program.layout, slot->result.x);
    slot->seconds = seconds_since(t0);
    std::fprintf(stderr, "  solved %-32s %-13s obj %.6f nnz %zu margin %.0e (%.1f s)\n", label.c_str(),
                 status_name(slot->result.report.status), slot->result.objective, slot->result.nnz,
                 slot->result.repair && slot->result.repair->ok ? slot->result.repair->margin : -1.0, slot->seconds);
  }
  return *slot;
}

int g_failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
  if (!pass) ++g_failures;
  std::cout << id << ' ' << (pass ? "PASS" : "FAIL") << "  " << detail << std::endl;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// `count` points of X accepted by the oracle, from a fixed stream.
std::vector<std::vector<double>> oracle_points(const RoaProblem& p, std::size_t count, std::uint64_t seed) {
  std::vector<std::vector<double>> pts;
  const std::size_t n = p.X.size();
  constexpr std::size_t kBatch = 65536;
  for (std::size_t first = 0; pts.size() < count; first += kBatch) {
    const auto flat = sample_box(p.X, first, kBatch, seed);
    for (std::size_t j = 0; j < kBatch && pts.size() < count; ++j) {
      std::vector<double> x(flat.begin() + j * n, flat.begin() + (j + 1) * n);
      if (oracle_member(p.name, x, p.T, p.X)) pts.push_back(std::move(x));
    }
  }
  return pts;
}

double combined_se(const VolumeEstimate& a, const VolumeEstimate& b) {
  return std::hypot(a.std_error, b.std_error);
}

void a1() {
  const auto t0 = Clock::now();
  struct Case {
    std::string name;
    std::uint32_t d;
    std::string cells;
  };
  const std::vector<Case> cases = {{"cubic", 4, "1"},
                                   {"cubic", 6, "1"},
                                   {"cubic", 8, "1"},
                                   {"double_integrator", 6, "1"},
                                   {"double_integrator", 6, "2x2"},
                                   {"brockett", 6, "1"},
                                   {"brockett", 6, "2x2x2"}};
  bool pass = true;
  std::ostringstream detail;
  double solve_seconds_here = 0.0;
  for (const auto& c : cases) {
    const bool fresh = !g_instances.count(label_of(c.name, c.d, c.cells));
    const Instance& s = solved(c.name, c.d, c.cells);
    if (fresh) solve_seconds_here += s.seconds;
    if (!s.result.ok()) {
      pass = false;
      detail << s.label << ": " << status_name(s.result.report.status) << "; ";
      continue;
    }
    const auto pts = oracle_points(s.problem, 10000, 101);
    std::size_t good = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& x : pts) {
      const double v = s.cert->v0(x);
      worst = std::min(worst, v);
      if (v >= -1e-6) ++good;
    }
    pass = pass && good == pts.size();
    detail << s.label << " " << good << "/" << pts.size() << " (min v0 " << fmt("%.2e", worst) << "); ";
  }
  // Solves shared with earlier criteria count towards the budget too.
  double elapsed = seconds_since(t0) - solve_seconds_here;
  for (const auto& c : cases) elapsed += solved(c.name, c.d, c.cells).seconds;
  pass = pass && elapsed < 1800.0;
  detail << "time " << fmt("%.0f", elapsed) << " s (budget 1800 s)";
  report("A1", pass, detail.str());
}

void a2() {
  const Instance& split = solved("cubic", 8, "cuts:-0.5,0.5");
  const Instance& whole = solved("cubic", 8, "1");
  if (!split.result.ok() || !whole.result.ok()) {
    report("A2", false, "solve failed");
    return;
  }
  const double a = indicator_symmetric_difference(*split.cert, -0.5, 0.5, 2000);
  const double b = indicator_symmetric_difference(*whole.cert, -0.5, 0.5, 2000);
  report("A2", a <= 0.02 && b > a,
         "split symdiff " + fmt("%.4f", a) + " (<= 0.02), no-split symdiff " + fmt("%.4f", b) + " (> split)");
}

void a3() {
  bool pass = true;
  std::ostringstream detail;
  for (std::uint32_t d : {4u, 6u, 8u}) {
    const RoaProblem p = make_problem("cubic", d, "1");
    const auto split = compile(p);
    const auto plain = compile_unsplit(p);
    const std::size_t n1 = problem_size(split.sdp), n2 = problem_size(plain.sdp);
    const auto r1 = solve(split.sdp), r2 = solve(plain.sdp);
    const double rel = std::abs(r1.primal_objective - r2.primal_objective) / std::max(1.0, std::abs(r2.primal_objective));
    const bool ok = n1 == n2 && r1.ok() && r2.ok() && rel <= 1e-6;
    pass = pass && ok;
    detail << "d" << d << " nnz " << n1 << "/" << n2 << " rel obj diff " << fmt("%.1e", rel) << "; ";
  }
  report("A3", pass, detail.str());
}

void a4() {
  const auto t0 = Clock::now();
  std::vector<double> xs, ys;
  std::ostringstream detail;
  for (int cells : {1, 2, 4, 8, 16}) {
    const RoaProblem p = make_problem("double_integrator", 6, "halving:" + std::to_string(cells));
    const auto prog = compile(p);
    xs.push_back(cells);
    ys.push_back(static_cast<double>(problem_size(prog.sdp)));
    detail << cells << ":" << problem_size(prog.sdp) << " ";
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t j = 0; j < xs.size(); ++j) mx += xs[j] / n, my += ys[j] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    sxy += (xs[j] - mx) * (ys[j] - my);
    sxx += (xs[j] - mx) * (xs[j] - mx);
    syy += (ys[j] - my) * (ys[j] - my);
  }
  const double r2 = sxy * sxy / (sxx * syy);
  const double elapsed = seconds_since(t0);
  report("A4", r2 >= 0.99 && elapsed < 300.0,
         "nnz " + detail.str() + "R^2 " + fmt("%.5f", r2) + " (>= 0.99), " + fmt("%.1f", elapsed) + " s (budget 300 s)");
}

void a5() {
  const Instance& base = solved("double_integrator", 8, "1");
  if (!base.result.ok()) {
    report("A5", false, "baseline d8 solve failed");
    return;
  }
  const auto vb = volume(*base.cert, VolumeMode::kVSet);
  std::ostringstream detail;
  detail << "baseline d8 1 cell nnz " << base.result.nnz << " vol " << fmt("%.4f", vb.mean) << "; ";
  bool pass = false;
  const std::vector<std::pair<std::uint32_t, std::string>> candidates = {
      {6, "2x1"}, {6, "1x2"}, {6, "2x2"}, {4, "2x2"}, {4, "halving:8"}};
  for (const auto& [d, cells] : candidates) {
    const std::size_t nnz = problem_size(compile(make_problem("double_integrator", d, cells)).sdp);
    if (nnz > base.result.nnz) {
      detail << "d" << d << " " << cells << " nnz " << nnz << " too large; ";
      continue;
    }
    const Instance& s = solved("double_integrator", d, cells);
    if (!s.result.ok()) {
      detail << s.label << " " << status_name(s.result.report.status) << "; ";
      continue;
    }
    const auto vs = volume(*s.cert, VolumeMode::kVSet);
    const double margin = vb.mean - vs.mean, se = combined_se(vb, vs);
    detail << "d" << d << " " << cells << " nnz " << nnz << " vol " << fmt("%.4f", vs.mean) << " (diff "
           << fmt("%.4f", margin) << ", 2SE " << fmt("%.4f", 2 * se) << "); ";
    if (margin >= 2.0 * se) {
      pass = true;
      break;
    }
  }
  report("A5", pass, detail.str());

  // Brockett at d6 with 8 cells: reported, not scored.
  const Instance& b1 = solved("brockett", 6, "1");
  const Instance& b8 = solved("brockett", 6, "2x2x2");
  if (b1.result.ok() && b8.result.ok()) {
    const auto v1 = volume(*b1.cert, VolumeMode::kVSet), v8 = volume(*b8.cert, VolumeMode::kVSet);
    const bool better = v1.mean - v8.mean >= 2.0 * combined_se(v1, v8);
    std::cout << "A5 stretch (brockett d6: 1 vs 8 cells) " << (better ? "met" : "not met") << "  vol "
              << fmt("%.4f", v1.mean) << " vs " << fmt("%.4f", v8.mean) << ", nnz " << b1.result.nnz << " vs "
              << b8.result.nnz << std::endl;
  } else {
    std::cout << "A5 stretch (brockett d6: 1 vs 8 cells) not met  solve failed" << std::endl;
  }
}

void a6() {
  bool pass = true;
  std::ostringstream detail;
  double prev_obj = std::numeric_limits<double>::infinity();
  VolumeEstimate prev_vol;
  bool first = true;
  for (std::uint32_t d : {4u, 6u, 8u}) {
    const Instance& s = solved("cubic", d, "1");
    if (!s.result.ok()) {
      pass = false;
      detail << "d" << d << " failed; ";
      continue;
    }
    const auto v = volume(*s.cert, VolumeMode::kVSet);
    const double obj = s.result.objective;
    pass = pass && obj >= 1.0;
    if (!first) {
      pass = pass && obj <= prev_obj * (1.0 + 1e-6);
      pass = pass && v.mean <= prev_vol.mean + 2.0 * combined_se(v, prev_vol);
    }
    detail << "d" << d << " obj " << fmt("%.6f", obj) << " vol " << fmt("%.5f", v.mean) << "+-"
           << fmt("%.5f", v.std_error) << "; ";
    prev_obj = obj;
    prev_vol = v;
    first = false;
  }
  report("A6", pass, detail.str());
}

void a7() {
  bool pass = true;
  double worst = 0.0;
  std::string where;
  for (const auto& [label, s] : g_instances) {
    if (!s->result.ok()) continue;
    for (const auto& [fam, r] : identity_residuals(s->problem, s->result.program, s->result.x, 200, 7)) {
      if (r > worst) {
        worst = r;
        where = label + " " + family_name(fam);
      }
      pass = pass && r <= 1e-6;
    }
  }
  report("A7", pass,
         std::to_string(g_instances.size()) + " instances, worst " + fmt("%.2e", worst) + " at " + where +
             " (<= 1e-6 (1+scale))");
}

void a8() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double e1 = 0.0, e2 = 0.0;
  for (int j = 0; j < 100; ++j) {
    const double x1 = U(rng), x2 = U(rng), x3 = U(rng);
    e1 = std::max(e1, std::abs(brockett_min_time(std::vector<double>{x1, x2, 0.0}) - std::hypot(x1, x2)));
    e2 = std::max(e2, std::abs(brockett_min_time(std::vector<double>{0.0, 0.0, x3}) -
                              std::sqrt(2.0 * std::numbers::pi * std::abs(x3))));
  }
  BuiltinOptions bo;
  bo.target_radius = 1e-2;
  const RoaProblem p = builtin_problem("brockett", bo);
  int reached = 0;
  double worst_ratio = 0.0;
  for (int j = 0; j < 50; ++j) {
    const std::vector<double> x0{U(rng), U(rng), U(rng)};
    const double T = brockett_min_time(x0);
    const auto tr = simulate(p, x0, brockett_control(x0), 1e-3, T * 1.05 + 1e-3, true);
    if (tr.reached && tr.reach_time <= T * 1.05) ++reached;
    if (tr.reached && T > 0) worst_ratio = std::max(worst_ratio, tr.reach_time / T);
  }
  report("A8", e1 <= 1e-8 && e2 <= 1e-8 && reached == 50,
         "x3=0 limit err " + fmt("%.1e", e1) + ", x1=x2=0 limit err " + fmt("%.1e", e2) + " (<= 1e-8); " +
             std::to_string(reached) + "/50 reach the 1e-2 ball by T(1+5e-2), worst t/T " + fmt("%.3f", worst_ratio));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  a8();
  a3();
  a4();
  a2();
  a6();
  a1();
  a5();
  a7();
  std::cout << (g_failures == 0 ? "ALL PASS" : std::to_string(g_failures) + " FAILED") << "  total "
            << fmt("%.0f", seconds_since(t0)) << " s" << std::endl;
  return g_failures == 0 ? 0 : 1;
}
