#include "splitroa/pipeline.hpp"

#include <chrono>

namespace splitroa {

namespace {

double since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

RunResult run_problem(const RoaProblem& problem, const RunOptions& options) {
  RunResult r;
  auto start = std::chrono::steady_clock::now();
  r.program = compile(problem, options.compile);
  r.nnz = problem_size(r.program.sdp);
  r.compile_seconds = since(start);
  if (options.dump_sdp) write_cbf(r.program.sdp, *options.dump_sdp);

  start = std::chrono::steady_clock::now();
  r.report = solve(r.program.sdp, options.solve);
  r.solve_seconds = since(start);
  r.x = r.report.x;

  if (options.repair && r.report.ok()) {
    start = std::chrono::steady_clock::now();
    Eigen::VectorXd x = r.x;
    r.repair = repair_certificates(problem, r.program, x, options.repair_options);
    if (r.repair->ok) r.x = x;
    r.repair_seconds = since(start);
  }
  r.objective = r.x.size() ? r.program.sdp.c.dot(r.x) : 0.0;
  return r;
}

}  // namespace splitroa
