#include "run.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

namespace splitroa::cli {

namespace {

using nlohmann::json;

constexpr std::size_t kResidualPoints = 200;

std::vector<double> parse_knots(const std::string& text, double T) {
  if (text.rfind("uniform:", 0) == 0) {
    const auto k = std::stoul(text.substr(8));
    return TimeGrid::uniform(T, k).knots();
  }
  std::vector<double> knots;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    knots.push_back(std::stod(item, &used));
    if (used != item.size()) throw std::invalid_argument("bad time knot '" + item + "'");
  }
  return knots;
}

json box_json(const Box& box) {
  json j = json::array();
  for (const auto& iv : box) j.push_back({iv.lo, iv.hi});
  return j;
}

json volume_json(const VolumeEstimate& v) {
  return {{"mean", v.mean}, {"std_error", v.std_error}, {"samples", v.samples}, {"seed", v.seed}};
}

std::size_t default_grid(std::size_t n) { return n == 1 ? 2000 : n == 2 ? 201 : 41; }

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw StageError("output", "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

json RunManifest::to_json() const {
  return {{"schema", 1},
          {"config", config},
          {"problem", problem},
          {"degree", degree},
          {"cells", cells},
          {"time_knots", time_knots},
          {"outputs", outputs},
          {"timings", {{"compile", compile_seconds}, {"solve", solve_seconds}, {"analyze", analyze_seconds}}},
          {"nnz", nnz},
          {"status", status}};
}

RoaProblem resolve_problem(const RunConfig& config) {
  if (config.config_path.empty() == config.builtin.empty()) {
    throw StageError("config", "give exactly one of --config and --builtin");
  }
  ProblemConfig pc;
  try {
    if (!config.config_path.empty()) {
      pc = load_problem_config(config.config_path);
    } else {
      pc.problem = builtin_problem(config.builtin);
    }
  } catch (const ConfigError& e) {
    throw StageError("config", e.what());
  } catch (const std::invalid_argument& e) {
    throw StageError("config", e.what());
  }
  RoaProblem p = std::move(pc.problem);
  if (config.degree) p.degree = *config.degree;
  try {
    if (config.cells) {
      const std::uint64_t seed = config.seed.value_or(pc.partition.seed);
      p.cells = make_cells(p.X, PartitionSpec::parse(*config.cells, seed));
    } else if (config.seed && pc.partition.kind == PartitionSpec::Kind::kHalving) {
      PartitionSpec spec = pc.partition;
      spec.seed = *config.seed;
      p.cells = make_cells(p.X, spec);
    }
    if (config.time_knots) p.time_grid = TimeGrid(parse_knots(*config.time_knots, p.T));
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw StageError("config", e.what());
  }
  return p;
}

RunManifest run(const RunConfig& config) {
  const RoaProblem problem = resolve_problem(config);
  std::filesystem::create_directories(config.out);

  RunManifest man;
  man.config = config.config_path.empty() ? "builtin:" + config.builtin : config.config_path;
  man.problem = problem.name;
  man.degree = problem.degree;
  man.cells = problem.cells.size();
  man.time_knots = problem.time_grid.knots();

  RunOptions opt;
  opt.solve.tol_feas = config.tol;
  opt.solve.tol_gap = config.tol;
  opt.solve.max_iters = config.max_iters;
  opt.solve.backend = config.backend;
  if (config.log) opt.solve.log = &std::cerr;
  opt.repair = config.repair;
  std::ofstream dump;
  if (!config.dump_sdp.empty()) {
    dump.open(config.dump_sdp);
    if (!dump) throw StageError("output", "cannot write " + config.dump_sdp);
    opt.dump_sdp = &dump;
  }

  RunResult r;
  try {
    r = run_problem(problem, opt);
  } catch (const DegreeError& e) {
    throw StageError("compile", e.what());
  } catch (const std::invalid_argument& e) {
    throw StageError("solve", e.what());
  }
  man.nnz = r.nnz;
  man.compile_seconds = r.compile_seconds;
  man.solve_seconds = r.solve_seconds;
  man.status = status_name(r.report.status);
  man.ok = r.ok();
  man.objective = r.objective;
  if (!config.dump_sdp.empty()) man.outputs.push_back(config.dump_sdp);

  const auto seed = config.seed.value_or(kDefaultSeed);
  json result = {{"schema", 1},
                 {"problem",
                  {{"name", problem.name},
                   {"n", problem.system.n},
                   {"m", problem.system.m},
                   {"T", problem.T},
                   {"X", box_json(problem.X)},
                   {"degree", problem.degree},
                   {"v_degree", r.program.layout.v_degree}}},
                 {"partition", {{"cells", json::array()}, {"facets", json::array()}}},
                 {"time_knots", problem.time_grid.knots()},
                 {"nnz", r.nnz},
                 {"rows", r.program.sdp.n_rows()},
                 {"vars", r.program.sdp.n_vars()},
                 {"certificates", r.program.layout.certificates.size()},
                 {"status", man.status},
                 {"solver",
                  {{"backend", r.report.backend},
                   {"iterations", r.report.iterations},
                   {"primal_objective", r.report.primal_objective},
                   {"dual_objective", r.report.dual_objective},
                   {"primal_infeasibility", r.report.primal_infeasibility},
                   {"dual_infeasibility", r.report.dual_infeasibility},
                   {"relative_gap", r.report.relative_gap},
                   {"message", r.report.message}}},
                 {"objective", r.objective}};
  for (const auto& c : problem.cells) result["partition"]["cells"].push_back({{"id", c.id}, {"box", box_json(c.box)}});
  for (const auto& f : neighbor_facets(problem.cells)) {
    result["partition"]["facets"].push_back({{"a", f.a}, {"b", f.b}, {"axis", f.axis}, {"value", f.value}});
  }
  if (r.repair) {
    result["repair"] = {{"ok", r.repair->ok}, {"margin", r.repair->margin}, {"failed", r.repair->failed}};
  } else {
    result["repair"] = nullptr;
  }

  const auto start = std::chrono::steady_clock::now();
  if (r.ok()) {
    const RoaCertificate cert(problem, r.program.layout, r.x);
    man.v_volume = volume(cert, VolumeMode::kVSet, config.samples, seed);
    man.w_volume = volume(cert, VolumeMode::kWSet, config.samples, seed);
    result["volumes"] = {{"v", volume_json(man.v_volume)}, {"w", volume_json(man.w_volume)}};
    json res = json::object();
    for (const auto& [fam, worst] : identity_residuals(problem, r.program, r.x, kResidualPoints, seed)) {
      res[family_name(fam)] = worst;
    }
    result["residuals"] = res;
    const auto grid_path = config.out / "grid.csv";
    std::ofstream grid(grid_path);
    if (!grid) throw StageError("output", "cannot write " + grid_path.string());
    write_grid_csv(cert, config.grid.value_or(default_grid(problem.system.n)), grid);
    man.outputs.push_back(grid_path.string());
  } else {
    result["volumes"] = nullptr;
    result["residuals"] = nullptr;
  }
  man.analyze_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result["timings"] = {{"compile", r.compile_seconds},
                       {"solve", r.solve_seconds},
                       {"repair", r.repair_seconds},
                       {"analyze", man.analyze_seconds}};

  const auto result_path = config.out / "result.json";
  write_json(result_path, result);
  man.outputs.push_back(result_path.string());
  const auto manifest_path = config.out / "manifest.json";
  man.outputs.push_back(manifest_path.string());
  write_json(manifest_path, man.to_json());
  return man;
}

std::vector<RunManifest> sweep(const RunConfig& config, SweepAxis axis, const std::vector<std::string>& values) {
  if (values.empty()) throw StageError("config", "sweep needs at least one value");
  std::filesystem::create_directories(config.out);
  std::vector<RunManifest> runs;
  std::ofstream csv(config.out / "sweep.csv");
  if (!csv) throw StageError("output", "cannot write sweep.csv");
  csv << "value,nnz,time,volume,std_error,status\n" << std::setprecision(12);
  json listing = json::array();
  for (const auto& value : values) {
    RunConfig c = config;
    const std::string name = axis == SweepAxis::kDegree ? "degree" : "cells";
    c.out = config.out / (name + "_" + value);
    if (axis == SweepAxis::kDegree) {
      c.degree = static_cast<std::uint32_t>(std::stoul(value));
    } else {
      c.cells = value;
    }
    RunManifest m;
    try {
      m = run(c);
    } catch (const StageError& e) {
      m.status = e.what();
    }
    // Cell sweeps give counts; report the value as the resulting number of cells.
    const std::string shown = axis == SweepAxis::kCells && m.cells ? std::to_string(m.cells) : value;
    csv << shown << ',' << m.nnz << ',' << m.solve_seconds << ',' << m.v_volume.mean << ',' << m.v_volume.std_error
        << ',' << '"' << m.status << '"' << '\n';
    listing.push_back(m.to_json());
    runs.push_back(std::move(m));
  }
  write_json(config.out / "sweep_manifest.json", listing);
  return runs;
}

int main(int argc, char** argv) {
  CLI::App app{"Region-of-attraction outer approximations with split SOS programs."};
  RunConfig cfg;
  std::string out = cfg.out.string();
  std::uint32_t degree = 0;
  std::string cells, knots, sweep_axis, sweep_values;
  std::uint64_t seed = 0;
  std::size_t grid = 0;
  bool no_repair = false;
  auto* config_opt = app.add_option("--config", cfg.config_path, "TOML problem file");
  auto* builtin_opt = app.add_option("--builtin", cfg.builtin, "cubic, double_integrator or brockett");
  config_opt->excludes(builtin_opt);
  auto* degree_opt = app.add_option("--degree", degree, "relaxation degree d (even)");
  auto* cells_opt = app.add_option("--cells", cells, "partition: 1, 2x2, halving:8, cuts:-0.5,0.5");
  auto* knots_opt = app.add_option("--time-knots", knots, "comma-separated knots from 0 to T, or uniform:K");
  auto* seed_opt = app.add_option("--seed", seed, "seed for halving splits and Monte-Carlo sampling");
  app.add_option("--samples", cfg.samples, "Monte-Carlo samples")->check(CLI::Range(10000ul, 1000000000ul));
  app.add_option("--out", out, "output directory");
  app.add_option("--dump-sdp", cfg.dump_sdp, "write the compiled SDP in CBF format");
  app.add_option("--tol", cfg.tol, "solver feasibility and gap tolerance");
  app.add_option("--max-iters", cfg.max_iters, "solver iteration cap");
  app.add_option("--backend", cfg.backend, "solver backend")->check(CLI::IsMember(available_backends()));
  auto* grid_opt = app.add_option("--grid", grid, "grid CSV points per axis");
  app.add_flag("--no-repair", no_repair, "skip the Gram repair after the solve");
  app.add_flag("--log", cfg.log, "print solver iterations to stderr");
  auto* axis_opt =
      app.add_option("--sweep", sweep_axis, "sweep axis")->check(CLI::IsMember({"degree", "cells"}));
  app.add_option("--values", sweep_values, "comma-separated sweep values (cells use ';')")->needs(axis_opt);
  CLI11_PARSE(app, argc, argv);

  cfg.out = out;
  if (*degree_opt) cfg.degree = degree;
  if (*cells_opt) cfg.cells = cells;
  if (*knots_opt) cfg.time_knots = knots;
  if (*seed_opt) cfg.seed = seed;
  if (*grid_opt) cfg.grid = grid;
  cfg.repair = !no_repair;
  if (!*config_opt && !*builtin_opt) {
    std::cerr << "error: one of --config or --builtin is required\n";
    return 1;
  }

  try {
    if (!sweep_axis.empty()) {
      // Cell specs may contain commas (cuts), so they are separated by ';'.
      const char sep = sweep_axis == "cells" ? ';' : ',';
      std::vector<std::string> values;
      std::stringstream ss(sweep_values);
      std::string item;
      while (std::getline(ss, item, sep)) {
        if (!item.empty()) values.push_back(item);
      }
      const auto runs = sweep(cfg, sweep_axis == "degree" ? SweepAxis::kDegree : SweepAxis::kCells, values);
      bool all_ok = true;
      for (const auto& m : runs) {
        std::cout << sweep_axis << ' ' << m.degree << ' ' << m.cells << " cells: " << m.status << ", nnz " << m.nnz
                  << ", solve " << m.solve_seconds << " s\n";
        all_ok = all_ok && m.ok;
      }
      return all_ok ? 0 : 2;
    }
    const RunManifest m = run(cfg);
    std::cout << m.problem << " d=" << m.degree << " cells=" << m.cells << ": " << m.status << ", objective "
              << m.objective << ", nnz " << m.nnz << ", solve " << m.solve_seconds << " s\n";
    if (m.ok) {
      std::cout << "v-set volume " << m.v_volume.mean << " +- " << m.v_volume.std_error << ", w-set volume "
                << m.w_volume.mean << " +- " << m.w_volume.std_error << '\n';
    } else {
      std::cerr << "solve: " << m.status << '\n';
    }
    return m.ok ? 0 : 2;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace splitroa::cli
