#include "splitroa/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "splitroa/toml_lite.hpp"

namespace splitroa {

void ControlSystem::validate() const {
  if (n == 0) throw std::invalid_argument("system needs at least one state");
  if (f.size() != n) {
    throw std::invalid_argument("system has " + std::to_string(n) + " states but " + std::to_string(f.size()) +
                                " dynamics components");
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (VarId v : f[j].variables()) {
      if (v >= n_vars()) {
        throw std::invalid_argument("f" + std::to_string(j + 1) + " uses an undeclared variable (id " +
                                    std::to_string(v) + ")");
      }
    }
  }
}

std::uint32_t ControlSystem::degree() const {
  std::uint32_t d = 0;
  for (const auto& fj : f) d = std::max(d, fj.degree());
  return d;
}

Polynomial lie_derivative(const Polynomial& v, const ControlSystem& system) {
  for (VarId id : v.variables()) {
    if (id > system.n) throw std::invalid_argument("lie_derivative: v may only depend on t and the states");
  }
  if (system.f.size() != system.n) throw std::invalid_argument("lie_derivative: dimension mismatch");
  Polynomial out = differentiate(v, kTimeVar);
  for (std::size_t j = 0; j < system.n; ++j) {
    Polynomial dv = differentiate(v, state_var(j));
    if (!dv.is_zero()) out += dv * system.f[j];
  }
  return out;
}

void RoaProblem::validate() const {
  system.validate();
  const std::size_t n = system.n;
  if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
  if (degree < 2 || degree % 2 != 0) throw std::invalid_argument("relaxation degree must be even and >= 2");
  if (X.size() != n) throw std::invalid_argument("X must have one interval per state");
  for (const auto& iv : X) {
    if (!(iv.lo < iv.hi)) throw std::invalid_argument("X has a degenerate interval");
  }
  if (system.m > 0) {
    if (!U) throw std::invalid_argument("system has inputs but U is not given");
    if (U_box.size() != system.m) throw std::invalid_argument("U_box must have one interval per input");
  } else if (U) {
    throw std::invalid_argument("U given for a system without inputs");
  }
  const auto check_vars = [&](const SemialgebraicSet& s, VarId lo, VarId hi, const char* what) {
    for (const auto& g : s.inequalities()) {
      for (VarId v : g.variables()) {
        if (v < lo || v > hi) throw std::invalid_argument(std::string(what) + " uses an undeclared variable");
      }
    }
  };
  if (U) check_vars(*U, input_var(n, 0), input_var(n, system.m - 1), "U");
  if (XT.empty()) throw std::invalid_argument("X_T is not given");
  check_vars(XT, state_var(0), state_var(n - 1), "X_T");
  if (XT_box.size() != n) throw std::invalid_argument("XT_box must have one interval per state");
  if (cells.empty()) throw std::invalid_argument("partition has no cells");
  double total = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = cells[i];
    if (c.id != i) throw std::invalid_argument("cell ids must be 0..I-1 in order");
    if (c.box.size() != n) throw std::invalid_argument("cell dimension mismatch");
    for (std::size_t j = 0; j < n; ++j) {
      if (!(c.box[j].lo < c.box[j].hi)) throw std::invalid_argument("cell has a degenerate interval");
      if (c.box[j].lo < X[j].lo || c.box[j].hi > X[j].hi) throw std::invalid_argument("cell leaves X");
    }
    total += volume(c.box);
  }
  if (std::abs(total - volume(X)) > 1e-12 * volume(X)) throw std::invalid_argument("cells do not tile X");
  if (time_grid.intervals() == 0) throw std::invalid_argument("time grid is empty");
  if (time_grid.horizon() != T) throw std::invalid_argument("time grid must end at T");
}

// ------------------------------------------------------------ partitions

PartitionSpec PartitionSpec::parse(const std::string& text, std::uint64_t seed) {
  PartitionSpec spec;
  spec.seed = seed;
  auto parse_list = [](const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument("bad number '" + item + "' in cell spec");
      out.push_back(v);
    }
    return out;
  };
  try {
    if (text.rfind("halving:", 0) == 0) {
      spec.kind = Kind::kHalving;
      spec.n_cells = std::stoul(text.substr(8));
      if (spec.n_cells == 0) throw std::invalid_argument("halving needs at least one cell");
      return spec;
    }
    if (text.rfind("cuts:", 0) == 0) {
      spec.kind = Kind::kCuts;
      std::stringstream ss(text.substr(5));
      std::string axis;
      while (std::getline(ss, axis, '|')) spec.cuts.push_back(parse_list(axis));
      if (text.back() == '|') spec.cuts.emplace_back();
      return spec;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, 'x')) {
      std::size_t used = 0;
      const auto v = std::stoul(item, &used);
      if (used != item.size() || v == 0) throw std::invalid_argument("bad cell count");
      spec.cells_per_axis.push_back(v);
    }
    if (spec.cells_per_axis.empty()) throw std::invalid_argument("empty cell spec");
    spec.kind = Kind::kUniform;
    return spec;
  } catch (const std::logic_error&) {
    throw std::invalid_argument("cannot parse cell spec '" + text +
                                "' (expected e.g. '2x2', 'halving:8' or 'cuts:-0.5,0.5')");
  }
}

std::string PartitionSpec::to_string() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::kSingle:
      os << "1";
      break;
    case Kind::kUniform:
      for (std::size_t j = 0; j < cells_per_axis.size(); ++j) os << (j ? "x" : "") << cells_per_axis[j];
      break;
    case Kind::kCuts:
      os << "cuts:";
      for (std::size_t j = 0; j < cuts.size(); ++j) {
        if (j) os << "|";
        for (std::size_t c = 0; c < cuts[j].size(); ++c) os << (c ? "," : "") << cuts[j][c];
      }
      break;
    case Kind::kHalving:
      os << "halving:" << n_cells;
      break;
  }
  return os.str();
}

std::vector<Cell> make_cells(const Box& X, const PartitionSpec& spec) {
  switch (spec.kind) {
    case PartitionSpec::Kind::kSingle:
      return {Cell{0, X}};
    case PartitionSpec::Kind::kUniform: {
      std::vector<std::size_t> counts = spec.cells_per_axis;
      // A single count applies to every axis.
      if (counts.size() == 1 && X.size() > 1) counts.assign(X.size(), counts[0]);
      if (counts.size() != X.size()) throw std::invalid_argument("cell counts do not match the state dimension");
      std::vector<std::size_t> cuts(counts.size());
      for (std::size_t j = 0; j < counts.size(); ++j) cuts[j] = counts[j] - 1;
      return split_box_uniform(X, cuts);
    }
    case PartitionSpec::Kind::kCuts: {
      CutPlan plan{spec.cuts};
      plan.cuts.resize(X.size());
      if (spec.cuts.size() > X.size()) throw std::invalid_argument("cut plan has more axes than states");
      return split_box(X, plan);
    }
    case PartitionSpec::Kind::kHalving:
      return halving_split_sequence(X, spec.n_cells, spec.seed);
  }
  throw std::logic_error("unreachable");
}

// -------------------------------------------------------------- builtins

namespace {

SemialgebraicSet ball(std::size_t n, double radius) {
  Polynomial g(radius * radius);
  for (std::size_t j = 0; j < n; ++j) g -= pow(Polynomial::var(state_var(j)), 2);
  return SemialgebraicSet({g});
}

Box cube(std::size_t n, double r) { return Box(n, Interval{-r, r}); }

}  // namespace

RoaProblem builtin_problem(const std::string& name, const BuiltinOptions& options) {
  RoaProblem p;
  p.name = name;
  if (name == "cubic") {
    const auto x = Polynomial::var(state_var(0));
    p.system = {1, 0, {x * (x - Polynomial(0.5)) * (x + Polynomial(0.5))}};
    p.X = {{-1.0, 1.0}};
    p.XT_box = {{-0.01, 0.01}};
    p.XT = box_description(p.XT_box);
    p.T = 100.0;
  } else if (name == "double_integrator") {
    const auto x2 = Polynomial::var(state_var(1));
    const auto u = Polynomial::var(input_var(2, 0));
    p.system = {2, 1, {x2, u}};
    p.X = {{-0.7, 0.7}, {-1.2, 1.2}};
    p.U = SemialgebraicSet({Polynomial(1.0) - u * u});
    p.U_box = {{-1.0, 1.0}};
    p.XT = ball(2, options.target_radius);
    p.XT_box = cube(2, options.target_radius);
    p.T = 1.0;
  } else if (name == "brockett") {
    const auto x1 = Polynomial::var(state_var(0));
    const auto x2 = Polynomial::var(state_var(1));
    const auto u1 = Polynomial::var(input_var(3, 0));
    const auto u2 = Polynomial::var(input_var(3, 1));
    p.system = {3, 2, {u1, u2, u1 * x2 - u2 * x1}};
    p.X = cube(3, 1.0);
    p.U = SemialgebraicSet({Polynomial(1.0) - u1 * u1 - u2 * u2});
    p.U_box = cube(2, 1.0);
    p.XT = ball(3, options.target_radius);
    p.XT_box = cube(3, options.target_radius);
    p.T = 1.0;
  } else {
    throw std::invalid_argument("unknown builtin problem '" + name +
                                "' (expected cubic, double_integrator or brockett)");
  }
  p.cells = {Cell{0, p.X}};
  p.time_grid = TimeGrid({0.0, p.T});
  return p;
}

void set_partition(RoaProblem& problem, std::vector<Cell> cells, TimeGrid grid) {
  problem.cells = std::move(cells);
  problem.time_grid = std::move(grid);
}

// ---------------------------------------------------------------- config

namespace {

class ConfigReader {
 public:
  explicit ConfigReader(const TomlDocument& doc) : doc_(doc) {}

  [[noreturn]] void fail(const std::string& path, const std::string& msg, std::size_t col_offset = 0) const {
    auto it = doc_.positions.find(path);
    std::size_t line = 0;
    std::size_t col = 0;
    if (it != doc_.positions.end()) {
      line = it->second.first;
      col = it->second.second + col_offset;
    }
    std::string where = line ? "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " : "";
    throw ConfigError(where + path + ": " + msg, line, col);
  }

  const nlohmann::json* find(const std::string& table, const std::string& key) const {
    auto t = doc_.root.find(table);
    if (t == doc_.root.end() || !t->is_object()) return nullptr;
    auto k = t->find(key);
    return k == t->end() ? nullptr : &*k;
  }

  double number(const nlohmann::json& j, const std::string& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
  }

  std::size_t count(const nlohmann::json& j, const std::string& path) const {
    if (!j.is_number_integer() || j.get<long long>() < 0) fail(path, "expected a nonnegative integer");
    return j.get<std::size_t>();
  }

  Box box(const nlohmann::json& j, const std::string& path, std::size_t dim) const {
    if (!j.is_array()) fail(path, "expected a list of [lo, hi] pairs");
    Box b;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      if (!j[i].is_array() || j[i].size() != 2) fail(p, "expected [lo, hi]");
      Interval iv{number(j[i][0], p + "[0]"), number(j[i][1], p + "[1]")};
      if (!(iv.lo < iv.hi)) fail(p, "interval must satisfy lo < hi");
      b.push_back(iv);
    }
    if (b.size() != dim) fail(path, "expected " + std::to_string(dim) + " intervals");
    return b;
  }

  std::vector<Polynomial> polys(const nlohmann::json& j, const std::string& path, std::size_t n,
                                std::size_t m) const {
    if (!j.is_array()) fail(path, "expected a list of polynomial strings");
    std::vector<Polynomial> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      if (!j[i].is_string()) fail(p, "expected a polynomial string");
      try {
        out.push_back(parse_polynomial(j[i].get<std::string>(), n, m));
      } catch (const ParseError& e) {
        // +1 skips the opening quote.
        fail(p, e.what(), e.column());
      }
    }
    return out;
  }

 private:
  const TomlDocument& doc_;
};

}  // namespace

ProblemConfig parse_problem_config(const std::string& text) {
  TomlDocument doc;
  try {
    doc = parse_toml(text);
  } catch (const TomlError& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ", column " + std::to_string(e.column()) + ": " + e.what(),
                      e.line(), e.column());
  }
  ConfigReader r(doc);
  ProblemConfig cfg;
  RoaProblem& p = cfg.problem;

  BuiltinOptions builtin_opts;
  if (const auto* j = r.find("sets", "target_radius")) builtin_opts.target_radius = r.number(*j, "sets.target_radius");

  auto builtin = doc.root.find("builtin");
  if (builtin != doc.root.end()) {
    if (!builtin->is_string()) r.fail("builtin", "expected a string");
    try {
      p = builtin_problem(builtin->get<std::string>(), builtin_opts);
    } catch (const std::invalid_argument& e) {
      r.fail("builtin", e.what());
    }
  } else {
    p.name = "custom";
  }
  if (auto name = doc.root.find("name"); name != doc.root.end() && name->is_string()) p.name = name->get<std::string>();

  const bool have_system = doc.root.contains("system");
  if (have_system) {
    const auto* n = r.find("system", "n");
    const auto* f = r.find("system", "f");
    if (!n) r.fail("system.n", "missing");
    if (!f) r.fail("system.f", "missing");
    p.system.n = r.count(*n, "system.n");
    p.system.m = 0;
    if (const auto* m = r.find("system", "m")) p.system.m = r.count(*m, "system.m");
    p.system.f = r.polys(*f, "system.f", p.system.n, p.system.m);
    p.U.reset();
    p.U_box.clear();
  } else if (builtin == doc.root.end()) {
    r.fail("system", "missing [system] table (or a builtin = \"...\" line)");
  }
  const std::size_t n = p.system.n;
  const std::size_t m = p.system.m;

  if (const auto* X = r.find("sets", "X")) {
    p.X = r.box(*X, "sets.X", n);
  } else if (have_system) {
    r.fail("sets.X", "missing");
  }
  if (const auto* U = r.find("sets", "U")) {
    auto g = r.polys(*U, "sets.U", n, m);
    if (!g.empty()) p.U = SemialgebraicSet(std::move(g));
  }
  if (const auto* Ub = r.find("sets", "U_box")) {
    p.U_box = r.box(*Ub, "sets.U_box", m);
  } else if (p.U && p.U_box.size() != m) {
    p.U_box = Box(m, Interval{-1.0, 1.0});
  }
  if (const auto* XT = r.find("sets", "XT")) {
    if (XT->is_string() && XT->get<std::string>() == "origin") {
      Polynomial g(builtin_opts.target_radius * builtin_opts.target_radius);
      for (std::size_t j = 0; j < n; ++j) g -= pow(Polynomial::var(state_var(j)), 2);
      p.XT = SemialgebraicSet({g});
      p.XT_box = Box(n, Interval{-builtin_opts.target_radius, builtin_opts.target_radius});
    } else {
      auto g = r.polys(*XT, "sets.XT", n, 0);
      if (g.empty()) r.fail("sets.XT", "needs at least one inequality");
      p.XT = SemialgebraicSet(std::move(g));
      const auto* box = r.find("sets", "XT_box");
      if (!box) r.fail("sets.XT_box", "required when XT is given as inequalities");
      p.XT_box = r.box(*box, "sets.XT_box", n);
    }
  } else if (have_system) {
    r.fail("sets.XT", "missing");
  }

  if (const auto* T = r.find("roa", "T")) p.T = r.number(*T, "roa.T");
  if (const auto* d = r.find("roa", "degree")) p.degree = static_cast<std::uint32_t>(r.count(*d, "roa.degree"));

  std::uint64_t seed = 0;
  if (const auto* s = r.find("roa", "seed")) seed = r.count(*s, "roa.seed");
  cfg.partition.seed = seed;
  if (const auto* c = r.find("roa", "cells_per_axis")) {
    cfg.partition.kind = PartitionSpec::Kind::kUniform;
    if (!c->is_array()) r.fail("roa.cells_per_axis", "expected a list of counts");
    for (std::size_t i = 0; i < c->size(); ++i) {
      cfg.partition.cells_per_axis.push_back(r.count((*c)[i], "roa.cells_per_axis[" + std::to_string(i) + "]"));
    }
  } else if (const auto* cuts = r.find("roa", "cuts")) {
    cfg.partition.kind = PartitionSpec::Kind::kCuts;
    if (!cuts->is_array()) r.fail("roa.cuts", "expected a list of per-axis cut lists");
    for (std::size_t j = 0; j < cuts->size(); ++j) {
      const std::string path = "roa.cuts[" + std::to_string(j) + "]";
      if (!(*cuts)[j].is_array()) r.fail(path, "expected a list of cut positions");
      std::vector<double> axis;
      for (std::size_t c = 0; c < (*cuts)[j].size(); ++c) {
        axis.push_back(r.number((*cuts)[j][c], path + "[" + std::to_string(c) + "]"));
      }
      cfg.partition.cuts.push_back(std::move(axis));
    }
  } else if (const auto* nc = r.find("roa", "n_cells")) {
    cfg.partition.kind = PartitionSpec::Kind::kHalving;
    cfg.partition.n_cells = r.count(*nc, "roa.n_cells");
  }
  if (const auto* knots = r.find("roa", "time_knots")) {
    if (!knots->is_array()) r.fail("roa.time_knots", "expected a list of times");
    for (std::size_t k = 0; k < knots->size(); ++k) {
      cfg.time_knots.push_back(r.number((*knots)[k], "roa.time_knots[" + std::to_string(k) + "]"));
    }
  }

  try {
    p.cells = make_cells(p.X, cfg.partition);
    p.time_grid = cfg.time_knots.empty() ? TimeGrid({0.0, p.T}) : TimeGrid(cfg.time_knots);
  } catch (const std::invalid_argument& e) {
    r.fail("roa", e.what());
  }
  return cfg;
}

ProblemConfig load_problem_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", 0, 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem_config(ss.str());
}

}  // namespace splitroa
