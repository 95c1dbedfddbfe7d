#include "splitroa/compiler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace splitroa {

namespace {

const double kSqrt2 = std::sqrt(2.0);
// Multipliers whose scaled coefficients all fall below this are treated as
// identically zero (e.g. h'f vanishing on a facet through an equilibrium).
constexpr double kMultiplierPruneTol = 1e-12;

struct ChartAxis {
  VarId var;
  Interval range;
};

Chart make_chart(const std::vector<ChartAxis>& axes, std::map<VarId, double> fixed, bool scale) {
  Chart chart;
  chart.fixed = std::move(fixed);
  for (const auto& a : axes) {
    if (a.range.width() == 0.0) {
      chart.fixed[a.var] = a.range.lo;
      continue;
    }
    chart.vars.push_back(a.var);
    chart.center.push_back(scale ? a.range.center() : 0.0);
    chart.radius.push_back(scale ? a.range.radius() : 1.0);
  }
  return chart;
}

/// Substitution taking a piece's local coordinates to a certificate's.
std::map<VarId, AffineVar> piece_to_certificate(const Chart& piece, const Chart& cert, const std::string& id) {
  std::map<VarId, AffineVar> map;
  for (std::size_t p = 0; p < piece.vars.size(); ++p) {
    const VarId v = piece.vars[p];
    const double cl = piece.center[p];
    const double rl = piece.radius[p];
    if (auto f = cert.fixed.find(v); f != cert.fixed.end()) {
      map[v] = AffineVar{std::nullopt, (f->second - cl) / rl, 0.0};
      continue;
    }
    auto it = std::find(cert.vars.begin(), cert.vars.end(), v);
    if (it == cert.vars.end()) throw std::logic_error(id + ": piece variable missing from certificate domain");
    const auto q = static_cast<std::size_t>(it - cert.vars.begin());
    map[v] = AffineVar{v, (cert.center[q] - cl) / rl, cert.radius[q] / rl};
  }
  return map;
}

struct Assembly {
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> b;
  std::size_t next_var = 0;
  std::vector<ConeBlock> psd_cones;
};

const PieceLayout& piece_of(const DecisionLayout& layout, const LhsTerm& t) {
  if (t.kind == LhsTerm::Kind::kAux) return layout.aux.at(t.cell);
  return t.is_w ? layout.w.at(t.cell) : layout.v.at(t.cell).at(t.interval);
}

void assemble_certificate(const RoaProblem& problem, const DecisionLayout& layout, CertificateRecord& rec,
                          Assembly& out) {
  const CertificateSpec& spec = rec.spec;
  const std::uint32_t d = spec.degree.value_or(layout.degree);
  const auto rows = monomial_basis(spec.chart.vars, spec.equality ? layout.v_degree : d);
  std::unordered_map<Monomial, std::size_t, MonomialHash> row_of;
  row_of.reserve(rows.size() * 2);
  for (std::size_t r = 0; r < rows.size(); ++r) row_of.emplace(rows[r], r);
  rec.row_begin = out.b.size();
  rec.row_count = rows.size();
  out.b.resize(out.b.size() + rows.size(), 0.0);

  auto row_index = [&](const Monomial& m) {
    auto it = row_of.find(m);
    if (it == row_of.end()) {
      throw DegreeError(spec.id + ": term " + m.to_string(problem.system.n) + " exceeds relaxation degree " +
                        std::to_string(d));
    }
    return rec.row_begin + it->second;
  };

  const auto to_local = spec.chart.original_to_local();

  // Left-hand side: free slots enter with a minus sign so that each row reads
  // sum(gram terms) - lhs(slots) = lhs constant.
  Polynomial constant;
  for (const auto& term : spec.lhs) {
    if (term.kind == LhsTerm::Kind::kConstant) {
      constant += Polynomial(term.coef);
      continue;
    }
    const PieceLayout& piece = piece_of(layout, term);
    const auto map = piece_to_certificate(piece.chart, spec.chart, spec.id);
    std::vector<std::pair<VarId, Polynomial>> flow;  // (var, f_var / radius in cert coordinates)
    if (term.kind == LhsTerm::Kind::kNegLiouville) {
      for (std::size_t p = 0; p < piece.chart.vars.size(); ++p) {
        const VarId v = piece.chart.vars[p];
        Polynomial rate = (v == kTimeVar) ? Polynomial(1.0) : substitute_affine(problem.system.f.at(v - 1), to_local);
        flow.emplace_back(v, rate * (1.0 / piece.chart.radius[p]));
      }
    }
    const Polynomial factor = substitute_affine(term.factor, to_local);
    for (std::size_t a = 0; a < piece.basis.size(); ++a) {
      Polynomial contribution;
      if (term.kind != LhsTerm::Kind::kNegLiouville) {
        contribution = substitute_affine(Polynomial(piece.basis[a]), map) * factor;
      } else {
        for (const auto& [v, rate] : flow) {
          Polynomial dm = differentiate(Polynomial(piece.basis[a]), v);
          if (dm.is_zero()) continue;
          contribution -= substitute_affine(dm, map) * rate;
        }
      }
      contribution *= term.coef;
      for (const auto& [m, c] : contribution.terms()) {
        out.triplets.emplace_back(static_cast<int>(row_index(m)), static_cast<int>(piece.offset + a), -c);
      }
    }
  }
  for (const auto& [m, c] : constant.terms()) out.b[row_index(m)] += c;

  // SOS terms: q (multiplier 1) followed by one s_j per g_j.
  auto add_gram = [&](const Polynomial& g_local, int which, double scale) {
    const std::uint32_t dg = g_local.degree();
    if (dg > d) {
      throw DegreeError(spec.id + ": multiplier g" + std::to_string(which + 1) + " has degree " + std::to_string(dg) +
                        " > relaxation degree " + std::to_string(d));
    }
    const std::uint32_t half = (d - dg) / 2;
    GramBlock block;
    block.offset = out.next_var;
    block.basis = monomial_basis(spec.chart.vars, half);
    block.multiplier = which;
    block.scale = scale;
    const std::size_t order = block.basis.size();
    for (std::size_t a = 0; a < order; ++a) {
      for (std::size_t bi = a; bi < order; ++bi) {
        const Monomial prod = block.basis[a] * block.basis[bi];
        const double w = (a == bi) ? 1.0 : kSqrt2;
        const auto col = static_cast<int>(block.offset + svec_index(order, bi, a));
        for (const auto& [mg, cg] : g_local.terms()) {
          out.triplets.emplace_back(static_cast<int>(row_index(prod * mg)), col, w * cg);
        }
      }
    }
    out.next_var += order * (order + 1) / 2;
    out.psd_cones.push_back({ConeBlock::Kind::kPsd, order});
    rec.grams.push_back(std::move(block));
  };

  if (spec.equality) return;
  if (spec.free_sos) add_gram(Polynomial(1.0), -1, 1.0);
  for (std::size_t j = 0; j < spec.multipliers.size(); ++j) {
    Polynomial g = substitute_affine(spec.multipliers[j], to_local);
    double gmax = 0.0;
    for (const auto& [m, c] : g.terms()) gmax = std::max(gmax, std::abs(c));
    if (gmax <= kMultiplierPruneTol) continue;
    // Positive rescaling leaves {g >= 0} unchanged; a tiny target ball
    // would otherwise enter with coefficients of order radius^2.
    g *= 1.0 / gmax;
    add_gram(g, static_cast<int>(j), 1.0 / gmax);
  }
}

// t on the interval, then every state axis but the facet's normal.
std::vector<ChartAxis> facet_axes(const Facet& f, const Interval& time) {
  std::vector<ChartAxis> axes{{kTimeVar, time}};
  for (std::size_t j = 0; j < f.box.size(); ++j) {
    if (j != f.axis) axes.push_back({state_var(j), f.box[j]});
  }
  return axes;
}

// Sign of h'f when it is a nonzero constant or affine in one state and
// nonzero on the whole closed facet, else 0.
int fixed_sign(const Polynomial& h, const Facet& f) {
  if (h.degree() == 0) return h.is_zero() ? 0 : (h.coefficient(Monomial()) > 0 ? 1 : -1);
  if (h.degree() != 1) return 0;
  const auto vars = h.variables();
  if (vars.size() != 1 || vars[0] == kTimeVar || vars[0] > f.box.size()) return 0;
  const Interval& iv = f.box[vars[0] - 1];
  const double alpha = h.coefficient(Monomial::var(vars[0]));
  const double gamma = h.coefficient(Monomial());
  const double lo = alpha * iv.lo + gamma;
  const double hi = alpha * iv.hi + gamma;
  if (lo > 0 && hi > 0) return 1;
  if (lo < 0 && hi < 0) return -1;
  return 0;
}

// h'f on the facet equal to alpha * x_k + gamma with its zero inside the
// facet's closed range on axis k.
bool affine_zero_in_range(const Polynomial& h, const Facet& f) {
  if (h.degree() != 1) return false;
  const auto vars = h.variables();
  if (vars.size() != 1 || vars[0] == kTimeVar || vars[0] > f.box.size()) return false;
  const double root = -h.coefficient(Monomial()) / h.coefficient(Monomial::var(vars[0]));
  const Interval& iv = f.box[vars[0] - 1];
  const double tol = 1e-12 * std::max(1.0, iv.width());
  return root >= iv.lo - tol && root <= iv.hi + tol;
}

std::vector<Polynomial> concat(std::vector<Polynomial> a, const std::vector<Polynomial>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Boxes enter certificates as one quadratic (z - a)(b - z) >= 0 per axis.
// With the linear pair z - a, b - z the products s*g stop at degree d - 1,
// so any identity whose left side has a degenerate top-degree form (-Lv
// always does, along t) forces a singular Gram matrix.
std::vector<Polynomial> interval_description(VarId v, const Interval& iv) {
  const auto z = Polynomial::var(v);
  return {(z - Polynomial(iv.lo)) * (Polynomial(iv.hi) - z)};
}

std::vector<Polynomial> box_multipliers(const Box& box) {
  std::vector<Polynomial> out;
  for (std::size_t j = 0; j < box.size(); ++j) {
    if (box[j].width() > 0) out.push_back(interval_description(state_var(j), box[j]).front());
  }
  return out;
}

std::vector<ChartAxis> state_axes(const Box& box) {
  std::vector<ChartAxis> axes;
  for (std::size_t j = 0; j < box.size(); ++j) axes.push_back({state_var(j), box[j]});
  return axes;
}

void append_input_axes(const RoaProblem& p, std::vector<ChartAxis>& axes) {
  for (std::size_t j = 0; j < p.system.m; ++j) axes.push_back({input_var(p.system.n, j), p.U_box[j]});
}

std::vector<Polynomial> input_description(const RoaProblem& p) {
  return p.U ? p.U->inequalities() : std::vector<Polynomial>{};
}

double max_abs_coef(const Polynomial& p) {
  double m = 0.0;
  for (const auto& [mono, c] : p.terms()) m = std::max(m, std::abs(c));
  return m;
}

Polynomial flip_inputs(const RoaProblem& p, const Polynomial& q) {
  std::map<VarId, AffineVar> map;
  for (std::size_t j = 0; j < p.system.m; ++j) map[input_var(p.system.n, j)] = AffineVar{input_var(p.system.n, j), 0.0, -1.0};
  return substitute_affine(q, map);
}

// True when h'f takes both signs (or vanishes) for every (t, x) on the facet,
// so the forward/backward pair holds exactly when v_a = v_b there. That is
// the case for h'f = 0 and for h'f odd in u over a symmetric input set; the
// pair would then force its Gram matrices to zero.
bool facet_forces_equality(const RoaProblem& p, const Polynomial& h_on_facet) {
  const double scale = max_abs_coef(h_on_facet);
  if (scale <= kMultiplierPruneTol) return true;
  if (p.system.m == 0 || !p.U) return false;
  if (max_abs_coef(flip_inputs(p, h_on_facet) + h_on_facet) > 1e-12 * scale) return false;
  for (const auto& g : p.U->inequalities()) {
    if (max_abs_coef(flip_inputs(p, g) - g) > 1e-12 * std::max(1.0, max_abs_coef(g))) return false;
  }
  return true;
}

PieceLayout make_piece(std::vector<ChartAxis> axes, std::uint32_t degree, std::size_t& offset, bool scale) {
  PieceLayout piece;
  piece.chart = make_chart(axes, {}, scale);
  piece.basis = monomial_basis(piece.chart.vars, degree);
  piece.offset = offset;
  offset += piece.basis.size();
  return piece;
}

std::vector<double> objective_moments(const PieceLayout& w, const Box& cell) {
  // Integral over the cell of each basis monomial in chart coordinates.
  Box local(cell.size());
  double jacobian = 1.0;
  for (std::size_t j = 0; j < cell.size(); ++j) {
    const double c = w.chart.center[j];
    const double r = w.chart.radius[j];
    local[j] = {(cell[j].lo - c) / r, (cell[j].hi - c) / r};
    jacobian *= r;
  }
  std::vector<double> out;
  out.reserve(w.basis.size());
  for (const auto& m : w.basis) out.push_back(jacobian * box_moment(local, m, state_var(0)));
  return out;
}

CertificateSpec liouville_spec(const RoaProblem& p, const Box& cell_box, const Interval& time, std::size_t i,
                               std::size_t k, bool scale) {
  CertificateSpec s;
  s.id = "liouville[" + std::to_string(i) + "," + std::to_string(k) + "]";
  s.family = Family::kLiouville;
  s.cell = i;
  s.interval = k;
  std::vector<ChartAxis> axes{{kTimeVar, time}};
  for (const auto& a : state_axes(cell_box)) axes.push_back(a);
  append_input_axes(p, axes);
  s.chart = make_chart(axes, {}, scale);
  s.lhs = {{LhsTerm::Kind::kNegLiouville, 1.0, false, i, k}};
  s.multipliers = concat(concat(interval_description(kTimeVar, time), box_multipliers(cell_box)),
                         input_description(p));
  return s;
}

CertificateSpec initial_spec(const Box& cell_box, std::size_t i, bool scale) {
  CertificateSpec s;
  s.id = "initial[" + std::to_string(i) + "]";
  s.family = Family::kInitial;
  s.cell = i;
  s.chart = make_chart(state_axes(cell_box), {{kTimeVar, 0.0}}, scale);
  s.lhs = {{LhsTerm::Kind::kPiece, 1.0, true, i, 0},
           {LhsTerm::Kind::kPiece, -1.0, false, i, 0},
           {LhsTerm::Kind::kConstant, -1.0, false, 0, 0}};
  s.multipliers = box_multipliers(cell_box);
  return s;
}

std::optional<CertificateSpec> terminal_spec(const RoaProblem& p, const Box& cell_box, std::size_t i,
                                             std::size_t last, bool scale) {
  Box meet;
  if (!intersect(cell_box, p.XT_box, &meet)) return std::nullopt;
  CertificateSpec s;
  s.id = "terminal[" + std::to_string(i) + "]";
  s.family = Family::kTerminal;
  s.cell = i;
  s.interval = last;
  s.chart = make_chart(state_axes(meet), {{kTimeVar, p.T}}, scale);
  s.lhs = {{LhsTerm::Kind::kPiece, 1.0, false, i, last}};
  s.multipliers = concat(p.XT.inequalities(), box_multipliers(cell_box));
  return s;
}

CertificateSpec w_nonneg_spec(const Box& cell_box, std::size_t i, bool scale) {
  CertificateSpec s;
  s.id = "w_nonneg[" + std::to_string(i) + "]";
  s.family = Family::kWNonneg;
  s.cell = i;
  s.chart = make_chart(state_axes(cell_box), {}, scale);
  s.lhs = {{LhsTerm::Kind::kPiece, 1.0, true, i, 0}};
  s.multipliers = box_multipliers(cell_box);
  return s;
}

void finish(const RoaProblem& problem, CompiledProgram& prog, const std::vector<Box>& cell_boxes) {
  DecisionLayout& layout = prog.layout;
  Assembly asmb;
  asmb.next_var = layout.n_free;
  for (auto& rec : layout.certificates) assemble_certificate(problem, layout, rec, asmb);
  layout.n_vars = asmb.next_var;

  SdpProblem& sdp = prog.sdp;
  sdp.cones.clear();
  sdp.cones.push_back({ConeBlock::Kind::kFree, layout.n_free});
  sdp.cones.insert(sdp.cones.end(), asmb.psd_cones.begin(), asmb.psd_cones.end());
  sdp.A.resize(static_cast<Eigen::Index>(asmb.b.size()), static_cast<Eigen::Index>(layout.n_vars));
  sdp.A.setFromTriplets(asmb.triplets.begin(), asmb.triplets.end());
  sdp.A.prune(0.0, 0.0);
  sdp.A.makeCompressed();
  sdp.b = Eigen::Map<const Eigen::VectorXd>(asmb.b.data(), static_cast<Eigen::Index>(asmb.b.size()));
  sdp.c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.n_vars));
  for (std::size_t i = 0; i < layout.w.size(); ++i) {
    const auto l = objective_moments(layout.w[i], cell_boxes[i]);
    for (std::size_t a = 0; a < l.size(); ++a) sdp.c(static_cast<Eigen::Index>(layout.w[i].offset + a)) = l[a];
  }
  sdp.validate();
}

}  // namespace

// ------------------------------------------------------------------ Chart

std::vector<double> Chart::to_local(std::span<const double> z) const {
  VarId max_var = 0;
  for (VarId v : vars) max_var = std::max(max_var, v);
  std::vector<double> out(max_var + 1, 0.0);
  for (std::size_t p = 0; p < vars.size(); ++p) {
    if (vars[p] >= z.size()) throw std::invalid_argument("point does not cover the chart variables");
    out[vars[p]] = (z[vars[p]] - center[p]) / radius[p];
  }
  return out;
}

std::map<VarId, AffineVar> Chart::original_to_local() const {
  std::map<VarId, AffineVar> map;
  for (std::size_t p = 0; p < vars.size(); ++p) map[vars[p]] = AffineVar{vars[p], center[p], radius[p]};
  for (const auto& [v, value] : fixed) map[v] = AffineVar{std::nullopt, value, 0.0};
  return map;
}

const char* family_name(Family f) {
  switch (f) {
    case Family::kLiouville: return "liouville";
    case Family::kInitial: return "initial";
    case Family::kTerminal: return "terminal";
    case Family::kWNonneg: return "w_nonneg";
    case Family::kTimeStitch: return "time_stitch";
    case Family::kFacetForward: return "facet_forward";
    case Family::kFacetBackward: return "facet_backward";
    case Family::kFacetEquality: return "facet_equality";
    case Family::kFacetDivisible: return "facet_divisible";
    case Family::kFacetQuotient: return "facet_quotient";
  }
  return "?";
}

std::uint32_t value_function_degree(const RoaProblem& problem) {
  const std::uint32_t df = std::max<std::uint32_t>(1, problem.system.degree());
  if (problem.degree + 1 < df) {
    throw DegreeError("relaxation degree " + std::to_string(problem.degree) + " is below the dynamics degree " +
                      std::to_string(df));
  }
  return problem.degree + 1 - df;
}

CompiledProgram compile(const RoaProblem& problem, const CompileOptions& options) {
  problem.validate();
  const bool scale = options.scale_variables;
  const std::size_t I = problem.cells.size();
  const std::size_t K = problem.time_grid.intervals();
  CompiledProgram prog;
  DecisionLayout& layout = prog.layout;
  layout.n_cells = I;
  layout.n_intervals = K;
  layout.degree = problem.degree;
  layout.v_degree = value_function_degree(problem);

  std::size_t offset = 0;
  layout.v.resize(I);
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<ChartAxis> axes{{kTimeVar, problem.time_grid.interval(k)}};
      for (const auto& a : state_axes(problem.cells[i].box)) axes.push_back(a);
      layout.v[i].push_back(make_piece(axes, layout.v_degree, offset, scale));
    }
  }
  for (std::size_t i = 0; i < I; ++i) {
    layout.w.push_back(make_piece(state_axes(problem.cells[i].box), problem.degree, offset, scale));
  }

  // Facet classes decide which facets need a quotient polynomial per interval.
  struct FacetPlan {
    Facet facet;
    Polynomial h_on_facet;
    bool equality = false;
    bool divisible = false;
    std::size_t first_aux = 0;
  };
  std::vector<FacetPlan> plans;
  for (const Facet& f : neighbor_facets(problem.cells)) {
    FacetPlan plan;
    plan.facet = f;
    const Polynomial hf = problem.system.f[f.axis] * static_cast<double>(f.sign);
    plan.h_on_facet = substitute_affine(hf, {{state_var(f.axis), AffineVar{std::nullopt, f.value, 0.0}}});
    plan.equality = facet_forces_equality(problem, plan.h_on_facet);
    plan.divisible = !plan.equality && layout.v_degree >= 1 && affine_zero_in_range(plan.h_on_facet, f);
    if (plan.divisible) {
      plan.first_aux = layout.aux.size();
      for (std::size_t k = 0; k < K; ++k) {
        layout.aux.push_back(make_piece(facet_axes(f, problem.time_grid.interval(k)), layout.v_degree - 1, offset, scale));
        layout.aux.back().chart.fixed[state_var(f.axis)] = f.value;
      }
    }
    plans.push_back(std::move(plan));
  }
  layout.n_free = offset;

  auto& certs = layout.certificates;
  auto push = [&](CertificateSpec s) { certs.push_back(CertificateRecord{std::move(s), 0, 0, {}}); };
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      push(liouville_spec(problem, problem.cells[i].box, problem.time_grid.interval(k), i, k, scale));
    }
  }
  for (std::size_t i = 0; i < I; ++i) {
    const Box& box = problem.cells[i].box;
    push(initial_spec(box, i, scale));
    if (auto t = terminal_spec(problem, box, i, K - 1, scale)) push(std::move(*t));
    push(w_nonneg_spec(box, i, scale));
  }
  for (std::size_t i = 0; i < I; ++i) {
    const Box& box = problem.cells[i].box;
    for (std::size_t k = 0; k + 1 < K; ++k) {
      CertificateSpec s;
      s.id = "time_stitch[" + std::to_string(i) + "," + std::to_string(k) + "]";
      s.family = Family::kTimeStitch;
      s.cell = i;
      s.interval = k;
      s.chart = make_chart(state_axes(box), {{kTimeVar, problem.time_grid.knots()[k + 1]}}, scale);
      s.lhs = {{LhsTerm::Kind::kPiece, 1.0, false, i, k}, {LhsTerm::Kind::kPiece, -1.0, false, i, k + 1}};
      s.multipliers = box_multipliers(box);
      push(std::move(s));
    }
  }
  for (std::size_t fi = 0; fi < plans.size(); ++fi) {
    const FacetPlan& plan = plans[fi];
    const Facet& f = plan.facet;
    const Polynomial hf = problem.system.f[f.axis] * static_cast<double>(f.sign);
    for (std::size_t k = 0; k < K; ++k) {
      const Interval time = problem.time_grid.interval(k);
      std::vector<ChartAxis> axes = facet_axes(f, time);
      std::vector<Polynomial> box_g;
      for (const auto& a : axes) box_g.push_back(interval_description(a.var, a.range).front());
      const std::string tag = std::to_string(f.a) + "," + std::to_string(f.b) + "," + std::to_string(k);
      const std::map<VarId, double> on_facet{{state_var(f.axis), f.value}};
      auto base = [&](const std::string& name, Family family) {
        CertificateSpec s;
        s.id = name + "[" + tag + "]";
        s.family = family;
        s.cell = f.a;
        s.interval = k;
        s.facet = fi;
        s.chart = make_chart(axes, on_facet, scale);
        s.lhs = {{LhsTerm::Kind::kPiece, 1.0, false, f.a, k}, {LhsTerm::Kind::kPiece, -1.0, false, f.b, k}};
        return s;
      };
      if (plan.equality) {
        CertificateSpec s = base("facet_equality", Family::kFacetEquality);
        s.equality = true;
        push(std::move(s));
        continue;
      }
      if (plan.divisible) {
        // The pair forces v_a = v_b on the hyperplane h'f = 0, so v_a - v_b
        // = h'f r exactly, and r >= 0 on the facet covers both signs at once.
        // Keeping the identity free of Gram terms lets the solver treat it as
        // an exact linear constraint.
        CertificateSpec s = base("facet_divisible", Family::kFacetDivisible);
        LhsTerm quotient{LhsTerm::Kind::kAux, -1.0, false, plan.first_aux + k, k};
        quotient.factor = plan.h_on_facet;
        s.lhs.push_back(quotient);
        s.equality = true;
        push(std::move(s));
        CertificateSpec r = base("facet_quotient", Family::kFacetQuotient);
        r.lhs = {{LhsTerm::Kind::kAux, 1.0, false, plan.first_aux + k, k}};
        r.multipliers = box_g;
        r.degree = problem.degree;
        push(std::move(r));
        continue;
      }
      append_input_axes(problem, axes);
      box_g = concat(box_g, input_description(problem));
      // With h'f of one sign on the closed facet, one of the two sets is empty.
      const int sign = fixed_sign(plan.h_on_facet, f);
      for (int dir = 0; dir < 2; ++dir) {
        if ((dir == 0 && sign < 0) || (dir == 1 && sign > 0)) continue;
        CertificateSpec s = base(dir == 0 ? "facet_forward" : "facet_backward",
                                 dir == 0 ? Family::kFacetForward : Family::kFacetBackward);
        s.chart = make_chart(axes, on_facet, scale);
        const double sa = dir == 0 ? 1.0 : -1.0;
        for (auto& t : s.lhs) t.coef *= sa;
        s.multipliers = concat({hf * sa}, box_g);
        push(std::move(s));
      }
    }
  }

  std::vector<Box> boxes;
  for (const auto& c : problem.cells) boxes.push_back(c.box);
  finish(problem, prog, boxes);
  return prog;
}

CompiledProgram compile_unsplit(const RoaProblem& problem, const CompileOptions& options) {
  problem.validate();
  const bool scale = options.scale_variables;
  CompiledProgram prog;
  DecisionLayout& layout = prog.layout;
  layout.n_cells = 1;
  layout.n_intervals = 1;
  layout.degree = problem.degree;
  layout.v_degree = value_function_degree(problem);

  const Interval horizon{0.0, problem.T};
  std::size_t offset = 0;
  std::vector<ChartAxis> v_axes{{kTimeVar, horizon}};
  for (const auto& a : state_axes(problem.X)) v_axes.push_back(a);
  layout.v = {{make_piece(v_axes, layout.v_degree, offset, scale)}};
  layout.w = {make_piece(state_axes(problem.X), problem.degree, offset, scale)};
  layout.n_free = offset;

  auto& certs = layout.certificates;
  auto push = [&](CertificateSpec s) { certs.push_back(CertificateRecord{std::move(s), 0, 0, {}}); };
  push(liouville_spec(problem, problem.X, horizon, 0, 0, scale));
  push(initial_spec(problem.X, 0, scale));
  if (auto t = terminal_spec(problem, problem.X, 0, 0, scale)) push(std::move(*t));
  push(w_nonneg_spec(problem.X, 0, scale));

  finish(problem, prog, {problem.X});
  return prog;
}

// -------------------------------------------------------------- solutions

namespace {

Polynomial piece_polynomial(const PieceLayout& piece, const Eigen::VectorXd& x) {
  std::map<VarId, AffineVar> back;
  for (std::size_t p = 0; p < piece.chart.vars.size(); ++p) {
    const double c = piece.chart.center[p];
    const double r = piece.chart.radius[p];
    back[piece.chart.vars[p]] = AffineVar{piece.chart.vars[p], -c / r, 1.0 / r};
  }
  Polynomial local;
  for (std::size_t a = 0; a < piece.basis.size(); ++a) {
    local.add_term(piece.basis[a], x(static_cast<Eigen::Index>(piece.offset + a)));
  }
  return substitute_affine(local, back);
}

}  // namespace

ExtractedSolution extract_solution(const DecisionLayout& layout, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != layout.n_vars) {
    throw std::invalid_argument("solution vector has length " + std::to_string(x.size()) + ", layout expects " +
                                std::to_string(layout.n_vars));
  }
  ExtractedSolution sol;
  sol.v.resize(layout.v.size());
  for (std::size_t i = 0; i < layout.v.size(); ++i) {
    for (const auto& piece : layout.v[i]) sol.v[i].push_back(piece_polynomial(piece, x));
  }
  for (const auto& piece : layout.w) sol.w.push_back(piece_polynomial(piece, x));
  for (const auto& piece : layout.aux) sol.aux.push_back(piece_polynomial(piece, x));
  return sol;
}

IdentityResidual certificate_residual(const RoaProblem& problem, const DecisionLayout& layout,
                                      const ExtractedSolution& solution, const Eigen::VectorXd& x,
                                      std::size_t certificate, std::span<const double> z_in) {
  const CertificateRecord& rec = layout.certificates.at(certificate);
  const CertificateSpec& spec = rec.spec;
  std::vector<double> z(z_in.begin(), z_in.end());
  if (z.size() < problem.system.n_vars()) throw std::invalid_argument("point must cover t, x and u");
  for (const auto& [v, value] : spec.chart.fixed) z[v] = value;

  IdentityResidual r;
  for (const auto& term : spec.lhs) {
    double value = term.coef;
    if (term.kind == LhsTerm::Kind::kConstant) {
      // coefficient only
    } else if (term.kind == LhsTerm::Kind::kAux) {
      value *= term.factor.evaluate(z) * solution.aux.at(term.cell).evaluate(z);
    } else if (term.is_w) {
      value *= term.factor.evaluate(z) * solution.w.at(term.cell).evaluate(z);
    } else {
      const Polynomial& v = solution.v.at(term.cell).at(term.interval);
      value *= term.kind == LhsTerm::Kind::kPiece ? term.factor.evaluate(z) * v.evaluate(z)
                                                  : -lie_derivative(v, problem.system).evaluate(z);
    }
    r.lhs += value;
    r.scale += std::abs(value);
  }
  const auto local = spec.chart.to_local(z);
  for (const auto& g : rec.grams) {
    const std::size_t order = g.basis.size();
    const Eigen::MatrixXd W =
        smat(x.segment(static_cast<Eigen::Index>(g.offset), static_cast<Eigen::Index>(order * (order + 1) / 2)), order);
    Eigen::VectorXd mv(static_cast<Eigen::Index>(order));
    for (std::size_t a = 0; a < order; ++a) mv(static_cast<Eigen::Index>(a)) = g.basis[a].evaluate(local);
    double term = mv.dot(W * mv);
    if (g.multiplier >= 0) term *= g.scale * spec.multipliers[static_cast<std::size_t>(g.multiplier)].evaluate(z);
    r.rhs += term;
    r.scale += std::abs(term);
  }
  r.residual = r.lhs - r.rhs;
  return r;
}

std::map<Family, std::size_t> family_counts(const DecisionLayout& layout) {
  std::map<Family, std::size_t> counts;
  for (const auto& rec : layout.certificates) ++counts[rec.spec.family];
  return counts;
}

}  // namespace splitroa
