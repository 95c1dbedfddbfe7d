#include "splitroa/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

namespace splitroa {

namespace {

constexpr std::size_t kChunk = 4096;

std::mt19937_64 chunk_rng(std::uint64_t seed, std::size_t chunk) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
  return std::mt19937_64(seq);
}

void fill_chunk(const Box& box, std::size_t chunk, std::size_t count, std::uint64_t seed, double* out) {
  auto rng = chunk_rng(seed, chunk);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t j = 0; j < count; ++j) {
    for (std::size_t k = 0; k < box.size(); ++k) out[j * box.size() + k] = box[k].lo + box[k].width() * unit(rng);
  }
}

void require_in_X(const RoaCertificate& cert, std::span<const double> x) {
  if (x.size() != cert.problem().system.n || !contains(cert.problem().X, x)) {
    throw std::invalid_argument("point outside X");
  }
}

// theta - sin(theta) cos(theta), accurate for small theta.
double theta_minus_sc(double th) {
  if (th < 1e-3) {
    const double t2 = th * th;
    return th * t2 * (2.0 / 3.0 - t2 * (2.0 / 15.0 - t2 * 4.0 / 315.0));
  }
  return th - 0.5 * std::sin(2.0 * th);
}

struct BrockettArc {
  double T = 0.0;
  double omega = 0.0;  // heading rate, signed
  double phi0 = 0.0;   // initial heading
};

BrockettArc brockett_arc(std::span<const double> x) {
  BrockettArc arc;
  arc.T = brockett_min_time(x);
  if (arc.T == 0.0) return arc;
  const double c = std::hypot(x[0], x[1]);
  const double sigma = x[2] > 0 ? 1.0 : -1.0;
  if (x[2] == 0.0) {
    arc.phi0 = std::atan2(-x[1], -x[0]);
  } else if (c == 0.0) {
    arc.omega = sigma * 2.0 * std::numbers::pi / arc.T;
  } else {
    // The arc of central angle 2 theta turns the heading by 2 theta at a
    // constant rate, starting theta off the chord towards the origin.
    double lo = 0.0, hi = std::numbers::pi;
    const double target = 2.0 * std::abs(x[2]) / (c * c);
    while (hi - lo > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      const double s = std::sin(mid);
      (theta_minus_sc(mid) / (s * s) < target ? lo : hi) = mid;
    }
    const double th = 0.5 * (lo + hi);
    arc.omega = sigma * 2.0 * th / arc.T;
    arc.phi0 = std::atan2(-x[1], -x[0]) - sigma * th;
  }
  return arc;
}

// Position on the arc after time s.
std::pair<double, double> arc_point(const BrockettArc& arc, std::span<const double> x, double s) {
  if (arc.omega == 0.0) return {x[0] + s * std::cos(arc.phi0), x[1] + s * std::sin(arc.phi0)};
  const double p = arc.phi0 + arc.omega * s;
  return {x[0] + (std::sin(p) - std::sin(arc.phi0)) / arc.omega, x[1] - (std::cos(p) - std::cos(arc.phi0)) / arc.omega};
}

struct DiSchedule {
  double u1 = 0.0;
  double t1 = 0.0;
  double T = 0.0;
};

DiSchedule di_schedule(std::span<const double> x) {
  const double s = x[0] + 0.5 * x[1] * std::abs(x[1]);
  DiSchedule d;
  d.T = double_integrator_min_time(x);
  if (s > 0) {
    d.u1 = -1.0;
    d.t1 = x[1] + std::sqrt(x[0] + 0.5 * x[1] * x[1]);
  } else if (s < 0) {
    d.u1 = 1.0;
    d.t1 = -x[1] + std::sqrt(-x[0] + 0.5 * x[1] * x[1]);
  } else {
    d.u1 = x[1] > 0 ? -1.0 : 1.0;
    d.t1 = d.T;
  }
  return d;
}

bool di_path_in(const Box& X, std::span<const double> x) {
  const DiSchedule d = di_schedule(x);
  double p = x[0], v = x[1];
  auto arc_ok = [&](double u, double dur) {
    const double p1 = p + v * dur + 0.5 * u * dur * dur;
    const double v1 = v + u * dur;
    double pmin = std::min(p, p1), pmax = std::max(p, p1);
    const double ts = -v / u;
    if (ts > 0 && ts < dur) {
      const double pe = p + v * ts + 0.5 * u * ts * ts;
      pmin = std::min(pmin, pe);
      pmax = std::max(pmax, pe);
    }
    const bool ok = pmin >= X[0].lo && pmax <= X[0].hi && std::min(v, v1) >= X[1].lo && std::max(v, v1) <= X[1].hi;
    p = p1;
    v = v1;
    return ok;
  };
  return arc_ok(d.u1, d.t1) && arc_ok(-d.u1, d.T - d.t1);
}

}  // namespace

// ---------------------------------------------------------------- evaluation

StatePolynomial::StatePolynomial(const Polynomial& p, std::size_t n) : n_(n), max_exp_(n, 0) {
  for (const auto& [m, c] : p.terms()) {
    const std::size_t base = exps_.size();
    exps_.resize(base + n, 0);
    for (const auto& [v, e] : m.factors()) {
      if (v == kTimeVar || v > n) throw std::invalid_argument("state polynomial involves " + var_name(v, n));
      exps_[base + v - 1] = e;
      max_exp_[v - 1] = std::max(max_exp_[v - 1], e);
    }
    coef_.push_back(c);
  }
}

double StatePolynomial::operator()(std::span<const double> x) const {
  std::vector<std::vector<double>> powers(n_);
  for (std::size_t k = 0; k < n_; ++k) {
    powers[k].resize(max_exp_[k] + 1);
    powers[k][0] = 1.0;
    for (std::uint32_t e = 1; e <= max_exp_[k]; ++e) powers[k][e] = powers[k][e - 1] * x[k];
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < coef_.size(); ++j) {
    double term = coef_[j];
    for (std::size_t k = 0; k < n_; ++k) term *= powers[k][exps_[j * n_ + k]];
    sum += term;
  }
  return sum;
}

RoaCertificate::RoaCertificate(RoaProblem problem, ExtractedSolution solution)
    : problem_(std::move(problem)), solution_(std::move(solution)) {
  const std::size_t n = problem_.system.n;
  const std::map<VarId, AffineVar> at_zero{{kTimeVar, AffineVar{std::nullopt, 0.0, 1.0}}};
  if (solution_.v.size() != problem_.cells.size() || solution_.w.size() != problem_.cells.size()) {
    throw std::invalid_argument("certificate does not match the partition");
  }
  for (const auto& pieces : solution_.v) v0_.emplace_back(substitute_affine(pieces.at(0), at_zero), n);
  for (const auto& w : solution_.w) w_.emplace_back(w, n);
}

RoaCertificate::RoaCertificate(const RoaProblem& problem, const DecisionLayout& layout, const Eigen::VectorXd& x)
    : RoaCertificate(problem, extract_solution(layout, x)) {}

std::size_t RoaCertificate::cell_of(std::span<const double> x) const {
  const std::size_t i = locate_cell(problem_.cells, x);
  if (i >= problem_.cells.size()) throw std::invalid_argument("point outside every cell");
  return i;
}

double RoaCertificate::v(double t, std::span<const double> x) const {
  const std::size_t i = cell_of(x);
  const std::size_t k = problem_.time_grid.locate(t);
  std::vector<double> z(1 + x.size());
  z[0] = t;
  std::copy(x.begin(), x.end(), z.begin() + 1);
  return solution_.v[i][k].evaluate(z);
}

double RoaCertificate::v0(std::span<const double> x) const { return v0_[cell_of(x)](x); }

double RoaCertificate::w(std::span<const double> x) const { return w_[cell_of(x)](x); }

bool member_v(const RoaCertificate& cert, std::span<const double> x) {
  require_in_X(cert, x);
  return cert.v0(x) >= 0.0;
}

bool member_w(const RoaCertificate& cert, std::span<const double> x) {
  require_in_X(cert, x);
  return cert.w(x) >= 1.0;
}

// ---------------------------------------------------------------- volumes

const char* volume_mode_name(VolumeMode mode) { return mode == VolumeMode::kVSet ? "v" : "w"; }

std::vector<double> sample_box(const Box& box, std::size_t first, std::size_t count, std::uint64_t seed) {
  std::vector<double> out(count * box.size());
  std::vector<double> chunk(kChunk * box.size());
  std::size_t j = first;
  while (j < first + count) {
    const std::size_t c = j / kChunk;
    fill_chunk(box, c, kChunk, seed, chunk.data());
    const std::size_t from = j - c * kChunk;
    const std::size_t take = std::min(kChunk - from, first + count - j);
    std::copy_n(chunk.begin() + static_cast<std::ptrdiff_t>(from * box.size()), take * box.size(),
                out.begin() + static_cast<std::ptrdiff_t>((j - first) * box.size()));
    j += take;
  }
  return out;
}

VolumeEstimate monte_carlo_volume(const Box& box, const std::function<bool(std::span<const double>)>& accept,
                                  std::size_t samples, std::uint64_t seed) {
  const std::size_t n = box.size();
  const std::size_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<std::size_t> hits(chunks, 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    std::vector<double> pts(kChunk * n);
    for (std::size_t c = next++; c < chunks; c = next++) {
      const std::size_t count = std::min(kChunk, samples - c * kChunk);
      fill_chunk(box, c, count, seed, pts.data());
      std::size_t h = 0;
      for (std::size_t j = 0; j < count; ++j) h += accept(std::span<const double>(pts.data() + j * n, n)) ? 1 : 0;
      hits[c] = h;
    }
  };
  const unsigned threads = std::max(1u, std::min(std::thread::hardware_concurrency(), 16u));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::size_t total = 0;
  for (std::size_t h : hits) total += h;
  VolumeEstimate est;
  est.samples = samples;
  est.seed = seed;
  const double p = samples ? static_cast<double>(total) / static_cast<double>(samples) : 0.0;
  est.mean = p * volume(box);
  est.std_error = samples ? std::sqrt(p * (1.0 - p) / static_cast<double>(samples)) * volume(box) : 0.0;
  return est;
}

VolumeEstimate volume(const RoaCertificate& cert, VolumeMode mode, std::size_t samples, std::uint64_t seed) {
  if (samples < 10000) throw std::invalid_argument("volume estimates need at least 10^4 samples");
  if (mode == VolumeMode::kVSet) {
    return monte_carlo_volume(cert.problem().X, [&](std::span<const double> x) { return cert.v0(x) >= 0.0; }, samples,
                              seed);
  }
  return monte_carlo_volume(cert.problem().X, [&](std::span<const double> x) { return cert.w(x) >= 1.0; }, samples,
                            seed);
}

// ---------------------------------------------------------------- oracles

double brockett_min_time(std::span<const double> x) {
  const double c2 = x[0] * x[0] + x[1] * x[1];
  const double a = std::abs(x[2]);
  if (a == 0.0) return std::sqrt(c2);
  if (c2 == 0.0) return std::sqrt(2.0 * std::numbers::pi * a);
  // (theta - sin cos) / sin^2 increases from 0 to infinity on (0, pi).
  const double target = 2.0 * a / c2;
  double lo = 0.0, hi = std::numbers::pi;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    const double s = std::sin(mid);
    (theta_minus_sc(mid) / (s * s) < target ? lo : hi) = mid;
  }
  const double th = 0.5 * (lo + hi);
  const double s = std::sin(th);
  return th * std::sqrt(c2 + 2.0 * a) / std::sqrt(s * s + theta_minus_sc(th));
}

double double_integrator_min_time(std::span<const double> x) {
  const double s = x[0] + 0.5 * x[1] * std::abs(x[1]);
  if (s > 0) return x[1] + 2.0 * std::sqrt(x[0] + 0.5 * x[1] * x[1]);
  if (s < 0) return -x[1] + 2.0 * std::sqrt(-x[0] + 0.5 * x[1] * x[1]);
  return std::abs(x[1]);
}

Policy brockett_control(std::span<const double> x) {
  const BrockettArc arc = brockett_arc(x);
  return [arc](double t, std::span<const double>) -> std::vector<double> {
    if (t > arc.T) return {0.0, 0.0};
    const double p = arc.phi0 + arc.omega * t;
    return {std::cos(p), std::sin(p)};
  };
}

Policy double_integrator_control(std::span<const double> x) {
  const DiSchedule d = di_schedule(x);
  return [d](double t, std::span<const double>) -> std::vector<double> {
    if (t < d.t1) return {d.u1};
    if (t <= d.T) return {-d.u1};
    return {0.0};
  };
}

Trajectory simulate(const RoaProblem& problem, std::span<const double> x0, const Policy& policy, double dt,
                    double horizon, bool stop_at_target) {
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  const std::size_t n = problem.system.n;
  const std::size_t m = problem.system.m;
  std::vector<double> z(1 + n + m, 0.0);
  auto rhs = [&](double t, const std::vector<double>& x, const std::vector<double>& u) {
    z[0] = t;
    std::copy(x.begin(), x.end(), z.begin() + 1);
    std::copy(u.begin(), u.end(), z.begin() + 1 + static_cast<std::ptrdiff_t>(n));
    std::vector<double> dx(n);
    for (std::size_t k = 0; k < n; ++k) dx[k] = problem.system.f[k].evaluate(z);
    return dx;
  };
  auto input = [&](double t, const std::vector<double>& x, Trajectory& tr) {
    std::vector<double> u = policy(t, x);
    if (u.size() != m) throw std::invalid_argument("policy returned the wrong number of inputs");
    if (problem.U) {
      std::vector<double> pt(1 + n + m, 0.0);
      std::copy(u.begin(), u.end(), pt.begin() + 1 + static_cast<std::ptrdiff_t>(n));
      if (!problem.U->contains(pt, 1e-9)) tr.input_violation = true;
    }
    return u;
  };
  auto check = [&](double t, const std::vector<double>& x, Trajectory& tr) {
    if (!tr.left_X && !contains(problem.X, x)) {
      tr.left_X = true;
      tr.exit_time = t;
    }
    std::vector<double> pt(1 + n + m, 0.0);
    std::copy(x.begin(), x.end(), pt.begin() + 1);
    if (!tr.reached && problem.XT.contains(pt)) {
      tr.reached = true;
      tr.reach_time = t;
    }
  };

  Trajectory tr;
  std::vector<double> x(x0.begin(), x0.end());
  double t = 0.0;
  tr.times.push_back(t);
  tr.states.push_back(x);
  check(t, x, tr);
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  for (std::size_t s = 0; s < steps && !(stop_at_target && tr.reached); ++s) {
    const double h = std::min(dt, horizon - t);
    // Inputs are sampled at the step's start, middle and end.
    const auto u0 = input(t, x, tr);
    const auto um = input(t + 0.5 * h, x, tr);
    const auto u1 = input(t + h, x, tr);
    const auto k1 = rhs(t, x, u0);
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = x[k] + 0.5 * h * k1[k];
    const auto k2 = rhs(t + 0.5 * h, y, um);
    for (std::size_t k = 0; k < n; ++k) y[k] = x[k] + 0.5 * h * k2[k];
    const auto k3 = rhs(t + 0.5 * h, y, um);
    for (std::size_t k = 0; k < n; ++k) y[k] = x[k] + h * k3[k];
    const auto k4 = rhs(t + h, y, u1);
    for (std::size_t k = 0; k < n; ++k) x[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    t += h;
    // A finite-time blow-up ends the run.
    if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); })) break;
    tr.times.push_back(t);
    tr.states.push_back(x);
    check(t, x, tr);
  }
  return tr;
}

bool oracle_member(const std::string& name, std::span<const double> x, double T, const Box& X) {
  if (name == "cubic") return std::abs(x[0]) < 0.5;
  if (name == "double_integrator") return double_integrator_min_time(x) <= T && di_path_in(X, x);
  if (name == "brockett") {
    const BrockettArc arc = brockett_arc(x);
    if (!(arc.T <= T)) return false;
    // x3 moves monotonically to 0, so only the planar arc can leave X.
    constexpr int kPoints = 256;
    for (int j = 0; j <= kPoints; ++j) {
      const auto [p1, p2] = arc_point(arc, x, arc.T * j / kPoints);
      if (!X[0].contains(p1) || !X[1].contains(p2)) return false;
    }
    return true;
  }
  throw std::invalid_argument("no oracle for '" + name + "'");
}

// ---------------------------------------------------------------- checks and export

std::map<Family, double> identity_residuals(const RoaProblem& problem, const CompiledProgram& program,
                                            const Eigen::VectorXd& x, std::size_t points, std::uint64_t seed) {
  const auto sol = extract_solution(program.layout, x);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::map<Family, double> worst;
  const std::size_t dim = 1 + problem.system.n + problem.system.m;
  for (std::size_t c = 0; c < program.layout.certificates.size(); ++c) {
    const auto& spec = program.layout.certificates[c].spec;
    double& w = worst[spec.family];
    for (std::size_t s = 0; s < points; ++s) {
      std::vector<double> z(dim, 0.0);
      for (std::size_t a = 0; a < spec.chart.vars.size(); ++a) {
        z[spec.chart.vars[a]] = spec.chart.center[a] + spec.chart.radius[a] * unit(rng);
      }
      for (const auto& [v, val] : spec.chart.fixed) z[v] = val;
      const auto r = certificate_residual(problem, program.layout, sol, x, c, z);
      w = std::max(w, std::abs(r.residual) / (1.0 + r.scale));
    }
  }
  return worst;
}

void write_grid_csv(const RoaCertificate& cert, std::size_t points_per_axis, std::ostream& out) {
  const Box& X = cert.problem().X;
  const std::size_t n = X.size();
  if (points_per_axis < 2) throw std::invalid_argument("grid needs at least 2 points per axis");
  for (std::size_t k = 0; k < n; ++k) out << 'x' << k + 1 << ',';
  out << "v0,w\n";
  out << std::setprecision(12);
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> x(n);
  while (true) {
    for (std::size_t k = 0; k < n; ++k) {
      x[k] = X[k].lo + X[k].width() * static_cast<double>(idx[k]) / static_cast<double>(points_per_axis - 1);
      out << x[k] << ',';
    }
    out << cert.v0(x) << ',' << cert.w(x) << '\n';
    std::size_t k = n;
    while (k > 0 && ++idx[k - 1] == points_per_axis) idx[--k] = 0;
    if (k == 0) break;
  }
}

double indicator_symmetric_difference(const RoaCertificate& cert, double lo, double hi, std::size_t points) {
  const Box& X = cert.problem().X;
  if (X.size() != 1) throw std::invalid_argument("indicator comparison needs a single state");
  const double h = X[0].width() / static_cast<double>(points);
  std::size_t mismatched = 0;
  for (std::size_t j = 0; j < points; ++j) {
    const double x = X[0].lo + (static_cast<double>(j) + 0.5) * h;
    const bool in = lo <= x && x <= hi;
    if (member_w(cert, std::span<const double>(&x, 1)) != in) ++mismatched;
  }
  return h * static_cast<double>(mismatched);
}

}  // namespace splitroa
