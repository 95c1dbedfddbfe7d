#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "splitroa/compiler.hpp"
#include "splitroa/problem.hpp"

namespace splitroa {

/// Polynomial in x1..xn compiled for repeated evaluation.
class StatePolynomial {
 public:
  StatePolynomial() = default;
  /// `p` may only involve x1..xn (t must already be substituted).
  StatePolynomial(const Polynomial& p, std::size_t n);
  double operator()(std::span<const double> x) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint32_t> max_exp_;
  std::vector<double> coef_;
  std::vector<std::uint32_t> exps_;  // n per term
};

/// A solved split program as piecewise polynomials. A point is evaluated on
/// the lowest-id cell containing it and a time on the lowest interval.
class RoaCertificate {
 public:
  RoaCertificate(RoaProblem problem, ExtractedSolution solution);
  RoaCertificate(const RoaProblem& problem, const DecisionLayout& layout, const Eigen::VectorXd& x);

  const RoaProblem& problem() const { return problem_; }
  const ExtractedSolution& solution() const { return solution_; }
  std::size_t cell_of(std::span<const double> x) const;
  double v(double t, std::span<const double> x) const;
  /// v(0, x), through a precompiled polynomial.
  double v0(std::span<const double> x) const;
  double w(std::span<const double> x) const;

 private:
  RoaProblem problem_;
  ExtractedSolution solution_;
  std::vector<StatePolynomial> v0_;
  std::vector<StatePolynomial> w_;
};

/// v(0, x) >= 0. Throws std::invalid_argument for x outside X.
bool member_v(const RoaCertificate& cert, std::span<const double> x);
/// w(x) >= 1, same rules.
bool member_w(const RoaCertificate& cert, std::span<const double> x);

struct VolumeEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

enum class VolumeMode { kVSet, kWSet };
const char* volume_mode_name(VolumeMode mode);

inline constexpr std::uint64_t kDefaultSeed = 20240229;
inline constexpr std::size_t kDefaultSamples = 1000000;

/// Uniform samples of `box`, deterministic per seed: sample j always comes
/// from substream j / kChunk, whatever the thread count.
std::vector<double> sample_box(const Box& box, std::size_t first, std::size_t count, std::uint64_t seed);

/// lambda(box) times the accepted fraction of N uniform samples.
VolumeEstimate monte_carlo_volume(const Box& box, const std::function<bool(std::span<const double>)>& accept,
                                  std::size_t samples, std::uint64_t seed);
/// Throws std::invalid_argument if samples < 10^4.
VolumeEstimate volume(const RoaCertificate& cert, VolumeMode mode, std::size_t samples = kDefaultSamples,
                      std::uint64_t seed = kDefaultSeed);

/// Minimum time to the origin of x1' = u1, x2' = u2, x3' = u1 x2 - u2 x1 with
/// |u| <= 1.
double brockett_min_time(std::span<const double> x);
/// Unconstrained minimum time to the origin of x1' = x2, x2' = u, |u| <= 1.
double double_integrator_min_time(std::span<const double> x);

using Policy = std::function<std::vector<double>(double t, std::span<const double> x)>;

/// Unit-speed circular arc from x to the origin in time brockett_min_time(x).
Policy brockett_control(std::span<const double> x);
/// Time-optimal bang-bang control of the double integrator, as an open-loop
/// schedule (one switch).
Policy double_integrator_control(std::span<const double> x);

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  /// Whether the state entered X_T, and when.
  bool reached = false;
  double reach_time = 0.0;
  /// Whether the state left X, and when first.
  bool left_X = false;
  double exit_time = 0.0;
  /// Whether the policy returned an input outside U.
  bool input_violation = false;
};

/// Fixed-step RK4 of the problem's dynamics over [0, horizon]. The state is
/// tested against X and X_T after every step; `stop_at_target` ends the run
/// on arrival; a non-finite state ends it early.
Trajectory simulate(const RoaProblem& problem, std::span<const double> x0, const Policy& policy, double dt,
                    double horizon, bool stop_at_target = false);

/// Independent membership in X_0 for the builtin benchmarks.
/// cubic: |x| < 0.5. brockett: T(x) <= T and the optimal arc stays in X.
/// double_integrator: minimum time <= T and the bang-bang path stays in X.
/// Throws std::invalid_argument for other names.
bool oracle_member(const std::string& name, std::span<const double> x, double T, const Box& X);

/// Largest |LHS - RHS| / (1 + scale) of each family over random domain
/// points, `points` per certificate.
std::map<Family, double> identity_residuals(const RoaProblem& problem, const CompiledProgram& program,
                                            const Eigen::VectorXd& x, std::size_t points, std::uint64_t seed);

/// Lattice x1..xn, v0, w with `points_per_axis` equispaced points per axis.
void write_grid_csv(const RoaCertificate& cert, std::size_t points_per_axis, std::ostream& out);

/// lambda({w >= 1} symmetric-difference [lo, hi]) for a 1-state certificate on
/// an equispaced grid of `points` over X.
double indicator_symmetric_difference(const RoaCertificate& cert, double lo, double hi, std::size_t points);

}  // namespace splitroa
