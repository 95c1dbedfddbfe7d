#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splitroa/geom.hpp"
#include "splitroa/poly.hpp"

namespace splitroa {

inline constexpr VarId kTimeVar = 0;
/// x_{j+1} for 0-based j.
inline VarId state_var(std::size_t j) { return static_cast<VarId>(1 + j); }
/// u_{j+1} for 0-based j.
inline VarId input_var(std::size_t n_states, std::size_t j) { return static_cast<VarId>(1 + n_states + j); }

/// xdot = f(t, x, u) with polynomial f.
struct ControlSystem {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<Polynomial> f;

  std::size_t n_vars() const { return 1 + n + m; }
  /// Throws if f has the wrong length or uses variables beyond t, x, u.
  void validate() const;
  /// Max total degree over the components of f.
  std::uint32_t degree() const;
};

/// dv/dt + grad_x v . f. Throws if v depends on inputs or on states past n.
Polynomial lie_derivative(const Polynomial& v, const ControlSystem& system);

/// A finite-horizon region-of-attraction instance together with the partition
/// of X and [0, T] used to compile it.
struct RoaProblem {
  std::string name;
  ControlSystem system;
  Box X;
  /// Input constraints; absent when the system has no inputs.
  std::optional<SemialgebraicSet> U;
  /// Bounding box of U, used for variable scaling.
  Box U_box;
  SemialgebraicSet XT;
  /// Bounding box of X_T; decides which cells carry a terminal constraint.
  Box XT_box;
  double T = 1.0;
  std::uint32_t degree = 0;
  std::vector<Cell> cells;
  TimeGrid time_grid;

  /// Checks every structural invariant; throws std::invalid_argument.
  void validate() const;
};

/// How X is to be partitioned.
struct PartitionSpec {
  enum class Kind { kSingle, kUniform, kCuts, kHalving };
  Kind kind = Kind::kSingle;
  /// Number of cells per axis (kUniform).
  std::vector<std::size_t> cells_per_axis;
  /// Cut positions per axis (kCuts).
  std::vector<std::vector<double>> cuts;
  /// Total cells (kHalving).
  std::size_t n_cells = 1;
  std::uint64_t seed = 0;

  /// Parses "1", "2x2", "halving:8", "cuts:-0.5,0.5" or "cuts:0|0.1,0.2"
  /// (axes separated by '|').
  static PartitionSpec parse(const std::string& text, std::uint64_t seed);
  std::string to_string() const;
};

std::vector<Cell> make_cells(const Box& X, const PartitionSpec& spec);

struct BuiltinOptions {
  /// Radius of the ball standing in for the point target {0}.
  double target_radius = 1e-4;
};

/// "cubic", "double_integrator" or "brockett", with a single cell, a single
/// time interval and degree left at 0. Throws on unknown names.
RoaProblem builtin_problem(const std::string& name, const BuiltinOptions& options = {});

/// Replaces the partition of X and of [0, T].
void set_partition(RoaProblem& problem, std::vector<Cell> cells, TimeGrid grid);

/// Problem plus partition as read from a TOML config file.
struct ProblemConfig {
  RoaProblem problem;
  PartitionSpec partition;
  std::vector<double> time_knots;
};

/// Raised for malformed configs; line and column are 1-based (0 if unknown).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::size_t line, std::size_t column)
      : std::runtime_error(what), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

ProblemConfig parse_problem_config(const std::string& text);
ProblemConfig load_problem_config(const std::string& path);

}  // namespace splitroa
