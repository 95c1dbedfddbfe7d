#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "splitroa/poly.hpp"

namespace splitroa {

/// Axis-aligned box, one interval per state variable x1..xn.
using Box = std::vector<Interval>;

double volume(const Box& box);
bool contains(const Box& box, std::span<const double> x);
/// Closed intersection; returns false if the boxes are disjoint.
bool intersect(const Box& a, const Box& b, Box* out);

/// {z : g_j(z) >= 0 for all j}.
class SemialgebraicSet {
 public:
  SemialgebraicSet() = default;
  /// Throws if the list is empty.
  explicit SemialgebraicSet(std::vector<Polynomial> inequalities);

  const std::vector<Polynomial>& inequalities() const { return g_; }
  bool empty() const { return g_.empty(); }
  /// True if every g_j(point) >= -tol; point is dense over VarId.
  bool contains(std::span<const double> point, double tol = 0.0) const;

 private:
  std::vector<Polynomial> g_;
};

/// The box as the 2n affine inequalities x_j - a_j >= 0, b_j - x_j >= 0,
/// with x_j = VarId first_var + j.
SemialgebraicSet box_description(const Box& box, VarId first_var = 1);

struct Cell {
  std::size_t id = 0;
  Box box;
  SemialgebraicSet description() const { return box_description(box); }
};

/// Shared (n-1)-dimensional boundary between cells a < b. The normal is
/// sign * e_axis and points from cell a into cell b.
struct Facet {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t axis = 0;
  int sign = 1;
  double value = 0.0;
  /// Facet as an n-dimensional box with box[axis] = [value, value].
  Box box;
};

class TimeGrid {
 public:
  TimeGrid() = default;
  /// Knots must be strictly increasing, start at 0 and have >= 2 entries.
  explicit TimeGrid(std::vector<double> knots);
  static TimeGrid uniform(double horizon, std::size_t intervals);

  const std::vector<double>& knots() const { return knots_; }
  std::size_t intervals() const { return knots_.empty() ? 0 : knots_.size() - 1; }
  double horizon() const { return knots_.back(); }
  Interval interval(std::size_t k) const { return {knots_[k], knots_[k + 1]}; }
  /// Interval containing t; ties go to the lower index.
  std::size_t locate(double t) const;

 private:
  std::vector<double> knots_;
};

/// Explicit cut positions per axis (may be empty for an axis).
struct CutPlan {
  std::vector<std::vector<double>> cuts;
};

/// Tiles X by the cartesian product of the per-axis cuts. Cells are ordered
/// with axis 0 varying slowest.
std::vector<Cell> split_box(const Box& X, const CutPlan& plan);
/// Uniform plan: cuts_per_axis[j] equispaced cuts on axis j.
std::vector<Cell> split_box_uniform(const Box& X, std::span<const std::size_t> cuts_per_axis);

/// Every unordered pair of cells that shares an (n-1)-dimensional face.
/// Output is ordered by (a, b).
std::vector<Facet> neighbor_facets(std::span<const Cell> cells);

/// Repeatedly draws a random axis and halves the cell with the widest
/// interval along that axis (lowest id on ties) until n_cells exist.
std::vector<Cell> halving_split_sequence(const Box& X, std::size_t n_cells, std::uint64_t seed);

/// Index of the first cell containing x (closed boxes), or cells.size().
std::size_t locate_cell(std::span<const Cell> cells, std::span<const double> x);

}  // namespace splitroa
