#include "splitroa/geom.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>

namespace splitroa {

double volume(const Box& box) {
  double v = 1.0;
  for (const auto& iv : box) v *= iv.width();
  return v;
}

bool contains(const Box& box, std::span<const double> x) {
  if (x.size() != box.size()) throw std::invalid_argument("point dimension does not match box");
  for (std::size_t j = 0; j < box.size(); ++j) {
    if (!box[j].contains(x[j])) return false;
  }
  return true;
}

bool intersect(const Box& a, const Box& b, Box* out) {
  if (a.size() != b.size()) throw std::invalid_argument("box dimensions differ");
  Box r(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    r[j].lo = std::max(a[j].lo, b[j].lo);
    r[j].hi = std::min(a[j].hi, b[j].hi);
    if (r[j].lo > r[j].hi) return false;
  }
  if (out) *out = std::move(r);
  return true;
}

SemialgebraicSet::SemialgebraicSet(std::vector<Polynomial> inequalities) : g_(std::move(inequalities)) {
  if (g_.empty()) throw std::invalid_argument("a semialgebraic set needs at least one inequality");
}

bool SemialgebraicSet::contains(std::span<const double> point, double tol) const {
  for (const auto& g : g_) {
    if (g.evaluate(point) < -tol) return false;
  }
  return true;
}

SemialgebraicSet box_description(const Box& box, VarId first_var) {
  std::vector<Polynomial> g;
  g.reserve(2 * box.size());
  for (std::size_t j = 0; j < box.size(); ++j) {
    const auto x = Polynomial::var(first_var + static_cast<VarId>(j));
    g.push_back(x - Polynomial(box[j].lo));
    g.push_back(Polynomial(box[j].hi) - x);
  }
  return SemialgebraicSet(std::move(g));
}

// --------------------------------------------------------------- TimeGrid

TimeGrid::TimeGrid(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) throw std::invalid_argument("time grid needs at least two knots");
  if (knots_.front() != 0.0) throw std::invalid_argument("time grid must start at 0");
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    if (!(knots_[k] > knots_[k - 1])) throw std::invalid_argument("time knots must be strictly increasing");
  }
}

TimeGrid TimeGrid::uniform(double horizon, std::size_t intervals) {
  if (intervals == 0) throw std::invalid_argument("time grid needs at least one interval");
  std::vector<double> knots(intervals + 1);
  for (std::size_t k = 0; k <= intervals; ++k) knots[k] = horizon * static_cast<double>(k) / static_cast<double>(intervals);
  knots.back() = horizon;
  return TimeGrid(std::move(knots));
}

std::size_t TimeGrid::locate(double t) const {
  for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
    if (t <= knots_[k + 1]) return k;
  }
  return intervals() - 1;
}

// ---------------------------------------------------------------- splits

std::vector<Cell> split_box(const Box& X, const CutPlan& plan) {
  const std::size_t n = X.size();
  if (n == 0) throw std::invalid_argument("cannot split a zero-dimensional box");
  if (plan.cuts.size() != n) throw std::invalid_argument("cut plan must list one entry per axis");
  std::vector<std::vector<double>> edges(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> cuts = plan.cuts[j];
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t c = 0; c < cuts.size(); ++c) {
      if (!(cuts[c] > X[j].lo && cuts[c] < X[j].hi)) {
        throw std::invalid_argument("cut " + std::to_string(cuts[c]) + " on axis " + std::to_string(j) +
                                    " is not strictly inside the interval");
      }
      if (c > 0 && cuts[c] == cuts[c - 1]) {
        throw std::invalid_argument("duplicate cut " + std::to_string(cuts[c]) + " on axis " + std::to_string(j));
      }
    }
    edges[j].push_back(X[j].lo);
    edges[j].insert(edges[j].end(), cuts.begin(), cuts.end());
    edges[j].push_back(X[j].hi);
  }

  std::vector<Cell> cells;
  std::vector<std::size_t> idx(n, 0);
  for (;;) {
    Cell cell;
    cell.id = cells.size();
    cell.box.resize(n);
    for (std::size_t j = 0; j < n; ++j) cell.box[j] = {edges[j][idx[j]], edges[j][idx[j] + 1]};
    cells.push_back(std::move(cell));
    // Odometer with the last axis varying fastest.
    std::size_t j = n;
    while (j > 0) {
      --j;
      if (++idx[j] + 1 < edges[j].size()) break;
      idx[j] = 0;
      if (j == 0) return cells;
    }
  }
}

std::vector<Cell> split_box_uniform(const Box& X, std::span<const std::size_t> cuts_per_axis) {
  if (cuts_per_axis.size() != X.size()) throw std::invalid_argument("uniform plan must list one count per axis");
  CutPlan plan;
  plan.cuts.resize(X.size());
  for (std::size_t j = 0; j < X.size(); ++j) {
    const std::size_t pieces = cuts_per_axis[j] + 1;
    for (std::size_t c = 1; c < pieces; ++c) {
      plan.cuts[j].push_back(X[j].lo + X[j].width() * static_cast<double>(c) / static_cast<double>(pieces));
    }
  }
  return split_box(X, plan);
}

std::vector<Facet> neighbor_facets(std::span<const Cell> input) {
  std::vector<const Cell*> cells;
  for (const auto& c : input) cells.push_back(&c);
  std::sort(cells.begin(), cells.end(), [](const Cell* a, const Cell* b) { return a->id < b->id; });

  std::vector<Facet> facets;
  for (std::size_t p = 0; p < cells.size(); ++p) {
    for (std::size_t q = p + 1; q < cells.size(); ++q) {
      const Box& A = cells[p]->box;
      const Box& B = cells[q]->box;
      const std::size_t n = A.size();
      std::size_t touching_axis = n;
      int sign = 0;
      bool ok = true;
      for (std::size_t j = 0; j < n && ok; ++j) {
        const double lo = std::max(A[j].lo, B[j].lo);
        const double hi = std::min(A[j].hi, B[j].hi);
        if (lo < hi) continue;
        if (lo > hi || touching_axis != n) {
          ok = false;  // disjoint, or only an edge/corner in common
        } else {
          touching_axis = j;
          sign = (A[j].hi == B[j].lo) ? 1 : -1;
        }
      }
      if (!ok || touching_axis == n) continue;
      Facet f;
      f.a = cells[p]->id;
      f.b = cells[q]->id;
      f.axis = touching_axis;
      f.sign = sign;
      f.value = sign > 0 ? A[touching_axis].hi : A[touching_axis].lo;
      f.box.resize(n);
      for (std::size_t j = 0; j < n; ++j) {
        f.box[j] = {std::max(A[j].lo, B[j].lo), std::min(A[j].hi, B[j].hi)};
      }
      f.box[touching_axis] = {f.value, f.value};
      facets.push_back(std::move(f));
    }
  }
  return facets;
}

std::vector<Cell> halving_split_sequence(const Box& X, std::size_t n_cells, std::uint64_t seed) {
  if (n_cells == 0) throw std::invalid_argument("n_cells must be at least 1");
  std::vector<Cell> cells{Cell{0, X}};
  std::mt19937_64 rng(seed);
  const std::size_t n = X.size();
  while (cells.size() < n_cells) {
    const std::size_t axis = static_cast<std::size_t>(rng() % n);
    std::size_t widest = 0;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      if (cells[i].box[axis].width() > cells[widest].box[axis].width()) widest = i;
    }
    Cell upper = cells[widest];
    const double mid = cells[widest].box[axis].center();
    cells[widest].box[axis].hi = mid;
    upper.box[axis].lo = mid;
    upper.id = cells.size();
    cells.push_back(std::move(upper));
  }
  return cells;
}

std::size_t locate_cell(std::span<const Cell> cells, std::span<const double> x) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (contains(cells[i].box, x)) return i;
  }
  return cells.size();
}

}  // namespace splitroa
