#include "splitroa/sdp.hpp"

#include <cmath>
#include <iomanip>
#include <stdexcept>
#include <string>
#include <tuple>

namespace splitroa {

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

Eigen::VectorXd svec(const Eigen::MatrixXd& S) {
  const auto n = static_cast<std::size_t>(S.rows());
  Eigen::VectorXd v(n * (n + 1) / 2);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = c; r < n; ++r) {
      v(svec_index(n, r, c)) = (r == c) ? S(r, c) : kSqrt2 * 0.5 * (S(r, c) + S(c, r));
    }
  }
  return v;
}

Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, std::size_t n) {
  Eigen::MatrixXd S(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = c; r < n; ++r) {
      const double x = v(svec_index(n, r, c));
      if (r == c) {
        S(r, c) = x;
      } else {
        S(r, c) = S(c, r) = x / kSqrt2;
      }
    }
  }
  return S;
}

std::size_t SdpProblem::n_vars() const {
  std::size_t n = 0;
  for (const auto& k : cones) n += k.dim();
  return n;
}

void SdpProblem::validate() const {
  const auto n = static_cast<Eigen::Index>(n_vars());
  if (A.cols() != n) throw std::invalid_argument("A has " + std::to_string(A.cols()) + " columns, cones cover " +
                                                 std::to_string(n));
  if (c.size() != n) throw std::invalid_argument("c length does not match the cones");
  if (b.size() != A.rows()) throw std::invalid_argument("b length does not match A");
}

std::size_t problem_size(const SdpProblem& sdp) { return static_cast<std::size_t>(sdp.A.nonZeros()); }

void write_cbf(const SdpProblem& sdp, std::ostream& out) {
  sdp.validate();
  // Map every column to (scalar index) or (psd block, row, col).
  struct Loc {
    bool psd = false;
    std::size_t index = 0;
    std::size_t row = 0;
    std::size_t col = 0;
  };
  std::vector<Loc> loc(sdp.n_vars());
  std::vector<std::pair<std::string, std::size_t>> scalar_cones;
  std::vector<std::size_t> psd_orders;
  std::size_t pos = 0;
  std::size_t n_scalar = 0;
  for (const auto& k : sdp.cones) {
    if (k.kind == ConeBlock::Kind::kPsd) {
      for (std::size_t c = 0; c < k.size; ++c) {
        for (std::size_t r = c; r < k.size; ++r) {
          loc[pos + svec_index(k.size, r, c)] = {true, psd_orders.size(), r, c};
        }
      }
      psd_orders.push_back(k.size);
    } else {
      if (k.size == 0) continue;
      for (std::size_t i = 0; i < k.size; ++i) loc[pos + i] = {false, n_scalar + i, 0, 0};
      n_scalar += k.size;
      const std::string name = k.kind == ConeBlock::Kind::kFree ? "F" : "L+";
      if (!scalar_cones.empty() && scalar_cones.back().first == name) {
        scalar_cones.back().second += k.size;
      } else {
        scalar_cones.emplace_back(name, k.size);
      }
    }
    pos += k.dim();
  }

  // CBF stores lower-triangle matrix coefficients F with <F, X> summing both
  // triangles, so an svec coefficient a on an off-diagonal becomes a/sqrt(2).
  auto matrix_coef = [](const Loc& l, double a) { return l.row == l.col ? a : a / kSqrt2; };

  out << std::setprecision(17);
  out << "VER\n1\n\nOBJSENSE\nMIN\n\n";
  if (!psd_orders.empty()) {
    out << "PSDVAR\n" << psd_orders.size() << "\n";
    for (auto s : psd_orders) out << s << "\n";
    out << "\n";
  }
  out << "VAR\n" << n_scalar << " " << scalar_cones.size() << "\n";
  for (const auto& [name, count] : scalar_cones) out << name << " " << count << "\n";
  out << "\nCON\n" << sdp.A.rows() << " 1\nL= " << sdp.A.rows() << "\n\n";

  std::vector<std::pair<std::size_t, double>> obj_scalar;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t, double>> obj_psd;
  for (Eigen::Index j = 0; j < sdp.c.size(); ++j) {
    const double v = sdp.c(j);
    if (v == 0.0) continue;
    const Loc& l = loc[static_cast<std::size_t>(j)];
    if (l.psd) {
      obj_psd.emplace_back(l.index, l.row, l.col, matrix_coef(l, v));
    } else {
      obj_scalar.emplace_back(l.index, v);
    }
  }
  if (!obj_psd.empty()) {
    out << "OBJFCOORD\n" << obj_psd.size() << "\n";
    for (const auto& [k, r, c, v] : obj_psd) out << k << " " << r << " " << c << " " << v << "\n";
    out << "\n";
  }
  if (!obj_scalar.empty()) {
    out << "OBJACOORD\n" << obj_scalar.size() << "\n";
    for (const auto& [j, v] : obj_scalar) out << j << " " << v << "\n";
    out << "\n";
  }

  // Row-major traversal gives a deterministic order.
  Eigen::SparseMatrix<double, Eigen::RowMajor> Ar = sdp.A;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, double>> f_entries;
  std::vector<std::tuple<std::size_t, std::size_t, double>> a_entries;
  for (Eigen::Index i = 0; i < Ar.outerSize(); ++i) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Ar, i); it; ++it) {
      const Loc& l = loc[static_cast<std::size_t>(it.col())];
      if (l.psd) {
        f_entries.emplace_back(static_cast<std::size_t>(i), l.index, l.row, l.col, matrix_coef(l, it.value()));
      } else {
        a_entries.emplace_back(static_cast<std::size_t>(i), l.index, it.value());
      }
    }
  }
  if (!f_entries.empty()) {
    out << "FCOORD\n" << f_entries.size() << "\n";
    for (const auto& [i, k, r, c, v] : f_entries) out << i << " " << k << " " << r << " " << c << " " << v << "\n";
    out << "\n";
  }
  if (!a_entries.empty()) {
    out << "ACOORD\n" << a_entries.size() << "\n";
    for (const auto& [i, j, v] : a_entries) out << i << " " << j << " " << v << "\n";
    out << "\n";
  }
  // CBF constraints read Ax + b in K, so L= rows store -b.
  std::vector<std::pair<std::size_t, double>> b_entries;
  for (Eigen::Index i = 0; i < sdp.b.size(); ++i) {
    if (sdp.b(i) != 0.0) b_entries.emplace_back(static_cast<std::size_t>(i), -sdp.b(i));
  }
  if (!b_entries.empty()) {
    out << "BCOORD\n" << b_entries.size() << "\n";
    for (const auto& [i, v] : b_entries) out << i << " " << v << "\n";
  }
}

}  // namespace splitroa
