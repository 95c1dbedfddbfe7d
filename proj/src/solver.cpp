#include "splitroa/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include <Eigen/QR>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace splitroa {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

const double kSqrt2 = std::sqrt(2.0);
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStaticShift = 1e-14;
constexpr std::size_t kCrawlWindow = 10;

/// One entry of a constraint matrix restricted to a PSD block, stored for
/// both triangles: B_row(a, b) = v.
struct Entry {
  int row;  // local row within the block's group
  int a;
  int b;
  double v;
};

struct Block {
  int order = 0;
  Index col = 0;  // offset in the conic vector
  int group = -1;
  std::vector<Entry> entries;                  // sorted by row
  std::vector<std::pair<int, int>> row_spans;  // entry ranges, one per distinct row
};

/// Rows coupled through shared PSD blocks; the Schur complement is block
/// diagonal over groups.
struct Group {
  std::vector<Index> rows;
  std::vector<int> blocks;
  std::vector<Index> free_cols;
  MatrixXd Af;  // rows x free_cols, dense
  MatrixXd M;
  VectorXd d;                // Jacobi scaling: llt factors d M d plus a small shift
  Eigen::LLT<MatrixXd> llt;

  VectorXd solve(const VectorXd& rhs) const { return d.cwiseProduct(llt.solve(d.cwiseProduct(rhs))); }
};

struct Iterate {
  VectorXd xf;
  std::vector<MatrixXd> X;
  VectorXd y;
  std::vector<MatrixXd> Z;
};

struct Direction {
  VectorXd dxf;
  VectorXd dy;
  std::vector<MatrixXd> dX;
  std::vector<MatrixXd> dZ;
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

MatrixXd sym(const MatrixXd& A) { return 0.5 * (A + A.transpose()); }

/// diag(A)^(-1/2), with 1 for nonpositive entries.
VectorXd jacobi(const MatrixXd& A) {
  VectorXd d(A.rows());
  for (Index i = 0; i < A.rows(); ++i) d(i) = A(i, i) > 0 ? 1.0 / std::sqrt(A(i, i)) : 1.0;
  return d;
}

/// Cholesky of A plus the smallest shift 1e-14 * 100^k * max(diag) that works.
bool shifted_llt(const MatrixXd& A, Eigen::LLT<MatrixXd>& llt) {
  const double dmax = A.size() ? std::max(A.diagonal().maxCoeff(), 1e-300) : 1.0;
  double delta = kStaticShift * dmax;
  for (int attempt = 0; attempt <= 10; ++attempt, delta *= 100.0) {
    MatrixXd Ar = A;
    Ar.diagonal().array() += delta;
    llt.compute(Ar);
    if (llt.info() == Eigen::Success) return true;
  }
  return false;
}

/// Largest step alpha with X + alpha dX positive semidefinite.
double max_step(const MatrixXd& X, const MatrixXd& dX) {
  if (X.rows() == 1) return dX(0, 0) < 0 ? -X(0, 0) / dX(0, 0) : kInf;
  Eigen::LLT<MatrixXd> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  MatrixXd T = llt.matrixL().solve(dX);
  T = llt.matrixL().solve(T.transpose().eval());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(T), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin >= 0 ? kInf : -1.0 / lmin;
}

class NativeIpm {
 public:
  NativeIpm(const SdpProblem& sdp, const SolveOptions& opt) : sdp_(sdp), opt_(opt) { setup(); }

  SolveReport run();

 private:
  void setup();
  VectorXd conic_vector(const std::vector<MatrixXd>& mats) const;
  std::vector<MatrixXd> conic_matrices(const VectorXd& v) const;
  bool assemble_schur(const std::vector<MatrixXd>& X, const std::vector<MatrixXd>& W);
  void solve_saddle(const VectorXd& h, const VectorXd& rf, VectorXd& dy, VectorXd& dxf) const;
  void apply_minv(const VectorXd& h, VectorXd& out) const;
  VectorXd s_solve(const VectorXd& r) const { return s_d_.cwiseProduct(s_llt_.solve(s_d_.cwiseProduct(r))); }
  Direction direction(const Iterate& it, const std::vector<MatrixXd>& W, const std::vector<MatrixXd>& Rc,
                      const VectorXd& rp, const VectorXd& rdf, const VectorXd& rdc) const;
  void polish(Iterate& it);
  void correct_primal(const Iterate& it, const VectorXd& rp, Direction& dir);
  SolveReport finish(const Iterate& it, SolveStatus status, int iters, const std::string& message) const;

  const SdpProblem& sdp_;
  const SolveOptions& opt_;
  Index m_ = 0;
  VectorXd row_scale_;
  VectorXd bs_;
  std::vector<Index> free_cols_;   // original column of each free variable
  std::vector<Index> conic_cols_;  // original column of each conic coordinate
  SpMat Af_;
  SpMat Ac_;
  VectorXd cf_;
  VectorXd cc_;
  std::vector<Block> blocks_;
  std::vector<Group> groups_;
  std::vector<int> row_group_;
  std::vector<int> row_local_;
  MatrixXd S_;
  VectorXd s_d_;
  Eigen::LLT<MatrixXd> s_llt_;
  // Rows without conic entries (exact linear identities on the free
  // variables) are eliminated through a null-space basis of their matrix.
  std::vector<Index> erows_;
  MatrixXd ae_;       // erows x free, dense
  Eigen::ColPivHouseholderQR<MatrixXd> ae_qr_;  // of ae_'
  Index e_rank_ = 0;
  MatrixXd q1_;       // range of ae_'
  MatrixXd null_;     // null space of ae_
  MatrixXd s_hat_;
  double bnorm_ = 0.0;
  double cnorm_ = 0.0;
};

void NativeIpm::setup() {
  sdp_.validate();
  m_ = sdp_.A.rows();

  row_scale_ = VectorXd::Zero(m_);
  for (Index j = 0; j < sdp_.A.outerSize(); ++j) {
    for (SpMat::InnerIterator it(sdp_.A, j); it; ++it) row_scale_(it.row()) += it.value() * it.value();
  }
  for (Index i = 0; i < m_; ++i) row_scale_(i) = row_scale_(i) > 0 ? 1.0 / std::sqrt(row_scale_(i)) : 1.0;
  bs_ = row_scale_.cwiseProduct(sdp_.b);
  bnorm_ = sdp_.b.norm();
  cnorm_ = sdp_.c.norm();

  Index pos = 0;
  for (const auto& k : sdp_.cones) {
    switch (k.kind) {
      case ConeBlock::Kind::kFree:
        for (std::size_t i = 0; i < k.size; ++i) free_cols_.push_back(pos + static_cast<Index>(i));
        break;
      case ConeBlock::Kind::kNonnegative:
        for (std::size_t i = 0; i < k.size; ++i) {
          Block b;
          b.order = 1;
          b.col = static_cast<Index>(conic_cols_.size());
          conic_cols_.push_back(pos + static_cast<Index>(i));
          blocks_.push_back(std::move(b));
        }
        break;
      case ConeBlock::Kind::kPsd: {
        Block b;
        b.order = static_cast<int>(k.size);
        b.col = static_cast<Index>(conic_cols_.size());
        for (std::size_t i = 0; i < k.dim(); ++i) conic_cols_.push_back(pos + static_cast<Index>(i));
        blocks_.push_back(std::move(b));
        break;
      }
    }
    pos += static_cast<Index>(k.dim());
  }

  auto select = [&](const std::vector<Index>& cols, SpMat& out, VectorXd& cout) {
    std::vector<Eigen::Triplet<double>> trip;
    cout.resize(static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      for (SpMat::InnerIterator it(sdp_.A, cols[j]); it; ++it) {
        trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(j), it.value() * row_scale_(it.row()));
      }
      cout(static_cast<Index>(j)) = sdp_.c(cols[j]);
    }
    out.resize(m_, static_cast<Index>(cols.size()));
    out.setFromTriplets(trip.begin(), trip.end());
  };
  select(free_cols_, Af_, cf_);
  select(conic_cols_, Ac_, cc_);

  // Groups of rows sharing a block.
  UnionFind uf(static_cast<std::size_t>(m_));
  for (const auto& b : blocks_) {
    const Index dim = b.order * (b.order + 1) / 2;
    Index first = -1;
    for (Index j = b.col; j < b.col + dim; ++j) {
      for (SpMat::InnerIterator it(Ac_, j); it; ++it) {
        if (first < 0) first = it.row();
        uf.unite(static_cast<std::size_t>(first), static_cast<std::size_t>(it.row()));
      }
    }
  }
  row_group_.assign(static_cast<std::size_t>(m_), -1);
  row_local_.assign(static_cast<std::size_t>(m_), -1);
  std::vector<char> conic_row(static_cast<std::size_t>(m_), 0);
  for (Index j = 0; j < Ac_.outerSize(); ++j) {
    for (SpMat::InnerIterator it(Ac_, j); it; ++it) conic_row[static_cast<std::size_t>(it.row())] = 1;
  }
  std::map<std::size_t, int> root_to_group;
  for (Index i = 0; i < m_; ++i) {
    if (!conic_row[static_cast<std::size_t>(i)]) {
      row_local_[static_cast<std::size_t>(i)] = static_cast<int>(erows_.size());
      erows_.push_back(i);
      continue;
    }
    const std::size_t r = uf.find(static_cast<std::size_t>(i));
    auto [it, inserted] = root_to_group.emplace(r, static_cast<int>(groups_.size()));
    if (inserted) groups_.emplace_back();
    Group& g = groups_[static_cast<std::size_t>(it->second)];
    row_group_[static_cast<std::size_t>(i)] = it->second;
    row_local_[static_cast<std::size_t>(i)] = static_cast<int>(g.rows.size());
    g.rows.push_back(i);
  }

  for (std::size_t p = 0; p < blocks_.size(); ++p) {
    Block& b = blocks_[p];
    for (int c = 0; c < b.order; ++c) {
      for (int r = c; r < b.order; ++r) {
        const Index j = b.col + static_cast<Index>(svec_index(static_cast<std::size_t>(b.order), r, c));
        for (SpMat::InnerIterator it(Ac_, j); it; ++it) {
          const auto row = static_cast<std::size_t>(it.row());
          if (b.group < 0) {
            b.group = row_group_[row];
            groups_[static_cast<std::size_t>(b.group)].blocks.push_back(static_cast<int>(p));
          }
          const int local = row_local_[row];
          if (r == c) {
            b.entries.push_back({local, r, r, it.value()});
          } else {
            const double v = it.value() / kSqrt2;
            b.entries.push_back({local, r, c, v});
            b.entries.push_back({local, c, r, v});
          }
        }
      }
    }
    std::stable_sort(b.entries.begin(), b.entries.end(), [](const Entry& x, const Entry& y) { return x.row < y.row; });
    for (std::size_t e = 0; e < b.entries.size();) {
      std::size_t f = e;
      while (f < b.entries.size() && b.entries[f].row == b.entries[e].row) ++f;
      b.row_spans.emplace_back(static_cast<int>(e), static_cast<int>(f));
      e = f;
    }
  }

  // Dense free-variable columns per group.
  std::vector<std::vector<std::pair<Index, std::pair<Index, double>>>> per_group(groups_.size());
  ae_ = MatrixXd::Zero(static_cast<Index>(erows_.size()), static_cast<Index>(free_cols_.size()));
  for (Index j = 0; j < Af_.outerSize(); ++j) {
    for (SpMat::InnerIterator it(Af_, j); it; ++it) {
      const int gi = row_group_[static_cast<std::size_t>(it.row())];
      if (gi < 0) {
        ae_(row_local_[static_cast<std::size_t>(it.row())], j) = it.value();
        continue;
      }
      const auto g = static_cast<std::size_t>(gi);
      per_group[g].push_back({j, {row_local_[static_cast<std::size_t>(it.row())], it.value()}});
    }
  }
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    Group& grp = groups_[g];
    for (const auto& e : per_group[g]) {
      if (grp.free_cols.empty() || grp.free_cols.back() != e.first) grp.free_cols.push_back(e.first);
    }
    grp.Af = MatrixXd::Zero(static_cast<Index>(grp.rows.size()), static_cast<Index>(grp.free_cols.size()));
    std::size_t c = 0;
    for (const auto& e : per_group[g]) {
      while (grp.free_cols[c] != e.first) ++c;
      grp.Af(e.second.first, static_cast<Index>(c)) = e.second.second;
    }
  }

  if (!erows_.empty()) {
    ae_qr_.setThreshold(1e-10);
    ae_qr_.compute(ae_.transpose());
    e_rank_ = ae_qr_.rank();
    const MatrixXd Q = ae_qr_.householderQ();
    q1_ = Q.leftCols(e_rank_);
    null_ = Q.rightCols(Q.cols() - e_rank_);
    // Consistency of the identities themselves.
    for (Index r = 0; r < static_cast<Index>(erows_.size()); ++r) {
      if (std::abs(bs_(erows_[static_cast<std::size_t>(r)])) > 0 && ae_.row(r).norm() == 0) {
        throw std::invalid_argument("empty constraint row with nonzero right-hand side");
      }
    }
  }
}

VectorXd NativeIpm::conic_vector(const std::vector<MatrixXd>& mats) const {
  VectorXd v(static_cast<Index>(conic_cols_.size()));
  for (std::size_t p = 0; p < blocks_.size(); ++p) {
    const Block& b = blocks_[p];
    if (b.order == 1) {
      v(b.col) = mats[p](0, 0);
    } else {
      v.segment(b.col, b.order * (b.order + 1) / 2) = svec(mats[p]);
    }
  }
  return v;
}

std::vector<MatrixXd> NativeIpm::conic_matrices(const VectorXd& v) const {
  std::vector<MatrixXd> out(blocks_.size());
  for (std::size_t p = 0; p < blocks_.size(); ++p) {
    const Block& b = blocks_[p];
    out[p] = smat(v.segment(b.col, b.order * (b.order + 1) / 2), static_cast<std::size_t>(b.order));
  }
  return out;
}

bool NativeIpm::assemble_schur(const std::vector<MatrixXd>& X, const std::vector<MatrixXd>& W) {
  // M_ij = trace(B_i X B_j W), accumulated per block through F_i = W B_i X.
  for (auto& g : groups_) {
    const auto n = static_cast<Index>(g.rows.size());
    g.M = MatrixXd::Zero(n, n);
    for (int p : g.blocks) {
      const Block& b = blocks_[static_cast<std::size_t>(p)];
      const MatrixXd& Xp = X[static_cast<std::size_t>(p)];
      const MatrixXd& Wp = W[static_cast<std::size_t>(p)];
      MatrixXd F(b.order, b.order);
      VectorXd col(b.order);
      for (std::size_t si = 0; si < b.row_spans.size(); ++si) {
        const auto [ei, fi] = b.row_spans[si];
        F.setZero();
        for (int e = ei; e < fi; ++e) {
          const Entry& en = b.entries[static_cast<std::size_t>(e)];
          col.noalias() = en.v * Wp.col(en.a);
          F.noalias() += col * Xp.row(en.b);
        }
        const int row_i = b.entries[static_cast<std::size_t>(ei)].row;
        for (std::size_t sj = si; sj < b.row_spans.size(); ++sj) {
          const auto [ej, fj] = b.row_spans[sj];
          double acc = 0.0;
          for (int f = ej; f < fj; ++f) {
            const Entry& en = b.entries[static_cast<std::size_t>(f)];
            acc += en.v * F(en.b, en.a);
          }
          g.M(b.entries[static_cast<std::size_t>(ej)].row, row_i) += acc;
        }
      }
    }
    // Rows are visited in increasing order, so only the lower triangle is set.
    // A tiny static shift keeps the factorization defined once rounding makes
    // M numerically semidefinite; refinement against the exact M removes it.
    g.d = jacobi(g.M);
    const MatrixXd Mfull = g.M.selfadjointView<Eigen::Lower>();
    const MatrixXd Ms = g.d.asDiagonal() * Mfull * g.d.asDiagonal();
    if (!shifted_llt(Ms, g.llt)) return false;
  }

  const auto nf = static_cast<Index>(free_cols_.size());
  if (nf == 0) return true;
  S_ = MatrixXd::Zero(nf, nf);
  for (const auto& g : groups_) {
    if (g.free_cols.empty()) continue;
    const MatrixXd V = g.llt.matrixL().solve(g.d.asDiagonal() * g.Af);
    const MatrixXd VtV = V.transpose() * V;
    for (std::size_t a = 0; a < g.free_cols.size(); ++a) {
      for (std::size_t c = 0; c < g.free_cols.size(); ++c) {
        S_(g.free_cols[a], g.free_cols[c]) += VtV(static_cast<Index>(a), static_cast<Index>(c));
      }
    }
  }
  const MatrixXd* target = &S_;
  if (!erows_.empty()) {
    s_hat_ = null_.transpose() * (S_ * null_);
    target = &s_hat_;
  }
  s_d_ = jacobi(*target);
  return shifted_llt(s_d_.asDiagonal() * (*target) * s_d_.asDiagonal(), s_llt_);
}

void NativeIpm::apply_minv(const VectorXd& h, VectorXd& out) const {
  out = VectorXd::Zero(m_);
  for (const auto& g : groups_) {
    VectorXd hg(static_cast<Index>(g.rows.size()));
    for (std::size_t r = 0; r < g.rows.size(); ++r) hg(static_cast<Index>(r)) = h(g.rows[r]);
    const VectorXd ug = g.solve(hg);
    for (std::size_t r = 0; r < g.rows.size(); ++r) out(g.rows[r]) = ug(static_cast<Index>(r));
  }
}

void NativeIpm::solve_saddle(const VectorXd& h, const VectorXd& rf, VectorXd& dy, VectorXd& dxf) const {
  // [M  Af] [dy ]   [h ]
  // [Af' 0] [dxf] = [rf]
  auto once = [&](const VectorXd& h1, const VectorXd& r1, VectorXd& y1, VectorXd& x1) {
    apply_minv(h1, y1);
    if (free_cols_.empty()) {
      x1.resize(0);
      return;
    }
    const VectorXd rhs = Af_.transpose() * y1 - r1;
    if (erows_.empty()) {
      x1 = s_solve(rhs);
    } else {
      // S x - Ae' ye = rhs, Ae x = he: x = xp + N xi.
      VectorXd he(static_cast<Index>(erows_.size()));
      for (std::size_t r = 0; r < erows_.size(); ++r) he(static_cast<Index>(r)) = h1(erows_[r]);
      const VectorXd phe = ae_qr_.colsPermutation().transpose() * he;
      const MatrixXd R = ae_qr_.matrixR().topLeftCorner(e_rank_, e_rank_).template triangularView<Eigen::Upper>();
      const VectorXd w = R.transpose().template triangularView<Eigen::Lower>().solve(phe.head(e_rank_));
      const VectorXd xp = q1_ * w;
      const VectorXd xi = s_solve(null_.transpose() * (rhs - S_ * xp));
      x1 = xp + null_ * xi;
      const VectorXd g = S_ * x1 - rhs;
      VectorXd z = VectorXd::Zero(static_cast<Index>(erows_.size()));
      z.head(e_rank_) = R.template triangularView<Eigen::Upper>().solve(q1_.transpose() * g);
      const VectorXd ye = ae_qr_.colsPermutation() * z;
      for (std::size_t r = 0; r < erows_.size(); ++r) y1(erows_[r]) = ye(static_cast<Index>(r));
    }
    VectorXd corr;
    apply_minv(Af_ * x1, corr);
    y1 -= corr;
  };
  once(h, rf, dy, dxf);

  // Iterative refinement against the unregularized system.
  auto residual = [&](VectorXd& r1, VectorXd& r2) {
    r1 = h - Af_ * dxf;
    for (const auto& g : groups_) {
      VectorXd yg(static_cast<Index>(g.rows.size()));
      for (std::size_t r = 0; r < g.rows.size(); ++r) yg(static_cast<Index>(r)) = dy(g.rows[r]);
      const VectorXd my = g.M.selfadjointView<Eigen::Lower>() * yg;
      for (std::size_t r = 0; r < g.rows.size(); ++r) r1(g.rows[r]) -= my(static_cast<Index>(r));
    }
    r2 = free_cols_.empty() ? VectorXd() : VectorXd(rf - Af_.transpose() * dy);
    return std::hypot(r1.norm(), r2.norm());
  };
  VectorXd r1, r2, ey, ex;
  double res = residual(r1, r2);
  const double target = 1e-14 * (1.0 + std::hypot(h.norm(), rf.norm()));
  for (int step = 0; step < 10 && res > target; ++step) {
    once(r1, r2, ey, ex);
    const VectorXd dy0 = dy;
    const VectorXd dxf0 = dxf;
    dy += ey;
    if (!free_cols_.empty()) dxf += ex;
    const double next = residual(r1, r2);
    if (!(next < res)) {
      dy = dy0;
      dxf = dxf0;
      break;
    }
    res = next;
  }
}

Direction NativeIpm::direction(const Iterate& it, const std::vector<MatrixXd>& W, const std::vector<MatrixXd>& Rc,
                               const VectorXd& rp, const VectorXd& rdf, const VectorXd& rdc) const {
  const auto rd_mats = conic_matrices(rdc);
  std::vector<MatrixXd> T(blocks_.size());
  for (std::size_t p = 0; p < blocks_.size(); ++p) T[p] = Rc[p] - sym(it.X[p] * rd_mats[p] * W[p]);
  const VectorXd h = rp - Ac_ * conic_vector(T);

  Direction d;
  solve_saddle(h, rdf, d.dy, d.dxf);
  const auto dz_mats = conic_matrices(rdc - Ac_.transpose() * d.dy);
  d.dZ = dz_mats;
  d.dX.resize(blocks_.size());
  for (std::size_t p = 0; p < blocks_.size(); ++p) d.dX[p] = Rc[p] - sym(it.X[p] * d.dZ[p] * W[p]);
  return d;
}

// The normal equations leave A dX off from rp by roughly eps * cond(M) *
// |h|. A correction X D X with [A(X o X)A' Af; Af' 0] [lam; dxf] = [e; 0]
// removes that error to the much smaller relative accuracy of e itself.
void NativeIpm::correct_primal(const Iterate& it, const VectorXd& rp, Direction& dir) {
  const VectorXd e = rp - Af_ * dir.dxf - Ac_ * conic_vector(dir.dX);
  if (!(e.norm() > 0)) return;
  if (!assemble_schur(it.X, it.X)) return;
  VectorXd lam, dxf;
  solve_saddle(e, VectorXd::Zero(static_cast<Index>(free_cols_.size())), lam, dxf);
  const auto D = conic_matrices(Ac_.transpose() * lam);
  for (std::size_t p = 0; p < blocks_.size(); ++p) dir.dX[p] += sym(it.X[p] * D[p] * it.X[p]);
  if (!free_cols_.empty()) dir.dxf += dxf;
}

// Removes the primal residual left by the normal equations: the smallest
// correction in the metric of X, dX = X D X with D = smat(Ac' lam), solves
// [A(X o X)A'  Af; Af' 0] [lam; dxf] = [rp; 0]. The correction stays in the
// range of X, so it cannot leave the cone while it is small.
void NativeIpm::polish(Iterate& it) {
  auto residual = [&](const Iterate& p) { return VectorXd(bs_ - Af_ * p.xf - Ac_ * conic_vector(p.X)); };
  auto is_inside = [](const MatrixXd& X) {
    return X.rows() == 1 ? X(0, 0) >= 0 : Eigen::LLT<MatrixXd>(X).info() == Eigen::Success;
  };
  VectorXd rp = residual(it);
  double res = rp.cwiseQuotient(row_scale_).norm();
  for (int round = 0; round < 4 && res > 0; ++round) {
    // A pure X metric cannot move along directions X has collapsed; a tiny
    // identity shift lets the correction leak out of the face when needed.
    bool improved = false;
    for (double tau : {0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2}) {
      std::vector<MatrixXd> H(blocks_.size());
      for (std::size_t p = 0; p < blocks_.size(); ++p) {
        H[p] = it.X[p];
        if (tau > 0) H[p].diagonal().array() += tau * std::max(it.X[p].diagonal().maxCoeff(), 1e-300);
      }
      if (!assemble_schur(H, H)) continue;
      VectorXd lam, dxf;
      solve_saddle(rp, VectorXd::Zero(static_cast<Index>(free_cols_.size())), lam, dxf);
      const auto D = conic_matrices(Ac_.transpose() * lam);
      Iterate next = it;
      if (!free_cols_.empty()) next.xf += dxf;
      bool inside = true;
      for (std::size_t p = 0; p < blocks_.size() && inside; ++p) {
        next.X[p] = sym(it.X[p] + H[p] * D[p] * H[p]);
        inside = is_inside(next.X[p]);
      }
      if (!inside) continue;
      const VectorXd rn = residual(next);
      const double next_res = rn.cwiseQuotient(row_scale_).norm();
      if (next_res < 0.1 * res) {
        it = std::move(next);
        rp = rn;
        res = next_res;
        improved = true;
        break;
      }
    }
    if (!improved) return;
  }
}

SolveReport NativeIpm::finish(const Iterate& it, SolveStatus status, int iters, const std::string& message) const {
  SolveReport rep;
  rep.status = status;
  rep.iterations = iters;
  rep.backend = "native";
  rep.message = message;
  rep.x = VectorXd::Zero(sdp_.c.size());
  const VectorXd xc = conic_vector(it.X);
  for (std::size_t j = 0; j < free_cols_.size(); ++j) rep.x(free_cols_[j]) = it.xf(static_cast<Index>(j));
  for (std::size_t j = 0; j < conic_cols_.size(); ++j) rep.x(conic_cols_[j]) = xc(static_cast<Index>(j));
  rep.y = row_scale_.cwiseProduct(it.y);
  rep.primal_objective = sdp_.c.dot(rep.x);
  rep.dual_objective = sdp_.b.dot(rep.y);
  rep.primal_infeasibility = (sdp_.b - sdp_.A * rep.x).norm() / (1.0 + bnorm_);
  const VectorXd zc = conic_vector(it.Z);
  const double rdf = (cf_ - Af_.transpose() * it.y).norm();
  const double rdc = (cc_ - Ac_.transpose() * it.y - zc).norm();
  rep.dual_infeasibility = std::hypot(rdf, rdc) / (1.0 + cnorm_);
  rep.relative_gap = std::abs(rep.primal_objective - rep.dual_objective) / (1.0 + std::abs(rep.primal_objective));
  return rep;
}

SolveReport NativeIpm::run() {
  const int nb = static_cast<int>(blocks_.size());
  double total_order = 0.0;
  for (const auto& b : blocks_) total_order += b.order;

  // Starting point in the style of SDPT3: scaled identities.
  Iterate it;
  it.xf = VectorXd::Zero(static_cast<Index>(free_cols_.size()));
  it.y = VectorXd::Zero(m_);
  it.X.resize(static_cast<std::size_t>(nb));
  it.Z.resize(static_cast<std::size_t>(nb));
  for (int p = 0; p < nb; ++p) {
    const Block& b = blocks_[static_cast<std::size_t>(p)];
    const Index dim = b.order * (b.order + 1) / 2;
    double amax = 0.0;
    double ratio = 0.0;
    for (Index j = b.col; j < b.col + dim; ++j) {
      for (SpMat::InnerIterator e(Ac_, j); e; ++e) {
        amax = std::max(amax, std::abs(e.value()));
        ratio = std::max(ratio, (1.0 + std::abs(bs_(e.row()))) / (1.0 + std::abs(e.value())));
      }
    }
    const double sq = std::sqrt(static_cast<double>(b.order));
    const double xi = std::max({10.0, sq, b.order * ratio});
    const double eta = std::max({10.0, sq, cc_.segment(b.col, dim).norm(), amax});
    it.X[static_cast<std::size_t>(p)] = xi * MatrixXd::Identity(b.order, b.order);
    it.Z[static_cast<std::size_t>(p)] = eta * MatrixXd::Identity(b.order, b.order);
  }

  const double near_feas = std::max(1e-6, 100.0 * opt_.tol_feas);
  const double near_gap = std::max(1e-5, 1000.0 * opt_.tol_gap);
  Iterate best = it;
  double best_merit = kInf;
  int best_iter = 0;
  int stalls = 0;
  std::vector<double> best_history;
  int iter = 0;
  double last_ap = 0.0, last_ad = 0.0, last_sigma = 0.0;
  std::string message;

  for (;; ++iter) {
    const VectorXd xc = conic_vector(it.X);
    const VectorXd zc = conic_vector(it.Z);
    const VectorXd rp = bs_ - Af_ * it.xf - Ac_ * xc;
    const VectorXd rdf = cf_ - Af_.transpose() * it.y;
    const VectorXd rdc = cc_ - Ac_.transpose() * it.y - zc;
    const double pobj = cf_.dot(it.xf) + cc_.dot(xc);
    const double dobj = bs_.dot(it.y);
    const double pinf = rp.cwiseQuotient(row_scale_).norm() / (1.0 + bnorm_);
    const double dinf = std::hypot(rdf.norm(), rdc.norm()) / (1.0 + cnorm_);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
    double mu = 0.0;
    for (int p = 0; p < nb; ++p) mu += (it.X[p].cwiseProduct(it.Z[p])).sum();
    mu = total_order > 0 ? mu / total_order : 0.0;

    if (opt_.log) {
      *opt_.log << std::setw(4) << iter << std::scientific << std::setprecision(3) << "  p " << std::setw(11) << pobj
                << "  d " << std::setw(11) << dobj << "  pinf " << pinf << "  dinf " << dinf << "  gap " << gap
                << "  mu " << mu << std::defaultfloat << std::setprecision(3) << "  step " << last_ap << " " << last_ad
                << "  sigma " << last_sigma << "\n";
    }
    if (!std::isfinite(pobj) || !std::isfinite(dobj) || !std::isfinite(mu)) {
      message = "non-finite iterate";
      break;
    }
    const double merit = std::max({pinf / opt_.tol_feas, dinf / opt_.tol_feas, gap / opt_.tol_gap});
    if (merit < best_merit) {
      best_merit = merit;
      best = it;
      best_iter = iter;
    }
    if (pinf <= opt_.tol_feas && dinf <= opt_.tol_feas && gap <= opt_.tol_gap) {
      return finish(it, SolveStatus::kOptimal, iter, "converged");
    }

    // Certificates of infeasibility: a dual ray (b'y > 0, A'y + z ~ 0) or a
    // primal ray (c'x < 0, Ax ~ 0).
    if (dobj > 0 && pinf > opt_.tol_feas) {
      const double ray = std::hypot((Af_.transpose() * it.y).norm(), (Ac_.transpose() * it.y + zc).norm());
      if (ray <= opt_.tol_feas * dobj) return finish(it, SolveStatus::kInfeasible, iter, "dual ray");
    }
    if (pobj < 0 && dinf > opt_.tol_feas) {
      const double ray = (rp - bs_).cwiseQuotient(row_scale_).norm();
      if (ray <= opt_.tol_feas * -pobj) return finish(it, SolveStatus::kUnbounded, iter, "primal ray");
    }
    if (iter >= opt_.max_iters) {
      message = "iteration limit";
      break;
    }
    // Near the optimum the Schur complement is badly conditioned and the
    // directions can turn to noise; fall back to the best iterate seen.
    const bool best_is_near = best_merit * opt_.tol_feas <= near_feas && best_merit * opt_.tol_gap <= near_gap;
    if (best_is_near && merit > 1e3 * best_merit) {
      message = "iterates diverged from the best point";
      break;
    }
    if (iter - best_iter >= 20) {
      message = "no progress";
      break;
    }
    // Once near-optimal, a crawl of less than 2x in 10 iterations is a stall.
    best_history.push_back(best_merit);
    if (best_is_near && best_history.size() > kCrawlWindow &&
        best_merit > 0.5 * best_history[best_history.size() - 1 - kCrawlWindow]) {
      message = "slow progress";
      break;
    }

    std::vector<MatrixXd> W(static_cast<std::size_t>(nb));
    bool z_ok = true;
    for (int p = 0; p < nb; ++p) {
      Eigen::LLT<MatrixXd> llt(it.Z[p]);
      if (llt.info() != Eigen::Success) {
        z_ok = false;
        break;
      }
      W[p] = sym(llt.solve(MatrixXd::Identity(it.Z[p].rows(), it.Z[p].cols())));
    }
    if (!z_ok) {
      message = "dual slack lost definiteness";
      break;
    }
    if (!assemble_schur(it.X, W)) {
      message = "Schur complement factorization failed";
      break;
    }

    // Predictor.
    std::vector<MatrixXd> Rc(static_cast<std::size_t>(nb));
    for (int p = 0; p < nb; ++p) Rc[p] = -it.X[p];
    const Direction pred = direction(it, W, Rc, rp, rdf, rdc);
    double ap = 1.0, ad = 1.0;
    for (int p = 0; p < nb; ++p) {
      ap = std::min(ap, max_step(it.X[p], pred.dX[p]));
      ad = std::min(ad, max_step(it.Z[p], pred.dZ[p]));
    }
    double mu_aff = 0.0;
    for (int p = 0; p < nb; ++p) {
      mu_aff += ((it.X[p] + ap * pred.dX[p]).cwiseProduct(it.Z[p] + ad * pred.dZ[p])).sum();
    }
    mu_aff /= total_order;
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    // Corrector.
    for (int p = 0; p < nb; ++p) {
      Rc[p] = sigma * mu * W[p] - it.X[p] - sym(pred.dX[p] * pred.dZ[p] * W[p]);
    }
    Direction dir = direction(it, W, Rc, rp, rdf, rdc);
    correct_primal(it, rp, dir);
    double sp = kInf, sd = kInf;
    for (int p = 0; p < nb; ++p) {
      sp = std::min(sp, max_step(it.X[p], dir.dX[p]));
      sd = std::min(sd, max_step(it.Z[p], dir.dZ[p]));
    }
    constexpr double kTau = 0.98;
    ap = std::min(1.0, kTau * sp);
    ad = std::min(1.0, kTau * sd);
    if (!std::isfinite(ap) || !std::isfinite(ad)) {
      message = "non-finite step";
      break;
    }

    // Rounding can put X + ap dX or Z + ad dZ just outside the cone.
    auto definite_after = [&](const std::vector<MatrixXd>& V, const std::vector<MatrixXd>& dV, double a) {
      for (int p = 0; p < nb; ++p) {
        const MatrixXd Vn = sym(V[p] + a * dV[p]);
        if (Vn.rows() == 1 ? !(Vn(0, 0) > 0) : Eigen::LLT<MatrixXd>(Vn).info() != Eigen::Success) return false;
      }
      return true;
    };
    for (int back = 0; back < 30 && !definite_after(it.X, dir.dX, ap); ++back) ap *= 0.8;
    for (int back = 0; back < 30 && !definite_after(it.Z, dir.dZ, ad); ++back) ad *= 0.8;

    last_ap = ap;
    last_ad = ad;
    last_sigma = sigma;
    if (!free_cols_.empty()) it.xf += ap * dir.dxf;
    it.y += ad * dir.dy;
    for (int p = 0; p < nb; ++p) {
      it.X[p] = sym(it.X[p] + ap * dir.dX[p]);
      it.Z[p] = sym(it.Z[p] + ad * dir.dZ[p]);
    }
    stalls = (std::max(ap, ad) < 1e-8) ? stalls + 1 : 0;
    if (stalls >= 3) {
      message = "step length stalled";
      ++iter;
      break;
    }
  }

  polish(best);
  SolveReport rep = finish(best, SolveStatus::kNumericalFailure, iter, message);
  if (rep.primal_infeasibility <= near_feas && rep.dual_infeasibility <= near_feas && rep.relative_gap <= near_gap) {
    rep.status = SolveStatus::kNearOptimal;
  }
  return rep;
}

using Backend = std::function<SolveReport(const SdpProblem&, const SolveOptions&)>;

const std::map<std::string, Backend>& backends() {
  static const std::map<std::string, Backend> table{
      {"native", [](const SdpProblem& sdp, const SolveOptions& opt) { return NativeIpm(sdp, opt).run(); }},
  };
  return table;
}

}  // namespace

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kNearOptimal: return "near-optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
  }
  return "?";
}

std::vector<std::string> available_backends() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : backends()) names.push_back(name);
  return names;
}

SolveReport solve(const SdpProblem& sdp, const SolveOptions& options) {
  const auto& table = backends();
  auto it = table.find(options.backend);
  if (it == table.end()) throw std::invalid_argument("unknown solver backend '" + options.backend + "'");
  const auto start = std::chrono::steady_clock::now();
  SolveReport rep = it->second(sdp, options);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

double min_relative_eigenvalue(const SdpProblem& sdp, const Eigen::VectorXd& x) {
  double worst = kInf;
  std::size_t pos = 0;
  for (const auto& k : sdp.cones) {
    if (k.kind == ConeBlock::Kind::kNonnegative) {
      for (std::size_t i = 0; i < k.size; ++i) {
        const double v = x(static_cast<Index>(pos + i));
        worst = std::min(worst, v == 0.0 ? 0.0 : v / std::abs(v));
      }
    } else if (k.kind == ConeBlock::Kind::kPsd) {
      const MatrixXd S = smat(x.segment(static_cast<Index>(pos), static_cast<Index>(k.dim())), k.size);
      const double norm = S.norm();
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
      worst = std::min(worst, norm > 0 ? es.eigenvalues()(0) / norm : 0.0);
    }
    pos += k.dim();
  }
  return std::isfinite(worst) ? worst : 0.0;
}

}  // namespace splitroa
