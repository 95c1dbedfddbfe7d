#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "splitroa/poly.hpp"
#include "splitroa/problem.hpp"
#include "splitroa/sdp.hpp"

namespace splitroa {

/// Affine coordinates z = center + radius * z' for the free variables of a
/// polynomial piece or certificate. Variables in `fixed` are pinned to a
/// value (the collapsed axis of a facet, or t at a knot).
struct Chart {
  std::vector<VarId> vars;
  std::vector<double> center;
  std::vector<double> radius;
  std::map<VarId, double> fixed;

  /// z' for a dense original-coordinate point (entries for chart vars only).
  std::vector<double> to_local(std::span<const double> z) const;
  /// Substitution map original -> chart coordinates.
  std::map<VarId, AffineVar> original_to_local() const;
};

/// One polynomial decision variable: coefficients in slots
/// [offset, offset + basis.size()) over `basis` in chart coordinates.
struct PieceLayout {
  std::size_t offset = 0;
  std::vector<Monomial> basis;
  Chart chart;
};

enum class Family {
  kLiouville,      // -Lv_{i,k} >= 0 on [T_k,T_k+1] x X_i x U
  kInitial,        // w_i - v_{i,1}(0,.) - 1 >= 0 on X_i
  kTerminal,       // v_{i,K-1}(T,.) >= 0 on X_T n X_i
  kWNonneg,        // w_i >= 0 on X_i
  kTimeStitch,     // v_{i,k}(T_k+1,.) - v_{i,k+1}(T_k+1,.) >= 0 on X_i
  kFacetForward,   // v_a - v_b >= 0 where h'f >= 0
  kFacetBackward,  // v_b - v_a >= 0 where h'f <= 0
  kFacetEquality,  // v_a - v_b = 0 on the facet, when h'f takes both signs at every point
  kFacetDivisible,  // v_a - v_b - h'f r = 0 on the facet, when h'f vanishes on a hyperplane of it
  kFacetQuotient,   // r >= 0 on the facet, the other half of kFacetDivisible
};

const char* family_name(Family f);

/// A term of an identity's left-hand side.
struct LhsTerm {
  enum class Kind { kPiece, kNegLiouville, kConstant, kAux };
  Kind kind = Kind::kConstant;
  double coef = 1.0;
  /// Which piece: v_{cell,interval} when is_w is false, else w_cell. For
  /// kAux, `cell` indexes DecisionLayout::aux.
  bool is_w = false;
  std::size_t cell = 0;
  std::size_t interval = 0;
  /// Polynomial factor in original coordinates (kPiece and kAux).
  Polynomial factor = Polynomial(1.0);
};

/// Everything needed to rebuild "LHS(z) = q(z) + sum_j s_j(z) g_j(z)".
struct CertificateSpec {
  std::string id;
  Family family = Family::kLiouville;
  std::size_t cell = 0;
  std::size_t interval = 0;
  std::optional<std::size_t> facet;
  Chart chart;
  std::vector<LhsTerm> lhs;
  /// g_j in original coordinates.
  std::vector<Polynomial> multipliers;
  /// Plain polynomial identity LHS = 0: no SOS terms at all.
  bool equality = false;
  /// Whether the identity carries the free SOS term q (multiplier 1).
  bool free_sos = true;
  /// Relaxation degree of this identity, when it differs from the program's.
  std::optional<std::uint32_t> degree;
};

struct GramBlock {
  std::size_t offset = 0;  // first svec slot in x
  std::vector<Monomial> basis;
  /// Index into CertificateSpec::multipliers, or -1 for the free SOS term q.
  int multiplier = -1;
  /// The Gram term multiplies scale * g_j (g_j normalized in chart coordinates).
  double scale = 1.0;
};

struct CertificateRecord {
  CertificateSpec spec;
  std::size_t row_begin = 0;
  std::size_t row_count = 0;
  std::vector<GramBlock> grams;
};

struct DecisionLayout {
  std::size_t n_cells = 0;
  std::size_t n_intervals = 0;
  std::uint32_t degree = 0;
  std::uint32_t v_degree = 0;
  std::size_t n_free = 0;
  std::size_t n_vars = 0;
  /// v[i][k] and w[i].
  std::vector<std::vector<PieceLayout>> v;
  std::vector<PieceLayout> w;
  /// Auxiliary polynomials, e.g. the quotient r of a divisible facet.
  std::vector<PieceLayout> aux;
  std::vector<CertificateRecord> certificates;
};

struct CompileOptions {
  /// Map every piece and certificate domain affinely onto [-1, 1] boxes.
  bool scale_variables = true;
};

struct CompiledProgram {
  SdpProblem sdp;
  DecisionLayout layout;
};

/// Raised when a multiplier cannot fit under the relaxation degree.
class DegreeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Degree of the v pieces: the largest value keeping deg(Lv) <= d.
std::uint32_t value_function_degree(const RoaProblem& problem);

/// Compiles the split SOS program over the problem's partition.
CompiledProgram compile(const RoaProblem& problem, const CompileOptions& options = {});

/// Compiles the unsplit program (one v on [0,T] x X, one w on X) directly
/// from the problem data, ignoring any partition.
CompiledProgram compile_unsplit(const RoaProblem& problem, const CompileOptions& options = {});

/// Piecewise polynomials in original coordinates.
struct ExtractedSolution {
  std::vector<std::vector<Polynomial>> v;  // [cell][interval]
  std::vector<Polynomial> w;               // [cell]
  std::vector<Polynomial> aux;
};

ExtractedSolution extract_solution(const DecisionLayout& layout, const Eigen::VectorXd& x);

/// LHS - RHS of a compiled identity evaluated at a dense original-coordinate
/// point z (t, x, u). `scale` is the sum of absolute values of all summands.
struct IdentityResidual {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double scale = 0.0;
};

IdentityResidual certificate_residual(const RoaProblem& problem, const DecisionLayout& layout,
                                      const ExtractedSolution& solution, const Eigen::VectorXd& x,
                                      std::size_t certificate, std::span<const double> z);

/// Counts of certificates per family, for diagnostics and tests.
std::map<Family, std::size_t> family_counts(const DecisionLayout& layout);

}  // namespace splitroa
