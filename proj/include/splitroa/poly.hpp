#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace splitroa {

/// Variable identifier. The convention used throughout the project is
/// t = 0, x_j = j (1-based), u_j = n + j.
using VarId = std::uint32_t;

/// A monomial stored as a sorted list of (variable, exponent) pairs with no
/// zero exponents.
class Monomial {
 public:
  using Factor = std::pair<VarId, std::uint32_t>;

  Monomial() = default;
  /// Builds from unordered factors; repeated variables are merged and zero
  /// exponents dropped.
  explicit Monomial(std::vector<Factor> factors);
  static Monomial var(VarId v, std::uint32_t exponent = 1);

  std::span<const Factor> factors() const { return factors_; }
  std::uint32_t degree() const { return degree_; }
  std::uint32_t exponent(VarId v) const;
  bool is_constant() const { return factors_.empty(); }

  Monomial operator*(const Monomial& other) const;
  /// Value of the monomial at a dense point indexed by VarId.
  double evaluate(std::span<const double> point) const;

  bool operator==(const Monomial& other) const = default;

  std::size_t hash() const;
  std::string to_string(std::size_t n_states = 1000) const;

 private:
  std::vector<Factor> factors_;
  std::uint32_t degree_ = 0;
};

/// Graded lexicographic order: lower total degree first, then the exponent
/// vector (in increasing VarId) compared lexicographically, larger first.
/// With this order degree-1 monomials come out as x1, x2, ...
struct GradedLexLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const { return m.hash(); }
};

/// Sparse multivariate polynomial with real coefficients. Exact zeros are
/// never stored.
class Polynomial {
 public:
  using Terms = std::map<Monomial, double, GradedLexLess>;

  Polynomial() = default;
  Polynomial(double constant);  // NOLINT(google-explicit-constructor)
  explicit Polynomial(const Monomial& m, double coefficient = 1.0);
  static Polynomial var(VarId v) { return Polynomial(Monomial::var(v)); }

  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  /// Max total degree over stored terms; 0 for the zero polynomial.
  std::uint32_t degree() const;
  /// Max exponent of a single variable.
  std::uint32_t degree_in(VarId v) const;
  double coefficient(const Monomial& m) const;
  /// Variables that occur with a nonzero exponent, ascending.
  std::vector<VarId> variables() const;

  /// Adds c*m, pruning the term if it becomes exactly zero.
  void add_term(const Monomial& m, double c);

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(double s);
  Polynomial operator-() const;
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  bool operator==(const Polynomial& other) const = default;

  /// Dense evaluation; point[v] is the value of variable v. The span must
  /// cover every variable in the polynomial.
  double evaluate(std::span<const double> point) const;
  /// Evaluation with an explicit assignment; throws std::invalid_argument if
  /// a variable of the polynomial is unassigned.
  double evaluate(const std::map<VarId, double>& point) const;

  std::string to_string(std::size_t n_states = 1000) const;

 private:
  Terms terms_;
};

Polynomial pow(const Polynomial& p, std::uint32_t e);

/// Exact partial derivative with respect to `v`.
Polynomial differentiate(const Polynomial& p, VarId v);

/// old variable = offset + scale * (new variable `target`); with no target
/// the variable is replaced by the constant `offset`.
struct AffineVar {
  std::optional<VarId> target;
  double offset = 0.0;
  double scale = 1.0;
};

/// Substitutes every variable v with an entry in `map` (keyed by v) by its
/// affine image. Variables without an entry are left untouched.
Polynomial substitute_affine(const Polynomial& p, const std::map<VarId, AffineVar>& map);

/// All monomials in variables 0..n_vars-1 of total degree <= d, in graded
/// lexicographic order. Length is C(n_vars + d, n_vars).
std::vector<Monomial> monomial_basis(std::size_t n_vars, std::uint32_t d);
/// Same, over an explicit ascending list of variables.
std::vector<Monomial> monomial_basis(std::span<const VarId> vars, std::uint32_t d);

std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
  double radius() const { return 0.5 * (hi - lo); }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool operator==(const Interval&) const = default;
};

/// Lebesgue moments of a box over its monomial basis up to degree d. The
/// box's i-th interval belongs to variable `first_var + i`.
struct MomentVector {
  std::vector<Monomial> basis;
  std::vector<double> values;
};

MomentVector box_moments(std::span<const Interval> box, std::uint32_t d, VarId first_var = 1);
/// Moment of a single monomial over a box whose i-th interval is variable
/// first_var + i.
double box_moment(std::span<const Interval> box, const Monomial& m, VarId first_var = 1);

/// Error raised by the polynomial text parser. `column` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t column)
      : std::runtime_error(what), column_(column) {}
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

/// Parses expressions like "3.0*x1^2*u1 - 0.25*x1". Identifiers are t,
/// x1..xn and u1..um; anything else is rejected. Multiplication must be
/// explicit; parentheses and unary signs are accepted.
Polynomial parse_polynomial(std::string_view text, std::size_t n_states, std::size_t n_inputs);

/// Variable name for printing; uses the t/x/u convention.
std::string var_name(VarId v, std::size_t n_states);

}  // namespace splitroa
