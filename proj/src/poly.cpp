#include "splitroa/poly.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace splitroa {

// ---------------------------------------------------------------- Monomial

Monomial::Monomial(std::vector<Factor> factors) {
  std::sort(factors.begin(), factors.end());
  for (const auto& [v, e] : factors) {
    if (e == 0) continue;
    if (!factors_.empty() && factors_.back().first == v) {
      factors_.back().second += e;
    } else {
      factors_.emplace_back(v, e);
    }
    degree_ += e;
  }
}

Monomial Monomial::var(VarId v, std::uint32_t exponent) {
  return Monomial(std::vector<Factor>{{v, exponent}});
}

std::uint32_t Monomial::exponent(VarId v) const {
  auto it = std::lower_bound(factors_.begin(), factors_.end(), Factor{v, 0},
                             [](const Factor& a, const Factor& b) { return a.first < b.first; });
  return (it != factors_.end() && it->first == v) ? it->second : 0;
}

Monomial Monomial::operator*(const Monomial& other) const {
  Monomial out;
  out.factors_.reserve(factors_.size() + other.factors_.size());
  auto a = factors_.begin();
  auto b = other.factors_.begin();
  while (a != factors_.end() || b != other.factors_.end()) {
    if (b == other.factors_.end() || (a != factors_.end() && a->first < b->first)) {
      out.factors_.push_back(*a++);
    } else if (a == factors_.end() || b->first < a->first) {
      out.factors_.push_back(*b++);
    } else {
      out.factors_.emplace_back(a->first, a->second + b->second);
      ++a;
      ++b;
    }
  }
  out.degree_ = degree_ + other.degree_;
  return out;
}

double Monomial::evaluate(std::span<const double> point) const {
  double value = 1.0;
  for (const auto& [v, e] : factors_) {
    if (v >= point.size()) throw std::invalid_argument("point does not cover variable " + std::to_string(v));
    const double base = point[v];
    double p = 1.0;
    for (std::uint32_t k = 0; k < e; ++k) p *= base;
    value *= p;
  }
  return value;
}

std::size_t Monomial::hash() const {
  std::size_t h = 0x9e3779b97f4a7c15ULL;
  for (const auto& [v, e] : factors_) {
    h ^= (static_cast<std::size_t>(v) * 0x100000001b3ULL + e) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

std::string var_name(VarId v, std::size_t n_states) {
  if (v == 0) return "t";
  if (v <= n_states) return "x" + std::to_string(v);
  return "u" + std::to_string(v - n_states);
}

std::string Monomial::to_string(std::size_t n_states) const {
  if (factors_.empty()) return "1";
  std::string out;
  for (const auto& [v, e] : factors_) {
    if (!out.empty()) out += '*';
    out += var_name(v, n_states);
    if (e > 1) out += "^" + std::to_string(e);
  }
  return out;
}

bool GradedLexLess::operator()(const Monomial& a, const Monomial& b) const {
  if (a.degree() != b.degree()) return a.degree() < b.degree();
  auto fa = a.factors();
  auto fb = b.factors();
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < fa.size() && j < fb.size()) {
    if (fa[i].first < fb[j].first) return true;
    if (fb[j].first < fa[i].first) return false;
    if (fa[i].second != fb[j].second) return fa[i].second > fb[j].second;
    ++i;
    ++j;
  }
  // Equal degree and equal prefix means both are exhausted.
  return false;
}

// -------------------------------------------------------------- Polynomial

Polynomial::Polynomial(double constant) {
  if (constant != 0.0) terms_.emplace(Monomial{}, constant);
}

Polynomial::Polynomial(const Monomial& m, double coefficient) {
  if (coefficient != 0.0) terms_.emplace(m, coefficient);
}

std::uint32_t Polynomial::degree() const {
  // Terms are graded, so the last one has the maximal degree.
  return terms_.empty() ? 0 : terms_.rbegin()->first.degree();
}

std::uint32_t Polynomial::degree_in(VarId v) const {
  std::uint32_t d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.exponent(v));
  return d;
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

std::vector<VarId> Polynomial::variables() const {
  std::vector<VarId> vars;
  for (const auto& [m, c] : terms_) {
    for (const auto& f : m.factors()) vars.push_back(f.first);
  }
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

void Polynomial::add_term(const Monomial& m, double c) {
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  for (const auto& [m, c] : other.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  for (const auto& [m, c] : other.terms_) add_term(m, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= s;
    // Underflow can produce exact zeros.
    if (it->second == 0.0) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
  return *this;
}

Polynomial Polynomial::operator-() const { return *this * -1.0; }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial out;
  for (const auto& [ma, ca] : a.terms_) {
    for (const auto& [mb, cb] : b.terms_) out.add_term(ma * mb, ca * cb);
  }
  return out;
}

double Polynomial::evaluate(std::span<const double> point) const {
  double sum = 0.0;
  for (const auto& [m, c] : terms_) sum += c * m.evaluate(point);
  return sum;
}

double Polynomial::evaluate(const std::map<VarId, double>& point) const {
  double sum = 0.0;
  for (const auto& [m, c] : terms_) {
    double value = c;
    for (const auto& [v, e] : m.factors()) {
      auto it = point.find(v);
      if (it == point.end()) throw std::invalid_argument("no value assigned to variable " + std::to_string(v));
      value *= std::pow(it->second, static_cast<int>(e));
    }
    sum += value;
  }
  return sum;
}

std::string Polynomial::to_string(std::size_t n_states) const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [m, c] : terms_) {
    double mag = c;
    if (first) {
      if (c < 0) os << "-";
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    mag = std::abs(c);
    if (m.is_constant()) {
      os << mag;
    } else {
      if (mag != 1.0) os << mag << "*";
      os << m.to_string(n_states);
    }
    first = false;
  }
  return os.str();
}

Polynomial pow(const Polynomial& p, std::uint32_t e) {
  Polynomial result(1.0);
  Polynomial base = p;
  while (e > 0) {
    if (e & 1U) result = result * base;
    e >>= 1U;
    if (e > 0) base = base * base;
  }
  return result;
}

Polynomial differentiate(const Polynomial& p, VarId v) {
  Polynomial out;
  for (const auto& [m, c] : p.terms()) {
    const std::uint32_t e = m.exponent(v);
    if (e == 0) continue;
    std::vector<Monomial::Factor> factors(m.factors().begin(), m.factors().end());
    for (auto& f : factors) {
      if (f.first == v) f.second -= 1;
    }
    out.add_term(Monomial(std::move(factors)), c * static_cast<double>(e));
  }
  return out;
}

Polynomial substitute_affine(const Polynomial& p, const std::map<VarId, AffineVar>& map) {
  // Powers of each substituted variable are cached as polynomials.
  std::map<VarId, std::vector<Polynomial>> powers;
  auto power_of = [&](VarId v, std::uint32_t e) -> const Polynomial& {
    auto& list = powers[v];
    if (list.empty()) {
      const AffineVar& a = map.at(v);
      Polynomial image(a.offset);
      if (a.target && a.scale != 0.0) image.add_term(Monomial::var(*a.target), a.scale);
      list.emplace_back(1.0);
      list.push_back(image);
    }
    while (list.size() <= e) list.push_back(list.back() * list[1]);
    return list[e];
  };

  Polynomial out;
  for (const auto& [m, c] : p.terms()) {
    Polynomial term(c);
    std::vector<Monomial::Factor> kept;
    for (const auto& [v, e] : m.factors()) {
      if (map.count(v)) {
        term = term * power_of(v, e);
      } else {
        kept.emplace_back(v, e);
      }
    }
    if (!kept.empty()) term = term * Polynomial(Monomial(std::move(kept)));
    out += term;
  }
  return out;
}

// ------------------------------------------------------------------- bases

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

namespace {

void enumerate_degree(std::span<const VarId> vars, std::size_t pos, std::uint32_t remaining,
                      std::vector<Monomial::Factor>& current, std::vector<Monomial>& out) {
  if (pos + 1 == vars.size()) {
    current.emplace_back(vars[pos], remaining);
    out.emplace_back(current);
    current.pop_back();
    return;
  }
  for (std::int64_t e = remaining; e >= 0; --e) {
    current.emplace_back(vars[pos], static_cast<std::uint32_t>(e));
    enumerate_degree(vars, pos + 1, remaining - static_cast<std::uint32_t>(e), current, out);
    current.pop_back();
  }
}

}  // namespace

std::vector<Monomial> monomial_basis(std::span<const VarId> vars, std::uint32_t d) {
  std::vector<Monomial> out;
  if (vars.empty()) {
    out.emplace_back();
    return out;
  }
  out.reserve(binomial(vars.size() + d, vars.size()));
  std::vector<Monomial::Factor> current;
  for (std::uint32_t k = 0; k <= d; ++k) enumerate_degree(vars, 0, k, current, out);
  return out;
}

std::vector<Monomial> monomial_basis(std::size_t n_vars, std::uint32_t d) {
  if (n_vars == 0) throw std::invalid_argument("monomial_basis needs at least one variable");
  std::vector<VarId> vars(n_vars);
  for (std::size_t i = 0; i < n_vars; ++i) vars[i] = static_cast<VarId>(i);
  return monomial_basis(vars, d);
}

// ----------------------------------------------------------------- moments

double box_moment(std::span<const Interval> box, const Monomial& m, VarId first_var) {
  double value = 1.0;
  std::size_t next = 0;
  auto factors = m.factors();
  for (std::size_t i = 0; i < box.size(); ++i) {
    const VarId v = first_var + static_cast<VarId>(i);
    std::uint32_t e = 0;
    if (next < factors.size() && factors[next].first == v) e = factors[next++].second;
    const double a = box[i].lo;
    const double b = box[i].hi;
    value *= (std::pow(b, e + 1) - std::pow(a, e + 1)) / static_cast<double>(e + 1);
  }
  if (next != factors.size()) throw std::invalid_argument("monomial uses a variable outside the box");
  return value;
}

MomentVector box_moments(std::span<const Interval> box, std::uint32_t d, VarId first_var) {
  if (box.empty()) throw std::invalid_argument("box_moments needs a nonempty box");
  for (const auto& iv : box) {
    if (!(iv.lo < iv.hi)) throw std::invalid_argument("box_moments: degenerate interval");
  }
  std::vector<VarId> vars(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) vars[i] = first_var + static_cast<VarId>(i);
  MomentVector mv;
  mv.basis = monomial_basis(vars, d);
  mv.values.reserve(mv.basis.size());
  for (const auto& m : mv.basis) mv.values.push_back(box_moment(box, m, first_var));
  return mv;
}

// ------------------------------------------------------------------ parser

namespace {

class PolyParser {
 public:
  PolyParser(std::string_view text, std::size_t n, std::size_t m) : text_(text), n_(n), m_(m) {}

  Polynomial parse() {
    skip_ws();
    if (pos_ >= text_.size()) fail("empty polynomial");
    Polynomial p = expr();
    skip_ws();
    if (pos_ < text_.size()) fail(std::string("unexpected '") + text_[pos_] + "'");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("column " + std::to_string(pos_ + 1) + ": " + msg, pos_ + 1);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomial expr() {
    Polynomial acc = term();
    for (;;) {
      if (accept('+')) {
        acc += term();
      } else if (accept('-')) {
        acc -= term();
      } else {
        return acc;
      }
    }
  }

  Polynomial term() {
    Polynomial acc = factor();
    while (accept('*')) acc = acc * factor();
    return acc;
  }

  Polynomial factor() {
    if (accept('-')) return -factor();
    if (accept('+')) return factor();
    Polynomial base = primary();
    if (accept('^')) {
      skip_ws();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("expected a nonnegative integer exponent");
      const auto e = std::stoul(std::string(text_.substr(start, pos_ - start)));
      if (e > 64) fail("exponent too large");
      base = pow(base, static_cast<std::uint32_t>(e));
    }
    return base;
  }

  Polynomial primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  Polynomial number() {
    const std::string rest(text_.substr(pos_));
    char* end = nullptr;
    const double value = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    return Polynomial(value);
  }

  Polynomial identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name(text_.substr(start, pos_ - start));
    auto index_of = [&](std::size_t limit) -> std::size_t {
      if (name.size() < 2) return 0;
      for (std::size_t i = 1; i < name.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) return 0;
      }
      if (name[1] == '0') return 0;
      const auto k = std::stoul(name.substr(1));
      return k <= limit ? k : 0;
    };
    if (name == "t") return Polynomial::var(0);
    if (name[0] == 'x') {
      if (auto k = index_of(n_)) return Polynomial::var(static_cast<VarId>(k));
    } else if (name[0] == 'u') {
      if (auto k = index_of(m_)) return Polynomial::var(static_cast<VarId>(n_ + k));
    }
    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }

  std::string_view text_;
  std::size_t n_;
  std::size_t m_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomial parse_polynomial(std::string_view text, std::size_t n_states, std::size_t n_inputs) {
  return PolyParser(text, n_states, n_inputs).parse();
}

}  // namespace splitroa
