#pragma once

// Integer affine inequality systems over named iterators and parameters:
// Fourier-Motzkin projection with integer tightening, constraint splitting
// into loop bounds, and exact lexicographic enumeration of integer points.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "timetile/error.hpp"
#include "timetile/int_math.hpp"

namespace timetile {

using Bindings = std::map<std::string, std::int64_t, std::less<>>;
using Point = std::vector<std::int64_t>;

class AffineExpr {
 public:
  using Terms = std::map<std::string, std::int64_t, std::less<>>;

  AffineExpr() = default;
  explicit AffineExpr(std::int64_t constant) : constant_(constant) {}

  static AffineExpr variable(std::string_view name, std::int64_t coeff = 1) {
    AffineExpr e;
    e.add_term(name, coeff);
    return e;
  }

  const Terms& terms() const noexcept { return terms_; }
  std::int64_t constant() const noexcept { return constant_; }
  bool is_constant() const noexcept { return terms_.empty(); }

  std::int64_t coeff(std::string_view name) const {
    auto it = terms_.find(name);
    return it == terms_.end() ? 0 : it->second;
  }

  bool involves(std::string_view name) const { return terms_.find(name) != terms_.end(); }

  AffineExpr& add_term(std::string_view name, std::int64_t coeff) {
    if (coeff == 0) return *this;
    auto it = terms_.find(name);
    if (it == terms_.end()) {
      terms_.emplace(std::string(name), coeff);
    } else {
      it->second = checked_add(it->second, coeff);
      if (it->second == 0) terms_.erase(it);
    }
    return *this;
  }

  AffineExpr& operator+=(const AffineExpr& o) {
    for (const auto& [name, c] : o.terms_) add_term(name, c);
    constant_ = checked_add(constant_, o.constant_);
    return *this;
  }
  AffineExpr& operator-=(const AffineExpr& o) {
    for (const auto& [name, c] : o.terms_) add_term(name, checked_neg(c));
    constant_ = checked_sub(constant_, o.constant_);
    return *this;
  }
  AffineExpr& operator+=(std::int64_t c) {
    constant_ = checked_add(constant_, c);
    return *this;
  }
  AffineExpr& operator-=(std::int64_t c) {
    constant_ = checked_sub(constant_, c);
    return *this;
  }
  AffineExpr& operator*=(std::int64_t k) {
    if (k == 0) {
      terms_.clear();
      constant_ = 0;
      return *this;
    }
    for (auto& [name, c] : terms_) c = checked_mul(c, k);
    constant_ = checked_mul(constant_, k);
    return *this;
  }

  AffineExpr operator-() const {
    AffineExpr r = *this;
    r *= -1;
    return r;
  }

  friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
  friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
  friend AffineExpr operator+(AffineExpr a, std::int64_t c) { return a += c; }
  friend AffineExpr operator-(AffineExpr a, std::int64_t c) { return a -= c; }
  friend AffineExpr operator+(std::int64_t c, AffineExpr a) { return a += c; }
  friend AffineExpr operator-(std::int64_t c, const AffineExpr& a) { return AffineExpr(c) - a; }
  friend AffineExpr operator*(AffineExpr a, std::int64_t k) { return a *= k; }
  friend AffineExpr operator*(std::int64_t k, AffineExpr a) { return a *= k; }

  // Replaces `name` by `replacement` (no-op when `name` does not occur).
  AffineExpr substitute(std::string_view name, const AffineExpr& replacement) const {
    const std::int64_t c = coeff(name);
    if (c == 0) return *this;
    AffineExpr r = *this;
    r.terms_.erase(r.terms_.find(name));
    r += replacement * c;
    return r;
  }

  // Partial evaluation: every bound variable is folded into the constant.
  AffineExpr substitute(const Bindings& values) const {
    AffineExpr r(constant_);
    for (const auto& [name, c] : terms_) {
      auto it = values.find(name);
      if (it == values.end()) {
        r.add_term(name, c);
      } else {
        r.constant_ = checked_add(r.constant_, checked_mul(c, it->second));
      }
    }
    return r;
  }

  AffineExpr renamed(const std::map<std::string, std::string, std::less<>>& names) const {
    AffineExpr r(constant_);
    for (const auto& [name, c] : terms_) {
      auto it = names.find(name);
      r.add_term(it == names.end() ? name : it->second, c);
    }
    return r;
  }

  std::int64_t evaluate(const Bindings& values) const {
    std::int64_t v = constant_;
    for (const auto& [name, c] : terms_) {
      auto it = values.find(name);
      if (it == values.end()) throw InvalidArgument("unbound variable '" + name + "'");
      v = checked_add(v, checked_mul(c, it->second));
    }
    return v;
  }

  // gcd of the variable coefficients; 0 for a constant expression.
  std::int64_t content() const {
    std::int64_t g = 0;
    for (const auto& [name, c] : terms_) g = abs_gcd(g, c);
    return g;
  }

  friend bool operator==(const AffineExpr&, const AffineExpr&) = default;
  friend auto operator<=>(const AffineExpr&, const AffineExpr&) = default;

 private:
  Terms terms_;
  std::int64_t constant_ = 0;
};

// Renders `e` in C syntax ("4*time+4", "-x+3", "time_size-2"). Variables listed
// in `order` come first in that order, any others follow alphabetically.
inline std::string to_string(const AffineExpr& e, const std::vector<std::string>& order = {}) {
  std::ostringstream os;
  bool first = true;
  auto emit = [&](const std::string& name, std::int64_t c) {
    if (c < 0) {
      os << '-';
    } else if (!first) {
      os << '+';
    }
    const std::int64_t mag = c < 0 ? -c : c;
    if (mag != 1) os << mag << '*';
    os << name;
    first = false;
  };
  std::set<std::string, std::less<>> done;
  for (const auto& name : order) {
    if (const std::int64_t c = e.coeff(name); c != 0 && done.insert(name).second) emit(name, c);
  }
  for (const auto& [name, c] : e.terms()) {
    if (!done.count(name)) emit(name, c);
  }
  if (e.constant() != 0 || first) {
    if (e.constant() >= 0 && !first) os << '+';
    os << e.constant();
  }
  return os.str();
}

enum class ConstraintKind { Equality, NonNegative };

// `expr = 0` or `expr >= 0`, always stored in canonical form: coefficients are
// divided by their gcd (tightening the constant with floord for inequalities),
// equalities have a positive leading coefficient, and constraints without
// variables collapse to the literal true (0 >= 0) or false (-1 >= 0).
class Constraint {
 public:
  static Constraint nonneg(AffineExpr e) { return Constraint(ConstraintKind::NonNegative, std::move(e)); }
  static Constraint equality(AffineExpr e) { return Constraint(ConstraintKind::Equality, std::move(e)); }
  // lhs <= rhs
  static Constraint le(const AffineExpr& lhs, const AffineExpr& rhs) { return nonneg(rhs - lhs); }
  // lhs >= rhs
  static Constraint ge(const AffineExpr& lhs, const AffineExpr& rhs) { return nonneg(lhs - rhs); }
  static Constraint eq(const AffineExpr& lhs, const AffineExpr& rhs) { return equality(lhs - rhs); }

  ConstraintKind kind() const noexcept { return kind_; }
  const AffineExpr& expr() const noexcept { return expr_; }
  bool is_equality() const noexcept { return kind_ == ConstraintKind::Equality; }

  bool is_trivially_true() const noexcept { return expr_.is_constant() && expr_.constant() == 0; }
  bool is_trivially_false() const noexcept { return expr_.is_constant() && expr_.constant() != 0; }

  bool involves(std::string_view name) const { return expr_.involves(name); }

  bool satisfied_by(const Bindings& values) const {
    const std::int64_t v = expr_.evaluate(values);
    return is_equality() ? v == 0 : v >= 0;
  }

  Constraint substitute(std::string_view name, const AffineExpr& replacement) const {
    return Constraint(kind_, expr_.substitute(name, replacement));
  }
  Constraint substitute(const Bindings& values) const { return Constraint(kind_, expr_.substitute(values)); }
  Constraint renamed(const std::map<std::string, std::string, std::less<>>& names) const {
    return Constraint(kind_, expr_.renamed(names));
  }

  friend bool operator==(const Constraint&, const Constraint&) = default;
  friend auto operator<=>(const Constraint&, const Constraint&) = default;

 private:
  Constraint(ConstraintKind kind, AffineExpr e) : kind_(kind), expr_(std::move(e)) { canonicalize(); }

  void canonicalize() {
    if (expr_.is_constant()) {
      const bool holds = is_equality() ? expr_.constant() == 0 : expr_.constant() >= 0;
      kind_ = ConstraintKind::NonNegative;
      expr_ = AffineExpr(holds ? 0 : -1);
      return;
    }
    const std::int64_t g = expr_.content();
    if (is_equality()) {
      if (expr_.constant() % g != 0) {
        kind_ = ConstraintKind::NonNegative;
        expr_ = AffineExpr(-1);
        return;
      }
      AffineExpr r(expr_.constant() / g);
      for (const auto& [name, c] : expr_.terms()) r.add_term(name, c / g);
      if (r.terms().begin()->second < 0) r *= -1;
      expr_ = std::move(r);
    } else if (g > 1) {
      AffineExpr r(floord(expr_.constant(), g));
      for (const auto& [name, c] : expr_.terms()) r.add_term(name, c / g);
      expr_ = std::move(r);
    }
  }

  ConstraintKind kind_;
  AffineExpr expr_;
};

inline std::string to_string(const Constraint& c, const std::vector<std::string>& order = {}) {
  return to_string(c.expr(), order) + (c.is_equality() ? " = 0" : " >= 0");
}

// A convex integer set: the integer points over `iterators` (outermost first,
// which is also the lexicographic execution order) satisfying every constraint
// for given parameter values. Constraints are kept in insertion order with
// duplicates removed and, among inequalities with identical variable parts,
// only the tightest retained.
class Domain {
 public:
  Domain() = default;
  Domain(std::vector<std::string> iterators, std::vector<std::string> parameters,
         std::vector<Constraint> constraints = {})
      : iterators_(std::move(iterators)), parameters_(std::move(parameters)) {
    std::set<std::string, std::less<>> seen;
    for (const auto& n : iterators_) {
      if (n.empty() || !seen.insert(n).second) throw InvalidArgument("duplicate or empty variable name '" + n + "'");
    }
    for (const auto& n : parameters_) {
      if (n.empty() || !seen.insert(n).second) throw InvalidArgument("duplicate or empty variable name '" + n + "'");
    }
    for (const auto& c : constraints) {
      for (const auto& [name, coeff] : c.expr().terms()) {
        if (!seen.count(name)) throw InvalidArgument("constraint uses undeclared variable '" + name + "'");
      }
    }
    normalize(std::move(constraints));
  }

  const std::vector<std::string>& iterators() const noexcept { return iterators_; }
  const std::vector<std::string>& parameters() const noexcept { return parameters_; }
  const std::vector<Constraint>& constraints() const noexcept { return constraints_; }

  std::vector<std::string> variables() const {
    std::vector<std::string> v = iterators_;
    v.insert(v.end(), parameters_.begin(), parameters_.end());
    return v;
  }

  bool is_iterator(std::string_view name) const { return iterator_index(name).has_value(); }
  bool is_parameter(std::string_view name) const {
    return std::find(parameters_.begin(), parameters_.end(), name) != parameters_.end();
  }
  std::optional<std::size_t> iterator_index(std::string_view name) const {
    auto it = std::find(iterators_.begin(), iterators_.end(), name);
    if (it == iterators_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - iterators_.begin());
  }

  // True when normalization found a constraint that can never hold.
  bool is_known_empty() const {
    return std::any_of(constraints_.begin(), constraints_.end(), [](const Constraint& c) { return c.is_trivially_false(); });
  }

  bool contains(const Point& point, const Bindings& params) const {
    if (point.size() != iterators_.size()) throw InvalidArgument("point arity does not match domain");
    Bindings env = params;
    for (std::size_t i = 0; i < point.size(); ++i) env[iterators_[i]] = point[i];
    return std::all_of(constraints_.begin(), constraints_.end(), [&](const Constraint& c) { return c.satisfied_by(env); });
  }

  Domain with_constraints(const std::vector<Constraint>& extra) const {
    std::vector<Constraint> all = constraints_;
    all.insert(all.end(), extra.begin(), extra.end());
    return Domain(iterators_, parameters_, std::move(all));
  }

  // Same set, iterators reordered (changes the execution order only).
  Domain with_iterator_order(std::vector<std::string> order) const {
    std::vector<std::string> a = order, b = iterators_;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) throw InvalidArgument("iterator order must be a permutation of the domain iterators");
    return Domain(std::move(order), parameters_, constraints_);
  }

  // Equal iterator lists, parameter lists and constraint sets.
  friend bool operator==(const Domain& a, const Domain& b) {
    if (a.iterators_ != b.iterators_ || a.parameters_ != b.parameters_) return false;
    auto ca = a.constraints_, cb = b.constraints_;
    std::sort(ca.begin(), ca.end());
    std::sort(cb.begin(), cb.end());
    return ca == cb;
  }

 private:
  void normalize(std::vector<Constraint> input) {
    constraints_.clear();
    for (auto& c : input) {
      if (c.is_trivially_true()) continue;
      if (c.is_trivially_false()) {
        constraints_.assign(1, c);
        return;
      }
      bool absorbed = false;
      for (auto& kept : constraints_) {
        if (kept == c) {
          absorbed = true;
          break;
        }
        if (!kept.is_equality() && !c.is_equality() && kept.expr().terms() == c.expr().terms()) {
          if (c.expr().constant() < kept.expr().constant()) kept = c;
          absorbed = true;
          break;
        }
      }
      if (!absorbed) constraints_.push_back(std::move(c));
    }
  }

  std::vector<std::string> iterators_;
  std::vector<std::string> parameters_;
  std::vector<Constraint> constraints_;
};

inline std::string to_string(const Domain& d) {
  std::ostringstream os;
  const auto order = d.variables();
  os << "{ [";
  for (std::size_t i = 0; i < d.iterators().size(); ++i) os << (i ? ", " : "") << d.iterators()[i];
  os << "] : ";
  for (std::size_t i = 0; i < d.constraints().size(); ++i) {
    os << (i ? " and " : "") << to_string(d.constraints()[i], order);
  }
  if (d.constraints().empty()) os << "true";
  os << " }";
  return os.str();
}

// Fixes some parameters to integer values; the bound parameters disappear.
inline Domain substitute_parameters(const Domain& d, const Bindings& values) {
  std::vector<std::string> params;
  for (const auto& p : d.parameters()) {
    if (!values.count(p)) params.push_back(p);
  }
  std::vector<Constraint> cs;
  cs.reserve(d.constraints().size());
  for (const auto& c : d.constraints()) cs.push_back(c.substitute(values));
  return Domain(d.iterators(), std::move(params), std::move(cs));
}

// Fourier-Motzkin elimination of one iterator. Every integer point of `d` with
// `var` dropped satisfies the result; the result may also contain points with
// no integer preimage (the rational shadow, tightened by gcd rounding).
inline Domain project_eliminate(const Domain& d, std::string_view var) {
  if (!d.is_iterator(var)) throw InvalidArgument("cannot eliminate unknown iterator '" + std::string(var) + "'");
  std::vector<AffineExpr> lowers, uppers;  // a*var + rest >= 0 with a > 0 / a < 0
  std::vector<Constraint> rest;
  for (const auto& c : d.constraints()) {
    const std::int64_t a = c.expr().coeff(var);
    if (a == 0) {
      rest.push_back(c);
      continue;
    }
    auto place = [&](const AffineExpr& e) { (e.coeff(var) > 0 ? lowers : uppers).push_back(e); };
    place(c.expr());
    if (c.is_equality()) place(-c.expr());
  }
  for (const auto& lo : lowers) {
    const std::int64_t a = lo.coeff(var);
    for (const auto& up : uppers) {
      const std::int64_t b = checked_neg(up.coeff(var));
      rest.push_back(Constraint::nonneg(lo * b + up * a));
    }
  }
  std::vector<std::string> iters;
  for (const auto& it : d.iterators()) {
    if (it != var) iters.push_back(it);
  }
  return Domain(std::move(iters), d.parameters(), std::move(rest));
}

// var >= ceild(expr, divisor) for a lower bound, var <= floord(expr, divisor)
// for an upper bound; divisor is always positive.
struct DividedBound {
  AffineExpr expr;
  std::int64_t divisor = 1;

  friend bool operator==(const DividedBound&, const DividedBound&) = default;
};

struct VariableBounds {
  std::vector<DividedBound> lowers;
  std::vector<DividedBound> uppers;
};

inline VariableBounds bounds_for(const Domain& d, std::string_view var) {
  if (!d.is_iterator(var)) throw InvalidArgument("unknown iterator '" + std::string(var) + "'");
  VariableBounds out;
  auto split = [&](const AffineExpr& e) {
    const std::int64_t a = e.coeff(var);
    AffineExpr rest = e.substitute(var, AffineExpr(0));
    if (a > 0) {
      out.lowers.push_back({-rest, a});
    } else {
      out.uppers.push_back({rest, checked_neg(a)});
    }
  };
  for (const auto& c : d.constraints()) {
    if (!c.involves(var)) continue;
    split(c.expr());
    if (c.is_equality()) split(-c.expr());
  }
  return out;
}

// projections[k] is `d` restricted to its first k iterators; projections[n] == d.
inline std::vector<Domain> projection_chain(const Domain& d) {
  const std::size_t n = d.iterators().size();
  std::vector<Domain> chain(n + 1);
  chain[n] = d;
  for (std::size_t k = n; k-- > 0;) chain[k] = project_eliminate(chain[k + 1], d.iterators()[k]);
  return chain;
}

namespace detail {

struct DenseRow {
  std::vector<std::int64_t> coeffs;  // over the leading iterators
  std::int64_t constant = 0;
  std::int64_t divisor = 1;

  std::int64_t value(const Point& x) const {
    std::int64_t v = constant;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      if (coeffs[i] != 0) v = checked_add(v, checked_mul(coeffs[i], x[i]));
    }
    return v;
  }
};

inline DenseRow densify(const AffineExpr& e, const std::vector<std::string>& iters, std::size_t width,
                        std::int64_t divisor) {
  DenseRow row;
  row.coeffs.assign(width, 0);
  row.constant = e.constant();
  row.divisor = divisor;
  for (const auto& [name, c] : e.terms()) {
    auto it = std::find(iters.begin(), iters.begin() + static_cast<std::ptrdiff_t>(width), name);
    if (it == iters.begin() + static_cast<std::ptrdiff_t>(width)) {
      throw InvalidArgument("bound refers to unbound variable '" + name + "'");
    }
    row.coeffs[static_cast<std::size_t>(it - iters.begin())] = c;
  }
  return row;
}

}  // namespace detail

// All integer points of `d` for the given parameter values, in lexicographic
// order of the iterator list. Loop bounds come from the projection chain;
// every candidate is re-checked against the original constraints.
inline std::vector<Point> enumerate_points(const Domain& d, const Bindings& params) {
  for (const auto& p : d.parameters()) {
    if (!params.count(p)) throw InvalidArgument("parameter '" + p + "' is not bound");
  }
  const Domain bound = substitute_parameters(d, params);
  const auto& iters = bound.iterators();
  const std::size_t n = iters.size();
  std::vector<Point> out;
  if (bound.is_known_empty()) return out;

  const auto chain = projection_chain(bound);
  if (std::any_of(chain.begin(), chain.end(), [](const Domain& p) { return p.is_known_empty(); })) return out;

  std::vector<std::vector<detail::DenseRow>> lowers(n), uppers(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto b = bounds_for(chain[k + 1], iters[k]);
    if (b.lowers.empty() || b.uppers.empty()) {
      throw UnboundedError(iters[k], "iterator '" + iters[k] + "' is unbounded " +
                                         (b.lowers.empty() ? "below" : "above") + " under the given parameters");
    }
    for (const auto& lo : b.lowers) lowers[k].push_back(detail::densify(lo.expr, iters, k, lo.divisor));
    for (const auto& up : b.uppers) uppers[k].push_back(detail::densify(up.expr, iters, k, up.divisor));
  }
  std::vector<detail::DenseRow> members;
  std::vector<bool> member_is_eq;
  for (const auto& c : bound.constraints()) {
    members.push_back(detail::densify(c.expr(), iters, n, 1));
    member_is_eq.push_back(c.is_equality());
  }
  auto is_member = [&](const Point& x) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      const std::int64_t v = members[i].value(x);
      if (member_is_eq[i] ? v != 0 : v < 0) return false;
    }
    return true;
  };

  Point x(n, 0);
  std::function<void(std::size_t)> scan = [&](std::size_t k) {
    if (k == n) {
      if (is_member(x)) out.push_back(x);
      return;
    }
    std::int64_t lo = INT64_MIN, hi = INT64_MAX;
    for (const auto& r : lowers[k]) lo = std::max(lo, ceild(r.value(x), r.divisor));
    for (const auto& r : uppers[k]) hi = std::min(hi, floord(r.value(x), r.divisor));
    for (std::int64_t v = lo; v <= hi; ++v) {
      x[k] = v;
      scan(k + 1);
    }
  };
  scan(0);
  return out;
}

}  // namespace timetile
