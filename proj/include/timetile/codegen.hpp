#pragma once

// Loop-nest generation by projection (one loop per domain iterator, bounds
// from the projection chain) and C emission with optional OpenMP/SIMD pragmas.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "timetile/error.hpp"
#include "timetile/legality.hpp"
#include "timetile/polyhedron.hpp"
#include "timetile/stencil.hpp"
#include "timetile/transform.hpp"

namespace timetile {

struct BoundExpr {
  enum class Kind { Affine, Floord, Ceild, Min, Max };

  Kind kind = Kind::Affine;
  AffineExpr expr;            // Affine, Floord, Ceild
  std::int64_t divisor = 1;   // Floord, Ceild
  std::vector<BoundExpr> args;  // Min, Max

  static BoundExpr affine(AffineExpr e) { return {Kind::Affine, std::move(e), 1, {}}; }
  static BoundExpr floor_div(AffineExpr e, std::int64_t d) {
    if (d <= 0) throw InvalidArgument("floord divisor must be positive");
    return d == 1 ? affine(std::move(e)) : BoundExpr{Kind::Floord, std::move(e), d, {}};
  }
  static BoundExpr ceil_div(AffineExpr e, std::int64_t d) {
    if (d <= 0) throw InvalidArgument("ceild divisor must be positive");
    return d == 1 ? affine(std::move(e)) : BoundExpr{Kind::Ceild, std::move(e), d, {}};
  }
  static BoundExpr min_of(std::vector<BoundExpr> a) { return combine(Kind::Min, std::move(a)); }
  static BoundExpr max_of(std::vector<BoundExpr> a) { return combine(Kind::Max, std::move(a)); }

  std::int64_t evaluate(const Bindings& env) const {
    switch (kind) {
      case Kind::Affine:
        return expr.evaluate(env);
      case Kind::Floord:
        return timetile::floord(expr.evaluate(env), divisor);
      case Kind::Ceild:
        return timetile::ceild(expr.evaluate(env), divisor);
      case Kind::Min:
      case Kind::Max: {
        std::int64_t v = args.front().evaluate(env);
        for (std::size_t i = 1; i < args.size(); ++i) {
          const std::int64_t w = args[i].evaluate(env);
          v = kind == Kind::Min ? std::min(v, w) : std::max(v, w);
        }
        return v;
      }
    }
    return 0;
  }

  friend bool operator==(const BoundExpr&, const BoundExpr&) = default;

 private:
  static BoundExpr combine(Kind k, std::vector<BoundExpr> a) {
    if (a.empty()) throw InvalidArgument("min/max of no bounds");
    if (a.size() == 1) return std::move(a.front());
    return {k, AffineExpr(), 1, std::move(a)};
  }
};

// min/max render as nested binary calls: min(min(a,b),c).
inline std::string to_c(const BoundExpr& b, const std::vector<std::string>& order) {
  switch (b.kind) {
    case BoundExpr::Kind::Affine:
      return to_string(b.expr, order);
    case BoundExpr::Kind::Floord:
      return "floord(" + to_string(b.expr, order) + "," + std::to_string(b.divisor) + ")";
    case BoundExpr::Kind::Ceild:
      return "ceild(" + to_string(b.expr, order) + "," + std::to_string(b.divisor) + ")";
    case BoundExpr::Kind::Min:
    case BoundExpr::Kind::Max: {
      const char* name = b.kind == BoundExpr::Kind::Min ? "min(" : "max(";
      std::string s = to_c(b.args.front(), order);
      for (std::size_t i = 1; i < b.args.size(); ++i) s = name + s + "," + to_c(b.args[i], order) + ")";
      return s;
    }
  }
  return {};
}

enum class LoopPragma { OmpFor, Ivdep, OmpSimd };
enum class LoopRole { Tile, Time, Point };

// A scalar declared at the top of a loop body, e.g. `int skew = 4*time;` or,
// with a modulus, a buffered time slot `int t1 = ((time-1)%8+8)%8;`.
struct HoistedValue {
  std::string name;
  AffineExpr value;
  std::optional<std::int64_t> modulus;
};

struct Loop {
  std::string iterator;
  BoundExpr lower;
  BoundExpr upper;
  LoopRole role = LoopRole::Point;
  std::vector<LoopPragma> pragmas;
  std::vector<HoistedValue> hoisted;

  bool has(LoopPragma p) const { return std::find(pragmas.begin(), pragmas.end(), p) != pragmas.end(); }
};

struct LoopBody {
  std::string statement = "S1";
  std::vector<AffineExpr> translation;  // original dims over loop iterators
  std::optional<StencilSpec> stencil;
};

// A perfect loop nest, outermost first, around a single statement.
struct LoopAst {
  std::vector<std::string> parameters;
  std::vector<Loop> loops;
  LoopBody body;
  std::vector<Constraint> assumptions;  // parameter-only conditions, not guarded at run time

  std::vector<std::string> loop_order() const {
    std::vector<std::string> v;
    for (const auto& l : loops) v.push_back(l.iterator);
    return v;
  }
  const Loop* find(std::string_view iterator) const {
    for (const auto& l : loops) {
      if (l.iterator == iterator) return &l;
    }
    return nullptr;
  }
};

namespace detail {

// Drops bounds implied by another bound for every parameter value; `lower`
// selects which side is tighter.
inline std::vector<DividedBound> prune_bounds(const std::vector<DividedBound>& in, bool lower) {
  std::vector<DividedBound> out;
  for (const auto& b : in) {
    if (std::find(out.begin(), out.end(), b) == out.end()) out.push_back(b);
  }
  std::vector<bool> drop(out.size(), false);
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < out.size() && !drop[i]; ++j) {
      if (i == j || drop[j]) continue;
      // sign of out[i]/di - out[j]/dj, when it is the same for all values
      const AffineExpr diff = out[i].expr * out[j].divisor - out[j].expr * out[i].divisor;
      if (!diff.is_constant()) continue;
      const std::int64_t c = diff.constant();
      if (lower ? c <= 0 : c >= 0) drop[i] = true;
    }
  }
  std::vector<DividedBound> kept;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!drop[i]) kept.push_back(out[i]);
  }
  return kept;
}

// True when running iterations of `loop` concurrently cannot reorder the
// endpoints of any dependence (all given in point coordinates).
inline bool loop_is_parallel(const std::vector<std::vector<std::int64_t>>& deps,
                             const std::vector<std::size_t>& enclosing, std::size_t loop) {
  for (const auto& d : deps) {
    const bool carried_outside = std::any_of(enclosing.begin(), enclosing.end(), [&](std::size_t k) { return d[k] != 0; });
    if (!carried_outside && d[loop] != 0) return false;
  }
  return true;
}

}  // namespace detail

inline LoopAst generate_loop_ast(const TransformedProgram& p) {
  LoopAst ast;
  ast.parameters = p.domain.parameters();
  ast.body.translation = p.body_translation;
  ast.body.stencil = p.stencil;
  const auto chain = projection_chain(p.domain);
  const auto& iters = p.domain.iterators();
  for (std::size_t k = 0; k < iters.size(); ++k) {
    const auto b = bounds_for(chain[k + 1], iters[k]);
    if (b.lowers.empty() || b.uppers.empty()) {
      throw UnboundedError(iters[k], "loop '" + iters[k] + "' has no " + (b.lowers.empty() ? "lower" : "upper") + " bound");
    }
    // Terms on outer iterators first, parameter-only terms last.
    auto outermost = [&](const DividedBound& db) {
      std::size_t best = iters.size();
      for (const auto& [name, c] : db.expr.terms()) {
        if (const auto i = p.domain.iterator_index(name)) best = std::min(best, *i);
      }
      return best;
    };
    auto ordered = [&](std::vector<DividedBound> v) {
      std::stable_sort(v.begin(), v.end(),
                       [&](const DividedBound& a, const DividedBound& c) { return outermost(a) < outermost(c); });
      return v;
    };
    std::vector<BoundExpr> lo, hi;
    for (const auto& l : ordered(detail::prune_bounds(b.lowers, true))) lo.push_back(BoundExpr::ceil_div(l.expr, l.divisor));
    for (const auto& u : ordered(detail::prune_bounds(b.uppers, false))) hi.push_back(BoundExpr::floor_div(u.expr, u.divisor));
    Loop loop;
    loop.iterator = iters[k];
    loop.lower = BoundExpr::max_of(std::move(lo));
    loop.upper = BoundExpr::min_of(std::move(hi));
    if (p.tile_iterators.count(iters[k])) {
      loop.role = LoopRole::Tile;
    } else if (p.time_dim && *p.time_dim == iters[k]) {
      loop.role = LoopRole::Time;
    }
    ast.loops.push_back(std::move(loop));
  }
  ast.assumptions = chain.front().constraints();
  for (const auto& c : p.context) {
    if (std::find(ast.assumptions.begin(), ast.assumptions.end(), c) == ast.assumptions.end()) ast.assumptions.push_back(c);
  }

  if (!p.stencil || !p.time_dim) return ast;
  const StencilSpec& spec = *p.stencil;
  auto time_loop = std::find_if(ast.loops.begin(), ast.loops.end(), [](const Loop& l) { return l.role == LoopRole::Time; });
  if (time_loop == ast.loops.end()) return ast;

  // Hoisted skew offsets and buffered time slots.
  std::set<std::int64_t> distinct;
  for (const auto& [dim, f] : p.skew_factors) {
    if (f > 0) distinct.insert(f);
  }
  const AffineExpr time_var = AffineExpr::variable(time_loop->iterator);
  if (distinct.size() == 1) {
    time_loop->hoisted.push_back({"skew", time_var * *distinct.begin(), std::nullopt});
  } else {
    for (const auto& dim : spec.dims) {
      auto it = p.skew_factors.find(dim);
      if (it != p.skew_factors.end() && it->second > 0) {
        time_loop->hoisted.push_back({"skew_" + dim, time_var * it->second, std::nullopt});
      }
    }
  }
  if (spec.time_buffer) {
    std::set<std::int64_t> offsets = {0};
    for (const auto& r : spec.reads) offsets.insert(-r[0]);
    for (const auto o : offsets) {
      time_loop->hoisted.push_back({"t" + std::to_string(o), p.body_translation.front() - o, *spec.time_buffer});
    }
  }

  // Dependences in point coordinates, indexed by loop position.
  std::vector<std::vector<std::int64_t>> deps;
  for (const auto& d : ordering_constraints(spec)) {
    const auto image = p.schedule.apply_linear(d.components());
    std::vector<std::int64_t> row(ast.loops.size(), 0);
    for (std::size_t r = 0; r < image.size(); ++r) {
      row[*p.domain.iterator_index(p.schedule.outputs()[r])] = image[r];
    }
    deps.push_back(std::move(row));
  }
  std::vector<std::size_t> enclosing;
  bool parallel_chosen = false;
  for (std::size_t k = 0; k < ast.loops.size(); ++k) {
    Loop& l = ast.loops[k];
    if (l.role == LoopRole::Tile) continue;
    if (l.role == LoopRole::Point) {
      if (!parallel_chosen && detail::loop_is_parallel(deps, enclosing, k)) {
        l.pragmas.push_back(LoopPragma::OmpFor);
        parallel_chosen = true;
      }
      const bool vector_dim = spec.vectorized && *spec.vectorized == l.iterator;
      if (vector_dim && detail::loop_is_parallel(deps, enclosing, k)) {
        l.pragmas.push_back(LoopPragma::Ivdep);
        l.pragmas.push_back(LoopPragma::OmpSimd);
      }
    }
    enclosing.push_back(k);
  }
  return ast;
}

// Visits every body instance; `visit` receives the loop iterator values.
inline void scan_loops(const LoopAst& ast, const Bindings& params, const std::function<void(const Point&)>& visit) {
  for (const auto& c : ast.assumptions) {
    if (!c.satisfied_by(params)) return;
  }
  Bindings env = params;
  Point x(ast.loops.size(), 0);
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == ast.loops.size()) {
      visit(x);
      return;
    }
    const Loop& l = ast.loops[k];
    const std::int64_t lo = l.lower.evaluate(env), hi = l.upper.evaluate(env);
    for (std::int64_t v = lo; v <= hi; ++v) {
      x[k] = v;
      env[l.iterator] = v;
      rec(k + 1);
    }
    env.erase(l.iterator);
  };
  rec(0);
}

inline std::vector<Point> interpret_loop_bounds(const LoopAst& ast, const Bindings& params) {
  std::vector<Point> out;
  scan_loops(ast, params, [&](const Point& p) { out.push_back(p); });
  return out;
}

struct EmitOptions {
  bool omp = false;
  bool simd = false;
  bool denormals = false;
  bool compilable_wrapper = false;
};

namespace detail {

inline std::string signed_constant(std::int64_t c) {
  if (c == 0) return {};
  return (c > 0 ? "+" : "") + std::to_string(c);
}

// Array subscript for original dimension k of an access with offset `off`.
inline std::string subscript(const LoopAst& ast, const GridLayout& grid, std::size_t k, std::int64_t off,
                             const std::vector<std::string>& order) {
  const StencilSpec& spec = *ast.body.stencil;
  if (k == 0 && grid.time_slots) return "t" + std::to_string(-off);
  const AffineExpr e = ast.body.translation[k] + off - grid.lower[k];
  const Loop* time_loop = nullptr;
  for (const auto& l : ast.loops) {
    if (l.role == LoopRole::Time) time_loop = &l;
  }
  if (k > 0 && time_loop) {
    for (const auto& h : time_loop->hoisted) {
      if (h.modulus || (h.name != "skew" && h.name != "skew_" + spec.dims[k])) continue;
      const AffineExpr unskewed = e + h.value;
      if (unskewed.involves(time_loop->iterator) || !e.involves(time_loop->iterator)) continue;
      const AffineExpr vars = unskewed - unskewed.constant();
      return (vars.is_constant() ? std::string() : to_string(vars, order)) + "-" + h.name +
             signed_constant(unskewed.constant());
    }
  }
  return to_string(e, order);
}

inline std::string access(const LoopAst& ast, const GridLayout& grid, const Offset& off,
                          const std::vector<std::string>& order) {
  std::string s = "u";
  for (std::size_t k = 0; k < off.size(); ++k) s += "[" + subscript(ast, grid, k, off[k], order) + "]";
  return s;
}

}  // namespace detail

inline std::string body_statement(const LoopAst& ast) {
  std::vector<std::string> order = ast.loop_order();
  order.insert(order.end(), ast.parameters.begin(), ast.parameters.end());
  if (!ast.body.stencil) {
    std::string s = ast.body.statement + "(";
    for (std::size_t k = 0; k < ast.body.translation.size(); ++k) {
      s += (k ? "," : "") + to_string(ast.body.translation[k], order);
    }
    return s + ");";
  }
  const StencilSpec& spec = *ast.body.stencil;
  const GridLayout grid = grid_layout(spec);
  std::string s = detail::access(ast, grid, spec.write_access(), order) + " = ";
  if (spec.reads.empty()) return s + "0.0F;";
  for (std::size_t i = 0; i < spec.reads.size(); ++i) {
    s += (i ? " + " : "") + ("w[" + std::to_string(i) + "]*") + detail::access(ast, grid, spec.reads[i], order);
  }
  return s + ";";
}

inline std::string emit_c(const LoopAst& ast, const EmitOptions& opts) {
  std::vector<std::string> order = ast.loop_order();
  order.insert(order.end(), ast.parameters.begin(), ast.parameters.end());
  std::ostringstream os;
  auto pad = [&](int depth) { return std::string(static_cast<std::size_t>(depth) * 2, ' '); };
  const bool has_region = opts.omp && std::any_of(ast.loops.begin(), ast.loops.end(),
                                                  [](const Loop& l) { return l.has(LoopPragma::OmpFor); });
  auto denormal_lines = [&](int depth) {
    os << pad(depth) << "_MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);\n";
    os << pad(depth) << "_MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);\n";
  };

  int base = 0;
  if (opts.compilable_wrapper) {
    os << "/* Generated by timetile. */\n";
    if (opts.denormals) os << "#include <xmmintrin.h>\n#include <pmmintrin.h>\n";
    os << "\n";
    os << "#define floord(n,d) (((n)<0) ? -((-(n)+(d)-1)/(d)) : (n)/(d))\n";
    os << "#define ceild(n,d) (((n)<0) ? -((-(n))/(d)) : ((n)+(d)-1)/(d))\n";
    os << "#define max(x,y) ((x) > (y) ? (x) : (y))\n";
    os << "#define min(x,y) ((x) < (y) ? (x) : (y))\n\n";
    if (!ast.body.stencil) os << "#define " << ast.body.statement << "(...) (++visits)\n\n";
  }
  if (!ast.assumptions.empty()) {
    os << "/* assumes:";
    for (std::size_t i = 0; i < ast.assumptions.size(); ++i) {
      os << (i ? ", " : " ") << to_string(ast.assumptions[i], order);
    }
    os << " */\n";
  }
  if (opts.compilable_wrapper) {
    std::string params;
    for (const auto& p : ast.parameters) params += (params.empty() ? "" : ", ") + ("int " + p);
    if (ast.body.stencil) {
      const StencilSpec& spec = *ast.body.stencil;
      const GridLayout grid = grid_layout(spec);
      std::string dims;
      for (std::size_t k = 0; k < spec.rank(); ++k) {
        if (k == 0 && grid.time_slots) {
          dims += "[" + std::to_string(*grid.time_slots) + "]";
        } else {
          dims += "[" + to_string(grid.upper[k] - grid.lower[k] + 1, spec.params) + "]";
        }
      }
      os << "void kernel(" << params << (params.empty() ? "" : ", ") << "float u" << dims << ", const float w["
         << std::max<std::size_t>(spec.reads.size(), 1) << "])\n{\n";
    } else {
      os << "long kernel(" << (params.empty() ? "void" : params) << ")\n{\n";
      os << pad(1) << "long visits = 0;\n";
    }
    base = 1;
  }
  if (opts.denormals && !has_region) denormal_lines(base);

  std::function<void(std::size_t, int)> emit = [&](std::size_t k, int depth) {
    if (k == ast.loops.size()) {
      os << pad(depth) << body_statement(ast) << "\n";
      return;
    }
    const Loop& l = ast.loops[k];
    const bool region = opts.omp && l.has(LoopPragma::OmpFor);
    if (region) {
      os << pad(depth) << "#pragma omp parallel\n" << pad(depth) << "{\n";
      ++depth;
      if (opts.denormals) denormal_lines(depth);
      os << pad(depth) << "#pragma omp for schedule(static)\n";
    }
    if (opts.simd && l.has(LoopPragma::Ivdep)) os << pad(depth) << "#pragma ivdep\n";
    if (opts.simd && l.has(LoopPragma::OmpSimd)) os << pad(depth) << "#pragma omp simd\n";
    os << pad(depth) << "for (int " << l.iterator << "=" << to_c(l.lower, order) << ";" << l.iterator
       << "<=" << to_c(l.upper, order) << ";" << l.iterator << "++) {\n";
    for (const auto& h : l.hoisted) {
      const std::string v = to_string(h.value, order);
      os << pad(depth + 1) << "int " << h.name << " = ";
      if (h.modulus) {
        os << "((" << v << ")%" << *h.modulus << "+" << *h.modulus << ")%" << *h.modulus << ";\n";
      } else {
        os << v << ";\n";
      }
    }
    emit(k + 1, depth + 1);
    os << pad(depth) << "}\n";
    if (region) os << pad(depth - 1) << "}\n";
  };
  emit(0, base);
  if (opts.compilable_wrapper) {
    if (!ast.body.stencil) os << pad(1) << "return visits;\n";
    os << "}\n";
  }
  return os.str();
}

}  // namespace timetile
