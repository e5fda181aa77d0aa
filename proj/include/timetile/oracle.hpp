#pragma once

// Brute-force ground truth: execution orders by enumeration, dependence
// checks on concrete instances, a checked stencil interpreter, grid files and
// LRU stack-distance statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <iterator>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "timetile/codegen.hpp"
#include "timetile/error.hpp"
#include "timetile/legality.hpp"
#include "timetile/polyhedron.hpp"
#include "timetile/schedule.hpp"
#include "timetile/stencil.hpp"
#include "timetile/transform.hpp"

namespace timetile {

// Original-space iteration points in the order they execute.
struct ExecutionOrder {
  std::vector<Point> points;
};

struct PointHash {
  std::size_t operator()(const Point& p) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto v : p) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

// Points of `d` sorted (stably) by their timestamps under `s`.
inline ExecutionOrder execution_order(const Domain& d, const Schedule& s, const Bindings& params) {
  if (d.iterators() != s.inputs()) throw InvalidArgument("schedule inputs must match the domain iterators");
  auto pts = enumerate_points(d, params);
  std::vector<std::pair<Point, std::size_t>> keyed;
  keyed.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) keyed.emplace_back(s.apply(pts[i]), i);
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  ExecutionOrder out;
  out.points.reserve(pts.size());
  for (const auto& [ts, i] : keyed) out.points.push_back(pts[i]);
  return out;
}

namespace detail {

inline std::vector<DenseRow> translation_rows(const std::vector<AffineExpr>& translation,
                                              const std::vector<std::string>& loop_vars, const Bindings& params) {
  std::vector<DenseRow> rows;
  for (const auto& e : translation) rows.push_back(densify(e.substitute(params), loop_vars, loop_vars.size(), 1));
  return rows;
}

inline Point translate(const std::vector<DenseRow>& rows, const Point& loop_point) {
  Point out(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) out[k] = rows[k].value(loop_point);
  return out;
}

}  // namespace detail

// Lexicographic scan of the transformed domain, mapped back through the body
// translation.
inline ExecutionOrder execution_order(const TransformedProgram& p, const Bindings& params) {
  const auto rows = detail::translation_rows(p.body_translation, p.domain.iterators(), params);
  ExecutionOrder out;
  for (const auto& pt : enumerate_points(p.domain, params)) out.points.push_back(detail::translate(rows, pt));
  return out;
}

// The order in which the generated loop nest runs its body.
inline ExecutionOrder execution_order(const LoopAst& ast, const Bindings& params) {
  const auto rows = detail::translation_rows(ast.body.translation, ast.loop_order(), params);
  ExecutionOrder out;
  scan_loops(ast, params, [&](const Point& pt) { out.points.push_back(detail::translate(rows, pt)); });
  return out;
}

struct Violation {
  enum class Kind { Flow, BufferOverwrite };
  Kind kind = Kind::Flow;
  DependenceVector dependence;
  Point source;  // must run first
  Point sink;
};

struct VerificationReport {
  bool is_permutation = false;
  std::vector<Point> missing;
  std::vector<Point> extra;
  std::vector<Violation> violations;  // the first `max_recorded` found
  std::size_t violation_count = 0;
  std::optional<bool> numeric_equal;
  std::string numeric_note;

  bool legal() const { return is_permutation && violation_count == 0; }
};

struct VerifyOptions {
  bool numeric = true;
  std::size_t max_recorded = 64;
  std::uint64_t seed = 1;
};

// Compares `order` with the domain point set and checks every dependence
// instance (plus buffer overwrites when `time_buffer` is set).
inline VerificationReport verify_order(const Domain& original, const std::vector<DependenceVector>& deps,
                                       std::optional<std::int64_t> time_buffer, const ExecutionOrder& order,
                                       const Bindings& params, std::size_t max_recorded = 64) {
  VerificationReport rep;
  auto expected = enumerate_points(original, params);
  auto got = order.points;
  std::sort(got.begin(), got.end());
  std::set_difference(expected.begin(), expected.end(), got.begin(), got.end(), std::back_inserter(rep.missing));
  std::set_difference(got.begin(), got.end(), expected.begin(), expected.end(), std::back_inserter(rep.extra));
  rep.is_permutation = rep.missing.empty() && rep.extra.empty();

  std::unordered_map<Point, std::size_t, PointHash> pos;
  pos.reserve(order.points.size() * 2);
  for (std::size_t i = 0; i < order.points.size(); ++i) pos.emplace(order.points[i], i);
  auto record = [&](Violation v) {
    ++rep.violation_count;
    if (rep.violations.size() < max_recorded) rep.violations.push_back(std::move(v));
  };
  Point other;
  for (std::size_t i = 0; i < order.points.size(); ++i) {
    const Point& q = order.points[i];
    if (pos.at(q) != i) continue;  // duplicate visit, already reported as extra
    if (time_buffer) {
      other = q;
      other[0] = checked_sub(q[0], *time_buffer);
      auto w = pos.find(other);
      if (w != pos.end() && w->second > i) {
        std::vector<std::int64_t> out_dep(q.size(), 0);
        out_dep[0] = *time_buffer;
        record({Violation::Kind::BufferOverwrite, DependenceVector(std::move(out_dep)), other, q});
      }
    }
    for (const auto& d : deps) {
      other = q;
      for (std::size_t k = 0; k < q.size(); ++k) other[k] = checked_sub(q[k], d[k]);
      auto it = pos.find(other);
      if (it != pos.end() && it->second >= i) record({Violation::Kind::Flow, d, other, q});
      if (time_buffer) {
        // q overwrites the slot holding time q0 - B; its writer and readers must come first.
        for (std::size_t k = 0; k < q.size(); ++k) other[k] = checked_add(q[k] - (k == 0 ? *time_buffer : 0), d[k]);
        auto r = pos.find(other);
        if (r != pos.end() && r->second > i) {
          std::vector<std::int64_t> anti(q.size());
          for (std::size_t k = 0; k < q.size(); ++k) anti[k] = q[k] - other[k];
          record({Violation::Kind::BufferOverwrite, DependenceVector(std::move(anti)), other, q});
        }
      }
    }
  }
  return rep;
}

// Dense array over the grid of a stencil instance: the interior bounds plus
// halo, with either the full time history or `time_buffer` slots.
class Grid {
 public:
  Grid() = default;
  Grid(std::vector<std::int64_t> lower, std::vector<std::int64_t> extent)
      : lower_(std::move(lower)), extent_(std::move(extent)) {
    if (lower_.size() != extent_.size()) throw InvalidArgument("grid lower/extent rank mismatch");
    std::size_t n = 1;
    for (const auto e : extent_) {
      if (e <= 0) throw InvalidArgument("grid extents must be positive");
      n *= static_cast<std::size_t>(e);
    }
    values_.assign(n, 0.0F);
  }

  std::size_t rank() const noexcept { return extent_.size(); }
  const std::vector<std::int64_t>& lower() const noexcept { return lower_; }
  const std::vector<std::int64_t>& extent() const noexcept { return extent_; }
  std::vector<float>& values() noexcept { return values_; }
  const std::vector<float>& values() const noexcept { return values_; }

  bool in_bounds(const Point& p) const {
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (p[k] < lower_[k] || p[k] >= lower_[k] + extent_[k]) return false;
    }
    return p.size() == rank();
  }

  std::size_t index(const Point& p) const {
    if (!in_bounds(p)) throw InvalidArgument("grid access " + to_string(p) + " out of bounds");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < p.size(); ++k) idx = idx * static_cast<std::size_t>(extent_[k]) + static_cast<std::size_t>(p[k] - lower_[k]);
    return idx;
  }

  float& at(const Point& p) { return values_[index(p)]; }
  float at(const Point& p) const { return values_[index(p)]; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.lower_ == b.lower_ && a.extent_ == b.extent_ &&
           std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(float)) == 0;
  }

 private:
  std::vector<std::int64_t> lower_;
  std::vector<std::int64_t> extent_;
  std::vector<float> values_;
};

// Concrete grid geometry for one instance. Buffered grids index time 0..B-1.
struct InstanceLayout {
  std::vector<std::int64_t> interior_lower, interior_upper;
  std::vector<std::int64_t> grid_lower, grid_upper;
  std::optional<std::int64_t> slots;

  Point cell(const Point& logical) const {
    Point c = logical;
    if (slots) c[0] = floor_mod(c[0], *slots);
    return c;
  }
};

inline InstanceLayout instance_layout(const StencilSpec& spec, const Bindings& params) {
  const GridLayout g = grid_layout(spec);
  InstanceLayout l;
  for (std::size_t k = 0; k < spec.rank(); ++k) {
    l.interior_lower.push_back(spec.bounds[k].lower.evaluate(params));
    l.interior_upper.push_back(spec.bounds[k].upper.evaluate(params));
    l.grid_lower.push_back(g.lower[k].evaluate(params));
    l.grid_upper.push_back(g.upper[k].evaluate(params));
  }
  l.slots = g.time_slots;
  if (l.slots) {
    l.grid_lower[0] = 0;
    l.grid_upper[0] = *l.slots - 1;
  }
  return l;
}

inline Grid make_grid(const StencilSpec& spec, const Bindings& params) {
  const auto l = instance_layout(spec, params);
  std::vector<std::int64_t> extent;
  for (std::size_t k = 0; k < l.grid_lower.size(); ++k) extent.push_back(l.grid_upper[k] - l.grid_lower[k] + 1);
  return Grid(l.grid_lower, extent);
}

// Deterministic pseudo-random initial data in [-1, 1).
inline Grid seeded_grid(const StencilSpec& spec, const Bindings& params, std::uint64_t seed) {
  Grid g = make_grid(spec, params);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0F, 1.0F);
  for (auto& v : g.values()) v = dist(rng);
  return g;
}

// w_k = (k+1) / (n(n+1)/2 + 1): distinct, positive, summing to below one.
inline std::vector<float> default_weights(std::size_t n) {
  std::vector<float> w(n);
  const double denom = static_cast<double>(n * (n + 1) / 2 + 1);
  for (std::size_t k = 0; k < n; ++k) w[k] = static_cast<float>(static_cast<double>(k + 1) / denom);
  return w;
}

// Runs u[p] = sum_k w_k * u[p + r_k] at every point of `order`. Reading an
// interior cell that does not hold the required time step (not yet computed,
// or already overwritten in a buffered grid) raises UninitializedReadError.
inline Grid interpret(const StencilSpec& spec, const Bindings& params, const ExecutionOrder& order, const Grid& initial,
                      std::vector<float> weights = {}) {
  if (weights.empty()) weights = default_weights(spec.reads.size());
  if (weights.size() != spec.reads.size()) throw InvalidArgument("one weight per read access is required");
  const auto l = instance_layout(spec, params);
  Grid g = initial;
  const Grid shape = make_grid(spec, params);
  if (g.lower() != shape.lower() || g.extent() != shape.extent()) throw InvalidArgument("initial grid has the wrong shape");

  const std::int64_t no_value = INT64_MIN;
  std::vector<std::int64_t> tag(g.values().size(), no_value);
  auto interior = [&](const Point& p) {
    for (std::size_t k = 1; k < p.size(); ++k) {
      if (p[k] < l.interior_lower[k] || p[k] > l.interior_upper[k]) return false;
    }
    return true;
  };
  // Prior time steps come from the initial grid.
  {
    const std::int64_t t0 = l.interior_lower[0];
    std::int64_t first = l.grid_lower[0];
    if (l.slots) first = t0 - *l.slots;
    Point p(spec.rank());
    std::function<void(std::size_t)> fill = [&](std::size_t k) {
      if (k == p.size()) {
        if (interior(p)) tag[g.index(l.cell(p))] = p[0];
        return;
      }
      const std::int64_t lo = k == 0 ? first : l.grid_lower[k];
      const std::int64_t hi = k == 0 ? t0 - 1 : l.grid_upper[k];
      for (p[k] = lo; p[k] <= hi; ++p[k]) fill(k + 1);
    };
    fill(0);
  }

  Point src(spec.rank());
  for (const auto& q : order.points) {
    float acc = 0.0F;
    for (std::size_t i = 0; i < spec.reads.size(); ++i) {
      for (std::size_t k = 0; k < src.size(); ++k) src[k] = q[k] + spec.reads[i][k];
      const std::size_t idx = g.index(l.cell(src));
      if (interior(src) && tag[idx] != src[0]) {
        throw UninitializedReadError("point " + to_string(q) + " reads " + to_string(src) +
                                     " before it holds that time step");
      }
      const float term = weights[i] * g.values()[idx];
      acc = i == 0 ? term : acc + term;
    }
    const std::size_t w = g.index(l.cell(q));
    g.values()[w] = acc;
    tag[w] = q[0];
  }
  return g;
}

inline bool grids_close(const Grid& a, const Grid& b, double atol) {
  if (a.lower() != b.lower() || a.extent() != b.extent()) return false;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    if (!(std::fabs(static_cast<double>(a.values()[i]) - static_cast<double>(b.values()[i])) <= atol)) return false;
  }
  return true;
}

// Full check of a transformed stencil program on one bounded instance.
inline VerificationReport verify(const StencilSpec& spec, const TransformedProgram& p, const Bindings& params,
                                 const VerifyOptions& opts = {}) {
  const ExecutionOrder order = execution_order(p, params);
  VerificationReport rep =
      verify_order(stencil_domain(spec), extract_dependences(spec), spec.time_buffer, order, params, opts.max_recorded);
  if (opts.numeric && rep.is_permutation) {
    const Grid init = seeded_grid(spec, params, opts.seed);
    const auto reference_order = execution_order(identity_program(spec), params);
    const Grid expected = interpret(spec, params, reference_order, init);
    try {
      rep.numeric_equal = interpret(spec, params, order, init) == expected;
      if (!*rep.numeric_equal) rep.numeric_note = "final grid differs from the original loop order";
    } catch (const UninitializedReadError& e) {
      rep.numeric_equal = false;
      rep.numeric_note = e.what();
    }
  }
  return rep;
}

// Binary grid file: "TTGR", u32 version (1), u32 dtype (1 = float32),
// u32 rank, per dim i64 lower and i64 extent, then little-endian float32
// values in row-major order.
namespace detail {

template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  std::uint64_t u = 0;
  std::memcpy(&u, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw ParseError(0, "truncated grid file");
  std::uint64_t u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  T v;
  std::memcpy(&v, &u, sizeof(T));
  return v;
}

}  // namespace detail

inline void write_grid(std::ostream& os, const Grid& g) {
  os.write("TTGR", 4);
  detail::put_le<std::uint32_t>(os, 1);
  detail::put_le<std::uint32_t>(os, 1);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.rank()));
  for (std::size_t k = 0; k < g.rank(); ++k) {
    detail::put_le<std::int64_t>(os, g.lower()[k]);
    detail::put_le<std::int64_t>(os, g.extent()[k]);
  }
  for (const float v : g.values()) detail::put_le<float>(os, v);
}

inline Grid read_grid(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "TTGR", 4) != 0) throw ParseError(0, "not a grid file");
  if (detail::get_le<std::uint32_t>(is) != 1) throw ParseError(0, "unsupported grid file version");
  if (detail::get_le<std::uint32_t>(is) != 1) throw ParseError(0, "unsupported grid element type");
  const auto rank = detail::get_le<std::uint32_t>(is);
  if (rank > 16) throw ParseError(0, "grid rank too large");
  std::vector<std::int64_t> lower, extent;
  for (std::uint32_t k = 0; k < rank; ++k) {
    lower.push_back(detail::get_le<std::int64_t>(is));
    extent.push_back(detail::get_le<std::int64_t>(is));
  }
  Grid g(lower, extent);
  for (auto& v : g.values()) v = detail::get_le<float>(is);
  return g;
}

struct ReuseStats {
  std::map<std::uint64_t, std::uint64_t> histogram;  // stack distance -> count
  std::uint64_t cold = 0;                            // first touches
  std::uint64_t accesses = 0;
  std::optional<double> mean;                        // over finite distances
};

// Address trace of `order`: each point reads its offsets in order, then writes.
inline std::vector<std::size_t> address_trace(const StencilSpec& spec, const Bindings& params, const ExecutionOrder& order) {
  const auto l = instance_layout(spec, params);
  const Grid shape = make_grid(spec, params);
  std::vector<std::size_t> trace;
  trace.reserve(order.points.size() * (spec.reads.size() + 1));
  Point a(spec.rank());
  for (const auto& q : order.points) {
    for (const auto& r : spec.reads) {
      for (std::size_t k = 0; k < a.size(); ++k) a[k] = q[k] + r[k];
      trace.push_back(shape.index(l.cell(a)));
    }
    trace.push_back(shape.index(l.cell(q)));
  }
  return trace;
}

// LRU stack distance (distinct addresses touched since the previous access
// to the same address), computed with a Fenwick tree over access times.
inline ReuseStats reuse_distance(const std::vector<std::size_t>& trace) {
  ReuseStats s;
  const std::size_t n = trace.size();
  std::vector<std::int64_t> tree(n + 1, 0);
  auto add = [&](std::size_t i, std::int64_t v) {
    for (++i; i <= n; i += i & (~i + 1)) tree[i] += v;
  };
  auto prefix = [&](std::size_t i) {  // sum of [0, i)
    std::int64_t r = 0;
    for (; i > 0; i -= i & (~i + 1)) r += tree[i];
    return r;
  };
  std::unordered_map<std::size_t, std::size_t> last;
  long double sum = 0;
  std::uint64_t finite = 0;
  for (std::size_t t = 0; t < n; ++t) {
    auto it = last.find(trace[t]);
    if (it == last.end()) {
      ++s.cold;
      last.emplace(trace[t], t);
    } else {
      const auto d = static_cast<std::uint64_t>(prefix(t) - prefix(it->second + 1));
      ++s.histogram[d];
      sum += static_cast<long double>(d);
      ++finite;
      add(it->second, -1);
      it->second = t;
    }
    add(t, 1);
  }
  s.accesses = n;
  if (finite) s.mean = static_cast<double>(sum / static_cast<long double>(finite));
  return s;
}

inline ReuseStats reuse_distance(const StencilSpec& spec, const Bindings& params, const ExecutionOrder& order) {
  return reuse_distance(address_trace(spec, params, order));
}

}  // namespace timetile
