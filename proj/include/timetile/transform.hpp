#pragma once

// Domain/schedule rewrites (skew, strip-mine, interchange, tile) and the
// time-tiling pipeline for stencils.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "timetile/error.hpp"
#include "timetile/legality.hpp"
#include "timetile/polyhedron.hpp"
#include "timetile/schedule.hpp"
#include "timetile/stencil.hpp"

namespace timetile {

using SizeMap = std::map<std::string, std::int64_t, std::less<>>;

struct TileConfig {
  SizeMap spatial_tile_sizes;
  std::optional<std::int64_t> time_tile_size;
  std::optional<SizeMap> skew_factors;  // per-dim overrides of the minimal factors
};

// A program ready for code generation. `domain` lists loops outermost first in
// skewed coordinates and includes tile iterators; `schedule` maps original
// iteration vectors to the point coordinates; `body_translation[k]` recovers
// original dimension k from the point coordinates.
struct TransformedProgram {
  Domain original;
  Domain domain;
  Schedule schedule;
  std::vector<std::string> declaration_order;
  SizeMap skew_factors;
  std::vector<AffineExpr> body_translation;
  std::map<std::string, std::string, std::less<>> tile_iterators;  // tile iterator -> dimension it tiles
  std::optional<std::string> time_dim;
  std::optional<StencilSpec> stencil;
  std::vector<Constraint> context;  // parameter-only preconditions
};

// Rewrites `inner` as inner + factor*outer in the schedule and in every
// domain constraint (so bounds lb <= x <= ub become lb+f*t <= x <= ub+f*t).
inline std::pair<Domain, Schedule> skew(const Domain& d, const Schedule& s, std::string_view inner,
                                        std::string_view outer, std::int64_t factor) {
  if (factor < 0) throw InvalidArgument("skew factor must be nonnegative");
  const auto oi = d.iterator_index(outer), ii = d.iterator_index(inner);
  if (!oi || !ii) throw InvalidArgument("skew dimensions must be iterators of the domain");
  if (*oi >= *ii) throw InvalidArgument("'" + std::string(inner) + "' is not nested inside '" + std::string(outer) + "'");
  const auto& outs = s.outputs();
  const auto ri = std::find(outs.begin(), outs.end(), inner), ro = std::find(outs.begin(), outs.end(), outer);
  if (ri == outs.end() || ro == outs.end()) throw InvalidArgument("skew dimensions must be schedule outputs");
  if (factor == 0) return {d, s};

  const AffineExpr replacement = AffineExpr::variable(inner) - AffineExpr::variable(outer, factor);
  std::vector<Constraint> cs;
  for (const auto& c : d.constraints()) cs.push_back(c.substitute(inner, replacement));

  IntMatrix lin = s.linear();
  auto shifts = s.shifts();
  const auto r_in = static_cast<std::size_t>(ri - outs.begin()), r_out = static_cast<std::size_t>(ro - outs.begin());
  for (std::size_t c = 0; c < lin[r_in].size(); ++c) {
    lin[r_in][c] = checked_add(lin[r_in][c], checked_mul(factor, lin[r_out][c]));
  }
  shifts[r_in] = checked_add(shifts[r_in], checked_mul(factor, shifts[r_out]));
  return {Domain(d.iterators(), d.parameters(), std::move(cs)), Schedule(s.inputs(), outs, std::move(lin), std::move(shifts))};
}

// "x" -> "xx", "time" -> "tt"; falls back to "x_t", "x_t2", ... on collision.
inline std::string tile_iterator_name(const Domain& d, std::string_view dim) {
  const auto vars = d.variables();
  auto taken = [&](const std::string& n) { return std::find(vars.begin(), vars.end(), n) != vars.end(); };
  std::string name(2, dim.front());
  if (!taken(name)) return name;
  name = std::string(dim) + "_t";
  for (int k = 2; taken(name); ++k) name = std::string(dim) + "_t" + std::to_string(k);
  return name;
}

// Adds a tile iterator immediately outside `dim` with
// size*tile <= dim <= size*tile + size - 1.
inline Domain strip_mine(const Domain& d, std::string_view dim, std::int64_t size) {
  if (size < 1) throw InvalidArgument("strip-mine size must be at least 1");
  const auto pos = d.iterator_index(dim);
  if (!pos) throw InvalidArgument("unknown iterator '" + std::string(dim) + "'");
  const std::string tile = tile_iterator_name(d, dim);
  auto iters = d.iterators();
  iters.insert(iters.begin() + static_cast<std::ptrdiff_t>(*pos), tile);
  auto cs = d.constraints();
  const auto v = AffineExpr::variable(dim), t = AffineExpr::variable(tile, size);
  cs.push_back(Constraint::ge(v, t));
  cs.push_back(Constraint::le(v, t + (size - 1)));
  return Domain(std::move(iters), d.parameters(), std::move(cs));
}

// Swaps output rows a and b (and their names).
inline Schedule interchange(const Schedule& s, std::size_t a, std::size_t b) {
  const std::size_t n = s.outputs().size();
  if (a >= n || b >= n) throw InvalidArgument("interchange dimension out of range");
  if (a == b) throw InvalidArgument("interchange needs two distinct dimensions");
  auto outs = s.outputs();
  auto lin = s.linear();
  auto shifts = s.shifts();
  std::swap(outs[a], outs[b]);
  std::swap(lin[a], lin[b]);
  std::swap(shifts[a], shifts[b]);
  return Schedule(s.inputs(), std::move(outs), std::move(lin), std::move(shifts));
}

// Original iteration dims as affine functions of the schedule outputs.
inline std::vector<AffineExpr> body_translation(const Schedule& s) {
  if (s.outputs().size() != s.inputs().size()) throw InvalidArgument("schedule is not square");
  const IntMatrix inv = unimodular_inverse(s.linear());
  std::vector<AffineExpr> out;
  for (std::size_t k = 0; k < inv.size(); ++k) {
    AffineExpr e;
    for (std::size_t j = 0; j < inv[k].size(); ++j) {
      e += (AffineExpr::variable(s.outputs()[j]) - s.shifts()[j]) * inv[k][j];
    }
    out.push_back(std::move(e));
  }
  return out;
}

// The image of `d` under `s`: schedule inputs are replaced, in place, by the
// outputs in row order; other iterators (tile loops) are kept.
inline Domain apply_schedule(const Domain& d, const Schedule& s) {
  for (const auto& in : s.inputs()) {
    if (!d.is_iterator(in)) throw InvalidArgument("schedule input '" + in + "' is not an iterator of the domain");
  }
  std::map<std::string, std::string, std::less<>> to_final;
  std::vector<std::string> temp_names;
  for (std::size_t j = 0; j < s.outputs().size(); ++j) {
    temp_names.push_back("\x01" + std::to_string(j));
    to_final[temp_names.back()] = s.outputs()[j];
  }
  const Schedule temp(s.inputs(), temp_names, s.linear(), s.shifts());
  const auto translation = body_translation(temp);
  std::vector<Constraint> cs;
  for (auto c : d.constraints()) {
    for (std::size_t k = 0; k < s.inputs().size(); ++k) c = c.substitute(s.inputs()[k], translation[k]);
    cs.push_back(c.renamed(to_final));
  }
  std::vector<std::string> iters;
  std::size_t next = 0;
  for (const auto& it : d.iterators()) {
    const bool scheduled = std::find(s.inputs().begin(), s.inputs().end(), it) != s.inputs().end();
    iters.push_back(scheduled ? s.outputs()[next++] : it);
  }
  return Domain(std::move(iters), d.parameters(), std::move(cs));
}

struct Tiling {
  Domain domain;                                // tile iterators first, then point iterators
  Schedule schedule;                            // unchanged by tiling
  std::vector<std::string> declaration_order;   // order after strip-mining, before the interchange
  std::map<std::string, std::string, std::less<>> tile_iterators;
};

// Strip-mines each listed dimension, then moves all tile iterators outward as
// one band, keeping relative order on both sides.
inline Tiling tile(const Domain& d, const Schedule& s, const SizeMap& sizes) {
  Domain cur = d;
  Tiling out;
  for (const auto& [dim, size] : sizes) {
    if (!d.is_iterator(dim)) throw InvalidArgument("cannot tile unknown iterator '" + dim + "'");
  }
  for (const auto& it : d.iterators()) {
    auto sz = sizes.find(it);
    if (sz == sizes.end()) continue;
    out.tile_iterators[tile_iterator_name(cur, it)] = it;
    cur = strip_mine(cur, it, sz->second);
  }
  out.declaration_order = cur.iterators();
  std::vector<std::string> order;
  for (const auto& it : cur.iterators()) {
    if (out.tile_iterators.count(it)) order.push_back(it);
  }
  for (const auto& it : cur.iterators()) {
    if (!out.tile_iterators.count(it)) order.push_back(it);
  }
  out.domain = cur.with_iterator_order(std::move(order));
  out.schedule = s;
  return out;
}

// The untransformed stencil loop nest.
inline TransformedProgram identity_program(const StencilSpec& spec) {
  validate(spec);
  TransformedProgram p;
  p.original = stencil_domain(spec);
  p.domain = p.original;
  p.schedule = Schedule::identity(spec.dims);
  p.declaration_order = spec.dims;
  for (const auto& d : spec.dims) p.body_translation.push_back(AffineExpr::variable(d));
  p.time_dim = spec.time_dim();
  p.stencil = spec;
  p.context = projection_chain(p.original).front().constraints();
  return p;
}

// Skew factors the pipeline will use: minimal ones, overridden per dimension.
inline SizeMap resolve_skew_factors(const StencilSpec& spec, const TileConfig& cfg) {
  std::vector<std::size_t> spatial;
  for (std::size_t k = 1; k < spec.rank(); ++k) spatial.push_back(k);
  const auto minimal = compute_skew_factors(extract_dependences(spec), spatial);
  SizeMap factors;
  for (const auto& [k, f] : minimal) factors[spec.dims[k]] = f;
  if (cfg.skew_factors) {
    for (const auto& [dim, f] : *cfg.skew_factors) {
      const auto k = spec.dim_index(dim);
      if (!k || *k == 0) throw ConfigError("cannot skew '" + dim + "': not a spatial dimension");
      if (f < 0) throw ConfigError("skew factor for '" + dim + "' must be nonnegative");
      factors[dim] = f;
    }
  }
  return factors;
}

// Dimension indices forming the tiling band: time plus every tiled spatial
// dimension (empty when nothing is tiled).
inline std::vector<std::size_t> tiling_band(const StencilSpec& spec, const TileConfig& cfg) {
  std::vector<std::size_t> band;
  if (cfg.spatial_tile_sizes.empty() && !cfg.time_tile_size) return band;
  band.push_back(0);
  for (std::size_t k = 1; k < spec.rank(); ++k) {
    if (cfg.spatial_tile_sizes.count(spec.dims[k])) band.push_back(k);
  }
  return band;
}

// Skew -> tile spatial dims (and time when requested), time placed inside the
// spatial tile band. Validates the configuration but does not check legality.
inline TransformedProgram build_time_tiled(const StencilSpec& spec, const TileConfig& cfg) {
  TransformedProgram p = identity_program(spec);
  const std::string& time = spec.time_dim();
  for (const auto& [dim, size] : cfg.spatial_tile_sizes) {
    const auto k = spec.dim_index(dim);
    if (!k) throw ConfigError("cannot tile unknown dimension '" + dim + "'");
    if (*k == 0) throw ConfigError("the time dimension is tiled with the time tile size, not as a spatial tile");
    if (spec.vectorized && *spec.vectorized == dim) throw ConfigError("the vectorized dimension '" + dim + "' cannot be tiled");
    if (size < 1) throw ConfigError("tile size for '" + dim + "' must be positive");
  }
  if (cfg.time_tile_size) {
    if (*cfg.time_tile_size < 1) throw ConfigError("time tile size must be positive");
    if (spec.time_buffer && *cfg.time_tile_size > *spec.time_buffer) {
      throw BufferConstraintError("time tile size " + std::to_string(*cfg.time_tile_size) +
                                  " exceeds the time buffer of " + std::to_string(*spec.time_buffer) +
                                  " slots; the time tile may be no larger than the buffered dimension");
    }
  }

  p.skew_factors = resolve_skew_factors(spec, cfg);
  Domain dom = p.domain;
  Schedule sched = p.schedule;
  for (std::size_t k = 1; k < spec.rank(); ++k) {
    std::tie(dom, sched) = skew(dom, sched, spec.dims[k], time, p.skew_factors.at(spec.dims[k]));
  }
  SizeMap sizes = cfg.spatial_tile_sizes;
  if (cfg.time_tile_size) sizes[time] = *cfg.time_tile_size;
  auto tiled = tile(dom, sched, sizes);
  p.domain = std::move(tiled.domain);
  p.schedule = std::move(tiled.schedule);
  p.declaration_order = std::move(tiled.declaration_order);
  p.tile_iterators = std::move(tiled.tile_iterators);
  p.body_translation = body_translation(p.schedule);
  return p;
}

// Flow dependences plus, with a buffered time dimension, the anti
// dependences that protect values from being overwritten too early.
inline std::vector<DependenceVector> ordering_constraints(const StencilSpec& spec) {
  auto deps = extract_dependences(spec);
  for (auto& a : buffer_anti_dependences(spec)) deps.push_back(std::move(a));
  return deps;
}

inline TransformedProgram time_tile(const StencilSpec& spec, const TileConfig& cfg) {
  TransformedProgram p = build_time_tiled(spec, cfg);
  const auto band = tiling_band(spec, cfg);
  const auto deps = ordering_constraints(spec);
  std::map<std::size_t, std::int64_t> factors;
  for (std::size_t k = 1; k < spec.rank(); ++k) factors[k] = p.skew_factors.at(spec.dims[k]);
  const auto skewed = skew_dependences(deps, factors);
  if (auto bad = first_band_violation(skewed, band)) {
    const auto i = static_cast<std::size_t>(std::find(skewed.begin(), skewed.end(), bad->first) - skewed.begin());
    throw IllegalTransformError("illegal tiling: dependence " + to_string(deps[i]) + " becomes " + to_string(bad->first) +
                                " after skewing, negative in tiled dimension '" + spec.dims[bad->second] + "'");
  }
  return p;
}

}  // namespace timetile
