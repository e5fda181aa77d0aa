#pragma once

// Dependence-based legality: lexicographic positivity of transformed distance
// vectors, full permutability of a tiling band, and minimal skew factors.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "timetile/error.hpp"
#include "timetile/int_math.hpp"
#include "timetile/schedule.hpp"
#include "timetile/stencil.hpp"

namespace timetile {

inline bool is_lex_positive(const std::vector<std::int64_t>& v) {
  for (const auto c : v) {
    if (c != 0) return c > 0;
  }
  return false;
}

inline bool is_lex_positive(const DependenceVector& d) { return is_lex_positive(d.components()); }

struct ScheduleViolation {
  DependenceVector dependence;
  std::vector<std::int64_t> image;
};

struct ScheduleVerdict {
  bool legal = true;
  std::vector<ScheduleViolation> violations;
};

inline ScheduleVerdict check_schedule_legality(const std::vector<DependenceVector>& deps, const Schedule& sched) {
  const std::size_t n = sched.inputs().size();
  if (matrix_rank(sched.linear()) != n) {
    throw InvalidArgument("schedule linear part does not have full column rank");
  }
  ScheduleVerdict verdict;
  for (const auto& d : deps) {
    if (d.size() != n) {
      throw InvalidArgument("dependence " + to_string(d) + " has " + std::to_string(d.size()) +
                            " components, schedule has " + std::to_string(n) + " iteration dims");
    }
    auto image = sched.apply_linear(d.components());
    if (!is_lex_positive(image)) {
      verdict.legal = false;
      verdict.violations.push_back({d, std::move(image)});
    }
  }
  return verdict;
}

// Minimal f_k >= 0 with d_k + f_k * d_0 >= 0 for every dependence, for each
// requested dimension index k (dimension 0 is time).
inline std::map<std::size_t, std::int64_t> compute_skew_factors(const std::vector<DependenceVector>& deps,
                                                                const std::vector<std::size_t>& dims_to_tile) {
  std::map<std::size_t, std::int64_t> factors;
  for (const auto& d : deps) {
    if (d.size() == 0 || d[0] <= 0) {
      throw InvalidArgument("dependence " + to_string(d) + " is not carried forward in time");
    }
  }
  for (const auto k : dims_to_tile) {
    std::int64_t f = 0;
    for (const auto& d : deps) {
      if (k >= d.size()) throw InvalidArgument("dimension index out of range");
      f = std::max(f, ceild(checked_neg(d[k]), d[0]));
    }
    factors[k] = f;
  }
  return factors;
}

// Rectangular tiling of the band is legal when every dependence is
// nonnegative in every band dimension.
inline bool check_tiling_band(const std::vector<DependenceVector>& deps, const std::vector<std::size_t>& band) {
  for (const auto& d : deps) {
    for (const auto k : band) {
      if (k >= d.size()) throw InvalidArgument("band dimension index out of range");
      if (d[k] < 0) return false;
    }
  }
  return true;
}

inline std::optional<std::pair<DependenceVector, std::size_t>> first_band_violation(
    const std::vector<DependenceVector>& deps, const std::vector<std::size_t>& band) {
  for (const auto& d : deps) {
    for (const auto k : band) {
      if (d[k] < 0) return std::make_pair(d, k);
    }
  }
  return std::nullopt;
}

// d_k += f_k * d_0 for every listed dimension.
inline std::vector<DependenceVector> skew_dependences(const std::vector<DependenceVector>& deps,
                                                     const std::map<std::size_t, std::int64_t>& factors) {
  std::vector<DependenceVector> out;
  out.reserve(deps.size());
  for (const auto& d : deps) {
    auto c = d.components();
    for (const auto& [k, f] : factors) c.at(k) = checked_add(c.at(k), checked_mul(f, c[0]));
    out.emplace_back(std::move(c));
  }
  return out;
}

}  // namespace timetile
