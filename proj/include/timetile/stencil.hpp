#pragma once

// Stencil problem description, its line-oriented text format, and extraction
// of uniform flow-dependence distance vectors from read offsets.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "timetile/error.hpp"
#include "timetile/polyhedron.hpp"

namespace timetile {

using Offset = std::vector<std::int64_t>;

// Iteration distance between producer and consumer, outermost (time) first.
class DependenceVector {
 public:
  DependenceVector() = default;
  explicit DependenceVector(std::vector<std::int64_t> components) : components_(std::move(components)) {}
  DependenceVector(std::initializer_list<std::int64_t> components) : components_(components) {}

  std::size_t size() const noexcept { return components_.size(); }
  std::int64_t operator[](std::size_t i) const { return components_.at(i); }
  const std::vector<std::int64_t>& components() const noexcept { return components_; }

  friend bool operator==(const DependenceVector&, const DependenceVector&) = default;
  friend auto operator<=>(const DependenceVector&, const DependenceVector&) = default;

 private:
  std::vector<std::int64_t> components_;
};

inline std::string to_string(const std::vector<std::int64_t>& v) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ')';
  return os.str();
}

inline std::string to_string(const DependenceVector& d) { return to_string(d.components()); }

struct DimBounds {
  AffineExpr lower;  // inclusive
  AffineExpr upper;  // inclusive

  friend bool operator==(const DimBounds&, const DimBounds&) = default;
};

struct StencilSpec {
  std::vector<std::string> dims;  // time first
  std::vector<std::string> params;
  std::vector<DimBounds> bounds;
  std::vector<Offset> reads;  // the write is at offset zero
  std::optional<std::int64_t> time_buffer;
  std::optional<std::string> vectorized;
  std::optional<std::int64_t> flops_per_point;

  const std::string& time_dim() const { return dims.front(); }
  std::size_t rank() const noexcept { return dims.size(); }
  Offset write_access() const { return Offset(dims.size(), 0); }

  std::optional<std::size_t> dim_index(std::string_view name) const {
    auto it = std::find(dims.begin(), dims.end(), name);
    if (it == dims.end()) return std::nullopt;
    return static_cast<std::size_t>(it - dims.begin());
  }

  friend bool operator==(const StencilSpec&, const StencilSpec&) = default;
};

namespace detail {

struct SpecIssue {
  std::string key;  // which entry of the text format the problem belongs to
  std::string message;
};

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

inline std::optional<SpecIssue> check_spec(const StencilSpec& s) {
  if (s.dims.empty()) return SpecIssue{"dims", "at least the time dimension must be declared"};
  std::set<std::string, std::less<>> names;
  for (const auto& d : s.dims) {
    if (!is_identifier(d)) return SpecIssue{"dims", "invalid dimension name '" + d + "'"};
    if (!names.insert(d).second) return SpecIssue{"dims", "duplicate name '" + d + "'"};
  }
  for (const auto& p : s.params) {
    if (!is_identifier(p)) return SpecIssue{"params", "invalid parameter name '" + p + "'"};
    if (!names.insert(p).second) return SpecIssue{"params", "duplicate name '" + p + "'"};
  }
  if (s.bounds.size() != s.dims.size()) return SpecIssue{"bounds", "every dimension needs bounds"};
  for (const auto& b : s.bounds) {
    for (const auto* e : {&b.lower, &b.upper}) {
      for (const auto& [name, c] : e->terms()) {
        if (std::find(s.params.begin(), s.params.end(), name) == s.params.end()) {
          return SpecIssue{"bounds", "bound refers to undeclared parameter '" + name + "'"};
        }
      }
    }
  }
  std::int64_t deepest = 0;
  for (const auto& r : s.reads) {
    if (r.size() != s.dims.size()) {
      return SpecIssue{"reads", "offset " + to_string(r) + " has " + std::to_string(r.size()) + " components, expected " +
                                    std::to_string(s.dims.size())};
    }
    if (r[0] > 0) return SpecIssue{"reads", "positive time offset in read " + to_string(r)};
    if (r[0] == 0) return SpecIssue{"reads", "read " + to_string(r) + " is at the current time step; time offset must be negative"};
    deepest = std::max(deepest, -r[0]);
  }
  if (s.time_buffer) {
    if (*s.time_buffer <= 0) return SpecIssue{"time_buffer", "time_buffer must be positive"};
    if (*s.time_buffer <= deepest) {
      return SpecIssue{"time_buffer", "time_buffer " + std::to_string(*s.time_buffer) +
                                          " cannot hold the " + std::to_string(deepest + 1) + " time steps the stencil touches"};
    }
  }
  if (s.vectorized) {
    auto it = std::find(s.dims.begin(), s.dims.end(), *s.vectorized);
    if (it == s.dims.end()) return SpecIssue{"vectorized", "unknown dimension '" + *s.vectorized + "'"};
    if (it == s.dims.begin()) return SpecIssue{"vectorized", "the time dimension cannot be vectorized"};
    if (it + 1 != s.dims.end()) return SpecIssue{"vectorized", "only the innermost dimension can be vectorized"};
  }
  if (s.flops_per_point && *s.flops_per_point <= 0) return SpecIssue{"flops_per_point", "flops_per_point must be positive"};
  return std::nullopt;
}

}  // namespace detail

inline void validate(const StencilSpec& spec) {
  if (auto issue = detail::check_spec(spec)) throw InvalidArgument(issue->key + ": " + issue->message);
}

// The iteration domain: one iterator per dimension, inclusive bounds.
inline Domain stencil_domain(const StencilSpec& spec) {
  std::vector<Constraint> cs;
  for (std::size_t k = 0; k < spec.dims.size(); ++k) {
    const auto v = AffineExpr::variable(spec.dims[k]);
    cs.push_back(Constraint::ge(v, spec.bounds.at(k).lower));
    cs.push_back(Constraint::le(v, spec.bounds.at(k).upper));
  }
  return Domain(spec.dims, spec.params, std::move(cs));
}

// d = write iteration - producing iteration = -offset, deduplicated and sorted.
inline std::vector<DependenceVector> extract_dependences(const StencilSpec& spec) {
  std::set<DependenceVector> unique;
  for (const auto& r : spec.reads) {
    std::vector<std::int64_t> d(r.size());
    std::transform(r.begin(), r.end(), d.begin(), [](std::int64_t x) { return checked_neg(x); });
    unique.emplace(std::move(d));
  }
  return {unique.begin(), unique.end()};
}

// For each spatial dimension, the vectors reaching furthest in the positive
// and in the negative direction.
inline std::vector<DependenceVector> extreme_dependences(const std::vector<DependenceVector>& deps) {
  std::set<DependenceVector> out;
  if (deps.empty()) return {};
  for (std::size_t k = 1; k < deps.front().size(); ++k) {
    std::int64_t hi = 0, lo = 0;
    for (const auto& d : deps) {
      hi = std::max(hi, d[k]);
      lo = std::min(lo, d[k]);
    }
    for (const auto& d : deps) {
      if ((hi > 0 && d[k] == hi) || (lo < 0 && d[k] == lo)) out.insert(d);
    }
  }
  return {out.begin(), out.end()};
}

// With a buffer of B time slots, writing (t, p) destroys (t - B, p); every
// reader of that value must run first. Returns those writer-minus-reader
// distances (empty without a buffer).
inline std::vector<DependenceVector> buffer_anti_dependences(const StencilSpec& spec) {
  std::set<DependenceVector> out;
  if (!spec.time_buffer) return {};
  for (const auto& d : extract_dependences(spec)) {
    std::vector<std::int64_t> a(d.size());
    a[0] = checked_sub(*spec.time_buffer, d[0]);
    for (std::size_t k = 1; k < d.size(); ++k) a[k] = checked_neg(d[k]);
    out.emplace(std::move(a));
  }
  return {out.begin(), out.end()};
}

// Extent of the data array: interior bounds widened by the read offsets
// (halo). The time axis is either the full history or `time_buffer` slots.
struct GridLayout {
  std::vector<AffineExpr> lower;  // per dimension, over parameters
  std::vector<AffineExpr> upper;
  std::optional<std::int64_t> time_slots;
};

inline GridLayout grid_layout(const StencilSpec& spec) {
  GridLayout g;
  for (std::size_t k = 0; k < spec.rank(); ++k) {
    std::int64_t lo = 0, hi = 0;
    for (const auto& r : spec.reads) {
      lo = std::min(lo, r[k]);
      hi = std::max(hi, r[k]);
    }
    g.lower.push_back(spec.bounds[k].lower + lo);
    g.upper.push_back(spec.bounds[k].upper + hi);
  }
  g.time_slots = spec.time_buffer;
  return g;
}

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      parts.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return parts;
}

inline std::int64_t parse_int(std::string_view tok, std::size_t line) {
  std::string t = trim(tok);
  std::string_view v = t;
  if (!v.empty() && v[0] == '+') v.remove_prefix(1);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    if (is_identifier(v)) throw ParseError(line, "non-uniform offset '" + t + "': only integer offsets are supported");
    throw ParseError(line, "expected an integer, got '" + t + "'");
  }
  return out;
}

// expr := ['+'|'-'] term (('+'|'-') term)*, term := factor ('*' factor)*,
// with at most one identifier per term.
inline AffineExpr parse_affine(std::string_view text, std::size_t line) {
  AffineExpr result;
  std::size_t i = 0;
  auto skip = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip();
  if (i == text.size()) throw ParseError(line, "empty expression");
  bool first = true;
  while (true) {
    skip();
    if (i == text.size()) break;
    std::int64_t sign = 1;
    if (text[i] == '+' || text[i] == '-') {
      sign = text[i] == '-' ? -1 : 1;
      ++i;
    } else if (!first) {
      throw ParseError(line, "expected '+' or '-' in '" + std::string(text) + "'");
    }
    first = false;
    std::int64_t coeff = sign;
    std::optional<std::string> var;
    bool need_factor = true;
    while (need_factor) {
      skip();
      if (i == text.size()) throw ParseError(line, "dangling operator in '" + std::string(text) + "'");
      const std::size_t start = i;
      if (std::isdigit(static_cast<unsigned char>(text[i]))) {
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        coeff = checked_mul(coeff, parse_int(text.substr(start, i - start), line));
      } else if (std::isalpha(static_cast<unsigned char>(text[i])) || text[i] == '_') {
        while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) ++i;
        if (var) throw ParseError(line, "non-affine term in '" + std::string(text) + "'");
        var = std::string(text.substr(start, i - start));
      } else {
        throw ParseError(line, "unexpected character '" + std::string(1, text[i]) + "' in '" + std::string(text) + "'");
      }
      skip();
      need_factor = i < text.size() && text[i] == '*';
      if (need_factor) ++i;
    }
    if (var) {
      result.add_term(*var, coeff);
    } else {
      result += coeff;
    }
  }
  return result;
}

}  // namespace detail

// Parses the stencil-spec text format:
//   dims: t, x, y, z
//   params: time_size, x_size
//   bounds: t in [1, time_size-2]; x in [4, x_size-5]; ...
//   reads: (-1, 0, 0, -4), (-1, 0, 0, 4), ...
//   time_buffer: 8          (optional)
//   vectorized: z           (optional)
//   flops_per_point: 37     (optional)
// '#' starts a comment; an indented line continues the previous entry.
inline StencilSpec parse_stencil_spec(std::string_view text) {
  std::map<std::string, std::pair<std::size_t, std::string>, std::less<>> entries;
  static const std::set<std::string, std::less<>> known = {"dims",        "params",     "bounds",         "reads",
                                                           "time_buffer", "vectorized", "flops_per_point"};
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw, last_key;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::trim(std::string_view(raw).substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (std::isspace(static_cast<unsigned char>(raw[0])) && !last_key.empty()) {
      entries.at(last_key).second += " " + line;  // indented continuation
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ParseError(line_no, "expected 'key: value'");
    std::string key = detail::trim(std::string_view(line).substr(0, colon));
    if (!known.count(key)) throw ParseError(line_no, "unknown key '" + key + "'");
    if (entries.count(key)) throw ParseError(line_no, "duplicate key '" + key + "'");
    last_key = key;
    entries.emplace(std::move(key), std::make_pair(line_no, detail::trim(std::string_view(line).substr(colon + 1))));
  }
  auto line_of = [&](std::string_view key) -> std::size_t {
    auto it = entries.find(key);
    return it == entries.end() ? line_no : it->second.first;
  };
  auto names = [&](std::string_view key) {
    std::vector<std::string> out;
    auto it = entries.find(key);
    if (it == entries.end() || it->second.second.empty()) return out;
    for (auto& n : detail::split(it->second.second, ',')) {
      if (!detail::is_identifier(n)) throw ParseError(it->second.first, "invalid name '" + n + "'");
      out.push_back(std::move(n));
    }
    return out;
  };

  StencilSpec spec;
  if (!entries.count("dims")) throw ParseError(line_no, "missing 'dims'");
  if (!entries.count("bounds")) throw ParseError(line_no, "missing 'bounds'");
  spec.dims = names("dims");
  spec.params = names("params");

  {
    const auto& [ln, value] = entries.at("bounds");
    std::map<std::string, DimBounds, std::less<>> by_dim;
    for (const auto& item : detail::split(value, ';')) {
      if (item.empty()) continue;
      const auto in_pos = item.find(" in ");
      const auto lb = item.find('['), rb = item.rfind(']');
      if (in_pos == std::string::npos || lb == std::string::npos || rb == std::string::npos || rb < lb) {
        throw ParseError(ln, "expected '<dim> in [<lower>, <upper>]', got '" + item + "'");
      }
      const std::string dim = detail::trim(std::string_view(item).substr(0, in_pos));
      const auto range = detail::split(std::string_view(item).substr(lb + 1, rb - lb - 1), ',');
      if (range.size() != 2) throw ParseError(ln, "bounds of '" + dim + "' need exactly two expressions");
      if (!spec.dim_index(dim)) throw ParseError(ln, "bounds given for undeclared dimension '" + dim + "'");
      if (by_dim.count(dim)) throw ParseError(ln, "duplicate bounds for '" + dim + "'");
      by_dim.emplace(dim, DimBounds{detail::parse_affine(range[0], ln), detail::parse_affine(range[1], ln)});
    }
    for (const auto& d : spec.dims) {
      auto it = by_dim.find(d);
      if (it == by_dim.end()) throw ParseError(ln, "missing bounds for dimension '" + d + "'");
      spec.bounds.push_back(it->second);
    }
  }

  if (auto it = entries.find("reads"); it != entries.end()) {
    const auto& [ln, value] = it->second;
    std::size_t i = 0;
    while (i < value.size()) {
      while (i < value.size() && (std::isspace(static_cast<unsigned char>(value[i])) || value[i] == ',')) ++i;
      if (i == value.size()) break;
      if (value[i] != '(') throw ParseError(ln, "expected '(' to start an offset vector");
      const auto close = value.find(')', i);
      if (close == std::string::npos) throw ParseError(ln, "unterminated offset vector");
      Offset off;
      for (const auto& c : detail::split(std::string_view(value).substr(i + 1, close - i - 1), ',')) {
        off.push_back(detail::parse_int(c, ln));
      }
      spec.reads.push_back(std::move(off));
      i = close + 1;
    }
  }
  auto scalar = [&](std::string_view key) -> std::optional<std::int64_t> {
    auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    return detail::parse_int(it->second.second, it->second.first);
  };
  spec.time_buffer = scalar("time_buffer");
  spec.flops_per_point = scalar("flops_per_point");
  if (auto it = entries.find("vectorized"); it != entries.end()) spec.vectorized = it->second.second;

  if (auto issue = detail::check_spec(spec)) throw ParseError(line_of(issue->key), issue->message);
  return spec;
}

inline std::string write_spec_text(const StencilSpec& spec) {
  std::ostringstream os;
  auto join = [&](const std::vector<std::string>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  };
  os << "dims: ";
  join(spec.dims);
  os << '\n';
  if (!spec.params.empty()) {
    os << "params: ";
    join(spec.params);
    os << '\n';
  }
  os << "bounds: ";
  for (std::size_t k = 0; k < spec.dims.size(); ++k) {
    os << (k ? "; " : "") << spec.dims[k] << " in [" << to_string(spec.bounds[k].lower, spec.params) << ", "
       << to_string(spec.bounds[k].upper, spec.params) << ']';
  }
  os << '\n';
  if (!spec.reads.empty()) {
    os << "reads: ";
    for (std::size_t i = 0; i < spec.reads.size(); ++i) os << (i ? ", " : "") << to_string(spec.reads[i]);
    os << '\n';
  }
  if (spec.time_buffer) os << "time_buffer: " << *spec.time_buffer << '\n';
  if (spec.vectorized) os << "vectorized: " << *spec.vectorized << '\n';
  if (spec.flops_per_point) os << "flops_per_point: " << *spec.flops_per_point << '\n';
  return os.str();
}

}  // namespace timetile
