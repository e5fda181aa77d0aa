#pragma once

// Reader and writer for the CLooG input file format: language, context with
// parameter names, statement domains with option lines, iterator names,
// scattering functions and scattering names.

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "timetile/error.hpp"
#include "timetile/polyhedron.hpp"
#include "timetile/schedule.hpp"
#include "timetile/stencil.hpp"
#include "timetile/transform.hpp"

namespace timetile {

// Row layout: flag (0 equality, 1 inequality), variable columns, constant.
struct CloogMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::vector<std::int64_t>> data;

  friend bool operator==(const CloogMatrix&, const CloogMatrix&) = default;
};

struct CloogStatement {
  CloogMatrix domain;
  std::vector<std::int64_t> options;  // e.g. "0 0 0", kept verbatim

  friend bool operator==(const CloogStatement&, const CloogStatement&) = default;
};

struct CloogProblem {
  std::string language = "c";
  std::optional<CloogMatrix> context;                       // nullopt: written as a bare "0"
  std::optional<std::vector<std::string>> parameter_names;  // nullopt: names flag 0
  std::vector<CloogStatement> statements;
  bool iterator_names_flag = true;                          // false: section absent at end of file
  std::optional<std::vector<std::string>> iterator_names;
  std::vector<CloogMatrix> scatterings;
  bool scattering_names_flag = true;
  std::optional<std::vector<std::string>> scattering_names;

  std::size_t parameter_count() const { return context ? context->cols - 2 : 0; }
  std::size_t iterator_count(std::size_t statement) const {
    return statements.at(statement).domain.cols - 2 - parameter_count();
  }

  friend bool operator==(const CloogProblem&, const CloogProblem&) = default;
};

namespace detail {

struct TokenLine {
  std::size_t line;
  std::vector<std::string> tokens;
};

inline std::vector<TokenLine> cloog_lines(std::string_view text) {
  std::vector<TokenLine> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t n = 0;
  while (std::getline(in, raw)) {
    ++n;
    std::istringstream ls(raw.substr(0, raw.find('#')));
    TokenLine tl{n, {}};
    for (std::string tok; ls >> tok;) tl.tokens.push_back(tok);
    if (!tl.tokens.empty()) out.push_back(std::move(tl));
  }
  return out;
}

inline std::int64_t cloog_int(std::string_view tok, std::size_t line) {
  std::string_view v = tok;
  if (!v.empty() && v[0] == '+') v.remove_prefix(1);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError(line, "expected an integer, got '" + std::string(tok) + "'");
  }
  return out;
}

class CloogReader {
 public:
  explicit CloogReader(std::string_view text) : lines_(cloog_lines(text)) {}

  bool at_end() const { return pos_ == lines_.size(); }

  const TokenLine& next(std::string_view what) {
    if (at_end()) throw ParseError(lines_.empty() ? 0 : lines_.back().line, "unexpected end of file, expected " + std::string(what));
    return lines_[pos_++];
  }

  std::vector<std::int64_t> ints(std::string_view what, std::optional<std::size_t> count = std::nullopt) {
    const auto& tl = next(what);
    if (count && tl.tokens.size() != *count) {
      throw ParseError(tl.line, "expected " + std::to_string(*count) + " values for " + std::string(what) + ", found " +
                                    std::to_string(tl.tokens.size()));
    }
    std::vector<std::int64_t> v;
    for (const auto& t : tl.tokens) v.push_back(cloog_int(t, tl.line));
    return v;
  }

  std::int64_t count(std::string_view what) {
    const auto v = ints(what, 1);
    if (v[0] < 0) throw ParseError(lines_[pos_ - 1].line, std::string(what) + " must be nonnegative");
    return v[0];
  }

  std::size_t line() const { return at_end() ? (lines_.empty() ? 0 : lines_.back().line) : lines_[pos_].line; }

  CloogMatrix matrix(std::string_view what) {
    const std::size_t header_line = line();
    const auto h = ints(std::string(what) + " header", 2);
    if (h[0] < 0 || h[1] < 2) throw ParseError(header_line, "invalid " + std::string(what) + " dimensions");
    CloogMatrix m{static_cast<std::size_t>(h[0]), static_cast<std::size_t>(h[1]), {}};
    for (std::size_t r = 0; r < m.rows; ++r) {
      const std::size_t row_line = line();
      auto row = ints(std::string(what) + " row", m.cols);
      if (row[0] != 0 && row[0] != 1) throw ParseError(row_line, "row flag must be 0 (equality) or 1 (inequality)");
      m.data.push_back(std::move(row));
    }
    return m;
  }

  std::optional<std::vector<std::string>> names(std::string_view what, std::size_t expected) {
    const std::size_t flag_line = line();
    const auto flag = count(std::string(what) + " flag");
    if (flag == 0) return std::nullopt;
    if (flag != 1) throw ParseError(flag_line, std::string(what) + " flag must be 0 or 1");
    const auto& tl = next(what);
    if (tl.tokens.size() != expected) {
      throw ParseError(tl.line, "expected " + std::to_string(expected) + " " + std::string(what) + ", found " +
                                    std::to_string(tl.tokens.size()));
    }
    return tl.tokens;
  }

 private:
  std::vector<TokenLine> lines_;
  std::size_t pos_ = 0;
};

inline std::string default_name(std::size_t i, bool parameter) {
  static const char* iters[] = {"i", "j", "k", "l", "m", "n", "o", "p"};
  static const char* params[] = {"M", "N", "O", "P", "Q", "R"};
  if (parameter) return i < 6 ? params[i] : "P" + std::to_string(i);
  return i < 8 ? iters[i] : "c" + std::to_string(i);
}

}  // namespace detail

inline CloogProblem parse_cloog_input(std::string_view text) {
  detail::CloogReader r(text);
  CloogProblem p;
  {
    const auto& lang = r.next("language");
    if (lang.tokens.size() != 1) throw ParseError(lang.line, "expected a single language token");
    p.language = lang.tokens.front();
  }
  {
    const auto& header = r.next("context");
    if (header.tokens.size() == 1) {
      if (detail::cloog_int(header.tokens[0], header.line) != 0) {
        throw ParseError(header.line, "expected a context matrix header");
      }
    } else {
      if (header.tokens.size() != 2) throw ParseError(header.line, "expected 'rows columns' for the context");
      const std::int64_t rows = detail::cloog_int(header.tokens[0], header.line);
      const std::int64_t cols = detail::cloog_int(header.tokens[1], header.line);
      if (rows < 0 || cols < 2) throw ParseError(header.line, "invalid context dimensions");
      CloogMatrix m{static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), {}};
      for (std::size_t i = 0; i < m.rows; ++i) {
        const std::size_t row_line = r.line();
        auto row = r.ints("context row", m.cols);
        if (row[0] != 0 && row[0] != 1) throw ParseError(row_line, "row flag must be 0 (equality) or 1 (inequality)");
        m.data.push_back(std::move(row));
      }
      p.context = std::move(m);
      p.parameter_names = r.names("parameter names", p.context->cols - 2);
    }
  }
  const std::size_t np = p.parameter_count();
  const auto nstmt = r.count("statement count");
  for (std::int64_t s = 0; s < nstmt; ++s) {
    const std::size_t at = r.line();
    CloogStatement st;
    st.domain = r.matrix("statement domain");
    if (st.domain.cols < 2 + np) throw ParseError(at, "statement domain has fewer columns than the parameters require");
    if (s > 0 && st.domain.cols != p.statements.front().domain.cols) {
      throw ParseError(at, "all statements must have the same number of iterators");
    }
    st.options = r.ints("statement options");
    p.statements.push_back(std::move(st));
  }
  const std::size_t niter = p.statements.empty() ? 0 : p.iterator_count(0);
  p.iterator_names_flag = !r.at_end();
  if (p.iterator_names_flag) p.iterator_names = r.names("iterator names", niter);
  if (!r.at_end()) {
    const auto nscat = r.count("scattering count");
    if (nscat != 0 && static_cast<std::size_t>(nscat) != p.statements.size()) {
      throw ParseError(r.line(), "expected one scattering function per statement");
    }
    for (std::int64_t s = 0; s < nscat; ++s) {
      const std::size_t at = r.line();
      auto m = r.matrix("scattering");
      if (m.cols != 2 + m.rows + niter + np) {
        throw ParseError(at, "scattering has " + std::to_string(m.cols) + " columns, expected " +
                                 std::to_string(2 + m.rows + niter + np));
      }
      if (!p.scatterings.empty() && m.rows != p.scatterings.front().rows) {
        throw ParseError(at, "scattering functions must have equal dimension");
      }
      p.scatterings.push_back(std::move(m));
    }
    p.scattering_names_flag = !r.at_end();
    if (p.scattering_names_flag) {
      p.scattering_names = r.names("scattering names", p.scatterings.empty() ? 0 : p.scatterings.front().rows);
    }
  } else {
    p.scattering_names_flag = false;
  }
  if (!r.at_end()) throw ParseError(r.line(), "unexpected trailing content");
  return p;
}

inline std::string write_cloog(const CloogProblem& p) {
  std::ostringstream os;
  auto row = [&](const std::vector<std::int64_t>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
    os << '\n';
  };
  auto matrix = [&](const CloogMatrix& m) {
    os << m.rows << ' ' << m.cols << '\n';
    for (const auto& r : m.data) row(r);
  };
  auto names = [&](const std::optional<std::vector<std::string>>& n) {
    if (!n) {
      os << "0\n";
      return;
    }
    os << "1\n";
    for (std::size_t i = 0; i < n->size(); ++i) os << (i ? " " : "") << (*n)[i];
    os << '\n';
  };
  os << "# language\n" << p.language << "\n\n# context\n";
  if (p.context) {
    matrix(*p.context);
    names(p.parameter_names);
  } else {
    os << "0\n";
  }
  os << "\n# statements\n" << p.statements.size() << '\n';
  for (const auto& s : p.statements) {
    matrix(s.domain);
    row(s.options);
  }
  if (p.iterator_names_flag) {
    os << "\n# iterator names\n";
    names(p.iterator_names);
  }
  if (p.iterator_names_flag || !p.scatterings.empty()) {
    os << "\n# scattering functions\n" << p.scatterings.size() << '\n';
    for (const auto& m : p.scatterings) matrix(m);
    if (p.scattering_names_flag) {
      os << "\n# scattering names\n";
      names(p.scattering_names);
    }
  }
  return os.str();
}

// Whitespace-separated tokens with comments removed, for fidelity checks.
inline std::vector<std::string> cloog_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& l : detail::cloog_lines(text)) {
    for (auto& t : l.tokens) out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<std::string> cloog_parameter_names(const CloogProblem& p) {
  if (p.parameter_names) return *p.parameter_names;
  std::vector<std::string> n;
  for (std::size_t i = 0; i < p.parameter_count(); ++i) n.push_back(detail::default_name(i, true));
  return n;
}

inline std::vector<std::string> cloog_iterator_names(const CloogProblem& p, std::size_t statement) {
  if (p.iterator_names) return *p.iterator_names;
  std::vector<std::string> n;
  for (std::size_t i = 0; i < p.iterator_count(statement); ++i) n.push_back(detail::default_name(i, false));
  return n;
}

namespace detail {

inline std::vector<Constraint> rows_to_constraints(const CloogMatrix& m, const std::vector<std::string>& vars) {
  std::vector<Constraint> cs;
  for (const auto& r : m.data) {
    AffineExpr e(r.back());
    for (std::size_t j = 0; j < vars.size(); ++j) e.add_term(vars[j], r[1 + j]);
    cs.push_back(r[0] == 0 ? Constraint::equality(std::move(e)) : Constraint::nonneg(std::move(e)));
  }
  return cs;
}

inline std::vector<std::int64_t> constraint_to_row(const Constraint& c, const std::vector<std::string>& vars) {
  std::vector<std::int64_t> r;
  r.push_back(c.is_equality() ? 0 : 1);
  for (const auto& v : vars) r.push_back(c.expr().coeff(v));
  r.push_back(c.expr().constant());
  return r;
}

}  // namespace detail

inline std::vector<Constraint> cloog_context(const CloogProblem& p) {
  if (!p.context) return {};
  return detail::rows_to_constraints(*p.context, cloog_parameter_names(p));
}

inline Domain to_domain(const CloogProblem& p, std::size_t statement) {
  if (statement >= p.statements.size()) throw InvalidArgument("statement index out of range");
  auto iters = cloog_iterator_names(p, statement);
  auto params = cloog_parameter_names(p);
  std::vector<std::string> vars = iters;
  vars.insert(vars.end(), params.begin(), params.end());
  return Domain(std::move(iters), std::move(params), detail::rows_to_constraints(p.statements[statement].domain, vars));
}

// Input iterator index selected by each scattering row, for pure permutation
// scatterings (c_r = iterator). Anything else is rejected.
inline std::vector<std::size_t> scattering_permutation(const CloogProblem& p, std::size_t statement) {
  const CloogMatrix& m = p.scatterings.at(statement);
  const std::size_t n = p.iterator_count(statement);
  if (m.rows != n) throw InvalidArgument("unsupported scattering: dimension differs from the iterator count");
  std::vector<std::size_t> perm;
  std::vector<bool> used(n, false);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto& row = m.data[r];
    bool ok = row[0] == 0 && row.back() == 0;
    for (std::size_t c = 0; c < m.rows && ok; ++c) ok = row[1 + c] == (c == r ? 1 : 0);
    std::optional<std::size_t> pick;
    for (std::size_t j = 0; j < n && ok; ++j) {
      const std::int64_t v = row[1 + m.rows + j];
      if (v == 0) continue;
      if (v != -1 || pick) ok = false;
      pick = j;
    }
    for (std::size_t j = 0; j < p.parameter_count() && ok; ++j) ok = row[1 + m.rows + n + j] == 0;
    if (!ok || !pick || used[*pick]) {
      throw InvalidArgument("unsupported scattering: row " + std::to_string(r + 1) + " is not a permutation row");
    }
    used[*pick] = true;
    perm.push_back(*pick);
  }
  return perm;
}

// A loop program for one statement: the scattering fixes the loop order and
// names, parameters pinned by context equalities are substituted.
inline TransformedProgram to_program(const CloogProblem& p, std::size_t statement) {
  const Domain dom = to_domain(p, statement);
  const auto& iters = dom.iterators();
  std::vector<std::size_t> perm(iters.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::vector<std::string> loop_names = iters;
  if (!p.scatterings.empty()) {
    perm = scattering_permutation(p, statement);
    loop_names.clear();
    for (std::size_t r = 0; r < perm.size(); ++r) {
      loop_names.push_back(p.scattering_names ? (*p.scattering_names)[r] : iters[perm[r]]);
    }
  }
  Bindings fixed;
  std::vector<Constraint> context;
  for (const auto& c : cloog_context(p)) {
    const auto& terms = c.expr().terms();
    if (c.is_equality() && terms.size() == 1 && (terms.begin()->second == 1 || terms.begin()->second == -1)) {
      fixed[terms.begin()->first] = -terms.begin()->second * c.expr().constant();
    } else {
      context.push_back(c);
    }
  }
  std::map<std::string, std::string, std::less<>> rename;
  IntMatrix lin(perm.size(), std::vector<std::int64_t>(iters.size(), 0));
  for (std::size_t r = 0; r < perm.size(); ++r) {
    rename[iters[perm[r]]] = loop_names[r];
    lin[r][perm[r]] = 1;
  }
  // Two-step rename so that swapped names cannot capture each other.
  std::map<std::string, std::string, std::less<>> to_temp, from_temp;
  for (const auto& [from, to] : rename) {
    to_temp[from] = "\x01" + to;
    from_temp["\x01" + to] = to;
  }
  std::vector<Constraint> cs;
  for (const auto& c : dom.constraints()) cs.push_back(c.renamed(to_temp).renamed(from_temp).substitute(fixed));
  std::vector<std::string> params;
  for (const auto& prm : dom.parameters()) {
    if (!fixed.count(prm)) params.push_back(prm);
  }
  for (auto& c : context) c = c.substitute(fixed);

  TransformedProgram prog;
  prog.original = substitute_parameters(dom, fixed);
  prog.domain = Domain(loop_names, params, std::move(cs));
  prog.schedule = Schedule(iters, loop_names, std::move(lin));
  for (const auto& it : iters) prog.declaration_order.push_back(rename.at(it));
  prog.body_translation = body_translation(prog.schedule);
  prog.context = std::move(context);
  return prog;
}

// CLooG input reproducing `p`: the domain in declaration order and a
// permutation scattering giving the loop order.
inline CloogProblem from_transformed(const TransformedProgram& p) {
  CloogProblem out;
  const auto& params = p.domain.parameters();
  const auto& loops = p.domain.iterators();
  const std::vector<std::string> decl = p.declaration_order.empty() ? loops : p.declaration_order;
  if (!params.empty() || !p.context.empty()) {
    CloogMatrix ctx{p.context.size(), 2 + params.size(), {}};
    for (const auto& c : p.context) ctx.data.push_back(detail::constraint_to_row(c, params));
    out.context = std::move(ctx);
    if (!params.empty()) out.parameter_names = params;
  }
  std::vector<std::string> vars = decl;
  vars.insert(vars.end(), params.begin(), params.end());
  CloogStatement st;
  st.domain = {p.domain.constraints().size(), 2 + vars.size(), {}};
  for (const auto& c : p.domain.constraints()) st.domain.data.push_back(detail::constraint_to_row(c, vars));
  st.options = {0, 0, 0};
  out.statements.push_back(std::move(st));
  out.iterator_names = decl;
  CloogMatrix scat{loops.size(), 2 + 2 * loops.size() + params.size(), {}};
  for (std::size_t r = 0; r < loops.size(); ++r) {
    std::vector<std::int64_t> row(scat.cols, 0);
    row[1 + r] = 1;
    const auto j = static_cast<std::size_t>(std::find(decl.begin(), decl.end(), loops[r]) - decl.begin());
    row[1 + loops.size() + j] = -1;
    scat.data.push_back(std::move(row));
  }
  out.scatterings.push_back(std::move(scat));
  out.scattering_names = loops;
  return out;
}

}  // namespace timetile
