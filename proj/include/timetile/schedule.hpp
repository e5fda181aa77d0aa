#pragma once

// Affine schedules (iteration vector -> timestamp vector) and the small exact
// integer matrix routines they need.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "timetile/error.hpp"
#include "timetile/int_math.hpp"
#include "timetile/polyhedron.hpp"

namespace timetile {

using IntMatrix = std::vector<std::vector<std::int64_t>>;

inline IntMatrix identity_matrix(std::size_t n) {
  IntMatrix m(n, std::vector<std::int64_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1;
  return m;
}

// Fraction-free (Bareiss) elimination; exact for integer input.
inline std::int64_t determinant(IntMatrix m) {
  const std::size_t n = m.size();
  for (const auto& row : m) {
    if (row.size() != n) throw InvalidArgument("determinant of a non-square matrix");
  }
  if (n == 0) return 1;
  std::int64_t sign = 1, prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (m[k][k] == 0) {
      std::size_t r = k + 1;
      while (r < n && m[r][k] == 0) ++r;
      if (r == n) return 0;
      std::swap(m[k], m[r]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        m[i][j] = checked_sub(checked_mul(m[i][j], m[k][k]), checked_mul(m[i][k], m[k][j])) / prev;
      }
    }
    prev = m[k][k];
  }
  return checked_mul(sign, m[n - 1][n - 1]);
}

inline std::size_t matrix_rank(IntMatrix m) {
  const std::size_t rows = m.size();
  const std::size_t cols = rows ? m.front().size() : 0;
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t p = rank;
    while (p < rows && m[p][c] == 0) ++p;
    if (p == rows) continue;
    std::swap(m[rank], m[p]);
    for (std::size_t r = rank + 1; r < rows; ++r) {
      if (m[r][c] == 0) continue;
      const std::int64_t a = m[rank][c], b = m[r][c];
      std::int64_t g = 0;
      for (std::size_t j = 0; j < cols; ++j) {
        m[r][j] = checked_sub(checked_mul(a, m[r][j]), checked_mul(b, m[rank][j]));
        g = abs_gcd(g, m[r][j]);
      }
      if (g > 1) {
        for (auto& v : m[r]) v /= g;
      }
    }
    ++rank;
  }
  return rank;
}

// Inverse of a unimodular matrix via the adjugate.
inline IntMatrix unimodular_inverse(const IntMatrix& m) {
  const std::size_t n = m.size();
  const std::int64_t det = determinant(m);
  if (det != 1 && det != -1) throw InvalidArgument("matrix is not unimodular (det = " + std::to_string(det) + ")");
  IntMatrix inv(n, std::vector<std::int64_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      IntMatrix minor;
      for (std::size_t r = 0; r < n; ++r) {
        if (r == i) continue;
        std::vector<std::int64_t> row;
        for (std::size_t c = 0; c < n; ++c) {
          if (c != j) row.push_back(m[r][c]);
        }
        minor.push_back(std::move(row));
      }
      const std::int64_t cof = ((i + j) % 2 ? -1 : 1) * determinant(std::move(minor));
      inv[j][i] = checked_mul(cof, det);  // det is +-1, so 1/det == det
    }
  }
  return inv;
}

inline std::vector<std::int64_t> multiply(const IntMatrix& m, const std::vector<std::int64_t>& v) {
  std::vector<std::int64_t> out(m.size(), 0);
  for (std::size_t r = 0; r < m.size(); ++r) {
    if (m[r].size() != v.size()) throw InvalidArgument("matrix/vector dimension mismatch");
    for (std::size_t c = 0; c < v.size(); ++c) out[r] = checked_add(out[r], checked_mul(m[r][c], v[c]));
  }
  return out;
}

// theta(i) = linear * i + shifts. Columns are named by the iteration dims,
// rows by the output (timestamp) dims.
class Schedule {
 public:
  Schedule() = default;
  Schedule(std::vector<std::string> input_names, std::vector<std::string> output_names, IntMatrix linear,
           std::vector<std::int64_t> shifts = {})
      : inputs_(std::move(input_names)), outputs_(std::move(output_names)), linear_(std::move(linear)),
        shifts_(std::move(shifts)) {
    if (shifts_.empty()) shifts_.assign(outputs_.size(), 0);
    if (linear_.size() != outputs_.size() || shifts_.size() != outputs_.size()) {
      throw InvalidArgument("schedule needs one row and one shift per output dimension");
    }
    for (const auto& row : linear_) {
      if (row.size() != inputs_.size()) throw InvalidArgument("schedule row width must equal the input dimension count");
    }
  }

  static Schedule identity(const std::vector<std::string>& names) {
    return Schedule(names, names, identity_matrix(names.size()));
  }

  const std::vector<std::string>& inputs() const noexcept { return inputs_; }
  const std::vector<std::string>& outputs() const noexcept { return outputs_; }
  const IntMatrix& linear() const noexcept { return linear_; }
  const std::vector<std::int64_t>& shifts() const noexcept { return shifts_; }

  std::vector<std::int64_t> apply_linear(const std::vector<std::int64_t>& v) const {
    if (v.size() != inputs_.size()) throw InvalidArgument("vector has " + std::to_string(v.size()) +
                                                          " components, schedule expects " + std::to_string(inputs_.size()));
    return multiply(linear_, v);
  }

  Point apply(const Point& p) const {
    auto out = apply_linear(p);
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = checked_add(out[r], shifts_[r]);
    return out;
  }

  // When every row selects exactly one input with coefficient 1 (and no shift),
  // perm[r] is the input column of output row r.
  std::optional<std::vector<std::size_t>> permutation() const {
    if (outputs_.size() != inputs_.size()) return std::nullopt;
    std::vector<std::size_t> perm;
    std::vector<bool> used(inputs_.size(), false);
    for (std::size_t r = 0; r < linear_.size(); ++r) {
      if (shifts_[r] != 0) return std::nullopt;
      std::optional<std::size_t> col;
      for (std::size_t c = 0; c < linear_[r].size(); ++c) {
        if (linear_[r][c] == 0) continue;
        if (linear_[r][c] != 1 || col) return std::nullopt;
        col = c;
      }
      if (!col || used[*col]) return std::nullopt;
      used[*col] = true;
      perm.push_back(*col);
    }
    return perm;
  }

  friend bool operator==(const Schedule&, const Schedule&) = default;

 private:
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  IntMatrix linear_;
  std::vector<std::int64_t> shifts_;
};

}  // namespace timetile
