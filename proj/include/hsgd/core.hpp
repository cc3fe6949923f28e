#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsgd {

using DenseVector = std::vector<double>;

constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline bool all_finite(const DenseVector& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

inline double dot(const DenseVector& a, const DenseVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(const DenseVector& a) { return dot(a, a); }

inline double norm(const DenseVector& a) { return std::sqrt(squared_norm(a)); }

// y += alpha * x
inline void axpy(double alpha, const DenseVector& x, DenseVector& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(DenseVector& x, double alpha) {
  for (double& v : x) v *= alpha;
}

inline DenseVector sub(const DenseVector& a, const DenseVector& b) {
  DenseVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline double squared_distance(const DenseVector& a, const DenseVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// Sparse sample row with sorted indices; stored values are nonzero.
struct SparseRow {
  std::vector<int> indices;
  std::vector<double> values;
  int dim = 0;

  double dot(const DenseVector& x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < indices.size(); ++k) s += values[k] * x[indices[k]];
    return s;
  }

  // acc += coeff * row
  void axpy(double coeff, DenseVector& acc) const {
    for (std::size_t k = 0; k < indices.size(); ++k) acc[indices[k]] += coeff * values[k];
  }

  double squared_norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
  }

  double norm() const { return std::sqrt(squared_norm()); }

  std::size_t nnz() const { return indices.size(); }

  void check_invariants() const {
    if (indices.size() != values.size())
      throw std::invalid_argument("SparseRow: index/value length mismatch");
    int prev = -1;
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (indices[k] <= prev) throw std::invalid_argument("SparseRow: indices not strictly increasing");
      if (indices[k] >= dim) throw std::invalid_argument("SparseRow: index out of range");
      if (values[k] == 0.0) throw std::invalid_argument("SparseRow: stored zero value");
      prev = indices[k];
    }
  }
};

struct OracleCounter {
  long long grad_evals = 0;
  long long prox_calls = 0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, long line)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

}  // namespace hsgd
