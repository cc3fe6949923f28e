#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "hsgd/core.hpp"

namespace hsgd {

// Convex regularizers with exact proximal maps:
//   Zero        psi = 0
//   L1          psi = lambda * ||x||_1
//   NonNegBall  psi = indicator of { x >= 0, ||x|| <= 1 }
struct Regularizer {
  enum class Kind { kZero, kL1, kNonNegBall };

  Kind kind = Kind::kZero;
  double lambda = 0.0;

  static Regularizer zero() { return {Kind::kZero, 0.0}; }
  static Regularizer l1(double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("l1: lambda must be >= 0");
    return {Kind::kL1, lambda};
  }
  static Regularizer nonneg_ball() { return {Kind::kNonNegBall, 0.0}; }

  bool is_indicator() const { return kind == Kind::kNonNegBall; }
};

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

inline void prox_inplace(const Regularizer& reg, DenseVector& x, double step) {
  if (step <= 0.0) throw std::invalid_argument("prox: step must be positive");
  switch (reg.kind) {
    case Regularizer::Kind::kZero:
      return;
    case Regularizer::Kind::kL1: {
      const double t = step * reg.lambda;
      for (double& v : x) v = soft_threshold(v, t);
      return;
    }
    case Regularizer::Kind::kNonNegBall: {
      double sq = 0.0;
      for (double& v : x) {
        if (v < 0.0) v = 0.0;
        sq += v * v;
      }
      if (sq > 1.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (double& v : x) v *= inv;
      }
      return;
    }
  }
}

inline DenseVector prox(const Regularizer& reg, const DenseVector& x, double step) {
  DenseVector out = x;
  prox_inplace(reg, out, step);
  return out;
}

// psi(x); +infinity sentinel for infeasible points of an indicator.
inline double regularizer_value(const Regularizer& reg, const DenseVector& x) {
  switch (reg.kind) {
    case Regularizer::Kind::kZero:
      return 0.0;
    case Regularizer::Kind::kL1: {
      double s = 0.0;
      for (double v : x) s += std::fabs(v);
      return reg.lambda * s;
    }
    case Regularizer::Kind::kNonNegBall: {
      constexpr double kFeasTol = 1e-12;
      double sq = 0.0;
      for (double v : x) {
        if (v < -kFeasTol) return kInfinity;
        sq += v * v;
      }
      return sq <= 1.0 + 1e-10 ? 0.0 : kInfinity;
    }
  }
  return 0.0;
}

inline const char* regularizer_name(const Regularizer& reg) {
  switch (reg.kind) {
    case Regularizer::Kind::kZero: return "none";
    case Regularizer::Kind::kL1: return "l1";
    case Regularizer::Kind::kNonNegBall: return "nonneg_ball";
  }
  return "?";
}

inline Regularizer regularizer_from_name(const std::string& name, double lambda) {
  if (name == "none" || name == "zero") return Regularizer::zero();
  if (name == "l1") return Regularizer::l1(lambda);
  if (name == "nonneg_ball") return Regularizer::nonneg_ball();
  throw std::invalid_argument("unknown regularizer: " + name);
}

}  // namespace hsgd
