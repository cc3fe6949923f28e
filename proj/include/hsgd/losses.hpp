#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace hsgd {

// Scalar losses for binary classification, l(s, tau) with label tau in {-1,+1},
// plus the NN-PCA tag whose components are handled by NnPcaFamily.
enum class LossKind {
  kSigmoid,       // 1 - tanh(tau*s)
  kTwoLayer,      // (1 - sigmoid(tau*s))^2
  kLogisticDiff,  // log(1+e^{-tau s}) - log(1+e^{-tau s - 1})
  kLorenz,        // log(1 + (tau s - 1)^2) on tau s <= 1, else 0
  kNnPca,
};

// Per-tag smoothness moduli; the classification constants assume unit-norm rows.
inline double loss_smoothness(LossKind kind) {
  switch (kind) {
    case LossKind::kSigmoid: return 0.7698;
    case LossKind::kTwoLayer: return 0.15405;
    case LossKind::kLogisticDiff: return 0.092372;
    case LossKind::kLorenz: return 4.0;
    case LossKind::kNnPca: return 1.0;
  }
  throw std::invalid_argument("loss_smoothness: unknown kind");
}

inline const char* loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::kSigmoid: return "sigmoid";
    case LossKind::kTwoLayer: return "two_layer";
    case LossKind::kLogisticDiff: return "logistic_diff";
    case LossKind::kLorenz: return "lorenz";
    case LossKind::kNnPca: return "nnpca";
  }
  return "?";
}

inline LossKind loss_from_name(const std::string& name) {
  if (name == "sigmoid") return LossKind::kSigmoid;
  if (name == "two_layer") return LossKind::kTwoLayer;
  if (name == "logistic_diff") return LossKind::kLogisticDiff;
  if (name == "lorenz") return LossKind::kLorenz;
  if (name == "nnpca") return LossKind::kNnPca;
  throw std::invalid_argument("unknown loss: " + name);
}

namespace detail {
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
// log(1 + e^x), overflow-safe
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}
}  // namespace detail

struct LossEval {
  double value;
  double slope;  // d/ds
};

inline LossEval loss_value_and_slope(LossKind kind, double s, double tau) {
  if (!std::isfinite(s)) throw std::domain_error("loss_value_and_slope: non-finite margin");
  const double u = tau * s;
  switch (kind) {
    case LossKind::kSigmoid: {
      const double t = std::tanh(u);
      return {1.0 - t, -tau * (1.0 - t * t)};
    }
    case LossKind::kTwoLayer: {
      const double sg = detail::sigmoid(u);
      const double r = 1.0 - sg;
      return {r * r, -2.0 * tau * sg * r * r};
    }
    case LossKind::kLogisticDiff: {
      const double value = detail::softplus(-u) - detail::softplus(-u - 1.0);
      const double slope = tau * (detail::sigmoid(-u - 1.0) - detail::sigmoid(-u));
      return {value, slope};
    }
    case LossKind::kLorenz: {
      if (u > 1.0) return {0.0, 0.0};
      const double w = u - 1.0;
      return {std::log1p(w * w), tau * 2.0 * w / (1.0 + w * w)};
    }
    case LossKind::kNnPca:
      break;
  }
  throw std::invalid_argument("loss_value_and_slope: kind has no scalar loss");
}

}  // namespace hsgd
