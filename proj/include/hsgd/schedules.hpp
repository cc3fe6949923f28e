#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace hsgd {

// Parameter plans. Formulas follow the convergence statements verbatim; every
// constructor rejects inputs that leave the guaranteed ranges.

struct ConstantPlan {
  double beta = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
  long b_tilde = 1;
  long m = 0;
  double c1 = 0.0;  // 0 when b_tilde was given directly
};

struct AdaptivePlan {
  double eta = 0.0;
  double delta = 0.0;  // 2/eta - 2L
  double beta = 0.0;
  std::vector<double> gammas;  // gamma_0 .. gamma_m, strictly increasing
  double sigma_m = 0.0;        // sum of gammas
  long b = 1;
};

struct RestartPlan {
  long stages = 1;  // S
  long m = 0;
  long b_tilde = 1;
  double beta = 0.0;
  double eta = 0.0;
  double c1 = 1.0;
  double epsilon = 0.0;
};

struct MiniBatchPlan {
  double beta = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
  long b = 1;
  long b_hat = 1;
  long b_tilde = 1;
  long m = 0;
  double c0 = 1.0;
  double c1 = 0.0;
};

// beta = 1 - 1/sqrt(b~(m+1)), gamma = 3/(sqrt(13) (b~(m+1))^{1/4}),
// eta = 2/((3+gamma) L).
inline ConstantPlan constant_plan(double smoothness, long b_tilde, long m) {
  if (smoothness <= 0.0) throw std::invalid_argument("constant_plan: L must be positive");
  if (b_tilde < 1 || m < 0) throw std::invalid_argument("constant_plan: b_tilde >= 1, m >= 0");
  const double budget = static_cast<double>(b_tilde) * static_cast<double>(m + 1);
  ConstantPlan plan;
  plan.b_tilde = b_tilde;
  plan.m = m;
  plan.beta = 1.0 - 1.0 / std::sqrt(budget);
  if (plan.beta <= 0.0)
    throw std::invalid_argument("constant_plan: b_tilde(m+1) too small, beta must be positive");
  plan.gamma = 3.0 / (std::sqrt(13.0) * std::pow(budget, 0.25));
  plan.eta = 2.0 / ((3.0 + plan.gamma) * smoothness);
  return plan;
}

// b~ = ceil(c1^2 (m+1)^{1/3}) with c1 >= 1/(m+1)^{2/3}.
inline ConstantPlan constant_plan_from_c1(double smoothness, double c1, long m) {
  if (c1 <= 0.0) throw std::invalid_argument("constant_plan: c1 must be positive");
  const double m1 = static_cast<double>(m + 1);
  if (c1 < 1.0 / std::pow(m1, 2.0 / 3.0))
    throw std::invalid_argument("constant_plan: c1 below 1/(m+1)^{2/3}");
  const long b_tilde = static_cast<long>(std::ceil(c1 * c1 * std::cbrt(m1)));
  ConstantPlan plan = constant_plan(smoothness, b_tilde, m);
  plan.c1 = c1;
  return plan;
}

// Backward recursion gamma_m = delta/L,
// gamma_t = delta b / (L b + L(1+L^2 eta^2) [beta^2 gamma_{t+1} + ... + beta^{2(m-t)} gamma_m]),
// evaluated in O(m) by carrying the weighted tail sum.
inline AdaptivePlan adaptive_gammas(double smoothness, double eta, double beta, long m, long b = 1) {
  if (smoothness <= 0.0) throw std::invalid_argument("adaptive_gammas: L must be positive");
  if (eta <= 0.0 || eta >= 1.0 / smoothness)
    throw std::invalid_argument("adaptive_gammas: eta must lie in (0, 1/L)");
  if (beta <= 0.0 || beta >= 1.0) throw std::invalid_argument("adaptive_gammas: beta must lie in (0,1)");
  if (m < 0 || b < 1) throw std::invalid_argument("adaptive_gammas: m >= 0, b >= 1");
  AdaptivePlan plan;
  plan.eta = eta;
  plan.beta = beta;
  plan.b = b;
  plan.delta = 2.0 / eta - 2.0 * smoothness;
  const double l = smoothness;
  const double curv = l * (1.0 + l * l * eta * eta) / static_cast<double>(b);
  const double beta2 = beta * beta;
  plan.gammas.assign(static_cast<std::size_t>(m) + 1, 0.0);
  double tail = 0.0;  // beta^2 gamma_{t+1} + beta^4 gamma_{t+2} + ...
  plan.gammas[static_cast<std::size_t>(m)] = plan.delta / l;
  for (long t = m - 1; t >= 0; --t) {
    tail = beta2 * (plan.gammas[static_cast<std::size_t>(t + 1)] + tail);
    plan.gammas[static_cast<std::size_t>(t)] = plan.delta / (l + curv * tail);
  }
  double sum = 0.0;
  for (double g : plan.gammas) sum += g;
  plan.sigma_m = sum;
  return plan;
}

// Guaranteed lower bound on Sigma_m = sum gamma_t:
//   delta (m+1) sqrt(1-omega) / (L [sqrt(1-omega) + sqrt(1-omega+4 delta omega eps)]),
// with omega = beta^2 and eps the recursion's curvature coefficient
// ((1+L^2 eta^2)/(L b) in the solver's instantiation).
inline double sigma_lower_bound(double smoothness, double delta, double epsilon_coef, double omega,
                                long m) {
  if (omega <= 0.0 || omega >= 1.0) throw std::invalid_argument("sigma_lower_bound: omega in (0,1)");
  if (smoothness <= 0.0 || delta <= 0.0 || epsilon_coef < 0.0)
    throw std::invalid_argument("sigma_lower_bound: positive inputs required");
  const double root = std::sqrt(1.0 - omega);
  const double wide = std::sqrt(1.0 - omega + 4.0 * delta * omega * epsilon_coef);
  return delta * static_cast<double>(m + 1) * root / (smoothness * (root + wide));
}

// Restart sizes: b~ = ceil(16 c1 max{1,sigma^2} / (L^2 eta^2 eps^2)),
// m+1 = ceil(16 max{1,sigma^2} / (c1 L^2 eta^2 eps^2)),
// S = floor(4 sqrt(2) c1 (L + sqrt(L delta)) Delta_F / (delta eta eps)).
inline RestartPlan restart_plan(double smoothness, double eta, double sigma, double epsilon,
                                double c1, double delta_f_hint, long stages_override = 0) {
  if (smoothness <= 0.0) throw std::invalid_argument("restart_plan: L must be positive");
  if (eta <= 0.0 || eta >= 1.0 / smoothness)
    throw std::invalid_argument("restart_plan: eta must lie in (0, 1/L)");
  if (epsilon <= 0.0) throw std::invalid_argument("restart_plan: epsilon must be positive");
  if (c1 <= 0.0) throw std::invalid_argument("restart_plan: c1 must be positive");
  const double l = smoothness;
  const double delta = 2.0 / eta - 2.0 * l;
  const double noise = std::max(1.0, sigma * sigma);
  const double denom = l * l * eta * eta * epsilon * epsilon;
  RestartPlan plan;
  plan.eta = eta;
  plan.c1 = c1;
  plan.epsilon = epsilon;
  plan.b_tilde = static_cast<long>(std::ceil(16.0 * c1 * noise / denom));
  const long m1 = static_cast<long>(std::ceil(16.0 * noise / (c1 * denom)));
  plan.m = m1 - 1;
  if (stages_override > 0) {
    plan.stages = stages_override;
  } else {
    const double s = std::floor(4.0 * std::sqrt(2.0) * c1 * (l + std::sqrt(l * delta)) *
                                delta_f_hint / (delta * eta * epsilon));
    plan.stages = std::max(1L, static_cast<long>(s));
  }
  plan.beta = 1.0 - 1.0 / std::sqrt(static_cast<double>(plan.b_tilde) * static_cast<double>(plan.m + 1));
  return plan;
}

// beta = 1 - sqrt(b^)/sqrt(b~(m+1)),
// gamma = 3 c0 b^{1/4} b^{1/2} / (sqrt(13) (b~(m+1))^{1/4}), eta = 2/(L(3+gamma)).
inline MiniBatchPlan minibatch_constant_plan(double smoothness, long b, long b_hat, long b_tilde,
                                             long m, double c0) {
  if (smoothness <= 0.0) throw std::invalid_argument("minibatch_plan: L must be positive");
  if (b < 1 || b_hat < 1 || b_tilde < 1 || m < 0)
    throw std::invalid_argument("minibatch_plan: sizes must be positive");
  const double budget = static_cast<double>(b_tilde) * static_cast<double>(m + 1);
  if (static_cast<double>(b_hat) > budget)
    throw std::invalid_argument("minibatch_plan: need b_hat <= b_tilde(m+1)");
  if (c0 <= 0.0 || c0 > std::sqrt(13.0) / (3.0 * std::sqrt(static_cast<double>(b))))
    throw std::invalid_argument("minibatch_plan: need 0 < c0 <= sqrt(13)/(3 sqrt(b))");
  MiniBatchPlan plan;
  plan.b = b;
  plan.b_hat = b_hat;
  plan.b_tilde = b_tilde;
  plan.m = m;
  plan.c0 = c0;
  plan.beta = 1.0 - std::sqrt(static_cast<double>(b_hat)) / std::sqrt(budget);
  if (plan.beta <= 0.0)
    throw std::invalid_argument("minibatch_plan: beta must be positive (b_hat = b_tilde(m+1) boundary)");
  plan.gamma = 3.0 * c0 * std::pow(static_cast<double>(b_hat), 0.25) *
               std::sqrt(static_cast<double>(b)) / (std::sqrt(13.0) * std::pow(budget, 0.25));
  plan.eta = 2.0 / (smoothness * (3.0 + plan.gamma));
  return plan;
}

struct GradDominantPlan {
  long m = 0;
  long b_tilde = 1;
  bool deterministic_regime = false;  // sigma = 0 degenerate case
};

// m+1 = ceil(32 (L+sqrt(L delta)) tau^{3/2} sigma / (L^2 eta^3 delta sqrt(eps))),
// b~  = ceil(2 delta tau^{1/2} sigma^3 / (L^2 (L+sqrt(L delta)) eta eps^{3/2})).
inline GradDominantPlan grad_dominant_plan(double smoothness, double eta, double sigma, double tau,
                                           double epsilon) {
  if (tau <= 0.0 || epsilon <= 0.0) throw std::invalid_argument("grad_dominant_plan: tau, eps > 0");
  if (smoothness <= 0.0 || eta <= 0.0 || eta >= 1.0 / smoothness)
    throw std::invalid_argument("grad_dominant_plan: eta must lie in (0, 1/L)");
  GradDominantPlan plan;
  if (sigma == 0.0) {
    plan.deterministic_regime = true;
    return plan;
  }
  const double l = smoothness;
  const double delta = 2.0 / eta - 2.0 * l;
  const double mix = l + std::sqrt(l * delta);
  const double m1 = 32.0 * mix * std::pow(tau, 1.5) * sigma /
                    (l * l * eta * eta * eta * delta * std::sqrt(epsilon));
  plan.m = static_cast<long>(std::ceil(m1)) - 1;
  plan.b_tilde = static_cast<long>(
      std::ceil(2.0 * delta * std::sqrt(tau) * sigma * sigma * sigma /
                (l * l * mix * eta * std::pow(epsilon, 1.5))));
  if (plan.b_tilde < 1) plan.b_tilde = 1;
  if (plan.m < 0) plan.m = 0;
  return plan;
}

// Non-composite combined step: alpha_m = beta^2 (1-beta^{2m})/(1-beta^2),
// eta^ = 2 / (L (1 + sqrt(1 + 4 alpha_m^2))).
inline double noncomposite_stepsize(double smoothness, double beta, long m) {
  if (beta <= 0.0 || beta >= 1.0) throw std::invalid_argument("noncomposite_stepsize: beta in (0,1)");
  if (smoothness <= 0.0 || m < 0) throw std::invalid_argument("noncomposite_stepsize: L > 0, m >= 0");
  const double b2 = beta * beta;
  const double alpha = b2 * (1.0 - std::pow(b2, static_cast<double>(m))) / (1.0 - b2);
  return 2.0 / (smoothness * (1.0 + std::sqrt(1.0 + 4.0 * alpha * alpha)));
}

// eta_t = eta0 / (1 + eta' floor(t/n)) for the scheduled-diminishing baseline.
inline double scheduled_sgd_stepsize(double eta0, double eta_prime, long t, long n) {
  if (eta0 <= 0.0 || eta_prime < 0.0 || n < 1)
    throw std::invalid_argument("scheduled_sgd_stepsize: eta0 > 0, eta' >= 0, n >= 1");
  return eta0 / (1.0 + eta_prime * static_cast<double>(t / n));
}

// Batch suggestion from the step-size trade-off: b ~ sqrt(13 c1) Delta_0^{1/2} / (3 c0 eps).
inline double suggested_minibatch(double c0, double c1, double delta0, double epsilon) {
  if (c0 <= 0.0 || c1 <= 0.0 || delta0 < 0.0 || epsilon <= 0.0)
    throw std::invalid_argument("suggested_minibatch: positive inputs required");
  return std::sqrt(13.0 * c1) * std::sqrt(delta0) / (3.0 * c0 * epsilon);
}

// ---------------------------------------------------------------------------
// Config-file (de)serialization

inline void to_json(nlohmann::json& j, const ConstantPlan& p) {
  j = {{"type", "constant"}, {"beta", p.beta},       {"gamma", p.gamma}, {"eta", p.eta},
       {"b_tilde", p.b_tilde}, {"m", p.m},           {"c1", p.c1}};
}
inline void from_json(const nlohmann::json& j, ConstantPlan& p) {
  j.at("beta").get_to(p.beta);
  j.at("gamma").get_to(p.gamma);
  j.at("eta").get_to(p.eta);
  j.at("b_tilde").get_to(p.b_tilde);
  j.at("m").get_to(p.m);
  p.c1 = j.value("c1", 0.0);
}

inline void to_json(nlohmann::json& j, const AdaptivePlan& p) {
  j = {{"type", "adaptive"}, {"eta", p.eta},  {"delta", p.delta}, {"beta", p.beta},
       {"gammas", p.gammas}, {"sigma_m", p.sigma_m}, {"b", p.b}};
}
inline void from_json(const nlohmann::json& j, AdaptivePlan& p) {
  j.at("eta").get_to(p.eta);
  j.at("delta").get_to(p.delta);
  j.at("beta").get_to(p.beta);
  j.at("gammas").get_to(p.gammas);
  j.at("sigma_m").get_to(p.sigma_m);
  j.at("b").get_to(p.b);
}

inline void to_json(nlohmann::json& j, const RestartPlan& p) {
  j = {{"type", "restart"}, {"stages", p.stages}, {"m", p.m},
       {"b_tilde", p.b_tilde}, {"beta", p.beta},  {"eta", p.eta},
       {"c1", p.c1},          {"epsilon", p.epsilon}};
}
inline void from_json(const nlohmann::json& j, RestartPlan& p) {
  j.at("stages").get_to(p.stages);
  j.at("m").get_to(p.m);
  j.at("b_tilde").get_to(p.b_tilde);
  j.at("beta").get_to(p.beta);
  j.at("eta").get_to(p.eta);
  j.at("c1").get_to(p.c1);
  j.at("epsilon").get_to(p.epsilon);
}

inline void to_json(nlohmann::json& j, const MiniBatchPlan& p) {
  j = {{"type", "minibatch"}, {"beta", p.beta}, {"gamma", p.gamma}, {"eta", p.eta},
       {"b", p.b},            {"b_hat", p.b_hat}, {"b_tilde", p.b_tilde}, {"m", p.m},
       {"c0", p.c0},          {"c1", p.c1}};
}
inline void from_json(const nlohmann::json& j, MiniBatchPlan& p) {
  j.at("beta").get_to(p.beta);
  j.at("gamma").get_to(p.gamma);
  j.at("eta").get_to(p.eta);
  j.at("b").get_to(p.b);
  j.at("b_hat").get_to(p.b_hat);
  j.at("b_tilde").get_to(p.b_tilde);
  j.at("m").get_to(p.m);
  p.c0 = j.value("c0", 1.0);
  p.c1 = j.value("c1", 0.0);
}

}  // namespace hsgd
