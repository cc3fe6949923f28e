#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hsgd/core.hpp"
#include "hsgd/problem.hpp"
#include "hsgd/rng.hpp"

namespace hsgd {

// One iteration's sample pair: the SARAH difference batch B_t and the
// independent unbiased-leg batch B^_t. The unbiased leg is the plain SGD
// estimator here; the slot generalizes to any unbiased estimator (SVRG or
// SAGA legs would plug in the same way) but only the SGD leg is provided.
struct SampleDraw {
  std::vector<long> sarah_batch;
  std::vector<long> sgd_batch;
};

struct HybridEstimatorState {
  DenseVector v;       // current estimate v_t
  DenseVector x_prev;  // x_{t-1}
  double beta = 0.0;
  long b = 1;
  long b_hat = 1;
  long long sgd_evals = 0;

  void check_invariants(long n) const {
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("estimator: beta outside [0,1]");
    if (b < 1 || b_hat < 1) throw std::invalid_argument("estimator: batch sizes must be >= 1");
    if (n > 0 && (b > n || b_hat > n)) throw std::invalid_argument("estimator: batch larger than n");
    if (!all_finite(v)) throw std::invalid_argument("estimator: non-finite estimate");
  }
};

// rho factor of Lemma-style mini-batch variance identities:
// (n - b) / ((n - 1) b) for a finite sum of n components, 1/b otherwise.
inline double rho_factor_finite(long n, long b) {
  if (b < 1) throw std::invalid_argument("rho_factor: b must be >= 1");
  if (b > n) throw std::invalid_argument("rho_factor: b must be <= n");
  if (b == n) return 0.0;
  return static_cast<double>(n - b) / (static_cast<double>(n - 1) * static_cast<double>(b));
}

inline double rho_factor_expectation(long b) {
  if (b < 1) throw std::invalid_argument("rho_factor: b must be >= 1");
  return 1.0 / static_cast<double>(b);
}

inline double rho_factor(const CompositeProblem& problem, long b) {
  return problem.finite_sum() ? rho_factor_finite(problem.n(), b) : rho_factor_expectation(b);
}

struct InitEstimate {
  DenseVector v0;
  HybridEstimatorState state;
  long b_tilde_effective = 0;  // min(b_tilde, n) in the finite-sum setting
  bool exact_full_gradient = false;
};

// v_0 = (1/b~) sum_{i in B~} grad f_i(x0). A finite-sum batch of size >= n
// switches to the exact full gradient. Batches are drawn without replacement
// for finite sums, with replacement from the sampler otherwise.
inline InitEstimate init_estimate(const CompositeProblem& problem, const DenseVector& x0,
                                  long b_tilde, RngStream& rng) {
  if (b_tilde < 1) throw std::invalid_argument("init_estimate: b_tilde must be >= 1");
  InitEstimate out;
  const std::size_t p = x0.size();
  out.v0.assign(p, 0.0);
  if (problem.finite_sum()) {
    const long n = problem.n();
    if (b_tilde >= n) {
      out.b_tilde_effective = n;
      out.exact_full_gradient = true;
      const double w = 1.0 / static_cast<double>(n);
      for (long i = 0; i < n; ++i) problem.family->component_grad_axpy(i, x0, w, out.v0);
    } else {
      out.b_tilde_effective = b_tilde;
      const auto batch = sample_without_replacement(rng, n, b_tilde);
      const double w = 1.0 / static_cast<double>(b_tilde);
      for (long i : batch) problem.family->component_grad_axpy(i, x0, w, out.v0);
    }
  } else {
    out.b_tilde_effective = b_tilde;
    const double w = 1.0 / static_cast<double>(b_tilde);
    for (long k = 0; k < b_tilde; ++k)
      problem.family->component_grad_axpy(problem.family->draw(rng), x0, w, out.v0);
  }
  out.state.v = out.v0;
  out.state.x_prev = x0;
  out.state.sgd_evals = out.b_tilde_effective;
  return out;
}

inline SampleDraw draw_batches(const CompositeProblem& problem, long b, long b_hat,
                               std::uint64_t seed, std::uint64_t stage, std::uint64_t iteration) {
  SampleDraw draw;
  auto sarah_rng = make_stream(seed, stage, iteration, StreamLeg::kSarah);
  auto sgd_rng = make_stream(seed, stage, iteration, StreamLeg::kSgd);
  if (problem.finite_sum()) {
    const long n = problem.n();
    draw.sarah_batch = sample_without_replacement(sarah_rng, n, b);
    draw.sgd_batch = sample_without_replacement(sgd_rng, n, b_hat);
  } else {
    draw.sarah_batch.reserve(static_cast<std::size_t>(b));
    for (long k = 0; k < b; ++k) draw.sarah_batch.push_back(problem.family->draw(sarah_rng));
    draw.sgd_batch.reserve(static_cast<std::size_t>(b_hat));
    for (long k = 0; k < b_hat; ++k) draw.sgd_batch.push_back(problem.family->draw(sgd_rng));
  }
  return draw;
}

// v_t = beta v_{t-1} + (beta/b) sum_{i in B} [grad f_i(x_t) - grad f_i(x_{t-1})]
//       + ((1-beta)/b^) sum_{j in B^} grad f_j(x_t).
// Mutates state (v, x_prev) and charges 2b + b^ gradient evaluations.
inline const DenseVector& hybrid_update(HybridEstimatorState& state, const DenseVector& x_new,
                                        const SampleDraw& draw, const CompositeProblem& problem) {
  if (x_new.size() != state.x_prev.size() || x_new.size() != state.v.size())
    throw std::invalid_argument("hybrid_update: dimension mismatch");
  if (draw.sarah_batch.empty() || draw.sgd_batch.empty())
    throw std::invalid_argument("hybrid_update: empty batch");
  const double beta = state.beta;
  const long b = static_cast<long>(draw.sarah_batch.size());
  const long b_hat = static_cast<long>(draw.sgd_batch.size());
  const std::size_t p = x_new.size();

  // The difference leg accumulates in its own buffer with the +/- pair
  // adjacent per index, so at x_new == x_prev it cancels to exact zero and
  // the beta = 1 / beta = 0 limits reproduce SARAH and SGD bit-for-bit.
  DenseVector diff(p, 0.0);
  for (long i : draw.sarah_batch) {
    problem.family->component_grad_axpy(i, x_new, 1.0, diff);
    problem.family->component_grad_axpy(i, state.x_prev, -1.0, diff);
  }
  DenseVector unbiased(p, 0.0);
  for (long j : draw.sgd_batch) problem.family->component_grad_axpy(j, x_new, 1.0, unbiased);

  DenseVector sarah_leg = state.v;
  axpy(1.0 / static_cast<double>(b), diff, sarah_leg);
  const double wu = (1.0 - beta) / static_cast<double>(b_hat);
  DenseVector vn(p);
  for (std::size_t j = 0; j < p; ++j) vn[j] = beta * sarah_leg[j] + wu * unbiased[j];

  state.v = std::move(vn);
  state.x_prev = x_new;
  state.sgd_evals += 2 * b + b_hat;
  return state.v;
}

// ---------------------------------------------------------------------------
// Variance bookkeeping of the running products from the variance bound:
//   omega_t   = prod_{j<t} beta_j^2
//   omega_it  = prod_{j>i} beta_j^2   (tail products, one per step)
//   S_t       = sum_i (prod_{j>=i+1} beta_j^2) (1-beta_i)^2 sigma^2_{i+1}
struct VarianceDiagnostics {
  double omega_t = 1.0;
  std::vector<double> omega_it;
  double s_t = 0.0;
  double rho = 0.0;
  double rho_hat = 0.0;

  void advance(double beta, double sigma_sq_next) {
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("diagnostics: beta outside [0,1]");
    if (sigma_sq_next < 0.0) throw std::invalid_argument("diagnostics: negative sigma^2");
    const double b2 = beta * beta;
    omega_t *= b2;
    for (double& w : omega_it) w *= b2;
    omega_it.push_back(b2);
    s_t = b2 * s_t + (1.0 - beta) * (1.0 - beta) * sigma_sq_next;
  }

  std::size_t steps() const { return omega_it.size(); }
};

// Upper bound on E||v_t - grad f(x_t)||^2:
//   omega_t * gap0 + rho L^2 sum_i omega_it * E||x_{i+1}-x_i||^2 + rho_hat S_t.
// step_history carries E||x_{i+1}-x_i||^2 for i = 0..t-1; sigma_sq_history the
// per-step sigma^2_{i+1} already folded into the diagnostics (lengths must
// agree with the number of advanced steps).
inline double variance_upper_bound(const VarianceDiagnostics& diag, double initial_gap,
                                   const std::vector<double>& step_history, double smoothness,
                                   const std::vector<double>& sigma_sq_history) {
  if (initial_gap < 0.0 || smoothness < 0.0)
    throw std::invalid_argument("variance_upper_bound: negative inputs");
  if (step_history.size() != diag.steps() || sigma_sq_history.size() != diag.steps())
    throw std::invalid_argument("variance_upper_bound: histories misaligned");
  for (double s : step_history)
    if (s < 0.0) throw std::invalid_argument("variance_upper_bound: negative inputs");
  for (double s : sigma_sq_history)
    if (s < 0.0) throw std::invalid_argument("variance_upper_bound: negative inputs");
  double mid = 0.0;
  for (std::size_t i = 0; i < step_history.size(); ++i) mid += diag.omega_it[i] * step_history[i];
  return diag.omega_t * initial_gap + diag.rho * smoothness * smoothness * mid + diag.rho_hat * diag.s_t;
}

}  // namespace hsgd
