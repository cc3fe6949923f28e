#pragma once

#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hsgd/core.hpp"
#include "hsgd/estimator.hpp"
#include "hsgd/problem.hpp"

namespace hsgd {

// Exhaustive-enumeration oracles for the hybrid estimator identities on tiny
// finite sums. They average one hybrid update over every equiprobable
// (B_t, B^_t) pair and deliberately share no code with hybrid_update's
// closed-form expectations.

inline long long binomial(long n, long k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (long j = 1; j <= k; ++j) {
    r = r * (n - k + j) / j;
    if (r < 0) return -1;  // overflow guard
  }
  return r;
}

constexpr long long kEnumerationGuard = 1000000;

inline void for_each_subset(long n, long k, const std::function<void(const std::vector<long>&)>& fn) {
  std::vector<long> idx(static_cast<std::size_t>(k));
  for (long j = 0; j < k; ++j) idx[static_cast<std::size_t>(j)] = j;
  while (true) {
    fn(idx);
    long j = k - 1;
    while (j >= 0 && idx[static_cast<std::size_t>(j)] == n - k + j) --j;
    if (j < 0) return;
    ++idx[static_cast<std::size_t>(j)];
    for (long l = j + 1; l < k; ++l)
      idx[static_cast<std::size_t>(l)] = idx[static_cast<std::size_t>(l - 1)] + 1;
  }
}

namespace detail {

struct EnumerationContext {
  long n = 0;
  std::size_t p = 0;
  std::vector<DenseVector> grad_new;    // grad f_i(x_t)
  std::vector<DenseVector> grad_prev;   // grad f_i(x_{t-1})
  DenseVector mean_new, mean_prev;      // full gradients
};

inline EnumerationContext make_context(const CompositeProblem& problem, const DenseVector& x_prev,
                                       const DenseVector& x_t, long b, long b_hat) {
  if (!problem.finite_sum())
    throw std::invalid_argument("enumeration oracle: finite-sum mode required");
  const long n = problem.n();
  const long long pairs = binomial(n, b) * binomial(n, b_hat);
  if (pairs < 0 || pairs > kEnumerationGuard)
    throw std::length_error("enumeration oracle: too many batch pairs");
  EnumerationContext ctx;
  ctx.n = n;
  ctx.p = x_t.size();
  ctx.grad_new.assign(static_cast<std::size_t>(n), DenseVector(ctx.p, 0.0));
  ctx.grad_prev.assign(static_cast<std::size_t>(n), DenseVector(ctx.p, 0.0));
  ctx.mean_new.assign(ctx.p, 0.0);
  ctx.mean_prev.assign(ctx.p, 0.0);
  for (long i = 0; i < n; ++i) {
    problem.family->component_grad_axpy(i, x_t, 1.0, ctx.grad_new[static_cast<std::size_t>(i)]);
    problem.family->component_grad_axpy(i, x_prev, 1.0, ctx.grad_prev[static_cast<std::size_t>(i)]);
    axpy(1.0 / n, ctx.grad_new[static_cast<std::size_t>(i)], ctx.mean_new);
    axpy(1.0 / n, ctx.grad_prev[static_cast<std::size_t>(i)], ctx.mean_prev);
  }
  return ctx;
}

// v for one realized (B, B^) pair
inline DenseVector realized_estimate(const EnumerationContext& ctx, const DenseVector& v_prev,
                                     double beta, const std::vector<long>& sarah,
                                     const std::vector<long>& sgd) {
  DenseVector v(ctx.p, 0.0);
  axpy(beta, v_prev, v);
  const double wb = beta / static_cast<double>(sarah.size());
  for (long i : sarah) {
    axpy(wb, ctx.grad_new[static_cast<std::size_t>(i)], v);
    axpy(-wb, ctx.grad_prev[static_cast<std::size_t>(i)], v);
  }
  const double wu = (1.0 - beta) / static_cast<double>(sgd.size());
  for (long j : sgd) axpy(wu, ctx.grad_new[static_cast<std::size_t>(j)], v);
  return v;
}

}  // namespace detail

// Exact E[v_t] over all equiprobable (B_t, B^_t) pairs.
inline DenseVector expected_estimate_oracle(const CompositeProblem& problem,
                                            const DenseVector& v_prev, const DenseVector& x_prev,
                                            const DenseVector& x_t, double beta, long b,
                                            long b_hat) {
  const auto ctx = detail::make_context(problem, x_prev, x_t, b, b_hat);
  DenseVector mean(ctx.p, 0.0);
  long long count = 0;
  for_each_subset(ctx.n, b, [&](const std::vector<long>& sarah) {
    for_each_subset(ctx.n, b_hat, [&](const std::vector<long>& sgd) {
      axpy(1.0, detail::realized_estimate(ctx, v_prev, beta, sarah, sgd), mean);
      ++count;
    });
  });
  scale(mean, 1.0 / static_cast<double>(count));
  return mean;
}

struct VarianceIdentity {
  double lhs = 0.0;  // enumerated E||v_t - grad f(x_t)||^2
  double rhs = 0.0;  // closed form of the one-step variance identity
};

// lhs by exhaustive enumeration; rhs the closed form
//   beta^2 ||v_{t-1}-g_{t-1}||^2 - rho beta^2 ||g_t-g_{t-1}||^2
//   + rho beta^2 E_xi ||grad f_xi(x_t)-grad f_xi(x_{t-1})||^2
//   + (1-beta)^2 E ||u_t - g_t||^2,
// with rho = (n-b)/((n-1) b) and the u_t term enumerated over B^_t.
inline VarianceIdentity variance_recursion_oracle(const CompositeProblem& problem,
                                                  const DenseVector& v_prev,
                                                  const DenseVector& x_prev, const DenseVector& x_t,
                                                  double beta, long b, long b_hat) {
  const auto ctx = detail::make_context(problem, x_prev, x_t, b, b_hat);
  VarianceIdentity out;

  long long count = 0;
  for_each_subset(ctx.n, b, [&](const std::vector<long>& sarah) {
    for_each_subset(ctx.n, b_hat, [&](const std::vector<long>& sgd) {
      const DenseVector v = detail::realized_estimate(ctx, v_prev, beta, sarah, sgd);
      out.lhs += squared_distance(v, ctx.mean_new);
      ++count;
    });
  });
  out.lhs /= static_cast<double>(count);

  const double rho = rho_factor_finite(ctx.n, b);
  double e_component_diff = 0.0;  // E_xi ||grad f_xi(x_t) - grad f_xi(x_{t-1})||^2
  for (long i = 0; i < ctx.n; ++i)
    e_component_diff += squared_distance(ctx.grad_new[static_cast<std::size_t>(i)],
                                         ctx.grad_prev[static_cast<std::size_t>(i)]);
  e_component_diff /= static_cast<double>(ctx.n);

  double e_sgd_var = 0.0;  // E_{B^} || u_t - g_t ||^2
  long long sgd_count = 0;
  for_each_subset(ctx.n, b_hat, [&](const std::vector<long>& sgd) {
    DenseVector u(ctx.p, 0.0);
    for (long j : sgd) axpy(1.0 / static_cast<double>(b_hat), ctx.grad_new[static_cast<std::size_t>(j)], u);
    e_sgd_var += squared_distance(u, ctx.mean_new);
    ++sgd_count;
  });
  e_sgd_var /= static_cast<double>(sgd_count);

  const double b2 = beta * beta;
  out.rhs = b2 * squared_distance(v_prev, ctx.mean_prev) -
            rho * b2 * squared_distance(ctx.mean_new, ctx.mean_prev) +
            rho * b2 * e_component_diff + (1.0 - beta) * (1.0 - beta) * e_sgd_var;
  return out;
}

}  // namespace hsgd
