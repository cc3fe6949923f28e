#pragma once

#include <chrono>
#include <climits>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hsgd/core.hpp"
#include "hsgd/dataset.hpp"
#include "hsgd/estimator.hpp"
#include "hsgd/problem.hpp"
#include "hsgd/rng.hpp"
#include "hsgd/schedules.hpp"
#include "hsgd/trace.hpp"

namespace hsgd {

enum class Algorithm { kProxHsgd, kProxHsgdRestart, kProxSgd, kProxSvrg, kProxSpiderBoost };

enum class OutputRule { kUniformRandom, kGammaWeighted, kBestSoFar, kLastIterate };

// Fully resolved per-iteration schedule for one ProxHSGD stage; iterations run
// t = 0..m with (eta_t, gamma_t). Iteration 0 performs a hybrid update from
// the initial estimate at x_prev = x_0 (the SARAH leg difference is zero
// there), so a completed stage costs exactly
//   b_tilde_effective + (m+1)(2b + b_hat)
// component-gradient evaluations, matching the analysis' oracle counts.
struct ResolvedPlan {
  double beta = 0.0;
  long b = 1;
  long b_hat = 1;
  long b_tilde = 1;
  long m = 0;
  std::vector<double> etas;    // size m+1
  std::vector<double> gammas;  // size m+1
};

struct SgdParams {
  double eta0 = 0.01;
  double eta_prime = 0.0;  // 0 = constant step
  long batch = 1;
  long decay_period = 0;  // iterations per step decay; 0 = one data pass
};

struct SvrgParams {
  double eta = 0.0;     // 0 = 1/(3L)
  long batch = 0;       // 0 = floor(n^{2/3})
  long epoch_len = 0;   // 0 = ceil(n / batch)
};

struct SpiderBoostParams {
  double eta = 0.0;    // 0 = 1/(2L)
  long batch = 0;      // 0 = floor(sqrt(n))
  long epoch_len = 0;  // 0 = floor(sqrt(n))
};

struct SolverConfig {
  Algorithm algorithm = Algorithm::kProxHsgd;
  std::uint64_t seed = 0;
  long epoch_budget = 0;  // max epochs of component-gradient work; 0 = plan-driven
  OutputRule output_rule = OutputRule::kLastIterate;
  DenseVector x0;  // empty = problem default

  std::optional<ConstantPlan> constant;
  std::optional<AdaptivePlan> adaptive;
  std::optional<MiniBatchPlan> minibatch;
  std::optional<ResolvedPlan> custom;
  std::optional<RestartPlan> restart;
  long b_tilde = 0;  // adaptive-plan initial batch; 0 = derive from beta
  bool gradient_dominant = false;  // restart handoff: gamma-weighted random inner iterate

  SgdParams sgd;
  SvrgParams svrg;
  SpiderBoostParams spiderboost;
};

struct RunResult {
  DenseVector final_x;
  DenseVector output_x;
  RunTrace trace;
  OracleCounter oracle_counts;
  long long telemetry_grad_evals = 0;  // metric-only ledger, outside the budget
  long iterations_completed = 0;
  bool truncated_by_budget = false;
  bool exact_init_gradient = false;
  std::vector<DenseVector> iterates;       // only with Telemetry::keep_iterates
  std::vector<DenseVector> stage_outputs;  // restart: the handoff point of each stage
};

// Default start: normalized all-ones projected for indicator-constrained
// problems (keeps runs reproducible), zeros otherwise.
inline DenseVector default_start(const CompositeProblem& problem) {
  const int p = problem.dim();
  if (problem.reg.is_indicator()) {
    DenseVector x(static_cast<std::size_t>(p), 1.0 / std::sqrt(static_cast<double>(p)));
    prox_inplace(problem.reg, x, 1.0);
    return x;
  }
  return DenseVector(static_cast<std::size_t>(p), 0.0);
}

inline DenseVector select_output(const std::vector<DenseVector>& history, OutputRule rule,
                                 const std::vector<double>* weights, RngStream& rng,
                                 const std::vector<double>* gm_history = nullptr) {
  if (history.empty()) throw std::invalid_argument("select_output: empty history");
  switch (rule) {
    case OutputRule::kLastIterate:
      return history.back();
    case OutputRule::kUniformRandom:
      return history[static_cast<std::size_t>(rng.uniform_index(static_cast<long>(history.size())))];
    case OutputRule::kGammaWeighted: {
      if (weights == nullptr || weights->size() != history.size())
        throw std::invalid_argument("select_output: gamma weights required");
      double total = 0.0;
      for (double w : *weights) total += w;
      const double u = rng.uniform01() * total;
      double acc = 0.0;
      for (std::size_t t = 0; t < weights->size(); ++t) {
        acc += (*weights)[t];
        if (u < acc) return history[t];
      }
      return history.back();
    }
    case OutputRule::kBestSoFar: {
      if (gm_history == nullptr || gm_history->size() != history.size())
        throw std::invalid_argument("select_output: gradient-mapping history required");
      std::size_t best = 0;
      for (std::size_t t = 1; t < gm_history->size(); ++t)
        if ((*gm_history)[t] < (*gm_history)[best]) best = t;  // ties keep smallest index
      return history[best];
    }
  }
  throw std::invalid_argument("select_output: unknown rule");
}

namespace detail {

inline long weighted_index(RngStream& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double u = rng.uniform01() * total;
  double acc = 0.0;
  for (std::size_t t = 0; t < weights.size(); ++t) {
    acc += weights[t];
    if (u < acc) return static_cast<long>(t);
  }
  return static_cast<long>(weights.size()) - 1;
}

using Clock = std::chrono::steady_clock;

struct MetricRecorder {
  const CompositeProblem* problem = nullptr;
  const Telemetry* tele = nullptr;
  RunResult* result = nullptr;
  Clock::time_point start = Clock::now();
  double best_gm = kInfinity;
  DenseVector best_x;
  long stride = 1;

  bool active() const { return tele->enabled && problem->finite_sum(); }

  void record(const DenseVector& x, long long grad_evals, long iteration, long stage) {
    if (!active()) return;
    TraceRecord rec;
    const long n = problem->n();
    rec.epoch = static_cast<double>(grad_evals) / static_cast<double>(n);
    rec.iteration = iteration;
    rec.stage = stage;
    rec.objective = objective_value(*problem, x);
    const DenseVector grad = full_gradient(*problem, x);
    rec.gm_norm = norm(gradient_mapping(*problem, x, tele->metric_eta, grad));
    result->telemetry_grad_evals += n;  // metric cost ledger, outside the budget
    if (tele->train && !tele->train->labels.empty()) rec.train_acc = accuracy(x, *tele->train);
    if (tele->test && !tele->test->labels.empty()) rec.test_acc = accuracy(x, *tele->test);
    rec.wall_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
    if (rec.gm_norm < best_gm) {
      best_gm = rec.gm_norm;
      best_x = x;
    }
    result->trace.push_back(rec);
  }
};

inline long default_stride(long n, long cost_per_iteration, long requested) {
  if (requested > 0) return requested;
  if (n <= 0 || cost_per_iteration <= 0) return 1;
  return std::max(1L, n / cost_per_iteration);
}

// x <- (1 - gamma) x + gamma * prox_{eta psi}(x - eta v)
inline void averaged_prox_step(const CompositeProblem& problem, DenseVector& x,
                               const DenseVector& v, double eta, double gamma,
                               OracleCounter& counter) {
  DenseVector hat = x;
  axpy(-eta, v, hat);
  prox_inplace(problem.reg, hat, eta);
  ++counter.prox_calls;
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = (1.0 - gamma) * x[j] + gamma * hat[j];
}

inline ResolvedPlan resolve_hsgd_plan(const SolverConfig& cfg) {
  if (cfg.custom) {
    const auto& p = *cfg.custom;
    if (p.etas.size() != static_cast<std::size_t>(p.m + 1) ||
        p.gammas.size() != static_cast<std::size_t>(p.m + 1))
      throw std::invalid_argument("custom plan: schedule arrays must have m+1 entries");
    return p;
  }
  ResolvedPlan plan;
  if (cfg.constant) {
    const auto& c = *cfg.constant;
    plan.beta = c.beta;
    plan.b_tilde = c.b_tilde;
    plan.m = c.m;
    plan.etas.assign(static_cast<std::size_t>(c.m + 1), c.eta);
    plan.gammas.assign(static_cast<std::size_t>(c.m + 1), c.gamma);
    return plan;
  }
  if (cfg.minibatch) {
    const auto& c = *cfg.minibatch;
    plan.beta = c.beta;
    plan.b = c.b;
    plan.b_hat = c.b_hat;
    plan.b_tilde = c.b_tilde;
    plan.m = c.m;
    plan.etas.assign(static_cast<std::size_t>(c.m + 1), c.eta);
    plan.gammas.assign(static_cast<std::size_t>(c.m + 1), c.gamma);
    return plan;
  }
  if (cfg.adaptive) {
    const auto& c = *cfg.adaptive;
    plan.beta = c.beta;
    plan.b = c.b;
    plan.b_hat = c.b;
    plan.m = static_cast<long>(c.gammas.size()) - 1;
    plan.gammas = c.gammas;
    plan.etas.assign(c.gammas.size(), c.eta);
    if (cfg.b_tilde > 0) {
      plan.b_tilde = cfg.b_tilde;
    } else {
      // beta = 1 - 1/sqrt(b~(m+1)) pins the initial batch
      const double budget = 1.0 / ((1.0 - c.beta) * (1.0 - c.beta));
      plan.b_tilde = std::max(1L, static_cast<long>(std::llround(budget / static_cast<double>(plan.m + 1))));
    }
    return plan;
  }
  throw std::invalid_argument("prox_hsgd: no plan supplied");
}

struct StageResult {
  DenseVector last_x;       // x_{m+1}
  DenseVector selected_x;   // overall-output capture (if t_star hit)
  bool selected_hit = false;
  DenseVector stage_random_x;  // gamma-weighted in-stage pick (gradient-dominant handoff)
  long iterations = 0;
  bool truncated = false;
};

// One ProxHSGD stage; shared by the single-loop solver and the restart loop.
inline StageResult run_hsgd_stage(const CompositeProblem& problem, const ResolvedPlan& plan,
                                  std::uint64_t seed, long stage, DenseVector x,
                                  long long budget_evals, OracleCounter& oc,
                                  MetricRecorder& metrics, RunResult& result,
                                  long overall_t_star, bool want_stage_random,
                                  const Telemetry& tele) {
  StageResult out;
  auto init_rng = make_stream(seed, static_cast<std::uint64_t>(stage), 0, StreamLeg::kInit);
  InitEstimate init = init_estimate(problem, x, plan.b_tilde, init_rng);
  result.exact_init_gradient = result.exact_init_gradient || init.exact_full_gradient;
  HybridEstimatorState state = std::move(init.state);
  state.beta = plan.beta;
  state.b = plan.b;
  state.b_hat = plan.b_hat;
  oc.grad_evals += init.b_tilde_effective;

  long stage_random_t = -1;
  if (want_stage_random) {
    auto pick = make_stream(seed, static_cast<std::uint64_t>(stage), 1, StreamLeg::kOutput);
    stage_random_t = weighted_index(pick, plan.gammas);
  }

  const long cost_per_iter = 2 * plan.b + plan.b_hat;
  for (long t = 0; t <= plan.m; ++t) {
    if (t == overall_t_star) {
      out.selected_x = x;
      out.selected_hit = true;
    }
    if (t == stage_random_t) out.stage_random_x = x;
    if (tele.keep_iterates) result.iterates.push_back(x);
    if (t % metrics.stride == 0) metrics.record(x, oc.grad_evals, t, stage);
    if (oc.grad_evals + cost_per_iter > budget_evals) {
      out.truncated = true;
      break;
    }
    const SampleDraw draw =
        draw_batches(problem, plan.b, plan.b_hat, seed, static_cast<std::uint64_t>(stage),
                     static_cast<std::uint64_t>(t));
    hybrid_update(state, x, draw, problem);
    oc.grad_evals += cost_per_iter;
    averaged_prox_step(problem, x, state.v, plan.etas[static_cast<std::size_t>(t)],
                       plan.gammas[static_cast<std::size_t>(t)], oc);
    ++out.iterations;
  }
  out.last_x = std::move(x);
  return out;
}

}  // namespace detail

// Algorithm: initial estimate v_0 from a b~-batch, then iterations t = 0..m of
// a hybrid estimator update followed by the proximal step and the averaging
// step  x_{t+1} = (1-gamma_t) x_t + gamma_t prox_{eta_t psi}(x_t - eta_t v_t).
// Output is chosen over {x_0..x_m} by the configured rule.
inline RunResult prox_hsgd(const CompositeProblem& problem, const SolverConfig& cfg,
                           const Telemetry& tele = {}) {
  const ResolvedPlan plan = detail::resolve_hsgd_plan(cfg);
  DenseVector x = cfg.x0.empty() ? default_start(problem) : cfg.x0;
  if (static_cast<int>(x.size()) != problem.dim())
    throw std::invalid_argument("prox_hsgd: x0 dimension mismatch");
  if (problem.reg.is_indicator()) prox_inplace(problem.reg, x, 1.0);

  RunResult result;
  detail::MetricRecorder metrics{&problem, &tele, &result};
  metrics.stride = detail::default_stride(problem.n(), 2 * plan.b + plan.b_hat, tele.metric_stride);

  long t_star = -1;
  if (cfg.output_rule == OutputRule::kUniformRandom) {
    auto pick = make_stream(cfg.seed, 0, 0, StreamLeg::kOutput);
    t_star = pick.uniform_index(plan.m + 1);
  } else if (cfg.output_rule == OutputRule::kGammaWeighted) {
    auto pick = make_stream(cfg.seed, 0, 0, StreamLeg::kOutput);
    t_star = detail::weighted_index(pick, plan.gammas);
  }

  const long long budget_evals =
      (cfg.epoch_budget > 0 && problem.finite_sum())
          ? static_cast<long long>(cfg.epoch_budget) * problem.n()
          : LLONG_MAX;

  detail::StageResult stage =
      detail::run_hsgd_stage(problem, plan, cfg.seed, 0, std::move(x), budget_evals,
                             result.oracle_counts, metrics, result, t_star, false, tele);

  result.iterations_completed = stage.iterations;
  result.truncated_by_budget = stage.truncated;
  if (tele.keep_iterates) result.iterates.push_back(stage.last_x);
  metrics.record(stage.last_x, result.oracle_counts.grad_evals, plan.m + 1, 0);
  result.final_x = std::move(stage.last_x);
  switch (cfg.output_rule) {
    case OutputRule::kLastIterate:
      result.output_x = result.final_x;
      break;
    case OutputRule::kBestSoFar:
      result.output_x = metrics.best_x.empty() ? result.final_x : metrics.best_x;
      break;
    default:
      result.output_x = stage.selected_hit ? stage.selected_x : result.final_x;
  }
  return result;
}

// Restarting variant: S stages of the single-loop method, each started from
// the previous stage's last iterate with a fresh initial estimate. The
// gradient-dominant mode hands off a gamma-weighted random inner iterate
// instead of the last one.
inline RunResult prox_hsgd_restart(const CompositeProblem& problem, const SolverConfig& cfg,
                                   const Telemetry& tele = {}) {
  if (!cfg.restart) throw std::invalid_argument("prox_hsgd_restart: restart plan required");
  const RestartPlan& rp = *cfg.restart;
  if (rp.stages < 1) throw std::invalid_argument("prox_hsgd_restart: need S >= 1");
  AdaptivePlan inner = adaptive_gammas(problem.smoothness, rp.eta, rp.beta, rp.m, 1);
  ResolvedPlan plan;
  plan.beta = inner.beta;
  plan.b = 1;
  plan.b_hat = 1;
  plan.b_tilde = rp.b_tilde;
  plan.m = rp.m;
  plan.etas.assign(inner.gammas.size(), inner.eta);
  plan.gammas = inner.gammas;

  DenseVector x = cfg.x0.empty() ? default_start(problem) : cfg.x0;
  if (problem.reg.is_indicator()) prox_inplace(problem.reg, x, 1.0);

  RunResult result;
  detail::MetricRecorder metrics{&problem, &tele, &result};
  metrics.stride = detail::default_stride(problem.n(), 2 * plan.b + plan.b_hat, tele.metric_stride);

  long star_stage = -1, star_t = -1;
  if (cfg.output_rule == OutputRule::kUniformRandom) {
    auto pick = make_stream(cfg.seed, static_cast<std::uint64_t>(rp.stages), 0, StreamLeg::kOutput);
    star_stage = pick.uniform_index(rp.stages);
    star_t = pick.uniform_index(plan.m + 1);
  } else if (cfg.output_rule == OutputRule::kGammaWeighted) {
    // P(x_t^{(s)}) = gamma_t / (S Sigma_m): stage uniform, then gamma-weighted
    auto pick = make_stream(cfg.seed, static_cast<std::uint64_t>(rp.stages), 0, StreamLeg::kOutput);
    star_stage = pick.uniform_index(rp.stages);
    star_t = detail::weighted_index(pick, plan.gammas);
  }

  const long long budget_evals =
      (cfg.epoch_budget > 0 && problem.finite_sum())
          ? static_cast<long long>(cfg.epoch_budget) * problem.n()
          : LLONG_MAX;

  DenseVector selected;
  bool selected_hit = false;
  for (long s = 0; s < rp.stages; ++s) {
    detail::StageResult stage = detail::run_hsgd_stage(
        problem, plan, cfg.seed, s, std::move(x), budget_evals, result.oracle_counts, metrics,
        result, s == star_stage ? star_t : -1, cfg.gradient_dominant, tele);
    result.iterations_completed += stage.iterations;
    if (stage.selected_hit) {
      selected = std::move(stage.selected_x);
      selected_hit = true;
    }
    if (cfg.gradient_dominant && !stage.stage_random_x.empty() && !stage.truncated)
      x = std::move(stage.stage_random_x);
    else
      x = std::move(stage.last_x);
    result.stage_outputs.push_back(x);
    if (stage.truncated) {
      result.truncated_by_budget = true;
      break;
    }
  }
  if (tele.keep_iterates) result.iterates.push_back(x);
  metrics.record(x, result.oracle_counts.grad_evals, plan.m + 1, rp.stages - 1);
  result.final_x = std::move(x);
  switch (cfg.output_rule) {
    case OutputRule::kLastIterate:
      result.output_x = result.final_x;
      break;
    case OutputRule::kBestSoFar:
      result.output_x = metrics.best_x.empty() ? result.final_x : metrics.best_x;
      break;
    default:
      result.output_x = selected_hit ? selected : result.final_x;
  }
  return result;
}

// Proximal SGD baseline with constant or scheduled-diminishing steps.
inline RunResult prox_sgd(const CompositeProblem& problem, const SolverConfig& cfg,
                          const Telemetry& tele = {}) {
  const SgdParams& sp = cfg.sgd;
  if (sp.batch < 1) throw std::invalid_argument("prox_sgd: batch must be >= 1");
  DenseVector x = cfg.x0.empty() ? default_start(problem) : cfg.x0;
  if (problem.reg.is_indicator()) prox_inplace(problem.reg, x, 1.0);

  RunResult result;
  detail::MetricRecorder metrics{&problem, &tele, &result};
  metrics.stride = detail::default_stride(problem.n(), sp.batch, tele.metric_stride);

  const long n = problem.n();
  long period = sp.decay_period;
  if (period <= 0) period = problem.finite_sum() ? std::max(1L, n / sp.batch) : 1000;
  long iterations = LONG_MAX;
  if (cfg.epoch_budget > 0 && problem.finite_sum())
    iterations = (static_cast<long long>(cfg.epoch_budget) * n) / sp.batch;
  if (iterations == LONG_MAX && !cfg.custom)
    throw std::invalid_argument("prox_sgd: epoch budget required");
  if (cfg.custom) iterations = cfg.custom->m + 1;  // iteration-aligned comparisons

  DenseVector g(x.size());
  for (long t = 0; t < iterations; ++t) {
    if (tele.keep_iterates) result.iterates.push_back(x);
    if (t % metrics.stride == 0) metrics.record(x, result.oracle_counts.grad_evals, t, 0);
    auto rng = make_stream(cfg.seed, 0, static_cast<std::uint64_t>(t), StreamLeg::kSgd);
    std::vector<long> batch;
    if (problem.finite_sum())
      batch = sample_without_replacement(rng, n, sp.batch);
    else {
      batch.reserve(static_cast<std::size_t>(sp.batch));
      for (long k = 0; k < sp.batch; ++k) batch.push_back(problem.family->draw(rng));
    }
    std::fill(g.begin(), g.end(), 0.0);
    for (long i : batch) problem.family->component_grad_axpy(i, x, 1.0, g);
    scale(g, 1.0 / static_cast<double>(sp.batch));  // matches the estimator's SGD-leg rounding
    result.oracle_counts.grad_evals += sp.batch;
    const double eta = scheduled_sgd_stepsize(sp.eta0, sp.eta_prime, t, period);
    axpy(-eta, g, x);
    prox_inplace(problem.reg, x, eta);
    ++result.oracle_counts.prox_calls;
    ++result.iterations_completed;
  }
  if (tele.keep_iterates) result.iterates.push_back(x);
  metrics.record(x, result.oracle_counts.grad_evals, iterations, 0);
  result.final_x = x;
  result.output_x = cfg.output_rule == OutputRule::kBestSoFar && !metrics.best_x.empty()
                        ? metrics.best_x
                        : std::move(x);
  return result;
}

// Proximal SVRG baseline: full-gradient snapshots with variance-corrected
// inner steps g = grad f_B(x) - grad f_B(x~) + grad f(x~).
inline RunResult prox_svrg(const CompositeProblem& problem, const SolverConfig& cfg,
                           const Telemetry& tele = {}) {
  if (!problem.finite_sum()) throw std::invalid_argument("prox_svrg: finite-sum mode required");
  if (cfg.epoch_budget < 1) throw std::invalid_argument("prox_svrg: epoch budget required");
  const long n = problem.n();
  SvrgParams sp = cfg.svrg;
  if (sp.batch <= 0) sp.batch = std::max(1L, static_cast<long>(std::floor(std::pow(n, 2.0 / 3.0))));
  if (sp.eta <= 0.0) sp.eta = 1.0 / (3.0 * problem.smoothness);
  if (sp.epoch_len <= 0) sp.epoch_len = std::max(1L, (n + sp.batch - 1) / sp.batch);

  DenseVector x = cfg.x0.empty() ? default_start(problem) : cfg.x0;
  if (problem.reg.is_indicator()) prox_inplace(problem.reg, x, 1.0);

  RunResult result;
  detail::MetricRecorder metrics{&problem, &tele, &result};
  metrics.stride = LONG_MAX;  // records at snapshots instead
  const long long budget_evals = static_cast<long long>(cfg.epoch_budget) * n;

  DenseVector g(x.size());
  long outer = 0;
  while (result.oracle_counts.grad_evals + n <= budget_evals) {
    metrics.record(x, result.oracle_counts.grad_evals, outer * sp.epoch_len, outer);
    const DenseVector snapshot = x;
    const DenseVector snapshot_grad = full_gradient(problem, snapshot, &result.oracle_counts);
    for (long t = 0; t < sp.epoch_len; ++t) {
      if (result.oracle_counts.grad_evals + 2 * sp.batch > budget_evals) {
        result.truncated_by_budget = true;
        break;
      }
      if (tele.keep_iterates) result.iterates.push_back(x);
      auto rng = make_stream(cfg.seed, static_cast<std::uint64_t>(outer),
                             static_cast<std::uint64_t>(t), StreamLeg::kSgd);
      const auto batch = sample_without_replacement(rng, n, sp.batch);
      DenseVector diff(x.size(), 0.0);  // cancels exactly at x = snapshot
      for (long i : batch) {
        problem.family->component_grad_axpy(i, x, 1.0, diff);
        problem.family->component_grad_axpy(i, snapshot, -1.0, diff);
      }
      g = snapshot_grad;
      axpy(1.0 / static_cast<double>(sp.batch), diff, g);
      result.oracle_counts.grad_evals += 2 * sp.batch;
      axpy(-sp.eta, g, x);
      prox_inplace(problem.reg, x, sp.eta);
      ++result.oracle_counts.prox_calls;
      ++result.iterations_completed;
    }
    ++outer;
    if (result.truncated_by_budget) break;
  }
  if (tele.keep_iterates) result.iterates.push_back(x);
  metrics.record(x, result.oracle_counts.grad_evals, outer * sp.epoch_len, outer);
  result.final_x = x;
  result.output_x = cfg.output_rule == OutputRule::kBestSoFar && !metrics.best_x.empty()
                        ? metrics.best_x
                        : std::move(x);
  return result;
}

// Proximal SpiderBoost baseline: full-gradient epochs with the SARAH
// recursion v <- v + grad f_B(x_t) - grad f_B(x_{t-1}) and steps
// x <- prox_{eta psi}(x - eta v).
inline RunResult prox_spiderboost(const CompositeProblem& problem, const SolverConfig& cfg,
                                  const Telemetry& tele = {}) {
  if (!problem.finite_sum())
    throw std::invalid_argument("prox_spiderboost: finite-sum mode required");
  if (cfg.epoch_budget < 1) throw std::invalid_argument("prox_spiderboost: epoch budget required");
  const long n = problem.n();
  SpiderBoostParams sp = cfg.spiderboost;
  const long root = std::max(1L, static_cast<long>(std::floor(std::sqrt(static_cast<double>(n)))));
  if (sp.batch <= 0) sp.batch = root;
  if (sp.epoch_len <= 0) sp.epoch_len = root;
  if (sp.eta <= 0.0) sp.eta = 1.0 / (2.0 * problem.smoothness);

  DenseVector x = cfg.x0.empty() ? default_start(problem) : cfg.x0;
  if (problem.reg.is_indicator()) prox_inplace(problem.reg, x, 1.0);

  RunResult result;
  detail::MetricRecorder metrics{&problem, &tele, &result};
  metrics.stride = LONG_MAX;
  const long long budget_evals = static_cast<long long>(cfg.epoch_budget) * n;

  long outer = 0;
  while (result.oracle_counts.grad_evals + n <= budget_evals) {
    metrics.record(x, result.oracle_counts.grad_evals, outer * (sp.epoch_len + 1), outer);
    DenseVector v = full_gradient(problem, x, &result.oracle_counts);
    DenseVector x_prev = x;
    if (tele.keep_iterates) result.iterates.push_back(x);
    axpy(-sp.eta, v, x);
    prox_inplace(problem.reg, x, sp.eta);
    ++result.oracle_counts.prox_calls;
    ++result.iterations_completed;
    for (long t = 1; t <= sp.epoch_len; ++t) {
      if (result.oracle_counts.grad_evals + 2 * sp.batch > budget_evals) {
        result.truncated_by_budget = true;
        break;
      }
      if (tele.keep_iterates) result.iterates.push_back(x);
      auto rng = make_stream(cfg.seed, static_cast<std::uint64_t>(outer),
                             static_cast<std::uint64_t>(t), StreamLeg::kSarah);
      const auto batch = sample_without_replacement(rng, n, sp.batch);
      DenseVector diff(x.size(), 0.0);  // same kernel order as the hybrid SARAH leg
      for (long i : batch) {
        problem.family->component_grad_axpy(i, x, 1.0, diff);
        problem.family->component_grad_axpy(i, x_prev, -1.0, diff);
      }
      axpy(1.0 / static_cast<double>(sp.batch), diff, v);
      result.oracle_counts.grad_evals += 2 * sp.batch;
      x_prev = x;
      axpy(-sp.eta, v, x);
      prox_inplace(problem.reg, x, sp.eta);
      ++result.oracle_counts.prox_calls;
      ++result.iterations_completed;
    }
    ++outer;
    if (result.truncated_by_budget) break;
  }
  if (tele.keep_iterates) result.iterates.push_back(x);
  metrics.record(x, result.oracle_counts.grad_evals, outer * (sp.epoch_len + 1), outer);
  result.final_x = x;
  result.output_x = cfg.output_rule == OutputRule::kBestSoFar && !metrics.best_x.empty()
                        ? metrics.best_x
                        : std::move(x);
  return result;
}

inline RunResult run_solver(const CompositeProblem& problem, const SolverConfig& cfg,
                            const Telemetry& tele = {}) {
  switch (cfg.algorithm) {
    case Algorithm::kProxHsgd: return prox_hsgd(problem, cfg, tele);
    case Algorithm::kProxHsgdRestart: return prox_hsgd_restart(problem, cfg, tele);
    case Algorithm::kProxSgd: return prox_sgd(problem, cfg, tele);
    case Algorithm::kProxSvrg: return prox_svrg(problem, cfg, tele);
    case Algorithm::kProxSpiderBoost: return prox_spiderboost(problem, cfg, tele);
  }
  throw std::invalid_argument("run_solver: unknown algorithm");
}

}  // namespace hsgd
