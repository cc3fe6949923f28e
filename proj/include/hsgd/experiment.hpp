#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hsgd/dataset.hpp"
#include "hsgd/problem.hpp"
#include "hsgd/schedules.hpp"
#include "hsgd/solvers.hpp"
#include "hsgd/synthetic.hpp"
#include "hsgd/trace.hpp"
#include "hsgd/version.hpp"

namespace hsgd {

using json = nlohmann::json;

struct AlgorithmSpec {
  std::string name;   // prox_hsgd | prox_hsgd_rs | prox_sgd | prox_svrg | prox_spiderboost
  std::string label;  // trace-file label, defaults to name
  json params;        // algorithm/plan parameters, echoed into the bundle
};

struct ExperimentConfig {
  std::string dataset_path;  // empty = synthetic
  std::optional<SyntheticSpec> synthetic;
  LossKind loss = LossKind::kNnPca;
  std::string regularizer = "auto";
  std::optional<double> lambda;  // default 1/n
  int dim_override = 0;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 13;

  std::vector<AlgorithmSpec> algorithms;
  std::vector<std::uint64_t> seeds;
  long epochs = 20;
  long metric_stride = 0;
  std::string output_rule = "last";
};

inline OutputRule output_rule_from_name(const std::string& name) {
  if (name == "uniform") return OutputRule::kUniformRandom;
  if (name == "gamma_weighted") return OutputRule::kGammaWeighted;
  if (name == "best") return OutputRule::kBestSoFar;
  if (name == "last") return OutputRule::kLastIterate;
  throw std::invalid_argument("unknown output rule: " + name);
}

inline ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig cfg;
  const json& prob = j.at("problem");
  if (prob.contains("dataset")) cfg.dataset_path = prob.at("dataset").get<std::string>();
  if (prob.contains("synthetic")) {
    const json& s = prob.at("synthetic");
    SyntheticSpec spec;
    spec.kind = synthetic_kind_from_name(s.at("kind").get<std::string>());
    spec.n = s.value("n", 16L);
    spec.p = s.value("p", 8);
    spec.seed = s.value("seed", 1ULL);
    spec.noise = s.value("noise", 0.0);
    cfg.synthetic = spec;
  }
  if (cfg.dataset_path.empty() == !cfg.synthetic.has_value())
    throw std::invalid_argument("config: exactly one of problem.dataset / problem.synthetic required");
  if (prob.contains("loss")) cfg.loss = loss_from_name(prob.at("loss").get<std::string>());
  cfg.regularizer = prob.value("regularizer", std::string("auto"));
  if (prob.contains("lambda")) cfg.lambda = prob.at("lambda").get<double>();
  cfg.dim_override = prob.value("dim", 0);
  cfg.test_fraction = prob.value("test_fraction", 0.2);
  cfg.split_seed = prob.value("split_seed", 13ULL);

  if (!j.contains("algorithms") || !j.at("algorithms").is_array() || j.at("algorithms").empty())
    throw std::invalid_argument("config: at least one algorithm required");
  for (const json& a : j.at("algorithms")) {
    AlgorithmSpec spec;
    spec.name = a.at("name").get<std::string>();
    spec.label = a.value("label", spec.name);
    spec.params = a;
    cfg.algorithms.push_back(std::move(spec));
  }
  if (!j.contains("seeds") || !j.at("seeds").is_array() || j.at("seeds").empty())
    throw std::invalid_argument("config: at least one seed required");
  for (const json& s : j.at("seeds")) cfg.seeds.push_back(s.get<std::uint64_t>());
  cfg.epochs = j.value("epochs", 20L);
  if (cfg.epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
  cfg.metric_stride = j.value("metric_stride", 0L);
  cfg.output_rule = j.value("output_rule", std::string("last"));
  output_rule_from_name(cfg.output_rule);

  // duplicate (label, seed) pairs would collide on trace filenames
  for (std::size_t i = 0; i < cfg.algorithms.size(); ++i)
    for (std::size_t k = i + 1; k < cfg.algorithms.size(); ++k)
      if (cfg.algorithms[i].label == cfg.algorithms[k].label)
        throw std::invalid_argument("config: duplicate algorithm label '" + cfg.algorithms[i].label + "'");
  return cfg;
}

// FNV-1a over the canonical (sorted-key) serialization; stable across
// platforms and key order in the source file.
inline std::uint64_t config_hash(const json& j) {
  const std::string canon = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Problem assembly

struct BuiltProblem {
  CompositeProblem problem;
  std::optional<Dataset> train;
  std::optional<Dataset> test;
  json metadata;
};

inline BuiltProblem build_problem(const ExperimentConfig& cfg) {
  BuiltProblem out;
  if (!cfg.dataset_path.empty()) {
    Dataset full = normalize_rows(load_libsvm(cfg.dataset_path, cfg.dim_override));
    out.metadata["dataset"] = cfg.dataset_path;
    if (cfg.loss == LossKind::kNnPca) {
      out.train = std::move(full);
    } else {
      auto [train, test] = split(full, cfg.test_fraction, cfg.split_seed);
      out.metadata["split"] = {{"test_fraction", cfg.test_fraction}, {"seed", cfg.split_seed}};
      out.train = std::move(train);
      out.test = std::move(test);
    }
  } else {
    SyntheticProblem syn = make_synthetic(*cfg.synthetic);
    out.metadata["synthetic"] = {{"kind", synthetic_kind_name(cfg.synthetic->kind)},
                                 {"n", cfg.synthetic->n},
                                 {"p", cfg.synthetic->p},
                                 {"seed", cfg.synthetic->seed},
                                 {"noise", cfg.synthetic->noise}};
    if (syn.dataset && cfg.loss != LossKind::kNnPca && !syn.dataset->labels.empty()) {
      auto [train, test] = split(*syn.dataset, cfg.test_fraction, cfg.split_seed);
      out.train = std::move(train);
      out.test = std::move(test);
    } else if (syn.dataset) {
      out.train = std::move(syn.dataset);
    }
    if (cfg.synthetic->kind != SyntheticSpec::Kind::kQuadraticFiniteSum && !out.train) {
      out.problem = std::move(syn.problem);
      return out;
    }
    if (cfg.synthetic->kind == SyntheticSpec::Kind::kQuadraticFiniteSum || cfg.loss == LossKind::kNnPca) {
      // keep the generator's family (quadratics have no rows; NN-PCA uses all rows)
      if (cfg.synthetic->kind == SyntheticSpec::Kind::kNnPcaGaussian && out.train) {
        out.problem.family = std::make_shared<NnPcaFamily>(out.train->rows);
        out.problem.reg = Regularizer::nonneg_ball();
        out.problem.smoothness = 1.0;
      } else {
        out.problem = std::move(syn.problem);
      }
      return out;
    }
  }
  if (!out.train) throw std::invalid_argument("config: no training data");
  const Dataset& train = *out.train;
  const long n = train.n();
  if (cfg.loss == LossKind::kNnPca) {
    out.problem.family = std::make_shared<NnPcaFamily>(train.rows);
    out.problem.reg = Regularizer::nonneg_ball();
    out.problem.smoothness = 1.0;
    if (cfg.regularizer != "auto" && cfg.regularizer != "nonneg_ball")
      throw std::invalid_argument("config: NN-PCA uses the nonneg-ball regularizer");
  } else {
    out.problem.family = std::make_shared<LinearLossFamily>(train.rows, train.labels, cfg.loss);
    out.problem.smoothness = loss_smoothness(cfg.loss);
    const double lambda = cfg.lambda.value_or(1.0 / static_cast<double>(n));
    out.problem.reg = cfg.regularizer == "auto" ? Regularizer::l1(lambda)
                                                : regularizer_from_name(cfg.regularizer, lambda);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plan building

// Largest m with b~(m) + (m+1) * cost_per_iter <= budget_evals, where
// b~ = ceil(c1^2 (b (m+1))^{1/3}); fixed-point iteration on the closed form.
inline long iterations_for_budget(long long budget_evals, double c1, long b, long cost_per_iter) {
  double m1 = std::max(1.0, static_cast<double>(budget_evals) / cost_per_iter);
  for (int round = 0; round < 60; ++round) {
    const double b_tilde = std::ceil(c1 * c1 * std::cbrt(static_cast<double>(b) * m1));
    const double next =
        std::max(1.0, (static_cast<double>(budget_evals) - b_tilde) / cost_per_iter);
    if (std::fabs(next - m1) < 0.5) {
      m1 = next;
      break;
    }
    m1 = next;
  }
  return std::max(0L, static_cast<long>(m1) - 1);
}

inline SolverConfig build_solver_config(const AlgorithmSpec& spec, const ExperimentConfig& cfg,
                                        const CompositeProblem& problem) {
  SolverConfig sc;
  sc.seed = 0;  // caller overrides per run
  sc.epoch_budget = cfg.epochs;
  sc.output_rule = output_rule_from_name(cfg.output_rule);
  const json& p = spec.params;
  const double smoothness = problem.smoothness;
  const long n = problem.n();
  const long long budget_evals = static_cast<long long>(cfg.epochs) * std::max(1L, n);

  if (spec.name == "prox_hsgd") {
    sc.algorithm = Algorithm::kProxHsgd;
    const std::string plan = p.value("plan", std::string("constant"));
    if (plan == "constant") {
      const double c1 = p.value("c1", 10.0);
      long m = p.contains("m") ? p.at("m").get<long>() : iterations_for_budget(budget_evals, c1, 1, 3);
      if (p.contains("b_tilde"))
        sc.constant = constant_plan(smoothness, p.at("b_tilde").get<long>(), m);
      else
        sc.constant = constant_plan_from_c1(smoothness, c1, m);
    } else if (plan == "minibatch") {
      const long b = p.value("b", 50L);
      const long b_hat = p.value("b_hat", b);
      const double c1 = p.value("c1", 10.0);
      const double c0_cap = std::sqrt(13.0) / (3.0 * std::sqrt(static_cast<double>(b)));
      const double c0 = p.value("c0", std::min(0.95 * c0_cap, 1.0));
      const long m = p.contains("m") ? p.at("m").get<long>()
                                     : iterations_for_budget(budget_evals, c1, b, 2 * b + b_hat);
      const long b_tilde =
          p.contains("b_tilde")
              ? p.at("b_tilde").get<long>()
              : static_cast<long>(std::ceil(c1 * c1 * std::cbrt(static_cast<double>(b) * (m + 1))));
      sc.minibatch = minibatch_constant_plan(smoothness, b, b_hat, b_tilde, m, c0);
    } else if (plan == "adaptive") {
      const double eta = p.value("eta", 0.5 / smoothness);
      const double c1 = p.value("c1", 10.0);
      const long b = p.value("b", 1L);
      const long m = p.contains("m") ? p.at("m").get<long>()
                                     : iterations_for_budget(budget_evals, c1, b, 2 * b + b);
      const long b_tilde =
          p.contains("b_tilde")
              ? p.at("b_tilde").get<long>()
              : static_cast<long>(std::ceil(c1 * c1 * std::cbrt(static_cast<double>(b) * (m + 1))));
      const double beta =
          1.0 - 1.0 / std::sqrt(static_cast<double>(b_tilde) * static_cast<double>(m + 1));
      sc.adaptive = adaptive_gammas(smoothness, eta, beta, m, b);
      sc.b_tilde = b_tilde;
    } else {
      throw std::invalid_argument("prox_hsgd: unknown plan '" + plan + "'");
    }
    return sc;
  }
  if (spec.name == "prox_hsgd_rs") {
    sc.algorithm = Algorithm::kProxHsgdRestart;
    const double eta = p.value("eta", 0.5 / smoothness);
    const double c1 = p.value("c1", 10.0);
    const double epsilon = p.value("epsilon", 0.01);
    const double delta_f = p.value("delta_f", 1.0);
    double sigma = p.value("sigma", -1.0);
    if (sigma < 0.0) sigma = problem.variance_hint.value_or(1.0);
    RestartPlan rp = restart_plan(smoothness, eta, sigma, epsilon, c1, delta_f,
                                  p.value("stages", 0L));
    if (p.contains("m")) {
      rp.m = p.at("m").get<long>();
      rp.beta = 1.0 - 1.0 / std::sqrt(static_cast<double>(rp.b_tilde) *
                                      static_cast<double>(rp.m + 1));
    }
    if (p.contains("b_tilde")) {
      rp.b_tilde = p.at("b_tilde").get<long>();
      rp.beta = 1.0 - 1.0 / std::sqrt(static_cast<double>(rp.b_tilde) *
                                      static_cast<double>(rp.m + 1));
    }
    sc.restart = rp;
    sc.gradient_dominant = p.value("gradient_dominant", false);
    return sc;
  }
  if (spec.name == "prox_sgd") {
    sc.algorithm = Algorithm::kProxSgd;
    sc.sgd.eta0 = p.value("eta0", p.value("batch", 1L) > 1 ? 0.05 : 0.01);
    sc.sgd.eta_prime = p.value("eta_prime", 0.0);
    sc.sgd.batch = p.value("batch", 1L);
    sc.sgd.decay_period = p.value("decay_period", 0L);
    return sc;
  }
  if (spec.name == "prox_svrg") {
    sc.algorithm = Algorithm::kProxSvrg;
    sc.svrg.eta = p.value("eta", 0.0);
    sc.svrg.batch = p.value("batch", 0L);
    sc.svrg.epoch_len = p.value("epoch_len", 0L);
    return sc;
  }
  if (spec.name == "prox_spiderboost") {
    sc.algorithm = Algorithm::kProxSpiderBoost;
    sc.spiderboost.eta = p.value("eta", 0.0);
    sc.spiderboost.batch = p.value("batch", 0L);
    sc.spiderboost.epoch_len = p.value("epoch_len", 0L);
    return sc;
  }
  throw std::invalid_argument("unknown algorithm: " + spec.name);
}

// ---------------------------------------------------------------------------
// Bundle: run results plus enough context to make emissions self-describing.

struct RunEntry {
  std::string algo;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  RunTrace trace;
  OracleCounter counters;
  long iterations = 0;
  bool truncated = false;
};

struct Bundle {
  json config_echo;
  std::uint64_t hash = 0;
  std::string version;
  json metadata;
  std::vector<RunEntry> runs;

  bool all_ok() const {
    for (const auto& r : runs)
      if (!r.ok) return false;
    return true;
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string trace_csv_header() {
  return "algo,seed,epoch,objective,gm_norm,train_acc,test_acc";
}

inline std::string trace_csv_row(const std::string& algo, std::uint64_t seed,
                                 const TraceRecord& rec) {
  std::string row = algo + "," + std::to_string(seed) + "," + format_double(rec.epoch) + "," +
                    format_double(rec.objective) + "," + format_double(rec.gm_norm) + ",";
  if (rec.train_acc) row += format_double(*rec.train_acc);
  row += ",";
  if (rec.test_acc) row += format_double(*rec.test_acc);
  return row;
}

inline json trace_json_row(const std::string& algo, std::uint64_t seed, const TraceRecord& rec) {
  json j = {{"algo", algo},
            {"seed", seed},
            {"epoch", rec.epoch},
            {"objective", rec.objective},
            {"gm_norm", rec.gm_norm},
            {"wall_ms", rec.wall_ms}};
  if (rec.train_acc) j["train_acc"] = *rec.train_acc;
  if (rec.test_acc) j["test_acc"] = *rec.test_acc;
  return j;
}

}  // namespace detail

enum class EmitFormat { kCsv, kJsonLines };

// One file per format with a fixed, documented schema. CSV columns:
// algo,seed,epoch,objective,gm_norm,train_acc,test_acc (accuracies may be
// empty). JSON-lines opens with a header object carrying the config hash.
inline std::vector<std::string> emit(const Bundle& bundle, EmitFormat format,
                                     const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  if (format == EmitFormat::kCsv) {
    const std::string path = (fs::path(out_dir) / "trace.csv").string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit: cannot write " + path);
    out << detail::trace_csv_header() << "\n";
    for (const auto& run : bundle.runs)
      for (const auto& rec : run.trace) out << detail::trace_csv_row(run.algo, run.seed, rec) << "\n";
    written.push_back(path);
  } else {
    const std::string path = (fs::path(out_dir) / "trace.jsonl").string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit: cannot write " + path);
    json header = {{"config_hash", bundle.hash},
                   {"version", bundle.version},
                   {"metadata", bundle.metadata}};
    out << header.dump() << "\n";
    for (const auto& run : bundle.runs)
      for (const auto& rec : run.trace) out << detail::trace_json_row(run.algo, run.seed, rec).dump() << "\n";
    written.push_back(path);
  }
  return written;
}

struct ResidualMode {
  enum class Kind { kBestObserved, kSupplied };
  Kind kind = Kind::kBestObserved;
  double supplied = 0.0;
};

// residual_t = (F(x_t) - F_ref) / max(1, |F_ref|). BestObserved takes F_ref as
// the smallest finite objective in the bundle; a Supplied reference above the
// observed minimum clips negatives to zero (with a warning flag).
inline std::vector<double> loss_residual_series(const RunTrace& trace, double f_ref,
                                                bool clip_negative = false) {
  if (trace.empty()) throw std::invalid_argument("loss_residual_series: empty trace");
  std::vector<double> out;
  out.reserve(trace.size());
  const double denom = std::max(1.0, std::fabs(f_ref));
  for (const auto& rec : trace) {
    if (rec.objective == kInfinity) continue;  // infeasible-objective sentinel: skip
    double r = (rec.objective - f_ref) / denom;
    if (clip_negative && r < 0.0) r = 0.0;
    out.push_back(r);
  }
  return out;
}

inline double best_observed_objective(const Bundle& bundle) {
  double best = kInfinity;
  for (const auto& run : bundle.runs)
    for (const auto& rec : run.trace)
      if (rec.objective < best) best = rec.objective;
  return best;
}

// ---------------------------------------------------------------------------
// Runner

// Executes every (algorithm, seed) pair in a worker pool, writing each
// finished run's trace file immediately so a crash preserves completed runs.
inline Bundle run_experiment(const ExperimentConfig& cfg, const json& raw_config,
                             const std::string& out_dir, int jobs = 1) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  BuiltProblem built = build_problem(cfg);

  Bundle bundle;
  bundle.config_echo = raw_config;
  bundle.hash = config_hash(raw_config);
  bundle.version = kVersion;
  bundle.metadata = built.metadata;
  bundle.metadata["residual_definition"] =
      "(F(x_t) - F_ref) / max(1, |F_ref|), F_ref = min finite objective over the bundle "
      "unless supplied";
  bundle.metadata["metric_eta"] = 0.5;

  struct Job {
    std::size_t algo_idx;
    std::uint64_t seed;
  };
  std::vector<Job> jobs_list;
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a)
    for (std::uint64_t seed : cfg.seeds) jobs_list.push_back({a, seed});
  bundle.runs.resize(jobs_list.size());

  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs_list.size()) return;
      const Job& job = jobs_list[k];
      const AlgorithmSpec& spec = cfg.algorithms[job.algo_idx];
      RunEntry entry;
      entry.algo = spec.label;
      entry.seed = job.seed;
      try {
        SolverConfig sc = build_solver_config(spec, cfg, built.problem);
        sc.seed = job.seed;
        Telemetry tele;
        tele.metric_stride = cfg.metric_stride;
        tele.train = built.train ? &*built.train : nullptr;
        tele.test = built.test ? &*built.test : nullptr;
        RunResult res = run_solver(built.problem, sc, tele);
        entry.trace = std::move(res.trace);
        entry.counters = res.oracle_counts;
        entry.iterations = res.iterations_completed;
        entry.truncated = res.truncated_by_budget;
        entry.ok = true;
      } catch (const std::exception& e) {
        entry.ok = false;
        entry.error = e.what();
      }
      {
        std::lock_guard<std::mutex> lock(io_mutex);
        if (entry.ok) {
          const std::string path =
              (fs::path(out_dir) / (entry.algo + "_seed" + std::to_string(entry.seed) + ".csv"))
                  .string();
          std::ofstream out(path);
          out << detail::trace_csv_header() << "\n";
          for (const auto& rec : entry.trace)
            out << detail::trace_csv_row(entry.algo, entry.seed, rec) << "\n";
        }
        bundle.runs[k] = std::move(entry);
      }
    }
  };
  const int pool = std::max(1, jobs);
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(pool));
  for (int i = 0; i < pool; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  json runs_meta = json::array();
  for (const auto& run : bundle.runs) {
    runs_meta.push_back({{"algo", run.algo},
                         {"seed", run.seed},
                         {"ok", run.ok},
                         {"error", run.error},
                         {"grad_evals", run.counters.grad_evals},
                         {"prox_calls", run.counters.prox_calls},
                         {"iterations", run.iterations},
                         {"truncated", run.truncated}});
  }
  json bundle_meta = {{"config", bundle.config_echo},
                      {"config_hash", bundle.hash},
                      {"version", bundle.version},
                      {"metadata", bundle.metadata},
                      {"runs", runs_meta}};
  std::ofstream out(fs::path(out_dir) / "bundle.json");
  out << bundle_meta.dump(2) << "\n";
  return bundle;
}

}  // namespace hsgd
