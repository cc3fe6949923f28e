#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hsgd/core.hpp"
#include "hsgd/losses.hpp"
#include "hsgd/regularizer.hpp"
#include "hsgd/rng.hpp"

namespace hsgd {

// Smooth part f of a composite problem, exposed through component oracles.
// component_count() > 0 is the finite-sum setting; 0 means expectation mode,
// where draw() mints component ids with replacement from the underlying
// distribution. Gradients accumulate as acc += coeff * grad f_i(x) so sparse
// rows land directly in dense estimator state.
class ComponentFamily {
 public:
  virtual ~ComponentFamily() = default;

  virtual int dim() const = 0;
  virtual long component_count() const = 0;
  virtual double component_value(long i, const DenseVector& x) const = 0;
  virtual void component_grad_axpy(long i, const DenseVector& x, double coeff,
                                   DenseVector& acc) const = 0;

  virtual long draw(RngStream& rng) const {
    const long n = component_count();
    if (n <= 0) throw std::logic_error("draw: expectation family must override");
    return rng.uniform_index(n);
  }
};

struct CompositeProblem {
  std::shared_ptr<const ComponentFamily> family;
  Regularizer reg;
  double smoothness = 1.0;                // L in the average-smoothness sense
  std::optional<double> variance_hint;    // sigma, when known

  int dim() const { return family->dim(); }
  long n() const { return family->component_count(); }
  bool finite_sum() const { return family->component_count() > 0; }
};

// ---------------------------------------------------------------------------
// Concrete families

// f_i(x) = l(a_i' x, tau_i) for a scalar classification loss l.
class LinearLossFamily : public ComponentFamily {
 public:
  LinearLossFamily(std::vector<SparseRow> rows, std::vector<double> labels, LossKind kind)
      : rows_(std::move(rows)), labels_(std::move(labels)), kind_(kind) {
    if (rows_.size() != labels_.size())
      throw std::invalid_argument("LinearLossFamily: rows/labels length mismatch");
    if (rows_.empty()) throw std::invalid_argument("LinearLossFamily: empty");
    dim_ = rows_.front().dim;
  }

  int dim() const override { return dim_; }
  long component_count() const override { return static_cast<long>(rows_.size()); }

  double component_value(long i, const DenseVector& x) const override {
    const auto& r = rows_[static_cast<std::size_t>(i)];
    return loss_value_and_slope(kind_, r.dot(x), labels_[static_cast<std::size_t>(i)]).value;
  }

  void component_grad_axpy(long i, const DenseVector& x, double coeff,
                           DenseVector& acc) const override {
    const auto& r = rows_[static_cast<std::size_t>(i)];
    const double g = loss_value_and_slope(kind_, r.dot(x), labels_[static_cast<std::size_t>(i)]).slope;
    r.axpy(coeff * g, acc);
  }

  LossKind kind() const { return kind_; }

 private:
  std::vector<SparseRow> rows_;
  std::vector<double> labels_;
  LossKind kind_;
  int dim_ = 0;
};

// f_i(x) = -1/2 (z_i' x)^2, the NN-PCA component.
class NnPcaFamily : public ComponentFamily {
 public:
  explicit NnPcaFamily(std::vector<SparseRow> rows) : rows_(std::move(rows)) {
    if (rows_.empty()) throw std::invalid_argument("NnPcaFamily: empty");
    dim_ = rows_.front().dim;
  }

  int dim() const override { return dim_; }
  long component_count() const override { return static_cast<long>(rows_.size()); }

  double component_value(long i, const DenseVector& x) const override {
    const double c = rows_[static_cast<std::size_t>(i)].dot(x);
    return -0.5 * c * c;
  }

  void component_grad_axpy(long i, const DenseVector& x, double coeff,
                           DenseVector& acc) const override {
    const auto& z = rows_[static_cast<std::size_t>(i)];
    z.axpy(-coeff * z.dot(x), acc);
  }

 private:
  std::vector<SparseRow> rows_;
  int dim_ = 0;
};

// f_i(x) = 1/2 || A_i x - b_i ||^2 with dense A_i (rows x dim, row-major).
class QuadraticFamily : public ComponentFamily {
 public:
  struct Component {
    std::vector<double> a;  // rows * dim
    std::vector<double> b;  // rows
    int rows = 0;
  };

  QuadraticFamily(std::vector<Component> comps, int dim)
      : comps_(std::move(comps)), dim_(dim) {
    if (comps_.empty()) throw std::invalid_argument("QuadraticFamily: empty");
  }

  int dim() const override { return dim_; }
  long component_count() const override { return static_cast<long>(comps_.size()); }

  double component_value(long i, const DenseVector& x) const override {
    const auto& c = comps_[static_cast<std::size_t>(i)];
    double s = 0.0;
    for (int r = 0; r < c.rows; ++r) {
      const double res = residual(c, r, x);
      s += res * res;
    }
    return 0.5 * s;
  }

  void component_grad_axpy(long i, const DenseVector& x, double coeff,
                           DenseVector& acc) const override {
    const auto& c = comps_[static_cast<std::size_t>(i)];
    for (int r = 0; r < c.rows; ++r) {
      const double res = coeff * residual(c, r, x);
      const double* row = c.a.data() + static_cast<std::size_t>(r) * dim_;
      for (int j = 0; j < dim_; ++j) acc[static_cast<std::size_t>(j)] += res * row[j];
    }
  }

 private:
  double residual(const Component& c, int r, const DenseVector& x) const {
    const double* row = c.a.data() + static_cast<std::size_t>(r) * dim_;
    double s = 0.0;
    for (int j = 0; j < dim_; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
    return s - c.b[static_cast<std::size_t>(r)];
  }

  std::vector<Component> comps_;
  int dim_ = 0;
};

// Expectation-mode family: f_xi(x) = 1/2 || x - c_xi ||^2 with c_xi a Gaussian
// shift derived deterministically from the drawn id, so draws replay exactly.
class GaussianShiftFamily : public ComponentFamily {
 public:
  GaussianShiftFamily(int dim, double shift_scale, std::uint64_t key)
      : dim_(dim), scale_(shift_scale), key_(key) {}

  int dim() const override { return dim_; }
  long component_count() const override { return 0; }

  double component_value(long id, const DenseVector& x) const override {
    double s = 0.0;
    auto rng = component_stream(id);
    for (int j = 0; j < dim_; ++j) {
      const double d = x[static_cast<std::size_t>(j)] - scale_ * rng.gaussian();
      s += d * d;
    }
    return 0.5 * s;
  }

  void component_grad_axpy(long id, const DenseVector& x, double coeff,
                           DenseVector& acc) const override {
    auto rng = component_stream(id);
    for (int j = 0; j < dim_; ++j)
      acc[static_cast<std::size_t>(j)] += coeff * (x[static_cast<std::size_t>(j)] - scale_ * rng.gaussian());
  }

  long draw(RngStream& rng) const override {
    return static_cast<long>(rng.next_u64() >> 1);
  }

 private:
  RngStream component_stream(long id) const {
    return make_stream(key_, static_cast<std::uint64_t>(id), 0, StreamLeg::kData);
  }

  int dim_ = 0;
  double scale_ = 1.0;
  std::uint64_t key_ = 0;
};

// ---------------------------------------------------------------------------
// Operations

// (1/n) sum_i grad f_i(x). Counts n gradient evaluations when a counter is given.
inline DenseVector full_gradient(const CompositeProblem& problem, const DenseVector& x,
                                 OracleCounter* counter = nullptr) {
  if (!problem.finite_sum())
    throw std::invalid_argument("full_gradient: not available in expectation mode");
  const long n = problem.n();
  DenseVector g(x.size(), 0.0);
  const double w = 1.0 / static_cast<double>(n);
  for (long i = 0; i < n; ++i) problem.family->component_grad_axpy(i, x, w, g);
  if (counter) counter->grad_evals += n;
  return g;
}

// F(x) = f(x) + psi(x); +infinity sentinel when psi is an indicator and x is
// infeasible.
inline double objective_value(const CompositeProblem& problem, const DenseVector& x) {
  if (!problem.finite_sum())
    throw std::invalid_argument("objective_value: use objective_estimate in expectation mode");
  const double psi = regularizer_value(problem.reg, x);
  if (psi == kInfinity) return kInfinity;
  const long n = problem.n();
  double s = 0.0;
  for (long i = 0; i < n; ++i) s += problem.family->component_value(i, x);
  return s / static_cast<double>(n) + psi;
}

// Batch estimate of F(x) for expectation mode.
inline double objective_estimate(const CompositeProblem& problem, const DenseVector& x,
                                 const std::vector<long>& batch) {
  if (batch.empty()) throw std::invalid_argument("objective_estimate: empty batch");
  const double psi = regularizer_value(problem.reg, x);
  if (psi == kInfinity) return kInfinity;
  double s = 0.0;
  for (long id : batch) s += problem.family->component_value(id, x);
  return s / static_cast<double>(batch.size()) + psi;
}

// G_eta(x) = (1/eta) * (x - prox_{eta psi}(x - eta * grad)).
inline DenseVector gradient_mapping(const CompositeProblem& problem, const DenseVector& x,
                                    double eta, const DenseVector& grad) {
  if (eta <= 0.0) throw std::invalid_argument("gradient_mapping: eta must be positive");
  DenseVector step = x;
  axpy(-eta, grad, step);
  prox_inplace(problem.reg, step, eta);
  DenseVector g(x.size());
  const double inv = 1.0 / eta;
  for (std::size_t j = 0; j < x.size(); ++j) g[j] = inv * (x[j] - step[j]);
  return g;
}

struct VarianceEstimate {
  double sigma_sq = 0.0;
  bool approximate = false;  // Monte Carlo (expectation mode)
};

// sigma^2(x) = E || grad f_xi(x) - grad f(x) ||^2; exact for finite sums,
// a 1e4-draw Monte Carlo estimate in expectation mode.
inline VarianceEstimate component_variance(const CompositeProblem& problem, const DenseVector& x,
                                           std::uint64_t mc_seed = 0,
                                           long mc_samples = 10000) {
  const std::size_t p = x.size();
  if (problem.finite_sum()) {
    const long n = problem.n();
    DenseVector mean = full_gradient(problem, x);
    double acc = 0.0;
    DenseVector g(p);
    for (long i = 0; i < n; ++i) {
      std::fill(g.begin(), g.end(), 0.0);
      problem.family->component_grad_axpy(i, x, 1.0, g);
      acc += squared_distance(g, mean);
    }
    return {acc / static_cast<double>(n), false};
  }
  auto rng = make_stream(mc_seed, 0, 0, StreamLeg::kMonteCarlo);
  std::vector<long> ids(static_cast<std::size_t>(mc_samples));
  for (long k = 0; k < mc_samples; ++k) ids[static_cast<std::size_t>(k)] = problem.family->draw(rng);
  DenseVector mean(p, 0.0);
  const double w = 1.0 / static_cast<double>(mc_samples);
  for (long id : ids) problem.family->component_grad_axpy(id, x, w, mean);
  double acc = 0.0;
  DenseVector g(p);
  for (long id : ids) {
    std::fill(g.begin(), g.end(), 0.0);
    problem.family->component_grad_axpy(id, x, 1.0, g);
    acc += squared_distance(g, mean);
  }
  return {acc * w, true};
}

// Gradient of the NN-PCA component f_i(x) = -1/2 x'(z z')x at x: -(z'x) z.
inline DenseVector nnpca_component_gradient(const SparseRow& z, const DenseVector& x) {
  if (z.dim != static_cast<int>(x.size()))
    throw std::invalid_argument("nnpca_component_gradient: dimension mismatch");
  DenseVector g(x.size(), 0.0);
  z.axpy(-z.dot(x), g);
  return g;
}

}  // namespace hsgd
