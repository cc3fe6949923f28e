#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "hsgd/dataset.hpp"
#include "hsgd/losses.hpp"
#include "hsgd/problem.hpp"
#include "hsgd/rng.hpp"

namespace hsgd {

struct SyntheticSpec {
  enum class Kind { kQuadraticFiniteSum, kNnPcaGaussian, kSeparableLogistic };
  Kind kind = Kind::kQuadraticFiniteSum;
  long n = 16;
  int p = 8;
  std::uint64_t seed = 1;
  double noise = 0.0;
};

struct SyntheticProblem {
  CompositeProblem problem;
  std::optional<DenseVector> ground_truth;  // minimizer (quadratic) or separator (logistic)
  std::optional<Dataset> dataset;           // sample rows, when the problem has them
};

namespace detail {

inline SparseRow dense_gaussian_unit_row(RngStream& rng, int p, double spike = 0.0) {
  SparseRow row;
  row.dim = p;
  row.indices.resize(static_cast<std::size_t>(p));
  row.values.resize(static_cast<std::size_t>(p));
  double sq = 0.0;
  for (int j = 0; j < p; ++j) {
    row.indices[static_cast<std::size_t>(j)] = j;
    const double v = rng.gaussian() + spike;
    row.values[static_cast<std::size_t>(j)] = v;
    sq += v * v;
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (double& v : row.values) v *= inv;
  return row;
}

}  // namespace detail

// Synthetic problems with known structure:
//  - QuadraticFiniteSum: f_i(x) = 1/2 ||A_i x - b_i||^2 with b_i = A_i x* (+ noise);
//    ground truth is the smooth part's minimizer when noise = 0.
//  - NnPcaGaussian: NN-PCA over Gaussian unit rows (L = 1); `noise` plants a
//    spike along the all-ones direction (rows ~ normalize(g + noise * 1)),
//    separating the top eigenvalue from the bulk.
//  - SeparableLogistic: logistic-difference loss with a planted separator;
//    label noise flips each label with probability `noise`.
inline SyntheticProblem make_synthetic(const SyntheticSpec& spec) {
  SyntheticProblem out;
  auto rng = make_stream(spec.seed, 0, 0, StreamLeg::kData);
  switch (spec.kind) {
    case SyntheticSpec::Kind::kQuadraticFiniteSum: {
      DenseVector x_star(static_cast<std::size_t>(spec.p));
      for (double& v : x_star) v = rng.gaussian();
      std::vector<QuadraticFamily::Component> comps;
      comps.reserve(static_cast<std::size_t>(spec.n));
      double max_row_sq = 0.0;
      for (long i = 0; i < spec.n; ++i) {
        QuadraticFamily::Component c;
        c.rows = spec.p;
        c.a.resize(static_cast<std::size_t>(spec.p) * spec.p);
        for (double& v : c.a) v = rng.gaussian() / std::sqrt(static_cast<double>(spec.p));
        c.b.assign(static_cast<std::size_t>(spec.p), 0.0);
        for (int r = 0; r < spec.p; ++r) {
          double s = 0.0;
          for (int j = 0; j < spec.p; ++j)
            s += c.a[static_cast<std::size_t>(r) * spec.p + j] * x_star[static_cast<std::size_t>(j)];
          c.b[static_cast<std::size_t>(r)] = s + spec.noise * rng.gaussian();
        }
        double frob = 0.0;
        for (double v : c.a) frob += v * v;
        max_row_sq = std::max(max_row_sq, frob);
        comps.push_back(std::move(c));
      }
      out.problem.family = std::make_shared<QuadraticFamily>(std::move(comps), spec.p);
      out.problem.reg = Regularizer::zero();
      // ||A_i' A_i|| <= ||A_i||_F^2 bounds each component's curvature
      out.problem.smoothness = max_row_sq;
      if (spec.noise == 0.0) out.ground_truth = x_star;
      return out;
    }
    case SyntheticSpec::Kind::kNnPcaGaussian: {
      Dataset ds;
      ds.dim = spec.p;
      ds.normalized = true;
      ds.rows.reserve(static_cast<std::size_t>(spec.n));
      for (long i = 0; i < spec.n; ++i)
        ds.rows.push_back(detail::dense_gaussian_unit_row(rng, spec.p, spec.noise));
      out.problem.family = std::make_shared<NnPcaFamily>(ds.rows);
      out.problem.reg = Regularizer::nonneg_ball();
      out.problem.smoothness = 1.0;
      out.dataset = std::move(ds);
      return out;
    }
    case SyntheticSpec::Kind::kSeparableLogistic: {
      DenseVector separator(static_cast<std::size_t>(spec.p));
      for (double& v : separator) v = rng.gaussian();
      Dataset ds;
      ds.dim = spec.p;
      ds.normalized = true;
      ds.rows.reserve(static_cast<std::size_t>(spec.n));
      ds.labels.reserve(static_cast<std::size_t>(spec.n));
      for (long i = 0; i < spec.n; ++i) {
        SparseRow row = detail::dense_gaussian_unit_row(rng, spec.p);
        double label = row.dot(separator) >= 0.0 ? 1.0 : -1.0;
        if (spec.noise > 0.0 && rng.uniform01() < spec.noise) label = -label;
        ds.rows.push_back(std::move(row));
        ds.labels.push_back(label);
      }
      out.problem.family =
          std::make_shared<LinearLossFamily>(ds.rows, ds.labels, LossKind::kLogisticDiff);
      out.problem.reg = Regularizer::l1(1.0 / static_cast<double>(spec.n));
      out.problem.smoothness = loss_smoothness(LossKind::kLogisticDiff);
      out.ground_truth = std::move(separator);
      out.dataset = std::move(ds);
      return out;
    }
  }
  throw std::invalid_argument("make_synthetic: unknown kind");
}

inline SyntheticSpec::Kind synthetic_kind_from_name(const std::string& name) {
  if (name == "quadratic") return SyntheticSpec::Kind::kQuadraticFiniteSum;
  if (name == "nnpca_gaussian") return SyntheticSpec::Kind::kNnPcaGaussian;
  if (name == "separable_logistic") return SyntheticSpec::Kind::kSeparableLogistic;
  throw std::invalid_argument("unknown synthetic kind: " + name);
}

inline const char* synthetic_kind_name(SyntheticSpec::Kind kind) {
  switch (kind) {
    case SyntheticSpec::Kind::kQuadraticFiniteSum: return "quadratic";
    case SyntheticSpec::Kind::kNnPcaGaussian: return "nnpca_gaussian";
    case SyntheticSpec::Kind::kSeparableLogistic: return "separable_logistic";
  }
  return "?";
}

}  // namespace hsgd
