#include <catch2/catch_amalgamated.hpp>

#include "hsgd/losses.hpp"
#include "hsgd/rng.hpp"

using namespace hsgd;

namespace {

double central_diff(LossKind kind, double s, double tau, double h = 1e-6) {
  const double fp = loss_value_and_slope(kind, s + h, tau).value;
  const double fm = loss_value_and_slope(kind, s - h, tau).value;
  return (fp - fm) / (2.0 * h);
}

constexpr LossKind kScalarLosses[] = {LossKind::kSigmoid, LossKind::kTwoLayer,
                                      LossKind::kLogisticDiff, LossKind::kLorenz};

}  // namespace

TEST_CASE("sigmoid loss at zero margin") {
  const auto [value, slope] = loss_value_and_slope(LossKind::kSigmoid, 0.0, 1.0);
  CHECK(value == 1.0);
  CHECK(slope == -1.0);  // -tau * (1 - tanh^2(0))
}

TEST_CASE("lorenz loss vanishes beyond the margin") {
  const auto [value, slope] = loss_value_and_slope(LossKind::kLorenz, 2.0, 1.0);
  CHECK(value == 0.0);
  CHECK(slope == 0.0);
}

TEST_CASE("lorenz loss is continuous at tau*s = 1") {
  for (double tau : {1.0, -1.0}) {
    const double s_edge = 1.0 / tau;
    const auto at = loss_value_and_slope(LossKind::kLorenz, s_edge, tau);
    CHECK(at.value == 0.0);
    CHECK(at.slope == 0.0);
    const auto below = loss_value_and_slope(LossKind::kLorenz, s_edge - tau * 1e-9, tau);
    CHECK(std::fabs(below.value) < 1e-15);
    CHECK(std::fabs(below.slope) < 3e-9);
  }
}

TEST_CASE("logistic difference slope matches finite differences at a spot point") {
  const auto [value, slope] = loss_value_and_slope(LossKind::kLogisticDiff, 0.37, -1.0);
  (void)value;
  const double fd = central_diff(LossKind::kLogisticDiff, 0.37, -1.0);
  CHECK(slope == Catch::Approx(fd).epsilon(1e-6));
}

TEST_CASE("domain and usage errors") {
  CHECK_THROWS_AS(loss_value_and_slope(LossKind::kSigmoid, std::nan(""), 1.0), std::domain_error);
  CHECK_THROWS_AS(
      loss_value_and_slope(LossKind::kSigmoid, std::numeric_limits<double>::infinity(), 1.0),
      std::domain_error);
  CHECK_THROWS_AS(loss_value_and_slope(LossKind::kNnPca, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("gradient consistency: slopes match central differences") {
  auto rng = make_stream(11, 0, 0, StreamLeg::kData);
  for (LossKind kind : kScalarLosses) {
    for (int trial = 0; trial < 100; ++trial) {
      const double s = 8.0 * rng.uniform01() - 4.0;
      const double tau = rng.uniform01() < 0.5 ? -1.0 : 1.0;
      const double got = loss_value_and_slope(kind, s, tau).slope;
      const double fd = central_diff(kind, s, tau);
      const double scale = std::max({1e-6, std::fabs(got), std::fabs(fd)});
      CHECK(std::fabs(got - fd) / scale <= 1e-5);
    }
  }
}

TEST_CASE("smoothness witness: slopes are Lipschitz with the stored constant") {
  auto rng = make_stream(12, 0, 0, StreamLeg::kData);
  for (LossKind kind : kScalarLosses) {
    const double lip = loss_smoothness(kind);
    for (int trial = 0; trial < 1000; ++trial) {
      const double s1 = 10.0 * rng.uniform01() - 5.0;
      const double s2 = 10.0 * rng.uniform01() - 5.0;
      const double tau = rng.uniform01() < 0.5 ? -1.0 : 1.0;
      const double d1 = loss_value_and_slope(kind, s1, tau).slope;
      const double d2 = loss_value_and_slope(kind, s2, tau).slope;
      CHECK(std::fabs(d1 - d2) <= lip * std::fabs(s1 - s2) * (1.0 + 1e-8) + 1e-15);
    }
  }
}

TEST_CASE("per-tag smoothness constants") {
  CHECK(loss_smoothness(LossKind::kSigmoid) == 0.7698);
  CHECK(loss_smoothness(LossKind::kTwoLayer) == 0.15405);
  CHECK(loss_smoothness(LossKind::kLogisticDiff) == 0.092372);
  CHECK(loss_smoothness(LossKind::kLorenz) == 4.0);
  CHECK(loss_smoothness(LossKind::kNnPca) == 1.0);
}

TEST_CASE("loss name round trip") {
  for (LossKind kind : kScalarLosses) CHECK(loss_from_name(loss_name(kind)) == kind);
  CHECK_THROWS_AS(loss_from_name("huber"), std::invalid_argument);
}
