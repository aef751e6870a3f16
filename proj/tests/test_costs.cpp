#include <gtest/gtest.h>

#include <cmath>

#include "stackelberg/costs.hpp"
#include "support.hpp"

using namespace stackelberg;

namespace {

const std::array<int, 2> kP1{0, 2}, kP2{4, 6};

Vector sheep_at(double px, double py) {
  Vector x = Vector::Zero(8);
  x(4) = px;
  x(6) = py;
  return x;
}

}  // namespace

TEST(Costs, ShepherdAndSheepValues) {
  EXPECT_DOUBLE_EQ(shepherd_cost(kP2)->evaluate(sheep_at(3, 4), Vector::Zero(2), Vector::Zero(2)), 25.0);
  Vector u2(2);
  u2 << 1, 0;
  EXPECT_DOUBLE_EQ(sheep_cost(kP1, kP2)->evaluate(Vector::Zero(8), Vector::Zero(2), u2), 1.0);
}

TEST(Costs, BarrierShepherdValueAndCurvature) {
  const std::array<int, 2> p2{4, 5};
  auto c = barrier_shepherd_cost(p2, 5.0);
  const Vector x = Vector::Zero(8), z = Vector::Zero(2);
  EXPECT_NEAR(c->evaluate(x, z, z), -4.0 * std::log(5.0), 1e-12);
  EXPECT_NEAR(c->evaluate(x, z, z), -6.4377516497364, 1e-10);
  const auto qa = c->quadraticize(x, z, z);
  EXPECT_NEAR(qa.Q(4, 4), 2.0 + 0.08, 1e-12);
  EXPECT_NEAR(qa.Q(5, 5), 2.0 + 0.08, 1e-12);
}

TEST(Costs, BarrierDomainErrorNamesTheTerm) {
  auto c = barrier_shepherd_cost({4, 5}, 5.0);
  Vector x = Vector::Zero(8);
  x(4) = 5.0;
  try {
    c->evaluate(x, Vector::Zero(2), Vector::Zero(2));
    FAIL() << "expected a domain error";
  } catch (const CostDomainError& e) {
    EXPECT_EQ(e.term(), "square_barrier");
  }
}

TEST(Costs, SumObjective) {
  auto c = shepherd_cost(kP2);
  const Vector x = sheep_at(1, 0);
  EXPECT_DOUBLE_EQ(sum_objective(*c, {x}, zero_controls(1, 2, 2)), c->evaluate(x, Vector::Zero(2), Vector::Zero(2)));
  EXPECT_DOUBLE_EQ(sum_objective(*c, {x, x, x}, zero_controls(3, 2, 2)), 3.0);
  EXPECT_THROW(sum_objective(*c, {x, x}, zero_controls(3, 2, 2)), std::invalid_argument);
}

TEST(Costs, ShepherdExpansionAtOrigin) {
  const auto qa = shepherd_cost(kP2)->quadraticize(Vector::Zero(8), Vector::Zero(2), Vector::Zero(2));
  Matrix Q = Matrix::Zero(8, 8);
  Q(4, 4) = Q(6, 6) = 2.0;
  EXPECT_EQ(qa.Q, Q);
  EXPECT_TRUE(qa.q.isZero());
  EXPECT_EQ(qa.R[0], Matrix(2.0 * Matrix::Identity(2, 2)));
  EXPECT_TRUE(qa.r[0].isZero());
}

TEST(Costs, QuadraticCostsAreReproducedExactly) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  auto rv = [&](int n) { return Vector(Vector::NullaryExpr(n, [&] { return u(rng); })); };
  for (auto cost : {shepherd_cost(kP2), sheep_cost(kP1, kP2)}) {
    const Vector x = rv(8), u1 = rv(2), u2 = rv(2);
    const auto qa = cost->quadraticize(x, u1, u2);
    for (int k = 0; k < 20; ++k) {
      const Vector dx = rv(8), d1 = rv(2), d2 = rv(2);
      const double truth = cost->evaluate(x + dx, u1 + d1, u2 + d2);
      // The sheep cost couples two positions; its expansion keeps that
      // coupling in Q, so the state part is exact. Control parts are separable.
      EXPECT_NEAR(qa.model(dx, d1, d2), truth, 1e-10);
    }
  }
}

TEST(Costs, TaylorResidualIsThirdOrder) {
  std::mt19937_64 rng(8);
  for (const auto& entry : oracle::cost_catalogue()) {
    if (entry.name == "quadratic" || entry.name == "distance_to_origin" || entry.name == "separation" ||
        entry.name == "control_effort" || entry.name == "shepherd" || entry.name == "sheep")
      continue;
    const auto p = entry.sample(rng);
    const auto qa = entry.cost->quadraticize(p.x, p.u1, p.u2);
    std::normal_distribution<double> n;
    Vector dx = Vector::NullaryExpr(8, [&] { return n(rng); });
    dx = 1e-3 * dx / dx.norm();
    const Vector z = Vector::Zero(2);
    auto residual = [&](double s) {
      return std::abs(entry.cost->evaluate(p.x + s * dx, p.u1, p.u2) - qa.model(s * dx, z, z));
    };
    const double r1 = residual(1.0), r2 = residual(0.5);
    if (r1 < 1e-12) continue;  // locally quadratic along dx
    EXPECT_GE(r1 / r2, 7.0) << entry.name;
  }
}

TEST(Costs, ConvexifyShiftsEigenvalues) {
  auto qa = QuadraticApproximation::zero(Agent::kOne, 2, 1, 1);
  qa.Q.diagonal() << -1.0, 3.0;
  qa.q << 0.5, -0.25;
  qa.R[0](0, 0) = 1.0;
  const auto same = convexify(qa, 0.0);
  EXPECT_EQ(same.Q, qa.Q);
  EXPECT_EQ(same.R[0], qa.R[0]);
  const auto shifted = convexify(qa, 2.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(shifted.Q);
  EXPECT_NEAR(es.eigenvalues()(0), 1.0, 1e-12);
  EXPECT_NEAR(es.eigenvalues()(1), 5.0, 1e-12);
  EXPECT_EQ(shifted.q, qa.q);
  EXPECT_EQ(shifted.c, qa.c);
  EXPECT_DOUBLE_EQ(shifted.R[1](0, 0), 2.0);
}

TEST(Costs, ConvexifyMinEigenvalueProbe) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n;
  for (int k = 0; k < 50; ++k) {
    auto qa = QuadraticApproximation::zero(Agent::kTwo, 5, 2, 2);
    const Matrix M = Matrix::NullaryExpr(5, 5, [&] { return n(rng); });
    qa.Q = 0.5 * (M + M.transpose());
    const double nu = std::abs(n(rng));
    EXPECT_NEAR(min_eigenvalue(convexify(qa, nu).Q), min_eigenvalue(qa.Q) + nu, 1e-10);
    EXPECT_TRUE(convexify(qa, nu).Q.isApprox(convexify(qa, nu).Q.transpose()));
  }
}

TEST(Costs, AutoNu) {
  auto pd = QuadraticApproximation::zero(Agent::kOne, 2, 1, 1);
  pd.Q = Matrix::Identity(2, 2);
  pd.R[0](0, 0) = 1.0;
  EXPECT_EQ(auto_nu(pd, 0.1), 0.0);

  auto ind = pd;
  ind.Q.diagonal() << -1.0, 3.0;
  EXPECT_NEAR(auto_nu(ind, 0.1), 1.1, 1e-12);

  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  for (int k = 0; k < 50; ++k) {
    auto qa = QuadraticApproximation::zero(Agent::kTwo, 4, 2, 3);
    const Matrix M = Matrix::NullaryExpr(4, 4, [&] { return n(rng); });
    const Matrix N = Matrix::NullaryExpr(3, 3, [&] { return n(rng); });
    qa.Q = 0.5 * (M + M.transpose());
    qa.R[1] = 0.5 * (N + N.transpose());
    const double nu = auto_nu(qa, 1e-3);
    const auto c = convexify(qa, nu);
    const double lo = std::min(min_eigenvalue(c.Q), min_eigenvalue(c.R[1]));
    EXPECT_GE(lo, 1e-3 - 1e-12);
    EXPECT_LE(lo, 1e-3 + 1e-9);
  }
}

TEST(Costs, WeightedCostIsTheWeightedSum) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> w(0.1, 3.0), u(-2.0, 2.0);
  auto a = shepherd_cost(kP2);
  auto b = std::make_shared<SquaredSeparation>(Agent::kOne, kP1, kP2);
  auto e = std::make_shared<ControlEffort>(Agent::kOne);
  for (int k = 0; k < 20; ++k) {
    const double wa = w(rng), wb = w(rng), we = w(rng);
    WeightedCost c(Agent::kOne, {{wa, a}, {wb, b}, {we, e}});
    const Vector x = Vector::NullaryExpr(8, [&] { return u(rng); });
    const Vector u1 = Vector::NullaryExpr(2, [&] { return u(rng); }), u2 = Vector::NullaryExpr(2, [&] { return u(rng); });
    const double expect = wa * a->evaluate(x, u1, u2) + wb * b->evaluate(x, u1, u2) + we * e->evaluate(x, u1, u2);
    EXPECT_NEAR(c.evaluate(x, u1, u2), expect, 1e-12 * std::max(1.0, std::abs(expect)));
  }
  EXPECT_THROW(WeightedCost(Agent::kOne, {{0.0, a}}), std::invalid_argument);
  EXPECT_THROW(WeightedCost(Agent::kOne, {{1.0, std::make_shared<ControlEffort>(Agent::kTwo)}}),
               std::invalid_argument);
}

TEST(Costs, LibraryDerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(1234);
  for (const auto& entry : oracle::cost_catalogue()) {
    double g = 0.0, h = 0.0;
    for (int k = 0; k < 100; ++k) {
      const auto p = entry.sample(rng);
      const auto e = oracle::check_cost_derivatives(*entry.cost, p.x, p.u1, p.u2);
      g = std::max(g, e.gradient);
      h = std::max(h, e.hessian);
    }
    EXPECT_LT(g, 1e-4) << entry.name;
    EXPECT_LT(h, 1e-4) << entry.name;
  }
}

TEST(Costs, LQPrecondition) {
  auto qa = QuadraticApproximation::zero(Agent::kOne, 2, 1, 1);
  qa.R[0](0, 0) = 1.0;
  EXPECT_TRUE(meets_lq_precondition(qa));
  qa.Q(0, 0) = -1e-3;
  EXPECT_FALSE(meets_lq_precondition(qa));
}
