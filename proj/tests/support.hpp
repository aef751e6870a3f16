#pragma once

// Independent oracles shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>
#include <random>

#include "stackelberg/costs.hpp"
#include "stackelberg/driving_costs.hpp"
#include "stackelberg/road.hpp"
#include "stackelberg/dynamics.hpp"
#include "stackelberg/game.hpp"

namespace oracle {

using namespace stackelberg;

// ---------------------------------------------------------------------------
// 1-D minimization. A coarse search brackets the minimum, then a parabola
// through three points 1e-2 apart gives the vertex. The vertex step is exact
// for quadratics and smooth in any parameters of f, which keeps nested
// searches from amplifying the bracketing error.

inline double parabolic_vertex(const std::function<double(double)>& f, double u, double h = 1e-2) {
  const double fm = f(u - h), f0 = f(u), fp = f(u + h);
  const double curv = fp - 2.0 * f0 + fm;
  if (!(curv > 0.0)) return u;
  return u - h * (fp - fm) / (2.0 * curv);
}

// Grid refinement: evaluate a uniform grid, recentre on the best point,
// shrink to two grid spacings, repeat; then the vertex step.
inline double grid_argmin(const std::function<double(double)>& f, double center, double half_width,
                          double tol = 1e-6, int points = 41) {
  double best = center;
  while (half_width > tol) {
    const double h = 2.0 * half_width / (points - 1);
    double best_val = std::numeric_limits<double>::infinity();
    const double lo = center - half_width;
    for (int i = 0; i < points; ++i) {
      const double u = lo + i * h;
      const double v = f(u);
      if (v < best_val) best_val = v, best = u;
    }
    center = best;
    half_width = 2.0 * h;
  }
  return parabolic_vertex(f, best);
}

// Golden-section search on [lo, hi] for a unimodal f, then the vertex step.
inline double golden_argmin(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-6) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = f(c), fd = f(d);
  while (hi - lo > tol) {
    if (fc < fd) {
      hi = d, d = c, fd = fc;
      c = hi - g * (hi - lo), fc = f(c);
    } else {
      lo = c, c = d, fc = fd;
      d = lo + g * (hi - lo), fd = f(d);
    }
  }
  return parabolic_vertex(f, 0.5 * (lo + hi));
}

// ---------------------------------------------------------------------------
// Scalar LQ Stackelberg games.

struct ScalarGame {
  int T = 2;
  double a = 1.0, b1 = 1.0, b2 = 1.0;
  // Agent i: 1/2 Q x^2 + q x + sum_j (1/2 R[j] u_j^2 + r[j] u_j).
  std::array<double, 2> Q{}, q{};
  std::array<std::array<double, 2>, 2> R{}, r{};
  Agent leader = Agent::kOne;

  double stage_cost(int i, double x, double u1, double u2) const {
    const double u[2] = {u1, u2};
    double c = 0.5 * Q[i] * x * x + q[i] * x;
    for (int j = 0; j < 2; ++j) c += 0.5 * R[i][j] * u[j] * u[j] + r[i][j] * u[j];
    return c;
  }
  double next(double x, double u1, double u2) const { return a * x + b1 * u1 + b2 * u2; }

  GameDefinition definition() const {
    auto one = [](double v) { return Matrix::Constant(1, 1, v); };
    auto vec = [](double v) { return Vector::Constant(1, v); };
    auto model = std::make_shared<LinearModel>(one(a), one(b1), one(b2), 1.0);
    std::array<StageCostPtr, 2> costs;
    for (int i = 0; i < 2; ++i)
      costs[i] = std::make_shared<QuadraticCost>(Agent(i), one(Q[i]), vec(q[i]), one(R[i][0]), vec(r[i][0]),
                                                 one(R[i][1]), vec(r[i][1]));
    return {model, costs, T, leader};
  }
};

inline ScalarGame random_scalar_game(std::mt19937_64& rng, int T) {
  std::uniform_real_distribution<double> pos(0.3, 2.0), any(-1.0, 1.0), cross(0.0, 0.5);
  ScalarGame g;
  g.T = T;
  g.a = 1.0 + 0.3 * any(rng);
  g.b1 = any(rng);
  g.b2 = any(rng);
  if (std::abs(g.b1) < 0.2) g.b1 = std::copysign(0.2, g.b1);
  if (std::abs(g.b2) < 0.2) g.b2 = std::copysign(0.2, g.b2);
  for (int i = 0; i < 2; ++i) {
    g.Q[i] = pos(rng);
    g.q[i] = any(rng);
    g.R[i][i] = pos(rng);
    g.R[i][1 - i] = cross(rng);
    g.r[i][0] = any(rng);
    g.r[i][1] = any(rng);
  }
  g.leader = std::bernoulli_distribution(0.5)(rng) ? Agent::kOne : Agent::kTwo;
  return g;
}

// Backward nested minimization. At each stage the follower's reply to a
// leader control is found by grid refinement, and the leader's control by
// grid refinement over its cost with that reply substituted. The cost-to-go
// of the next stage enters through a quadratic fitted to three sampled
// equilibrium values, which is exact when continuation values are
// quadratic in x.
class NestedOracle {
 public:
  explicit NestedOracle(const ScalarGame& g, double half_width = 25.0) : g_(g), hw_(half_width) {
    V_.assign(g.T + 1, {Quadratic{}, Quadratic{}});
    for (int t = g.T - 1; t >= 0; --t) {
      const double xs[3] = {-1.0, 0.0, 1.0};
      std::array<std::array<double, 3>, 2> vals{};
      for (int k = 0; k < 3; ++k) {
        const auto v = stage_values(t, xs[k]);
        vals[0][k] = v[0];
        vals[1][k] = v[1];
      }
      for (int i = 0; i < 2; ++i)
        V_[t][i] = {0.5 * (vals[i][2] + vals[i][0]) - vals[i][1], 0.5 * (vals[i][2] - vals[i][0]), vals[i][1]};
    }
  }

  // Follower's best reply at stage t (0-based) to leader control uL.
  double follower_reply(int t, double x, double uL) const {
    const int f = 1 - index(g_.leader);
    return grid_argmin([&](double uF) { return follower_objective(t, x, uL, uF, f); }, 0.0, hw_);
  }

  // Equilibrium (u1, u2) at stage t from state x.
  std::array<double, 2> controls(int t, double x) const {
    const int l = index(g_.leader);
    const double uL = grid_argmin(
        [&](double uL) {
          const double uF = follower_reply(t, x, uL);
          return objective(t, x, uL, uF, l);
        },
        0.0, hw_);
    const double uF = follower_reply(t, x, uL);
    return l == 0 ? std::array<double, 2>{uL, uF} : std::array<double, 2>{uF, uL};
  }

  // Equilibrium cost-to-go of both agents from stage t.
  std::array<double, 2> value(int t, double x) const { return {V_[t][0](x), V_[t][1](x)}; }

 private:
  struct Quadratic {
    double a2 = 0.0, a1 = 0.0, a0 = 0.0;
    double operator()(double x) const { return a2 * x * x + a1 * x + a0; }
  };

  double total(int t, double x, double u1, double u2, int i) const {
    const double v = t + 1 < g_.T ? V_[t + 1][i](g_.next(x, u1, u2)) : 0.0;
    return g_.stage_cost(i, x, u1, u2) + v;
  }
  double objective(int t, double x, double uL, double uF, int i) const {
    return index(g_.leader) == 0 ? total(t, x, uL, uF, i) : total(t, x, uF, uL, i);
  }
  double follower_objective(int t, double x, double uL, double uF, int f) const { return objective(t, x, uL, uF, f); }

  std::array<double, 2> stage_values(int t, double x) const {
    const auto u = controls(t, x);
    return {total(t, x, u[0], u[1], 0), total(t, x, u[0], u[1], 1)};
  }

  ScalarGame g_;
  double hw_;
  std::vector<std::array<Quadratic, 2>> V_;
};

// Fully nested search with no value fitting: the cost-to-go is obtained by
// recursively solving every later stage, with golden-section line searches.
// Exponential in T; used to cross-check NestedOracle on short horizons.
class BruteForceOracle {
 public:
  explicit BruteForceOracle(const ScalarGame& g, double half_width = 25.0, double tol = 1e-6)
      : g_(g), hw_(half_width), tol_(tol) {}

  std::array<double, 2> controls(int t, double x) const {
    const int l = index(g_.leader);
    auto reply = [&](double uL) {
      return golden_argmin([&](double uF) { return split(t, x, uL, uF)[1 - l]; }, -hw_, hw_, tol_);
    };
    const double uL = golden_argmin([&](double uL) { return split(t, x, uL, reply(uL))[l]; }, -hw_, hw_, tol_);
    const double uF = reply(uL);
    return l == 0 ? std::array<double, 2>{uL, uF} : std::array<double, 2>{uF, uL};
  }

  std::array<double, 2> value(int t, double x) const {
    if (t >= g_.T) return {0.0, 0.0};
    const auto u = controls(t, x);
    const auto next = value(t + 1, g_.next(x, u[0], u[1]));
    return {g_.stage_cost(0, x, u[0], u[1]) + next[0], g_.stage_cost(1, x, u[0], u[1]) + next[1]};
  }

 private:
  std::array<double, 2> split(int t, double x, double uL, double uF) const {
    const bool one = index(g_.leader) == 0;
    const double u1 = one ? uL : uF, u2 = one ? uF : uL;
    const auto next = value(t + 1, g_.next(x, u1, u2));
    return {g_.stage_cost(0, x, u1, u2) + next[0], g_.stage_cost(1, x, u1, u2) + next[1]};
  }

  ScalarGame g_;
  double hw_, tol_;
};

// ---------------------------------------------------------------------------
// Central-difference derivative checks.

struct DerivativeError {
  double gradient = 0.0;  // worst relative error over q, r
  double hessian = 0.0;   // worst relative error over Q, R
};

// Relative error with the scale floored at 1 so entries near zero are
// compared absolutely.
inline double rel(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

// Gradient from central differences of evaluate(); Hessian from central
// differences of the analytic gradient. Mixed state/control and cross-agent
// control partials are not part of the expansion and are not checked.
inline DerivativeError check_cost_derivatives(const StageCost& cost, const Vector& x, const Vector& u1,
                                              const Vector& u2, double h = 1e-6) {
  DerivativeError e;
  const QuadraticApproximation qa = cost.quadraticize(x, u1, u2);
  const std::array<const Vector*, 3> base{&x, &u1, &u2};

  auto eval_shift = [&](int block, int k, double d) {
    Vector v[3] = {x, u1, u2};
    v[block](k) += d;
    return cost.evaluate(v[0], v[1], v[2]);
  };
  auto grad_shift = [&](int block, int k, double d) {
    Vector v[3] = {x, u1, u2};
    v[block](k) += d;
    const QuadraticApproximation s = cost.quadraticize(v[0], v[1], v[2]);
    return block == 0 ? s.q : s.r[block - 1];
  };

  for (int block = 0; block < 3; ++block) {
    const Vector& g = block == 0 ? qa.q : qa.r[block - 1];
    const Matrix& H = block == 0 ? qa.Q : qa.R[block - 1];
    for (int k = 0; k < base[block]->size(); ++k) {
      const double fd = (eval_shift(block, k, h) - eval_shift(block, k, -h)) / (2.0 * h);
      e.gradient = std::max(e.gradient, rel(g(k), fd));
      const Vector col = (grad_shift(block, k, h) - grad_shift(block, k, -h)) / (2.0 * h);
      for (int j = 0; j < col.size(); ++j) e.hessian = std::max(e.hessian, rel(H(j, k), col(j)));
    }
  }
  return e;
}

// Worst relative error of the model's Jacobians against central differences
// of step().
inline double check_jacobians(const DynamicsModel& model, const Vector& x, const Vector& u1, const Vector& u2,
                              double h = 1e-6) {
  const LinearizedDynamics lin = model.linearize(x, u1, u2);
  double worst = 0.0;
  auto compare = [&](const Matrix& J, int block) {
    const Vector* v[3] = {&x, &u1, &u2};
    for (int k = 0; k < v[block]->size(); ++k) {
      Vector p[3] = {x, u1, u2}, m[3] = {x, u1, u2};
      p[block](k) += h;
      m[block](k) -= h;
      const Vector col = (model.step(p[0], p[1], p[2]) - model.step(m[0], m[1], m[2])) / (2.0 * h);
      for (int j = 0; j < col.size(); ++j) worst = std::max(worst, rel(J(j, k), col(j)));
    }
  };
  compare(lin.A, 0);
  compare(lin.B[0], 1);
  compare(lin.B[1], 2);
  return worst;
}

// ---------------------------------------------------------------------------
// Every library cost with a sampler of interior points, for derivative
// checks. States use the two-agent layouts of the built-in models.

struct CostPoint {
  Vector x, u1, u2;
};

struct CatalogueEntry {
  std::string name;
  StageCostPtr cost;
  std::function<CostPoint(std::mt19937_64&)> sample;
};

inline std::vector<CatalogueEntry> cost_catalogue() {
  using U = std::uniform_real_distribution<double>;
  auto controls = [](std::mt19937_64& rng, CostPoint& p) {
    U u(-3.0, 3.0);
    p.u1 = Vector::NullaryExpr(2, [&] { return u(rng); });
    p.u2 = Vector::NullaryExpr(2, [&] { return u(rng); });
  };
  auto free_point = [controls](std::mt19937_64& rng) {
    U u(-4.0, 4.0);
    CostPoint p;
    p.x = Vector::NullaryExpr(8, [&] { return u(rng); });
    controls(rng, p);
    return p;
  };
  const auto a1 = UnicycleIndices::for_offset(0), a2 = UnicycleIndices::for_offset(4);
  // Unicycle driving state: both agents on the road between the given
  // lateral limits, headings near +y, speeds below the limit, apart.
  auto road_point = [controls](const RoadGeometry& road, double length) {
    return [controls, &road, length](std::mt19937_64& rng) {
      CostPoint p;
      p.x.resize(8);
      do {
        for (int a = 0; a < 2; ++a) {
          const double y = U(0.0, length)(rng);
          const LaneBounds b = road.bounds(y, Agent(a));
          p.x(4 * a) = U(b.left + 0.05, b.right - 0.05)(rng);
          p.x(4 * a + 1) = y;
          p.x(4 * a + 2) = std::numbers::pi / 2 + U(-0.9, 0.9)(rng);
          p.x(4 * a + 3) = U(-30.0, 30.0)(rng);
        }
      } while ((p.x.segment<2>(0) - p.x.segment<2>(4)).squaredNorm() < 0.3);
      controls(rng, p);
      return p;
    };
  };
  static const RoadGeometry two_way = RoadGeometry::two_way(2.5, 150.0);
  static const RoadGeometry merging = RoadGeometry::merging(2.5, 30.0, 30.0, 100.0);
  auto two_way_ptr = std::shared_ptr<const RoadGeometry>(&two_way, [](const RoadGeometry*) {});
  auto merging_ptr = std::shared_ptr<const RoadGeometry>(&merging, [](const RoadGeometry*) {});

  std::mt19937_64 rng(99);
  U u(-1.0, 1.0);
  Matrix A = Matrix::NullaryExpr(8, 8, [&] { return u(rng); });
  auto rvec = [&](int n) { return Vector(Vector::NullaryExpr(n, [&] { return u(rng); })); };
  auto rmat = [&](int n) {
    Matrix M = Matrix::NullaryExpr(n, n, [&] { return u(rng); });
    return Matrix(M * M.transpose());
  };

  DrivingCostParams passing;
  passing.goal = Eigen::Vector4d(1.25, 150.0, std::numbers::pi / 2, 10.0);
  DrivingCostParams merge = passing;
  merge.goal(0) = 0.0;
  merge.use_center_line = false;

  const std::array<int, 2> di1{0, 2}, di2{4, 6};
  std::vector<CatalogueEntry> c{
      {"quadratic",
       std::make_shared<QuadraticCost>(Agent::kOne, Matrix(A * A.transpose()), rvec(8), rmat(2), rvec(2), rmat(2),
                                       rvec(2), 0.3),
       free_point},
      {"distance_to_origin", std::make_shared<SquaredDistanceToOrigin>(Agent::kOne, di2), free_point},
      {"separation", std::make_shared<SquaredSeparation>(Agent::kTwo, di1, di2), free_point},
      {"control_effort", std::make_shared<ControlEffort>(Agent::kTwo), free_point},
      {"shepherd", shepherd_cost(di2), free_point},
      {"sheep", sheep_cost(di1, di2), free_point},
      {"square_barrier", std::make_shared<SquareBarrier>(Agent::kOne, a2.position(), 5.0), free_point},
      {"barrier_shepherd", barrier_shepherd_cost(a2.position(), 5.0), free_point},
      {"goal_distance",
       std::make_shared<GoalDistance>(Agent::kOne, a1, passing.goal, passing.goal_weights), road_point(two_way, 150.0)},
      {"collision_barrier", std::make_shared<CollisionBarrier>(Agent::kTwo, a2.position(), a1.position(), 0.2),
       road_point(two_way, 150.0)},
      {"speed_heading_barrier",
       std::make_shared<SpeedHeadingBarrier>(Agent::kOne, a1, 35.0, std::numbers::pi / 3, std::numbers::pi / 2),
       road_point(two_way, 150.0)},
      {"lane_boundary_two_way", std::make_shared<LaneBoundaryBarrier>(Agent::kOne, a1, two_way_ptr),
       road_point(two_way, 150.0)},
      {"lane_boundary_merging", std::make_shared<LaneBoundaryBarrier>(Agent::kTwo, a2, merging_ptr),
       road_point(merging, 100.0)},
      {"center_line_gaussian", std::make_shared<CenterLineGaussian>(Agent::kTwo, a2, 0.0, 1.25, 1e3),
       road_point(two_way, 150.0)},
      {"driving_passing", driving_cost(Agent::kTwo, passing, two_way_ptr), road_point(two_way, 150.0)},
      {"driving_merging", driving_cost(Agent::kOne, merge, merging_ptr), road_point(merging, 100.0)},
  };
  return c;
}

}  // namespace oracle
