#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "stackelberg/types.hpp"

namespace stackelberg {

/// Thrown when a stage cost is evaluated outside its domain (e.g. the
/// argument of a log barrier is not strictly positive).
class CostDomainError : public std::domain_error {
 public:
  CostDomainError(std::string term, const std::string& what)
      : std::domain_error(term + ": " + what), term_(std::move(term)) {}
  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

/// Second-order expansion of one agent's stage cost about (x, u1, u2):
///
///   g(x + dx, u + du) ~ c + q'dx + 1/2 dx'Q dx + sum_j (r_j'du_j + 1/2 du_j'R_j du_j)
///
/// Mixed partials (state-control and control-control across agents) are
/// dropped. R[j] is the Hessian with respect to agent j's controls, so for
/// the cost of agent i, R[i] is the "own" block R^{ii}.
struct QuadraticApproximation {
  Agent owner = Agent::kOne;
  double c = 0.0;
  Matrix Q;
  Vector q;
  std::array<Matrix, 2> R;
  std::array<Vector, 2> r;

  static QuadraticApproximation zero(Agent owner, int n, int m1, int m2);
  /// Evaluates the quadratic model at a displacement.
  double model(const Vector& dx, const Vector& du1, const Vector& du2) const;
};

/// Stage cost g_t^(i)(x, u1, u2) of one agent.
class StageCost {
 public:
  explicit StageCost(Agent owner) : owner_(owner) {}
  virtual ~StageCost() = default;

  Agent owner() const { return owner_; }
  virtual std::string name() const = 0;

  /// Throws CostDomainError outside the admissible domain.
  virtual double evaluate(const Vector& x, const Vector& u1, const Vector& u2) const = 0;
  /// Adds weight * (value, gradients, Hessian blocks) into `out`.
  virtual void accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                          QuadraticApproximation& out) const = 0;
  /// False for costs whose derivatives come from finite differences.
  virtual bool analytic_derivatives() const { return true; }

  QuadraticApproximation quadraticize(const Vector& x, const Vector& u1, const Vector& u2) const;

 private:
  Agent owner_;
};

using StageCostPtr = std::shared_ptr<const StageCost>;

/// J^(i) = sum_t g(x_t, u1_t, u2_t). Sequences must share a length.
double sum_objective(const StageCost& cost, const StateSequence& states, const JointControls& controls);

/// Q <- Q + nu I and R^{ij} <- R^{ij} + nu I; gradients and c are untouched.
QuadraticApproximation convexify(QuadraticApproximation approx, double nu);

/// Smallest nu >= 0 such that Q and the owner's R^{ii} have minimum
/// eigenvalue >= margin after convexify(approx, nu).
double auto_nu(const QuadraticApproximation& approx, double margin);

/// True when Q and the cross-agent R blocks are positive semidefinite and
/// the owner's R^{ii} is positive definite, i.e. the LQ solver precondition
/// holds without any shift.
bool meets_lq_precondition(const QuadraticApproximation& approx);

double min_eigenvalue(const Matrix& symmetric);

// ---------------------------------------------------------------------------
// Cost library.

/// c + q'x + 1/2 x'Qx + sum_j (r_j'u_j + 1/2 u_j'R_j u_j).
class QuadraticCost final : public StageCost {
 public:
  QuadraticCost(Agent owner, Matrix Q, Vector q, Matrix R1, Vector r1, Matrix R2, Vector r2, double c = 0.0);

  std::string name() const override { return "quadratic"; }
  double evaluate(const Vector& x, const Vector& u1, const Vector& u2) const override;
  void accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                  QuadraticApproximation& out) const override;

 private:
  Matrix Q_;
  Vector q_;
  std::array<Matrix, 2> R_;
  std::array<Vector, 2> r_;
  double c_;
};

/// px^2 + py^2 for the planar position at the given joint-state indices.
class SquaredDistanceToOrigin final : public StageCost {
 public:
  SquaredDistanceToOrigin(Agent owner, std::array<int, 2> position) : StageCost(owner), pos_(position) {}
  std::string name() const override { return "distance_to_origin"; }
  double evaluate(const Vector& x, const Vector& u1, const Vector& u2) const override;
  void accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                  QuadraticApproximation& out) const override;

 private:
  std::array<int, 2> pos_;
};

/// ||p_a - p_b||^2 between two planar positions.
class SquaredSeparation final : public StageCost {
 public:
  SquaredSeparation(Agent owner, std::array<int, 2> a, std::array<int, 2> b) : StageCost(owner), a_(a), b_(b) {}
  std::string name() const override { return "separation"; }
  double evaluate(const Vector& x, const Vector& u1, const Vector& u2) const override;
  void accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                  QuadraticApproximation& out) const override;

 private:
  std::array<int, 2> a_, b_;
};

/// ||u_owner||^2. For a unicycle this is yaw_rate^2 + accel^2.
class ControlEffort final : public StageCost {
 public:
  explicit ControlEffort(Agent owner) : StageCost(owner) {}
  std::string name() const override { return "control_effort"; }
  double evaluate(const Vector& x, const Vector& u1, const Vector& u2) const override;
  void accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                  QuadraticApproximation& out) const override;
};

/// -log(s - px) - log(px + s) - log(s - py) - log(py + s): keeps a position
/// inside the origin-centered square of half-width s.
class SquareBarrier final : public StageCost {
 public:
  SquareBarrier(Agent owner, std::array<int, 2> position, double half_width);
  std::string name() const override { return "square_barrier"; }
  double evaluate(const Vector& x, const Vector& u1, const Vector& u2) const override;
  void accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                  QuadraticApproximation& out) const override;

 private:
  std::array<int, 2> pos_;
  double s_;
};

/// sum_j w_j g_j with every w_j > 0. All terms must share the owner.
class WeightedCost final : public StageCost {
 public:
  struct Term {
    double weight;
    StageCostPtr cost;
  };

  WeightedCost(Agent owner, std::vector<Term> terms);

  std::string name() const override { return "weighted"; }
  double evaluate(const Vector& x, const Vector& u1, const Vector& u2) const override;
  void accumulate(const Vector& x, const Vector& u1, const Vector& u2, double weight,
                  QuadraticApproximation& out) const override;
  bool analytic_derivatives() const override;

  const std::vector<Term>& terms() const { return terms_; }

 private:
  std::vector<Term> terms_;
};

/// Shepherd: sheep's squared distance to the origin plus own control effort.
StageCostPtr shepherd_cost(std::array<int, 2> sheep_position);
/// Sheep: squared distance to the shepherd plus own control effort.
StageCostPtr sheep_cost(std::array<int, 2> shepherd_position, std::array<int, 2> sheep_position);
/// Shepherd cost plus a square barrier of half-width s on the sheep.
StageCostPtr barrier_shepherd_cost(std::array<int, 2> sheep_position, double half_width);

}  // namespace stackelberg
