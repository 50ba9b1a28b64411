#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace wsdo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// min f(x)  s.t.  g(x) <= 0,  h(x) = 0,  lower <= x <= upper.
// Missing gradient/Jacobian callbacks fall back to central differences with
// a relative step of 1e-6. Bounds may be +-infinity.
struct NlpProblem {
  int dimension = 0;
  std::function<double(const Vector&)> objective;
  std::function<Vector(const Vector&)> gradient;
  int inequality_count = 0;
  std::function<Vector(const Vector&)> inequalities;
  std::function<Matrix(const Vector&)> inequality_jacobian;
  int equality_count = 0;
  std::function<Vector(const Vector&)> equalities;
  std::function<Matrix(const Vector&)> equality_jacobian;
  Vector lower;
  Vector upper;
};

enum class NlpStatus { converged, max_iter, infeasible };

std::string to_string(NlpStatus status);

struct NlpResult {
  Vector x;
  double objective = 0.0;
  double kkt_residual = 0.0;   // max of stationarity and complementarity
  double max_violation = 0.0;  // max(g, |h|, bound violation), clipped at 0
  int iterations = 0;
  NlpStatus status = NlpStatus::max_iter;
  Vector lambda;        // inequality multipliers, >= 0
  Vector mu;            // equality multipliers
  Vector bound_lambda;  // upper minus lower bound multipliers
};

struct SqpOptions {
  int max_iter = 300;
  double armijo = 1e-4;
  int max_backtracks = 40;
};

NlpResult sqp_solve(const NlpProblem& problem, const Vector& x0, double tol,
                    const SqpOptions& options = {});

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x);
Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& g, const Vector& x,
                                  int rows);

// Strictly convex QP: min 1/2 x'Gx + c'x  s.t.  Aeq x = beq,  Ain x <= bin.
// Goldfarb-Idnani dual active-set method; G must be positive definite.
struct QpResult {
  bool feasible = false;
  Vector x;
  Vector lambda; // per inequality row, >= 0
  Vector mu;     // per equality row (sign: G x + c + Ain' lambda + Aeq' mu = 0)
  double objective = 0.0;
};

QpResult solve_qp(const Matrix& G, const Vector& c, const Matrix& Aeq, const Vector& beq,
                  const Matrix& Ain, const Vector& bin);

} // namespace wsdo
