#include <cmath>

#include "doctest.h"
#include "wsdo/rng.hpp"
#include "wsdo/sqp.hpp"

using namespace wsdo;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Oracle: enumerate every active set, solve the equality-constrained KKT
// system, keep the primal-feasible dual-feasible candidate.
bool enumerate_qp(const Matrix& G, const Vector& c, const Matrix& A, const Vector& b, Vector& best) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(G.rows());
  bool found = false;
  double best_obj = INFINITY;
  for (int mask = 0; mask < (1 << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i)
      if (mask & (1 << i)) act.push_back(i);
    const int k = static_cast<int>(act.size());
    Matrix K = Matrix::Zero(n + k, n + k);
    Vector rhs(n + k);
    K.topLeftCorner(n, n) = G;
    rhs.head(n) = -c;
    for (int j = 0; j < k; ++j) {
      K.block(0, n + j, n, 1) = A.row(act[static_cast<std::size_t>(j)]).transpose();
      K.block(n + j, 0, 1, n) = A.row(act[static_cast<std::size_t>(j)]);
      rhs(n + j) = b(act[static_cast<std::size_t>(j)]);
    }
    Eigen::FullPivLU<Matrix> lu(K);
    if (lu.rank() < n + k) continue;
    const Vector sol = lu.solve(rhs);
    const Vector x = sol.head(n);
    if (((A * x - b).array() > 1e-9).any()) continue;
    if ((sol.tail(k).array() < -1e-9).any()) continue;
    const double obj = 0.5 * x.dot(G * x) + c.dot(x);
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
      found = true;
    }
  }
  return found;
}

} // namespace

TEST_CASE("unconstrained quadratic") {
  NlpProblem p;
  p.dimension = 1;
  p.objective = [](const Vector& x) { return x(0) * x(0); };
  const auto r = sqp_solve(p, vec({3.0}), 1e-8);
  CHECK(r.status == NlpStatus::converged);
  CHECK(std::abs(r.x(0)) < 1e-6);
}

TEST_CASE("one-sided constraint is active with multiplier 4") {
  NlpProblem p;
  p.dimension = 1;
  p.objective = [](const Vector& x) { return (x(0) - 3) * (x(0) - 3); };
  p.gradient = [](const Vector& x) { return vec({2 * (x(0) - 3)}); };
  p.inequality_count = 1;
  p.inequalities = [](const Vector& x) { return vec({x(0) - 1}); };
  const auto r = sqp_solve(p, vec({0.0}), 1e-9);
  CHECK(r.status == NlpStatus::converged);
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.lambda(0) == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(r.kkt_residual <= 1e-9);
}

TEST_CASE("Rosenbrock from the classic start") {
  NlpProblem p;
  p.dimension = 2;
  p.objective = [](const Vector& x) {
    return (1 - x(0)) * (1 - x(0)) + 100 * (x(1) - x(0) * x(0)) * (x(1) - x(0) * x(0));
  };
  p.gradient = [](const Vector& x) {
    return vec({-2 * (1 - x(0)) - 400 * x(0) * (x(1) - x(0) * x(0)), 200 * (x(1) - x(0) * x(0))});
  };
  const auto r = sqp_solve(p, vec({-1.2, 1.0}), 1e-8);
  CHECK(r.status == NlpStatus::converged);
  CHECK(std::abs(r.x(0) - 1) < 1e-4);
  CHECK(std::abs(r.x(1) - 1) < 1e-4);
}

TEST_CASE("equality constraint and multiplier sign") {
  NlpProblem p;
  p.dimension = 2;
  p.objective = [](const Vector& x) { return x.squaredNorm(); };
  p.equality_count = 1;
  p.equalities = [](const Vector& x) { return vec({x(0) + x(1) - 1}); };
  const auto r = sqp_solve(p, vec({2.0, -3.0}), 1e-8);
  CHECK(r.status == NlpStatus::converged);
  CHECK(r.x(0) == doctest::Approx(0.5));
  CHECK(r.x(1) == doctest::Approx(0.5));
  // 2x + mu = 0.
  CHECK(r.mu(0) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("bounds are honoured") {
  NlpProblem p;
  p.dimension = 2;
  p.objective = [](const Vector& x) { return -x(0) + (x(1) - 0.5) * (x(1) - 0.5); };
  p.lower = vec({0.0, 0.0});
  p.upper = vec({2.0, 1.0});
  const auto r = sqp_solve(p, vec({0.5, 0.0}), 1e-8);
  CHECK(r.status == NlpStatus::converged);
  CHECK(r.x(0) == doctest::Approx(2.0));
  CHECK(r.x(1) == doctest::Approx(0.5));
  CHECK(r.bound_lambda(0) == doctest::Approx(1.0));
}

TEST_CASE("contradictory constraints report infeasible") {
  NlpProblem p;
  p.dimension = 1;
  p.objective = [](const Vector& x) { return x(0); };
  p.inequality_count = 2;
  p.inequalities = [](const Vector& x) { return vec({2 - x(0), x(0) - 1}); };
  const auto r = sqp_solve(p, vec({0.0}), 1e-8);
  CHECK(r.status == NlpStatus::infeasible);
}

TEST_CASE("nonlinear inequality: closest point on a disc") {
  NlpProblem p;
  p.dimension = 2;
  p.objective = [](const Vector& x) { return (x(0) - 2) * (x(0) - 2) + (x(1) - 2) * (x(1) - 2); };
  p.inequality_count = 1;
  p.inequalities = [](const Vector& x) { return vec({x.squaredNorm() - 1}); };
  const auto r = sqp_solve(p, vec({0.0, 0.0}), 1e-8);
  CHECK(r.status == NlpStatus::converged);
  CHECK(r.x(0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  CHECK(r.x(1) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  CHECK(r.max_violation <= 1e-8);
}

TEST_CASE("dual active-set QP agrees with active-set enumeration") {
  Rng rng(17);
  int compared = 0;
  for (int t = 0; t < 60; ++t) {
    const int n = 3, m = 5;
    Matrix M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = rng.uniform() * 2 - 1;
    const Matrix G = M * M.transpose() + 0.5 * Matrix::Identity(n, n);
    Vector c(n);
    for (int i = 0; i < n; ++i) c(i) = rng.uniform() * 4 - 2;
    Matrix A(m, n);
    Vector b(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = rng.uniform() * 2 - 1;
      b(i) = rng.uniform() * 2 - 0.5;
    }
    Vector oracle;
    const bool ok = enumerate_qp(G, c, A, b, oracle);
    const auto qp = solve_qp(G, c, Matrix(0, n), Vector(0), A, b);
    CHECK(qp.feasible == ok);
    if (!ok || !qp.feasible) continue;
    ++compared;
    CHECK((qp.x - oracle).lpNorm<Eigen::Infinity>() < 1e-8);
    const Vector stat = G * qp.x + c + A.transpose() * qp.lambda;
    CHECK(stat.lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK((qp.lambda.array() >= -1e-12).all());
  }
  CHECK(compared > 30);
}

TEST_CASE("QP tolerates parallel constraints") {
  // x >= 1 twice over (a bound and a clearance row with the same normal).
  const Matrix G = Matrix::Identity(1, 1);
  const Vector c = vec({0.0});
  Matrix A(2, 1);
  A << -1, -2;
  const Vector b = vec({-1.0, -2.0});
  const auto qp = solve_qp(G, c, Matrix(0, 1), Vector(0), A, b);
  REQUIRE(qp.feasible);
  CHECK(qp.x(0) == doctest::Approx(1.0));
  const Vector stat = G * qp.x + c + A.transpose() * qp.lambda;
  CHECK(std::abs(stat(0)) < 1e-12);
}

TEST_CASE("central differences match analytic gradients") {
  auto f = [](const Vector& x) { return std::sin(x(0)) * x(1) * x(1) + std::exp(0.3 * x(0)); };
  const Vector x = vec({0.7, -1.3});
  const Vector fd = finite_difference_gradient(f, x);
  const Vector exact =
      vec({std::cos(0.7) * 1.69 + 0.3 * std::exp(0.21), 2 * std::sin(0.7) * -1.3});
  CHECK(((fd - exact).array().abs() / exact.array().abs()).maxCoeff() < 1e-5);
}
