#include "wsdo/sqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "wsdo/error.hpp"

namespace wsdo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMachEps = std::numeric_limits<double>::epsilon();

// --- Goldfarb-Idnani internals -------------------------------------------
// Constraint convention inside the solver: CE' x + ce0 = 0, CI' x + ci0 >= 0.
// Stationarity is maintained as G x + c = N u over the active normals N.

void update_z(Vector& z, const Matrix& J, const Vector& d, int iq) {
  const auto n = J.rows();
  z = J.rightCols(n - iq) * d.tail(n - iq);
}

void update_r(const Matrix& R, Vector& r, const Vector& d, int iq) {
  for (int i = iq - 1; i >= 0; --i) {
    double sum = 0.0;
    for (int j = i + 1; j < iq; ++j) sum += R(i, j) * r(j);
    r(i) = (d(i) - sum) / R(i, i);
  }
}

bool add_constraint(Matrix& R, Matrix& J, Vector& d, int& iq, double& r_norm) {
  const int n = static_cast<int>(d.size());
  for (int j = n - 1; j >= iq + 1; --j) {
    double cc = d(j - 1), ss = d(j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    d(j) = 0.0;
    ss /= h;
    cc /= h;
    if (cc < 0.0) {
      cc = -cc;
      ss = -ss;
      d(j - 1) = -h;
    } else {
      d(j - 1) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = 0; k < n; ++k) {
      const double t1 = J(k, j - 1), t2 = J(k, j);
      J(k, j - 1) = t1 * cc + t2 * ss;
      J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
    }
  }
  ++iq;
  for (int i = 0; i < iq; ++i) R(i, iq - 1) = d(i);
  if (std::abs(d(iq - 1)) <= kMachEps * r_norm) return false; // dependent
  r_norm = std::max(r_norm, std::abs(d(iq - 1)));
  return true;
}

void delete_constraint(Matrix& R, Matrix& J, std::vector<int>& A, Vector& u, int p, int& iq,
                       int l) {
  const int n = static_cast<int>(R.rows());
  int qq = -1;
  for (int i = p; i < iq; ++i)
    if (A[static_cast<std::size_t>(i)] == l) {
      qq = i;
      break;
    }
  if (qq < 0) return;
  for (int i = qq; i < iq - 1; ++i) {
    A[static_cast<std::size_t>(i)] = A[static_cast<std::size_t>(i) + 1];
    u(i) = u(i + 1);
    R.col(i) = R.col(i + 1);
  }
  A[static_cast<std::size_t>(iq) - 1] = A[static_cast<std::size_t>(iq)];
  u(iq - 1) = u(iq);
  A[static_cast<std::size_t>(iq)] = 0;
  u(iq) = 0.0;
  for (int j = 0; j < iq; ++j) R(j, iq - 1) = 0.0;
  --iq;
  if (iq == 0) return;
  for (int j = qq; j < iq; ++j) {
    double cc = R(j, j), ss = R(j + 1, j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    cc /= h;
    ss /= h;
    R(j + 1, j) = 0.0;
    if (cc < 0.0) {
      R(j, j) = -h;
      cc = -cc;
      ss = -ss;
    } else {
      R(j, j) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = j + 1; k < iq; ++k) {
      const double t1 = R(j, k), t2 = R(j + 1, k);
      R(j, k) = t1 * cc + t2 * ss;
      R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
    }
    for (int k = 0; k < n; ++k) {
      const double t1 = J(k, j), t2 = J(k, j + 1);
      J(k, j) = t1 * cc + t2 * ss;
      J(k, j + 1) = xny * (J(k, j) + t1) - t2;
    }
  }
}

// --- SQP helpers -----------------------------------------------------------

struct Evaluation {
  double f = 0.0;
  Vector grad;
  Vector g;
  Matrix jg;
  Vector h;
  Matrix jh;
};

Evaluation evaluate(const NlpProblem& p, const Vector& x) {
  Evaluation e;
  e.f = p.objective(x);
  e.grad = p.gradient ? p.gradient(x) : finite_difference_gradient(p.objective, x);
  if (p.inequality_count > 0) {
    e.g = p.inequalities(x);
    e.jg = p.inequality_jacobian ? p.inequality_jacobian(x)
                                 : finite_difference_jacobian(p.inequalities, x,
                                                              p.inequality_count);
  } else {
    e.g = Vector(0);
    e.jg = Matrix(0, p.dimension);
  }
  if (p.equality_count > 0) {
    e.h = p.equalities(x);
    e.jh = p.equality_jacobian ? p.equality_jacobian(x)
                               : finite_difference_jacobian(p.equalities, x, p.equality_count);
  } else {
    e.h = Vector(0);
    e.jh = Matrix(0, p.dimension);
  }
  return e;
}

double violation_l1(const Evaluation& e) {
  double v = 0.0;
  for (Eigen::Index i = 0; i < e.g.size(); ++i) v += std::max(0.0, e.g(i));
  for (Eigen::Index i = 0; i < e.h.size(); ++i) v += std::abs(e.h(i));
  return v;
}

double violation_max(const NlpProblem& p, const Evaluation& e, const Vector& x) {
  double v = 0.0;
  for (Eigen::Index i = 0; i < e.g.size(); ++i) v = std::max(v, e.g(i));
  for (Eigen::Index i = 0; i < e.h.size(); ++i) v = std::max(v, std::abs(e.h(i)));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    v = std::max(v, p.lower(i) - x(i));
    v = std::max(v, x(i) - p.upper(i));
  }
  return v;
}

// Bounds with a finite side become rows of the QP inequality block.
struct BoundRows {
  std::vector<int> upper;
  std::vector<int> lower;
};

BoundRows finite_bounds(const NlpProblem& p) {
  BoundRows b;
  for (int i = 0; i < p.dimension; ++i) {
    if (std::isfinite(p.upper(i))) b.upper.push_back(i);
    if (std::isfinite(p.lower(i))) b.lower.push_back(i);
  }
  return b;
}

} // namespace

std::string to_string(NlpStatus status) {
  switch (status) {
  case NlpStatus::converged: return "converged";
  case NlpStatus::max_iter: return "max-iter";
  case NlpStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x) {
  Vector grad(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    grad(i) = (fp - fm) / (2.0 * h);
  }
  return grad;
}

Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& g, const Vector& x,
                                  int rows) {
  Matrix jac(rows, x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    const Vector gp = g(xp);
    xp(i) = x(i) - h;
    const Vector gm = g(xp);
    xp(i) = x(i);
    jac.col(i) = (gp - gm) / (2.0 * h);
  }
  return jac;
}

QpResult solve_qp(const Matrix& G, const Vector& c, const Matrix& Aeq, const Vector& beq,
                  const Matrix& Ain, const Vector& bin) {
  const int n = static_cast<int>(G.rows());
  const int p = static_cast<int>(Aeq.rows());
  const int m = static_cast<int>(Ain.rows());
  const Matrix CE = Aeq.transpose();
  const Vector ce0 = -beq;
  const Matrix CI = -Ain.transpose();
  const Vector& ci0 = bin;

  QpResult out;
  out.lambda = Vector::Zero(m);
  out.mu = Vector::Zero(p);

  Eigen::LLT<Matrix> chol(G);
  if (chol.info() != Eigen::Success) throw InvalidArgument("QP Hessian is not positive definite");
  const Matrix L = chol.matrixL();
  Matrix J = L.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(n, n));
  const double c1 = G.trace();
  const double c2 = J.trace();

  Vector x = chol.solve(-c);
  double f = 0.5 * c.dot(x);
  Matrix R = Matrix::Zero(n, n);
  double r_norm = 1.0;
  int iq = 0;
  const int total = p + m;
  Vector u = Vector::Zero(total + 1);
  Vector u_old = Vector::Zero(total + 1);
  Vector r = Vector::Zero(total + 1);
  Vector d = Vector::Zero(n);
  Vector z = Vector::Zero(n);
  std::vector<int> A(static_cast<std::size_t>(total) + 1, 0);
  std::vector<int> A_old(static_cast<std::size_t>(total) + 1, 0);

  for (int i = 0; i < p; ++i) {
    const Vector np = CE.col(i);
    d = J.transpose() * np;
    update_z(z, J, d, iq);
    update_r(R, r, d, iq);
    double t2 = 0.0;
    if (z.squaredNorm() > kMachEps) t2 = (-np.dot(x) - ce0(i)) / z.dot(np);
    x += t2 * z;
    u(iq) = t2;
    for (int k = 0; k < iq; ++k) u(k) -= t2 * r(k);
    f += 0.5 * t2 * t2 * z.dot(np);
    A[static_cast<std::size_t>(i)] = -i - 1;
    if (!add_constraint(R, J, d, iq, r_norm)) return out; // dependent equalities
  }

  std::vector<int> iai(static_cast<std::size_t>(m));
  std::vector<bool> iaexcl(static_cast<std::size_t>(m), true);
  Vector s = Vector::Zero(m);
  for (int i = 0; i < m; ++i) iai[static_cast<std::size_t>(i)] = i;

  const int cap = 50 * (total + n + 1);
  int iter = 0;
  bool done = false;
  while (!done) {
    if (++iter > cap) return out;
    for (int i = p; i < iq; ++i) iai[static_cast<std::size_t>(A[static_cast<std::size_t>(i)])] = -1;
    double psi = 0.0;
    for (int i = 0; i < m; ++i) {
      iaexcl[static_cast<std::size_t>(i)] = true;
      s(i) = CI.col(i).dot(x) + ci0(i);
      psi += std::min(0.0, s(i));
    }
    if (std::abs(psi) <= m * kMachEps * c1 * c2 * 100.0) break;
    u_old.head(iq) = u.head(iq);
    std::copy(A.begin(), A.begin() + iq, A_old.begin());
    const Vector x_old = x;

    bool restart = false;
    while (!restart) {
      double ss = 0.0;
      int ip = 0;
      for (int i = 0; i < m; ++i)
        if (s(i) < ss && iai[static_cast<std::size_t>(i)] != -1 &&
            iaexcl[static_cast<std::size_t>(i)]) {
          ss = s(i);
          ip = i;
        }
      if (ss >= 0.0) {
        done = true;
        break;
      }
      const Vector np = CI.col(ip);
      u(iq) = 0.0;
      A[static_cast<std::size_t>(iq)] = ip;

      bool reselect = false;
      while (true) {
        d = J.transpose() * np;
        update_z(z, J, d, iq);
        update_r(R, r, d, iq);
        int l = 0;
        double t1 = kInf;
        for (int k = p; k < iq; ++k)
          if (r(k) > 0.0 && u(k) / r(k) < t1) {
            t1 = u(k) / r(k);
            l = A[static_cast<std::size_t>(k)];
          }
        const double t2 = z.squaredNorm() > kMachEps ? -s(ip) / z.dot(np) : kInf;
        const double t = std::min(t1, t2);
        if (t >= kInf) return out; // infeasible

        if (t2 >= kInf) {
          for (int k = 0; k < iq; ++k) u(k) -= t * r(k);
          u(iq) += t;
          iai[static_cast<std::size_t>(l)] = l;
          delete_constraint(R, J, A, u, p, iq, l);
          continue;
        }

        x += t * z;
        f += t * z.dot(np) * (0.5 * t + u(iq));
        for (int k = 0; k < iq; ++k) u(k) -= t * r(k);
        u(iq) += t;

        if (std::abs(t - t2) < kMachEps) {
          if (!add_constraint(R, J, d, iq, r_norm)) {
            iaexcl[static_cast<std::size_t>(ip)] = false;
            delete_constraint(R, J, A, u, p, iq, ip);
            for (int i = 0; i < m; ++i) iai[static_cast<std::size_t>(i)] = i;
            for (int i = p; i < iq; ++i) {
              A[static_cast<std::size_t>(i)] = A_old[static_cast<std::size_t>(i)];
              u(i) = u_old(i);
              iai[static_cast<std::size_t>(A[static_cast<std::size_t>(i)])] = -1;
            }
            x = x_old;
            reselect = true;
          } else {
            iai[static_cast<std::size_t>(ip)] = -1;
            restart = true;
          }
          break;
        }

        iai[static_cast<std::size_t>(l)] = l;
        delete_constraint(R, J, A, u, p, iq, l);
        s(ip) = CI.col(ip).dot(x) + ci0(ip);
      }
      if (reselect) continue;
    }
  }

  out.feasible = true;
  out.x = x;
  out.objective = 0.5 * x.dot(G * x) + c.dot(x);
  for (int i = 0; i < iq; ++i) {
    const int a = A[static_cast<std::size_t>(i)];
    if (a < 0)
      out.mu(-a - 1) = -u(i);
    else
      out.lambda(a) = u(i);
  }
  (void)f;
  return out;
}

NlpResult sqp_solve(const NlpProblem& problem, const Vector& x0, double tol,
                    const SqpOptions& options) {
  const int n = problem.dimension;
  if (n <= 0 || x0.size() != n) throw InvalidArgument("NLP dimension mismatch");
  if (!(tol > 0)) throw InvalidArgument("tolerance must be positive");
  NlpProblem p = problem;
  if (p.lower.size() == 0) p.lower = Vector::Constant(n, -kInf);
  if (p.upper.size() == 0) p.upper = Vector::Constant(n, kInf);
  if (p.lower.size() != n || p.upper.size() != n) throw InvalidArgument("bound dimension mismatch");
  for (int i = 0; i < n; ++i) {
    if (p.lower(i) > p.upper(i)) throw InvalidArgument("lower bound above upper bound");
    if (x0(i) < p.lower(i) || x0(i) > p.upper(i))
      throw InvalidArgument("initial point outside the bounds");
  }

  const BoundRows bounds = finite_bounds(p);
  const int mg = p.inequality_count;
  const int mh = p.equality_count;
  const int mb = static_cast<int>(bounds.upper.size() + bounds.lower.size());

  Vector x = x0;
  Evaluation e = evaluate(p, x);
  Matrix B = Matrix::Identity(n, n);
  double rho = 1.0;

  NlpResult res;
  res.lambda = Vector::Zero(mg);
  res.mu = Vector::Zero(mh);
  res.bound_lambda = Vector::Zero(n);

  auto merit = [&](const Evaluation& ev) { return ev.f + rho * violation_l1(ev); };

  for (int it = 0; it < options.max_iter; ++it) {
    res.iterations = it;
    Matrix Ain(mg + mb, n);
    Vector bin(mg + mb);
    if (mg > 0) {
      Ain.topRows(mg) = e.jg;
      bin.head(mg) = -e.g;
    }
    int row = mg;
    for (int i : bounds.upper) {
      Ain.row(row).setZero();
      Ain(row, i) = 1.0;
      bin(row++) = p.upper(i) - x(i);
    }
    for (int i : bounds.lower) {
      Ain.row(row).setZero();
      Ain(row, i) = -1.0;
      bin(row++) = x(i) - p.lower(i);
    }

    const QpResult qp = solve_qp(B, e.grad, e.jh, -e.h, Ain, bin);
    if (!qp.feasible) {
      res.status = NlpStatus::infeasible;
      break;
    }
    const Vector dx = qp.x;
    const Vector lam = qp.lambda.head(mg);
    const Vector mu = qp.mu;
    Vector blam = Vector::Zero(n);
    row = mg;
    for (int i : bounds.upper) blam(i) += qp.lambda(row++);
    for (int i : bounds.lower) blam(i) -= qp.lambda(row++);

    // First-order certificate at the current iterate with the QP multipliers.
    Vector stat = e.grad + blam;
    if (mg > 0) stat += e.jg.transpose() * lam;
    if (mh > 0) stat += e.jh.transpose() * mu;
    double comp = 0.0;
    for (int i = 0; i < mg; ++i) comp = std::max(comp, std::abs(lam(i) * e.g(i)));
    row = mg;
    for (int i : bounds.upper) comp = std::max(comp, std::abs(qp.lambda(row++) * (x(i) - p.upper(i))));
    for (int i : bounds.lower) comp = std::max(comp, std::abs(qp.lambda(row++) * (p.lower(i) - x(i))));
    const double kkt = std::max(stat.lpNorm<Eigen::Infinity>(), comp);
    const double viol = violation_max(p, e, x);
    res.x = x;
    res.objective = e.f;
    res.kkt_residual = kkt;
    res.max_violation = viol;
    res.lambda = lam;
    res.mu = mu;
    res.bound_lambda = blam;
    if (kkt <= tol && viol <= tol) {
      res.status = NlpStatus::converged;
      return res;
    }

    double mult = 0.0;
    if (mg > 0) mult = std::max(mult, lam.lpNorm<Eigen::Infinity>());
    if (mh > 0) mult = std::max(mult, mu.lpNorm<Eigen::Infinity>());
    rho = std::max(rho, 1.5 * mult + 1e-3);

    const double phi0 = merit(e);
    const double slope = e.grad.dot(dx) - rho * violation_l1(e);
    double alpha = 1.0;
    Vector x_new = x + dx;
    Evaluation e_new = evaluate(p, x_new);
    for (int k = 0; k < options.max_backtracks; ++k) {
      if (merit(e_new) <= phi0 + options.armijo * alpha * std::min(slope, 0.0)) break;
      alpha *= 0.5;
      x_new = x + alpha * dx;
      e_new = evaluate(p, x_new);
    }
    // Keep iterates inside the box despite rounding in the step.
    x_new = x_new.cwiseMax(p.lower).cwiseMin(p.upper);
    e_new = evaluate(p, x_new);

    // Damped BFGS on the Lagrangian gradient.
    const Vector step = x_new - x;
    auto lagrangian_grad = [&](const Evaluation& ev) {
      Vector gl = ev.grad;
      if (mg > 0) gl += ev.jg.transpose() * lam;
      if (mh > 0) gl += ev.jh.transpose() * mu;
      return gl;
    };
    const Vector y = lagrangian_grad(e_new) - lagrangian_grad(e);
    const Vector Bs = B * step;
    const double sBs = step.dot(Bs);
    if (sBs > 1e-16) {
      const double sy = step.dot(y);
      const double theta = sy >= 0.2 * sBs ? 1.0 : 0.8 * sBs / (sBs - sy);
      const Vector rv = theta * y + (1.0 - theta) * Bs;
      const double sr = step.dot(rv);
      if (sr > 1e-16) B += rv * rv.transpose() / sr - Bs * Bs.transpose() / sBs;
      // Keep symmetry exact and reset on loss of definiteness.
      B = 0.5 * (B + B.transpose());
      Eigen::LLT<Matrix> check(B);
      if (check.info() != Eigen::Success) B = Matrix::Identity(n, n);
    }

    x = x_new;
    e = std::move(e_new);
    res.iterations = it + 1;
  }
  res.x = x;
  res.objective = e.f;
  res.max_violation = violation_max(p, e, x);
  return res;
}

} // namespace wsdo
