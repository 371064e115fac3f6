#include <cmath>

#include "cvsc/dynamics.hpp"

namespace cvsc::dynamics {

TrapezoidalIntegrator::TrapezoidalIntegrator(Rhs f, IntegratorOptions options)
    : f_(std::move(f)), opt_(std::move(options)) {}

void TrapezoidalIntegrator::reset(Rhs f) {
  f_ = std::move(f);
  have_jac_ = false;
  jac_fresh_ = false;
  factored_dt_ = -1.0;
}

void TrapezoidalIntegrator::refresh_jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& fx) {
  Eigen::VectorXd steps(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double s = opt_.scale.size() ? opt_.scale(k) : 1.0;
    steps(k) = 1e-7 * std::max(s, std::abs(x(k)));
  }
  jac_ = numeric_jacobian(f_, x, fx, steps, false);
  have_jac_ = true;
  jac_fresh_ = true;
  factored_dt_ = -1.0;
  ++jac_updates_;
}

void TrapezoidalIntegrator::factor(double dt) {
  if (dt == factored_dt_) return;
  const Eigen::Index n = jac_.rows();
  lu_.compute(Eigen::MatrixXd::Identity(n, n) - 0.5 * dt * jac_);
  factored_dt_ = dt;
}

bool TrapezoidalIntegrator::attempt(const Eigen::VectorXd& x, const Eigen::VectorXd& fx, double dt,
                                    Eigen::VectorXd& out, Eigen::VectorXd& fout) {
  const bool scaled = opt_.scale.size() == x.size();
  Eigen::VectorXd y = x;
  Eigen::VectorXd fy = fx;
  double prev = INFINITY;
  for (int it = 0; it < opt_.max_newton; ++it) {
    const Eigen::VectorXd g = y - x - 0.5 * dt * (fx + fy);
    const double res = scaled ? scaled_norm(g, opt_.scale) : g.cwiseAbs().maxCoeff();
    if (!std::isfinite(res)) return false;
    if (res < opt_.newton_tolerance) {
      last_residual_ = res;
      out = std::move(y);
      fout = std::move(fy);
      return true;
    }
    // A stale Jacobian that stops contracting is worth replacing.
    if (it > 0 && res > 0.5 * prev) return false;
    prev = res;
    y -= lu_.solve(g);
    ++newton_iters_;
    try {
      fy = f_(y);
    } catch (const Error&) {
      return false;
    }
  }
  return false;
}

Eigen::VectorXd TrapezoidalIntegrator::advance(const Eigen::VectorXd& x, const Eigen::VectorXd& fx,
                                               double dt, Eigen::VectorXd& fout) {
  Eigen::VectorXd out;
  if (!have_jac_) refresh_jacobian(x, fx);
  factor(dt);
  bool ok = attempt(x, fx, dt, out, fout);
  if (!ok && !jac_fresh_) {
    refresh_jacobian(x, fx);
    factor(dt);
    ok = attempt(x, fx, dt, out, fout);
  }
  if (ok) {
    jac_fresh_ = false;
    if (observer_) observer_(x, fx, out, fout, dt);
    return out;
  }
  const double half = 0.5 * dt;
  if (half < opt_.dt_min) {
    throw IntegrationError("Newton iteration failed at the minimum step " + std::to_string(dt) + " s", 0.0);
  }
  Eigen::VectorXd fmid;
  const Eigen::VectorXd mid = advance(x, fx, half, fmid);
  return advance(mid, fmid, half, fout);
}

Eigen::VectorXd TrapezoidalIntegrator::step(const Eigen::VectorXd& x, double dt, const Eigen::VectorXd* fx) {
  if (!(dt > 0.0)) throw IntegrationError("step size must be positive", 0.0);
  if (!x.allFinite()) throw IntegrationError("state is not finite", 0.0);
  const Eigen::VectorXd f0 = fx ? *fx : f_(x);
  Eigen::VectorXd f1;
  return advance(x, f0, dt, f1);
}

Eigen::VectorXd integrate_step(const DynamicModel& model, const Eigen::VectorXd& x, double /*t*/, double dt) {
  IntegratorOptions opt;
  opt.scale = model.system().state_scale();
  TrapezoidalIntegrator integ([&](const Eigen::VectorXd& z) { return model.derivative(z); }, opt);
  Eigen::VectorXd next = integ.step(x, dt);
  model.project(next);
  return next;
}

}  // namespace cvsc::dynamics
