#pragma once

#include "posechain/error.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace posechain::detail {

struct LmSettings {
  int max_iterations = 100;
  double initial_damping = 1e-4;
  double relative_cost_tolerance = 1e-12;
  /// Residual RMS below which the fit counts as exact.
  double exact_fit_rms = 1e-12;
};

struct LmSummary {
  int iterations = 0;
  bool converged = false;
  double initial_cost = 0.0;
  double final_cost = 0.0;
};

/// Dense Levenberg-Marquardt with Marquardt diagonal scaling. Cost is the plain
/// sum of squared residuals; only cost-decreasing steps are accepted.
///
/// evaluate(state, residuals, jacobian*) fills residuals (and the Jacobian of
/// the residuals w.r.t. the local increment when non-null).
/// retract(state, delta) returns the state moved by a local increment.
template <typename State, typename Evaluate, typename Retract>
LmSummary levenberg_marquardt(State& state, Evaluate&& evaluate, Retract&& retract, const LmSettings& settings) {
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  evaluate(state, residuals, &jacobian);
  double cost = residuals.squaredNorm();

  LmSummary summary;
  summary.initial_cost = cost;
  const double exact_cost =
      static_cast<double>(residuals.size()) * settings.exact_fit_rms * settings.exact_fit_rms;

  double damping = settings.initial_damping;
  Eigen::VectorXd candidate_residuals;
  while (true) {
    if (cost <= exact_cost) {
      summary.converged = true;
      break;
    }
    if (summary.iterations >= settings.max_iterations) break;
    ++summary.iterations;

    const Eigen::MatrixXd normal = jacobian.transpose() * jacobian;
    const Eigen::VectorXd gradient = jacobian.transpose() * residuals;
    const Eigen::VectorXd diag = normal.diagonal();
    if ((diag.array() <= 0.0).any()) {
      throw Error(ErrorCode::SingularNormalEquations, "a parameter has no influence on the residuals");
    }

    Eigen::MatrixXd damped = normal;
    damped.diagonal() += damping * diag;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
    const Eigen::VectorXd delta = -ldlt.solve(gradient);
    if (ldlt.info() != Eigen::Success || !delta.allFinite()) {
      damping *= 10.0;
      if (damping > 1e16) throw Error(ErrorCode::SingularNormalEquations, "normal equations are singular");
      continue;
    }

    State candidate = retract(state, delta);
    evaluate(candidate, candidate_residuals, nullptr);
    const double candidate_cost = candidate_residuals.squaredNorm();
    if (std::isfinite(candidate_cost) && candidate_cost < cost) {
      const double relative_change = (cost - candidate_cost) / cost;
      state = std::move(candidate);
      cost = candidate_cost;
      damping = std::max(damping / 10.0, 1e-15);
      evaluate(state, residuals, &jacobian);
      if (relative_change < settings.relative_cost_tolerance) {
        summary.converged = true;
        break;
      }
    } else {
      damping *= 10.0;
      if (damping > 1e16) {
        // no decrease possible even for vanishing steps: numerically stationary
        summary.converged = true;
        break;
      }
    }
  }
  summary.final_cost = cost;
  return summary;
}

}  // namespace posechain::detail
