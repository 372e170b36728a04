#pragma once

#include <functional>

#include <Eigen/Dense>

#include "rfsim/errors.hpp"

namespace rfsim {

struct LmOptions {
    int max_iterations = 200;
    double initial_damping = 1e-3;
    double damping_up = 10.0;
    double damping_down = 0.1;
    double max_damping = 1e12;
    double rel_residual_tol = 1e-10; // on accepted steps
    double step_tol = 1e-12;
    double fd_rel_step = 1e-6;       // central-difference Jacobian step (relative)
};

struct LmResult {
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    double residual_norm = 0.0;
    Eigen::MatrixXd covariance;   // s^2 (J^T J)^-1, s^2 = RSS / (m - n)
    Eigen::VectorXd std_errors;
    int iterations = 0;
};

/// Thrown when the iteration budget runs out; carries the last iterate.
class FitFailure : public NumericalError {
public:
    FitFailure(const std::string& what, LmResult last) : NumericalError(what), last_(std::move(last)) {}
    const LmResult& last_iterate() const { return last_; }

private:
    LmResult last_;
};

/// Residual function r(p). It may throw ValidationError for parameters outside
/// the model domain; such trial steps are rejected and the damping raised.
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Damped Gauss-Newton with a Levenberg-Marquardt damping schedule: damping
/// starts at initial_damping, is multiplied by damping_up after a rejected
/// step and by damping_down after an accepted one. Stops when an accepted step
/// changes the residual norm by less than rel_residual_tol (relative) or the
/// step norm drops below step_tol.
LmResult levenberg_marquardt(const ResidualFn& residual, const Eigen::VectorXd& initial,
                             const LmOptions& options = {});

/// Central-difference Jacobian of `residual` at p.
Eigen::MatrixXd numerical_jacobian(const ResidualFn& residual, const Eigen::VectorXd& p,
                                   const Eigen::VectorXd& r0, double rel_step);

} // namespace rfsim
