#include "rfsim/least_squares.hpp"

#include <cmath>
#include <limits>

namespace rfsim {

namespace {

bool try_residual(const ResidualFn& residual, const Eigen::VectorXd& p, Eigen::VectorXd& out)
{
    try {
        out = residual(p);
    } catch (const ValidationError&) {
        return false;
    }
    return out.allFinite();
}

void fill_statistics(LmResult& res, const Eigen::MatrixXd& jac)
{
    const auto m = res.residuals.size();
    const auto n = res.params.size();
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const double dof = static_cast<double>(std::max<Eigen::Index>(1, m - n));
    const double s2 = res.residuals.squaredNorm() / dof;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jtj);
    res.covariance = s2 * cod.pseudoInverse();
    res.std_errors = res.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

} // namespace

Eigen::MatrixXd numerical_jacobian(const ResidualFn& residual, const Eigen::VectorXd& p,
                                   const Eigen::VectorXd& r0, double rel_step)
{
    Eigen::MatrixXd jac(r0.size(), p.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        const double h = rel_step * std::max(1.0, std::abs(p[j]));
        Eigen::VectorXd plus = p, minus = p;
        plus[j] += h;
        minus[j] -= h;
        Eigen::VectorXd rp, rm;
        const bool ok_p = try_residual(residual, plus, rp);
        const bool ok_m = try_residual(residual, minus, rm);
        if (ok_p && ok_m)
            jac.col(j) = (rp - rm) / (2.0 * h);
        else if (ok_p)
            jac.col(j) = (rp - r0) / h;
        else if (ok_m)
            jac.col(j) = (r0 - rm) / h;
        else
            throw NumericalError("Jacobian: model undefined on both sides of parameter " + std::to_string(j));
    }
    return jac;
}

LmResult levenberg_marquardt(const ResidualFn& residual, const Eigen::VectorXd& initial,
                             const LmOptions& options)
{
    LmResult res;
    res.params = initial;
    if (!try_residual(residual, initial, res.residuals))
        throw ValidationError("initial guess lies outside the model domain");
    if (res.residuals.size() < initial.size())
        throw ValidationError("fewer residuals than parameters");
    double cost = res.residuals.squaredNorm();

    double damping = options.initial_damping;
    Eigen::MatrixXd jac = numerical_jacobian(residual, res.params, res.residuals, options.fd_rel_step);

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        res.iterations = iter;
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd grad = jac.transpose() * res.residuals;

        Eigen::MatrixXd lhs = jtj;
        for (Eigen::Index i = 0; i < lhs.rows(); ++i)
            lhs(i, i) += damping * std::max(jtj(i, i), 1e-12);
        const Eigen::VectorXd step = lhs.ldlt().solve(-grad);

        if (!step.allFinite() || step.norm() < options.step_tol * (1.0 + res.params.norm())) {
            res.residual_norm = std::sqrt(cost);
            fill_statistics(res, jac);
            return res;
        }

        const Eigen::VectorXd trial = res.params + step;
        Eigen::VectorXd trial_r;
        const bool ok = try_residual(residual, trial, trial_r);
        const double trial_cost = ok ? trial_r.squaredNorm() : std::numeric_limits<double>::infinity();

        if (ok && trial_cost < cost) {
            const double rel_change = (cost - trial_cost) / std::max(cost, std::numeric_limits<double>::min());
            res.params = trial;
            res.residuals = trial_r;
            cost = trial_cost;
            damping = std::max(damping * options.damping_down, 1e-15);
            jac = numerical_jacobian(residual, res.params, res.residuals, options.fd_rel_step);
            if (rel_change < options.rel_residual_tol || cost == 0.0) {
                res.residual_norm = std::sqrt(cost);
                fill_statistics(res, jac);
                return res;
            }
        } else {
            damping *= options.damping_up;
            if (damping > options.max_damping) {
                // No descent direction left at any damping: a stationary point.
                res.residual_norm = std::sqrt(cost);
                fill_statistics(res, jac);
                return res;
            }
        }
    }

    res.residual_norm = std::sqrt(cost);
    fill_statistics(res, jac);
    throw FitFailure("least squares did not converge in " + std::to_string(options.max_iterations) +
                         " iterations",
                     res);
}

} // namespace rfsim
