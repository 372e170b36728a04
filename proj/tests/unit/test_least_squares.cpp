#include <doctest.h>

#include <cmath>
#include <random>

#include "rfsim/least_squares.hpp"

using namespace rfsim;

namespace {

struct Decay {
    std::vector<double> t, y;
};

Decay make_decay(double a, double k, double noise, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> n(0.0, noise);
    Decay d;
    for (int i = 0; i < 60; ++i) {
        const double t = 0.1 * i;
        d.t.push_back(t);
        d.y.push_back(a * std::exp(-k * t) + n(rng));
    }
    return d;
}

ResidualFn residual_for(const Decay& d) {
    return [&d](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(d.t.size());
        for (std::size_t i = 0; i < d.t.size(); ++i)
            r[static_cast<Eigen::Index>(i)] = p[0] * std::exp(-p[1] * d.t[i]) - d.y[i];
        return r;
    };
}

} // namespace

TEST_CASE("exponential decay recovered from noisy data") {
    const Decay d = make_decay(2.0, 0.7, 0.01, 3);
    const auto fit = levenberg_marquardt(residual_for(d), Eigen::Vector2d(1.0, 2.0));
    CHECK(fit.params[0] == doctest::Approx(2.0).epsilon(0.02));
    CHECK(fit.params[1] == doctest::Approx(0.7).epsilon(0.02));
    CHECK(fit.std_errors[0] > 0.0);
    CHECK(fit.std_errors[0] < 0.05);
    CHECK(std::abs(fit.params[0] - 2.0) < 5.0 * fit.std_errors[0]);
}

TEST_CASE("exact data at the solution is a fixed point") {
    const Decay d = make_decay(1.5, 0.3, 0.0, 1);
    const auto fit = levenberg_marquardt(residual_for(d), Eigen::Vector2d(1.5, 0.3));
    CHECK(fit.residual_norm < 1e-12);
    CHECK(fit.params[0] == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(fit.params[1] == doctest::Approx(0.3).epsilon(1e-10));
}

TEST_CASE("iteration budget exhaustion carries the last iterate") {
    const Decay d = make_decay(2.0, 0.7, 0.0, 1);
    LmOptions opt;
    opt.max_iterations = 1;
    try {
        levenberg_marquardt(residual_for(d), Eigen::Vector2d(0.1, 5.0), opt);
        FAIL("expected FitFailure");
    } catch (const FitFailure& e) {
        CHECK(e.last_iterate().params.size() == 2);
        CHECK(std::isfinite(e.last_iterate().residual_norm));
    }
}

TEST_CASE("domain errors in trial steps are rejected") {
    const Decay d = make_decay(2.0, 0.7, 0.0, 1);
    auto base = residual_for(d);
    ResidualFn guarded = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
        if (p[1] < 0.0) throw ValidationError("negative rate");
        return base(p);
    };
    const auto fit = levenberg_marquardt(guarded, Eigen::Vector2d(1.0, 0.05));
    CHECK(fit.params[1] == doctest::Approx(0.7).epsilon(1e-6));
    CHECK_THROWS_AS(levenberg_marquardt(guarded, Eigen::Vector2d(1.0, -1.0)), ValidationError);
}

TEST_CASE("numerical jacobian") {
    ResidualFn f = [](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(2);
        r << p[0] * p[0], std::sin(p[1]);
        return r;
    };
    const Eigen::Vector2d p(1.5, 0.3);
    const auto j = numerical_jacobian(f, p, f(p), 1e-6);
    CHECK(j(0, 0) == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(j(1, 1) == doctest::Approx(std::cos(0.3)).epsilon(1e-8));
    CHECK(std::abs(j(0, 1)) < 1e-10);
}
