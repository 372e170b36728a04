#include "rfsim/bloch.hpp"

#include <cmath>
#include <complex>

#include "rfsim/errors.hpp"

namespace rfsim {

using cd = std::complex<double>;

BlochSystem build_bloch(const EmitterParams& emitter, const DriveField& drive)
{
    const double g2 = emitter.gamma_transverse();
    const double g1 = emitter.gamma_sp();
    const double rabi = to_angular(drive.rabi());
    const double det = to_angular(drive.detuning());

    // H = Ω σx - Δ1 σ_ee in the frame of the drive.
    BlochSystem sys;
    sys.drift << -g2, det, 0.0,
                 -det, -g2, -2.0 * rabi,
                 0.0, 2.0 * rabi, -g1;
    sys.pump << 0.0, 0.0, -g1;
    return sys;
}

Eigen::Vector3d steady_state(const BlochSystem& sys)
{
    Eigen::FullPivLU<Eigen::Matrix3d> lu(sys.drift);
    if (!lu.isInvertible())
        throw NumericalError("Bloch drift is singular (zero decay rates?)");
    return lu.solve(-sys.pump);
}

double mollow_required_half_width(const EmitterParams& emitter, const DriveField& drive)
{
    const double splitting = std::hypot(2.0 * drive.rabi(), drive.detuning());
    return splitting + 5.0 * emitter.gamma_transverse() / kTwoPi;
}

Spectrum mollow_spectrum_unchecked(const EmitterParams& emitter, const DriveField& drive,
                                   const std::vector<double>& grid)
{
    const BlochSystem sys = build_bloch(emitter, drive);
    const Eigen::Vector3d x = steady_state(sys);
    const double rho_ee = excited_population(x);
    const cd sigma_minus(0.5 * x[0], -0.5 * x[1]);

    // Regression vector (<σx(τ)σ-(0)>, <σy(τ)σ-(0)>, <σz(τ)σ-(0)>) at τ = 0,
    // minus its stationary value; σ+ = (σx + iσy)/2 projects it back.
    Eigen::Vector3cd fluct(rho_ee, cd(0.0, -rho_ee), -sigma_minus);
    fluct -= x.cast<cd>() * sigma_minus;
    const Eigen::RowVector3cd proj(0.5, cd(0.0, 0.5), 0.0);

    Eigen::EigenSolver<Eigen::Matrix3d> es(sys.drift);
    const Eigen::Vector3cd lambda = es.eigenvalues();
    const Eigen::Matrix3cd v = es.eigenvectors();
    const Eigen::Vector3cd left = (proj * v).transpose();
    const Eigen::Vector3cd right = v.partialPivLu().solve(fluct);

    Spectrum s;
    s.freq = grid;
    s.intensity.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double nu = to_angular(grid[i] - drive.detuning());
        cd acc = 0.0;
        for (int j = 0; j < 3; ++j)
            acc += left[j] * right[j] / (cd(0.0, nu) - lambda[j]);
        // 2 Re ∫0^∞ C(τ) e^{-iντ} dτ, per GHz, integrates to C(0).
        s.intensity[i] = 2.0 * acc.real();
    }
    s.elastic_weight = std::norm(sigma_minus);
    s.elastic_lines.push_back({drive.detuning(), s.elastic_weight});
    return s;
}

Spectrum mollow_spectrum(const EmitterParams& emitter, const DriveField& drive,
                         const std::vector<double>& grid)
{
    check_coverage(grid, drive.detuning(), mollow_required_half_width(emitter, drive), "mollow_spectrum");
    return mollow_spectrum_unchecked(emitter, drive, grid);
}

MollowFit fit_mollow(const std::vector<double>& freq, const std::vector<double>& data,
                     const EmitterParams& emitter, const MollowFitParams& guess,
                     double detuning_ghz, const LmOptions& options)
{
    check_grid(freq);
    if (freq.size() != data.size())
        throw ValidationError("fit_mollow: frequency and data sizes differ");
    if (freq.size() < 16)
        throw ValidationError("fit_mollow: need at least 4 samples per parameter (16)");

    const Eigen::Map<const Eigen::VectorXd> y(data.data(), static_cast<Eigen::Index>(data.size()));
    auto residual = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
        const auto fp = MollowFitParams::from_vector(p);
        const EmitterParams e = emitter.with_t2(fp.t2_ps); // throws outside 0 < T2 <= 2 T1
        const Spectrum s = mollow_spectrum_unchecked(e, DriveField(std::abs(fp.rabi), detuning_ghz), freq);
        const Eigen::Vector3d x = steady_state(build_bloch(e, DriveField(std::abs(fp.rabi), detuning_ghz)));
        const double area = excited_population(x) - s.elastic_weight;
        if (!(area > 1e-300))
            throw ValidationError("fit_mollow: vanishing incoherent weight");
        Eigen::VectorXd r(freq.size());
        for (std::size_t i = 0; i < freq.size(); ++i)
            r[static_cast<Eigen::Index>(i)] = fp.amplitude * s.intensity[i] / area + fp.offset;
        return r - y;
    };

    const LmResult lm = levenberg_marquardt(residual, guess.to_vector(), options);
    MollowFit fit;
    fit.params = MollowFitParams::from_vector(lm.params);
    fit.params.rabi = std::abs(fit.params.rabi);
    fit.std_errors = MollowFitParams::from_vector(lm.std_errors);
    fit.residual_norm = lm.residual_norm;
    fit.iterations = lm.iterations;
    return fit;
}

} // namespace rfsim
