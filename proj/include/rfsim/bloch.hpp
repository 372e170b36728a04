#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rfsim/emitter.hpp"
#include "rfsim/least_squares.hpp"
#include "rfsim/spectrum.hpp"

namespace rfsim {

/// Rotating-frame optical Bloch equations for (u, v, w) = (<σx>, <σy>, <σz>):
/// d/dt x = drift * x + pump. Rates in ns^-1, frequencies in rad/ns.
struct BlochSystem {
    Eigen::Matrix3d drift;
    Eigen::Vector3d pump;
};

BlochSystem build_bloch(const EmitterParams& emitter, const DriveField& drive);

/// Solves drift * x + pump = 0. Throws NumericalError if drift is singular.
Eigen::Vector3d steady_state(const BlochSystem& sys);

/// Excited-state population (1 + w) / 2.
inline double excited_population(const Eigen::Vector3d& bloch) { return 0.5 * (1.0 + bloch[2]); }

/// Half-width around the drive frequency a Mollow grid has to cover (GHz).
double mollow_required_half_width(const EmitterParams& emitter, const DriveField& drive);

/// Resonance fluorescence spectrum for monochromatic driving.
///
/// The incoherent part comes from the quantum-regression evolution of the
/// fluctuation <δσ+(τ) δσ-(0)> under the Bloch drift, summed over the three
/// drift eigenmodes as complex Lorentzians. The elastic weight |<σ->|^2 is
/// reported separately. Throws ValidationError if the grid is too narrow.
Spectrum mollow_spectrum(const EmitterParams& emitter, const DriveField& drive,
                         const std::vector<double>& grid);

/// Same as mollow_spectrum without the grid-coverage precondition.
Spectrum mollow_spectrum_unchecked(const EmitterParams& emitter, const DriveField& drive,
                                   const std::vector<double>& grid);

struct MollowFitParams {
    double rabi = 0.0;      // Ω in GHz (sidebands at ±2Ω)
    double t2_ps = 0.0;
    double amplitude = 0.0; // integrated incoherent area in data units
    double offset = 0.0;

    Eigen::Vector4d to_vector() const { return {rabi, t2_ps, amplitude, offset}; }
    static MollowFitParams from_vector(const Eigen::VectorXd& v) { return {v[0], v[1], v[2], v[3]}; }
};

struct MollowFit {
    MollowFitParams params;
    MollowFitParams std_errors;
    double residual_norm = 0.0;
    int iterations = 0;
};

/// Fits amplitude * (unit-area Mollow spectrum) + offset to spectral samples,
/// with T1 and the drive detuning taken from `emitter`/`detuning_ghz`.
/// The guess must lie within |Ω_guess - Ω_true| < Ω_true / 2.
/// Throws FitFailure (carrying the last iterate) on non-convergence.
MollowFit fit_mollow(const std::vector<double>& freq, const std::vector<double>& data,
                     const EmitterParams& emitter, const MollowFitParams& guess,
                     double detuning_ghz = 0.0, const LmOptions& options = {});

} // namespace rfsim
