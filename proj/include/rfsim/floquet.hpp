#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rfsim/emitter.hpp"
#include "rfsim/spectrum.hpp"

namespace rfsim {

using Vec4 = Eigen::Vector4cd;
using Mat4 = Eigen::Matrix4cd;
using Mat2 = Eigen::Matrix2cd;

// Density matrices use the basis (|g>, |e>) and are flattened row-major:
// (ρ_gg, ρ_ge, ρ_eg, ρ_ee).
Vec4 vectorize(const Mat2& rho);
Mat2 unvectorize(const Vec4& v);
/// Row vector t with t·vec(ρ) = tr ρ.
Eigen::RowVector4cd trace_row();

/// Superoperator of -i[H, ·].
Mat4 commutator_superop(const Mat2& h);
/// Superoperator of rate * (c ρ c† - {c†c, ρ}/2).
Mat4 dissipator_superop(const Mat2& c, double rate);
/// Superoperator of left multiplication ρ -> a ρ.
Mat4 left_multiply_superop(const Mat2& a);

Mat2 sigma_minus();
Mat2 sigma_plus();
Mat2 sigma_ee();

/// L(t) = l0 + lp e^{+iδt} + lm e^{-iδt}, in the frame rotating with the
/// strong drive. Frequencies in rad/ns.
struct PeriodicLiouvillian {
    Mat4 l0;
    Mat4 lp;
    Mat4 lm;
    double delta = 0.0;          // beat frequency δ (rad/ns)
    Mat4 l0_coherent;            // Hamiltonian part of l0
    double frame_detuning = 0.0; // strong-drive detuning Δ1 (GHz); maps frame frequencies to ω0
    double max_frequency = 0.0;  // largest spectral scale (GHz), sets the τ step
    double min_decay = 0.0;      // smallest relaxation rate (ns^-1), sets the default τ range
    double t2 = 0.0;             // coherence time (ns)

    Mat4 at(double t) const;
    double beat_period() const;
};

/// Rotating frame of the strong field: H = Ω σx - Δ1 σ_ee
/// + 2G (σ+ e^{-i(δt - φ)} + σ- e^{+i(δt - φ)}), with decay γ_sp and pure
/// dephasing γ_pd. The coupling amplitude 2G splits each singly dressed level
/// by 2G. Throws ValidationError for δ = 0 (use the degenerate-drive scan).
PeriodicLiouvillian build_periodic_liouvillian(const EmitterParams& emitter,
                                               const BichromaticDrive& drive);

/// Fourier components ρ(t) = Σ_k ρ^(k) e^{ikδt}, k in [-cutoff, cutoff].
struct PeriodicState {
    std::vector<Vec4> harmonics; // index k + cutoff
    int cutoff = 0;

    const Vec4& harmonic(int k) const { return harmonics.at(static_cast<std::size_t>(k + cutoff)); }
    Vec4 at(double t, double delta) const;
    double tail_ratio() const; // ||ρ^(K)|| / ||ρ^(0)|| (max over ±K)
};

struct SteadyStateOptions {
    int max_cutoff = 1024;
    double tolerance = 1e-8;
};

/// Periodic steady state from the harmonic-balance system
/// (l0 - ikδ) ρ^(k) + lp ρ^(k-1) + lm ρ^(k+1) = 0, tr ρ^(0) = 1,
/// solved by matrix continued fractions. The cutoff doubles from K until
/// ||ρ^(K)|| < tolerance·||ρ^(0)||; throws NumericalError at the ceiling.
PeriodicState periodic_steady_state(const PeriodicLiouvillian& pl, int cutoff,
                                    const SteadyStateOptions& options = {});

/// Propagates x under d/dt x = L(t0 + τ) x and returns x at the sample times.
std::vector<Vec4> propagate(const PeriodicLiouvillian& pl, double t0, const Vec4& x0,
                            const std::vector<double>& taus, double rel_tol = 1e-10);

struct EmissionOptions {
    int phases = 16;          // beat-phase samples for the t0 average
    double tau_max = 0.0;     // ns; 0 selects max(10 T2, 15 / min relaxation rate)
    double samples_per_period = 20.0; // τ step <= 1 / (samples_per_period · f_max)
    double rel_tol = 1e-10;
    double decay_threshold = 1e-6;
    bool strict = false;      // escalate the truncation warning to NumericalError
    bool check_grid_span = true;
    double spectral_half_width = 0.0; // required half-span in GHz; 0 skips the check
};

/// Beat-averaged stationary correlation <δσ+(t+τ) δσ-(t)> on a uniform τ grid.
struct Correlation {
    double dt = 0.0;
    std::vector<std::complex<double>> values;
    std::complex<double> derivative0; // d/dτ at τ = 0 (for the endpoint correction)
};

Correlation incoherent_correlation(const PeriodicLiouvillian& pl, const PeriodicState& state,
                                   double tau_max, const EmissionOptions& options = {});

/// Elastic lines of the periodic state: weight |<σ->^(k)|^2 at ω_L - kδ.
std::vector<ElasticLine> elastic_lines(const PeriodicLiouvillian& pl, const PeriodicState& state);

/// Incoherent spectrum from the beat-averaged regression correlation
/// (time-domain propagation, half-Fourier transform by the trapezoid rule
/// with the first Euler-Maclaurin endpoint correction) plus the elastic
/// lines. Normalized like mollow_spectrum.
Spectrum emission_spectrum(const PeriodicLiouvillian& pl, const PeriodicState& state,
                           const std::vector<double>& grid, const EmissionOptions& options = {});

/// Beat-averaged incoherent spectrum from the Laplace-domain harmonic system
/// (iν - l0 + inδ) y_n - lp y_{n-1} - lm y_{n+1} = x_n, S = 2 Re tr(σ+ y_0),
/// with x_n the harmonics of σ-ρ - <σ->ρ. Frequency-domain counterpart of
/// emission_spectrum (no τ truncation, no phase sampling); same normalization.
Spectrum resolvent_spectrum(const PeriodicLiouvillian& pl, const PeriodicState& state,
                            const std::vector<double>& grid, int extra_harmonics = 8);

/// Half-Fourier transform of a correlation onto a frequency grid (GHz,
/// relative to the frame), as 2 Re ∫ C(τ) e^{-iντ} dτ.
std::vector<double> half_fourier(const Correlation& c, const std::vector<double>& frame_freq);

/// Default τ range: max(10 T2, 15 / slowest relaxation rate).
double default_tau_max(const PeriodicLiouvillian& pl);

} // namespace rfsim
