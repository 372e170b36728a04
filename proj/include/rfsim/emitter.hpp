#pragma once

#include <numbers>
#include <string>

namespace rfsim {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Ordinary frequency (GHz) to angular frequency (rad/ns).
constexpr double to_angular(double ghz) { return kTwoPi * ghz; }
/// Angular frequency (rad/ns) to ordinary frequency (GHz).
constexpr double to_ghz(double rad_per_ns) { return rad_per_ns / kTwoPi; }

struct DecayRates {
    double gamma_sp; // ns^-1
    double gamma_pd; // ns^-1
};

/// Spontaneous-emission and pure-dephasing rates from T1 and T2 given in ps.
/// Throws ValidationError for non-positive times or T2 > 2 T1.
DecayRates derive_rates(double t1_ps, double t2_ps);

/// 2π·rabi_2Ω / γ_sp. The quoted "2Ω ≈ 14.2 γ_sp" compares the angular Rabi
/// frequency with the decay rate.
double angular_consistency(double rabi2_ghz, double gamma_sp);

/// Two-level emitter. Spectra are always reported relative to the transition
/// frequency, so omega0 is zero unless a caller offsets it explicitly.
class EmitterParams {
public:
    EmitterParams(double t1_ps, double t2_ps, double omega0_ghz = 0.0);

    double omega0() const { return omega0_; }
    double t1() const { return t1_; }
    double t2() const { return t2_; }
    double gamma_sp() const { return rates_.gamma_sp; }
    double gamma_pd() const { return rates_.gamma_pd; }
    /// Total transverse rate 1/T2 in ns^-1.
    double gamma_transverse() const { return 1000.0 / t2_; }

    EmitterParams with_t2(double t2_ps) const { return {t1_, t2_ps, omega0_}; }

private:
    double t1_;
    double t2_;
    double omega0_;
    DecayRates rates_;
};

/// One classical field. `rabi` is the half splitting in GHz (Ω for the strong
/// drive, G for the coupling field), `detuning` is field minus ω0 in GHz.
class DriveField {
public:
    DriveField() = default;
    DriveField(double rabi_ghz, double detuning_ghz);

    double rabi() const { return rabi_; }
    double detuning() const { return detuning_; }

private:
    double rabi_ = 0.0;
    double detuning_ = 0.0;
};

/// Coupling/driving power ratio. The coupling-field Hamiltonian amplitude is
/// sqrt(value)·Ω, i.e. the daughter splitting 2G equals sqrt(value)·Ω.
struct PowerRatio {
    double value = 0.0;
    double amplitude() const;
};

/// Strong drive (Ω, Δ1) plus a weaker coupling field (G, Δ3).
///
/// The coupling field enters the rotating-frame Hamiltonian with amplitude 2G,
/// so that it splits each singly dressed level by 2G; the full splitting of
/// the strong drive is 2Ω.
class BichromaticDrive {
public:
    BichromaticDrive(DriveField strong, DriveField weak, double relative_phase = 0.0);

    /// Strong drive Ω and Δ1 plus coupling field from 2G and Δ2 = Δ3 + 2Ω.
    static BichromaticDrive from_delta2(double omega_ghz, double g_ghz, double delta1_ghz,
                                        double delta2_ghz, double relative_phase = 0.0);

    const DriveField& strong() const { return strong_; }
    const DriveField& weak() const { return weak_; }
    double relative_phase() const { return phase_; }

    /// Beat frequency δ = Δ3 − Δ1 (GHz).
    double beat() const { return weak_.detuning() - strong_.detuning(); }
    /// Δ2 = Δ3 + 2Ω, the coupling detuning from the inner doublet transition
    /// ω0 − 2Ω (exact meaning for Δ1 = 0).
    double delta2() const { return weak_.detuning() + 2.0 * strong_.rabi(); }

private:
    DriveField strong_;
    DriveField weak_;
    double phase_;
};

} // namespace rfsim
