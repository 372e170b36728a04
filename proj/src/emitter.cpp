#include "rfsim/emitter.hpp"

#include <cmath>

#include "rfsim/errors.hpp"

namespace rfsim {

DecayRates derive_rates(double t1_ps, double t2_ps)
{
    if (!(t1_ps > 0.0) || !(t2_ps > 0.0))
        throw ValidationError("T1 and T2 must be positive");
    if (t2_ps > 2.0 * t1_ps)
        throw ValidationError("unphysical dephasing: T2 exceeds 2*T1");
    // Clamp the round-off at T2 == 2 T1 so gamma_pd is never a tiny negative.
    const double gamma_pd = std::max(0.0, 1000.0 / t2_ps - 500.0 / t1_ps);
    return {1000.0 / t1_ps, gamma_pd};
}

double angular_consistency(double rabi2_ghz, double gamma_sp)
{
    if (rabi2_ghz < 0.0 || !(gamma_sp > 0.0))
        throw ValidationError("angular_consistency: Rabi frequency must be >= 0 and gamma_sp > 0");
    return kTwoPi * rabi2_ghz / gamma_sp;
}

EmitterParams::EmitterParams(double t1_ps, double t2_ps, double omega0_ghz)
    : t1_(t1_ps), t2_(t2_ps), omega0_(omega0_ghz), rates_(derive_rates(t1_ps, t2_ps))
{
}

DriveField::DriveField(double rabi_ghz, double detuning_ghz) : rabi_(rabi_ghz), detuning_(detuning_ghz)
{
    if (!(rabi_ghz >= 0.0))
        throw ValidationError("Rabi frequency must be non-negative");
    if (!std::isfinite(detuning_ghz))
        throw ValidationError("detuning must be finite");
}

double PowerRatio::amplitude() const
{
    if (!(value >= 0.0))
        throw ValidationError("power ratio must be non-negative");
    return std::sqrt(value);
}

BichromaticDrive::BichromaticDrive(DriveField strong, DriveField weak, double relative_phase)
    : strong_(strong), weak_(weak), phase_(relative_phase)
{
}

BichromaticDrive BichromaticDrive::from_delta2(double omega_ghz, double g_ghz, double delta1_ghz,
                                               double delta2_ghz, double relative_phase)
{
    return {DriveField(omega_ghz, delta1_ghz), DriveField(g_ghz, delta2_ghz - 2.0 * omega_ghz),
            relative_phase};
}

} // namespace rfsim
