#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rfsim/emitter.hpp"
#include "rfsim/floquet.hpp"
#include "rfsim/least_squares.hpp"
#include "rfsim/spectrum.hpp"

namespace rfsim {

/// Fabry-Perot filter with Airy transmission 1 / (1 + F sin²(π (f - center) / fsr)),
/// F = (2 finesse / π)², finesse = fsr / fwhm.
struct EtalonFilter {
    double fwhm = 0.14;  // GHz
    double fsr = 9.18;   // GHz
    double center = 0.0; // GHz relative to ω0

    void validate() const;
    double finesse() const { return fsr / fwhm; }
};

double etalon_transmission(const EtalonFilter& filter, double freq);

enum class SpectrumMethod {
    TimeDomain, // emission_spectrum: propagated correlation, half-Fourier transform
    Resolvent,  // resolvent_spectrum: Laplace-domain harmonic system
};

struct ScanOptions {
    int workers = 1;
    SpectrumMethod method = SpectrumMethod::TimeDomain;
    int initial_cutoff = 8;
    EmissionOptions emission;
    SteadyStateOptions steady;
};

/// Runs task(i) for i in [0, n) on `workers` threads. Tasks write to
/// index-addressed slots, so results do not depend on the schedule.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task);

/// Bichromatic spectrum for one drive with the selected method.
Spectrum bichromatic_spectrum(const EmitterParams& emitter, const BichromaticDrive& drive,
                              const std::vector<double>& grid, const ScanOptions& options = {});

/// Incoherent spectra over a Δ2 axis. Row i holds the spectrum for axis1[i];
/// rows whose computation failed are NaN and carry a message in `errors`.
struct ScanResult2D {
    std::vector<double> axis1; // Δ2 (GHz)
    std::vector<double> axis2; // emission frequency (GHz)
    std::vector<double> intensity; // row-major, axis1.size() x axis2.size()
    std::vector<std::string> errors; // per row, empty on success

    double at(std::size_t i, std::size_t j) const { return intensity[i * axis2.size() + j]; }
    std::vector<double> row(std::size_t i) const;
    std::vector<double> column(std::size_t j) const;
    bool failed(std::size_t i) const { return !errors[i].empty(); }
};

/// One emission spectrum per Δ2 (strong drive Ω, Δ1; coupling 2G detuned by Δ2
/// from the inner doublet transition). Throws ValidationError unless the Δ2
/// axis spans [-Ω, Ω].
ScanResult2D detuning_map(const EmitterParams& emitter, double omega, double g, double delta1,
                          const std::vector<double>& delta2, const std::vector<double>& grid,
                          const ScanOptions& options = {});

struct Curve1D {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<std::string> errors; // per point, empty on success
};

inline ScanOptions resolvent_scan() {
    ScanOptions o;
    o.method = SpectrumMethod::Resolvent;
    return o;
}

struct CentralCurveOptions {
    double window = 0.5; // half-width around the drive frequency (GHz)
    double step = 0.01;  // frequency step inside the window (GHz)
    ScanOptions scan = resolvent_scan();
};

/// Incoherent intensity within ±window of the drive frequency versus Δ2.
Curve1D central_intensity_curve(const EmitterParams& emitter, double omega, double g, double delta1,
                                const std::vector<double>& delta2, const CentralCurveOptions& options = {});

struct CentralFit {
    double delta1 = 0.0;
    double scale = 0.0;
    double delta1_error = 0.0;
    double scale_error = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
};

/// Least-squares estimate of Δ1 (and an overall scale) from a measured or
/// synthetic central-intensity curve.
CentralFit fit_central_detuning(const std::vector<double>& delta2, const std::vector<double>& data,
                                const EmitterParams& emitter, double omega, double g, double delta1_guess,
                                const CentralCurveOptions& options = {}, const LmOptions& lm = {});

struct DipAssignment {
    int n = 0;
    bool found = false;
    double position = 0.0;      // -Δ3 of the assigned dip (GHz)
    double unshifted = 0.0;     // 2Ω/n
    double formula_shift = 0.0; // subharmonic_shift(n, α, Ω)
    double depth = 0.0;         // prominence of the assigned dip
    double suppression = 0.0;   // 1 - intensity / intensity without coupling
};

struct SubharmonicOptions {
    double prominence_fraction = 0.1; // of the curve median
    int max_order = 5;
    double delta1 = 0.0;              // strong-drive detuning (GHz)
    double grid_half_width = 12.0;    // spectral integration range around the drive
    double grid_step = 0.005;
    ScanOptions scan;
};

struct SubharmonicScan {
    std::vector<double> x; // -Δ3 (GHz)
    std::vector<double> y; // transmitted intensity (incoherent + elastic)
    std::vector<std::string> errors;
    std::vector<Extremum> dips;
    std::vector<DipAssignment> assignments; // n = 1..max_order
    double uncoupled = 0.0; // transmitted intensity with the coupling laser off
};

/// Etalon-filtered emission versus the coupling-laser detuning -Δ3 = x, with
/// dip detection. Each order n is assigned the most prominent dip between
/// the midpoints to the neighbouring subharmonics (ties go to smaller |Δ3|).
/// Throws ValidationError if the x range misses some 2Ω/n, n <= max_order,
/// or if the filter is not centred on the drive.
SubharmonicScan subharmonic_scan(const EmitterParams& emitter, double omega, PowerRatio alpha,
                                 const std::vector<double>& x, const EtalonFilter& filter,
                                 const SubharmonicOptions& options = {});

/// Default -Δ3 axis for the subharmonic scan: [0.8, 2Ω + 0.8] GHz.
std::vector<double> default_subharmonic_axis(double omega, int points = 80);

enum class DegenerateMethod { PhaseAverage, SmallDelta };

struct DegenerateOptions {
    DegenerateMethod method = DegenerateMethod::PhaseAverage;
    int phase_samples = 256;  // PhaseAverage: relative phases on [0, 2π)
    double epsilon = 0.0;     // SmallDelta: beat in rad/ns; 0 selects γ_sp / 20
    int initial_cutoff = 16;
    SteadyStateOptions steady = {.max_cutoff = 4096, .tolerance = 1e-8};
};

/// Degenerate two-laser drive (coupling amplitude √α·Ω at the drive frequency).
/// PhaseAverage averages Mollow spectra with Ω_eff(φ) = Ω |1 + √α e^{iφ}|;
/// SmallDelta runs the floquet engine at beat ε. The incoherent intensity is
/// on the grid; elastic lines are kept separately.
Spectrum degenerate_spectrum(const EmitterParams& emitter, double omega, PowerRatio alpha,
                             const std::vector<double>& grid, const DegenerateOptions& options = {});

struct SidebandPlateau {
    double lower_edge = 0.0;  // |f - Δ1| where the sideband falls to half its median
    double upper_edge = 0.0;
    double median = 0.0;      // over the central 60% of the nominal support
    double relative_std = 0.0;
};

/// Upper (sign = +1) or lower (sign = -1) sideband of a degenerate-drive
/// spectrum, analysed over the nominal support [2Ω(1 - √α), 2Ω(1 + √α)].
SidebandPlateau analyse_sideband(const Spectrum& s, double omega, PowerRatio alpha, int sign,
                                 double delta1 = 0.0);

/// Elastic weight plus incoherent intensity within ±half_width of the drive.
double central_weight(const Spectrum& s, double half_width = 1.0, double delta1 = 0.0);

// --- CSV writers ----------------------------------------------------------

/// `delta2_ghz,freq_ghz,intensity`; failed rows are written as `nan`.
void write_map_csv(const std::filesystem::path& path, const ScanResult2D& map);
/// `x_ghz,intensity`.
void write_curve_csv(const std::filesystem::path& path, const Curve1D& curve);
/// `n,dip_position_ghz,unshifted_2omega_over_n_ghz,formula_shift_ghz`; missing dips as `nan`.
void write_dips_csv(const std::filesystem::path& path, const std::vector<DipAssignment>& dips);

} // namespace rfsim
