#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace rfsim {

/// A coherent (delta-function) component of the emission.
struct ElasticLine {
    double freq;   // GHz relative to ω0
    double weight; // same normalization as the integrated incoherent intensity
};

/// Emission spectrum on a frequency grid relative to ω0 (GHz).
///
/// `intensity` is the incoherent spectral density per GHz, normalized so that
/// its integral plus `elastic_weight` equals the steady-state excited
/// population. Coherent components are never rasterized onto the grid.
struct Spectrum {
    std::vector<double> freq;
    std::vector<double> intensity;
    double elastic_weight = 0.0;
    std::vector<ElasticLine> elastic_lines;
    std::vector<std::string> warnings;

    std::size_t size() const { return freq.size(); }
    double step() const;
    /// Trapezoidal integral of the incoherent intensity.
    double integrated() const;
    /// Trapezoidal integral restricted to [lo, hi].
    double integrated(double lo, double hi) const;
    double max_intensity() const;
};

/// Uniform grid lo, lo+step, ..., hi (inclusive up to round-off).
std::vector<double> make_grid(double lo, double hi, double step);

/// Throws ValidationError unless the grid is strictly increasing with >= 2 points.
void check_grid(const std::vector<double>& grid);

/// Throws ValidationError unless the grid covers [center - half_width, center + half_width].
void check_coverage(const std::vector<double>& grid, double center, double half_width,
                    const std::string& what);

/// Interior local maxima (indices), excluding plateaus at the grid edges.
std::vector<std::size_t> local_maxima(const std::vector<double>& y);

struct Extremum {
    std::size_t index;
    double position;   // parabolic refinement between neighbouring samples
    double value;
    double prominence;
};

/// Local minima of y(x) with topographic prominence >= min_prominence.
std::vector<Extremum> find_dips(const std::vector<double>& x, const std::vector<double>& y,
                                double min_prominence);

/// Local maxima of y(x) with prominence >= min_prominence.
std::vector<Extremum> find_peaks(const std::vector<double>& x, const std::vector<double>& y,
                                 double min_prominence);

/// Relative L2 distance ||a - b|| / ||b||.
double relative_l2(const std::vector<double>& a, const std::vector<double>& b);

/// Gaussian convolution (detector-resolution emulation). fwhm in GHz.
Spectrum convolve_gaussian(const Spectrum& s, double fwhm);

// --- CSV and sidecar metadata --------------------------------------------

using Metadata = std::map<std::string, std::string>;

/// Writes `freq_ghz,intensity` CSV plus a `<path>.meta` key = value sidecar
/// carrying the elastic weight, elastic lines and any extra metadata.
void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& s,
                        const Metadata& extra = {});

/// Reads a two-column CSV with a header line. The sidecar is optional.
Spectrum read_spectrum_csv(const std::filesystem::path& path);

/// Writes `text` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

std::string format_metadata(const Metadata& meta);
std::string format_double(double v);

} // namespace rfsim
