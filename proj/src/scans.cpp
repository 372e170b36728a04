#include "rfsim/scans.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "rfsim/bloch.hpp"
#include "rfsim/dressed.hpp"
#include "rfsim/errors.hpp"

namespace rfsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median(std::vector<double> v) {
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
    if (v.empty()) return kNaN;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double m = *mid;
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
    return m;
}

} // namespace

void EtalonFilter::validate() const {
    if (!(fwhm > 0.0) || !(fsr > fwhm) || !std::isfinite(center)) {
        throw ValidationError("etalon: need 0 < fwhm < fsr and a finite center");
    }
}

double etalon_transmission(const EtalonFilter& filter, double freq) {
    const double f = 2.0 * filter.finesse() / std::numbers::pi;
    const double s = std::sin(std::numbers::pi * (freq - filter.center) / filter.fsr);
    return 1.0 / (1.0 + f * f * s * s);
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task) {
    if (workers < 1) throw ValidationError("workers must be >= 1");
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    if (count <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto run = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            if (failed) return;
            try {
                task(i);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(count);
    for (std::size_t w = 0; w < count; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

Spectrum bichromatic_spectrum(const EmitterParams& emitter, const BichromaticDrive& drive,
                              const std::vector<double>& grid, const ScanOptions& options) {
    const auto pl = build_periodic_liouvillian(emitter, drive);
    const auto st = periodic_steady_state(pl, options.initial_cutoff, options.steady);
    if (options.method == SpectrumMethod::Resolvent) return resolvent_spectrum(pl, st, grid);
    return emission_spectrum(pl, st, grid, options.emission);
}

std::vector<double> ScanResult2D::row(std::size_t i) const {
    const auto begin = intensity.begin() + static_cast<std::ptrdiff_t>(i * axis2.size());
    return {begin, begin + static_cast<std::ptrdiff_t>(axis2.size())};
}

std::vector<double> ScanResult2D::column(std::size_t j) const {
    std::vector<double> out(axis1.size());
    for (std::size_t i = 0; i < axis1.size(); ++i) out[i] = at(i, j);
    return out;
}

ScanResult2D detuning_map(const EmitterParams& emitter, double omega, double g, double delta1,
                          const std::vector<double>& delta2, const std::vector<double>& grid,
                          const ScanOptions& options) {
    check_grid(grid);
    if (delta2.empty()) throw ValidationError("detuning_map: empty Δ2 axis");
    const auto [lo, hi] = std::minmax_element(delta2.begin(), delta2.end());
    if (*lo > -omega || *hi < omega) {
        throw ValidationError("detuning_map: Δ2 range must span at least ±Ω around 0");
    }
    ScanResult2D map;
    map.axis1 = delta2;
    map.axis2 = grid;
    map.intensity.assign(delta2.size() * grid.size(), kNaN);
    map.errors.assign(delta2.size(), {});
    parallel_for(delta2.size(), options.workers, [&](std::size_t i) {
        try {
            const auto drive = BichromaticDrive::from_delta2(omega, g, delta1, delta2[i]);
            const Spectrum s = bichromatic_spectrum(emitter, drive, grid, options);
            std::copy(s.intensity.begin(), s.intensity.end(),
                      map.intensity.begin() + static_cast<std::ptrdiff_t>(i * grid.size()));
        } catch (const std::exception& e) {
            map.errors[i] = e.what();
        }
    });
    return map;
}

Curve1D central_intensity_curve(const EmitterParams& emitter, double omega, double g, double delta1,
                                const std::vector<double>& delta2, const CentralCurveOptions& options) {
    if (!(options.window > 0.0) || !(options.step > 0.0) || options.step > options.window) {
        throw ValidationError("central_intensity_curve: need 0 < step <= window");
    }
    const auto grid = make_grid(delta1 - options.window, delta1 + options.window, options.step);
    Curve1D c;
    c.x = delta2;
    c.y.assign(delta2.size(), kNaN);
    c.errors.assign(delta2.size(), {});
    parallel_for(delta2.size(), options.scan.workers, [&](std::size_t i) {
        try {
            const auto drive = BichromaticDrive::from_delta2(omega, g, delta1, delta2[i]);
            c.y[i] = bichromatic_spectrum(emitter, drive, grid, options.scan).integrated();
        } catch (const std::exception& e) {
            c.errors[i] = e.what();
        }
    });
    return c;
}

CentralFit fit_central_detuning(const std::vector<double>& delta2, const std::vector<double>& data,
                                const EmitterParams& emitter, double omega, double g, double delta1_guess,
                                const CentralCurveOptions& options, const LmOptions& lm) {
    if (delta2.size() != data.size() || delta2.size() < 4) {
        throw ValidationError("fit_central_detuning: need >= 4 matching samples");
    }
    const Curve1D guess_curve = central_intensity_curve(emitter, omega, g, delta1_guess, delta2, options);
    const double model_mean = std::accumulate(guess_curve.y.begin(), guess_curve.y.end(), 0.0);
    const double data_mean = std::accumulate(data.begin(), data.end(), 0.0);
    if (!std::isfinite(model_mean) || model_mean <= 0.0) {
        throw NumericalError("fit_central_detuning: model curve failed at the initial guess");
    }
    Eigen::VectorXd p0(2);
    p0 << delta1_guess, data_mean / model_mean;

    ResidualFn residual = [&](const Eigen::VectorXd& p) {
        const Curve1D m = central_intensity_curve(emitter, omega, g, p[0], delta2, options);
        Eigen::VectorXd r(static_cast<Eigen::Index>(data.size()));
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (!m.errors[i].empty()) throw ValidationError("model point failed: " + m.errors[i]);
            r[static_cast<Eigen::Index>(i)] = p[1] * m.y[i] - data[i];
        }
        return r;
    };
    const LmResult res = levenberg_marquardt(residual, p0, lm);
    CentralFit fit;
    fit.delta1 = res.params[0];
    fit.scale = res.params[1];
    fit.delta1_error = res.std_errors[0];
    fit.scale_error = res.std_errors[1];
    fit.residual_norm = res.residual_norm;
    fit.iterations = res.iterations;
    return fit;
}

std::vector<double> default_subharmonic_axis(double omega, int points) {
    if (!(omega > 0.0) || points < 2) throw ValidationError("subharmonic axis: need Ω > 0, points >= 2");
    const double lo = 0.8;
    const double hi = 2.0 * omega + 0.8;
    std::vector<double> x(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) x[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
    return x;
}

SubharmonicScan subharmonic_scan(const EmitterParams& emitter, double omega, PowerRatio alpha,
                                 const std::vector<double>& x, const EtalonFilter& filter,
                                 const SubharmonicOptions& options) {
    filter.validate();
    check_grid(x);
    if (!(omega > 0.0) || !(alpha.value >= 0.0)) throw ValidationError("subharmonic_scan: need Ω > 0, α² >= 0");
    if (options.max_order < 1) throw ValidationError("subharmonic_scan: max_order must be >= 1");
    if (std::abs(filter.center - options.delta1) > 1e-9) {
        throw ValidationError("subharmonic_scan: the etalon must be centred on the drive frequency");
    }
    for (int n = 1; n <= options.max_order; ++n) {
        const double target = 2.0 * omega / n;
        if (target < x.front() || target > x.back()) {
            throw ValidationError("subharmonic_scan: -Δ3 range does not cover 2Ω/" + std::to_string(n));
        }
    }

    const auto grid = make_grid(options.delta1 - options.grid_half_width,
                                options.delta1 + options.grid_half_width, options.grid_step);
    std::vector<double> transmission(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) transmission[i] = etalon_transmission(filter, grid[i]);
    const double g = 0.5 * alpha.amplitude() * omega;

    auto transmitted = [&](const Spectrum& s) {
        double acc = 0.0;
        for (std::size_t j = 1; j < grid.size(); ++j) {
            acc += 0.5 * (grid[j] - grid[j - 1]) *
                   (s.intensity[j] * transmission[j] + s.intensity[j - 1] * transmission[j - 1]);
        }
        for (const auto& l : s.elastic_lines) acc += l.weight * etalon_transmission(filter, l.freq);
        return acc;
    };

    SubharmonicScan scan;
    scan.uncoupled = transmitted(
        bichromatic_spectrum(emitter, BichromaticDrive(DriveField(omega, options.delta1), DriveField(0.0, -x.front())),
                             grid, options.scan));
    scan.x = x;
    scan.y.assign(x.size(), kNaN);
    scan.errors.assign(x.size(), {});
    parallel_for(x.size(), options.scan.workers, [&](std::size_t i) {
        try {
            const BichromaticDrive drive(DriveField(omega, options.delta1), DriveField(g, -x[i]));
            scan.y[i] = transmitted(bichromatic_spectrum(emitter, drive, grid, options.scan));
        } catch (const std::exception& e) {
            scan.errors[i] = e.what();
        }
    });

    const double threshold = options.prominence_fraction * median(scan.y);
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::isfinite(scan.y[i])) {
            xs.push_back(x[i]);
            ys.push_back(scan.y[i]);
        }
    }
    if (xs.size() >= 3) scan.dips = find_dips(xs, ys, threshold);

    for (int n = 1; n <= options.max_order; ++n) {
        DipAssignment a;
        a.n = n;
        a.unshifted = 2.0 * omega / n;
        a.formula_shift = subharmonic_shift(n, alpha, omega);
        const double upper = n == 1 ? 2.0 * omega + 0.5 * (2.0 * omega - omega) : 0.5 * (a.unshifted + 2.0 * omega / (n - 1));
        const double lower = 0.5 * (a.unshifted + 2.0 * omega / (n + 1));
        const Extremum* best = nullptr;
        for (const auto& d : scan.dips) {
            if (d.position < lower || d.position >= upper) continue;
            if (best == nullptr || d.prominence > best->prominence ||
                (d.prominence == best->prominence && d.position < best->position)) {
                best = &d;
            }
        }
        if (best != nullptr) {
            a.found = true;
            a.position = best->position;
            a.depth = best->prominence;
            a.suppression = 1.0 - best->value / scan.uncoupled;
        }
        scan.assignments.push_back(a);
    }
    return scan;
}

Spectrum degenerate_spectrum(const EmitterParams& emitter, double omega, PowerRatio alpha,
                             const std::vector<double>& grid, const DegenerateOptions& options) {
    check_grid(grid);
    if (!(omega > 0.0)) throw ValidationError("degenerate_spectrum: need Ω > 0");
    if (!(alpha.value >= 0.0 && alpha.value < 1.0)) {
        throw ValidationError("degenerate_spectrum: α must lie in [0, 1)");
    }
    const double root = alpha.amplitude();

    if (options.method == DegenerateMethod::PhaseAverage) {
        if (options.phase_samples < 1) throw ValidationError("phase_samples must be >= 1");
        Spectrum out;
        out.freq = grid;
        out.intensity.assign(grid.size(), 0.0);
        const int m = options.phase_samples;
        for (int j = 0; j < m; ++j) {
            const double phi = kTwoPi * j / m;
            const double rabi = omega * std::abs(1.0 + root * std::polar(1.0, phi));
            const Spectrum s = mollow_spectrum_unchecked(emitter, DriveField(rabi, 0.0), grid);
            for (std::size_t i = 0; i < grid.size(); ++i) out.intensity[i] += s.intensity[i] / m;
            out.elastic_weight += s.elastic_weight / m;
        }
        out.elastic_lines.push_back({0.0, out.elastic_weight});
        return out;
    }

    const double eps = options.epsilon > 0.0 ? options.epsilon : emitter.gamma_sp() / 20.0;
    if (eps > 0.5 * emitter.gamma_sp()) {
        throw ValidationError("degenerate_spectrum: small_delta beat ε must not exceed γ_sp/2 (degeneracy lost)");
    }
    const BichromaticDrive drive(DriveField(omega, 0.0), DriveField(0.5 * root * omega, to_ghz(eps)));
    ScanOptions so;
    so.method = SpectrumMethod::Resolvent;
    so.initial_cutoff = options.initial_cutoff;
    so.steady = options.steady;
    Spectrum s = bichromatic_spectrum(emitter, drive, grid, so);
    return s;
}

SidebandPlateau analyse_sideband(const Spectrum& s, double omega, PowerRatio alpha, int sign, double delta1) {
    if (sign != 1 && sign != -1) throw ValidationError("analyse_sideband: sign must be ±1");
    const double root = alpha.amplitude();
    const double a = 2.0 * omega * (1.0 - root);
    const double b = 2.0 * omega * (1.0 + root);
    // Offsets |f - Δ1| on the requested side, increasing.
    std::vector<double> off;
    std::vector<double> val;
    for (std::size_t i = 0; i < s.freq.size(); ++i) {
        const double o = sign * (s.freq[i] - delta1);
        if (o >= 0.0) {
            off.push_back(o);
            val.push_back(s.intensity[i]);
        }
    }
    if (sign < 0) {
        std::reverse(off.begin(), off.end());
        std::reverse(val.begin(), val.end());
    }
    if (off.size() < 3 || off.back() < b) throw ValidationError("analyse_sideband: grid does not cover the sideband");

    const double lo = a + 0.2 * (b - a);
    const double hi = b - 0.2 * (b - a);
    std::vector<double> core;
    for (std::size_t i = 0; i < off.size(); ++i) {
        if (off[i] >= lo && off[i] <= hi) core.push_back(val[i]);
    }
    if (core.size() < 3) throw ValidationError("analyse_sideband: grid too coarse for the plateau");
    SidebandPlateau p;
    p.median = median(core);
    const double mean = std::accumulate(core.begin(), core.end(), 0.0) / static_cast<double>(core.size());
    double var = 0.0;
    for (double v : core) var += (v - mean) * (v - mean);
    p.relative_std = std::sqrt(var / static_cast<double>(core.size())) / mean;

    // Half-median crossings walking outwards from the support centre; on the
    // inner side the sideband may merge into the central line, in which case
    // the valley between them marks the edge.
    const double half = 0.5 * p.median;
    const double mid = 0.5 * (a + b);
    auto start = static_cast<std::size_t>(std::lower_bound(off.begin(), off.end(), mid) - off.begin());
    p.lower_edge = off.front();
    for (std::size_t i = start; i > 0; --i) {
        if (val[i - 1] < half) {
            const double t = (half - val[i - 1]) / (val[i] - val[i - 1]);
            p.lower_edge = off[i - 1] + t * (off[i] - off[i - 1]);
            break;
        }
        if (off[i] < a && val[i - 1] > val[i]) {
            p.lower_edge = off[i];
            break;
        }
    }
    p.upper_edge = off.back();
    for (std::size_t i = start; i + 1 < off.size(); ++i) {
        if (val[i + 1] < half) {
            const double t = (val[i] - half) / (val[i] - val[i + 1]);
            p.upper_edge = off[i] + t * (off[i + 1] - off[i]);
            break;
        }
        if (off[i] > b && val[i + 1] > val[i]) {
            p.upper_edge = off[i];
            break;
        }
    }
    return p;
}

double central_weight(const Spectrum& s, double half_width, double delta1) {
    double w = s.integrated(delta1 - half_width, delta1 + half_width);
    for (const auto& l : s.elastic_lines) {
        if (std::abs(l.freq - delta1) <= half_width) w += l.weight;
    }
    return w;
}

void write_map_csv(const std::filesystem::path& path, const ScanResult2D& map) {
    std::ostringstream os;
    os << "delta2_ghz,freq_ghz,intensity\n";
    for (std::size_t i = 0; i < map.axis1.size(); ++i) {
        for (std::size_t j = 0; j < map.axis2.size(); ++j) {
            const double v = map.at(i, j);
            os << format_double(map.axis1[i]) << ',' << format_double(map.axis2[j]) << ','
               << (std::isfinite(v) ? format_double(v) : "nan") << '\n';
        }
    }
    write_file_atomic(path, os.str());
}

void write_curve_csv(const std::filesystem::path& path, const Curve1D& curve) {
    std::ostringstream os;
    os << "x_ghz,intensity\n";
    for (std::size_t i = 0; i < curve.x.size(); ++i) {
        os << format_double(curve.x[i]) << ',' << (std::isfinite(curve.y[i]) ? format_double(curve.y[i]) : "nan")
           << '\n';
    }
    write_file_atomic(path, os.str());
}

void write_dips_csv(const std::filesystem::path& path, const std::vector<DipAssignment>& dips) {
    std::ostringstream os;
    os << "n,dip_position_ghz,unshifted_2omega_over_n_ghz,formula_shift_ghz\n";
    for (const auto& d : dips) {
        os << d.n << ',' << (d.found ? format_double(d.position) : "nan") << ',' << format_double(d.unshifted)
           << ',' << format_double(d.formula_shift) << '\n';
    }
    write_file_atomic(path, os.str());
}

} // namespace rfsim
