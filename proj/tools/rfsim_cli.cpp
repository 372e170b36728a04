// rfsim: command-line front end for the resonance-fluorescence simulator.
//
// Exit status: 0 success, 1 validation, 2 numerical failure, 3 I/O.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rfsim/bloch.hpp"
#include "rfsim/config.hpp"
#include "rfsim/dressed.hpp"
#include "rfsim/errors.hpp"
#include "rfsim/floquet.hpp"
#include "rfsim/scans.hpp"
#include "rfsim/spectrum.hpp"
#include "rfsim/version.hpp"

namespace fs = std::filesystem;
using namespace rfsim;

namespace {

struct Context {
    std::string command;
    RunConfig cfg;
    fs::path out;
    std::string prefix;
    bool strict = false;
    std::string timestamp;
    std::vector<std::string> written;

    fs::path file(const std::string& suffix) const { return out / (prefix + "_" + suffix); }
};

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void prepare_output(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    const fs::path probe = dir / ".rfsim_write_probe";
    {
        std::ofstream f(probe);
        if (!f) throw IoError("output directory " + dir.string() + " is not writable");
    }
    fs::remove(probe, ec);
}

Metadata provenance(const Context& ctx) {
    return {{"tool", "rfsim"}, {"version", kVersion}, {"command", ctx.command}, {"timestamp", ctx.timestamp}};
}

void warn(Context& ctx, const std::string& msg, std::vector<std::string>& sink) {
    if (ctx.strict) throw NumericalError("warning treated as error (--strict): " + msg);
    std::cerr << "warning: " << msg << '\n';
    sink.push_back(msg);
}

void write_run_metadata(const Context& ctx, const std::vector<std::string>& warnings) {
    std::vector<std::string> header = {"rfsim " + std::string(kVersion) + " run metadata",
                                       "command = " + ctx.command,
                                       "timestamp = " + ctx.timestamp,
                                       std::string("strict = ") + (ctx.strict ? "true" : "false")};
    for (const auto& f : ctx.written) header.push_back("output = " + f);
    for (const auto& w : warnings) header.push_back("warning = " + w);
    header.push_back("re-run: rfsim " + ctx.command + " --config <this file>");
    write_file_atomic(ctx.out / "run.ini", ctx.cfg.materialize(header));
}

std::vector<double> spectral_grid(const RunConfig& cfg) {
    const double lo = cfg.number("numerics.freq_min_ghz");
    const double hi = cfg.number("numerics.freq_max_ghz");
    const double step = cfg.number("numerics.freq_step_ghz");
    if (!(hi > lo) || !(step > 0.0)) throw ValidationError("numerics: need freq_max_ghz > freq_min_ghz and freq_step_ghz > 0");
    return make_grid(lo, hi, step);
}

ScanOptions scan_options(const RunConfig& cfg, bool strict) {
    ScanOptions o;
    o.workers = cfg.integer("numerics.workers");
    if (o.workers < 1) throw ValidationError("numerics.workers must be >= 1");
    const std::string method = cfg.text("numerics.method");
    if (method == "time_domain") {
        o.method = SpectrumMethod::TimeDomain;
    } else if (method == "resolvent") {
        o.method = SpectrumMethod::Resolvent;
    } else {
        throw ValidationError("numerics.method must be time_domain or resolvent, got '" + method + "'");
    }
    o.initial_cutoff = cfg.integer("numerics.cutoff");
    o.steady.max_cutoff = cfg.integer("numerics.max_cutoff");
    o.steady.tolerance = cfg.number("numerics.steady_tolerance");
    o.emission.tau_max = cfg.number("numerics.tau_max_ns");
    o.emission.phases = cfg.integer("numerics.phases");
    o.emission.rel_tol = cfg.number("numerics.rel_tol");
    o.emission.strict = strict;
    return o;
}

double strong_rabi(const RunConfig& cfg) {
    const double r2 = cfg.number("drive.rabi2_strong_ghz");
    if (!(r2 > 0.0)) throw ValidationError("drive.rabi2_strong_ghz must be > 0");
    return 0.5 * r2;
}

// Grid coarser than the narrowest line (central FWHM Γ2/π) is flagged.
void check_resolution(Context& ctx, const EmitterParams& e, std::vector<std::string>& warnings) {
    const double fwhm = e.gamma_transverse() / std::numbers::pi;
    const double step = ctx.cfg.number("numerics.freq_step_ghz");
    if (step > fwhm) {
        warn(ctx, "grid step " + format_double(step) + " GHz exceeds the narrowest linewidth " + format_double(fwhm) + " GHz",
             warnings);
    }
}

void emit_spectrum(Context& ctx, const std::string& suffix, const Spectrum& s, Metadata extra,
                   std::vector<std::string>& warnings) {
    for (const auto& w : s.warnings) warn(ctx, w, warnings);
    for (const auto& [k, v] : provenance(ctx)) extra[k] = v;
    const fs::path p = ctx.file(suffix);
    write_spectrum_csv(p, s, extra);
    ctx.written.push_back(p.filename().string());
}

int cmd_mollow(Context& ctx) {
    std::vector<std::string> warnings;
    const EmitterParams e = emitter_from_config(ctx.cfg);
    const DriveField drive(strong_rabi(ctx.cfg), ctx.cfg.number("drive.detuning_strong_ghz"));
    const auto grid = spectral_grid(ctx.cfg);
    check_resolution(ctx, e, warnings);
    const Spectrum s = mollow_spectrum(e, drive, grid);
    emit_spectrum(ctx, "mollow.csv", s, {{"rabi_ghz", format_double(drive.rabi())}}, warnings);
    write_run_metadata(ctx, warnings);
    return 0;
}

BichromaticDrive drive_from_config(const RunConfig& cfg) {
    const double omega = strong_rabi(cfg);
    const double g = weak_rabi_from_config(cfg);
    const double d1 = cfg.number("drive.detuning_strong_ghz");
    const double phase = cfg.number("drive.relative_phase_rad");
    const bool has_d3 = cfg.has("drive.detuning_weak_ghz");
    const bool has_d2 = cfg.has("drive.delta2_ghz");
    if (has_d3 && has_d2) throw ValidationError("set at most one of 'drive.detuning_weak_ghz' and 'drive.delta2_ghz'");
    if (has_d3) return BichromaticDrive(DriveField(omega, d1), DriveField(g, cfg.number("drive.detuning_weak_ghz")), phase);
    const double d2 = has_d2 ? cfg.number("drive.delta2_ghz") : 0.0;
    return BichromaticDrive::from_delta2(omega, g, d1, d2, phase);
}

int cmd_spectrum(Context& ctx) {
    std::vector<std::string> warnings;
    const EmitterParams e = emitter_from_config(ctx.cfg);
    const BichromaticDrive drive = drive_from_config(ctx.cfg);
    const auto grid = spectral_grid(ctx.cfg);
    check_resolution(ctx, e, warnings);
    const Spectrum s = bichromatic_spectrum(e, drive, grid, scan_options(ctx.cfg, ctx.strict));
    emit_spectrum(ctx, "spectrum.csv", s, {{"delta2_ghz", format_double(drive.delta2())}}, warnings);

    const LadderParams lp{drive.strong().rabi(), drive.weak().rabi(), drive.strong().detuning(), drive.delta2(),
                          drive.relative_phase()};
    const DressedLines lines = doubly_dressed_lines(lp);
    for (const auto& w : lines.warnings) warn(ctx, w, warnings);
    write_lines_csv(ctx.file("lines.csv"), lines.lines);
    ctx.written.push_back(ctx.file("lines.csv").filename().string());
    write_run_metadata(ctx, warnings);
    return 0;
}

std::vector<double> axis(double lo, double hi, double step, const std::string& what) {
    if (!(hi > lo) || !(step > 0.0)) throw ValidationError(what + ": need max > min and step > 0");
    return make_grid(lo, hi, step);
}

int cmd_map(Context& ctx) {
    std::vector<std::string> warnings;
    const EmitterParams e = emitter_from_config(ctx.cfg);
    const double omega = strong_rabi(ctx.cfg);
    const double g = weak_rabi_from_config(ctx.cfg);
    const double d1 = ctx.cfg.number("drive.detuning_strong_ghz");
    const auto d2 = axis(ctx.cfg.number("map.delta2_min_ghz"), ctx.cfg.number("map.delta2_max_ghz"),
                         ctx.cfg.number("map.delta2_step_ghz"), "map");
    const auto grid = spectral_grid(ctx.cfg);
    check_resolution(ctx, e, warnings);
    const ScanOptions so = scan_options(ctx.cfg, ctx.strict);

    const ScanResult2D map = detuning_map(e, omega, g, d1, d2, grid, so);
    for (std::size_t i = 0; i < map.axis1.size(); ++i) {
        if (map.failed(i)) warn(ctx, "Δ2 = " + format_double(map.axis1[i]) + " failed: " + map.errors[i], warnings);
    }
    write_map_csv(ctx.file("map.csv"), map);
    ctx.written.push_back(ctx.file("map.csv").filename().string());

    CentralCurveOptions co;
    co.window = ctx.cfg.number("map.window_ghz");
    co.scan.workers = so.workers;
    const Curve1D curve = central_intensity_curve(e, omega, g, d1, d2, co);
    write_curve_csv(ctx.file("central.csv"), curve);
    ctx.written.push_back(ctx.file("central.csv").filename().string());

    const auto tracked = track_lines({omega, g, d1, 0.0, 0.0}, d2);
    std::ostringstream os;
    os << "delta2_ghz,label,center_ghz,weight\n";
    for (std::size_t i = 0; i < d2.size(); ++i) {
        for (const auto& l : tracked[i].lines) {
            os << format_double(d2[i]) << ',' << l.label << ',' << format_double(l.center) << ','
               << format_double(l.weight) << '\n';
        }
    }
    write_file_atomic(ctx.file("lines.csv"), os.str());
    ctx.written.push_back(ctx.file("lines.csv").filename().string());
    write_run_metadata(ctx, warnings);
    return 0;
}

int cmd_subharmonics(Context& ctx) {
    std::vector<std::string> warnings;
    const EmitterParams e = emitter_from_config(ctx.cfg);
    const double omega = strong_rabi(ctx.cfg);
    if (!ctx.cfg.has("drive.alpha")) throw ValidationError("subharmonics needs 'drive.alpha' (power ratio)");
    if (ctx.cfg.has("drive.rabi2_weak_ghz")) {
        throw ValidationError("set exactly one of 'drive.rabi2_weak_ghz' and 'drive.alpha'");
    }
    const PowerRatio alpha{ctx.cfg.number("drive.alpha")};
    if (!ctx.cfg.has("subharmonics.x_max_ghz")) {
        ctx.cfg.set("subharmonics.x_max_ghz", format_double(2.0 * omega + 0.8));
    }
    const int points = ctx.cfg.integer("subharmonics.points");
    const double lo = ctx.cfg.number("subharmonics.x_min_ghz");
    const double hi = ctx.cfg.number("subharmonics.x_max_ghz");
    if (points < 3 || !(hi > lo)) throw ValidationError("subharmonics: need points >= 3 and x_max_ghz > x_min_ghz");
    std::vector<double> x(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) x[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);

    EtalonFilter filter;
    filter.fwhm = ctx.cfg.number("subharmonics.etalon_fwhm_ghz");
    filter.fsr = ctx.cfg.number("subharmonics.etalon_fsr_ghz");
    filter.center = ctx.cfg.number("drive.detuning_strong_ghz");
    SubharmonicOptions so;
    so.prominence_fraction = ctx.cfg.number("subharmonics.prominence_fraction");
    so.max_order = ctx.cfg.integer("subharmonics.max_order");
    so.delta1 = filter.center;
    so.scan = scan_options(ctx.cfg, ctx.strict);

    const SubharmonicScan scan = subharmonic_scan(e, omega, alpha, x, filter, so);
    for (std::size_t i = 0; i < scan.x.size(); ++i) {
        if (!scan.errors[i].empty()) warn(ctx, "-Δ3 = " + format_double(scan.x[i]) + " failed: " + scan.errors[i], warnings);
    }
    for (const auto& a : scan.assignments) {
        if (!a.found) warn(ctx, "no dip detected for n = " + std::to_string(a.n), warnings);
    }
    write_curve_csv(ctx.file("subharmonics.csv"), {scan.x, scan.y, scan.errors});
    write_dips_csv(ctx.file("dips.csv"), scan.assignments);
    ctx.written.push_back(ctx.file("subharmonics.csv").filename().string());
    ctx.written.push_back(ctx.file("dips.csv").filename().string());
    write_run_metadata(ctx, warnings);
    return 0;
}

int cmd_degenerate(Context& ctx) {
    std::vector<std::string> warnings;
    const EmitterParams e = emitter_from_config(ctx.cfg);
    const double omega = strong_rabi(ctx.cfg);
    const auto grid = spectral_grid(ctx.cfg);
    check_resolution(ctx, e, warnings);
    const std::string method = ctx.cfg.text("degenerate.method");
    std::vector<std::pair<std::string, DegenerateMethod>> methods;
    if (method == "phase_average" || method == "both") methods.emplace_back("phase_average", DegenerateMethod::PhaseAverage);
    if (method == "small_delta" || method == "both") methods.emplace_back("small_delta", DegenerateMethod::SmallDelta);
    if (methods.empty()) throw ValidationError("degenerate.method must be phase_average, small_delta or both");

    for (double a : ctx.cfg.list("degenerate.alphas")) {
        for (const auto& [name, m] : methods) {
            DegenerateOptions o;
            o.method = m;
            o.phase_samples = ctx.cfg.integer("degenerate.phase_samples");
            o.epsilon = ctx.cfg.number("degenerate.epsilon_rad_per_ns");
            const Spectrum s = degenerate_spectrum(e, omega, {a}, grid, o);
            Metadata meta = {{"alpha", format_double(a)},
                             {"method", name},
                             {"model", "mutually incoherent lasers (relative phase averaged)"}};
            emit_spectrum(ctx, "degenerate_alpha" + format_double(a) + "_" + name + ".csv", s, meta, warnings);
        }
    }
    write_run_metadata(ctx, warnings);
    return 0;
}

int cmd_fit(Context& ctx, const std::string& data_override) {
    std::vector<std::string> warnings;
    if (!data_override.empty()) ctx.cfg.set("fit.data", data_override);
    const EmitterParams e = emitter_from_config(ctx.cfg);
    const fs::path data_path = ctx.cfg.text("fit.data");
    if (!fs::exists(data_path)) throw IoError("fit data file not found: " + data_path.string());
    const Spectrum data = read_spectrum_csv(data_path);

    MollowFitParams guess;
    const double r2 = ctx.cfg.has("fit.rabi2_guess_ghz") ? ctx.cfg.number("fit.rabi2_guess_ghz")
                                                         : ctx.cfg.number("drive.rabi2_strong_ghz");
    guess.rabi = 0.5 * r2;
    guess.t2_ps = ctx.cfg.has("fit.t2_guess_ps") ? ctx.cfg.number("fit.t2_guess_ps") : e.t2();
    double area = 0.0;
    for (std::size_t i = 1; i < data.size(); ++i) {
        area += 0.5 * (data.freq[i] - data.freq[i - 1]) * (data.intensity[i] + data.intensity[i - 1]);
    }
    guess.amplitude = area;
    guess.offset = 0.0;

    const MollowFit fit = fit_mollow(data.freq, data.intensity, e, guess, ctx.cfg.number("drive.detuning_strong_ghz"));
    Metadata report = provenance(ctx);
    report["data"] = data_path.string();
    report["rabi2_ghz"] = format_double(2.0 * fit.params.rabi);
    report["rabi2_ghz_stderr"] = format_double(2.0 * fit.std_errors.rabi);
    report["t2_ps"] = format_double(fit.params.t2_ps);
    report["t2_ps_stderr"] = format_double(fit.std_errors.t2_ps);
    report["amplitude"] = format_double(fit.params.amplitude);
    report["offset"] = format_double(fit.params.offset);
    report["residual_norm"] = format_double(fit.residual_norm);
    report["iterations"] = std::to_string(fit.iterations);
    write_file_atomic(ctx.file("fit.txt"), format_metadata(report));
    ctx.written.push_back(ctx.file("fit.txt").filename().string());
    write_run_metadata(ctx, warnings);
    std::cout << "2Ω = " << format_double(2.0 * fit.params.rabi) << " GHz, T2 = " << format_double(fit.params.t2_ps)
              << " ps\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Resonance fluorescence of a two-level emitter under mono- and bichromatic drive"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string data_path;
    bool strict = false;
    int workers = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides output.directory)");
        sub->add_flag("--strict", strict, "treat warnings as errors");
        sub->add_option("--workers", workers, "worker threads (overrides numerics.workers)")->check(CLI::PositiveNumber);
    };
    std::vector<std::pair<std::string, CLI::App*>> subs = {
        {"mollow", app.add_subcommand("mollow", "Mollow triplet spectrum")},
        {"spectrum", app.add_subcommand("spectrum", "bichromatic spectrum and dressed-line list")},
        {"map", app.add_subcommand("map", "Δ2 detuning map and central-intensity curve")},
        {"subharmonics", app.add_subcommand("subharmonics", "etalon-filtered subharmonic scan with dip report")},
        {"degenerate", app.add_subcommand("degenerate", "degenerate two-laser spectra")},
        {"fit", app.add_subcommand("fit", "fit a Mollow triplet to measured data")},
    };
    for (auto& [name, sub] : subs) add_common(sub);
    subs.back().second->add_option("--data", data_path, "spectrum CSV (overrides fit.data)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        Context ctx;
        ctx.cfg = RunConfig::load(config_path);
        for (auto& [name, sub] : subs) {
            if (sub->parsed()) ctx.command = name;
        }
        if (!out_dir.empty()) ctx.cfg.set("output.directory", out_dir);
        if (workers > 0) ctx.cfg.set("numerics.workers", std::to_string(workers));
        ctx.strict = strict;
        ctx.out = ctx.cfg.text("output.directory");
        ctx.prefix = ctx.cfg.text("output.prefix");
        ctx.timestamp = utc_timestamp();
        prepare_output(ctx.out);

        if (ctx.command == "mollow") return cmd_mollow(ctx);
        if (ctx.command == "spectrum") return cmd_spectrum(ctx);
        if (ctx.command == "map") return cmd_map(ctx);
        if (ctx.command == "subharmonics") return cmd_subharmonics(ctx);
        if (ctx.command == "degenerate") return cmd_degenerate(ctx);
        return cmd_fit(ctx, data_path);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    }
}
