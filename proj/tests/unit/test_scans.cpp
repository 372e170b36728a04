#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "rfsim/bloch.hpp"
#include "rfsim/dressed.hpp"
#include "rfsim/errors.hpp"
#include "rfsim/scans.hpp"

using namespace rfsim;

namespace {

const EmitterParams kPaper(390.0, 424.0);

std::vector<double> axis(double lo, double hi, double step) { return make_grid(lo, hi, step); }

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "rfsim_unit";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::vector<std::string> lines_of(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

} // namespace

TEST_CASE("etalon transmission") {
    const EtalonFilter f;
    CHECK(f.finesse() == doctest::Approx(65.57).epsilon(1e-3));
    CHECK(etalon_transmission(f, 0.0) == 1.0);
    CHECK(etalon_transmission(f, f.fsr) == doctest::Approx(1.0).epsilon(1e-12));
    const double coeff = std::pow(2.0 * f.finesse() / M_PI, 2);
    CHECK(etalon_transmission(f, 0.5 * f.fsr) == doctest::Approx(1.0 / (1.0 + coeff)).epsilon(1e-12));
    CHECK(etalon_transmission(f, 0.5 * f.fwhm) == doctest::Approx(0.5).epsilon(1e-3));
    for (double x : {-3.3, 0.07, 1.0, 4.2, 11.0}) {
        CHECK(std::abs(etalon_transmission(f, x) - etalon_transmission(f, x + f.fsr)) < 1e-12);
        const double t = etalon_transmission(f, x);
        CHECK(t > 0.0);
        CHECK(t <= 1.0);
    }
    CHECK_THROWS_AS((EtalonFilter{0.0, 9.18, 0.0}.validate()), ValidationError);
    CHECK_THROWS_AS((EtalonFilter{10.0, 9.18, 0.0}.validate()), ValidationError);
}

TEST_CASE("parallel_for covers every index and rethrows") {
    std::vector<std::atomic<int>> hits(101);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(10, 0, [](std::size_t) {}), ValidationError);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw NumericalError("x"); }), NumericalError);
}

TEST_CASE("detuning map without coupling repeats the Mollow triplet") {
    const auto grid = make_grid(-10.0, 10.0, 0.05);
    ScanOptions opt;
    opt.method = SpectrumMethod::Resolvent;
    const auto map = detuning_map(kPaper, 2.9, 0.0, 0.0, axis(-3.0, 3.0, 1.0), grid, opt);
    const auto ref = mollow_spectrum(kPaper, DriveField(2.9, 0.0), grid);
    for (std::size_t i = 0; i < map.axis1.size(); ++i) {
        CHECK(!map.failed(i));
        CHECK(relative_l2(map.row(i), map.row(0)) < 1e-12);
        CHECK(relative_l2(map.row(i), ref.intensity) < 1e-6);
    }
    opt.method = SpectrumMethod::TimeDomain;
    const auto td = detuning_map(kPaper, 2.9, 0.0, 0.0, {-3.0, 3.0}, grid, opt);
    CHECK(relative_l2(td.row(1), td.row(0)) < 1e-6);
}

TEST_CASE("detuning map validation and failure markers") {
    const auto grid = make_grid(-10.0, 10.0, 0.1);
    CHECK_THROWS_AS(detuning_map(kPaper, 2.9, 0.87, 0.0, axis(-2.0, 2.0, 1.0), grid), ValidationError);
    // Δ2 = 2Ω makes the two lasers degenerate: that row fails, the rest completes.
    ScanOptions opt;
    opt.method = SpectrumMethod::Resolvent;
    const auto map = detuning_map(kPaper, 2.9, 0.87, 0.0, {-3.0, 0.0, 3.0, 5.8}, grid, opt);
    CHECK(!map.failed(0));
    CHECK(!map.failed(2));
    CHECK(map.failed(3));
    CHECK(std::isnan(map.at(3, 10)));
    CHECK(std::isfinite(map.at(2, 10)));

    const auto path = scratch("map.csv");
    write_map_csv(path, map);
    const auto rows = lines_of(path);
    CHECK(rows.front() == "delta2_ghz,freq_ghz,intensity");
    CHECK(rows.size() == 1 + 4 * grid.size());
    CHECK(rows.back().find("nan") != std::string::npos);
}

TEST_CASE("detuning map is independent of the worker count") {
    const auto grid = make_grid(-10.0, 10.0, 0.1);
    ScanOptions opt;
    opt.emission.phases = 4;
    opt.workers = 1;
    const auto a = detuning_map(kPaper, 2.9, 0.87, -0.977, axis(-3.0, 3.0, 1.5), grid, opt);
    opt.workers = 3;
    const auto b = detuning_map(kPaper, 2.9, 0.87, -0.977, axis(-3.0, 3.0, 1.5), grid, opt);
    REQUIRE(a.intensity.size() == b.intensity.size());
    CHECK(std::memcmp(a.intensity.data(), b.intensity.data(), a.intensity.size() * sizeof(double)) == 0);
}

TEST_CASE("central column dips on resonance and recovers far away") {
    const auto grid = make_grid(-10.0, 10.0, 0.02);
    ScanOptions opt;
    opt.method = SpectrumMethod::Resolvent;
    const auto d2 = axis(-4.0, 4.0, 0.1);
    const auto map = detuning_map(kPaper, 2.9, 0.87, 0.0, d2, grid, opt);
    const auto col = map.column(500); // f = 0
    const auto imin = static_cast<std::size_t>(std::min_element(col.begin(), col.end()) - col.begin());
    CHECK(col.front() > 3.0 * col[imin]);
    CHECK(col.back() > 3.0 * col[imin]);

    // the map's darkest row matches the central-curve minimum
    const auto curve = central_intensity_curve(kPaper, 2.9, 0.87, 0.0, d2);
    const auto cmin = static_cast<std::size_t>(std::min_element(curve.y.begin(), curve.y.end()) - curve.y.begin());
    CHECK(std::abs(d2[imin] - d2[cmin]) <= 0.1 + 1e-9);
    MESSAGE("central minimum at Δ2 = " << d2[cmin]);
}

TEST_CASE("central curve darkens on resonance") {
    const auto d2 = axis(-4.0, 4.0, 0.1);
    const auto curve = central_intensity_curve(kPaper, 2.9, 0.87, 0.0, d2);
    const auto it = std::min_element(curve.y.begin(), curve.y.end());
    const double off = 0.5 * (curve.y.front() + curve.y.back());
    MESSAGE("minimum / off-resonant central intensity: " << *it / off);
    CHECK(std::abs(d2[static_cast<std::size_t>(it - curve.y.begin())]) <= 0.1 + 1e-9);
    CHECK(*it / off < 0.05);
}

TEST_CASE("central curve is flat without coupling") {
    const auto d2 = axis(-4.0, 4.0, 0.5);
    const auto curve = central_intensity_curve(kPaper, 2.9, 0.0, 0.0, d2);
    for (double y : curve.y) CHECK(std::abs(y - curve.y[0]) / curve.y[0] < 1e-6);
    CentralCurveOptions bad;
    bad.step = 1.0;
    CHECK_THROWS_AS(central_intensity_curve(kPaper, 2.9, 0.87, 0.0, d2, bad), ValidationError);

    const auto path = scratch("curve.csv");
    write_curve_csv(path, curve);
    CHECK(lines_of(path).front() == "x_ghz,intensity");
    CHECK(lines_of(path).size() == 1 + d2.size());
}

TEST_CASE("strong detuning is recovered from a noisy central curve") {
    const auto d2 = axis(-4.0, 4.0, 0.2);
    const auto truth = central_intensity_curve(kPaper, 2.9, 0.87, -0.977, d2);
    std::mt19937 rng(17);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> data;
    for (double y : truth.y) data.push_back(1000.0 * y * (1.0 + 0.02 * noise(rng)));
    const auto fit = fit_central_detuning(d2, data, kPaper, 2.9, 0.87, -0.6);
    CHECK(std::abs(fit.delta1 + 0.977) < 0.05);
    CHECK(fit.scale == doctest::Approx(1000.0).epsilon(0.05));
    MESSAGE("fitted Δ1 = " << fit.delta1 << " ± " << fit.delta1_error);
}

TEST_CASE("subharmonic scan preconditions") {
    const EtalonFilter f;
    const auto x = default_subharmonic_axis(2.9, 20);
    CHECK(x.front() == doctest::Approx(0.8));
    CHECK(x.back() == doctest::Approx(6.6));
    CHECK_THROWS_AS(subharmonic_scan(kPaper, 2.9, {0.359}, axis(1.5, 3.0, 0.1), f), ValidationError);
    EtalonFilter shifted = f;
    shifted.center = 0.3;
    CHECK_THROWS_AS(subharmonic_scan(kPaper, 2.9, {0.359}, x, shifted), ValidationError);
    CHECK_THROWS_AS(subharmonic_scan(kPaper, 2.9, {-0.1}, x, f), ValidationError);
}

TEST_CASE("no coupling, no subharmonic dips") {
    SubharmonicOptions opt;
    opt.scan.method = SpectrumMethod::Resolvent;
    const auto scan = subharmonic_scan(kPaper, 2.9, {0.0}, default_subharmonic_axis(2.9, 30), EtalonFilter{}, opt);
    CHECK(scan.dips.empty());
    for (const auto& a : scan.assignments) CHECK(!a.found);
    for (double y : scan.y) CHECK(y == doctest::Approx(scan.y[0]).epsilon(1e-9));

    const auto path = scratch("dips.csv");
    write_dips_csv(path, scan.assignments);
    const auto rows = lines_of(path);
    CHECK(rows.front() == "n,dip_position_ghz,unshifted_2omega_over_n_ghz,formula_shift_ghz");
    CHECK(rows.size() == 6);
    CHECK(rows[1].find("nan") != std::string::npos);
}

TEST_CASE("subharmonic dips weaken with order") {
    SubharmonicOptions opt;
    opt.scan.method = SpectrumMethod::Resolvent;
    const auto scan = subharmonic_scan(kPaper, 2.9, kCalibratedPowerRatio, default_subharmonic_axis(2.9, 80), EtalonFilter{}, opt);
    for (int n = 1; n <= 3; ++n) {
        const auto& a = scan.assignments[static_cast<std::size_t>(n - 1)];
        REQUIRE(a.found);
        CHECK(std::abs(a.position - a.unshifted) < 0.5);
        MESSAGE("n=" << n << " dip at " << a.position << " suppression " << a.suppression);
    }
    CHECK(scan.assignments[0].suppression > scan.assignments[1].suppression);
    CHECK(scan.assignments[1].suppression > scan.assignments[2].suppression);
    CHECK(scan.assignments[2].suppression > 0.0);
}

TEST_CASE("degenerate drive") {
    const auto grid = make_grid(-14.0, 14.0, 0.01);
    SUBCASE("no second laser gives the Mollow triplet") {
        const auto s = degenerate_spectrum(kPaper, 2.9, {0.0}, grid);
        const auto ref = mollow_spectrum(kPaper, DriveField(2.9, 0.0), grid);
        CHECK(relative_l2(s.intensity, ref.intensity) < 1e-12);
        CHECK(s.elastic_weight == doctest::Approx(ref.elastic_weight).epsilon(1e-12));
    }
    SUBCASE("flat sidebands and a persistent centre line") {
        for (double a : {0.2, 0.4}) {
            const auto s = degenerate_spectrum(kPaper, 2.9, {a}, grid);
            const auto up = analyse_sideband(s, 2.9, {a}, +1);
            const auto down = analyse_sideband(s, 2.9, {a}, -1);
            CHECK(up.relative_std < 0.15);
            CHECK(down.relative_std == doctest::Approx(up.relative_std).epsilon(1e-6));
            CHECK(up.lower_edge < 5.8 * (1.0 - std::sqrt(a)) + 0.6);
            CHECK(up.upper_edge > 5.8 * (1.0 + std::sqrt(a)) - 0.6);
            CHECK(central_weight(s) > 0.1);
            const auto peaks = find_peaks(s.freq, s.intensity, 0.01 * s.max_intensity());
            bool centre = false;
            for (const auto& p : peaks) centre = centre || std::abs(p.position) < 0.02;
            CHECK(centre);
        }
    }
    SUBCASE("phase average and small beat agree") {
        DegenerateOptions sd;
        sd.method = DegenerateMethod::SmallDelta;
        const auto pa = degenerate_spectrum(kPaper, 2.9, {0.2}, grid);
        const auto sm = degenerate_spectrum(kPaper, 2.9, {0.2}, grid, sd);
        const auto a = analyse_sideband(pa, 2.9, {0.2}, +1);
        const auto b = analyse_sideband(sm, 2.9, {0.2}, +1);
        CHECK(std::abs(a.lower_edge - b.lower_edge) / a.lower_edge < 0.05);
        CHECK(std::abs(a.upper_edge - b.upper_edge) / a.upper_edge < 0.05);
        CHECK(std::abs(central_weight(pa) - central_weight(sm)) / central_weight(pa) < 0.10);
    }
    SUBCASE("invalid requests") {
        DegenerateOptions sd;
        sd.method = DegenerateMethod::SmallDelta;
        sd.epsilon = kPaper.gamma_sp();
        CHECK_THROWS_AS(degenerate_spectrum(kPaper, 2.9, {0.2}, grid, sd), ValidationError);
        CHECK_THROWS_AS(degenerate_spectrum(kPaper, 2.9, {1.0}, grid), ValidationError);
        CHECK_THROWS_AS(degenerate_spectrum(kPaper, 0.0, {0.2}, grid), ValidationError);
        const auto s = degenerate_spectrum(kPaper, 2.9, {0.2}, grid);
        CHECK_THROWS_AS(analyse_sideband(s, 2.9, {0.2}, 0), ValidationError);
        const auto narrow = degenerate_spectrum(kPaper, 2.9, {0.4}, make_grid(-8.0, 8.0, 0.01));
        CHECK_THROWS_AS(analyse_sideband(narrow, 2.9, {0.4}, 1), ValidationError);
    }
}
