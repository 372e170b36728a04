#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "rfsim/errors.hpp"
#include "rfsim/spectrum.hpp"

using namespace rfsim;
namespace fs = std::filesystem;

namespace {

Spectrum lorentz_pair() {
    Spectrum s;
    s.freq = make_grid(-10.0, 10.0, 0.01);
    for (double f : s.freq) {
        s.intensity.push_back(0.5 / (1.0 + (f - 3.0) * (f - 3.0) / 0.04) + 1.0 / (1.0 + (f + 2.0) * (f + 2.0) / 0.09));
    }
    return s;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "rfsim_unit";
    fs::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("grid construction and checks") {
    const auto g = make_grid(-1.0, 1.0, 0.25);
    REQUIRE(g.size() == 9);
    CHECK(g.back() == doctest::Approx(1.0));
    CHECK_NOTHROW(check_grid(g));
    CHECK_THROWS_AS(check_grid({0.0}), ValidationError);
    CHECK_THROWS_AS(check_grid({0.0, 0.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(make_grid(1.0, 0.0, 0.1), ValidationError);
    CHECK_NOTHROW(check_coverage(g, 0.0, 1.0, "grid"));
    CHECK_THROWS_AS(check_coverage(g, 0.0, 1.5, "grid"), ValidationError);
}

TEST_CASE("integration and extrema") {
    const Spectrum s = lorentz_pair();
    CHECK(s.step() == doctest::Approx(0.01));
    const double area = 0.5 * M_PI * 0.2 + M_PI * 0.3;
    CHECK(s.integrated() == doctest::Approx(area).epsilon(0.03));
    CHECK(s.integrated(-10.0, 0.0) + s.integrated(0.0, 10.0) == doctest::Approx(s.integrated()).epsilon(1e-12));
    CHECK(s.max_intensity() == doctest::Approx(1.0).epsilon(1e-3));

    const auto peaks = find_peaks(s.freq, s.intensity, 0.1);
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0].position == doctest::Approx(-2.0).epsilon(1e-3));
    CHECK(peaks[1].position == doctest::Approx(3.0).epsilon(1e-3));

    std::vector<double> neg(s.intensity.size());
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -s.intensity[i];
    const auto dips = find_dips(s.freq, neg, 0.1);
    REQUIRE(dips.size() == 2);
    CHECK(dips[1].prominence > 0.45);
    CHECK(find_peaks(s.freq, s.intensity, 0.6).size() == 1);
}

TEST_CASE("relative L2 and gaussian convolution") {
    const Spectrum s = lorentz_pair();
    CHECK(relative_l2(s.intensity, s.intensity) == 0.0);
    const Spectrum c = convolve_gaussian(s, 0.2);
    CHECK(c.integrated() == doctest::Approx(s.integrated()).epsilon(2e-3));
    CHECK(c.max_intensity() < s.max_intensity());
    CHECK(relative_l2(convolve_gaussian(s, 0.0).intensity, s.intensity) == 0.0);
}

TEST_CASE("CSV round trip with sidecar") {
    Spectrum s = lorentz_pair();
    s.elastic_weight = 0.125;
    s.elastic_lines = {{0.0, 0.125}};
    const auto path = scratch("spec.csv");
    write_spectrum_csv(path, s, {{"note", "unit"}});
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "freq_ghz,intensity");

    const Spectrum back = read_spectrum_csv(path);
    REQUIRE(back.size() == s.size());
    CHECK(relative_l2(back.intensity, s.intensity) < 1e-12);
    CHECK(back.elastic_weight == doctest::Approx(0.125));
    CHECK(fs::exists(path.string() + ".meta"));
    CHECK_THROWS_AS(read_spectrum_csv(scratch("missing.csv")), IoError);
}

TEST_CASE("atomic write leaves no temporary") {
    const auto path = scratch("atomic.txt");
    write_file_atomic(path, "abc\n");
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "abc");
    for (const auto& e : fs::directory_iterator(path.parent_path())) {
        CHECK(e.path().string().find(".tmp") == std::string::npos);
    }
    CHECK_THROWS_AS(write_file_atomic("/proc/rfsim_no/x.txt", "x"), IoError);
}
