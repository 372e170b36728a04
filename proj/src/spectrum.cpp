#include "rfsim/spectrum.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rfsim/errors.hpp"

namespace rfsim {

double Spectrum::step() const
{
    if (freq.size() < 2)
        return 0.0;
    return (freq.back() - freq.front()) / static_cast<double>(freq.size() - 1);
}

double Spectrum::integrated() const
{
    double sum = 0.0;
    for (std::size_t i = 1; i < freq.size(); ++i)
        sum += 0.5 * (intensity[i] + intensity[i - 1]) * (freq[i] - freq[i - 1]);
    return sum;
}

double Spectrum::integrated(double lo, double hi) const
{
    double sum = 0.0;
    for (std::size_t i = 1; i < freq.size(); ++i) {
        const double a = std::max(lo, freq[i - 1]);
        const double b = std::min(hi, freq[i]);
        if (b <= a)
            continue;
        const double h = freq[i] - freq[i - 1];
        auto lerp = [&](double f) { return intensity[i - 1] + (intensity[i] - intensity[i - 1]) * (f - freq[i - 1]) / h; };
        sum += 0.5 * (lerp(a) + lerp(b)) * (b - a);
    }
    return sum;
}

double Spectrum::max_intensity() const
{
    return intensity.empty() ? 0.0 : *std::max_element(intensity.begin(), intensity.end());
}

std::vector<double> make_grid(double lo, double hi, double step)
{
    if (!(step > 0.0) || !(hi > lo))
        throw ValidationError("grid needs hi > lo and step > 0");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i)
        grid[i] = lo + step * static_cast<double>(i);
    return grid;
}

void check_grid(const std::vector<double>& grid)
{
    if (grid.size() < 2)
        throw ValidationError("frequency grid needs at least two points");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw ValidationError("frequency grid must be strictly increasing");
}

void check_coverage(const std::vector<double>& grid, double center, double half_width,
                    const std::string& what)
{
    check_grid(grid);
    const double tol = 1e-9 * std::max(1.0, half_width);
    if (grid.front() > center - half_width + tol || grid.back() < center + half_width - tol) {
        std::ostringstream msg;
        msg << what << ": grid [" << grid.front() << ", " << grid.back() << "] GHz does not cover "
            << center << " +/- " << half_width << " GHz";
        throw ValidationError(msg.str());
    }
}

std::vector<std::size_t> local_maxima(const std::vector<double>& y)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (!(y[i] > y[i - 1]))
            continue;
        // Walk across flat tops.
        std::size_t j = i;
        while (j + 1 < y.size() && y[j + 1] == y[i])
            ++j;
        if (j + 1 < y.size() && y[j + 1] < y[i])
            out.push_back((i + j) / 2);
        i = j;
    }
    return out;
}

namespace {

double parabolic_vertex(const std::vector<double>& x, const std::vector<double>& y, std::size_t i)
{
    if (i == 0 || i + 1 >= y.size())
        return x[i];
    const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
    const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
    const double d1 = (y1 - y0) / (x1 - x0);
    const double d2 = (y2 - y1) / (x2 - x1);
    const double curvature = (d2 - d1) / (x2 - x0);
    if (curvature == 0.0)
        return x1;
    const double v = 0.5 * (x0 + x1) - d1 / (2.0 * curvature);
    return std::clamp(v, x0, x2);
}

std::vector<Extremum> find_maxima_with_prominence(const std::vector<double>& x,
                                                  const std::vector<double>& y,
                                                  double min_prominence)
{
    std::vector<Extremum> out;
    for (std::size_t i : local_maxima(y)) {
        // Lowest point between the peak and the nearest higher sample (or the edge), each side.
        double left_min = y[i];
        for (std::size_t j = i; j-- > 0;) {
            if (y[j] > y[i])
                break;
            left_min = std::min(left_min, y[j]);
        }
        double right_min = y[i];
        for (std::size_t j = i + 1; j < y.size(); ++j) {
            if (y[j] > y[i])
                break;
            right_min = std::min(right_min, y[j]);
        }
        const double prominence = y[i] - std::max(left_min, right_min);
        if (prominence >= min_prominence)
            out.push_back({i, parabolic_vertex(x, y, i), y[i], prominence});
    }
    return out;
}

} // namespace

std::vector<Extremum> find_peaks(const std::vector<double>& x, const std::vector<double>& y,
                                 double min_prominence)
{
    return find_maxima_with_prominence(x, y, min_prominence);
}

std::vector<Extremum> find_dips(const std::vector<double>& x, const std::vector<double>& y,
                                double min_prominence)
{
    std::vector<double> neg(y.size());
    std::transform(y.begin(), y.end(), neg.begin(), [](double v) { return -v; });
    auto dips = find_maxima_with_prominence(x, neg, min_prominence);
    for (auto& d : dips)
        d.value = -d.value;
    return dips;
}

double relative_l2(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size())
        throw ValidationError("relative_l2: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

Spectrum convolve_gaussian(const Spectrum& s, double fwhm)
{
    if (!(fwhm > 0.0))
        return s;
    const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    Spectrum out = s;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double acc = 0.0, norm = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            const double d = (s.freq[j] - s.freq[i]) / sigma;
            if (std::abs(d) > 8.0)
                continue;
            const double w = std::exp(-0.5 * d * d);
            acc += w * s.intensity[j];
            norm += w;
        }
        out.intensity[i] = norm > 0.0 ? acc / norm : 0.0;
    }
    return out;
}

std::string format_double(double v)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return ec == std::errc() ? std::string(buf, end) : std::to_string(v);
}

std::string format_metadata(const Metadata& meta)
{
    std::string text;
    for (const auto& [k, v] : meta)
        text += k + " = " + v + "\n";
    return text;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open " + tmp.string() + " for writing");
        out << text;
        if (!out)
            throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoError("rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& s, const Metadata& extra)
{
    std::string csv = "freq_ghz,intensity\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        csv += format_double(s.freq[i]) + "," + format_double(s.intensity[i]) + "\n";
    write_file_atomic(path, csv);

    Metadata meta = extra;
    meta["elastic_weight"] = format_double(s.elastic_weight);
    meta["incoherent_weight"] = format_double(s.integrated());
    std::string lines;
    for (const auto& l : s.elastic_lines) {
        if (!lines.empty())
            lines += ";";
        lines += format_double(l.freq) + ":" + format_double(l.weight);
    }
    meta["elastic_lines"] = lines;
    for (std::size_t i = 0; i < s.warnings.size(); ++i)
        meta["warning." + std::to_string(i)] = s.warnings[i];
    auto side = path;
    side += ".meta";
    write_file_atomic(side, format_metadata(meta));
}

Spectrum read_spectrum_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    Spectrum s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 || line.empty())
            continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected two columns");
        try {
            s.freq.push_back(std::stod(line.substr(0, comma)));
            s.intensity.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": not a number");
        }
    }
    check_grid(s.freq);

    auto side = path;
    side += ".meta";
    if (std::ifstream meta(side); meta) {
        while (std::getline(meta, line)) {
            const auto eq = line.find(" = ");
            if (eq != std::string::npos && line.substr(0, eq) == "elastic_weight")
                s.elastic_weight = std::stod(line.substr(eq + 3));
        }
    }
    return s;
}

} // namespace rfsim
