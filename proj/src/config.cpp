#include "rfsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rfsim/errors.hpp"

namespace rfsim {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_int(const std::string& s, int& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

const KeySpec* find_spec(const std::string& key) {
    for (const auto& k : config_schema()) {
        if (k.name == key) return &k;
    }
    return nullptr;
}

void check_kind(const KeySpec& spec, const std::string& value, const std::string& where) {
    double d = 0.0;
    int i = 0;
    switch (spec.kind) {
    case ValueKind::Number:
        if (!parse_double(value, d)) throw ValidationError(where + ": key '" + spec.name + "' expects a number, got '" + value + "'");
        break;
    case ValueKind::Integer:
        if (!parse_int(value, i)) throw ValidationError(where + ": key '" + spec.name + "' expects an integer, got '" + value + "'");
        break;
    case ValueKind::List:
        for (const auto& item : split_list(value)) {
            if (!parse_double(item, d)) throw ValidationError(where + ": key '" + spec.name + "' expects a comma-separated list of numbers");
        }
        break;
    case ValueKind::Text:
        break;
    }
}

} // namespace

const std::vector<KeySpec>& config_schema() {
    static const std::vector<KeySpec> schema = {
        {"emitter.t1_ps", ValueKind::Number, "", "radiative lifetime T1 (ps)"},
        {"emitter.t2_ps", ValueKind::Number, "", "coherence time T2 (ps), T2 <= 2 T1"},
        {"drive.rabi2_strong_ghz", ValueKind::Number, "", "strong-drive Mollow splitting 2Ω (GHz)"},
        {"drive.rabi2_weak_ghz", ValueKind::Number, "", "coupling-field daughter splitting 2G (GHz); exclusive with alpha"},
        {"drive.alpha", ValueKind::Number, "", "coupling/driving power ratio, 2G = sqrt(alpha)·Ω; exclusive with rabi2_weak_ghz"},
        {"drive.detuning_strong_ghz", ValueKind::Number, "0", "strong-drive detuning Δ1 (GHz)"},
        {"drive.detuning_weak_ghz", ValueKind::Number, "", "coupling-field detuning Δ3 from ω0 (GHz); exclusive with delta2_ghz"},
        {"drive.delta2_ghz", ValueKind::Number, "", "coupling-field detuning Δ2 from ω0 - 2Ω (GHz)"},
        {"drive.relative_phase_rad", ValueKind::Number, "0", "relative phase of the coupling field"},
        {"numerics.freq_min_ghz", ValueKind::Number, "-12", "spectral grid start (GHz)"},
        {"numerics.freq_max_ghz", ValueKind::Number, "12", "spectral grid end (GHz)"},
        {"numerics.freq_step_ghz", ValueKind::Number, "0.01", "spectral grid step (GHz)"},
        {"numerics.cutoff", ValueKind::Integer, "8", "initial harmonic cutoff K"},
        {"numerics.max_cutoff", ValueKind::Integer, "1024", "largest harmonic cutoff"},
        {"numerics.steady_tolerance", ValueKind::Number, "1e-8", "harmonic tail tolerance"},
        {"numerics.tau_max_ns", ValueKind::Number, "0", "correlation range (ns), 0 = automatic"},
        {"numerics.phases", ValueKind::Integer, "16", "beat-phase samples"},
        {"numerics.rel_tol", ValueKind::Number, "1e-10", "ODE relative tolerance"},
        {"numerics.method", ValueKind::Text, "time_domain", "time_domain or resolvent"},
        {"numerics.workers", ValueKind::Integer, "1", "worker threads for scans"},
        {"map.delta2_min_ghz", ValueKind::Number, "-4", "Δ2 scan start (GHz)"},
        {"map.delta2_max_ghz", ValueKind::Number, "4", "Δ2 scan end (GHz)"},
        {"map.delta2_step_ghz", ValueKind::Number, "0.1", "Δ2 scan step (GHz)"},
        {"map.window_ghz", ValueKind::Number, "0.5", "central-intensity half window (GHz)"},
        {"subharmonics.points", ValueKind::Integer, "80", "number of -Δ3 samples"},
        {"subharmonics.x_min_ghz", ValueKind::Number, "0.8", "-Δ3 scan start (GHz)"},
        {"subharmonics.x_max_ghz", ValueKind::Number, "", "-Δ3 scan end (GHz), default 2Ω + 0.8"},
        {"subharmonics.etalon_fwhm_ghz", ValueKind::Number, "0.14", "etalon passband FWHM (GHz)"},
        {"subharmonics.etalon_fsr_ghz", ValueKind::Number, "9.18", "etalon free spectral range (GHz)"},
        {"subharmonics.prominence_fraction", ValueKind::Number, "0.1", "dip prominence threshold / curve median"},
        {"subharmonics.max_order", ValueKind::Integer, "5", "highest subharmonic order n"},
        {"degenerate.alphas", ValueKind::List, "0.2, 0.4", "power ratios"},
        {"degenerate.method", ValueKind::Text, "phase_average", "phase_average, small_delta or both"},
        {"degenerate.phase_samples", ValueKind::Integer, "256", "relative-phase samples"},
        {"degenerate.epsilon_rad_per_ns", ValueKind::Number, "0", "small-delta beat, 0 = γ_sp/20"},
        {"fit.data", ValueKind::Text, "", "two-column CSV to fit (freq_ghz,intensity)"},
        {"fit.rabi2_guess_ghz", ValueKind::Number, "", "initial 2Ω (GHz)"},
        {"fit.t2_guess_ps", ValueKind::Number, "", "initial T2 (ps), default emitter.t2_ps"},
        {"output.directory", ValueKind::Text, "out", "output directory"},
        {"output.prefix", ValueKind::Text, "rfsim", "file-name prefix"},
    };
    return schema;
}

RunConfig RunConfig::parse(const std::string& text, const std::string& source) {
    RunConfig cfg;
    cfg.source_ = source;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string where = source + ":" + std::to_string(number);
        const auto hash = line.find_first_of("#;");
        std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']') throw ValidationError(where + ": unterminated section header");
            section = trim(body.substr(1, body.size() - 2));
            if (section.empty()) throw ValidationError(where + ": empty section name");
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ValidationError(where + ": expected 'key = value'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) throw ValidationError(where + ": missing key");
        if (section.empty()) throw ValidationError(where + ": key '" + key + "' outside a [section]");
        const std::string full = section + "." + key;
        const KeySpec* spec = find_spec(full);
        if (spec == nullptr) throw ValidationError(where + ": unknown key '" + full + "'");
        if (value.empty()) throw ValidationError(where + ": key '" + full + "' has no value");
        if (cfg.entries_.count(full) != 0) {
            throw ValidationError(where + ": duplicate key '" + full + "' (first set on line " +
                                  std::to_string(cfg.entries_.at(full).line) + ")");
        }
        check_kind(*spec, value, where);
        cfg.entries_[full] = {value, number};
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

bool RunConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string RunConfig::where(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end() || it->second.line == 0) return source_;
    return source_ + ":" + std::to_string(it->second.line);
}

std::string RunConfig::raw(const std::string& key) const {
    const KeySpec* spec = find_spec(key);
    if (spec == nullptr) throw ValidationError("unknown key '" + key + "'");
    const auto it = entries_.find(key);
    if (it != entries_.end()) return it->second.value;
    if (spec->fallback.empty()) throw ValidationError(source_ + ": missing required key '" + key + "'");
    return spec->fallback;
}

void RunConfig::require(const std::string& key) const { (void)raw(key); }

double RunConfig::number(const std::string& key) const {
    double d = 0.0;
    if (!parse_double(raw(key), d)) throw ValidationError(where(key) + ": key '" + key + "' expects a number");
    return d;
}

int RunConfig::integer(const std::string& key) const {
    int i = 0;
    if (!parse_int(raw(key), i)) throw ValidationError(where(key) + ": key '" + key + "' expects an integer");
    return i;
}

std::string RunConfig::text(const std::string& key) const { return raw(key); }

std::vector<double> RunConfig::list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(raw(key))) {
        double d = 0.0;
        if (!parse_double(item, d)) throw ValidationError(where(key) + ": key '" + key + "' expects numbers");
        out.push_back(d);
    }
    return out;
}

std::optional<double> RunConfig::optional_number(const std::string& key) const {
    const KeySpec* spec = find_spec(key);
    if (!has(key) && (spec == nullptr || spec->fallback.empty())) return std::nullopt;
    return number(key);
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const KeySpec* spec = find_spec(key);
    if (spec == nullptr) throw ValidationError("unknown key '" + key + "'");
    check_kind(*spec, value, source_);
    entries_[key] = {value, 0};
}

std::string RunConfig::materialize(const std::vector<std::string>& header_comments) const {
    std::ostringstream os;
    for (const auto& c : header_comments) os << "# " << c << '\n';
    std::string section;
    for (const auto& spec : config_schema()) {
        const auto dot = spec.name.find('.');
        const std::string sec = spec.name.substr(0, dot);
        const std::string key = spec.name.substr(dot + 1);
        const auto it = entries_.find(spec.name);
        const bool set_here = it != entries_.end();
        if (!set_here && spec.fallback.empty()) continue;
        if (sec != section) {
            os << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
            section = sec;
        }
        os << key << " = " << (set_here ? it->second.value : spec.fallback) << '\n';
    }
    return os.str();
}

EmitterParams emitter_from_config(const RunConfig& cfg) {
    return EmitterParams(cfg.number("emitter.t1_ps"), cfg.number("emitter.t2_ps"));
}

double weak_rabi_from_config(const RunConfig& cfg) {
    const bool direct = cfg.has("drive.rabi2_weak_ghz");
    const bool ratio = cfg.has("drive.alpha");
    if (direct == ratio) {
        throw ValidationError(cfg.source() + ": set exactly one of 'drive.rabi2_weak_ghz' and 'drive.alpha'");
    }
    if (direct) {
        const double g2 = cfg.number("drive.rabi2_weak_ghz");
        if (!(g2 >= 0.0)) throw ValidationError(cfg.source() + ": 'drive.rabi2_weak_ghz' must be >= 0");
        return 0.5 * g2;
    }
    const double a = cfg.number("drive.alpha");
    if (!(a >= 0.0)) throw ValidationError(cfg.source() + ": 'drive.alpha' must be >= 0");
    return 0.5 * PowerRatio{a}.amplitude() * 0.5 * cfg.number("drive.rabi2_strong_ghz");
}

} // namespace rfsim
