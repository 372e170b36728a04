#include "rfsim/dressed.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rfsim/errors.hpp"
#include "rfsim/spectrum.hpp"

namespace rfsim {

std::array<double, 2> DressedDoublet::weights() const {
    return {std::cos(mixing_angle), std::sin(mixing_angle)};
}

Eigen::Matrix2d DressedDoublet::sigma_minus() const {
    const double c = std::cos(mixing_angle);
    const double s = std::sin(mixing_angle);
    Eigen::Matrix2d d;
    d << c * s, -c * c,
         s * s, -s * c;
    return d;
}

std::array<double, 3> DressedDoublet::transition_frequencies(double delta1) const {
    return {delta1 - splitting, delta1, delta1 + splitting};
}

DressedDoublet singly_dressed(double omega, double delta1) {
    if (!(omega >= 0.0) || !std::isfinite(delta1)) {
        throw ValidationError("singly_dressed: need Ω >= 0 and finite Δ1");
    }
    DressedDoublet d;
    d.splitting = std::hypot(2.0 * omega, delta1);
    d.mixing_angle = 0.5 * std::atan2(2.0 * omega, delta1);
    d.upper_energy = -0.5 * delta1 + 0.5 * d.splitting;
    d.lower_energy = -0.5 * delta1 - 0.5 * d.splitting;
    return d;
}

namespace {

double beat_of(const LadderParams& p) { return (p.delta2 - 2.0 * p.omega) - p.delta1; }

void check_params(const LadderParams& p, bool allow_zero_omega = false) {
    if (!(p.omega > 0.0 || (allow_zero_omega && p.omega == 0.0)) || !(p.g >= 0.0) || !std::isfinite(p.delta1) || !std::isfinite(p.delta2) ||
        !std::isfinite(p.phase)) {
        throw ValidationError("dressed ladder: need Ω > 0, G >= 0 and finite detunings");
    }
}

// Block-0 quasi-energy states over the Sambe basis, index 0 = +, 1 = -.
struct FloquetPair {
    std::array<double, 2> eps{};
    std::array<Eigen::VectorXcd, 2> vec;
    int truncation = 0;
    double beat = 0.0;
};

FloquetPair secular_pair(const LadderParams& p, int truncation) {
    const DressedDoublet dd = singly_dressed(p.omega, p.delta1);
    const double beat = beat_of(p);
    const double a = dd.upper_energy;        // |1, 0>
    const double b = dd.lower_energy - beat; // |2, -1>
    const std::complex<double> kappa =
        2.0 * p.g * std::polar(1.0, p.phase) * dd.sigma_minus()(0, 1); // <2,-1|K|1,0>
    const double d = a - b;
    const double root = std::hypot(d, 2.0 * std::abs(kappa));
    const double chi = 0.5 * std::atan2(2.0 * std::abs(kappa), d);
    const std::complex<double> ph = std::abs(kappa) > 0.0 ? kappa / std::abs(kappa) : 1.0;

    FloquetPair fp;
    fp.truncation = truncation;
    fp.beat = beat;
    fp.eps = {0.5 * (a + b) + 0.5 * root, 0.5 * (a + b) - 0.5 * root};
    const int n = 2 * (2 * truncation + 1);
    const int r1 = QuartetLadder::row(0, 0, truncation);
    const int r2 = QuartetLadder::row(1, -1, truncation);
    for (auto& v : fp.vec) v = Eigen::VectorXcd::Zero(n);
    // Uncoupled states stay exact basis vectors (no cos(π/2) residue).
    const double cc = kappa == 0.0 ? (d >= 0.0 ? 1.0 : 0.0) : std::cos(chi);
    const double ss = kappa == 0.0 ? (d >= 0.0 ? 0.0 : 1.0) : std::sin(chi);
    fp.vec[0][r1] = cc;
    fp.vec[0][r2] = ss * ph;
    fp.vec[1][r1] = -ss;
    fp.vec[1][r2] = cc * ph;
    return fp;
}

FloquetPair full_pair(const LadderParams& p, int truncation) {
    const QuartetLadder ql = build_quartet_ladder(p, truncation, LadderModel::Full);
    const int r1 = QuartetLadder::row(0, 0, truncation);
    const int r2 = QuartetLadder::row(1, -1, truncation);
    std::vector<std::pair<double, int>> weight;
    for (int c = 0; c < ql.eigvecs.cols(); ++c) {
        weight.emplace_back(std::norm(ql.eigvecs(r1, c)) + std::norm(ql.eigvecs(r2, c)), c);
    }
    std::partial_sort(weight.begin(), weight.begin() + 2, weight.end(),
                      [](const auto& x, const auto& y) { return x.first > y.first; });
    int hi = weight[0].second;
    int lo = weight[1].second;
    if (ql.energies[hi] < ql.energies[lo]) std::swap(hi, lo);
    FloquetPair fp;
    fp.truncation = truncation;
    fp.beat = ql.beat;
    fp.eps = {ql.energies[hi], ql.energies[lo]};
    fp.vec = {ql.eigvecs.col(hi), ql.eigvecs.col(lo)};
    return fp;
}

// <b shifted by s| σ- |a>, both block-0 states; the copy of b in block s has
// components b_{j, m - s}.
std::complex<double> amplitude(const FloquetPair& fp, int a, int b, int s, const Eigen::Matrix2d& dm) {
    const int t = fp.truncation;
    std::complex<double> acc = 0.0;
    for (int m = -t; m <= t; ++m) {
        const int mb = m - s;
        if (mb < -t || mb > t) continue;
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                acc += std::conj(fp.vec[b][QuartetLadder::row(j, mb, t)]) * dm(j, i) *
                       fp.vec[a][QuartetLadder::row(i, m, t)];
            }
        }
    }
    return acc;
}

Eigen::Vector2cd central_components(const Eigen::VectorXcd& v, int truncation) {
    return {v[QuartetLadder::row(0, 0, truncation)], v[QuartetLadder::row(1, -1, truncation)]};
}

} // namespace

QuartetLadder build_quartet_ladder(const LadderParams& p, int truncation, LadderModel model) {
    check_params(p, true);
    if (truncation < 1) throw ValidationError("ladder truncation must be >= 1");
    const DressedDoublet dd = singly_dressed(p.omega, p.delta1);
    const Eigen::Matrix2d dm = dd.sigma_minus();
    const double beat = beat_of(p);
    const double energy[2] = {dd.upper_energy, dd.lower_energy};
    const std::complex<double> w = 2.0 * p.g * std::polar(1.0, p.phase);

    const int n = 2 * (2 * truncation + 1);
    Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(n, n);
    for (int m = -truncation; m <= truncation; ++m) {
        for (int i = 0; i < 2; ++i) {
            k(QuartetLadder::row(i, m, truncation), QuartetLadder::row(i, m, truncation)) =
                energy[i] + m * beat;
        }
        if (m == -truncation) continue;
        // <j, m-1| K |i, m> = W e^{iφ} <j|σ+|i>, with <j|σ+|i> = <i|σ-|j>.
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                if (model == LadderModel::Secular && !(i == 0 && j == 1)) continue;
                const int r = QuartetLadder::row(j, m - 1, truncation);
                const int c = QuartetLadder::row(i, m, truncation);
                k(r, c) += w * dm(i, j);
                k(c, r) += std::conj(w * dm(i, j));
            }
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(k);
    if (es.info() != Eigen::Success) throw NumericalError("ladder diagonalization failed");
    QuartetLadder ql;
    ql.energies = es.eigenvalues();
    ql.eigvecs = es.eigenvectors();
    ql.truncation = truncation;
    ql.beat = beat;
    return ql;
}

DressedLines doubly_dressed_lines(const LadderParams& p, LadderModel model, const DressedLines* reference,
                                  int truncation) {
    check_params(p);
    FloquetPair fp = model == LadderModel::Secular ? secular_pair(p, truncation) : full_pair(p, truncation);

    if (reference != nullptr) {
        const Eigen::Vector2cd plus = central_components(fp.vec[0], truncation);
        const Eigen::Vector2cd minus = central_components(fp.vec[1], truncation);
        const Eigen::Vector2cd ref_plus = reference->states.col(0);
        if (std::abs(ref_plus.dot(minus)) > std::abs(ref_plus.dot(plus))) {
            std::swap(fp.eps[0], fp.eps[1]);
            std::swap(fp.vec[0], fp.vec[1]);
        }
    }

    const Eigen::Matrix2d dm = singly_dressed(p.omega, p.delta1).sigma_minus();
    auto amp2 = [&](int a, int b, int s) { return std::norm(amplitude(fp, a, b, s, dm)); };

    // Secular rate balance between the two quasi-energy states.
    double up = 0.0;   // - -> +
    double down = 0.0; // + -> -
    for (int s = -1; s <= 1; ++s) {
        up += amp2(1, 0, s);
        down += amp2(0, 1, s);
    }
    const double p_plus = up + down > 0.0 ? up / (up + down) : 0.5;
    const double pop[2] = {p_plus, 1.0 - p_plus};

    DressedLines out;
    out.populations = {pop[0], pop[1]};
    out.states.col(0) = central_components(fp.vec[0], truncation);
    out.states.col(1) = central_components(fp.vec[1], truncation);
    out.lines.resize(9);

    auto set = [&](int label, double nu, double w) {
        out.lines[static_cast<std::size_t>(label - 1)] = {p.delta1 + nu, w, label};
    };
    const int same_label[3] = {2, 1, 3};  // s = -1, 0, +1
    const int up_label[3] = {6, 4, 8};    // - -> +
    const int down_label[3] = {7, 5, 9};  // + -> -
    for (int s = -1; s <= 1; ++s) {
        const double shift = -s * fp.beat;
        set(same_label[s + 1], shift, amp2(0, 0, s) * pop[0] + amp2(1, 1, s) * pop[1]);
        set(up_label[s + 1], fp.eps[1] - fp.eps[0] + shift, amp2(1, 0, s) * pop[1]);
        set(down_label[s + 1], fp.eps[0] - fp.eps[1] + shift, amp2(0, 1, s) * pop[0]);
    }
    double wmax = 0.0;
    for (const auto& l : out.lines) wmax = std::max(wmax, l.weight);
    if (wmax > 0.0) {
        for (auto& l : out.lines) l.weight /= wmax;
    }
    if (p.g > 0.5 * p.omega) {
        out.approximate = true;
        out.warnings.push_back("G > Ω/2: secular ladder approximation degrades");
    }
    return out;
}

std::vector<DressedLines> track_lines(LadderParams p, const std::vector<double>& delta2, LadderModel model) {
    std::vector<DressedLines> out;
    out.reserve(delta2.size());
    for (double d2 : delta2) {
        p.delta2 = d2;
        out.push_back(doubly_dressed_lines(p, model, out.empty() ? nullptr : &out.back()));
    }
    return out;
}

CentralAmplitude central_line_amplitude(double omega, double g, double delta2, double delta1) {
    const LadderParams p{omega, g, delta1, delta2, 0.0};
    check_params(p);
    const FloquetPair fp = secular_pair(p, 1);
    const Eigen::Matrix2d dm = singly_dressed(omega, delta1).sigma_minus();
    const Eigen::Vector2cd v = central_components(fp.vec[0], 1);
    CentralAmplitude ca;
    ca.upper_path = std::norm(v[0]) * dm(0, 0);
    ca.lower_path = std::norm(v[1]) * dm(1, 1);
    ca.sum = ca.upper_path + ca.lower_path;
    ca.interference = g > 0.0;
    return ca;
}

std::array<double, 2> dressed_populations(const EmitterParams& emitter, const LadderParams& p,
                                          LadderModel model, const SteadyStateOptions& options) {
    check_params(p, true);
    const auto drive = BichromaticDrive::from_delta2(p.omega, p.g, p.delta1, p.delta2, p.phase);
    const auto pl = build_periodic_liouvillian(emitter, drive);
    const PeriodicState st = periodic_steady_state(pl, 8, options);

    const DressedDoublet dd = singly_dressed(p.omega, p.delta1);
    const double c = std::cos(dd.mixing_angle);
    const double s = std::sin(dd.mixing_angle);
    Eigen::Matrix2d basis; // columns |1>, |2> in (g, e)
    basis << c, s,
             s, -c;
    auto rho_dressed = [&](int k) -> Eigen::Matrix2cd {
        if (std::abs(k) > st.cutoff) return Eigen::Matrix2cd::Zero();
        return basis.transpose() * unvectorize(st.harmonic(k)) * basis;
    };

    const int t = 3;
    const FloquetPair fp = model == LadderModel::Secular ? secular_pair(p, t) : full_pair(p, t);
    std::array<double, 2> pop{};
    for (int a = 0; a < 2; ++a) {
        std::complex<double> acc = 0.0;
        for (int m = -t; m <= t; ++m) {
            for (int mp = -t; mp <= t; ++mp) {
                const Eigen::Matrix2cd r = rho_dressed(m - mp);
                for (int i = 0; i < 2; ++i) {
                    for (int j = 0; j < 2; ++j) {
                        acc += std::conj(fp.vec[a][QuartetLadder::row(i, m, t)]) * r(i, j) *
                               fp.vec[a][QuartetLadder::row(j, mp, t)];
                    }
                }
            }
        }
        pop[a] = acc.real();
    }
    return pop;
}

double subharmonic_shift(int n, PowerRatio alpha, double omega) {
    if (n < 1) throw ValidationError("subharmonic order n must be >= 1");
    if (!(alpha.value >= 0.0) || !(omega > 0.0)) {
        throw ValidationError("subharmonic_shift: need α² >= 0 and Ω > 0");
    }
    if (n == 1) return alpha.value * omega / 8.0;
    return n * alpha.value * omega / (2.0 * (n * n - 1.0));
}

void write_lines_csv(const std::filesystem::path& path, const std::vector<LineCandidate>& lines) {
    std::ostringstream os;
    os << "label,center_ghz,weight\n";
    for (const auto& l : lines) {
        os << l.label << ',' << format_double(l.center) << ',' << format_double(l.weight) << '\n';
    }
    write_file_atomic(path, os.str());
}

} // namespace rfsim
