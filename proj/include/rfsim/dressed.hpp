#pragma once

#include <array>
#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rfsim/emitter.hpp"
#include "rfsim/floquet.hpp"

namespace rfsim {

/// Eigenstates of Ω σx - Δ1 σ_ee:
/// |1> = cos θ |g> + sin θ |e> (upper), |2> = sin θ |g> - cos θ |e> (lower).
struct DressedDoublet {
    double splitting = 0.0;    // 2Ω̃ = sqrt((2Ω)^2 + Δ1^2), GHz
    double mixing_angle = 0.0; // θ = atan2(2Ω, Δ1) / 2
    double upper_energy = 0.0; // E1 = -Δ1/2 + Ω̃ (GHz, strong-drive frame)
    double lower_energy = 0.0; // E2 = -Δ1/2 - Ω̃

    std::array<double, 2> weights() const; // (cos θ, sin θ)
    /// <i|σ-|j> in the dressed basis, i, j in {0 = |1>, 1 = |2>}.
    Eigen::Matrix2d sigma_minus() const;
    /// Doublet-to-doublet emission frequencies relative to ω0 (GHz),
    /// {Δ1 - 2Ω̃, Δ1, Δ1 + 2Ω̃}.
    std::array<double, 3> transition_frequencies(double delta1) const;
};

DressedDoublet singly_dressed(double omega, double delta1);

/// How the coupling field enters the dressed ladder.
enum class LadderModel {
    Secular, // only the near-resonant inner-doublet coupling |1,m> <-> |2,m-1>
    Full,    // every matrix element of the coupling field (Floquet-exact Hamiltonian)
};

/// Two-field ladder in the basis |i, m> (i in {1, 2} singly dressed, m the
/// coupling-field rung), Floquet energy E_i + mδ.
struct QuartetLadder {
    Eigen::VectorXd energies;  // ascending, GHz
    Eigen::MatrixXcd eigvecs;  // columns; row index 2 (m + truncation) + i
    int truncation = 0;        // rungs m in [-truncation, truncation]
    double beat = 0.0;         // δ = Δ3 - Δ1 (GHz)

    int rungs() const { return 2 * truncation + 1; }
    static int row(int i, int m, int truncation) { return 2 * (m + truncation) + i; }
};

struct LadderParams {
    double omega = 0.0;   // Ω, GHz
    double g = 0.0;       // G, GHz (coupling amplitude 2G)
    double delta1 = 0.0;  // Δ1, GHz
    double delta2 = 0.0;  // Δ2 = Δ3 + 2Ω, GHz
    double phase = 0.0;   // relative phase φ of the coupling field
};

QuartetLadder build_quartet_ladder(const LadderParams& p, int truncation = 3,
                                   LadderModel model = LadderModel::Secular);

struct LineCandidate {
    double center = 0.0; // GHz relative to ω0
    double weight = 0.0; // relative intensity, maximum 1
    int label = 0;       // 1..9
};

struct DressedLines {
    std::vector<LineCandidate> lines; // nine entries, ordered by label
    bool approximate = false;         // G > Ω/2: the secular ladder degrades
    std::array<double, 2> populations{}; // (P+, P-) of the two quasi-energy states
    Eigen::Matrix2cd states;          // block-0 eigenvectors in (|1,0>, |2,-1>) (columns +, -)
    std::vector<std::string> warnings;

    const LineCandidate& label(int l) const { return lines.at(static_cast<std::size_t>(l - 1)); }
};

/// Nine emission lines of the doubly dressed emitter. Labels:
/// 1 centre, 2/3 the lower/upper outer Mollow lines, 4/5 the pair around the
/// centre, 6/7 around the lower and 8/9 around the upper outer line (each
/// lower member first at Δ2 = 0). With `reference` the ± states are matched
/// to a previous result by eigenvector overlap instead of by energy order.
DressedLines doubly_dressed_lines(const LadderParams& p, LadderModel model = LadderModel::Secular,
                                  const DressedLines* reference = nullptr, int truncation = 3);

/// doubly_dressed_lines over a Δ2 grid with labels carried by overlap.
std::vector<DressedLines> track_lines(LadderParams p, const std::vector<double>& delta2,
                                      LadderModel model = LadderModel::Secular);

/// Separation of the tracked lines 4 and 5 (GHz).
inline double pair_separation(const DressedLines& d) {
    return std::abs(d.label(5).center - d.label(4).center);
}

struct CentralAmplitude {
    std::complex<double> upper_path; // |1> -> |1> contribution (units of μ)
    std::complex<double> lower_path; // |2> -> |2> contribution
    std::complex<double> sum;
    bool interference = true;        // false when the paths are not coherently mixed (G = 0)

    double magnitude() const { return std::abs(sum); }
};

/// Central-line amplitude of the upper block-0 state: the |1>->|1> and
/// |2>->|2> paths weighted by the doubly dressed eigenvector. For G = 0
/// the single-path value is returned with interference = false.
CentralAmplitude central_line_amplitude(double omega, double g, double delta2, double delta1 = 0.0);

/// Time-averaged populations (P+, P-) of the two quasi-energy states of the
/// ladder, obtained by projecting the floquet periodic steady state.
/// Sums to 1 up to the ladder truncation.
std::array<double, 2> dressed_populations(const EmitterParams& emitter, const LadderParams& p,
                                          LadderModel model = LadderModel::Secular,
                                          const SteadyStateOptions& options = {});

/// Multiphoton ac-Stark shift of the n-th subharmonic:
/// α²Ω/8 for n = 1, nα²Ω / (2(n² - 1)) for n > 1, with α² the power ratio.
double subharmonic_shift(int n, PowerRatio alpha, double omega);

/// Power ratio for which the shifts at Ω = 2.9 GHz round to 0.13, 0.34 and
/// 0.19 GHz (n = 1, 2, 3); any value in [0.3466, 0.3569) does.
inline constexpr PowerRatio kCalibratedPowerRatio{0.352};

/// CSV `label,center_ghz,weight`.
void write_lines_csv(const std::filesystem::path& path, const std::vector<LineCandidate>& lines);

} // namespace rfsim
