#include "rfsim/floquet.hpp"

#include <array>
#include <cmath>

#include <boost/numeric/odeint.hpp>

#include "rfsim/errors.hpp"

namespace rfsim {

using cd = std::complex<double>;

Vec4 vectorize(const Mat2& rho)
{
    return Vec4(rho(0, 0), rho(0, 1), rho(1, 0), rho(1, 1));
}

Mat2 unvectorize(const Vec4& v)
{
    Mat2 rho;
    rho << v[0], v[1], v[2], v[3];
    return rho;
}

Eigen::RowVector4cd trace_row()
{
    return Eigen::RowVector4cd(1.0, 0.0, 0.0, 1.0);
}

namespace {

// Row-major vec: vec(A ρ B) = (A ⊗ B^T) vec(ρ).
Mat4 kron(const Mat2& a, const Mat2& b)
{
    Mat4 out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

} // namespace

Mat4 commutator_superop(const Mat2& h)
{
    const Mat2 id = Mat2::Identity();
    return cd(0.0, -1.0) * (kron(h, id) - kron(id, h.transpose()));
}

Mat4 dissipator_superop(const Mat2& c, double rate)
{
    const Mat2 id = Mat2::Identity();
    const Mat2 cdc = c.adjoint() * c;
    return rate * (kron(c, c.conjugate()) - 0.5 * kron(cdc, id) - 0.5 * kron(id, cdc.transpose()));
}

Mat4 left_multiply_superop(const Mat2& a)
{
    return kron(a, Mat2::Identity());
}

Mat2 sigma_minus()
{
    Mat2 m = Mat2::Zero();
    m(0, 1) = 1.0;
    return m;
}

Mat2 sigma_plus()
{
    Mat2 m = Mat2::Zero();
    m(1, 0) = 1.0;
    return m;
}

Mat2 sigma_ee()
{
    Mat2 m = Mat2::Zero();
    m(1, 1) = 1.0;
    return m;
}

Mat4 PeriodicLiouvillian::at(double t) const
{
    const cd phase = std::polar(1.0, delta * t);
    return l0 + lp * phase + lm * std::conj(phase);
}

double PeriodicLiouvillian::beat_period() const
{
    return kTwoPi / std::abs(delta);
}

PeriodicLiouvillian build_periodic_liouvillian(const EmitterParams& emitter, const BichromaticDrive& drive)
{
    if (drive.beat() == 0.0)
        throw ValidationError("degenerate drive (beat frequency 0): use scans::degenerate_spectrum");

    const double rabi = to_angular(drive.strong().rabi());
    const double det = to_angular(drive.strong().detuning());
    const double coupling = 2.0 * to_angular(drive.weak().rabi());
    const double phi = drive.relative_phase();

    const Mat2 sm = sigma_minus();
    const Mat2 sp = sigma_plus();
    const Mat2 h0 = rabi * (sp + sm) - det * sigma_ee();

    PeriodicLiouvillian pl;
    pl.delta = to_angular(drive.beat());
    pl.l0_coherent = commutator_superop(h0);
    pl.l0 = pl.l0_coherent + dissipator_superop(sm, emitter.gamma_sp()) +
            dissipator_superop(sigma_ee(), 2.0 * emitter.gamma_pd());
    // H_w(t) = 2G σ- e^{-iφ} e^{+iδt} + 2G σ+ e^{+iφ} e^{-iδt}
    pl.lp = commutator_superop(coupling * std::polar(1.0, -phi) * sm);
    pl.lm = commutator_superop(coupling * std::polar(1.0, phi) * sp);
    pl.frame_detuning = drive.strong().detuning();
    pl.max_frequency = std::abs(drive.beat()) + std::hypot(2.0 * drive.strong().rabi(), drive.strong().detuning()) +
                       4.0 * drive.weak().rabi() + (emitter.gamma_sp() + emitter.gamma_transverse()) / kTwoPi;
    pl.min_decay = std::min(emitter.gamma_sp(), emitter.gamma_transverse());
    pl.t2 = emitter.t2() / 1000.0;
    return pl;
}

Vec4 PeriodicState::at(double t, double delta) const
{
    Vec4 rho = Vec4::Zero();
    for (int k = -cutoff; k <= cutoff; ++k)
        rho += harmonic(k) * std::polar(1.0, k * delta * t);
    return rho;
}

double PeriodicState::tail_ratio() const
{
    const double top = std::max(harmonic(cutoff).norm(), harmonic(-cutoff).norm());
    return top / harmonic(0).norm();
}

namespace {

PeriodicState solve_harmonic_balance(const PeriodicLiouvillian& pl, int cutoff)
{
    const Mat4 id = Mat4::Identity();
    const auto n = static_cast<std::size_t>(cutoff);

    // ρ^(k) = up[k] ρ^(k-1) for k >= 1, ρ^(-k) = down[k] ρ^(-k+1) for k >= 1.
    std::vector<Mat4> up(n + 2, Mat4::Zero());
    std::vector<Mat4> down(n + 2, Mat4::Zero());
    for (int k = cutoff; k >= 1; --k) {
        const auto i = static_cast<std::size_t>(k);
        const Mat4 a_up = pl.l0 - cd(0.0, k * pl.delta) * id + pl.lm * up[i + 1];
        up[i] = -a_up.partialPivLu().solve(pl.lp);
        const Mat4 a_down = pl.l0 + cd(0.0, k * pl.delta) * id + pl.lp * down[i + 1];
        down[i] = -a_down.partialPivLu().solve(pl.lm);
    }

    Mat4 a0 = pl.l0 + pl.lp * down[1] + pl.lm * up[1];
    // The trace row of a0 vanishes; its first row is redundant with the last.
    a0.row(0) = trace_row();
    Vec4 rhs = Vec4::Zero();
    rhs[0] = 1.0;
    Eigen::FullPivLU<Mat4> lu(a0);
    if (!lu.isInvertible())
        throw NumericalError("periodic steady state: singular zero-harmonic system");

    PeriodicState st;
    st.cutoff = cutoff;
    st.harmonics.assign(2 * n + 1, Vec4::Zero());
    st.harmonics[n] = lu.solve(rhs);
    for (std::size_t k = 1; k <= n; ++k) {
        st.harmonics[n + k] = up[k] * st.harmonics[n + k - 1];
        st.harmonics[n - k] = down[k] * st.harmonics[n - k + 1];
    }
    return st;
}

} // namespace

PeriodicState periodic_steady_state(const PeriodicLiouvillian& pl, int cutoff, const SteadyStateOptions& options)
{
    if (cutoff < 1)
        throw ValidationError("harmonic cutoff must be >= 1");
    int k = cutoff;
    while (true) {
        PeriodicState st = solve_harmonic_balance(pl, k);
        const double ratio = st.tail_ratio();
        if (ratio < options.tolerance)
            return st;
        if (2 * k > options.max_cutoff)
            throw NumericalError("periodic steady state not converged at cutoff " + std::to_string(k) +
                                 ": ||rho^(K)||/||rho^(0)|| = " + std::to_string(ratio));
        k *= 2;
    }
}

namespace {

using State = std::array<double, 8>;

State to_state(const Vec4& v)
{
    State s;
    for (int i = 0; i < 4; ++i) {
        s[2 * i] = v[i].real();
        s[2 * i + 1] = v[i].imag();
    }
    return s;
}

Vec4 from_state(const State& s)
{
    return Vec4(cd(s[0], s[1]), cd(s[2], s[3]), cd(s[4], s[5]), cd(s[6], s[7]));
}

} // namespace

std::vector<Vec4> propagate(const PeriodicLiouvillian& pl, double t0, const Vec4& x0,
                            const std::vector<double>& taus, double rel_tol)
{
    namespace odeint = boost::numeric::odeint;
    auto rhs = [&](const State& s, State& ds, double tau) {
        const Vec4 dx = pl.at(t0 + tau) * from_state(s);
        ds = to_state(dx);
    };
    std::vector<Vec4> out;
    out.reserve(taus.size());
    auto observer = [&](const State& s, double) { out.push_back(from_state(s)); };
    const double abs_tol = rel_tol * std::max(x0.cwiseAbs().maxCoeff(), 1e-300) * 1e-3;
    auto stepper = odeint::make_controlled(abs_tol, rel_tol, odeint::runge_kutta_dopri5<State>());
    State s = to_state(x0);
    const double dt0 = taus.size() > 1 ? (taus[1] - taus[0]) : 1e-3;
    odeint::integrate_times(stepper, rhs, s, taus.begin(), taus.end(), dt0, observer);
    return out;
}

double default_tau_max(const PeriodicLiouvillian& pl)
{
    return std::max(10.0 * pl.t2, 15.0 / pl.min_decay);
}

Correlation incoherent_correlation(const PeriodicLiouvillian& pl, const PeriodicState& state,
                                   double tau_max, const EmissionOptions& options)
{
    if (options.phases < 1)
        throw ValidationError("need at least one beat phase");
    const double dt = 1.0 / (options.samples_per_period * pl.max_frequency);
    const auto n = static_cast<std::size_t>(std::ceil(tau_max / dt)) + 1;
    std::vector<double> taus(n);
    for (std::size_t i = 0; i < n; ++i)
        taus[i] = dt * static_cast<double>(i);

    const Mat4 left_sm = left_multiply_superop(sigma_minus());
    Correlation c;
    c.dt = dt;
    c.values.assign(n, 0.0);
    c.derivative0 = 0.0;
    const double period = pl.beat_period();
    for (int j = 0; j < options.phases; ++j) {
        const double t0 = period * j / options.phases;
        const Vec4 rho = state.at(t0, pl.delta);
        const cd mean_sm = rho[2];
        const Vec4 x0 = left_sm * rho - mean_sm * rho;
        const auto xs = propagate(pl, t0, x0, taus, options.rel_tol);
        for (std::size_t i = 0; i < n; ++i)
            c.values[i] += xs[i][1]; // tr(σ+ X) = X_ge
        c.derivative0 += (pl.at(t0) * x0)[1];
    }
    for (auto& v : c.values)
        v /= options.phases;
    c.derivative0 /= options.phases;
    return c;
}

std::vector<ElasticLine> elastic_lines(const PeriodicLiouvillian& pl, const PeriodicState& state)
{
    std::vector<ElasticLine> lines;
    const double beat = to_ghz(pl.delta);
    for (int k = -state.cutoff; k <= state.cutoff; ++k) {
        const double w = std::norm(state.harmonic(k)[2]);
        if (w > 0.0)
            lines.push_back({pl.frame_detuning - k * beat, w});
    }
    return lines;
}

std::vector<double> half_fourier(const Correlation& c, const std::vector<double>& frame_freq)
{
    std::vector<double> out(frame_freq.size());
    const double dt = c.dt;
    for (std::size_t i = 0; i < frame_freq.size(); ++i) {
        const double nu = to_angular(frame_freq[i]);
        const cd z = std::polar(1.0, -nu * dt);
        cd zn = 1.0;
        cd sum = 0.5 * c.values[0];
        for (std::size_t m = 1; m < c.values.size(); ++m) {
            if (m % 64 == 0)
                zn = std::polar(1.0, -nu * dt * static_cast<double>(m));
            else
                zn *= z;
            sum += c.values[m] * zn;
        }
        const cd endpoint = dt * dt / 12.0 * (c.derivative0 - cd(0.0, nu) * c.values[0]);
        out[i] = 2.0 * (dt * sum + endpoint).real();
    }
    return out;
}

Spectrum resolvent_spectrum(const PeriodicLiouvillian& pl, const PeriodicState& state,
                            const std::vector<double>& grid, int extra_harmonics)
{
    check_grid(grid);
    if (extra_harmonics < 0)
        throw ValidationError("extra_harmonics must be >= 0");
    const int k = state.cutoff;
    const int n = 2 * k + extra_harmonics;
    const auto size = static_cast<std::size_t>(2 * n + 1);
    auto rho = [&](int j) -> Vec4 { return std::abs(j) <= k ? state.harmonic(j) : Vec4::Zero(); };

    const Mat4 left_sm = left_multiply_superop(sigma_minus());
    std::vector<Vec4> source(size, Vec4::Zero());
    for (int j = -2 * k; j <= 2 * k; ++j) {
        Vec4 x = left_sm * rho(j);
        for (int a = -k; a <= k; ++a)
            x -= rho(a)[2] * rho(j - a);
        source[static_cast<std::size_t>(j + n)] = x;
    }

    Spectrum s;
    s.freq = grid;
    s.intensity.resize(grid.size());
    const Mat4 id = Mat4::Identity();
    // Every y_n is traceless, so adding u·trace_row leaves the solution
    // unchanged while removing the zero mode of l0 at ν + nδ = 0.
    const Mat4 trace_fix = pl.l0.norm() * trace_row().transpose().conjugate() * trace_row();
    std::vector<Mat4> gain(size);
    std::vector<Vec4> carry(size);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double nu = to_angular(grid[g] - pl.frame_detuning);
        // Forward elimination of the block-tridiagonal system in n.
        for (std::size_t i = 0; i < size; ++i) {
            const int h = static_cast<int>(i) - n;
            Mat4 diag = cd(0.0, nu + h * pl.delta) * id - pl.l0 + trace_fix;
            Vec4 rhs = source[i];
            if (i > 0) {
                diag -= -pl.lp * gain[i - 1];
                rhs -= -pl.lp * carry[i - 1];
            }
            const auto lu = diag.partialPivLu();
            gain[i] = lu.solve(-pl.lm);
            carry[i] = lu.solve(rhs);
        }
        Vec4 y = carry[size - 1];
        for (std::size_t i = size - 1; i-- > static_cast<std::size_t>(n);)
            y = carry[i] - gain[i] * y;
        s.intensity[g] = 2.0 * y[1].real();
    }
    s.elastic_lines = elastic_lines(pl, state);
    for (const auto& l : s.elastic_lines)
        s.elastic_weight += l.weight;
    return s;
}

Spectrum emission_spectrum(const PeriodicLiouvillian& pl, const PeriodicState& state,
                           const std::vector<double>& grid, const EmissionOptions& options)
{
    check_grid(grid);
    if (options.spectral_half_width > 0.0)
        check_coverage(grid, pl.frame_detuning, options.spectral_half_width, "emission_spectrum");
    double tau_max = options.tau_max > 0.0 ? options.tau_max : default_tau_max(pl);
    if (tau_max < 10.0 * pl.t2 * (1.0 - 1e-12))
        throw ValidationError("emission_spectrum: tau_max must be at least 10 T2");

    const Correlation c = incoherent_correlation(pl, state, tau_max, options);

    Spectrum s;
    // Decay check over the last 5% of the τ range.
    const std::size_t tail_start = c.values.size() - std::max<std::size_t>(1, c.values.size() / 20);
    double tail = 0.0;
    for (std::size_t i = tail_start; i < c.values.size(); ++i)
        tail = std::max(tail, std::abs(c.values[i]));
    const double head = std::abs(c.values[0]);
    if (head > 0.0 && tail > options.decay_threshold * head) {
        const std::string msg = "correlation not decayed at tau_max = " + std::to_string(tau_max) +
                                " ns (tail/initial = " + std::to_string(tail / head) + ")";
        if (options.strict)
            throw NumericalError(msg);
        s.warnings.push_back(msg);
    }

    std::vector<double> frame(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        frame[i] = grid[i] - pl.frame_detuning;
    s.freq = grid;
    s.intensity = half_fourier(c, frame);
    s.elastic_lines = elastic_lines(pl, state);
    for (const auto& l : s.elastic_lines)
        s.elastic_weight += l.weight;
    return s;
}

} // namespace rfsim
