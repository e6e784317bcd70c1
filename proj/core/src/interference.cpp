#include "kgflow/interference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "kgflow/parallel.hpp"
#include "kgflow/stats.hpp"

namespace kgflow {

namespace {

constexpr double kTruncation = 1e-12;  // envelope weights below this (relative) are dropped

void require_lattice(const Vec3& k, const Box& box, const char* what) {
    for (int d = 0; d < 3; ++d) {
        const double kd = d == 0 ? k.x : (d == 1 ? k.y : k.z);
        if (d >= box.dim) {
            if (kd != 0.0) throw std::invalid_argument(std::string(what) + ": momentum component outside the box dimensions");
            continue;
        }
        const double n = kd * box.lengths[d] / (2.0 * std::numbers::pi);
        if (std::abs(n - std::round(n)) > 1e-9)
            throw std::invalid_argument(std::string(what) + ": momentum off the box lattice");
    }
}

}  // namespace

TwoFrequencyScenario::TwoFrequencyScenario(Box box, double mass, ProfileSpec p1, ProfileSpec p2)
    : box_(box), mass_(mass) {
    if (mass < 0.0) throw std::invalid_argument("TwoFrequencyScenario: negative mass");
    const double V = box_.volume();
    const ProfileSpec specs[2] = {p1, p2};
    for (int b = 0; b < 2; ++b) {
        const ProfileSpec& ps = specs[b];
        kind_[b] = ps.kind;
        require_lattice(ps.carrier, box_, "profile carrier");
        const double k2 = ps.carrier.dot(ps.carrier);
        omega_[b] = std::sqrt(k2 + mass * mass);
        if (!(omega_[b] > 0.0))
            throw std::invalid_argument("TwoFrequencyScenario: zero branch frequency");

        auto& cs = coeff_[b];
        if (ps.kind == ProfileKind::standing_shell) {
            if (k2 == 0.0)
                throw std::invalid_argument("TwoFrequencyScenario: standing profile needs k != 0");
            const std::complex<double> e{std::cos(ps.phase), std::sin(ps.phase)};
            const double a = 1.0 / std::sqrt(2.0 * V);
            cs.push_back({ps.carrier, a * e});
            cs.push_back({ps.carrier * -1.0, a * std::conj(e)});
        } else {
            if (!(ps.width > 0.0))
                throw std::invalid_argument("TwoFrequencyScenario: envelope needs width > 0");
            // Lattice offsets out to where the envelope weight falls below
            // the truncation threshold.
            int nmax[3] = {0, 0, 0};
            const double reach = ps.width * std::sqrt(-4.0 * std::log(kTruncation));
            for (int d = 0; d < box_.dim; ++d)
                nmax[d] = static_cast<int>(
                    std::ceil(reach * box_.lengths[d] / (2.0 * std::numbers::pi)));
            for (int nx = -nmax[0]; nx <= nmax[0]; ++nx)
                for (int ny = -nmax[1]; ny <= nmax[1]; ++ny)
                    for (int nz = -nmax[2]; nz <= nmax[2]; ++nz) {
                        const Vec3 dk{2.0 * std::numbers::pi * nx / box_.lengths[0],
                                      box_.dim > 1 ? 2.0 * std::numbers::pi * ny / box_.lengths[1]
                                                   : 0.0,
                                      box_.dim > 2 ? 2.0 * std::numbers::pi * nz / box_.lengths[2]
                                                   : 0.0};
                        const double w =
                            std::exp(-dk.dot(dk) / (4.0 * ps.width * ps.width));
                        if (w < kTruncation) continue;
                        const double ph = -(dk.dot(ps.center));
                        cs.push_back(
                            {ps.carrier + dk, w * std::complex<double>{std::cos(ph), std::sin(ph)}});
                    }
            double norm2 = 0.0;
            for (const auto& c : cs) norm2 += std::norm(c.c);
            const double scale = 1.0 / std::sqrt(norm2 * V);
            for (auto& c : cs) c.c *= scale;
        }
    }
    alpha_ = (omega_[0] + omega_[1]) / (2.0 * std::sqrt(omega_[0] * omega_[1]));
}

double TwoFrequencyScenario::beat_period() const {
    const double d = std::abs(omega_[0] - omega_[1]);
    return d == 0.0 ? std::numeric_limits<double>::infinity() : 2.0 * std::numbers::pi / d;
}

std::complex<double> TwoFrequencyScenario::eval(int branch, const Vec3& x) const {
    std::complex<double> v{0.0, 0.0};
    for (const auto& c : coeff_[branch]) {
        const double ph = c.k.dot(x);
        v += c.c * std::complex<double>{std::cos(ph), std::sin(ph)};
    }
    return v;
}

std::complex<double> TwoFrequencyScenario::profile(int branch, const Vec3& x) const {
    if (branch < 0 || branch > 1) throw std::invalid_argument("profile: branch must be 0 or 1");
    return eval(branch, x);
}

double TwoFrequencyScenario::profile_norm_error(int branch) const {
    if (branch < 0 || branch > 1) throw std::invalid_argument("profile_norm_error: branch 0 or 1");
    double n2 = 0.0;
    for (const auto& c : coeff_[branch]) n2 += std::norm(c.c);
    return std::abs(n2 * box_.volume() - 1.0);
}

double TwoFrequencyScenario::classical_density(const Vec3& x) const {
    return 0.5 * (std::norm(eval(0, x)) + std::norm(eval(1, x)));
}

TwoFrequencyScenario::Terms TwoFrequencyScenario::terms(const Vec3& x) const {
    const std::complex<double> p1 = eval(0, x), p2 = eval(1, x);
    const std::complex<double> z = p1 * std::conj(p2);
    return {0.5 * (std::norm(p1) + std::norm(p2)), z.real(), z.imag()};
}

double TwoFrequencyScenario::interference(const Terms& tm, double t) const {
    const double th = (omega_[0] - omega_[1]) * t;
    return tm.re * std::cos(th) + tm.im * std::sin(th);
}

double TwoFrequencyScenario::interference(const Vec3& x, double t) const {
    return interference(terms(x), t);
}

double TwoFrequencyScenario::conventional_density(const Vec3& x, double t) const {
    return classical_density(x) + interference(x, t);
}

double TwoFrequencyScenario::kg_density(const Vec3& x, double t) const {
    return classical_density(x) + alpha_ * interference(x, t);
}

double TwoFrequencyScenario::conventional_density_direct(const Vec3& x, double t) const {
    const std::complex<double> e1{std::cos(omega_[0] * t), -std::sin(omega_[0] * t)};
    const std::complex<double> e2{std::cos(omega_[1] * t), -std::sin(omega_[1] * t)};
    return std::norm((eval(0, x) * e1 + eval(1, x) * e2) / std::sqrt(2.0));
}

double TwoFrequencyScenario::kg_density_direct(const Vec3& x, double t) const {
    const std::complex<double> e1{std::cos(omega_[0] * t), -std::sin(omega_[0] * t)};
    const std::complex<double> e2{std::cos(omega_[1] * t), -std::sin(omega_[1] * t)};
    const std::complex<double> u1 = eval(0, x) * e1 / std::sqrt(4.0 * omega_[0]);
    const std::complex<double> u2 = eval(1, x) * e2 / std::sqrt(4.0 * omega_[1]);
    const std::complex<double> psi = u1 + u2;
    const std::complex<double> dpsi =
        std::complex<double>{0.0, -1.0} * (omega_[0] * u1 + omega_[1] * u2);
    return -2.0 * std::imag(std::conj(psi) * dpsi);
}

WaveFunction TwoFrequencyScenario::to_wavefunction() const {
    for (int b = 0; b < 2; ++b)
        if (kind_[b] != ProfileKind::standing_shell)
            throw std::invalid_argument(
                "to_wavefunction: exact mode sum requires on-shell standing profiles");
    std::vector<PlaneWaveMode> modes;
    const double V = box_.volume();
    for (int b = 0; b < 2; ++b)
        for (const auto& c : coeff_[b]) {
            PlaneWaveMode m;
            m.k = c.k;
            m.m = mass_;
            // The branch carries 1/sqrt(2); the invariant normalization of a
            // mode divides by sqrt(2 w V), leaving c sqrt(V) / sqrt(2).
            m.c = c.c * std::sqrt(V) / std::sqrt(2.0);
            m.frequency_sign = +1;
            modes.push_back(m);
        }
    return WaveFunction(box_, modes, Normalization::KleinGordon);
}

double time_average(const TwoFrequencyScenario& sc, DensityKind kind, const Vec3& x, double T,
                    int points_per_beat) {
    if (!(T > 0.0)) throw std::invalid_argument("time_average: window must be positive");
    const double P = sc.beat_period();
    long N = 16;
    if (std::isfinite(P))
        N = std::clamp<long>(static_cast<long>(std::ceil(T / P * points_per_beat)), 64, 1L << 22);
    const TwoFrequencyScenario::Terms tm = sc.terms(x);
    const double gain = kind == DensityKind::conventional ? 1.0 : sc.alpha();
    double acc = 0.0;
    for (long j = 0; j < N; ++j) {
        const double t = (j + 0.5) * T / static_cast<double>(N);
        const double v = tm.classical + gain * sc.interference(tm, t);
        acc += kind == DensityKind::abs_kg ? std::abs(v) : v;
    }
    return acc / static_cast<double>(N);
}

DeviationMap deviation_map(const TwoFrequencyScenario& sc, int grid_points, double T,
                           int workers) {
    if (grid_points < 8) throw std::invalid_argument("deviation_map: grid too small");
    const double L = sc.box().lengths[0];
    const double dw = std::abs(sc.omega1() - sc.omega2());
    DeviationMap map;
    map.expected_scale = dw == 0.0 ? 0.0 : 1.0 / dw;
    if (dw != 0.0 && L / grid_points > map.expected_scale / 8.0)
        throw std::invalid_argument("deviation_map: grid under-resolves the deviation scale");

    const int N = grid_points;
    map.x.resize(N);
    map.abs_kg_avg.resize(N);
    map.rho_avg.resize(N);
    map.classical.resize(N);
    map.deviation.resize(N);
    parallel_for(static_cast<std::size_t>(N), workers, [&](std::size_t i) {
        const Vec3 x{L * static_cast<double>(i) / N, 0.0, 0.0};
        map.x[i] = x.x;
        map.abs_kg_avg[i] = time_average(sc, DensityKind::abs_kg, x, T);
        map.rho_avg[i] = time_average(sc, DensityKind::conventional, x, T);
        map.classical[i] = sc.classical_density(x);
        map.deviation[i] = map.abs_kg_avg[i] - map.rho_avg[i];
    });

    // Spatial scale of the deviation pattern: periodic autocorrelation,
    // doubled first half-height lag (full-width analogue).
    double mean = 0.0;
    for (double d : map.deviation) mean += d;
    mean /= N;
    std::vector<double> c(N);
    double var = 0.0;
    for (int i = 0; i < N; ++i) {
        c[i] = map.deviation[i] - mean;
        var += c[i] * c[i];
    }
    if (var < 1e-30) {
        map.correlation_length = 0.0;
        return map;
    }
    const double h = L / N;
    double prev = 1.0;
    map.correlation_length = L;  // flat maps never dip below half height
    for (int lag = 1; lag <= N / 2; ++lag) {
        double r = 0.0;
        for (int i = 0; i < N; ++i) r += c[i] * c[(i + lag) % N];
        r /= var;
        if (r < 0.5) {
            const double frac = (prev - 0.5) / (prev - r);
            map.correlation_length = 2.0 * h * (static_cast<double>(lag - 1) + frac);
            break;
        }
        prev = r;
    }
    return map;
}

WashoutFit washout_convergence(const TwoFrequencyScenario& sc, const Vec3& x, int decades,
                               int points) {
    if (!std::isfinite(sc.beat_period()))
        throw std::invalid_argument("washout_convergence: equal frequencies never wash out");
    if (std::abs(sc.profile(0, x) * sc.profile(1, x)) < 1e-30)
        throw std::invalid_argument("washout_convergence: no interference at the probe point");
    if (points < 3 || decades < 1) throw std::invalid_argument("washout_convergence: bad sampling");

    const double P = sc.beat_period();
    const double C = sc.classical_density(x);
    WashoutFit fit;
    long prev_m = -1;
    for (int j = 0; j < points; ++j) {
        const double target = 0.25 * std::pow(10.0, decades * static_cast<double>(j) / (points - 1));
        const long m = std::max(0L, std::lround(target - 0.25));
        if (m == prev_m) continue;
        prev_m = m;
        const double T = (static_cast<double>(m) + 0.25) * P;
        const double err = std::abs(time_average(sc, DensityKind::kg, x, T) - C);
        if (err <= 0.0) continue;  // exact cancellation carries no slope information
        fit.window.push_back(T);
        fit.error.push_back(err);
    }
    if (fit.window.size() < 3)
        throw std::runtime_error("washout_convergence: too few usable windows");
    std::vector<double> lx(fit.window.size()), ly(fit.window.size());
    for (std::size_t i = 0; i < fit.window.size(); ++i) {
        lx[i] = std::log10(fit.window[i]);
        ly[i] = std::log10(fit.error[i]);
    }
    fit.slope = fit_line(lx, ly).slope;
    return fit;
}

}  // namespace kgflow
