#include "kgflow/wavefunction.hpp"

#include "kgflow/quadrature.hpp"

namespace kgflow {

Vec3 lattice_momentum(const Box& box, std::array<int, 3> n) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    Vec3 k{};
    k.x = two_pi * n[0] / box.lengths[0];
    if (box.dim >= 2) k.y = two_pi * n[1] / box.lengths[1];
    if (box.dim >= 3) k.z = two_pi * n[2] / box.lengths[2];
    return k;
}

WaveFunction::WaveFunction(Box box, std::vector<PlaneWaveMode> modes, Normalization norm)
    : box_(box), modes_(std::move(modes)), norm_(norm) {
    if (modes_.empty()) throw std::invalid_argument("WaveFunction: no modes");
    const double V = box_.volume();
    omegas_.reserve(modes_.size());
    amps_.reserve(modes_.size());
    for (const auto& m : modes_) {
        if (m.m < 0.0) throw std::invalid_argument("WaveFunction: negative mass");
        // All modes must solve the same field equation: cross terms between
        // different masses would leak current (divergence ~ m_r^2 - m_s^2).
        if (m.m != modes_.front().m)
            throw std::invalid_argument("WaveFunction: modes must share one mass");
        if (m.frequency_sign != 1 && m.frequency_sign != -1)
            throw std::invalid_argument("WaveFunction: frequency_sign must be +1 or -1");
        const double omega = m.omega();
        if (!(omega > 0.0))
            throw std::invalid_argument(
                "WaveFunction: zero-frequency mode (k=0, m=0) is degenerate");
        omegas_.push_back(omega);
        const double N = norm_ == Normalization::KleinGordon ? 1.0 / std::sqrt(2.0 * omega * V)
                                                             : 1.0 / std::sqrt(V);
        amps_.push_back(m.c * N);
    }
}

WaveFunction make_two_mode(const Vec3& k1, const Vec3& k2, double m, const Box& box) {
    if (k1.x == k2.x && k1.y == k2.y && k1.z == k2.z)
        return WaveFunction(box, {{k1, m, {1.0, 0.0}}}, Normalization::KleinGordon);
    const double inv_sqrt2 = 0.70710678118654752440;
    return WaveFunction(box, {{k1, m, {inv_sqrt2, 0.0}}, {k2, m, {inv_sqrt2, 0.0}}},
                        Normalization::KleinGordon);
}

Complex WaveFunction::value(const FourVector& x) const {
    Complex v{0.0, 0.0};
    const Vec3 r{x.x, x.y, x.z};
    for (std::size_t m = 0; m < modes_.size(); ++m) {
        const double phase = modes_[m].k.dot(r) - modes_[m].frequency_sign * omegas_[m] * x.t;
        v += amps_[m] * std::polar(1.0, phase);
    }
    return v;
}

std::array<Complex, 4> WaveFunction::gradient(const FourVector& x) const {
    std::array<Complex, 4> g{};
    const Vec3 r{x.x, x.y, x.z};
    for (std::size_t m = 0; m < modes_.size(); ++m) {
        const double phase = modes_[m].k.dot(r) - modes_[m].frequency_sign * omegas_[m] * x.t;
        const Complex term = amps_[m] * std::polar(1.0, phase);
        const Complex i_term{-term.imag(), term.real()};
        g[0] += i_term * (-modes_[m].frequency_sign * omegas_[m]);
        g[1] += i_term * modes_[m].k.x;
        g[2] += i_term * modes_[m].k.y;
        g[3] += i_term * modes_[m].k.z;
    }
    return g;
}

double WaveFunction::coefficient_norm() const {
    double s = 0.0;
    for (const auto& m : modes_) s += std::norm(m.c);
    return s;
}

namespace {

/// i (a* d.b - (d.a)* b) contracted with a direction n^mu.
Complex bilinear_density(const WaveFunction& a, const WaveFunction& b, const FourVector& x,
                         const FourVector& n) {
    const Complex av = a.value(x);
    const Complex bv = b.value(x);
    const auto ag = a.gradient(x);
    const auto bg = b.gradient(x);
    // Contravariant n^mu against covariant grad_mu: plain sum, no metric signs.
    const Complex ndb = n.t * bg[0] + n.x * bg[1] + n.y * bg[2] + n.z * bg[3];
    const Complex nda = n.t * ag[0] + n.x * ag[1] + n.y * ag[2] + n.z * ag[3];
    const Complex s = std::conj(av) * ndb - std::conj(nda) * bv;
    return Complex{-s.imag(), s.real()};
}

}  // namespace

Complex kg_inner_product(const WaveFunction& a, const WaveFunction& b, double t,
                         int points_per_dim) {
    const FourVector n{1.0, 0.0, 0.0, 0.0};
    Complex total{0.0, 0.0};
    for_each_midpoint(a.box(), points_per_dim, [&](const Vec3& pos, double w) {
        total += w * bilinear_density(a, b, {t, pos.x, pos.y, pos.z}, n);
    });
    return total;
}

Complex kg_inner_product(const WaveFunction& a, const WaveFunction& b,
                         const Hypersurface& surface, int points_per_dim) {
    if (!surface.spacelike())
        throw std::invalid_argument("kg_inner_product: surface must be spacelike");
    Complex total{0.0, 0.0};
    for (const auto& patch : surface.patches()) {
        int active = 0;
        for (int i = 0; i < 3; ++i)
            if (patch.extent[i] > 0.0) active = i + 1;
        if (active == 0) throw std::invalid_argument("kg_inner_product: unbounded patch");
        std::array<int, 3> counts{1, 1, 1};
        std::array<double, 3> h{0.0, 0.0, 0.0};
        double w = patch.sqrt_g3;
        for (int i = 0; i < active; ++i) {
            counts[i] = points_per_dim;
            h[i] = patch.extent[i] / points_per_dim;
            w *= h[i];
        }
        for (int i = 0; i < counts[0]; ++i)
            for (int j = 0; j < counts[1]; ++j)
                for (int l = 0; l < counts[2]; ++l) {
                    const std::array<double, 3> u{(i + 0.5) * h[0], (j + 0.5) * h[1],
                                                  (l + 0.5) * h[2]};
                    const FourVector x = patch.point(u, active);
                    total += w * bilinear_density(a, b, x, patch.normal);
                }
    }
    return total;
}

double conventional_norm(const WaveFunction& psi, double t, int points_per_dim) {
    double total = 0.0;
    for_each_midpoint(psi.box(), points_per_dim, [&](const Vec3& pos, double w) {
        total += w * std::norm(psi.value({t, pos.x, pos.y, pos.z}));
    });
    return total;
}

}  // namespace kgflow
