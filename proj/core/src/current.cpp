#include "kgflow/current.hpp"

namespace kgflow {

CurrentField::CurrentField(WaveFunction psi) : psi_(std::move(psi)) {
    if (psi_.normalization() != Normalization::KleinGordon)
        throw std::invalid_argument("CurrentField: requires an invariant-normalized wave function");
    const auto& modes = psi_.modes();
    const std::size_t M = modes.size();
    for (std::size_t r = 0; r < M; ++r) {
        const double wr = modes[r].frequency_sign * psi_.omega(r);
        const double a2 = std::norm(psi_.amplitude(r));
        j_const_ += FourVector{2.0 * wr, 2.0 * modes[r].k.x, 2.0 * modes[r].k.y,
                               2.0 * modes[r].k.z} *
                    a2;
        for (std::size_t s = r + 1; s < M; ++s) {
            const double ws = modes[s].frequency_sign * psi_.omega(s);
            PairTerm p;
            p.K = {wr + ws, modes[r].k.x + modes[s].k.x, modes[r].k.y + modes[s].k.y,
                   modes[r].k.z + modes[s].k.z};
            p.dk = modes[s].k - modes[r].k;
            p.domega = ws - wr;
            const Complex prod = 2.0 * std::conj(psi_.amplitude(r)) * psi_.amplitude(s);
            p.re = prod.real();
            p.im = prod.imag();
            pairs_.push_back(p);
        }
    }
}

FourVector CurrentField::current(const FourVector& x) const {
    FourVector j = j_const_;
    for (const auto& p : pairs_) {
        const double phase = p.dk.x * x.x + p.dk.y * x.y + p.dk.z * x.z - p.domega * x.t;
        const double w = p.re * std::cos(phase) - p.im * std::sin(phase);
        j += p.K * w;
    }
    return j;
}

double CurrentField::time_component(const FourVector& x) const { return current(x).t; }

double CurrentField::normal_component(const FourVector& x, const FourVector& n) const {
    return minkowski_dot(n, current(x));
}

double CurrentField::density(const FourVector& x, const FourVector& n,
                             double metric_factor) const {
    require_unit_timelike_future(n, 1e-9, "density normal");
    return std::abs(metric_factor * normal_component(x, n));
}

double CurrentField::flux_norm_bound() const {
    double b = j_const_.euclidean_norm();
    for (const auto& p : pairs_) b += std::hypot(p.re, p.im) * p.K.euclidean_norm();
    return b;
}

double CurrentField::normal_component_bound(const FourVector& n) const {
    double b = std::abs(minkowski_dot(n, j_const_));
    for (const auto& p : pairs_) b += std::hypot(p.re, p.im) * std::abs(minkowski_dot(n, p.K));
    return b;
}

}  // namespace kgflow
