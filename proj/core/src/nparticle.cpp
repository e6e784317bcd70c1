#include "kgflow/nparticle.hpp"

#include <cmath>
#include <stdexcept>

namespace kgflow {

NParticleWaveFunction::NParticleWaveFunction(Box box, std::vector<double> masses,
                                             std::vector<ProductTerm> terms, Normalization norm)
    : box_(box), masses_(std::move(masses)), terms_(std::move(terms)), norm_(norm) {
    const int n = static_cast<int>(masses_.size());
    if (n < 1) throw std::invalid_argument("NParticleWaveFunction: need at least one particle");
    if (terms_.empty()) throw std::invalid_argument("NParticleWaveFunction: no terms");
    const double V = box_.volume();
    for (const auto& t : terms_) {
        if (static_cast<int>(t.momenta.size()) != n)
            throw std::invalid_argument("NParticleWaveFunction: term arity mismatch");
        if (!t.frequency_signs.empty() && static_cast<int>(t.frequency_signs.size()) != n)
            throw std::invalid_argument("NParticleWaveFunction: frequency_signs arity mismatch");
    }
    amps_.reserve(terms_.size());
    omegas_.reserve(terms_.size());
    for (const auto& t : terms_) {
        Complex amp = t.c;
        std::vector<double> w(n);
        for (int a = 0; a < n; ++a) {
            w[a] = std::sqrt(t.momenta[a].dot(t.momenta[a]) + masses_[a] * masses_[a]);
            if (!(w[a] > 0.0))
                throw std::invalid_argument("NParticleWaveFunction: zero-frequency factor");
            amp *= norm_ == Normalization::KleinGordon ? 1.0 / std::sqrt(2.0 * w[a] * V)
                                                       : 1.0 / std::sqrt(V);
        }
        amps_.push_back(amp);
        omegas_.push_back(std::move(w));
    }
}

int NParticleWaveFunction::term_frequency_sign(std::size_t r, int a) const {
    const auto& fs = terms_[r].frequency_signs;
    return fs.empty() ? 1 : fs[a];
}

Complex NParticleWaveFunction::value(std::span<const FourVector> points) const {
    const int n = particle_count();
    if (static_cast<int>(points.size()) != n)
        throw std::invalid_argument("NParticleWaveFunction: wrong number of points");
    Complex v{0.0, 0.0};
    for (std::size_t r = 0; r < terms_.size(); ++r) {
        double phase = 0.0;
        for (int a = 0; a < n; ++a) {
            const Vec3 pos{points[a].x, points[a].y, points[a].z};
            phase += terms_[r].momenta[a].dot(pos) -
                     term_frequency_sign(r, a) * omegas_[r][a] * points[a].t;
        }
        v += amps_[r] * std::polar(1.0, phase);
    }
    return v;
}

NParticleCurrent::NParticleCurrent(NParticleWaveFunction psi, FoliationField foliation)
    : psi_(std::move(psi)), foliation_(std::move(foliation)) {
    if (psi_.normalization() != Normalization::KleinGordon)
        throw std::invalid_argument(
            "NParticleCurrent: requires an invariant-normalized wave function");
    const int n = psi_.particle_count();
    const auto& terms = psi_.terms();
    for (std::size_t r = 0; r < terms.size(); ++r) {
        for (std::size_t s = r; s < terms.size(); ++s) {
            PairData p;
            p.diagonal = (r == s);
            const Complex w = p.diagonal
                                  ? Complex{std::norm(psi_.term_amplitude(r)), 0.0}
                                  : 2.0 * std::conj(psi_.term_amplitude(r)) * psi_.term_amplitude(s);
            p.w_re = w.real();
            p.w_im = w.imag();
            p.K.resize(n);
            p.dk.resize(n);
            p.domega.resize(n);
            for (int a = 0; a < n; ++a) {
                const double wr = psi_.term_frequency_sign(r, a) * psi_.term_omega(r, a);
                const double ws = psi_.term_frequency_sign(s, a) * psi_.term_omega(s, a);
                const Vec3& kr = terms[r].momenta[a];
                const Vec3& ks = terms[s].momenta[a];
                p.K[a] = {wr + ws, kr.x + ks.x, kr.y + ks.y, kr.z + ks.z};
                p.dk[a] = ks - kr;
                p.domega[a] = ws - wr;
            }
            pairs_.push_back(std::move(p));
        }
    }
}

void NParticleCurrent::check_arity(std::span<const FourVector> points) const {
    if (static_cast<int>(points.size()) != psi_.particle_count())
        throw std::invalid_argument("NParticleCurrent: wrong number of points");
}

double NParticleCurrent::leaf_time_spread(std::span<const FourVector> points) const {
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& x : points) {
        const double tau = foliation_.leaf_time(x);
        if (first) {
            lo = hi = tau;
            first = false;
        } else {
            lo = std::min(lo, tau);
            hi = std::max(hi, tau);
        }
    }
    return hi - lo;
}

void NParticleCurrent::require_common_leaf(std::span<const FourVector> points,
                                           const char* what) const {
    if (leaf_time_spread(points) > leaf_tolerance)
        throw std::invalid_argument(std::string(what) + ": points not on a common foliation leaf");
}

namespace {

/// Re(w e^{i phase}) with w = w_re + i w_im.
inline double pair_weight(double w_re, double w_im, double phase) {
    return w_re * std::cos(phase) - w_im * std::sin(phase);
}

}  // namespace

std::vector<double> NParticleCurrent::n_vector_current(std::span<const FourVector> points) const {
    check_arity(points);
    require_common_leaf(points, "n_vector_current");
    const int n = psi_.particle_count();
    const std::size_t size = std::size_t{1} << (2 * n);  // 4^n
    std::vector<double> tensor(size, 0.0);
    for (const auto& p : pairs_) {
        double phase = 0.0;
        for (int a = 0; a < n; ++a) {
            const Vec3 pos{points[a].x, points[a].y, points[a].z};
            phase += p.dk[a].dot(pos) - p.domega[a] * points[a].t;
        }
        const double w = pair_weight(p.w_re, p.w_im, phase);
        for (std::size_t idx = 0; idx < size; ++idx) {
            double prod = w;
            std::size_t rest = idx;
            for (int a = n - 1; a >= 0; --a) {
                const int mu = static_cast<int>(rest & 3);
                rest >>= 2;
                // covariant component: lower the spatial entries
                const double comp = mu == 0 ? p.K[a].t : -p.K[a][mu];
                prod *= comp;
            }
            tensor[idx] += prod;
        }
    }
    return tensor;
}

FourVector NParticleCurrent::contracted_particle_current(
    int a, std::span<const FourVector> points) const {
    check_arity(points);
    require_common_leaf(points, "contracted_particle_current");
    const int n = psi_.particle_count();
    if (a < 0 || a >= n) throw std::invalid_argument("contracted_particle_current: bad index");
    FourVector v{};
    for (const auto& p : pairs_) {
        double phase = 0.0;
        double contr = 1.0;
        for (int b = 0; b < n; ++b) {
            const Vec3 pos{points[b].x, points[b].y, points[b].z};
            phase += p.dk[b].dot(pos) - p.domega[b] * points[b].t;
            if (b != a) contr *= minkowski_dot(foliation_.normal(points[b]), p.K[b]);
        }
        v += p.K[a] * (pair_weight(p.w_re, p.w_im, phase) * contr);
    }
    return v;
}

FourVector NParticleCurrent::particle_current(int a, std::span<const FourVector> points) const {
    check_arity(points);
    const int n = psi_.particle_count();
    if (a < 0 || a >= n) throw std::invalid_argument("particle_current: bad index");
    FourVector v{};
    for (const auto& p : pairs_) {
        double phase = 0.0;
        for (int b = 0; b < n; ++b) {
            const Vec3 pos{points[b].x, points[b].y, points[b].z};
            phase += p.dk[b].dot(pos) - p.domega[b] * points[b].t;
        }
        v += p.K[a] * pair_weight(p.w_re, p.w_im, phase);
    }
    return v;
}

double NParticleCurrent::n_particle_density(std::span<const FourVector> points) const {
    check_arity(points);
    require_common_leaf(points, "n_particle_density");
    const int n = psi_.particle_count();
    double total = 0.0;
    for (const auto& p : pairs_) {
        double phase = 0.0;
        double contr = 1.0;
        for (int b = 0; b < n; ++b) {
            const Vec3 pos{points[b].x, points[b].y, points[b].z};
            phase += p.dk[b].dot(pos) - p.domega[b] * points[b].t;
            contr *= minkowski_dot(foliation_.normal(points[b]), p.K[b]);
        }
        total += pair_weight(p.w_re, p.w_im, phase) * contr;
    }
    return std::abs(total);
}

double NParticleCurrent::flux_norm_bound() const {
    const int n = psi_.particle_count();
    double bound = 0.0;
    for (const auto& p : pairs_) {
        const double w = std::hypot(p.w_re, p.w_im);
        double worst_slot = 0.0;
        for (int a = 0; a < n; ++a) {
            double prod = p.K[a].euclidean_norm();
            for (int b = 0; b < n; ++b) {
                if (b == a) continue;
                const double nb = foliation_.constant()
                                      ? std::abs(minkowski_dot(foliation_.normal({}), p.K[b]))
                                      : p.K[b].euclidean_norm();
                prod *= nb;
            }
            worst_slot = std::max(worst_slot, prod);
        }
        bound += w * worst_slot;
    }
    return bound;
}

}  // namespace kgflow
