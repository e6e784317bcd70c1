#ifndef KGFLOW_WAVEFUNCTION_HPP
#define KGFLOW_WAVEFUNCTION_HPP

#include <array>
#include <complex>
#include <vector>

#include "kgflow/geometry.hpp"

namespace kgflow {

using Complex = std::complex<double>;

/// Single plane-wave mode in a periodic box: contributes
///   c * N * exp(i (k.x - eps * omega * t)),  omega = sqrt(k.k + m^2).
/// frequency_sign = -1 gives a negative-frequency component; it is supported
/// so mixed-sign superpositions can be built and their norm behaviour tested,
/// but physical scenarios here use +1 throughout.
struct PlaneWaveMode {
    Vec3 k{};
    double m = 0.0;
    Complex c{1.0, 0.0};
    int frequency_sign = +1;

    double omega() const { return std::sqrt(k.dot(k) + m * m); }
};

/// Overall amplitude convention.
///  - KleinGordon: N_m = 1/sqrt(2 omega_m V); the invariant inner product of
///    the state with itself is sum |c_m|^2.
///  - Conventional: N_m = 1/sqrt(V); the spatial integral of |psi|^2 is
///    sum |c_m|^2 and is time independent only for equal-frequency-sign
///    superpositions of equal |k| or orthogonal lattice modes.
enum class Normalization { KleinGordon, Conventional };

/// k_i = 2 pi n_i / L_i. Modes built this way are exactly periodic on the box
/// and mutually orthogonal under midpoint quadrature.
Vec3 lattice_momentum(const Box& box, std::array<int, 3> n);

class WaveFunction {
  public:
    WaveFunction(Box box, std::vector<PlaneWaveMode> modes,
                 Normalization norm = Normalization::KleinGordon);

    Complex value(const FourVector& x) const;
    /// Partial derivatives (d_t, d_x, d_y, d_z) psi — covariant components.
    std::array<Complex, 4> gradient(const FourVector& x) const;

    const Box& box() const { return box_; }
    Normalization normalization() const { return norm_; }
    const std::vector<PlaneWaveMode>& modes() const { return modes_; }
    double omega(std::size_t m) const { return omegas_[m]; }
    /// c_m * N_m, the full coefficient multiplying the phase factor.
    Complex amplitude(std::size_t m) const { return amps_[m]; }

    /// sum_m |c_m|^2 (exact, no quadrature).
    double coefficient_norm() const;

  private:
    Box box_;
    std::vector<PlaneWaveMode> modes_;
    Normalization norm_;
    std::vector<double> omegas_;
    std::vector<Complex> amps_;
};

/// The equal-weight two-frequency state: coefficients 1/sqrt(2) each,
/// invariant-normalized. Coincident momenta collapse to a single unit mode.
WaveFunction make_two_mode(const Vec3& k1, const Vec3& k2, double m, const Box& box);

/// Invariant inner product  i * Int dS^mu (a* d_mu b - (d_mu a)* b)
/// over a constant-time slice of the box, midpoint quadrature.
Complex kg_inner_product(const WaveFunction& a, const WaveFunction& b, double t,
                         int points_per_dim = 1 << 10);

/// Same integral over a general piecewise-planar surface with finite patch
/// extents; dS^mu = n^mu |g3|^(1/2) dA.
Complex kg_inner_product(const WaveFunction& a, const WaveFunction& b,
                         const Hypersurface& surface, int points_per_dim = 1 << 10);

/// Int |psi|^2 d^dx at fixed t, midpoint quadrature.
double conventional_norm(const WaveFunction& psi, double t, int points_per_dim = 1 << 10);

}  // namespace kgflow

#endif
