#ifndef KGFLOW_INTERFERENCE_HPP
#define KGFLOW_INTERFERENCE_HPP

#include <complex>
#include <vector>

#include "kgflow/geometry.hpp"
#include "kgflow/wavefunction.hpp"

namespace kgflow {

/// Spatial envelope of one frequency branch, held as a truncated lattice
/// mode sum so every density below has a closed form.
enum class ProfileKind {
    standing_shell,     // two on-shell modes +-k: exact solution, exact decompositions
    gaussian_envelope,  // narrow-band packet around a carrier (approximate branch frequency)
};

struct ProfileSpec {
    ProfileKind kind = ProfileKind::standing_shell;
    Vec3 carrier{1.0, 0.0, 0.0};  // lattice momentum of the branch
    double phase = 0.0;           // standing-wave offset
    double width = 0.0;           // momentum-space standard deviation (gaussian kind)
    Vec3 center{0.0, 0.0, 0.0};   // envelope center (gaussian kind)
};

/// Superposition of two positive-frequency branches
///   psi = 2^(-1/2) [ phi_1(x) e^(-i w1 t) / sqrt(2 w1) + phi_2(x) e^(-i w2 t) / sqrt(2 w2) ],
/// with unit-normalized profiles phi_a. The conventional density splits as
/// rho = C + I while the invariant time component carries the interference
/// term amplified: j_0 = C + alpha I, alpha = (w1+w2) / (2 sqrt(w1 w2)).
/// Branch frequencies derive from the carriers: w_a = sqrt(|k_a|^2 + m^2).
class TwoFrequencyScenario {
  public:
    TwoFrequencyScenario(Box box, double mass, ProfileSpec p1, ProfileSpec p2);

    const Box& box() const { return box_; }
    double mass() const { return mass_; }
    double omega1() const { return omega_[0]; }
    double omega2() const { return omega_[1]; }
    double alpha() const { return alpha_; }
    double eta() const { return omega_[1] / omega_[0]; }
    double beat_period() const;  // 2 pi / |w1 - w2|, infinity when equal

    std::complex<double> profile(int branch, const Vec3& x) const;  // branch 0 or 1
    /// Normalization defect of a profile: |integral of |phi_a|^2 - 1|.
    double profile_norm_error(int branch) const;

    /// Time dependence at a fixed point collapses to
    ///   I(x, t) = re cos((w1 - w2) t) + im sin((w1 - w2) t),
    /// so repeated sampling in t reuses one profile evaluation.
    struct Terms {
        double classical;  // C(x)
        double re, im;     // phi_1 phi_2* decomposed
    };
    Terms terms(const Vec3& x) const;
    double interference(const Terms& tm, double t) const;

    double classical_density(const Vec3& x) const;              // C(x)
    double interference(const Vec3& x, double t) const;         // I(x, t)
    double conventional_density(const Vec3& x, double t) const; // C + I
    double kg_density(const Vec3& x, double t) const;           // C + alpha I

    /// Same densities evaluated directly from the summed field rather than
    /// the decomposition (oracle for the decomposition identities).
    double conventional_density_direct(const Vec3& x, double t) const;  // |phi(x,t)|^2
    double kg_density_direct(const Vec3& x, double t) const;  // -2 Im(psi* dpsi/dt)

    /// Exact invariant-normalized mode sum of the same state. Only the
    /// standing_shell kind is exactly on shell; other kinds throw.
    WaveFunction to_wavefunction() const;

  private:
    struct Coefficient {
        Vec3 k;
        std::complex<double> c;
    };
    Box box_;
    double mass_;
    double omega_[2];
    double alpha_;
    ProfileKind kind_[2];
    std::array<std::vector<Coefficient>, 2> coeff_;

    std::complex<double> eval(int branch, const Vec3& x) const;
};

enum class DensityKind { conventional, kg, abs_kg };

/// Midpoint time average of the chosen density over [0, T]. Resolution
/// scales with the number of beat periods covered.
double time_average(const TwoFrequencyScenario& sc, DensityKind kind, const Vec3& x, double T,
                    int points_per_beat = 64);

struct DeviationMap {
    std::vector<double> x;        // grid along the first box axis
    std::vector<double> abs_kg_avg;
    std::vector<double> rho_avg;
    std::vector<double> classical;
    std::vector<double> deviation;  // abs_kg_avg - rho_avg (both settle to C)
    double correlation_length = 0.0;  // autocorrelation half-height scale (doubled)
    double expected_scale = 0.0;      // 1 / |w1 - w2|; 0 when w1 = w2
};

/// Time-averaged observable difference between |j_0| and rho on a spatial
/// grid, with its spatial correlation scale. The grid must resolve the
/// expected deviation scale by at least a factor 8.
DeviationMap deviation_map(const TwoFrequencyScenario& sc, int grid_points, double T,
                           int workers = 1);

struct WashoutFit {
    std::vector<double> window;  // averaging windows T_j (envelope maxima)
    std::vector<double> error;   // |<j_0>_T - C| at the probe point
    double slope = 0.0;          // log-log decay rate (expected: -1)
};

/// Convergence of the time-averaged invariant density to the classical
/// profile as the window grows, probed at windows where the residual
/// envelope peaks so the decay law is clean.
WashoutFit washout_convergence(const TwoFrequencyScenario& sc, const Vec3& x, int decades = 2,
                               int points = 9);

}  // namespace kgflow

#endif
