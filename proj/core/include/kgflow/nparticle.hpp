#ifndef KGFLOW_NPARTICLE_HPP
#define KGFLOW_NPARTICLE_HPP

#include <span>
#include <vector>

#include "kgflow/current.hpp"
#include "kgflow/geometry.hpp"
#include "kgflow/wavefunction.hpp"

namespace kgflow {

/// One product term of an n-particle superposition: coefficient times a
/// plane wave per particle slot. Masses live on the wave function (one per
/// slot, shared across terms) so each slot's current stays conserved.
struct ProductTerm {
    Complex c{1.0, 0.0};
    std::vector<Vec3> momenta;               // one per particle
    std::vector<int> frequency_signs;        // empty means all +1
};

/// Finite sum of (optionally symmetrized) products of box plane waves,
///   psi(x_1..x_n) = sum_r c_r prod_a N_{r,a} exp(i(k_{r,a}.x_a - w_{r,a} t_a)).
class NParticleWaveFunction {
  public:
    NParticleWaveFunction(Box box, std::vector<double> masses, std::vector<ProductTerm> terms,
                          Normalization norm = Normalization::KleinGordon);

    int particle_count() const { return static_cast<int>(masses_.size()); }
    const Box& box() const { return box_; }
    const std::vector<double>& masses() const { return masses_; }
    const std::vector<ProductTerm>& terms() const { return terms_; }
    Normalization normalization() const { return norm_; }

    Complex value(std::span<const FourVector> points) const;

    /// Full coefficient of term r (c_r times all per-slot normalizations).
    Complex term_amplitude(std::size_t r) const { return amps_[r]; }
    double term_omega(std::size_t r, int a) const { return omegas_[r][a]; }
    int term_frequency_sign(std::size_t r, int a) const;

  private:
    Box box_;
    std::vector<double> masses_;
    std::vector<ProductTerm> terms_;
    Normalization norm_;
    std::vector<Complex> amps_;
    std::vector<std::vector<double>> omegas_;
};

/// Evaluator for the rank-n current tensor of an n-particle state and its
/// foliation contractions. Tensor components are covariant; the per-particle
/// vectors are returned contravariant, ready for equations of motion.
class NParticleCurrent {
  public:
    NParticleCurrent(NParticleWaveFunction psi, FoliationField foliation);

    int particle_count() const { return psi_.particle_count(); }
    const NParticleWaveFunction& wavefunction() const { return psi_; }
    const FoliationField& foliation() const { return foliation_; }

    /// Covariant rank-n tensor j_{mu_1..mu_n}, row-major, 4^n entries.
    /// Requires all points on one foliation leaf.
    std::vector<double> n_vector_current(std::span<const FourVector> points) const;

    /// All slots except `a` contracted with the foliation normal at their
    /// points; free index raised. Requires points on one leaf.
    FourVector contracted_particle_current(int a, std::span<const FourVector> points) const;

    /// Slot-a bilinear current with no foliation contraction (the covariant
    /// trajectory mode's right-hand side); no leaf requirement.
    FourVector particle_current(int a, std::span<const FourVector> points) const;

    /// |prod_a (sqrt_g3_a N(x_a)) . j| — full contraction, non-negative.
    /// Requires points on one leaf. Flat leaves: metric factors are 1.
    double n_particle_density(std::span<const FourVector> points) const;

    /// Max pairwise leaf-time difference (the common-leaf residual).
    double leaf_time_spread(std::span<const FourVector> points) const;

    /// Tolerance used by the common-leaf precondition.
    static constexpr double leaf_tolerance = 1e-9;

    /// Upper bound on the Euclidean norm of any contracted/per-particle
    /// current (constant foliations; rough scale otherwise). Used to set
    /// stagnation thresholds.
    double flux_norm_bound() const;

  private:
    struct PairData {
        double w_re, w_im;                 // 2 conj(A_r) A_s (or |A_r|^2, w_im=0, halved form)
        bool diagonal;
        std::vector<FourVector> K;         // per slot, contravariant
        std::vector<Vec3> dk;              // k_s - k_r per slot
        std::vector<double> domega;        // w_s - w_r per slot (signed)
    };

    void require_common_leaf(std::span<const FourVector> points, const char* what) const;
    void check_arity(std::span<const FourVector> points) const;

    NParticleWaveFunction psi_;
    FoliationField foliation_;
    std::vector<PairData> pairs_;
};

}  // namespace kgflow

#endif
