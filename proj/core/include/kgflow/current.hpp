#ifndef KGFLOW_CURRENT_HPP
#define KGFLOW_CURRENT_HPP

#include "kgflow/geometry.hpp"
#include "kgflow/wavefunction.hpp"

namespace kgflow {

/// Conserved current of an invariant-normalized wave function,
///   j_mu = i (psi* d_mu psi - (d_mu psi)* psi),
/// evaluated in closed form from cached mode-pair data. All methods return
/// contravariant components (index raised with the (+,-,-,-) metric).
class CurrentField {
  public:
    explicit CurrentField(WaveFunction psi);

    const WaveFunction& wavefunction() const { return psi_; }
    const Box& box() const { return psi_.box(); }

    FourVector current(const FourVector& x) const;

    /// j^0 with its sign; the time component is not positive definite.
    double time_component(const FourVector& x) const;

    /// n^mu j_mu for a constant direction n (contravariant), no validation.
    double normal_component(const FourVector& x, const FourVector& n) const;

    /// |metric_factor * n^mu j_mu|; n must be unit timelike future-oriented.
    double density(const FourVector& x, const FourVector& n, double metric_factor = 1.0) const;

    /// Upper bound on the Euclidean norm of j anywhere (sum of pair amplitudes).
    double flux_norm_bound() const;
    /// Upper bound on |n^mu j_mu| anywhere, for a constant direction n.
    double normal_component_bound(const FourVector& n) const;

  private:
    struct PairTerm {
        FourVector K;       // contravariant (eps_r w_r + eps_s w_s, k_r + k_s)
        Vec3 dk;            // k_s - k_r
        double domega;      // eps_s w_s - eps_r w_r
        double re, im;      // 2 A_r* A_s (off-diagonal), folded weight
    };

    WaveFunction psi_;
    FourVector j_const_{};          // diagonal (r = s) contribution, x-independent
    std::vector<PairTerm> pairs_;   // r < s cross terms
};

}  // namespace kgflow

#endif
