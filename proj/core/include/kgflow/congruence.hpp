#ifndef KGFLOW_CONGRUENCE_HPP
#define KGFLOW_CONGRUENCE_HPP

#include <cstdint>
#include <vector>

#include "kgflow/current.hpp"
#include "kgflow/geometry.hpp"
#include "kgflow/trajectory.hpp"

namespace kgflow {

enum class SamplerKind { weighted_grid, rejection_monte_carlo };

struct CongruenceConfig {
    std::size_t samples = 10000;
    SamplerKind sampler = SamplerKind::rejection_monte_carlo;
    std::uint64_t seed = 1;
    IntegratorConfig integrator{};
    int batches = 32;                          // batch-means error bars
    std::size_t max_crossing_records = 200000; // retained for export
    int mass_quadrature_points = 1 << 14;      // surface-mass integrals
};

struct LaunchPoint {
    FourVector x;
    double density;  // p-tilde at x
    double weight;   // probability mass carried before multiplicity correction
};

/// Family of integral curves seeded on a spacelike surface with density
/// p-tilde = |j-tilde|. Launch points are stored; the curves themselves are
/// integrated on demand (they are cheap to recompute and expensive to keep).
///
/// Sampling the launch plane picks a flux tube with probability proportional
/// to (multiplicity on that plane) x (tube mass), so per-curve estimators
/// divide each weight by the curve's launch-plane multiplicity m0; the
/// reports below apply that correction.
class Congruence {
  public:
    Congruence(CurrentField cf, Hypersurface launch_surface, CongruenceConfig cfg);

    const CurrentField& field() const { return cf_; }
    const Hypersurface& launch_surface() const { return launch_; }
    const CongruenceConfig& config() const { return cfg_; }
    const std::vector<LaunchPoint>& launch_points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    /// Integral of p-tilde over the launch surface.
    double total_mass() const { return total_mass_; }

    /// Integrates the curve through launch point i (with its p-tilde value).
    Trajectory trajectory(std::size_t i) const;

  private:
    CurrentField cf_;
    Hypersurface launch_;
    CongruenceConfig cfg_;
    std::vector<LaunchPoint> points_;
    double total_mass_ = 0.0;
};

/// Integral of p-tilde over a piecewise-planar surface with bounded patches.
double surface_mass(const CurrentField& cf, const Hypersurface& surface, int points_per_dim);

struct CrossingRecord {
    std::size_t trajectory;
    double s;
    FourVector x;
    int orientation;  // +1 future-ward, -1 past-ward
    bool grazing;
};

struct CrossingReport {
    std::size_t trajectories = 0;
    double launch_mass = 0.0;  // integral of p-tilde over the launch surface
    double query_mass = 0.0;   // integral of p-tilde over the query surface
    std::vector<std::size_t> multiplicity_histogram;  // index = crossings per curve
    double signed_flux = 0.0, signed_flux_se = 0.0;
    double unsigned_flux = 0.0, unsigned_flux_se = 0.0;
    double first_crossing_mass = 0.0, first_crossing_mass_se = 0.0;
    double missed_mass = 0.0;  // weight of curves that never meet the surface
    std::size_t never_crossing = 0;
    std::size_t grazing_crossings = 0;
    std::size_t stagnation_halts = 0;
    std::size_t domain_exits = 0;
    std::vector<CrossingRecord> records;  // capped at max_crossing_records
};

/// Multiplicity and flux accounting of the whole family against a query
/// surface. Signed flux estimates the conserved total (1 for a Cauchy plane
/// inside the domain); unsigned flux estimates the p-tilde integral, which
/// exceeds 1 when curves fold through the plane.
CrossingReport crossing_report(const Congruence& c, const Hypersurface& query, int workers);

enum class SurfaceStrategy { first_crossing_selection, connected_constant_sign_patches };

struct SignRegion {
    double lo = 0.0, hi = 0.0;  // x-interval on the reference plane (box cell)
    int sign = 0;               // sign of n.j on the region
    double quadrature_mass = 0.0;      // integral of p-tilde over the region
    double mc_unsigned_mass = 0.0;     // corrected weight x crossings in region
    double mc_signed_mass = 0.0;       // corrected weight x signed crossings
    double first_crossing_mass = 0.0;  // weight of curves whose first crossing lands here
    std::size_t recrossings = 0;       // curves meeting this region more than once
};

struct CompleteSurfaceResult {
    SurfaceStrategy strategy{};
    double coverage_mass = 0.0, coverage_mass_se = 0.0;  // weight of curves kept
    double selected_mass_sum = 0.0;  // sum of per-region first-crossing masses
    std::vector<SignRegion> regions;  // constant-sign strategy only
    bool no_recross_certificate = false;
    std::vector<CrossingRecord> selected;  // one first crossing per curve (capped)
};

/// Builds a once-crossed surface from the family against a reference Cauchy
/// plane. first_crossing_selection keeps each curve's earliest crossing (in
/// the affine parameter) and reports the retained mass. The constant-sign
/// strategy partitions the plane into maximal intervals of constant sign of
/// n.j (one-dimensional boxes), reports per-region masses, and certifies
/// empirically that no sampled curve meets a region twice.
CompleteSurfaceResult complete_surface(const Congruence& c, SurfaceStrategy strategy,
                                       const Hypersurface& reference, int workers);

}  // namespace kgflow

#endif
