#ifndef KGFLOW_TRAJECTORY_HPP
#define KGFLOW_TRAJECTORY_HPP

#include <span>
#include <vector>

#include "kgflow/current.hpp"
#include "kgflow/geometry.hpp"
#include "kgflow/nparticle.hpp"
#include "kgflow/ode.hpp"

namespace kgflow {

enum class TrajectoryStatus { completed, halted_at_stagnation, left_domain };

enum class EventKind {
    time_reversal,     // j^0 (= dt/ds) changes sign along the curve
    surface_crossing,  // attached when exporting against a query surface
    stagnation_halt,   // ||j|| fell below the stagnation threshold
};

const char* event_kind_name(EventKind k);

struct TrajectoryEvent {
    EventKind kind;
    double s;
    FourVector x;
};

struct TrajectorySample {
    double s;
    FourVector x;
};

/// Retained continuous-extension piece of one accepted integrator step,
/// restricted to [s_lo, s_hi] (truncated at domain exits).
struct DenseStep {
    double s_lo, s_hi;
    double s0, h;  // original step parametrization (h signed)
    int dim;
    std::vector<double> coeff;  // r1..r5 concatenated

    DenseSegment view() const {
        DenseSegment seg;
        seg.s0 = s0;
        seg.h = h;
        seg.dim = dim;
        seg.r1 = coeff.data();
        seg.r2 = coeff.data() + dim;
        seg.r3 = coeff.data() + 2 * dim;
        seg.r4 = coeff.data() + 3 * dim;
        seg.r5 = coeff.data() + 4 * dim;
        return seg;
    }
};

/// Integral curve of the current through one launch point, integrated in the
/// affine parameter both backward and forward from s = 0.
struct Trajectory {
    FourVector launch_point{};
    std::vector<TrajectorySample> samples;  // ascending s
    std::vector<TrajectoryEvent> events;    // ascending s
    std::vector<DenseStep> steps;           // ascending s_lo
    TrajectoryStatus forward_status = TrajectoryStatus::completed;
    TrajectoryStatus backward_status = TrajectoryStatus::completed;
    double stagnation_epsilon = 0.0;  // resolved ||j|| halt threshold
    double launch_density = 0.0;      // |n.j| at the launch point (set by samplers)

    /// Worst of the two directional outcomes.
    TrajectoryStatus status() const;
    double s_min() const { return samples.empty() ? 0.0 : samples.front().s; }
    double s_max() const { return samples.empty() ? 0.0 : samples.back().s; }
    /// Dense-output position; s clamped to the integrated range.
    FourVector position(double s) const;
};

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 0.25;
    double max_total_s = 500.0;        // integrate s in [-max_total_s, +max_total_s]
    double stagnation_factor = 1e-12;  // epsilon_j = factor * flux bound
    double t_min = -100.0;
    double t_max = 100.0;
    bool detect_time_reversal = true;
    int sign_scan_points = 8;  // subsamples per step for sign-change detection
    long max_steps = 2000000;
};

Trajectory integrate(const CurrentField& cf, const FourVector& x0, const IntegratorConfig& cfg);

enum class NParticleMode { foliated, covariant };

/// Coupled 4n-dimensional integration; one Trajectory per particle, sliced
/// from the joint solution (samples and events share s values across slots).
/// Foliated mode requires the launch configuration on one leaf and keeps it
/// there (the contraction gives every particle the same d tau/ds).
std::vector<Trajectory> integrate_n_particle(const NParticleCurrent& npc,
                                             std::span<const FourVector> x0s, NParticleMode mode,
                                             const IntegratorConfig& cfg);

enum class CrossingOrientation { future_ward, past_ward };

struct SurfaceCrossing {
    double s;
    FourVector x;
    CrossingOrientation orientation;  // sign of n . dx/ds at the crossing
    bool grazing;                     // |n . dx/ds| below the stagnation threshold
};

/// All transversal intersections of the curve with the surface plane,
/// located on the dense output by bracketed bisection, ascending in s.
/// Duplicate roots at step boundaries are merged. For surfaces with bounded
/// patches the point must fall inside a patch; constant-time planes match
/// every spatial position (the box is periodic).
std::vector<SurfaceCrossing> crossings(const Trajectory& tr, const Hypersurface& h);

/// Root scan of n.(u(s) - base) over one live segment clipped to
/// [s_lo, s_hi]; appends (s, x, n.dx/ds) triples. Shared by crossings() and
/// the streaming congruence scan.
struct PlaneCrossing {
    double s;
    FourVector x;
    double normal_velocity;
};
void scan_plane_crossings(const DenseSegment& seg, double s_lo, double s_hi,
                          const FourVector& normal, const FourVector& base,
                          std::vector<PlaneCrossing>& out);

}  // namespace kgflow

#endif
