#include "kgflow/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace kgflow {

namespace {

constexpr double kEventSTolerance = 1e-11;   // bisection width in s
constexpr double kDuplicateSpacing = 1e-9;   // merge roots closer than this

template <class F>
double bisect_root(F&& f, double a, double b, double fa, double fb) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    for (int it = 0; it < 200 && std::abs(b - a) > kEventSTolerance; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return m;
        if ((fa < 0.0) != (fm < 0.0)) {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    return 0.5 * (a + b);
}

FourVector slot_vector(const double* y, int a) {
    return {y[4 * a + 0], y[4 * a + 1], y[4 * a + 2], y[4 * a + 3]};
}

/// Scratch state threaded through one direction of integration.
struct DirectionRun {
    std::vector<TrajectorySample> samples;  // flat joint states, one per accepted step end
    std::vector<std::vector<double>> states;
    std::vector<std::pair<int, TrajectoryEvent>> events;  // (slot, event)
    std::vector<DenseStep> steps;
    TrajectoryStatus status = TrajectoryStatus::completed;
};

/// Integrate one direction of the joint system, recording dense steps,
/// locating per-slot sign changes of dt/ds, truncating at the time window,
/// and halting on stagnation.
template <class Rhs>
DirectionRun run_direction(int dim, Rhs&& rhs, const std::vector<double>& y0, double s_target,
                           const IntegratorConfig& cfg, double eps_j) {
    const int slots = dim / 4;
    DirectionRun out;

    OdeOptions opt;
    opt.rel_tol = cfg.rel_tol;
    opt.abs_tol = cfg.abs_tol;
    opt.max_step = cfg.max_step;
    opt.max_steps = cfg.max_steps;

    std::vector<double> u(dim), du(dim);
    std::vector<double> f_prev(slots), f_here(slots);

    auto eval_state = [&](const DenseSegment& seg, double s) { seg.eval(s, u.data()); };

    const OdeStatus ode_status = integrate_dp54(
        dim, rhs, 0.0, y0, s_target, opt, [&](const DenseSegment& seg) -> bool {
            const double s_begin = seg.s0;
            double s_stop = seg.s_end();
            bool exited = false;

            // Earliest exit of the time window, scanning in travel order.
            const int K = std::max(2, cfg.sign_scan_points);
            double prev_s = s_begin;
            for (int j = 1; j <= K && !exited; ++j) {
                const double sj = s_begin + seg.h * (static_cast<double>(j) / K);
                for (int a = 0; a < slots && !exited; ++a) {
                    for (const double bound : {cfg.t_min, cfg.t_max}) {
                        auto g = [&](double s) {
                            eval_state(seg, s);
                            return u[4 * a] - bound;
                        };
                        const double g_prev = g(prev_s);
                        const double g_here = g(sj);
                        if ((g_prev < 0.0) != (g_here < 0.0)) {
                            s_stop = bisect_root(g, prev_s, sj, g_prev, g_here);
                            exited = true;
                            break;
                        }
                    }
                }
                prev_s = sj;
            }

            DenseStep step;
            step.s0 = seg.s0;
            step.h = seg.h;
            step.dim = dim;
            step.s_lo = std::min(s_begin, s_stop);
            step.s_hi = std::max(s_begin, s_stop);
            step.coeff.resize(5 * dim);
            std::copy(seg.r1, seg.r1 + dim, step.coeff.begin());
            std::copy(seg.r2, seg.r2 + dim, step.coeff.begin() + dim);
            std::copy(seg.r3, seg.r3 + dim, step.coeff.begin() + 2 * dim);
            std::copy(seg.r4, seg.r4 + dim, step.coeff.begin() + 3 * dim);
            std::copy(seg.r5, seg.r5 + dim, step.coeff.begin() + 4 * dim);
            out.steps.push_back(std::move(step));

            // Sign changes of dt/ds per slot, via the exact field along the
            // dense output.
            if (cfg.detect_time_reversal) {
                auto slot_tdot = [&](double s, int a) {
                    eval_state(seg, s);
                    rhs(s, u.data(), du.data());
                    return du[4 * a];
                };
                double sa = s_begin;
                for (int a = 0; a < slots; ++a) f_prev[a] = slot_tdot(sa, a);
                for (int j = 1; j <= K; ++j) {
                    double sb = s_begin + (s_stop - s_begin) * (static_cast<double>(j) / K);
                    for (int a = 0; a < slots; ++a) f_here[a] = slot_tdot(sb, a);
                    for (int a = 0; a < slots; ++a) {
                        if ((f_prev[a] < 0.0) != (f_here[a] < 0.0)) {
                            auto f = [&](double s) { return slot_tdot(s, a); };
                            const double sr = bisect_root(f, sa, sb, f_prev[a], f_here[a]);
                            eval_state(seg, sr);
                            out.events.push_back(
                                {a, {EventKind::time_reversal, sr, slot_vector(u.data(), a)}});
                        }
                        f_prev[a] = f_here[a];
                    }
                    sa = sb;
                }
            }

            // State at the (possibly truncated) end of the step.
            std::vector<double> y_end(dim);
            if (exited) {
                seg.eval(s_stop, y_end.data());
            } else {
                std::copy(seg.y1, seg.y1 + dim, y_end.begin());
            }
            out.samples.push_back({s_stop, slot_vector(y_end.data(), 0)});
            out.states.push_back(y_end);

            if (exited) {
                out.status = TrajectoryStatus::left_domain;
                return false;
            }

            rhs(s_stop, y_end.data(), du.data());
            double jn = 0.0;
            for (int i = 0; i < dim; ++i) jn += du[i] * du[i];
            if (std::sqrt(jn) < eps_j) {
                out.events.push_back(
                    {-1, {EventKind::stagnation_halt, s_stop, slot_vector(y_end.data(), 0)}});
                out.status = TrajectoryStatus::halted_at_stagnation;
                return false;
            }
            return true;
        });

    if (ode_status == OdeStatus::step_underflow) {
        out.status = TrajectoryStatus::halted_at_stagnation;
        if (!out.states.empty())
            out.events.push_back({-1,
                                  {EventKind::stagnation_halt, out.samples.back().s,
                                   slot_vector(out.states.back().data(), 0)}});
    }
    return out;
}

}  // namespace

const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::time_reversal: return "time_reversal";
        case EventKind::surface_crossing: return "surface_crossing";
        case EventKind::stagnation_halt: return "stagnation_halt";
    }
    return "unknown";
}

TrajectoryStatus Trajectory::status() const {
    if (forward_status == TrajectoryStatus::halted_at_stagnation ||
        backward_status == TrajectoryStatus::halted_at_stagnation)
        return TrajectoryStatus::halted_at_stagnation;
    if (forward_status == TrajectoryStatus::left_domain ||
        backward_status == TrajectoryStatus::left_domain)
        return TrajectoryStatus::left_domain;
    return TrajectoryStatus::completed;
}

FourVector Trajectory::position(double s) const {
    if (steps.empty()) return launch_point;
    if (s <= steps.front().s_lo) s = steps.front().s_lo;
    if (s >= steps.back().s_hi) s = steps.back().s_hi;
    auto it = std::upper_bound(steps.begin(), steps.end(), s,
                               [](double v, const DenseStep& st) { return v < st.s_lo; });
    if (it != steps.begin()) --it;
    double y[4];
    it->view().eval(s, y);
    return {y[0], y[1], y[2], y[3]};
}

namespace {

/// Merge a direction run into per-slot trajectories (slot count = dim/4).
void assemble(std::vector<Trajectory>& trajs, const std::vector<FourVector>& x0s,
              const DirectionRun& backward, const DirectionRun& forward, double eps_j) {
    const int slots = static_cast<int>(trajs.size());
    for (int a = 0; a < slots; ++a) {
        auto& tr = trajs[a];
        tr.launch_point = x0s[a];
        tr.stagnation_epsilon = eps_j;
        tr.backward_status = backward.status;
        tr.forward_status = forward.status;

        tr.samples.reserve(backward.samples.size() + forward.samples.size() + 1);
        for (auto it = backward.states.rbegin(); it != backward.states.rend(); ++it) {
            const std::size_t idx = backward.states.size() - 1 - (it - backward.states.rbegin());
            tr.samples.push_back({backward.samples[idx].s, slot_vector(it->data(), a)});
        }
        tr.samples.push_back({0.0, x0s[a]});
        for (std::size_t i = 0; i < forward.states.size(); ++i)
            tr.samples.push_back({forward.samples[i].s, slot_vector(forward.states[i].data(), a)});

        auto slice_steps = [&](const DirectionRun& run) {
            for (const auto& st : run.steps) {
                DenseStep s4;
                s4.s_lo = st.s_lo;
                s4.s_hi = st.s_hi;
                s4.s0 = st.s0;
                s4.h = st.h;
                s4.dim = 4;
                s4.coeff.resize(20);
                for (int r = 0; r < 5; ++r)
                    for (int i = 0; i < 4; ++i)
                        s4.coeff[4 * r + i] = st.coeff[st.dim * r + 4 * a + i];
                tr.steps.push_back(std::move(s4));
            }
        };
        slice_steps(backward);
        slice_steps(forward);
        std::sort(tr.steps.begin(), tr.steps.end(),
                  [](const DenseStep& p, const DenseStep& q) { return p.s_lo < q.s_lo; });

        for (const auto& run : {std::cref(backward), std::cref(forward)}) {
            for (const auto& [slot, ev] : run.get().events)
                if (slot == a || slot < 0) tr.events.push_back(ev);
        }
        std::sort(tr.events.begin(), tr.events.end(),
                  [](const TrajectoryEvent& p, const TrajectoryEvent& q) { return p.s < q.s; });
    }
}

}  // namespace

Trajectory integrate(const CurrentField& cf, const FourVector& x0, const IntegratorConfig& cfg) {
    const double eps_j = cfg.stagnation_factor * cf.flux_norm_bound();
    Trajectory tr;
    tr.launch_point = x0;
    tr.stagnation_epsilon = eps_j;

    const FourVector j0 = cf.current(x0);
    if (j0.euclidean_norm() < eps_j) {
        tr.samples.push_back({0.0, x0});
        tr.events.push_back({EventKind::stagnation_halt, 0.0, x0});
        tr.forward_status = tr.backward_status = TrajectoryStatus::halted_at_stagnation;
        return tr;
    }

    auto rhs = [&cf](double, const double* y, double* dy) {
        const FourVector j = cf.current({y[0], y[1], y[2], y[3]});
        dy[0] = j.t;
        dy[1] = j.x;
        dy[2] = j.y;
        dy[3] = j.z;
    };
    const std::vector<double> y0{x0.t, x0.x, x0.y, x0.z};
    const DirectionRun backward = run_direction(4, rhs, y0, -cfg.max_total_s, cfg, eps_j);
    const DirectionRun forward = run_direction(4, rhs, y0, cfg.max_total_s, cfg, eps_j);

    std::vector<Trajectory> wrap(1);
    assemble(wrap, {x0}, backward, forward, eps_j);
    wrap[0].launch_density = std::abs(j0.t);
    return std::move(wrap[0]);
}

std::vector<Trajectory> integrate_n_particle(const NParticleCurrent& npc,
                                             std::span<const FourVector> x0s, NParticleMode mode,
                                             const IntegratorConfig& cfg) {
    const int n = npc.particle_count();
    if (static_cast<int>(x0s.size()) != n)
        throw std::invalid_argument("integrate_n_particle: wrong number of launch points");
    if (mode == NParticleMode::foliated &&
        npc.leaf_time_spread(x0s) > NParticleCurrent::leaf_tolerance)
        throw std::invalid_argument(
            "integrate_n_particle: foliated mode requires launch points on one leaf");

    const double eps_j = cfg.stagnation_factor * npc.flux_norm_bound();
    const int dim = 4 * n;

    std::vector<FourVector> config(n);
    auto rhs = [&](double, const double* y, double* dy) {
        std::vector<FourVector> pts(n);
        for (int a = 0; a < n; ++a) pts[a] = slot_vector(y, a);
        for (int a = 0; a < n; ++a) {
            const FourVector v = mode == NParticleMode::foliated
                                     ? npc.contracted_particle_current(a, pts)
                                     : npc.particle_current(a, pts);
            dy[4 * a + 0] = v.t;
            dy[4 * a + 1] = v.x;
            dy[4 * a + 2] = v.y;
            dy[4 * a + 3] = v.z;
        }
    };

    std::vector<double> y0(dim);
    for (int a = 0; a < n; ++a) {
        y0[4 * a + 0] = x0s[a].t;
        y0[4 * a + 1] = x0s[a].x;
        y0[4 * a + 2] = x0s[a].y;
        y0[4 * a + 3] = x0s[a].z;
    }

    std::vector<Trajectory> trajs(n);
    std::vector<double> du(dim);
    rhs(0.0, y0.data(), du.data());
    double jn = 0.0;
    for (int i = 0; i < dim; ++i) jn += du[i] * du[i];
    if (std::sqrt(jn) < eps_j) {
        for (int a = 0; a < n; ++a) {
            trajs[a].launch_point = x0s[a];
            trajs[a].stagnation_epsilon = eps_j;
            trajs[a].samples.push_back({0.0, x0s[a]});
            trajs[a].events.push_back({EventKind::stagnation_halt, 0.0, x0s[a]});
            trajs[a].forward_status = trajs[a].backward_status =
                TrajectoryStatus::halted_at_stagnation;
        }
        return trajs;
    }

    const DirectionRun backward = run_direction(dim, rhs, y0, -cfg.max_total_s, cfg, eps_j);
    const DirectionRun forward = run_direction(dim, rhs, y0, cfg.max_total_s, cfg, eps_j);
    assemble(trajs, std::vector<FourVector>(x0s.begin(), x0s.end()), backward, forward, eps_j);
    return trajs;
}

void scan_plane_crossings(const DenseSegment& seg, double s_lo, double s_hi,
                          const FourVector& normal, const FourVector& base,
                          std::vector<PlaneCrossing>& out) {
    if (seg.dim != 4)
        throw std::invalid_argument("scan_plane_crossings: single-particle segments only");
    if (!(s_hi > s_lo)) return;
    constexpr int K = 16;
    const double c0 = minkowski_dot(normal, base);
    double y[4], v[4];
    auto g = [&](double s) {
        seg.eval(s, y);
        return minkowski_dot(normal, {y[0], y[1], y[2], y[3]}) - c0;
    };
    auto record = [&](double s) {
        seg.eval(s, y);
        seg.eval_derivative(s, v);
        out.push_back({s,
                       {y[0], y[1], y[2], y[3]},
                       minkowski_dot(normal, {v[0], v[1], v[2], v[3]})});
    };
    double sa = s_lo;
    double ga = g(sa);
    if (ga == 0.0) record(sa);
    for (int j = 1; j <= K; ++j) {
        const double sb = s_lo + (s_hi - s_lo) * (static_cast<double>(j) / K);
        const double gb = g(sb);
        if (gb == 0.0) {
            record(sb);
        } else if (ga != 0.0 && (ga < 0.0) != (gb < 0.0)) {
            record(bisect_root(g, sa, sb, ga, gb));
        }
        sa = sb;
        ga = gb;
    }
}

std::vector<SurfaceCrossing> crossings(const Trajectory& tr, const Hypersurface& h) {
    std::vector<SurfaceCrossing> result;
    if (tr.steps.empty()) return result;
    const auto& p0 = h.patches()[0];
    std::vector<PlaneCrossing> raw;
    for (const auto& st : tr.steps) {
        if (st.dim != 4)
            throw std::invalid_argument("crossings: trajectory steps must be single-particle");
        scan_plane_crossings(st.view(), st.s_lo, st.s_hi, p0.normal, p0.base, raw);
    }
    std::sort(raw.begin(), raw.end(),
              [](const PlaneCrossing& a, const PlaneCrossing& b) { return a.s < b.s; });

    const bool check_membership = !h.is_constant_time();
    double last_s = -1e300;
    for (const auto& c : raw) {
        if (c.s - last_s < kDuplicateSpacing) continue;
        last_s = c.s;
        if (check_membership) {
            bool inside = false;
            for (const auto& patch : h.patches())
                if (patch.contains(c.x)) {
                    inside = true;
                    break;
                }
            if (!inside) continue;
        }
        SurfaceCrossing sc;
        sc.s = c.s;
        sc.x = c.x;
        sc.orientation = c.normal_velocity >= 0.0 ? CrossingOrientation::future_ward
                                                  : CrossingOrientation::past_ward;
        sc.grazing = std::abs(c.normal_velocity) < tr.stagnation_epsilon;
        result.push_back(sc);
    }
    return result;
}

}  // namespace kgflow
