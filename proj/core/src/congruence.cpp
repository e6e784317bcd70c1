#include "kgflow/congruence.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>

#include "kgflow/parallel.hpp"
#include "kgflow/random.hpp"
#include "kgflow/stats.hpp"

namespace kgflow {

namespace {

int active_dims(const SurfacePatch& p) {
    int d = 0;
    for (int i = 0; i < 3; ++i)
        if (p.extent[i] > 0.0) ++d;
    return d;
}

double patch_area(const SurfacePatch& p) {
    double a = 1.0;
    for (int i = 0; i < 3; ++i)
        if (p.extent[i] > 0.0) a *= p.extent[i];
    return a;
}

bool bounded(const Hypersurface& h) {
    for (const auto& p : h.patches())
        if (active_dims(p) == 0) return false;
    return true;
}

/// Midpoint iteration over a bounded patch: fn(point, coordinate-area weight).
template <class F>
void for_each_patch_point(const SurfacePatch& patch, int per_axis, F&& fn) {
    const int d = active_dims(patch);
    if (d == 0) throw std::invalid_argument("surface quadrature: unbounded patch");
    int axes[3], na = 0;
    for (int i = 0; i < 3; ++i)
        if (patch.extent[i] > 0.0) axes[na++] = i;
    const int n0 = per_axis;
    const int n1 = na > 1 ? per_axis : 1;
    const int n2 = na > 2 ? per_axis : 1;
    double dA = 1.0;
    for (int a = 0; a < na; ++a) dA *= patch.extent[axes[a]] / per_axis;
    std::array<double, 3> u{0.0, 0.0, 0.0};
    for (int i0 = 0; i0 < n0; ++i0) {
        u[axes[0]] = (i0 + 0.5) * patch.extent[axes[0]] / n0;
        for (int i1 = 0; i1 < n1; ++i1) {
            if (na > 1) u[axes[1]] = (i1 + 0.5) * patch.extent[axes[1]] / n1;
            for (int i2 = 0; i2 < n2; ++i2) {
                if (na > 2) u[axes[2]] = (i2 + 0.5) * patch.extent[axes[2]] / n2;
                fn(patch.point(u, 3), dA);
            }
        }
    }
}

}  // namespace

double surface_mass(const CurrentField& cf, const Hypersurface& surface, int points_per_dim) {
    if (!surface.spacelike())
        throw std::invalid_argument("surface_mass: surface must be spacelike");
    double mass = 0.0;
    for (const auto& patch : surface.patches()) {
        const int d = active_dims(patch);
        const int per_axis =
            d == 0 ? 0
                   : std::max(32, static_cast<int>(std::lround(
                                      std::pow(static_cast<double>(points_per_dim), 1.0 / d))));
        for_each_patch_point(patch, per_axis, [&](const FourVector& x, double dA) {
            mass += cf.density(x, patch.normal, patch.sqrt_g3) * dA;
        });
    }
    return mass;
}

Congruence::Congruence(CurrentField cf, Hypersurface launch_surface, CongruenceConfig cfg)
    : cf_(std::move(cf)), launch_(std::move(launch_surface)), cfg_(cfg) {
    if (cfg_.samples == 0) throw std::invalid_argument("Congruence: samples must be positive");
    if (!launch_.spacelike()) throw std::invalid_argument("Congruence: launch surface not spacelike");
    if (!bounded(launch_))
        throw std::invalid_argument("Congruence: launch surface needs bounded patches");

    total_mass_ = surface_mass(cf_, launch_, cfg_.mass_quadrature_points);
    if (!(total_mass_ > 1e-12))
        throw std::invalid_argument("Congruence: launch surface carries no probability mass");

    const auto& patches = launch_.patches();
    if (cfg_.sampler == SamplerKind::rejection_monte_carlo) {
        // Envelope: per patch, uniform points against the analytic bound of
        // p-tilde. One counter stream per sample index keeps the draw
        // independent of threading and of every other sample.
        std::vector<double> bound(patches.size()), envelope(patches.size() + 1, 0.0);
        for (std::size_t p = 0; p < patches.size(); ++p) {
            bound[p] = cf_.normal_component_bound(patches[p].normal) * patches[p].sqrt_g3;
            envelope[p + 1] = envelope[p] + bound[p] * patch_area(patches[p]);
        }
        if (!(envelope.back() > 0.0))
            throw std::invalid_argument("Congruence: zero density bound on launch surface");

        points_.resize(cfg_.samples);
        const double w = total_mass_ / static_cast<double>(cfg_.samples);
        for (std::size_t i = 0; i < cfg_.samples; ++i) {
            SplitMix64 rng(cfg_.seed, i);
            for (long attempt = 0;; ++attempt) {
                if (attempt > 10000000L)
                    throw std::runtime_error("Congruence: rejection sampling stalled");
                const double pick = rng.uniform(0.0, envelope.back());
                const std::size_t p =
                    std::upper_bound(envelope.begin(), envelope.end(), pick) - envelope.begin() - 1;
                const auto& patch = patches[std::min(p, patches.size() - 1)];
                std::array<double, 3> u{0.0, 0.0, 0.0};
                for (int k = 0; k < 3; ++k)
                    if (patch.extent[k] > 0.0) u[k] = rng.uniform(0.0, patch.extent[k]);
                const FourVector x = patch.point(u, 3);
                const double dens = cf_.density(x, patch.normal, patch.sqrt_g3);
                if (rng.uniform(0.0, bound[std::min(p, patches.size() - 1)]) < dens) {
                    points_[i] = {x, dens, w};
                    break;
                }
            }
        }
    } else {
        // Uniform midpoint grid; the weight carries the local density.
        double area = 0.0;
        for (const auto& patch : patches) area += patch_area(patch);
        for (const auto& patch : patches) {
            const int d = active_dims(patch);
            const double share = static_cast<double>(cfg_.samples) * patch_area(patch) / area;
            const int per_axis =
                std::max(1, static_cast<int>(std::llround(std::pow(share, 1.0 / d))));
            for_each_patch_point(patch, per_axis, [&](const FourVector& x, double dA) {
                const double dens = cf_.density(x, patch.normal, patch.sqrt_g3);
                points_.push_back({x, dens, dens * dA});
            });
        }
    }
}

Trajectory Congruence::trajectory(std::size_t i) const {
    Trajectory tr = integrate(cf_, points_.at(i).x, cfg_.integrator);
    tr.launch_density = points_[i].density;
    return tr;
}

namespace {

struct PerCurve {
    TrajectoryStatus status = TrajectoryStatus::completed;
    int m0 = 1;  // launch-plane multiplicity (>= 1; the launch point itself)
    std::vector<SurfaceCrossing> hits;
};

std::vector<PerCurve> analyze(const Congruence& c, const Hypersurface& query, int workers) {
    std::vector<PerCurve> out(c.size());
    parallel_for(c.size(), workers, [&](std::size_t i) {
        Trajectory tr = c.trajectory(i);
        PerCurve pc;
        pc.status = tr.status();
        pc.m0 = static_cast<int>(std::max<std::size_t>(1, crossings(tr, c.launch_surface()).size()));
        pc.hits = crossings(tr, query);
        out[i] = std::move(pc);
    });
    return out;
}

}  // namespace

CrossingReport crossing_report(const Congruence& c, const Hypersurface& query, int workers) {
    const auto curves = analyze(c, query, workers);
    const std::size_t n = c.size();
    const auto& pts = c.launch_points();

    CrossingReport rep;
    rep.trajectories = n;
    rep.launch_mass = c.total_mass();
    rep.query_mass =
        bounded(query) ? surface_mass(c.field(), query, c.config().mass_quadrature_points) : 0.0;

    std::vector<double> v_signed(n), v_unsigned(n), v_first(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& pc = curves[i];
        const double w = pts[i].weight / pc.m0;
        int net = 0;
        for (const auto& h : pc.hits) {
            net += h.orientation == CrossingOrientation::future_ward ? 1 : -1;
            if (h.grazing) ++rep.grazing_crossings;
            if (rep.records.size() < c.config().max_crossing_records)
                rep.records.push_back({i, h.s, h.x,
                                       h.orientation == CrossingOrientation::future_ward ? 1 : -1,
                                       h.grazing});
        }
        const std::size_t m = pc.hits.size();
        if (rep.multiplicity_histogram.size() <= m) rep.multiplicity_histogram.resize(m + 1, 0);
        ++rep.multiplicity_histogram[m];
        v_signed[i] = w * net;
        v_unsigned[i] = w * static_cast<double>(m);
        v_first[i] = m > 0 ? w : 0.0;
        if (m == 0) {
            ++rep.never_crossing;
            rep.missed_mass += w;
        }
        if (pc.status == TrajectoryStatus::halted_at_stagnation) ++rep.stagnation_halts;
        if (pc.status == TrajectoryStatus::left_domain) ++rep.domain_exits;
    }

    const int B = c.config().batches;
    const BatchStats bs = batch_total(v_signed, B);
    const BatchStats bu = batch_total(v_unsigned, B);
    const BatchStats bf = batch_total(v_first, B);
    rep.signed_flux = bs.total;
    rep.signed_flux_se = bs.se;
    rep.unsigned_flux = bu.total;
    rep.unsigned_flux_se = bu.se;
    rep.first_crossing_mass = bf.total;
    rep.first_crossing_mass_se = bf.se;
    return rep;
}

namespace {

/// Maximal constant-sign intervals of a periodic f over one cell of length
/// L, boundaries refined by bisection. The partition starts at the first
/// root so the region containing the cell seam stays connected; the last
/// interval may extend past L (coordinates taken mod L when evaluating).
std::vector<std::pair<double, double>> sign_intervals(const std::function<double(double)>& f,
                                                      double L, int grid) {
    std::vector<double> roots;
    double ua = 0.0, fa = f(0.0);
    for (int i = 1; i <= grid; ++i) {
        const double ub = L * static_cast<double>(i) / grid;
        const double fb = f(ub);
        if ((fa < 0.0) != (fb < 0.0)) {
            double a = ua, b = ub, va = fa, vb = fb;
            for (int it = 0; it < 100 && b - a > 1e-13 * L; ++it) {
                const double m = 0.5 * (a + b), vm = f(m);
                if ((va < 0.0) != (vm < 0.0)) {
                    b = m;
                    vb = vm;
                } else {
                    a = m;
                    va = vm;
                }
            }
            roots.push_back(0.5 * (a + b));
        }
        ua = ub;
        fa = fb;
    }
    std::vector<std::pair<double, double>> intervals;
    if (roots.empty()) {
        intervals.emplace_back(0.0, L);
        return intervals;
    }
    for (std::size_t i = 0; i + 1 < roots.size(); ++i) intervals.emplace_back(roots[i], roots[i + 1]);
    intervals.emplace_back(roots.back(), roots.front() + L);
    return intervals;
}

}  // namespace

CompleteSurfaceResult complete_surface(const Congruence& c, SurfaceStrategy strategy,
                                       const Hypersurface& reference, int workers) {
    const auto curves = analyze(c, reference, workers);
    const std::size_t n = c.size();
    const auto& pts = c.launch_points();

    CompleteSurfaceResult res;
    res.strategy = strategy;

    std::vector<double> v_cover(n);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = pts[i].weight / curves[i].m0;
        v_cover[i] = curves[i].hits.empty() ? 0.0 : w;
        if (!curves[i].hits.empty()) ++kept;
    }
    if (kept == 0)
        throw std::invalid_argument("complete_surface: no curve reaches the reference plane");
    const BatchStats bc = batch_total(v_cover, c.config().batches);
    res.coverage_mass = bc.total;
    res.coverage_mass_se = bc.se;

    for (std::size_t i = 0; i < n && res.selected.size() < c.config().max_crossing_records; ++i) {
        if (curves[i].hits.empty()) continue;
        const auto& h = curves[i].hits.front();  // crossings ascend in s
        res.selected.push_back({i, h.s, h.x,
                                h.orientation == CrossingOrientation::future_ward ? 1 : -1,
                                h.grazing});
    }

    if (strategy == SurfaceStrategy::first_crossing_selection) {
        res.selected_mass_sum = res.coverage_mass;
        res.no_recross_certificate = true;  // one crossing kept per curve by construction
        return res;
    }

    // Constant-sign partition of a constant-time plane over a 1D box cell.
    const Box& box = c.field().box();
    if (!reference.is_constant_time() || box.dim != 1)
        throw std::invalid_argument(
            "complete_surface: constant-sign partition implemented for constant-time planes "
            "over one-dimensional boxes");
    const double t0 = reference.time();
    const double L = box.lengths[0];
    const auto& cf = c.field();
    auto j0_at = [&](double x) { return cf.time_component({t0, x, 0.0, 0.0}); };
    const auto intervals = sign_intervals(j0_at, L, 4096);

    res.regions.resize(intervals.size());
    for (std::size_t r = 0; r < intervals.size(); ++r) {
        auto& reg = res.regions[r];
        reg.lo = intervals[r].first;
        reg.hi = intervals[r].second;
        reg.sign = j0_at(0.5 * (reg.lo + reg.hi)) >= 0.0 ? 1 : -1;
        const int nq = 4096;
        double mass = 0.0;
        const double h = (reg.hi - reg.lo) / nq;
        for (int q = 0; q < nq; ++q) mass += std::abs(j0_at(reg.lo + (q + 0.5) * h)) * h;
        reg.quadrature_mass = mass;
    }

    const double u0 = res.regions.front().lo;
    auto region_of = [&](const FourVector& x) -> std::size_t {
        double u = std::fmod(x.x, L);
        if (u < 0.0) u += L;
        if (u < u0) u += L;  // the seam-spanning region wraps past L
        for (std::size_t r = 0; r < res.regions.size(); ++r)
            if (u >= res.regions[r].lo && u < res.regions[r].hi) return r;
        return res.regions.size() - 1;
    };

    std::vector<int> visits(res.regions.size());
    res.no_recross_certificate = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (curves[i].hits.empty()) continue;
        const double w = pts[i].weight / curves[i].m0;
        std::fill(visits.begin(), visits.end(), 0);
        for (const auto& h : curves[i].hits) {
            const std::size_t r = region_of(h.x);
            auto& reg = res.regions[r];
            reg.mc_unsigned_mass += w;
            reg.mc_signed_mass += h.orientation == CrossingOrientation::future_ward ? w : -w;
            ++visits[r];
        }
        res.regions[region_of(curves[i].hits.front().x)].first_crossing_mass += w;
        for (std::size_t r = 0; r < visits.size(); ++r)
            if (visits[r] > 1) {
                res.regions[r].recrossings += 1;
                res.no_recross_certificate = false;
            }
    }
    for (const auto& reg : res.regions) res.selected_mass_sum += reg.first_crossing_mass;
    return res;
}

}  // namespace kgflow
