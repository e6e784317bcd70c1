#include "kgflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "kgflow/congruence.hpp"
#include "kgflow/current.hpp"
#include "kgflow/interference.hpp"
#include "kgflow/io.hpp"
#include "kgflow/nparticle.hpp"
#include "kgflow/stats.hpp"
#include "kgflow/trajectory.hpp"
#include "kgflow/wavefunction.hpp"

namespace kgflow {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void check_keys(const json& j, const char* ctx, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(std::string(ctx) + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) {
                ok = true;
                break;
            }
        if (!ok) fail(std::string(ctx) + ": unknown key \"" + key + "\"");
    }
}

const json& need(const json& j, const char* key, const char* ctx) {
    auto it = j.find(key);
    if (it == j.end()) fail(std::string(ctx) + ": missing key \"" + key + "\"");
    return *it;
}

double as_num(const json& j, const char* ctx) {
    if (!j.is_number()) fail(std::string(ctx) + ": expected a number");
    return j.get<double>();
}

double get_num(const json& j, const char* key, const char* ctx) {
    return as_num(need(j, key, ctx), (std::string(ctx) + "." + key).c_str());
}

double opt_num(const json& j, const char* key, double def, const char* ctx) {
    auto it = j.find(key);
    return it == j.end() ? def : as_num(*it, (std::string(ctx) + "." + key).c_str());
}

long opt_int(const json& j, const char* key, long def, const char* ctx) {
    auto it = j.find(key);
    if (it == j.end()) return def;
    if (!it->is_number_integer()) fail(std::string(ctx) + "." + key + ": expected an integer");
    return it->get<long>();
}

std::string get_str(const json& j, const char* key, const char* ctx) {
    const json& v = need(j, key, ctx);
    if (!v.is_string()) fail(std::string(ctx) + "." + key + ": expected a string");
    return v.get<std::string>();
}

std::string opt_str(const json& j, const char* key, const std::string& def, const char* ctx) {
    auto it = j.find(key);
    if (it == j.end()) return def;
    if (!it->is_string()) fail(std::string(ctx) + "." + key + ": expected a string");
    return it->get<std::string>();
}

Vec3 parse_vec3(const json& arr, const char* ctx) {
    if (!arr.is_array() || arr.size() != 3) fail(std::string(ctx) + ": expected [x, y, z]");
    return {as_num(arr[0], ctx), as_num(arr[1], ctx), as_num(arr[2], ctx)};
}

FourVector parse_point(const json& arr, const char* ctx) {
    if (!arr.is_array() || arr.size() != 4) fail(std::string(ctx) + ": expected [t, x, y, z]");
    return {as_num(arr[0], ctx), as_num(arr[1], ctx), as_num(arr[2], ctx), as_num(arr[3], ctx)};
}

/// A box is given either as {"dim": d, "lengths": [...]} or as the scalar
/// "volume" of a one-dimensional cell.
Box parse_box(const json& owner, const char* ctx) {
    const bool has_box = owner.contains("box"), has_vol = owner.contains("volume");
    if (has_box == has_vol) fail(std::string(ctx) + ": give exactly one of \"box\", \"volume\"");
    try {
        if (has_vol) return Box::line(as_num(owner["volume"], ctx));
        const json& b = owner["box"];
        check_keys(b, (std::string(ctx) + ".box").c_str(), {"dim", "lengths"});
        const long dim = opt_int(b, "dim", 1, ctx);
        const json& lens = need(b, "lengths", (std::string(ctx) + ".box").c_str());
        if (!lens.is_array() || lens.size() != static_cast<std::size_t>(dim))
            fail(std::string(ctx) + ".box.lengths: expected " + std::to_string(dim) + " entries");
        std::array<double, 3> L{1.0, 1.0, 1.0};
        for (long i = 0; i < dim; ++i) L[i] = as_num(lens[i], ctx);
        return Box(static_cast<int>(dim), L);
    } catch (const std::invalid_argument& e) {
        fail(std::string(ctx) + ": " + e.what());
    }
}

WaveFunction parse_wavefunction(const json& j, const char* ctx) {
    check_keys(j, ctx, {"box", "volume", "modes", "normalization_kind"});
    const Box box = parse_box(j, ctx);
    const std::string nk = opt_str(j, "normalization_kind", "klein-gordon", ctx);
    Normalization norm;
    if (nk == "klein-gordon")
        norm = Normalization::KleinGordon;
    else if (nk == "conventional")
        norm = Normalization::Conventional;
    else
        fail(std::string(ctx) + ".normalization_kind: expected \"klein-gordon\" or \"conventional\"");

    const json& ms = need(j, "modes", ctx);
    if (!ms.is_array() || ms.empty()) fail(std::string(ctx) + ".modes: expected a non-empty array");
    std::vector<PlaneWaveMode> modes;
    for (const auto& mj : ms) {
        check_keys(mj, (std::string(ctx) + ".modes[]").c_str(),
                   {"k", "m", "re_c", "im_c", "frequency_sign"});
        PlaneWaveMode m;
        m.k = parse_vec3(need(mj, "k", ctx), (std::string(ctx) + ".modes[].k").c_str());
        m.m = get_num(mj, "m", ctx);
        m.c = {get_num(mj, "re_c", ctx), opt_num(mj, "im_c", 0.0, ctx)};
        m.frequency_sign = static_cast<int>(opt_int(mj, "frequency_sign", 1, ctx));
        modes.push_back(m);
    }
    try {
        return WaveFunction(box, modes, norm);
    } catch (const std::invalid_argument& e) {
        fail(std::string(ctx) + ": " + e.what());
    }
}

IntegratorConfig parse_integrator(const json& owner) {
    IntegratorConfig c;
    auto it = owner.find("integrator");
    if (it == owner.end()) return c;
    const json& j = *it;
    const char* ctx = "integrator";
    check_keys(j, ctx,
               {"rel_tol", "abs_tol", "max_step", "max_total_s", "stagnation_factor", "t_min",
                "t_max", "detect_time_reversal", "sign_scan_points", "max_steps"});
    c.rel_tol = opt_num(j, "rel_tol", c.rel_tol, ctx);
    c.abs_tol = opt_num(j, "abs_tol", c.abs_tol, ctx);
    c.max_step = opt_num(j, "max_step", c.max_step, ctx);
    c.max_total_s = opt_num(j, "max_total_s", c.max_total_s, ctx);
    c.stagnation_factor = opt_num(j, "stagnation_factor", c.stagnation_factor, ctx);
    c.t_min = opt_num(j, "t_min", c.t_min, ctx);
    c.t_max = opt_num(j, "t_max", c.t_max, ctx);
    if (auto d = j.find("detect_time_reversal"); d != j.end()) {
        if (!d->is_boolean()) fail("integrator.detect_time_reversal: expected a boolean");
        c.detect_time_reversal = d->get<bool>();
    }
    c.sign_scan_points = static_cast<int>(opt_int(j, "sign_scan_points", c.sign_scan_points, ctx));
    c.max_steps = opt_int(j, "max_steps", c.max_steps, ctx);
    if (!(c.rel_tol > 0.0) || !(c.abs_tol > 0.0) || !(c.max_step > 0.0) || !(c.max_total_s > 0.0))
        fail("integrator: tolerances, max_step and max_total_s must be positive");
    if (!(c.t_min < c.t_max)) fail("integrator: t_min must be below t_max");
    return c;
}

std::string status_name(TrajectoryStatus st) {
    switch (st) {
        case TrajectoryStatus::completed: return "completed";
        case TrajectoryStatus::halted_at_stagnation: return "halted-at-stagnation";
        case TrajectoryStatus::left_domain: return "left-domain";
    }
    return "unknown";
}

int event_flag(EventKind k) {
    switch (k) {
        case EventKind::time_reversal: return 1;
        case EventKind::surface_crossing: return 2;
        case EventKind::stagnation_halt: return 3;
    }
    return 0;
}

/// Samples and events of one curve merged into CSV rows
/// (trajectory_id, s, t, x, y, z, j0, event_flag).
void append_trajectory_rows(CsvTable& csv, std::size_t id, const Trajectory& tr,
                            const std::function<double(double, const FourVector&)>& j0_of) {
    struct Row {
        double s;
        FourVector x;
        int flag;
    };
    std::vector<Row> rows;
    rows.reserve(tr.samples.size() + tr.events.size());
    for (const auto& sm : tr.samples) rows.push_back({sm.s, sm.x, 0});
    for (const auto& ev : tr.events) rows.push_back({ev.s, ev.x, event_flag(ev.kind)});
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.s < b.s; });
    for (const auto& r : rows) {
        const double vals[] = {static_cast<double>(id), r.s,   r.x.t,
                               r.x.x,                   r.x.y, r.x.z,
                               j0_of(r.s, r.x),         static_cast<double>(r.flag)};
        csv.row(vals);
    }
}

/// Largest deviation of the spatial speed from 1 over the retained dense
/// steps (five probes per step).
double lightspeed_deviation(const Trajectory& tr) {
    double worst = 0.0;
    double v[4];
    for (const auto& st : tr.steps) {
        const DenseSegment seg = st.view();
        for (int q = 0; q <= 4; ++q) {
            const double s = st.s_lo + (st.s_hi - st.s_lo) * q / 4.0;
            seg.eval_derivative(s, v);
            if (v[0] == 0.0) continue;
            const double speed = std::sqrt(v[1] * v[1] + v[2] * v[2] + v[3] * v[3]) / std::abs(v[0]);
            worst = std::max(worst, std::abs(speed - 1.0));
        }
    }
    return worst;
}

/// Extrema of V j^0 on a constant-time slice, golden-refined along the first
/// axis (the modal axis of every bundled state).
std::pair<double, double> field_extrema(const CurrentField& cf, double t, int grid) {
    const Box& box = cf.box();
    const double V = box.volume();
    const double L = box.lengths[0];
    auto f = [&](double x) { return V * cf.time_component({t, x, 0.0, 0.0}); };
    double lo = f(0.0), hi = lo;
    int ilo = 0, ihi = 0;
    for (int i = 1; i < grid; ++i) {
        const double v = f(L * i / grid);
        if (v < lo) {
            lo = v;
            ilo = i;
        }
        if (v > hi) {
            hi = v;
            ihi = i;
        }
    }
    const double h = L / grid;
    const double xmin =
        golden_section_min([&](double x) { return f(x); }, (ilo - 1) * h, (ilo + 1) * h, 1e-13);
    const double xmax =
        golden_section_min([&](double x) { return -f(x); }, (ihi - 1) * h, (ihi + 1) * h, 1e-13);
    return {f(xmin), f(xmax)};
}

std::filesystem::path out_path(const std::string& dir, const char* name) {
    return std::filesystem::path(dir) / name;
}

// ---------------------------------------------------------------------------

void run_single_trajectory(const json& cfg, const std::string& outdir, std::ostream& out) {
    check_keys(cfg, "config",
               {"scenario", "seed", "output_dir", "wavefunction", "launch_points", "integrator",
                "extremum_grid"});
    WaveFunction psi = parse_wavefunction(need(cfg, "wavefunction", "config"), "wavefunction");
    if (psi.normalization() != Normalization::KleinGordon)
        fail("wavefunction: trajectory scenarios need the invariant normalization");
    const IntegratorConfig icfg = parse_integrator(cfg);
    const json& lp = need(cfg, "launch_points", "config");
    if (!lp.is_array() || lp.empty()) fail("launch_points: expected a non-empty array");
    std::vector<FourVector> x0s;
    for (const auto& p : lp) x0s.push_back(parse_point(p, "launch_points[]"));
    const int egrid = static_cast<int>(opt_int(cfg, "extremum_grid", 8192, "config"));

    const CurrentField cf(std::move(psi));
    const auto [vj0_min, vj0_max] = field_extrema(cf, x0s.front().t, egrid);

    CsvTable csv({"trajectory_id", "s", "t", "x", "y", "z", "j0", "event_flag"});
    ojson traj_summaries = ojson::array();
    std::size_t reversals = 0, halts = 0;
    double worst_speed = 0.0, min_j0 = std::numeric_limits<double>::infinity();
    auto j0_of = [&](double, const FourVector& x) { return cf.time_component(x); };
    for (std::size_t i = 0; i < x0s.size(); ++i) {
        const Trajectory tr = integrate(cf, x0s[i], icfg);
        append_trajectory_rows(csv, i, tr, j0_of);
        std::size_t trev = 0;
        for (const auto& ev : tr.events) {
            if (ev.kind == EventKind::time_reversal) ++trev;
            if (ev.kind == EventKind::stagnation_halt) ++halts;
        }
        reversals += trev;
        double mn = std::numeric_limits<double>::infinity();
        for (const auto& sm : tr.samples) mn = std::min(mn, cf.time_component(sm.x));
        min_j0 = std::min(min_j0, mn);
        const double dev = lightspeed_deviation(tr);
        worst_speed = std::max(worst_speed, dev);
        traj_summaries.push_back({{"id", i},
                                  {"status", status_name(tr.status())},
                                  {"s_min", tr.s_min()},
                                  {"s_max", tr.s_max()},
                                  {"time_reversals", trev},
                                  {"min_j0_on_path", mn},
                                  {"lightspeed_deviation", dev}});
    }

    ojson summary{{"scenario", "single-trajectory"},
                  {"volume", cf.box().volume()},
                  {"field", ojson{{"min_Vj0", vj0_min}, {"max_Vj0", vj0_max}}},
                  {"totals", ojson{{"trajectories", x0s.size()},
                                   {"time_reversals", reversals},
                                   {"stagnation_halts", halts},
                                   {"max_lightspeed_deviation", worst_speed},
                                   {"min_j0_on_paths", min_j0}}},
                  {"trajectories", traj_summaries}};
    write_file_atomic(out_path(outdir, "trajectories.csv"), csv.str());
    write_file_atomic(out_path(outdir, "summary.json"), summary.dump(2) + "\n");

    out << "single-trajectory: " << x0s.size() << " curves\n"
        << "  field extrema: min V*j0 = " << format_double(vj0_min)
        << ", max V*j0 = " << format_double(vj0_max) << "\n"
        << "  time reversals: " << reversals << ", stagnation halts: " << halts << "\n"
        << "  max |speed - 1| over curves: " << format_double(worst_speed) << "\n";
}

void run_congruence(const json& cfg, const RunOptions& opts, const std::string& outdir,
                    std::uint64_t seed, std::ostream& out) {
    check_keys(cfg, "config",
               {"scenario", "seed", "output_dir", "wavefunction", "launch", "query", "reference",
                "strategy", "integrator", "batches", "max_records"});
    WaveFunction psi = parse_wavefunction(need(cfg, "wavefunction", "config"), "wavefunction");
    if (psi.normalization() != Normalization::KleinGordon)
        fail("wavefunction: congruence scenarios need the invariant normalization");

    const json& lj = need(cfg, "launch", "config");
    check_keys(lj, "launch", {"time", "samples", "sampler"});
    const double t_launch = get_num(lj, "time", "launch");
    const long samples = opt_int(lj, "samples", 10000, "launch");
    if (samples <= 0) fail("launch.samples: must be positive");
    const std::string sampler_name = opt_str(lj, "sampler", "rejection-monte-carlo", "launch");
    SamplerKind sampler;
    if (sampler_name == "rejection-monte-carlo")
        sampler = SamplerKind::rejection_monte_carlo;
    else if (sampler_name == "weighted-grid")
        sampler = SamplerKind::weighted_grid;
    else
        fail("launch.sampler: expected \"rejection-monte-carlo\" or \"weighted-grid\"");

    const json& qj = need(cfg, "query", "config");
    check_keys(qj, "query", {"time"});
    const double t_query = get_num(qj, "time", "query");
    double t_ref = t_query;
    if (auto rj = cfg.find("reference"); rj != cfg.end()) {
        check_keys(*rj, "reference", {"time"});
        t_ref = get_num(*rj, "time", "reference");
    }

    const Box box = psi.box();
    const std::string strat_name =
        opt_str(cfg, "strategy", box.dim == 1 ? "connected-constant-sign-patches"
                                              : "first-crossing-selection",
                "config");
    SurfaceStrategy strategy;
    if (strat_name == "first-crossing-selection")
        strategy = SurfaceStrategy::first_crossing_selection;
    else if (strat_name == "connected-constant-sign-patches")
        strategy = SurfaceStrategy::connected_constant_sign_patches;
    else
        fail("strategy: expected \"first-crossing-selection\" or "
             "\"connected-constant-sign-patches\"");

    CongruenceConfig ccfg;
    ccfg.samples = static_cast<std::size_t>(samples);
    ccfg.sampler = sampler;
    ccfg.seed = seed;
    ccfg.integrator = parse_integrator(cfg);
    ccfg.batches = static_cast<int>(opt_int(cfg, "batches", ccfg.batches, "config"));
    ccfg.max_crossing_records =
        static_cast<std::size_t>(opt_int(cfg, "max_records", ccfg.max_crossing_records, "config"));

    const CurrentField cf{std::move(psi)};
    Congruence c = [&] {
        try {
            return Congruence(cf, Hypersurface::constant_time(t_launch, box), ccfg);
        } catch (const std::invalid_argument& e) {
            fail(std::string("launch: ") + e.what());
        }
    }();

    const Hypersurface query = Hypersurface::constant_time(t_query, box);
    const Hypersurface reference = Hypersurface::constant_time(t_ref, box);
    const CrossingReport rep = crossing_report(c, query, opts.workers);
    const CompleteSurfaceResult comp = complete_surface(c, strategy, reference, opts.workers);

    // Launch points, crossing records, and the JSON report.
    {
        CsvTable csv({"x", "y", "z", "density", "weight"});
        for (const auto& p : c.launch_points()) {
            const double vals[] = {p.x.x, p.x.y, p.x.z, p.density, p.weight};
            csv.row(vals);
        }
        write_file_atomic(out_path(outdir, "launch.csv"), csv.str());
    }
    {
        CsvTable csv({"trajectory", "s", "t", "x", "y", "z", "x_cell", "orientation", "grazing"});
        for (const auto& r : rep.records) {
            const double vals[] = {static_cast<double>(r.trajectory),
                                   r.s,
                                   r.x.t,
                                   r.x.x,
                                   r.x.y,
                                   r.x.z,
                                   box.wrap(r.x.x, 0),
                                   static_cast<double>(r.orientation),
                                   r.grazing ? 1.0 : 0.0};
            csv.row(vals);
        }
        write_file_atomic(out_path(outdir, "crossings.csv"), csv.str());
    }

    ojson regions = ojson::array();
    for (const auto& r : comp.regions)
        regions.push_back({{"lo", r.lo},
                           {"hi", r.hi},
                           {"sign", r.sign},
                           {"quadrature_mass", r.quadrature_mass},
                           {"mc_signed_mass", r.mc_signed_mass},
                           {"mc_unsigned_mass", r.mc_unsigned_mass},
                           {"first_crossing_mass", r.first_crossing_mass},
                           {"recrossings", r.recrossings}});
    ojson report{
        {"scenario", "congruence-analysis"},
        {"seed", seed},
        {"samples", c.size()},
        {"sampler", sampler_name},
        {"launch", ojson{{"time", t_launch}, {"mass", rep.launch_mass}}},
        {"query", ojson{{"time", t_query}, {"mass", rep.query_mass}}},
        {"flux", ojson{{"signed", rep.signed_flux},
                       {"signed_se", rep.signed_flux_se},
                       {"unsigned", rep.unsigned_flux},
                       {"unsigned_se", rep.unsigned_flux_se},
                       {"first_crossing_mass", rep.first_crossing_mass},
                       {"first_crossing_mass_se", rep.first_crossing_mass_se},
                       {"missed_mass", rep.missed_mass}}},
        {"multiplicity_histogram", rep.multiplicity_histogram},
        {"counts", ojson{{"never_crossing", rep.never_crossing},
                         {"grazing_crossings", rep.grazing_crossings},
                         {"stagnation_halts", rep.stagnation_halts},
                         {"domain_exits", rep.domain_exits}}},
        {"complete_surface", ojson{{"strategy", strat_name},
                                   {"reference_time", t_ref},
                                   {"coverage_mass", comp.coverage_mass},
                                   {"coverage_mass_se", comp.coverage_mass_se},
                                   {"selected_mass_sum", comp.selected_mass_sum},
                                   {"no_recross_certificate", comp.no_recross_certificate},
                                   {"regions", regions}}}};
    write_file_atomic(out_path(outdir, "report.json"), report.dump(2) + "\n");

    out << "congruence-analysis: " << c.size() << " curves from t = " << format_double(t_launch)
        << " against t = " << format_double(t_query) << "\n"
        << "  launch mass (integral of p-tilde): " << format_double(rep.launch_mass) << "\n"
        << "  signed flux:   " << format_double(rep.signed_flux) << " +- "
        << format_double(rep.signed_flux_se) << "\n"
        << "  unsigned flux: " << format_double(rep.unsigned_flux) << " +- "
        << format_double(rep.unsigned_flux_se)
        << "  (quadrature: " << format_double(rep.query_mass) << ")\n";
    out << "  multiplicity histogram:";
    for (std::size_t m = 0; m < rep.multiplicity_histogram.size(); ++m)
        out << " " << m << ":" << rep.multiplicity_histogram[m];
    out << "\n  first-crossing mass: " << format_double(rep.first_crossing_mass) << " +- "
        << format_double(rep.first_crossing_mass_se) << "\n"
        << "  complete surface (" << strat_name
        << "): coverage = " << format_double(comp.coverage_mass)
        << ", regions = " << comp.regions.size()
        << ", no-recross certificate = " << (comp.no_recross_certificate ? "yes" : "no") << "\n";
}

void run_interference(const json& cfg, const RunOptions& opts, const std::string& outdir,
                      std::ostream& out) {
    check_keys(cfg, "config",
               {"scenario", "seed", "output_dir", "two_frequency", "grid_points",
                "window_periods", "washout"});
    const json& tf = need(cfg, "two_frequency", "config");
    check_keys(tf, "two_frequency", {"box", "volume", "mass", "profiles"});
    const Box box = parse_box(tf, "two_frequency");
    const double mass = opt_num(tf, "mass", 0.0, "two_frequency");
    const json& profs = need(tf, "profiles", "two_frequency");
    if (!profs.is_array() || profs.size() != 2)
        fail("two_frequency.profiles: expected exactly two profiles");
    ProfileSpec specs[2];
    for (int b = 0; b < 2; ++b) {
        const json& pj = profs[b];
        check_keys(pj, "profiles[]", {"kind", "carrier", "phase", "width", "center"});
        const std::string kind = opt_str(pj, "kind", "standing-shell", "profiles[]");
        if (kind == "standing-shell")
            specs[b].kind = ProfileKind::standing_shell;
        else if (kind == "gaussian-envelope")
            specs[b].kind = ProfileKind::gaussian_envelope;
        else
            fail("profiles[].kind: expected \"standing-shell\" or \"gaussian-envelope\"");
        specs[b].carrier = parse_vec3(need(pj, "carrier", "profiles[]"), "profiles[].carrier");
        specs[b].phase = opt_num(pj, "phase", 0.0, "profiles[]");
        specs[b].width = opt_num(pj, "width", 0.0, "profiles[]");
        if (pj.contains("center")) specs[b].center = parse_vec3(pj["center"], "profiles[].center");
    }
    const int grid = static_cast<int>(opt_int(cfg, "grid_points", 512, "config"));
    const double periods = opt_num(cfg, "window_periods", 4.25, "config");
    if (!(periods > 0.0)) fail("window_periods: must be positive");

    int wo_decades = 2, wo_points = 9;
    bool wo_enabled = true;
    std::optional<Vec3> wo_probe;
    if (auto wj = cfg.find("washout"); wj != cfg.end()) {
        check_keys(*wj, "washout", {"enabled", "decades", "points", "probe"});
        if (auto e = wj->find("enabled"); e != wj->end()) {
            if (!e->is_boolean()) fail("washout.enabled: expected a boolean");
            wo_enabled = e->get<bool>();
        }
        wo_decades = static_cast<int>(opt_int(*wj, "decades", 2, "washout"));
        wo_points = static_cast<int>(opt_int(*wj, "points", 9, "washout"));
        if (wj->contains("probe")) wo_probe = parse_vec3((*wj)["probe"], "washout.probe");
    }

    const TwoFrequencyScenario sc = [&] {
        try {
            return TwoFrequencyScenario(box, mass, specs[0], specs[1]);
        } catch (const std::invalid_argument& e) {
            fail(std::string("two_frequency: ") + e.what());
        }
    }();

    const double P = sc.beat_period();
    const double T =
        std::isfinite(P) ? periods * P : periods * 2.0 * std::numbers::pi / sc.omega1();
    const DeviationMap map = [&] {
        try {
            return deviation_map(sc, grid, T, opts.workers);
        } catch (const std::invalid_argument& e) {
            fail(std::string("deviation map: ") + e.what());
        }
    }();

    CsvTable csv({"x", "y", "C", "I", "rho", "j0", "abs_j0_avg"});
    for (int i = 0; i < grid; ++i) {
        const Vec3 x{map.x[i], 0.0, 0.0};
        const double I0 = sc.interference(x, 0.0);
        const double vals[] = {map.x[i],          0.0,
                               map.classical[i],  I0,
                               sc.conventional_density(x, 0.0), sc.kg_density(x, 0.0),
                               map.abs_kg_avg[i]};
        csv.row(vals);
    }
    write_file_atomic(out_path(outdir, "grid.csv"), csv.str());

    ojson summary{{"scenario", "interference"},
                  {"omega1", sc.omega1()},
                  {"omega2", sc.omega2()},
                  {"alpha", sc.alpha()},
                  {"eta", sc.eta()},
                  {"window", T},
                  {"correlation_length", map.correlation_length},
                  {"expected_scale", map.expected_scale}};

    if (wo_enabled && std::isfinite(P)) {
        Vec3 probe{0.0, 0.0, 0.0};
        if (wo_probe) {
            probe = *wo_probe;
        } else {
            double best = -1.0;
            for (int i = 0; i < grid; ++i) {
                const Vec3 x{map.x[i], 0.0, 0.0};
                const auto tm = sc.terms(x);
                const double amp = std::hypot(tm.re, tm.im);
                if (amp > best) {
                    best = amp;
                    probe = x;
                }
            }
        }
        const WashoutFit fit = washout_convergence(sc, probe, wo_decades, wo_points);
        CsvTable wcsv({"window", "error"});
        for (std::size_t i = 0; i < fit.window.size(); ++i) {
            const double vals[] = {fit.window[i], fit.error[i]};
            wcsv.row(vals);
        }
        write_file_atomic(out_path(outdir, "washout.csv"), wcsv.str());
        summary["washout"] = ojson{{"probe", {probe.x, probe.y, probe.z}},
                                   {"slope", fit.slope},
                                   {"windows", fit.window.size()}};
    }
    write_file_atomic(out_path(outdir, "summary.json"), summary.dump(2) + "\n");

    out << "interference: omega1 = " << format_double(sc.omega1())
        << ", omega2 = " << format_double(sc.omega2()) << ", alpha = "
        << format_double(sc.alpha()) << "\n"
        << "  deviation correlation length: " << format_double(map.correlation_length)
        << " (expected scale " << format_double(map.expected_scale) << ")\n";
    if (summary.contains("washout"))
        out << "  washout slope: " << format_double(summary["washout"]["slope"].get<double>())
            << " (expected -1)\n";
}

void run_nparticle(const json& cfg, const std::string& outdir, std::ostream& out) {
    check_keys(cfg, "config",
               {"scenario", "seed", "output_dir", "nparticle", "mode", "launch_points",
                "integrator", "foliation_normal"});
    const json& npj = need(cfg, "nparticle", "config");
    check_keys(npj, "nparticle", {"box", "volume", "masses", "terms"});
    const Box box = parse_box(npj, "nparticle");
    const json& mj = need(npj, "masses", "nparticle");
    if (!mj.is_array() || mj.empty()) fail("nparticle.masses: expected a non-empty array");
    std::vector<double> masses;
    for (const auto& v : mj) masses.push_back(as_num(v, "nparticle.masses[]"));
    const std::size_t n = masses.size();

    const json& tj = need(npj, "terms", "nparticle");
    if (!tj.is_array() || tj.empty()) fail("nparticle.terms: expected a non-empty array");
    std::vector<ProductTerm> terms;
    for (const auto& t : tj) {
        check_keys(t, "terms[]", {"re_c", "im_c", "momenta", "frequency_signs"});
        ProductTerm pt;
        pt.c = {get_num(t, "re_c", "terms[]"), opt_num(t, "im_c", 0.0, "terms[]")};
        const json& mm = need(t, "momenta", "terms[]");
        if (!mm.is_array() || mm.size() != n)
            fail("terms[].momenta: expected one momentum per particle");
        for (const auto& k : mm) pt.momenta.push_back(parse_vec3(k, "terms[].momenta[]"));
        if (auto fs = t.find("frequency_signs"); fs != t.end()) {
            if (!fs->is_array() || fs->size() != n)
                fail("terms[].frequency_signs: expected one sign per particle");
            for (const auto& s : *fs)
                pt.frequency_signs.push_back(static_cast<int>(as_num(s, "terms[]")));
        }
        terms.push_back(std::move(pt));
    }

    const std::string mode_name = opt_str(cfg, "mode", "foliated", "config");
    NParticleMode mode;
    if (mode_name == "foliated")
        mode = NParticleMode::foliated;
    else if (mode_name == "covariant")
        mode = NParticleMode::covariant;
    else
        fail("mode: expected \"foliated\" or \"covariant\"");

    FourVector nvec{1.0, 0.0, 0.0, 0.0};
    if (auto fn = cfg.find("foliation_normal"); fn != cfg.end())
        nvec = parse_point(*fn, "foliation_normal");

    const json& lp = need(cfg, "launch_points", "config");
    if (!lp.is_array() || lp.size() != n)
        fail("launch_points: expected one [t, x, y, z] per particle");
    std::vector<FourVector> x0s;
    for (const auto& p : lp) x0s.push_back(parse_point(p, "launch_points[]"));
    const IntegratorConfig icfg = parse_integrator(cfg);

    auto built = [&] {
        try {
            NParticleWaveFunction wf(box, masses, terms, Normalization::KleinGordon);
            return NParticleCurrent(std::move(wf), FoliationField(nvec));
        } catch (const std::invalid_argument& e) {
            fail(std::string("nparticle: ") + e.what());
        }
    }();

    std::vector<Trajectory> trs;
    try {
        trs = integrate_n_particle(built, x0s, mode, icfg);
    } catch (const std::invalid_argument& e) {
        fail(std::string("launch_points: ") + e.what());
    }

    CsvTable csv({"trajectory_id", "s", "t", "x", "y", "z", "j0", "event_flag"});
    ojson parts = ojson::array();
    double max_drift = 0.0;
    for (std::size_t a = 0; a < trs.size(); ++a) {
        const auto& tr = trs[a];
        // j0 column: the particle's own guidance current (contracted in
        // foliated mode) with the other particles placed at the same s.
        auto j0_of = [&](double s, const FourVector& xa) {
            std::vector<FourVector> xs(trs.size());
            for (std::size_t b = 0; b < trs.size(); ++b)
                xs[b] = (b == a) ? xa : trs[b].position(s);
            const FourVector j = mode == NParticleMode::foliated
                                     ? built.contracted_particle_current(static_cast<int>(a), xs)
                                     : built.particle_current(static_cast<int>(a), xs);
            return j.t;
        };
        std::size_t trev = 0;
        for (const auto& ev : tr.events)
            if (ev.kind == EventKind::time_reversal) ++trev;
        parts.push_back({{"id", a},
                         {"status", status_name(tr.status())},
                         {"s_min", tr.s_min()},
                         {"s_max", tr.s_max()},
                         {"time_reversals", trev}});
        append_trajectory_rows(csv, a, tr, j0_of);
    }
    if (mode == NParticleMode::foliated) {
        // Leaf coherence: spread of N.x across particles at matching s.
        const std::size_t ns = trs.front().samples.size();
        for (std::size_t k = 0; k < ns; ++k) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (const auto& tr : trs) {
                const double tau = minkowski_dot(nvec, tr.samples[k].x);
                lo = std::min(lo, tau);
                hi = std::max(hi, tau);
            }
            max_drift = std::max(max_drift, hi - lo);
        }
    }

    ojson summary{{"scenario", "n-particle"},
                  {"particles", trs.size()},
                  {"mode", mode_name},
                  {"max_leaf_drift", max_drift},
                  {"trajectories", parts}};
    write_file_atomic(out_path(outdir, "trajectories.csv"), csv.str());
    write_file_atomic(out_path(outdir, "summary.json"), summary.dump(2) + "\n");

    out << "n-particle: " << trs.size() << " coupled curves (" << mode_name << ")\n"
        << "  max leaf drift: " << format_double(max_drift) << "\n";
}

}  // namespace

void run_scenario(const std::string& config_text, const RunOptions& opts, std::ostream& summary) {
    json cfg;
    try {
        cfg = json::parse(config_text);
    } catch (const json::parse_error& e) {
        fail(std::string("config is not valid JSON: ") + e.what());
    }
    if (!cfg.is_object()) fail("config: expected a JSON object");
    const std::string kind = get_str(cfg, "scenario", "config");
    const std::uint64_t seed =
        opts.seed.value_or(static_cast<std::uint64_t>(opt_int(cfg, "seed", 1, "config")));
    const std::string outdir = opts.output_dir.value_or(opt_str(cfg, "output_dir", "output", "config"));

    if (kind == "single-trajectory")
        run_single_trajectory(cfg, outdir, summary);
    else if (kind == "congruence-analysis")
        run_congruence(cfg, opts, outdir, seed, summary);
    else if (kind == "interference")
        run_interference(cfg, opts, outdir, summary);
    else if (kind == "n-particle")
        run_nparticle(cfg, outdir, summary);
    else
        fail("scenario: unknown kind \"" + kind + "\"");
}

}  // namespace kgflow
