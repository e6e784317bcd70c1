// End-to-end acceptance gate: ten numbered physics and engineering criteria,
// each printing one PASS/FAIL line. Exit code = number of failures.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kgflow/congruence.hpp"
#include "kgflow/current.hpp"
#include "kgflow/interference.hpp"
#include "kgflow/nparticle.hpp"
#include "kgflow/quadrature.hpp"
#include "kgflow/random.hpp"
#include "kgflow/scenario.hpp"
#include "kgflow/stats.hpp"
#include "kgflow/trajectory.hpp"
#include "kgflow/wavefunction.hpp"

using namespace kgflow;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

// ---- shared state builders -------------------------------------------------

WaveFunction unit_random_state(SplitMix64& rng, int n_modes, double mass) {
  const Box box = Box::line(2.0 * M_PI);
  std::vector<PlaneWaveMode> modes;
  double norm2 = 0.0;
  while ((int)modes.size() < n_modes) {
    int n = (int)(rng.next_u64() % 11) - 5;
    if (n == 0 && mass == 0.0) continue;
    Vec3 k = lattice_momentum(box, {n, 0, 0});
    bool dup = false;
    for (const auto& mo : modes) dup |= (mo.k == k);
    if (dup) continue;
    Complex c(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    modes.push_back({k, mass, c});
    norm2 += std::norm(c);
  }
  for (auto& m : modes) m.c /= std::sqrt(norm2);
  return WaveFunction(box, modes, Normalization::KleinGordon);
}

WaveFunction collinear_pair() {
  return make_two_mode({1, 0, 0}, {4, 0, 0}, 0.0, Box::line(2.0 * M_PI));
}

WaveFunction anticollinear_pair() {
  return make_two_mode({1, 0, 0}, {-4, 0, 0}, 0.0, Box::line(2.0 * M_PI));
}

WaveFunction stationary_pair() {
  std::vector<PlaneWaveMode> modes{
      {{1.0, 0.0, 0.0}, 0.0, std::sqrt(0.7)},
      {{-1.0, 0.0, 0.0}, 0.0, std::sqrt(0.3) * std::exp(Complex(0.0, 0.7))},
  };
  return WaveFunction(Box::line(2.0 * M_PI), modes);
}

double stationary_cdf(double x) {
  const double a = std::sqrt(0.21);
  return (x + a * (std::sin(2.0 * x - 0.7) + std::sin(0.7))) / (2.0 * M_PI);
}

TwoFrequencyScenario shells_14() {
  Box box = Box::line(2.0 * M_PI);
  ProfileSpec p1;
  p1.carrier = {1.0, 0.0, 0.0};
  ProfileSpec p2;
  p2.carrier = {4.0, 0.0, 0.0};
  p2.phase = M_PI / 4.0;
  return TwoFrequencyScenario(box, 0.0, p1, p2);
}

// ---- shared numeric helpers ------------------------------------------------

template <typename F>
double fd5(F&& f, double h) {
  return (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h);
}

double fd_divergence(const CurrentField& cf, const FourVector& x) {
  double div = 0.0;
  for (int mu = 0; mu < 4; ++mu) {
    auto along = [&](double d) {
      FourVector y = x;
      y[mu] += d;
      return cf.current(y)[mu];
    };
    div += fd5(along, 1e-3);
  }
  return div;
}

double lightspeed_deviation(const Trajectory& tr) {
  double worst = 0.0;
  std::array<double, 4> du;
  for (const auto& step : tr.steps) {
    DenseSegment seg = step.view();
    for (int i = 0; i < 5; ++i) {
      double s = step.s_lo + (step.s_hi - step.s_lo) * (i + 0.5) / 5.0;
      seg.eval_derivative(s, du.data());
      if (std::abs(du[0]) < 1e-300) continue;
      worst = std::max(worst, std::abs(std::abs(du[1] / du[0]) - 1.0));
    }
  }
  return worst;
}

// Global minimum of V j0 on the t = 0 slice: dense scan plus golden-section
// refinement around the best grid cell.
double min_density(const CurrentField& cf, double t) {
  const double L = cf.box().lengths[0];
  const double V = cf.box().volume();
  const int n = 4096;
  double best = 1e300, best_x = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = (i + 0.5) * L / n;
    double v = V * cf.time_component({t, x, 0, 0});
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  double lo = best_x - 2.0 * L / n, hi = best_x + 2.0 * L / n;
  double xm = golden_section_min(
      [&](double x) { return V * cf.time_component({t, x, 0, 0}); }, lo, hi,
      1e-13);
  return V * cf.time_component({t, xm, 0, 0});
}

// ---- criteria ----------------------------------------------------------

Outcome criterion_conservation() {
  SplitMix64 seeds(20250819);
  double worst = 0.0;
  for (int state = 0; state < 20; ++state) {
    SplitMix64 rng(seeds.next_u64());
    WaveFunction psi = unit_random_state(rng, 5, state % 2 ? 0.65 : 0.0);
    CurrentField cf(psi);
    std::vector<FourVector> pts(100);
    double max_flux = 0.0;
    for (auto& x : pts) {
      x = {rng.uniform(-2.0, 2.0), rng.uniform(0.0, 2.0 * M_PI), 0, 0};
      max_flux = std::max(max_flux, cf.current(x).euclidean_norm());
    }
    for (const auto& x : pts)
      worst = std::max(worst, std::abs(fd_divergence(cf, x)) / max_flux);
  }
  return {worst < 1e-6,
          fmt("max |d_mu j^mu| / max ||j|| = %.3e over 20 states x 100 points "
              "(tolerance 1e-6)",
              worst)};
}

Outcome criterion_charge_and_invariance() {
  SplitMix64 seeds(7151);
  double worst_charge = 0.0, worst_ip = 0.0;
  const std::array<double, 3> times{0.0, 0.7, 1.3};
  for (int state = 0; state < 6; ++state) {
    SplitMix64 rng(seeds.next_u64());
    WaveFunction psi = unit_random_state(rng, 4, state % 2 ? 1.1 : 0.0);
    CurrentField cf(psi);
    std::array<double, 3> ips{};
    for (int ti = 0; ti < 3; ++ti) {
      double total = 0.0;
      for_each_midpoint(psi.box(), 1 << 12, [&](const Vec3& p, double w) {
        total += w * cf.time_component({times[ti], p.x, p.y, p.z});
      });
      worst_charge = std::max(worst_charge, std::abs(total - 1.0));
      ips[ti] = kg_inner_product(psi, psi, times[ti]).real();
    }
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b)
        worst_ip = std::max(worst_ip, std::abs(ips[a] - ips[b]));
  }
  bool ok = worst_charge < 1e-8 && worst_ip < 1e-8;
  return {ok,
          fmt("max |integral j0 - 1| = %.3e, max inner-product spread across "
              "t = {0, 0.7, 1.3} = %.3e (tolerance 1e-8)",
              worst_charge, worst_ip)};
}

Outcome criterion_lightlike_flow() {
  CurrentField cf(collinear_pair());
  const double V = cf.box().volume();

  SplitMix64 rng(333);
  double worst_eq = 0.0;
  for (int i = 0; i < 10000; ++i) {
    FourVector x{rng.uniform(-3.0, 3.0), rng.uniform(0.0, 2.0 * M_PI), 0, 0};
    FourVector j = cf.current(x);
    worst_eq = std::max(worst_eq, std::abs(j.t - j.x));
  }

  IntegratorConfig icfg;
  icfg.t_min = -2.0;
  icfg.t_max = 2.0;
  icfg.max_total_s = 200.0;
  double worst_speed = 0.0;
  int curves = 0;
  for (int i = 0; i < 100; ++i) {
    double x0 = (i + 0.5) * 2.0 * M_PI / 100.0;
    Trajectory tr = integrate(cf, {0.0, x0, 0, 0}, icfg);
    if (tr.status() == TrajectoryStatus::halted_at_stagnation) continue;
    ++curves;
    worst_speed = std::max(worst_speed, lightspeed_deviation(tr));
  }

  const double vmin = min_density(cf, 0.0);
  bool ok = worst_eq < 1e-12 && worst_speed < 1e-9 && curves == 100 &&
            std::abs(vmin - (-0.25)) < 1e-9;
  return {ok,
          fmt("max |j0 - j1| = %.3e at 1e4 points (tol 1e-12), max |dx/dt - 1| "
              "= %.3e over %d curves (tol 1e-9), min V j0 = %.12f (expect "
              "-0.25 +- 1e-9)",
              worst_eq, worst_speed, curves, vmin)};
}

Outcome criterion_backwards_in_time() {
  CurrentField cf(anticollinear_pair());
  const double vmin = min_density(cf, 0.0);

  // Negative-density pocket on the t = 0 slice: V j0 = 1 + 1.25 cos(5x) < 0
  // for x in (acos(-0.8)/5, (2 pi - acos(-0.8))/5).
  const double lo = std::acos(-0.8) / 5.0;
  const double hi = (2.0 * M_PI - std::acos(-0.8)) / 5.0;

  IntegratorConfig icfg;
  icfg.t_min = -2.0;
  icfg.t_max = 2.5;
  icfg.max_total_s = 60.0;
  int reversed = 0;
  for (int i = 0; i < 200; ++i) {
    double x0 = lo + (hi - lo) * (i + 0.5) / 200.0;
    Trajectory tr = integrate(cf, {0.0, x0, 0, 0}, icfg);
    bool has = false;
    for (const auto& ev : tr.events) has |= ev.kind == EventKind::time_reversal;
    reversed += has;
  }
  bool ok = std::abs(vmin - (-0.25)) < 1e-9 && reversed >= 1;
  return {ok,
          fmt("min V j0 = %.12f (expect -0.25 +- 1e-9); %d of 200 "
              "pocket-launched curves show a time reversal (need >= 1)",
              vmin, reversed)};
}

Outcome criterion_flux_accounting() {
  CurrentField cf(anticollinear_pair());
  const Box box = cf.box();

  CongruenceConfig ccfg;
  ccfg.samples = 100000;
  ccfg.seed = 20250819;
  ccfg.integrator.t_min = -2.0;
  ccfg.integrator.t_max = 2.5;
  ccfg.integrator.max_total_s = 60.0;
  Congruence c(cf, Hypersurface::constant_time(0.0, box), ccfg);

  const Hypersurface query = Hypersurface::constant_time(0.3, box);
  CrossingReport rep = crossing_report(c, query, 8);
  const double qmass = rep.query_mass;  // quadrature integral of |j-tilde^0|
  const double dev_unsigned = std::abs(rep.unsigned_flux - qmass);
  bool ok_unsigned = rep.unsigned_flux > 1.0 &&
                     dev_unsigned <= 3.0 * rep.unsigned_flux_se;

  CompleteSurfaceResult comp = complete_surface(
      c, SurfaceStrategy::connected_constant_sign_patches, query, 8);
  double assembled = 0.0;
  for (const auto& r : comp.regions) assembled += r.first_crossing_mass;
  const double dev_first = std::abs(assembled - 1.0);
  bool ok_first = dev_first <= 3.0 * comp.coverage_mass_se;

  return {ok_unsigned && ok_first,
          fmt("unsigned flux %.6f vs quadrature %.6f (|diff| = %.2e <= 3 SE = "
              "%.2e) and > 1; assembled first-crossing mass %.6f (|diff to 1| "
              "= %.2e <= 3 SE = %.2e); 1e5 curves",
              rep.unsigned_flux, qmass, dev_unsigned,
              3.0 * rep.unsigned_flux_se, assembled, dev_first,
              3.0 * comp.coverage_mass_se)};
}

Outcome criterion_launch_distribution() {
  CurrentField cf(stationary_pair());
  CongruenceConfig ccfg;
  ccfg.samples = 100000;
  ccfg.seed = 424243;
  Congruence c(cf, Hypersurface::constant_time(0.0, cf.box()), ccfg);
  std::vector<double> xs;
  xs.reserve(c.size());
  for (const auto& p : c.launch_points()) xs.push_back(p.x.x);
  KsResult ks = ks_test(xs, stationary_cdf);
  bool ok = ks.p_value >= 0.01;
  return {ok,
          fmt("KS statistic %.5f, p = %.4f against the closed-form position "
              "distribution at 1e5 samples (reject below 0.01)",
              ks.statistic, ks.p_value)};
}

Outcome criterion_interference_amplification() {
  TwoFrequencyScenario sc = shells_14();
  bool alpha_exact = (sc.alpha() == 1.25);

  SplitMix64 rng(515253);
  double worst_split = 0.0;
  const double amp = sc.alpha() - 1.0;
  for (int i = 0; i < 2000; ++i) {
    Vec3 x{rng.uniform(0.0, 2.0 * M_PI), 0, 0};
    double t = rng.uniform(-4.0, 4.0);
    double lhs = sc.kg_density(x, t) - sc.conventional_density(x, t);
    worst_split = std::max(worst_split,
                           std::abs(lhs - amp * sc.interference(x, t)));
  }

  Box box = Box::line(2.0 * M_PI);
  ProfileSpec q1;
  q1.carrier = {3.0, 0.0, 0.0};
  ProfileSpec q2;
  q2.carrier = {-3.0, 0.0, 0.0};
  q2.phase = 0.6;
  TwoFrequencyScenario equal(box, 0.0, q1, q2);
  double worst_equal = 0.0;
  for (int i = 0; i < 2000; ++i) {
    Vec3 x{rng.uniform(0.0, 2.0 * M_PI), 0, 0};
    double t = rng.uniform(-4.0, 4.0);
    worst_equal = std::max(worst_equal,
                           std::abs(equal.kg_density(x, t) -
                                    equal.conventional_density(x, t)));
  }

  bool ok = alpha_exact && worst_split < 1e-12 && worst_equal < 1e-12;
  return {ok,
          fmt("alpha(1,4) %s 1.25 exactly; max |(j0 - rho) - (alpha - 1) I| = "
              "%.3e (tol 1e-12); equal frequencies: max |rho - j0| = %.3e "
              "(tol 1e-12)",
              alpha_exact ? "==" : "!=", worst_split, worst_equal)};
}

Outcome criterion_washout() {
  TwoFrequencyScenario sc = shells_14();
  WashoutFit fit = washout_convergence(sc, {0.8, 0.0, 0.0}, 2, 9);
  bool ok_slope = std::abs(fit.slope - (-1.0)) <= 0.1;

  const double P = sc.beat_period();
  DeviationMap map = deviation_map(sc, 256, 48.0 * P, 4);
  // Sign-flipping set: the oscillation swing alpha |phi1 phi2| exceeds C.
  int flagged = 0;
  double min_excess = 1e300;
  for (std::size_t i = 0; i < map.x.size(); ++i) {
    auto tm = sc.terms({map.x[i], 0.0, 0.0});
    double swing = sc.alpha() * std::hypot(tm.re, tm.im);
    if (swing > tm.classical + 0.02) {
      ++flagged;
      min_excess = std::min(min_excess, map.abs_kg_avg[i] - map.classical[i]);
    }
  }
  bool ok_excess = flagged > 0 && min_excess > 1e-3;

  const double scale = map.expected_scale;
  bool ok_corr = map.correlation_length > 0.5 * scale &&
                 map.correlation_length < 2.0 * scale;

  return {ok_slope && ok_excess && ok_corr,
          fmt("washout slope %.4f (expect -1 +- 0.1); time-averaged |j0| "
              "exceeds C by >= %.2e on %d sign-flipping grid points (need > "
              "1e-3); correlation length %.4f vs beat scale %.4f (within "
              "factor 2)",
              fit.slope, min_excess, flagged, map.correlation_length, scale)};
}

Outcome criterion_multi_argument() {
  Box box = Box::line(2.0 * M_PI);

  // (a) One-slot state must reduce to the one-body current.
  std::vector<ProductTerm> single(2);
  single[0].c = 1.0 / std::sqrt(2.0);
  single[0].momenta = {{1.0, 0.0, 0.0}};
  single[1].c = 1.0 / std::sqrt(2.0);
  single[1].momenta = {{-4.0, 0.0, 0.0}};
  NParticleWaveFunction one(box, {0.0}, single);
  NParticleCurrent npc1(one, FoliationField{});
  CurrentField ref(anticollinear_pair());
  SplitMix64 rng(616263);
  double worst_reduce = 0.0;
  for (int i = 0; i < 200; ++i) {
    FourVector x{rng.uniform(-1.0, 1.0), rng.uniform(0.0, 2.0 * M_PI), 0, 0};
    std::array<FourVector, 1> pts{x};
    FourVector a = npc1.contracted_particle_current(0, pts);
    FourVector b = ref.current(x);
    for (int mu = 0; mu < 4; ++mu)
      worst_reduce = std::max(worst_reduce, std::abs(a[mu] - b[mu]));
  }

  // (b) Product state: slot currents factorize against one-body oracles.
  std::vector<ProductTerm> terms;
  for (double ka : {1.0, 2.0})
    for (double kb : {1.0, 3.0}) {
      ProductTerm t;
      t.c = 0.5;
      t.momenta = {{ka, 0.0, 0.0}, {kb, 0.0, 0.0}};
      terms.push_back(t);
    }
  NParticleWaveFunction two(box, {0.0, 0.0}, terms);
  NParticleCurrent npc2(two, FoliationField{});
  CurrentField fa(make_two_mode({1, 0, 0}, {2, 0, 0}, 0.0, box));
  CurrentField fb(make_two_mode({1, 0, 0}, {3, 0, 0}, 0.0, box));
  double worst_factor = 0.0;
  for (int i = 0; i < 200; ++i) {
    double t = rng.uniform(-1.0, 1.0);
    FourVector x1{t, rng.uniform(0.0, 2.0 * M_PI), 0, 0};
    FourVector x2{t, rng.uniform(0.0, 2.0 * M_PI), 0, 0};
    std::array<FourVector, 2> pts{x1, x2};
    FourVector ja = fa.current(x1);
    FourVector jb = fb.current(x2);
    FourVector c0 = npc2.contracted_particle_current(0, pts);
    FourVector c1 = npc2.contracted_particle_current(1, pts);
    for (int mu = 0; mu < 4; ++mu) {
      worst_factor = std::max(worst_factor, std::abs(c0[mu] - ja[mu] * jb.t));
      worst_factor = std::max(worst_factor, std::abs(c1[mu] - jb[mu] * ja.t));
    }
  }

  // (c) Per-argument conservation by finite differences.
  const double scale = npc2.flux_norm_bound();
  double worst_div = 0.0;
  for (int i = 0; i < 40; ++i) {
    double t = rng.uniform(-1.0, 1.0);
    FourVector x1{t, rng.uniform(0.0, 2.0 * M_PI), 0, 0};
    FourVector x2{t, rng.uniform(0.0, 2.0 * M_PI), 0, 0};
    for (int a = 0; a < 2; ++a) {
      double div = 0.0;
      for (int mu = 0; mu < 4; ++mu) {
        auto along = [&](double d) {
          std::array<FourVector, 2> pts{x1, x2};
          pts[a][mu] += d;
          return npc2.particle_current(a, pts)[mu];
        };
        div += fd5(along, 1e-3);
      }
      worst_div = std::max(worst_div, std::abs(div) / scale);
    }
  }

  bool ok = worst_reduce < 1e-12 && worst_factor < 1e-9 && worst_div < 1e-6;
  return {ok,
          fmt("n=1 reduction max diff %.3e (tol 1e-12); product factorization "
              "max diff %.3e (tol 1e-9); per-argument divergence ratio %.3e "
              "(tol 1e-6)",
              worst_reduce, worst_factor, worst_div)};
}

Outcome criterion_determinism() {
  const char* congruence_cfg = R"({
    "scenario": "congruence-analysis",
    "seed": 17,
    "wavefunction": {
      "volume": 6.283185307179586,
      "modes": [
        {"k": [1, 0, 0], "m": 0.0, "re_c": 0.8366600265340756, "im_c": 0.0},
        {"k": [-1, 0, 0], "m": 0.0, "re_c": 0.4189213189073053,
         "im_c": 0.3528525592438913}
      ]
    },
    "launch": {"time": 0.0, "samples": 3000, "sampler": "rejection-monte-carlo"},
    "query": {"time": 0.5},
    "integrator": {"t_min": -0.5, "t_max": 1.0, "max_total_s": 150.0}
  })";
  const char* interference_cfg = R"({
    "scenario": "interference",
    "two_frequency": {
      "volume": 6.283185307179586,
      "mass": 0.0,
      "profiles": [
        {"kind": "standing-shell", "carrier": [1, 0, 0], "phase": 0.0},
        {"kind": "standing-shell", "carrier": [4, 0, 0], "phase": 0.7853981633974483}
      ]
    },
    "grid_points": 256,
    "window_periods": 16.25,
    "washout": {"enabled": true, "decades": 2, "points": 9}
  })";

  auto run_files = [](const std::string& text, int workers,
                      const fs::path& dir) {
    fs::remove_all(dir);
    RunOptions opts;
    opts.workers = workers;
    opts.output_dir = dir.string();
    std::ostringstream sink;
    run_scenario(text, opts, sink);
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      std::ifstream in(e.path(), std::ios::binary);
      files[e.path().filename().string()] =
          std::string((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    }
    fs::remove_all(dir);
    return files;
  };

  const fs::path base = fs::temp_directory_path() / "kgflow_acceptance";
  int compared = 0;
  for (const char* cfg : {congruence_cfg, interference_cfg}) {
    auto w1 = run_files(cfg, 1, base / "w1");
    auto w8 = run_files(cfg, 8, base / "w8");
    if (w1.empty() || w1 != w8)
      return {false, fmt("artifact mismatch between workers 1 and 8 "
                         "(scenario %d, %zu vs %zu files)",
                         compared, w1.size(), w8.size())};
    compared += (int)w1.size();
  }
  return {true, fmt("%d artifacts byte-identical between workers 1 and 8 "
                    "(congruence + interference scenarios)",
                    compared)};
}

}  // namespace

int main() {
  struct Entry {
    const char* label;
    Outcome (*run)();
  };
  const Entry entries[] = {
      {"current conservation", criterion_conservation},
      {"charge and slice invariance", criterion_charge_and_invariance},
      {"lightlike collinear flow", criterion_lightlike_flow},
      {"backwards-in-time pockets", criterion_backwards_in_time},
      {"flux accounting at 1e5 samples", criterion_flux_accounting},
      {"launch-position distribution", criterion_launch_distribution},
      {"interference amplification", criterion_interference_amplification},
      {"washout and deviation scale", criterion_washout},
      {"multi-argument currents", criterion_multi_argument},
      {"worker-count determinism", criterion_determinism},
  };

  int failures = 0;
  int id = 0;
  for (const auto& e : entries) {
    ++id;
    Outcome r;
    try {
      r = e.run();
    } catch (const std::exception& ex) {
      r = {false, std::string("exception: ") + ex.what()};
    }
    failures += r.ok ? 0 : 1;
    std::printf("criterion %2d (%s): %s — %s\n", id, e.label,
                r.ok ? "PASS" : "FAIL", r.detail.c_str());
    std::fflush(stdout);
  }
  if (failures == 0)
    std::printf("all %d acceptance criteria passed\n", id);
  else
    std::printf("%d of %d acceptance criteria FAILED\n", failures, id);
  return failures;
}
