#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "kgflow/nparticle.hpp"
#include "kgflow/trajectory.hpp"
#include "test_util.hpp"

using namespace kgflow;

namespace {

// Two-particle product of two-mode states: slot 0 holds momenta {1, 2},
// slot 1 holds {1, 3}, all massless, coefficients 1/2 (product of two
// equal-weight pairs). Factorizes as psi_a(x1) * psi_b(x2).
NParticleWaveFunction product_state() {
  Box box = Box::line(2.0 * M_PI);
  std::vector<ProductTerm> terms;
  for (double ka : {1.0, 2.0}) {
    for (double kb : {1.0, 3.0}) {
      ProductTerm term;
      term.c = 0.5;
      term.momenta = {{ka, 0.0, 0.0}, {kb, 0.0, 0.0}};
      terms.push_back(term);
    }
  }
  return NParticleWaveFunction(box, {0.0, 0.0}, terms);
}

WaveFunction factor_a() {
  Box box = Box::line(2.0 * M_PI);
  return make_two_mode({1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}, 0.0, box);
}

WaveFunction factor_b() {
  Box box = Box::line(2.0 * M_PI);
  return make_two_mode({1.0, 0.0, 0.0}, {3.0, 0.0, 0.0}, 0.0, box);
}

}  // namespace

TEST_CASE("single-particle reduction: value and current match the one-body field") {
  Box box = Box::line(2.0 * M_PI);
  // Same modes as the anti-collinear pair, written as 1-particle terms.
  std::vector<ProductTerm> terms(2);
  terms[0].c = 1.0 / std::sqrt(2.0);
  terms[0].momenta = {{1.0, 0.0, 0.0}};
  terms[1].c = 1.0 / std::sqrt(2.0);
  terms[1].momenta = {{-4.0, 0.0, 0.0}};
  NParticleWaveFunction psi1(box, {0.0}, terms);
  NParticleCurrent npc(psi1, FoliationField{});

  WaveFunction ref = kgtest::anticollinear_state();
  CurrentField cf(ref);

  SplitMix64 rng(5);
  for (int i = 0; i < 50; ++i) {
    FourVector x{rng.uniform(-1, 1), rng.uniform(0, 2 * M_PI), 0, 0};
    std::array<FourVector, 1> pts{x};
    CHECK(std::abs(psi1.value(pts) - ref.value(x)) < 1e-15);
    FourVector ja = npc.particle_current(0, pts);
    FourVector jb = npc.contracted_particle_current(0, pts);
    FourVector jr = cf.current(x);
    for (int mu = 0; mu < 4; ++mu) {
      CHECK(std::abs(ja[mu] - jr[mu]) < 1e-12);
      CHECK(std::abs(jb[mu] - jr[mu]) < 1e-12);
    }
    // Rank-1 tensor is the covariant current: lower the spatial index.
    auto tensor = npc.n_vector_current(pts);
    CHECK(tensor[0] == doctest::Approx(jr.t).epsilon(1e-12));
    CHECK(tensor[1] == doctest::Approx(-jr.x).epsilon(1e-12));
  }
}

TEST_CASE("product state value factorizes") {
  NParticleWaveFunction psi = product_state();
  WaveFunction a = factor_a();
  WaveFunction b = factor_b();
  SplitMix64 rng(7);
  for (int i = 0; i < 30; ++i) {
    double t = rng.uniform(-1, 1);
    FourVector x1{t, rng.uniform(0, 2 * M_PI), 0, 0};
    FourVector x2{t, rng.uniform(0, 2 * M_PI), 0, 0};
    std::array<FourVector, 2> pts{x1, x2};
    Complex expect = a.value(x1) * b.value(x2);
    CHECK(std::abs(psi.value(pts) - expect) < 1e-15);
  }
}

TEST_CASE("product state currents against high-precision reference") {
  NParticleWaveFunction psi = product_state();
  NParticleCurrent npc(psi, FoliationField{});
  FourVector x1{0.2, 1.1, 0, 0};
  FourVector x2{0.2, 2.3, 0, 0};
  std::array<FourVector, 2> pts{x1, x2};

  // Both factors are collinear pairs: each single current is lightlike with
  // j^0 = j^1. Reference values from 40-digit evaluation of the factors.
  const double ja0 = 0.26408849247689163;
  const double jb0 = 0.069056624059112525;

  FourVector c0 = npc.contracted_particle_current(0, pts);
  FourVector c1 = npc.contracted_particle_current(1, pts);
  CHECK(c0.t == doctest::Approx(ja0 * jb0).epsilon(1e-12));
  CHECK(c0.x == doctest::Approx(ja0 * jb0).epsilon(1e-12));
  CHECK(c1.t == doctest::Approx(ja0 * jb0).epsilon(1e-12));
  CHECK(c1.x == doctest::Approx(ja0 * jb0).epsilon(1e-12));
  CHECK(c0.t == doctest::Approx(0.018237059743314471).epsilon(1e-12));

  CHECK(npc.n_particle_density(pts) ==
        doctest::Approx(0.018237059743314471).epsilon(1e-12));

  // Covariant per-slot currents scale with the other factor's |psi|^2.
  FourVector p0 = npc.particle_current(0, pts);
  FourVector p1 = npc.particle_current(1, pts);
  CHECK(p0.t == doctest::Approx(0.0080618473517772943).epsilon(1e-12));
  CHECK(p0.x == doctest::Approx(0.0080618473517772943).epsilon(1e-12));
  CHECK(p1.t == doctest::Approx(0.0065369658757817598).epsilon(1e-12));
}

TEST_CASE("rank-2 tensor is the outer product for a product state") {
  NParticleWaveFunction psi = product_state();
  NParticleCurrent npc(psi, FoliationField{});
  CurrentField ca(factor_a());
  CurrentField cb(factor_b());
  SplitMix64 rng(9);
  for (int i = 0; i < 10; ++i) {
    double t = rng.uniform(-0.5, 0.5);
    FourVector x1{t, rng.uniform(0, 2 * M_PI), 0, 0};
    FourVector x2{t, rng.uniform(0, 2 * M_PI), 0, 0};
    std::array<FourVector, 2> pts{x1, x2};
    auto tensor = npc.n_vector_current(pts);
    REQUIRE(tensor.size() == 16);
    FourVector ja = ca.current(x1);
    FourVector jb = cb.current(x2);
    for (int mu = 0; mu < 4; ++mu) {
      for (int nu = 0; nu < 4; ++nu) {
        // Covariant components: lower each index.
        double sa = mu == 0 ? 1.0 : -1.0;
        double sb = nu == 0 ? 1.0 : -1.0;
        double expect = sa * ja[mu] * sb * jb[nu];
        CHECK(tensor[4 * mu + nu] == doctest::Approx(expect).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("per-argument divergence vanishes") {
  NParticleWaveFunction psi = product_state();
  NParticleCurrent npc(psi, FoliationField{});
  const double scale = npc.flux_norm_bound();
  REQUIRE(scale > 0.0);
  SplitMix64 rng(13);
  for (int i = 0; i < 20; ++i) {
    double t = rng.uniform(-1, 1);
    FourVector x1{t, rng.uniform(0, 2 * M_PI), 0, 0};
    FourVector x2{t, rng.uniform(0, 2 * M_PI), 0, 0};
    for (int a = 0; a < 2; ++a) {
      double div = 0.0;
      for (int mu = 0; mu < 4; ++mu) {
        auto along = [&](double d) {
          std::array<FourVector, 2> pts{x1, x2};
          pts[a][mu] += d;
          return npc.particle_current(a, pts)[mu];
        };
        div += kgtest::fd_derivative(along, 1e-3);
      }
      CHECK(std::abs(div) / scale < 1e-6);
    }
  }
}

TEST_CASE("common-leaf precondition") {
  NParticleWaveFunction psi = product_state();
  NParticleCurrent npc(psi, FoliationField{});
  std::array<FourVector, 2> off{FourVector{0.0, 1.0, 0, 0},
                                FourVector{0.5, 2.0, 0, 0}};
  CHECK(npc.leaf_time_spread(off) == doctest::Approx(0.5));
  CHECK_THROWS_AS(npc.n_vector_current(off), std::invalid_argument);
  CHECK_THROWS_AS(npc.contracted_particle_current(0, off),
                  std::invalid_argument);
  CHECK_THROWS_AS(npc.n_particle_density(off), std::invalid_argument);
  // The covariant slot current has no leaf requirement.
  CHECK_NOTHROW(npc.particle_current(0, off));

  std::array<FourVector, 2> on{FourVector{0.3, 1.0, 0, 0},
                               FourVector{0.3, 2.0, 0, 0}};
  CHECK(npc.leaf_time_spread(on) == 0.0);
  CHECK_NOTHROW(npc.n_vector_current(on));
}

TEST_CASE("arity is checked") {
  NParticleWaveFunction psi = product_state();
  NParticleCurrent npc(psi, FoliationField{});
  std::array<FourVector, 1> one{FourVector{0, 1, 0, 0}};
  CHECK_THROWS_AS(npc.n_vector_current(one), std::invalid_argument);
  CHECK_THROWS_AS(psi.value(one), std::invalid_argument);
}

TEST_CASE("construction rejects inconsistent terms") {
  Box box = Box::line(2.0 * M_PI);
  ProductTerm bad;
  bad.c = 1.0;
  bad.momenta = {{1.0, 0.0, 0.0}};  // one slot, two masses
  CHECK_THROWS_AS(NParticleWaveFunction(box, {0.0, 0.0}, {bad}),
                  std::invalid_argument);
  CHECK_THROWS_AS(NParticleWaveFunction(box, {0.0}, {}), std::invalid_argument);
  ProductTerm zero;
  zero.c = 1.0;
  zero.momenta = {{0.0, 0.0, 0.0}};  // massless zero mode
  CHECK_THROWS_AS(NParticleWaveFunction(box, {0.0}, {zero}),
                  std::invalid_argument);
}

TEST_CASE("joint foliated trajectories factorize for a product state") {
  // Slot 0: anti-collinear-style pair (+1, -2); slot 1: collinear pair.
  Box box = Box::line(2.0 * M_PI);
  std::vector<ProductTerm> terms;
  for (double ka : {1.0, -2.0}) {
    for (double kb : {1.0, 3.0}) {
      ProductTerm term;
      term.c = 0.5;
      term.momenta = {{ka, 0.0, 0.0}, {kb, 0.0, 0.0}};
      terms.push_back(term);
    }
  }
  NParticleWaveFunction psi(box, {0.0, 0.0}, terms);
  NParticleCurrent npc(psi, FoliationField{});

  WaveFunction psi_a = make_two_mode({1.0, 0.0, 0.0}, {-2.0, 0.0, 0.0}, 0.0, box);
  CurrentField cf_a(psi_a);

  IntegratorConfig cfg;
  cfg.t_min = -0.5;
  cfg.t_max = 0.5;
  cfg.max_total_s = 400.0;

  const FourVector start0{0.0, 0.4, 0, 0};
  const FourVector start1{0.0, 2.3, 0, 0};
  std::array<FourVector, 2> starts{start0, start1};
  auto joint = integrate_n_particle(npc, starts, NParticleMode::foliated, cfg);
  REQUIRE(joint.size() == 2);
  REQUIRE(joint[0].samples.size() > 3);

  // Launch stays put at s = 0.
  CHECK(joint[0].position(0.0).x == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(joint[1].position(0.0).x == doctest::Approx(2.3).epsilon(1e-12));

  // Both slots share their time axis in foliated mode.
  for (const auto& smp : joint[1].samples) {
    FourVector other = joint[0].position(smp.s);
    CHECK(std::abs(other.t - smp.x.t) < 1e-9);
  }

  // Slot 1 rides the collinear pair: x - t is conserved.
  for (const auto& smp : joint[1].samples) {
    CHECK(std::abs((smp.x.x - smp.x.t) - 2.3) < 1e-8);
  }

  // Slot 0 follows the single-particle flow of its own factor: compare
  // x(t) against a one-body integration, matching samples by time.
  Trajectory solo = integrate(cf_a, start0, cfg);
  auto x_at_t = [](const Trajectory& tr, double t) {
    double lo = tr.s_min(), hi = tr.s_max();
    // Monotone t on this window (the launch point sits outside pockets).
    for (int i = 0; i < 200; ++i) {
      double mid = 0.5 * (lo + hi);
      (tr.position(mid).t < t ? lo : hi) = mid;
    }
    return tr.position(0.5 * (lo + hi)).x;
  };
  for (const auto& smp : joint[0].samples) {
    if (smp.x.t < solo.position(solo.s_min()).t + 1e-6 ||
        smp.x.t > solo.position(solo.s_max()).t - 1e-6)
      continue;
    CHECK(x_at_t(solo, smp.x.t) == doctest::Approx(smp.x.x).epsilon(1e-7));
  }
}

TEST_CASE("foliated launch must start on a single leaf") {
  NParticleWaveFunction psi = product_state();
  NParticleCurrent npc(psi, FoliationField{});
  IntegratorConfig cfg;
  std::array<FourVector, 2> off{FourVector{0.0, 1.0, 0, 0},
                                FourVector{0.2, 2.0, 0, 0}};
  CHECK_THROWS_AS(
      integrate_n_particle(npc, off, NParticleMode::foliated, cfg),
      std::invalid_argument);
  // Covariant mode has no such requirement.
  cfg.t_min = -0.1;
  cfg.t_max = 0.3;
  cfg.max_total_s = 50.0;
  CHECK_NOTHROW(
      integrate_n_particle(npc, off, NParticleMode::covariant, cfg));
}

TEST_CASE("wrong launch arity throws") {
  NParticleWaveFunction psi = product_state();
  NParticleCurrent npc(psi, FoliationField{});
  IntegratorConfig cfg;
  std::array<FourVector, 1> one{FourVector{0, 1, 0, 0}};
  CHECK_THROWS_AS(integrate_n_particle(npc, one, NParticleMode::foliated, cfg),
                  std::invalid_argument);
}
