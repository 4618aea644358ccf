#include <catch_amalgamated.hpp>

#include "anich/diagnostics.hpp"
#include "support.hpp"

using namespace anich;
using Catch::Approx;
using testing_support::Gen;
using testing_support::max_diff;

namespace {

Field disc(const GridPtr& g, double cx, double cy, double r) {
  return Field::sample(g, [=](double x, double y) {
    // periodic distance
    const double L = kTwoPi;
    double dx = std::abs(x - cx), dy = std::abs(y - cy);
    dx = std::min(dx, L - dx);
    dy = std::min(dy, L - dy);
    return std::hypot(dx, dy) < r ? 1.0 : -1.0;
  });
}

}  // namespace

TEST_CASE("manufactured solution and source") {
  auto g = build_grid(1, 16);
  CHECK(max_diff(mms_exact(g, 0.0), Field::sample(g, [](double x) { return std::sin(x); })) == 0.0);
  CHECK(max_diff(mms_exact(g, 1.0), Field::sample(g, [](double x) { return 8 * std::sin(x); })) < 1e-15);

  // Closed form: phi = a sin x, sin^3 = (3 sin x - sin 3x)/4,
  // mu = (phi^3 - phi)/eps^2 - Lap phi + beta Lap^2 phi.
  for (double t : {0.0, 0.3, 1.0}) {
    for (double beta : {0.0, 6e-4}) {
      ModelParams mp;
      mp.beta = beta;
      const double a = std::pow(t + 1, 3), e2 = mp.epsilon * mp.epsilon;
      const Field expect = Field::sample(g, [&](double x) {
        const double s1 = std::sin(x), s3 = std::sin(3 * x);
        const double lap_f = a * a * a * (-3 * s1 + 9 * s3) / 4 + a * s1;
        const double lap_mu = lap_f / e2 - a * s1 - beta * a * s1;
        return 3 * (t + 1) * (t + 1) * s1 - lap_mu;
      });
      CHECK(max_diff(mms_source(g, t, mp), expect) < 1e-12 * (1 + expect.max_abs()));
    }
  }
  CHECK_THROWS_AS(mms_source(build_grid(2, 8), 0.0, ModelParams{}), InvalidArgument);
}

TEST_CASE("chemical potential is the derivative of the total energy") {
  auto g = build_grid(1, 64);
  Gen gen(40);
  for (Regularization reg : {Regularization::Linear, Regularization::Willmore}) {
    ModelParams mp;
    mp.alpha = 0.05;
    mp.regularization = reg;
    Field phi = gen.smooth(g, 3);
    phi += 0.3;
    Field dir = gen.smooth(g, 3);
    dir += 0.5;
    const double h = 1e-5;
    Field plus = phi, minus = phi;
    plus.axpy(h, dir);
    minus.axpy(-h, dir);
    const double fd = (total_energy(plus, mp) - total_energy(minus, mp)) / (2 * h);
    CHECK(inner(chemical_potential(phi, mp), dir) == Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("a fine-step manufactured run reproduces the exact solution") {
  ConvergenceSetup c;
  c.horizon = 0.05;
  c.theta = 0.75;
  const MmsRun r = run_mms(c, 1e-4);
  CHECK(r.failure.empty());
  CHECK(r.error < 1e-6);
  // still in the temporal regime: halving tau quarters the error
  CHECK(r.error / run_mms(c, 5e-5).error == Approx(4.0).margin(0.4));

  c.scheme = Scheme::VL;
  c.step_kind = StepKind::RandomAdmissible;
  const MmsRun v = run_mms(c, 1e-4);
  CHECK(v.max_tau <= 1e-4);
  CHECK(v.error < 1e-6);
  CHECK(v.max_newton_iters <= 10);
}

TEST_CASE("convergence report shape and order") {
  ConvergenceSetup c;
  c.horizon = 0.2;
  c.taus = {2.5e-3, 1.25e-3, 6.25e-4};
  const ConvergenceReport rep = run_convergence(c);
  REQUIRE(rep.errors.size() == 3);
  REQUIRE(rep.orders.size() == 2);
  CHECK(rep.complete());
  for (double o : rep.orders) CHECK(o == Approx(2.0).margin(0.1));

  ConvergenceReport broken{{1.0, 0.5}, {1.0, std::numeric_limits<double>::infinity()}, {}};
  CHECK_FALSE(broken.complete());
}

TEST_CASE("runs past the divergence bound record an infinite error") {
  ConvergenceSetup c;
  c.n = 32;
  c.alpha = 0.3;
  c.s1 = c.s2 = 0.0;
  c.horizon = 4.0;
  const MmsRun r = run_mms(c, 5e-2);
  CHECK(std::isinf(r.error));
  CHECK(!r.failure.empty());
}

TEST_CASE("observe and the simulation driver") {
  auto g = build_grid(1, 64);
  Gen gen(41);
  const Field phi0 = gen.noise(g, -0.35, -0.25);
  for (Scheme s : {Scheme::UL, Scheme::UW, Scheme::VL, Scheme::VW}) {
    INFO(to_string(s));
    SchemeConfig sc;
    sc.kind = s;
    const StepSequence steps = is_variable(s) ? make_steps(StepKind::RandomAdmissible, 0.01, 20, 1.0, 0.1, 3)
                                              : make_steps(StepKind::Uniform, 0.01, 20, 1.0, 0.1, 0);
    Simulation sim(phi0, ModelParams{}, sc, steps);
    CHECK(sim.model().regularization == (is_willmore(s) ? Regularization::Willmore : Regularization::Linear));
    const DiagRecord r0 = sim.observe();
    CHECK(r0.rel_mass_err == 0.0);
    CHECK(r0.dt == 0.0);
    CHECK(r0.t == 0.0);
    CHECK(r0.xi.has_value() == is_variable(s));
    double last_t = 0.0;
    while (!sim.done()) {
      sim.step();
      const DiagRecord r = sim.observe();
      CHECK(r.t > last_t);
      CHECK(r.dt == Approx(steps.taus[sim.steps_taken() - 1]));
      CHECK(std::abs(r.rel_mass_err) < 1e-12);
      last_t = r.t;
    }
    CHECK(sim.t() == Approx(0.01).epsilon(1e-12));
    CHECK_THROWS_AS(sim.step(), InvalidArgument);
  }

  SchemeConfig ul;
  CHECK_THROWS_AS(Simulation(phi0, ModelParams{}, ul, make_steps(StepKind::RandomAdmissible, 1, 10, 1, 0.1, 1)),
                  InvalidArgument);
  SchemeConfig vl;
  vl.kind = Scheme::VL;
  StepSequence wild{{1e-3, 1e-2, 1e-3}};
  CHECK_THROWS_AS(Simulation(phi0, ModelParams{}, vl, wild), InvalidArgument);
}

TEST_CASE("constant field: modified energy is constant after the first step") {
  auto g = build_grid(2, 16);
  for (Scheme s : {Scheme::UL, Scheme::VL}) {
    SchemeConfig sc;
    sc.kind = s;
    Simulation sim(Field(g, -0.4), ModelParams{}, sc, make_steps(StepKind::Uniform, 0.05, 5, 1.0, 0.1, 0));
    sim.step();
    const double e1 = sim.observe().energy_modified;
    std::vector<DiagRecord> log{sim.observe()};
    while (!sim.done()) {
      const Field before = sim.phi();
      sim.step();
      log.push_back(sim.observe());
      CHECK(log.back().energy_modified == Approx(e1).epsilon(1e-13));
      CHECK(steady_state_detect(log, sim.phi(), before));
    }
  }
}

TEST_CASE("steady state detection") {
  auto g = build_grid(1, 16);
  const Field a = Field::sample(g, [](double x) { return std::sin(x); });
  std::vector<DiagRecord> one(1);
  CHECK_FALSE(steady_state_detect(one, a, a));
  std::vector<DiagRecord> two(2);
  two[1].dt = 1e-3;
  CHECK(steady_state_detect(two, a, a));
  Field b = a;
  b *= 1.0 + 1e-10;
  CHECK(steady_state_detect(two, b, a));
  b = a;
  b *= 1.01;
  CHECK_FALSE(steady_state_detect(two, b, a));
  CHECK_FALSE(steady_state_detect(two, b, a, 1.0));
  CHECK(steady_state_detect(two, b, a, 100.0));
}

TEST_CASE("component counting") {
  auto g = build_grid(2, 64);
  CHECK(count_components(Field(g, -1.0)) == 0);
  CHECK(count_components(Field(g, 1.0)) == 1);
  CHECK(count_components(disc(g, 2.0, 2.0, 0.8)) == 1);
  Field two = disc(g, 2.0, 2.0, 0.8);
  const Field other = disc(g, 4.5, 4.5, 0.6);
  for (std::size_t p = 0; p < two.size(); ++p) two[p] = std::max(two[p], other[p]);
  CHECK(count_components(two) == 2);
  // a disc centred on the corner wraps into all four corners: still one region
  CHECK(count_components(disc(g, 0.0, 0.0, 0.7)) == 1);
  // diagonal contact only does not join regions
  Field checker(g, -1.0);
  checker[0] = 1.0;
  checker[64 + 1] = 1.0;
  CHECK(count_components(checker) == 2);
  // 1D: two intervals
  auto g1 = build_grid(1, 32);
  CHECK(count_components(Field::sample(g1, [](double x) { return std::sin(2 * x); })) == 2);

  // property: shifting a pattern periodically never changes the count
  Gen gen(42);
  for (int trial = 0; trial < 20; ++trial) {
    const Field f = gen.smooth(g, 3);
    const int n = count_components(f);
    Field shifted(g);
    const int si = gen.integer(0, 63), sj = gen.integer(0, 63);
    for (int j = 0; j < 64; ++j)
      for (int i = 0; i < 64; ++i) shifted[((j + sj) % 64) * 64 + (i + si) % 64] = f[j * 64 + i];
    CHECK(count_components(shifted) == n);
  }
}

TEST_CASE("scheme names round trip") {
  for (Scheme s : {Scheme::UL, Scheme::UW, Scheme::VL, Scheme::VW}) CHECK(parse_scheme(to_string(s)) == s);
  CHECK_FALSE(parse_scheme("UX").has_value());
}
