#include <gtest/gtest.h>

#include <cmath>

#include "bimp/propagation.hpp"
#include "test_support.hpp"

namespace bimp {
namespace {

using testing::Gen;

ModelSpec diffusive(double a, double b, double sigma) {
  GaussianImpactParams p;
  p.drift = AffineDrift{{a}, Coord{b}};
  p.diffusion = ConstantDiffusion{{sigma}};
  return make_gaussian_impact_model(p);
}

GridSpec wide_grid(const ModelSpec& spec, int level) {
  GridOptions o;
  o.level = level;
  o.lower = {-10.0};
  o.upper = {10.0};
  o.space_nodes = {81};
  o.simplex_nodes = 3;
  return build_grids(spec, o);
}

ValueField fill(const GridSpec& g, auto fn) {
  ValueField f(g);
  for (std::size_t j = 0; j < g.time_count(); ++j)
    for (std::size_t s = 0; s < g.space_count(); ++s)
      for (std::size_t p = 0; p < g.simplex.size(); ++p) f.at(j, s, p) = fn(j, g.space_point(s)[0], p);
  return f;
}

TEST(WaitExpectation, FrozenDynamicsReadsLaterSlice) {
  const ModelSpec spec = diffusive(0.0, 0.0, 0.0);
  const GridSpec g = wide_grid(spec, 2);
  const ValueField f = fill(g, [](std::size_t j, double x, std::size_t p) { return 10.0 * j + x + 0.1 * p; });
  const double v = wait_expectation(f, spec, State{0.25, Coord{1.5}}, g.simplex.node(2), 3, PropagationSettings{});
  EXPECT_EQ(v, 30.0 + 1.5 + 0.2);
}

TEST(WaitExpectation, ConstantDriftShiftsLinearField) {
  const ModelSpec spec = diffusive(0.0, 1.0, 0.0);
  const GridSpec g = wide_grid(spec, 2);
  const ValueField f = fill(g, [](std::size_t, double x, std::size_t) { return x; });
  const double v = wait_expectation(f, spec, State{0.5, Coord{0.5}}, Prior({0.5, 0.5}), 3, PropagationSettings{});
  EXPECT_NEAR(v, 0.75, 1e-15);
}

TEST(ExpectAfterWait, SecondMomentOfOneStep) {
  const ModelSpec spec = diffusive(0.0, 0.0, 1.0);
  for (std::size_t nodes : {2u, 3u, 5u, 8u}) {
    const TensorRule rule = tensor_normal_rule(nodes, 1);
    const double h = 0.125;
    const double v = expect_after_wait(spec, State{0.0, Coord{1.5}}, h, 1, rule,
                                       [](const Coord& x) { return x[0] * x[0]; });
    EXPECT_NEAR(v, 1.5 * 1.5 + h, 1e-14) << "nodes=" << nodes;
  }
}

TEST(WaitProperty, ConstantsArePreserved) {
  Gen gen(51);
  for (int trial = 0; trial < 100; ++trial) {
    const ModelSpec spec = diffusive(gen.uniform(-1.0, 1.0), gen.uniform(-1.0, 1.0), gen.uniform(0.0, 1.0));
    const GridSpec g = wide_grid(spec, 2);
    const double c = gen.uniform(-5.0, 5.0);
    const ValueField f = fill(g, [&](std::size_t, double, std::size_t) { return c; });
    const std::size_t from = gen.index(4);
    const std::size_t until = from + 1;
    const double v = wait_expectation(f, spec, State{g.time(from), Coord{gen.uniform(-3.0, 3.0)}},
                                      gen.prior(2), until, PropagationSettings{});
    EXPECT_NEAR(v, c, 1e-12);
  }
}

TEST(WaitProperty, MonotoneInTheField) {
  Gen gen(52);
  const ModelSpec spec = diffusive(-0.3, 0.1, 0.6);
  const GridSpec g = wide_grid(spec, 2);
  for (int trial = 0; trial < 50; ++trial) {
    ValueField lo(g);
    for (double& v : lo.values) v = gen.uniform(-1.0, 1.0);
    ValueField hi = lo;
    for (double& v : hi.values) v += gen.uniform(0.0, 0.5);
    const State z{0.25, Coord{gen.uniform(-4.0, 4.0)}};
    const Prior m = gen.prior(2);
    EXPECT_LE(wait_expectation(lo, spec, z, m, 2, PropagationSettings{}),
              wait_expectation(hi, spec, z, m, 2, PropagationSettings{}));
  }
}

// Ornstein–Uhlenbeck dX = (b - a X) dt + σ dW has a Gaussian law with closed
// form mean and variance; the battery checks cos, a quartic and an
// exponential.
struct OuCase {
  double a, b, sigma, x, gap;
};

double ou_mean(const OuCase& c) { return c.x * std::exp(-c.a * c.gap) + c.b / c.a * (1.0 - std::exp(-c.a * c.gap)); }
double ou_var(const OuCase& c) { return c.sigma * c.sigma * (1.0 - std::exp(-2.0 * c.a * c.gap)) / (2.0 * c.a); }

TEST(WaitProperty, EulerRefinementConvergesOnBattery) {
  const OuCase cases[] = {{0.8, 0.2, 0.5, 1.0, 0.5}, {1.5, -0.3, 0.3, -0.5, 0.25}, {0.4, 0.0, 0.8, 2.0, 1.0}};
  for (const OuCase& c : cases) {
    const ModelSpec spec = diffusive(-c.a, c.b, c.sigma);
    const double m = ou_mean(c);
    const double v = ou_var(c);
    const double exact_cos = std::cos(m) * std::exp(-0.5 * v);
    const double exact_exp = std::exp(0.5 * m + 0.125 * v);
    const double exact_quartic = m * m * m * m + 6.0 * m * m * v + 3.0 * v * v;
    double prev[3] = {1e300, 1e300, 1e300};
    for (std::size_t steps : {1u, 2u, 4u, 8u}) {
      const TensorRule rule = tensor_normal_rule(6, 1);
      const State z{0.0, Coord{c.x}};
      const double e[3] = {
          std::abs(expect_after_wait(spec, z, c.gap, steps, rule, [](const Coord& y) { return std::cos(y[0]); }) -
                   exact_cos),
          std::abs(expect_after_wait(spec, z, c.gap, steps, rule, [](const Coord& y) { return std::exp(0.5 * y[0]); }) -
                   exact_exp),
          std::abs(expect_after_wait(spec, z, c.gap, steps, rule, [](const Coord& y) { return std::pow(y[0], 4); }) -
                   exact_quartic)};
      for (int i = 0; i < 3; ++i) {
        EXPECT_LT(e[i], prev[i]) << "a=" << c.a << " steps=" << steps << " test=" << i;
        prev[i] = e[i];
      }
    }
  }
}

TEST(WaitProperty, HermiteRefinementConvergesForBrownianMotion) {
  const ModelSpec spec = diffusive(0.0, 0.0, 0.7);
  const double x = 0.4;
  const double gap = 1.0;
  const double exact = std::cos(x) * std::exp(-0.5 * 0.49 * gap);
  double prev = 1e300;
  for (std::size_t nodes : {2u, 4u, 8u, 16u}) {
    const double v = expect_after_wait(spec, State{0.0, Coord{x}}, gap, 1, tensor_normal_rule(nodes, 1),
                                       [](const Coord& y) { return std::cos(y[0]); });
    const double err = std::abs(v - exact);
    EXPECT_LT(err, std::max(prev, 1e-15));
    prev = err;
  }
  EXPECT_LT(prev, 1e-12);
}

}  // namespace
}  // namespace bimp
