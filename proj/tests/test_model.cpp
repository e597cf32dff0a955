#include <cmath>
#include <vector>

#include "epi/model.hpp"
#include "support.hpp"

using namespace epi;
using epi::test::uniform;

namespace {

// Brute-force argmax of the activity objective on a fine grid, refined once
// around the best point. Independent of the closed forms in foc_activity.
double brute_argmax(double c, const ModelParams& p, FocMode mode, double a_tilde) {
  auto objective = [&](double a) {
    const double avg = mode == FocMode::given_average ? a_tilde : a;
    return utility(a, p.alpha) + c * a * (p.sigma * p.a_Ik + (1.0 - p.sigma) * avg);
  };
  const double lo = std::max(p.a_min, 1e-9);
  double best = lo, best_v = objective(lo);
  const int n = 20000;
  for (int i = 0; i <= n; ++i) {
    const double a = lo + (1.0 - lo) * i / n;
    const double v = objective(a);
    if (v > best_v) best_v = v, best = a;
  }
  const double h = (1.0 - lo) / n;
  const double a0 = std::max(lo, best - h), a1 = std::min(1.0, best + h);
  for (int i = 0; i <= 2000; ++i) {
    const double a = a0 + (a1 - a0) * i / 2000;
    const double v = objective(a);
    if (v > best_v) best_v = v, best = a;
  }
  return best;
}

// Root of u'(a) + c (sigma a_Ik + (1 - sigma) a) = 0 on [a_min, 1], by scanning.
double brute_self_consistent(double c, const ModelParams& p) {
  auto g = [&](double a) {
    return marginal_utility(a, p.alpha) + c * (p.sigma * p.a_Ik + (1.0 - p.sigma) * a);
  };
  const double lo = std::max(p.a_min, 1e-9);
  if (g(1.0) >= 0) return 1.0;
  if (g(lo) <= 0) return lo;
  double a = lo, b = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (a + b);
    (g(m) > 0 ? a : b) = m;
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("benchmark constants") {
  const ModelParams p;
  const auto d = derive(p);
  // Values from an independent 30-digit evaluation of the closed forms.
  CHECK(d.delta == doctest::Approx(0.00675).epsilon(1e-15));
  CHECK(d.R0 == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(d.herd_threshold == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(std::abs(d.V_Ik - -0.0823328448452551752) < 1e-15);
  CHECK(std::abs(d.C_vac - 0.0329331379381020701) < 1e-15);
  CHECK(std::abs(d.I_bar - 0.0224460758617971048) < 1e-15);
}

TEST_CASE("post-vaccine cost coincides with the S=0 planner slope when u_Ik = 0") {
  const ModelParams p;
  const double k = (p.gamma * p.delta() * p.sigma * -p.u_D + p.nu * cost_post_vaccine(p)) /
                   (p.r + p.nu + p.gamma);
  CHECK(k == doctest::Approx(cost_post_vaccine(p)).epsilon(1e-14));
}

TEST_CASE("utility") {
  CHECK(utility(1.0, 1.0) == 0.0);
  CHECK(utility(1.0, 2.5) == 0.0);
  CHECK(utility(std::exp(-1.0), 1.0) == doctest::Approx(-1.0));
  CHECK(utility(0.5, 2.0) == doctest::Approx(-1.0));  // (0.5^-1 - 1) / -1
  CHECK_THROWS_AS(utility(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(utility(-0.1, 2.0), DomainError);
  CHECK_THROWS_AS(inverse_utility(0.1, 1.0), DomainError);

  SUBCASE("round trip") {
    for (int i = 0; i < 500; ++i) {
      const double a = uniform(1e-3, 1.0), alpha = uniform(0.2, 5.0);
      CHECK(inverse_utility(utility(a, alpha), alpha) == doctest::Approx(a).epsilon(1e-10));
    }
  }
  SUBCASE("increasing and concave") {
    for (int i = 0; i < 200; ++i) {
      const double alpha = uniform(0.2, 5.0);
      const double a = uniform(0.01, 0.98), b = a + uniform(1e-3, 1.0 - a);
      CHECK(utility(a, alpha) < utility(b, alpha));
      CHECK(marginal_utility(a, alpha) > marginal_utility(b, alpha));
    }
  }
}

TEST_CASE("inverse marginal utility clamps to [a_min, 1]") {
  CHECK(inverse_marginal_utility(0.3, 1.0, 0.01) == 1.0);
  CHECK(inverse_marginal_utility(1.0, 2.0, 0.01) == 1.0);
  CHECK(inverse_marginal_utility(4.0, 1.0, 0.01) == doctest::Approx(0.25));
  CHECK(inverse_marginal_utility(4.0, 2.0, 0.01) == doctest::Approx(0.5));
  CHECK(inverse_marginal_utility(1e6, 1.0, 0.01) == 0.01);
  for (int i = 0; i < 200; ++i) {
    const double alpha = uniform(0.3, 4.0), a = uniform(0.02, 1.0);
    CHECK(inverse_marginal_utility(marginal_utility(a, alpha), alpha, 0.01) ==
          doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("belief") {
  CHECK(belief_mu(0.0, 0.4) == 0.0);
  CHECK(belief_mu(1.0, 0.4) == doctest::Approx(1.0));
  CHECK(belief_mu(0.3, 1.0) == doctest::Approx(1.0));
  // Diagnosed agents are removed from the pool, so the undiagnosed are more
  // likely susceptible than the population share.
  for (int i = 0; i < 100; ++i) {
    const double S = uniform(1e-6, 0.999), sigma = uniform(0.01, 0.99);
    const double mu = belief_mu(S, sigma);
    CHECK(mu >= S);
    CHECK(mu <= 1.0);
  }
}

TEST_CASE("curvature bounds") {
  ModelParams p;
  const auto b = curvature_bounds(p);
  CHECK(b.m == 1.0);
  CHECK(b.M == doctest::Approx(1e4));
  p.alpha = 2.0;
  p.a_min = 0.1;
  CHECK(curvature_bounds(p).M == doctest::Approx(2.0 * 1e3));
}

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(ModelParams{}.validate());
  auto bad = [](auto mutate) {
    ModelParams p;
    mutate(p);
    CHECK_THROWS_AS(p.validate(), ConfigError);
  };
  bad([](ModelParams& p) { p.sigma = 0.0; });
  bad([](ModelParams& p) { p.sigma = 1.2; });
  bad([](ModelParams& p) { p.r = 0.0; });
  bad([](ModelParams& p) { p.nu = -1.0; });
  bad([](ModelParams& p) { p.u_D = 0.0; });
  bad([](ModelParams& p) { p.uIk_flow = 0.5; });
  bad([](ModelParams& p) { p.a_Ik = 0.001; });
  bad([](ModelParams& p) { p.a_min = 1.0; });
  bad([](ModelParams& p) { p.delta0 = 0.5, p.sigma = 0.1; });
}

TEST_CASE("activity first-order condition against brute-force argmax") {
  auto& gen = epi::test::rng();
  for (int i = 0; i < 300; ++i) {
    ModelParams p = epi::test::random_params();
    const double c = -std::exp(std::uniform_real_distribution<double>(-4, 7)(gen));
    const double at = uniform(p.a_min, 1.0);
    INFO("c=" << c << " alpha=" << p.alpha << " sigma=" << p.sigma << " a_min=" << p.a_min);
    CHECK(std::abs(foc_activity(c, p, FocMode::internalized) -
                   brute_argmax(c, p, FocMode::internalized, 0)) <= 1e-4);
    CHECK(std::abs(foc_activity(c, p, FocMode::given_average, at) -
                   brute_argmax(c, p, FocMode::given_average, at)) <= 1e-4);
    CHECK(std::abs(foc_activity(c, p, FocMode::self_consistent) - brute_self_consistent(c, p)) <=
          1e-9);
  }
}

TEST_CASE("activity is full when the marginal cost of infection is nonnegative") {
  const ModelParams p;
  for (auto mode : {FocMode::given_average, FocMode::self_consistent, FocMode::internalized}) {
    CHECK(foc_activity(0.0, p, mode) == 1.0);
    CHECK(foc_activity(3.0, p, mode) == 1.0);
  }
  CHECK_THROWS_AS(foc_activity(std::nan(""), p, FocMode::internalized), SolverError);
}

TEST_CASE("activity is nonincreasing in the infection cost and the planner halves at most") {
  for (int i = 0; i < 300; ++i) {
    const ModelParams p = epi::test::random_params();
    const double c1 = -uniform(0.0, 50.0), c2 = c1 - uniform(0.0, 50.0);
    for (auto mode : {FocMode::given_average, FocMode::self_consistent, FocMode::internalized})
      CHECK(foc_activity(c2, p, mode) <= foc_activity(c1, p, mode) + 1e-12);
    const double star = foc_activity(c1, p, FocMode::self_consistent);
    const double dagger = foc_activity(c1, p, FocMode::internalized);
    CHECK(dagger <= star + 1e-12);
    CHECK(dagger >= 0.5 * star - 1e-12);
  }
}

TEST_CASE("full activity below the prevalence threshold") {
  // With V_U <= 0 the largest infection cost at prevalence I is sigma beta |V_Ik| I / r.
  const ModelParams p;
  const double Ibar = full_activity_threshold(p);
  for (int i = 0; i < 100; ++i) {
    const double I = uniform(0.0, 0.999 * Ibar), S = uniform(0.0, 1.0), V_U = uniform(-1e-3, 0.0);
    const double c = p.sigma * belief_mu(S, p.sigma) * p.beta * (value_known_infected(p) - V_U) * I / p.r;
    CHECK(foc_activity(c, p, FocMode::given_average, uniform(p.a_min, 1.0)) == 1.0);
  }
}

TEST_CASE("effective reproduction number") {
  const ModelParams p;
  CHECK(effective_R(1.0, 1.0, p) == doctest::Approx(2.5));
  CHECK(effective_R(0.4, 1.0, p) == doctest::Approx(1.0));
  CHECK(effective_R(1.0, 0.5, p) == doctest::Approx(2.5 * 0.5 * (0.4 + 0.6 * 0.5)));
}
