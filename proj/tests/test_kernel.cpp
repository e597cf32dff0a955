#include <omp.h>

#include <cmath>
#include <vector>

#include "epi/kernel.hpp"
#include "support.hpp"

using namespace epi;
using epi::test::uniform;

namespace {

Field random_policy(const StateGrid& g, double lo) {
  Field f(g, 1.0);
  for (auto& v : f.values) v = uniform(lo, 1.0);
  return f;
}

// Dense Gaussian elimination with partial pivoting on the assembled system:
// an oracle that shares nothing with the column sweep.
std::vector<double> dense_solve(const Stencil& st, const StateGrid& g) {
  const std::size_t N = g.nodes();
  std::vector<double> A(N * N, 0.0), b(N, 0.0);
  for (std::size_t iS = 0; iS < g.nS(); ++iS)
    for (std::size_t iI = 0; iI < g.nI(); ++iI) {
      const std::size_t k = g.index(iS, iI);
      const NodeRates& n = st.rows[k];
      A[k * N + k] = st.discount + n.down_S + n.down_I + n.up_I + n.absorb;
      b[k] = n.flow + n.absorb_inflow;
      if (n.down_I != 0) A[k * N + g.index(iS, iI - 1)] -= n.down_I;
      if (n.up_I != 0) A[k * N + g.index(iS, iI + 1)] -= n.up_I;
      if (n.down_S != 0) {
        if (st.wiring == Wiring::decoupled) {
          A[k * N + g.index(iS - 1, iI)] -= n.down_S;
        } else {
          // Target I + dS, interpolated linearly in log(I + s) by hand.
          const double target = g.I()[iI] + g.dS();
          std::size_t j = 0;
          while (j + 2 < g.nI() && g.I()[j + 1] <= target) ++j;
          double w = (std::log(target + g.I_shift()) - std::log(g.I()[j] + g.I_shift())) /
                     (std::log(g.I()[j + 1] + g.I_shift()) - std::log(g.I()[j] + g.I_shift()));
          w = std::clamp(w, 0.0, 1.0);
          A[k * N + g.index(iS - 1, j)] -= n.down_S * (1 - w);
          A[k * N + g.index(iS - 1, j + 1)] -= n.down_S * w;
        }
      }
    }
  for (std::size_t c = 0; c < N; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < N; ++r)
      if (std::abs(A[r * N + c]) > std::abs(A[piv * N + c])) piv = r;
    if (piv != c) {
      for (std::size_t j = 0; j < N; ++j) std::swap(A[c * N + j], A[piv * N + j]);
      std::swap(b[c], b[piv]);
    }
    for (std::size_t r = c + 1; r < N; ++r) {
      const double m = A[r * N + c] / A[c * N + c];
      if (m == 0) continue;
      for (std::size_t j = c; j < N; ++j) A[r * N + j] -= m * A[c * N + j];
      b[r] -= m * b[c];
    }
  }
  std::vector<double> x(N);
  for (std::size_t c = N; c-- > 0;) {
    double s = b[c];
    for (std::size_t j = c + 1; j < N; ++j) s -= A[c * N + j] * x[j];
    x[c] = s / A[c * N + c];
  }
  return x;
}

const StateGrid& tiny_grid() {
  static const StateGrid g = [] {
    GridSpec s;
    s.n_S = 12;
    s.n_I = 25;
    return StateGrid(s);
  }();
  return g;
}

}  // namespace

TEST_CASE("wiring names") {
  for (auto w : {Wiring::decoupled, Wiring::joint, Wiring::joint_literal})
    CHECK(parse_wiring(to_string(w)) == w);
  CHECK_THROWS_AS(parse_wiring("sideways"), ConfigError);
}

TEST_CASE("stencil rates are nonnegative and stay on the grid") {
  const auto& g = epi::test::small_grid();
  for (int trial = 0; trial < 10; ++trial) {
    const ModelParams p = epi::test::random_params();
    const Field pol = random_policy(g, p.a_min);
    for (auto w : {Wiring::decoupled, Wiring::joint, Wiring::joint_literal}) {
      const auto st = build_agent_stencil(pol, pol, p, g, w);
      for (std::size_t iS = 0; iS < g.nS(); ++iS)
        for (std::size_t iI = 0; iI < g.nI(); ++iI) {
          const auto& n = st.rows[g.index(iS, iI)];
          CHECK((n.down_S >= 0 && n.down_I >= 0 && n.up_I >= 0 && n.absorb >= 0));
          if (iS == 0) CHECK(n.down_S == 0);
          if (iI == 0) CHECK(n.down_I == 0);
          if (iI + 1 == g.nI()) CHECK(n.up_I == 0);
        }
    }
    const auto sp = build_spp_stencil(pol, p, g);
    for (std::size_t k = 0; k < g.nodes(); ++k) {
      const auto& n = sp.rows[k];
      CHECK((n.down_S >= 0 && n.down_I >= 0 && n.up_I >= 0 && n.flow >= 0));
    }
  }
}

TEST_CASE("stencil first moments match the continuous drift") {
  const auto& g = epi::test::small_grid();
  const ModelParams p;
  const Field pol = random_policy(g, 0.2);
  const auto st = build_spp_stencil(pol, p, g);
  for (std::size_t iS = 1; iS < g.nS(); ++iS)
    for (std::size_t iI = 1; iI + 1 < g.nI(); ++iI) {
      const auto& n = st.rows[g.index(iS, iI)];
      const double S = g.S()[iS], I = g.I()[iI], a = pol(iS, iI);
      const double inf = p.beta * S * I * a * (p.sigma * p.a_Ik + (1 - p.sigma) * a);
      CHECK(-n.down_S * g.dS() == doctest::Approx(-inf).epsilon(1e-12));
      CHECK(n.up_I * g.dI_plus(iI) - n.down_I * g.dI_minus(iI) ==
            doctest::Approx(inf - p.gamma * I).epsilon(1e-12));
    }
}

TEST_CASE("column sweep matches a dense solve") {
  const auto& g = tiny_grid();
  for (auto w : {Wiring::decoupled, Wiring::joint, Wiring::joint_literal}) {
    for (int trial = 0; trial < 3; ++trial) {
      const ModelParams p = epi::test::random_params();
      const Field own = random_policy(g, p.a_min), agg = random_policy(g, p.a_min);
      const auto st = build_agent_stencil(own, agg, p, g, w);
      const auto sol = solve_stationary(st, g);
      const auto x = dense_solve(st, g);
      CHECK(sol.residual <= 1e-12);
      for (std::size_t k = 0; k < g.nodes(); ++k)
        CHECK(sol.value.values[k] == doctest::Approx(x[k]).epsilon(1e-11));
    }
  }
  const ModelParams p;
  const auto st = build_spp_stencil(random_policy(g, 0.01), p, g);
  const auto sol = solve_stationary(st, g);
  const auto x = dense_solve(st, g);
  for (std::size_t k = 0; k < g.nodes(); ++k)
    CHECK(sol.value.values[k] == doctest::Approx(x[k]).epsilon(1e-11));
}

TEST_CASE("constant flow gives the discounted constant") {
  const auto& g = epi::test::small_grid();
  const ModelParams p;
  const Field pol = random_policy(g, 0.3);
  auto st = build_agent_stencil(pol, pol, p, g, Wiring::decoupled);
  for (auto& n : st.rows) {
    n.flow = -0.7;
    n.absorb = 0;
    n.absorb_inflow = 0;
  }
  const auto sol = solve_stationary(st, g);
  for (double v : sol.value.values) CHECK(v == doctest::Approx(-0.7 / st.discount).epsilon(1e-12));
}

TEST_CASE("stationary solve rejects malformed stencils") {
  const auto& g = tiny_grid();
  const ModelParams p;
  auto st = build_spp_stencil(Field(g, 1.0), p, g);
  st.rows[g.index(3, 4)].up_I = -1.0;
  CHECK_THROWS_AS(solve_stationary(st, g), SolverError);
  st = build_spp_stencil(Field(g, 1.0), p, g);
  st.rows[g.index(0, 4)].down_S = 1.0;
  CHECK_THROWS_AS(solve_stationary(st, g), SolverError);
  st.rows.pop_back();
  CHECK_THROWS_AS(solve_stationary(st, g), SolverError);
}

TEST_CASE("joint targets bracket I + dS") {
  const auto& g = epi::test::benchmark_grid();
  const auto jt = joint_targets(g);
  for (std::size_t i = 0; i < g.nI(); ++i) {
    CHECK(jt[i].w >= 0.0);
    CHECK(jt[i].w <= 1.0);
    const double t = std::min(g.I()[i] + g.dS(), 1.0);
    CHECK(g.I()[jt[i].lo] <= t);
    CHECK(g.I()[jt[i].lo + 1] >= t * (1 - 1e-12));
  }
}

TEST_CASE("boundary cap stops net inflow at the top of the I grid") {
  for (int trial = 0; trial < 200; ++trial) {
    ModelParams p = epi::test::random_params();
    if (trial % 5 == 0) p.sigma = 1.0;
    const double S = uniform(1e-6, 1.0);
    const double a = boundary_cap(S, p);
    CHECK(a >= p.a_min);
    CHECK(a <= 1.0);
    const double growth = p.beta * S * a * (p.sigma * p.a_Ik + (1 - p.sigma) * a) - p.gamma;
    if (a > p.a_min && a < 1.0) CHECK(growth == doctest::Approx(0.0).scale(p.gamma).epsilon(1e-10));
    if (a == 1.0) CHECK(growth <= 1e-12);
  }
  CHECK(boundary_cap(0.0, ModelParams{}) == 1.0);
}

TEST_CASE("policy iteration driver") {
  GridSpec s;
  s.n_S = 2;
  s.n_I = 3;
  const StateGrid g(s);
  struct Eval {
    Field value;
    double residual;
  };
  SUBCASE("contraction converges and reports") {
    // x -> 0.5 x + 0.25 has fixed point 0.5.
    auto evaluate = [](const Field& pol) { return Eval{pol, 0.0}; };
    auto improve = [&](const Field& v, const Field&) {
      Field n = v;
      for (auto& x : n.values) x = 0.5 * x + 0.25;
      return n;
    };
    auto out = policy_iteration(Field(g, 1.0), evaluate, improve);
    CHECK(out.report.converged);
    CHECK(out.policy.values[0] == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(out.report.change_history.size() == static_cast<std::size_t>(out.report.outer_iterations));
  }
  SUBCASE("a two-cycle is damped into convergence") {
    // x -> 1 - x oscillates between 1 and 0 at full step.
    auto evaluate = [](const Field& pol) { return Eval{pol, 0.0}; };
    auto improve = [&](const Field& v, const Field&) {
      Field n = v;
      for (auto& x : n.values) x = 1.0 - x;
      return n;
    };
    auto out = policy_iteration(Field(g, 1.0), evaluate, improve);
    CHECK(out.report.damped);
    CHECK(out.report.converged);
    CHECK(out.policy.values[0] == doctest::Approx(0.5).epsilon(1e-7));
    PolicyIterationOptions plain;
    plain.auto_damping = false;
    plain.max_iterations = 20;
    CHECK_FALSE(policy_iteration(Field(g, 1.0), evaluate, improve, plain).report.converged);
  }
}

TEST_CASE("results do not depend on the thread count") {
  const auto& g = epi::test::benchmark_grid();
  const ModelParams p;
  const int before = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = solve_pbe(p, g);
  omp_set_num_threads(4);
  const auto four = solve_pbe(p, g);
  omp_set_num_threads(before);
  CHECK(one.policy.values == four.policy.values);
  CHECK(one.value.values == four.value.values);
}
