#include "epi/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace epi {

const char* to_string(Allocation a) {
  switch (a) {
    case Allocation::myopic: return "myopic";
    case Allocation::spp: return "spp";
    case Allocation::pbe: return "pbe";
    case Allocation::prme: return "prme";
    case Allocation::static_efficient: return "static_efficient";
  }
  return "?";
}

Allocation parse_allocation(const std::string& s) {
  if (s == "myopic") return Allocation::myopic;
  if (s == "spp") return Allocation::spp;
  if (s == "pbe") return Allocation::pbe;
  if (s == "prme") return Allocation::prme;
  if (s == "static_efficient") return Allocation::static_efficient;
  throw ConfigError("unknown allocation '" + s + "' (myopic | spp | pbe | prme | static_efficient)");
}

std::string params_digest(const ModelParams& p) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g",
                p.r, p.nu, p.beta, p.gamma, p.sigma, p.delta0, p.alpha, p.a_min, p.u_D, p.a_Ik,
                p.uIk_flow);
  return hex_digest(fnv1a(buf));
}

namespace {

struct Evaluation {
  Field value;
  double residual;
};

AllocationResult make_result(Allocation a, const ModelParams& p) {
  AllocationResult r;
  r.allocation = a;
  r.V_Ik = value_known_infected(p);
  r.params_hash = params_digest(p);
  return r;
}

}  // namespace

double pbe_coefficient(double S, double I, double V_U, const ModelParams& p) {
  return p.sigma * belief_mu(S, p.sigma) * p.beta * (value_known_infected(p) - V_U) * I / p.r;
}

Field pbe_best_response(const Field& V_U, const Field& average, const ModelParams& p,
                        const StateGrid& grid) {
  Field next(grid, 1.0, "pbe policy");
  const long nS = static_cast<long>(grid.nS());
#pragma omp parallel for schedule(static)
  for (long s = 0; s < nS; ++s) {
    const auto iS = static_cast<std::size_t>(s);
    for (std::size_t iI = 0; iI < grid.nI(); ++iI) {
      const double c = pbe_coefficient(grid.S()[iS], grid.I()[iI], V_U(iS, iI), p);
      next(iS, iI) = foc_activity(c, p, FocMode::given_average, average(iS, iI));
    }
  }
  return next;
}

Field spp_improve(const Field& C, const ModelParams& p, const StateGrid& grid) {
  Field next(grid, 1.0, "spp policy");
  const std::size_t nI = grid.nI();
  const long nS = static_cast<long>(grid.nS());
#pragma omp parallel for schedule(static)
  for (long s = 0; s < nS; ++s) {
    const auto iS = static_cast<std::size_t>(s);
    const double S = grid.S()[iS];
    for (std::size_t iI = 0; iI < nI; ++iI) {
      const double I = grid.I()[iI];
      // Backward difference in S and forward difference in I; a difference
      // whose transition is absent from the stencil does not enter.
      const double back_S = iS > 0 ? (C(iS, iI) - C(iS - 1, iI)) / grid.dS() : 0.0;
      const double fwd_I =
          iI + 1 < nI ? (C(iS, iI + 1) - C(iS, iI)) / grid.dI_plus(iI) : 0.0;
      const double c = p.beta * S * I * (back_S - fwd_I) / (p.r * (1.0 - p.sigma + p.sigma * S));
      double a = foc_activity(c, p, FocMode::internalized);
      if (iI + 1 == nI) a = std::min(a, boundary_cap(S, p));
      next(iS, iI) = a;
    }
  }
  return next;
}

AllocationResult solve_myopic(const ModelParams& p, const StateGrid& grid,
                              const SolveOptions& opt) {
  AllocationResult r = make_result(Allocation::myopic, p);
  r.policy = Field(grid, 1.0, "myopic policy");
  const auto st = build_agent_stencil(r.policy, r.policy, p, grid, opt.agent_wiring);
  auto sol = solve_stationary(st, grid, opt.linear_tolerance);
  r.value = std::move(sol.value);
  r.value.label = "myopic V_U";
  r.report.converged = true;
  r.report.linear_residual = sol.residual;
  return r;
}

AllocationResult solve_spp(const ModelParams& p, const StateGrid& grid, const SolveOptions& opt) {
  auto evaluate = [&](const Field& policy) {
    auto sol = solve_stationary(build_spp_stencil(policy, p, grid), grid, opt.linear_tolerance);
    return Evaluation{std::move(sol.value), sol.residual};
  };
  auto improve = [&](const Field& C, const Field&) { return spp_improve(C, p, grid); };
  auto out = policy_iteration(Field(grid, 1.0), evaluate, improve, opt.iteration);
  AllocationResult r = make_result(Allocation::spp, p);
  r.policy = std::move(out.policy);
  r.policy.label = "spp policy";
  r.value = std::move(out.value);
  r.value.label = "spp cost C";
  r.report = std::move(out.report);
  return r;
}

AllocationResult solve_pbe(const ModelParams& p, const StateGrid& grid, const SolveOptions& opt) {
  auto evaluate = [&](const Field& policy) {
    auto st = build_agent_stencil(policy, policy, p, grid, opt.agent_wiring);
    auto sol = solve_stationary(st, grid, opt.linear_tolerance);
    return Evaluation{std::move(sol.value), sol.residual};
  };
  auto improve = [&](const Field& V, const Field& policy) {
    return pbe_best_response(V, policy, p, grid);
  };
  auto out = policy_iteration(Field(grid, 1.0), evaluate, improve, opt.iteration);
  AllocationResult r = make_result(Allocation::pbe, p);
  r.policy = std::move(out.policy);
  r.policy.label = "pbe policy";
  r.value = std::move(out.value);
  r.value.label = "pbe V_U";
  r.report = std::move(out.report);
  return r;
}

namespace {

// Unknown agent with private belief mu: the diagnosis hazard feeds V_Ik and
// the undiagnosed-infection hazard lowers the belief by one step.
Stencil belief_slice_stencil(double mu, const Field& own, const Field& aggregate,
                             const Field& V_lower, const ModelParams& p, const StateGrid& grid,
                             Wiring wiring) {
  Stencil st = build_agent_stencil(own, aggregate, p, grid, wiring);
  const double V_Ik = value_known_infected(p);
  const double dmu = grid.dmu();
  const long nS = static_cast<long>(grid.nS());
#pragma omp parallel for schedule(static)
  for (long s = 0; s < nS; ++s) {
    const auto iS = static_cast<std::size_t>(s);
    for (std::size_t iI = 0; iI < grid.nI(); ++iI) {
      const std::size_t k = grid.index(iS, iI);
      const double hazard = mu * p.beta * own(iS, iI) *
                            (p.sigma * p.a_Ik + (1.0 - p.sigma) * aggregate(iS, iI)) *
                            grid.I()[iI];
      const double p_uk = p.sigma * hazard;
      const double p_mu = (1.0 - p.sigma) * hazard / dmu;
      NodeRates& n = st.rows[k];
      n.absorb = p_uk + p_mu;
      n.absorb_inflow = p_uk * V_Ik + p_mu * V_lower(iS, iI);
    }
  }
  return st;
}

Field belief_slice_improve(double mu, const Field& V, const Field& V_lower,
                           const Field& aggregate, const ModelParams& p, const StateGrid& grid) {
  Field next(grid, 1.0);
  const double V_Ik = value_known_infected(p);
  const double dmu = grid.dmu();
  const long nS = static_cast<long>(grid.nS());
#pragma omp parallel for schedule(static)
  for (long s = 0; s < nS; ++s) {
    const auto iS = static_cast<std::size_t>(s);
    for (std::size_t iI = 0; iI < grid.nI(); ++iI) {
      const double v = V(iS, iI);
      const double c = mu * p.beta / (p.r * dmu) *
                       (dmu * p.sigma * (V_Ik - v) + (1.0 - p.sigma) * (V_lower(iS, iI) - v)) *
                       grid.I()[iI];
      next(iS, iI) = foc_activity(c, p, FocMode::given_average, aggregate(iS, iI));
    }
  }
  return next;
}

struct BeliefSolution {
  Field V;  // (S, I, mu)
  Field a;  // (S, I, mu)
};

struct BeliefEvaluation {
  BeliefSolution value;
  double residual;
};

void set_slice(Field& f, std::size_t im, const Field& slice) {
  std::copy(slice.values.begin(), slice.values.end(),
            f.values.begin() + static_cast<std::ptrdiff_t>(im * f.nS * f.nI));
}

Field at_equilibrium_belief(const Field& belief_field, const ModelParams& p,
                            const StateGrid& grid) {
  Field out(grid, 0.0);
  for (std::size_t iS = 0; iS < grid.nS(); ++iS) {
    const auto b = grid.bracket_mu(belief_mu(grid.S()[iS], p.sigma));
    for (std::size_t iI = 0; iI < grid.nI(); ++iI) {
      const double lo = belief_field(iS, iI, b.lo);
      out(iS, iI) = b.w == 0.0 ? lo : (1.0 - b.w) * lo + b.w * belief_field(iS, iI, b.lo + 1);
    }
  }
  return out;
}

}  // namespace

AllocationResult solve_prme(const ModelParams& p, const StateGrid& grid, const SolveOptions& opt) {
  if (grid.nmu() < 2) throw ConfigError("solve_prme: grid needs a belief dimension (n_mu >= 2)");
  const std::size_t nmu = grid.nmu();
  Field warm(grid, 1.0, {}, true);  // own-policy warm start carried across outer steps
  PolicyIterationOptions inner = opt.iteration;
  inner.max_iterations = opt.prme_inner_iterations;
  inner.auto_damping = false;
  bool inner_ok = true;

  // V_U(S, I, 0) = 0: an agent certain not to be susceptible is immune.
  auto evaluate = [&](const Field& average) {
    BeliefSolution sol{Field(grid, 0.0, "prme V_U", true), Field(grid, 1.0, "prme policy", true)};
    double residual = 0;
    for (std::size_t im = 1; im < nmu; ++im) {
      const double mu = grid.mu()[im];
      const Field lower = sol.V.slice(im - 1);
      auto eval_slice = [&](const Field& own) {
        auto st = belief_slice_stencil(mu, own, average, lower, p, grid, opt.agent_wiring);
        auto s = solve_stationary(st, grid, opt.linear_tolerance);
        return Evaluation{std::move(s.value), s.residual};
      };
      auto improve_slice = [&](const Field& V, const Field&) {
        return belief_slice_improve(mu, V, lower, average, p, grid);
      };
      auto out = policy_iteration(warm.slice(im), eval_slice, improve_slice, inner);
      inner_ok = inner_ok && out.report.converged;
      residual = std::max(residual, out.report.linear_residual);
      set_slice(sol.V, im, out.value);
      set_slice(sol.a, im, out.policy);
    }
    warm = sol.a;
    return BeliefEvaluation{std::move(sol), residual};
  };
  auto improve = [&](const BeliefSolution& sol, const Field&) {
    return at_equilibrium_belief(sol.a, p, grid);
  };
  auto out = policy_iteration(Field(grid, 1.0), evaluate, improve, opt.iteration);

  AllocationResult r = make_result(Allocation::prme, p);
  r.policy = at_equilibrium_belief(out.value.a, p, grid);
  r.policy.label = "prme policy";
  r.value = at_equilibrium_belief(out.value.V, p, grid);
  r.value.label = "prme V_U";
  r.belief_policy = std::move(out.value.a);
  r.belief_value = std::move(out.value.V);
  r.report = std::move(out.report);
  r.report.converged = r.report.converged && inner_ok;
  return r;
}

Field static_efficient_lockdown(const AllocationResult& pbe, const ModelParams& p,
                                const StateGrid& grid) {
  Field out(grid, 1.0, "static efficient lockdown");
  double worst = 0;
  for (std::size_t iS = 0; iS < grid.nS(); ++iS)
    for (std::size_t iI = 0; iI < grid.nI(); ++iI) {
      const double c = pbe_coefficient(grid.S()[iS], grid.I()[iI], pbe.value(iS, iI), p);
      const double dagger = foc_activity(c, p, FocMode::internalized);
      const double star = foc_activity(c, p, FocMode::self_consistent);
      worst = std::max({worst, dagger - star, 0.5 * star - dagger});
      out(iS, iI) = dagger;
    }
  if (worst > 1e-9) {
    std::ostringstream os;
    os << "static_efficient_lockdown: a*/2 <= a_dagger <= a* violated by " << worst;
    throw SolverError(os.str());
  }
  return out;
}

Field static_efficient_quarantine(const AllocationResult& pbe, const ModelParams& p,
                                  const StateGrid& grid) {
  Field out(grid, 1.0, "static efficient quarantine");
  const double V_Ik = value_known_infected(p);
  for (std::size_t iS = 0; iS < grid.nS(); ++iS) {
    const double S = grid.S()[iS];
    const double U = p.sigma * S + 1.0 - p.sigma;
    const double mu = belief_mu(S, p.sigma);
    for (std::size_t iI = 0; iI < grid.nI(); ++iI) {
      const double x =
          p.sigma * p.beta * mu * pbe.policy(iS, iI) * U * (pbe.value(iS, iI) - V_Ik) / p.r;
      out(iS, iI) = inverse_marginal_utility(x, p.alpha, p.a_min);
    }
  }
  return out;
}

AllocationResult solve_static_efficient(const AllocationResult& pbe, const ModelParams& p,
                                        const StateGrid& grid) {
  AllocationResult r = make_result(Allocation::static_efficient, p);
  r.policy = static_efficient_lockdown(pbe, p, grid);
  r.quarantine_policy = static_efficient_quarantine(pbe, p, grid);
  // Static interventions lapse instantly: continuation values are the PBE's.
  r.value = pbe.value;
  r.value.label = "static efficient V_U";
  r.report = pbe.report;
  return r;
}

ReversionValues evaluate_policy_with_reversion(const Field& a_U, const Field* a_Ik, double eta,
                                               const AllocationResult& eq, const ModelParams& p,
                                               const StateGrid& grid, const SolveOptions& opt) {
  if (!(eta >= 0)) throw ConfigError("reversion hazard eta must be >= 0");
  const double V_Ik = value_known_infected(p);
  ReversionValues out;
  auto node_params = [&](std::size_t iS, std::size_t iI) {
    ModelParams q = p;
    if (a_Ik) q.a_Ik = (*a_Ik)(iS, iI);
    return q;
  };
  auto Ik_flow = [&](std::size_t iS, std::size_t iI) {
    return a_Ik ? utility((*a_Ik)(iS, iI), p.alpha) : p.uIk_flow;
  };

  if (std::isinf(eta)) {
    out.V_U = eq.value;
    out.V_Ik = Field(grid, V_Ik, "V_Ik");
    Field gain(grid, 0.0, "instantaneous gain");
    for (std::size_t iS = 0; iS < grid.nS(); ++iS) {
      const double S = grid.S()[iS];
      const double U = p.sigma * S + 1.0 - p.sigma, mu = belief_mu(S, p.sigma);
      for (std::size_t iI = 0; iI < grid.nI(); ++iI) {
        const double I = grid.I()[iI];
        const double loss = mu * p.beta * I * (V_Ik - eq.value(iS, iI));
        auto rate = [&](double aU, double aIk, double uI) {
          return U * (p.r * utility(aU, p.alpha) +
                      p.sigma * aU * (p.sigma * aIk + (1 - p.sigma) * aU) * loss) +
                 p.sigma * I * p.r * uI;
        };
        const double aIk = a_Ik ? (*a_Ik)(iS, iI) : p.a_Ik;
        gain(iS, iI) = rate(a_U(iS, iI), aIk, Ik_flow(iS, iI)) -
                       rate(eq.policy(iS, iI), p.a_Ik, p.uIk_flow);
      }
    }
    out.instantaneous_gain = std::move(gain);
  } else {
    // Known infected: flow u_I, removal at gamma into delta u_D, lapse at eta.
    Stencil ik;
    ik.rows.resize(grid.nodes());
    ik.discount = p.r;
    ik.wiring = opt.agent_wiring;
    Stencil uk;
    uk.rows.resize(grid.nodes());
    uk.discount = p.r + p.nu;
    uk.wiring = opt.agent_wiring;
    for (std::size_t iS = 0; iS < grid.nS(); ++iS)
      for (std::size_t iI = 0; iI < grid.nI(); ++iI) {
        const std::size_t k = grid.index(iS, iI);
        const ModelParams q = node_params(iS, iI);
        NodeRates n = agent_stencil(iS, iI, a_U(iS, iI), a_U(iS, iI), q, grid, opt.agent_wiring);
        uk.rows[k] = n;
        uk.rows[k].absorb = 0;
        uk.rows[k].absorb_inflow = 0;
        uk.add_absorption(k, eta, eq.value(iS, iI));
        NodeRates m = n;
        m.absorb = 0;
        m.absorb_inflow = 0;
        m.flow = p.r * Ik_flow(iS, iI);
        ik.rows[k] = m;
        ik.add_absorption(k, p.gamma, p.delta() * p.u_D);
        ik.add_absorption(k, eta, V_Ik);
      }
    out.V_Ik = solve_stationary(ik, grid, opt.linear_tolerance).value;
    out.V_Ik.label = "V_Ik eta";
    // Diagnosis hazard feeds the known-infected value under the same regime.
    for (std::size_t iS = 0; iS < grid.nS(); ++iS)
      for (std::size_t iI = 0; iI < grid.nI(); ++iI) {
        const ModelParams q = node_params(iS, iI);
        const NodeRates n =
            agent_stencil(iS, iI, a_U(iS, iI), a_U(iS, iI), q, grid, opt.agent_wiring);
        uk.add_absorption(grid.index(iS, iI), n.absorb, out.V_Ik(iS, iI));
      }
    out.V_U = solve_stationary(uk, grid, opt.linear_tolerance).value;
    out.V_U.label = "V_U eta";
  }
  out.W = Field(grid, 0.0, "W eta");
  for (std::size_t iS = 0; iS < grid.nS(); ++iS)
    for (std::size_t iI = 0; iI < grid.nI(); ++iI)
      out.W(iS, iI) = (p.sigma * grid.S()[iS] + 1.0 - p.sigma) * out.V_U(iS, iI) +
                      p.sigma * grid.I()[iI] * out.V_Ik(iS, iI);
  return out;
}

}  // namespace epi
