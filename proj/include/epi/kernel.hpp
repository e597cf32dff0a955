// Locally consistent Markov-chain stencils, the stationary linear solve and the
// generic policy-iteration driver.
//
// Every stencil sends S-decrements to the previous S column, so the stationary
// system is block lower-triangular in S: it is solved column by column from the
// smallest S upward, each column being a diagonally dominant tridiagonal
// system in I. Node-wise kernels (stencil assembly, residuals) run in parallel
// over nodes; the sweep itself is sequential in S and therefore deterministic
// for any thread count.
#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "epi/grid.hpp"
#include "epi/model.hpp"

namespace epi {

/// Where an S-decrement lands.
///   decoupled:     (S - dS, I); infections move I through the up-I rate.
///   joint:         (S - dS, I + dS); the I moves then carry removals only.
///   joint_literal: (S - dS, I + dS) and the I moves also carry the net
///                  infection drift (the double-counting literal reading).
enum class Wiring { decoupled, joint, joint_literal };

const char* to_string(Wiring w);
Wiring parse_wiring(const std::string& s);

/// Rates out of one node, already divided by the time step.
struct NodeRates {
  double down_S = 0;  // to the S-decrement target
  double down_I = 0;  // to (S, I - dI-)
  double up_I = 0;    // to (S, I + dI+)
  double absorb = 0;  // total rate into states with known value
  double absorb_inflow = 0;  // sum of rate x known value
  double flow = 0;           // payoff (or cost) rate
};

struct Stencil {
  std::vector<NodeRates> rows;  // indexed like StateGrid::index
  double discount = 0;          // r + nu (plus any reversion hazard folded in)
  Wiring wiring = Wiring::decoupled;

  void add_absorption(std::size_t k, double rate, double value) {
    rows[k].absorb += rate;
    rows[k].absorb_inflow += rate * value;
  }
};

/// Planner cost stencil at one node under unknown-agent activity a_U.
NodeRates spp_stencil(std::size_t iS, std::size_t iI, double a_U, const ModelParams& p,
                      const StateGrid& grid);
Stencil build_spp_stencil(const Field& policy, const ModelParams& p, const StateGrid& grid);

/// Unknown-agent value stencil: aggregate activity a_agg moves the state, own
/// activity a_own sets the diagnosis hazard into V_Ik and the flow utility.
NodeRates agent_stencil(std::size_t iS, std::size_t iI, double a_own, double a_agg,
                        const ModelParams& p, const StateGrid& grid, Wiring wiring);
Stencil build_agent_stencil(const Field& own, const Field& aggregate, const ModelParams& p,
                            const StateGrid& grid, Wiring wiring);

/// Highest activity at the top I node that keeps the chain on the grid.
double boundary_cap(double S, const ModelParams& p);

/// Interpolation weights for the joint S-decrement target, per I node.
struct JointTarget {
  std::size_t lo;
  double w;
};
std::vector<JointTarget> joint_targets(const StateGrid& grid);

struct Stationary {
  Field value;
  double residual = 0;  // sup-norm residual relative to row scale
};

/// Solves 0 = flow + inflow + sum(rate x neighbour) - (discount + total) V.
/// Throws SolverError if the residual exceeds `tolerance`.
Stationary solve_stationary(const Stencil& stencil, const StateGrid& grid,
                            double tolerance = 1e-10);
/// Sup-norm of the row residuals relative to the row scale.
double stationary_residual(const Stencil& stencil, const StateGrid& grid, const Field& value);

struct SolveReport {
  int outer_iterations = 0;
  double linear_residual = 0;
  double policy_change = 0;
  double wall_time = 0;
  bool converged = false;
  bool damped = false;
  std::vector<double> change_history;
};

struct PolicyIterationOptions {
  double tolerance = 1e-8;
  int max_iterations = 500;
  /// Switch to half-step updates if successive updates flip sign without shrinking.
  bool auto_damping = true;
};

template <class Value>
struct PolicyIterationOutcome {
  Value value;
  Field policy;
  SolveReport report;
};

/// Alternates evaluate(policy) -> {value, residual} and improve(value, policy)
/// -> policy until the sup-norm policy change is within tolerance. The
/// returned value is evaluated at the returned policy.
template <class Evaluate, class Improve>
auto policy_iteration(Field policy, Evaluate&& evaluate, Improve&& improve,
                      const PolicyIterationOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  double step = 1.0;
  double prev_change = INFINITY, prev_signed = 0;
  auto eval = evaluate(policy);
  rep.linear_residual = eval.residual;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    Field next = improve(eval.value, policy);
    double change = 0, signed_change = 0;
    for (std::size_t k = 0; k < next.size(); ++k) {
      const double d = next.values[k] - policy.values[k];
      if (std::abs(d) > change) {
        change = std::abs(d);
        signed_change = d;
      }
    }
    if (opt.auto_damping && step == 1.0 && it > 2 && signed_change * prev_signed < 0 &&
        change >= prev_change) {
      step = 0.5;
      rep.damped = true;
    }
    if (step != 1.0)
      for (std::size_t k = 0; k < next.size(); ++k)
        next.values[k] = policy.values[k] + step * (next.values[k] - policy.values[k]);
    policy = std::move(next);
    rep.outer_iterations = it;
    rep.policy_change = change;
    rep.change_history.push_back(change);
    eval = evaluate(policy);
    rep.linear_residual = std::max(rep.linear_residual, eval.residual);
    if (change <= opt.tolerance) {
      rep.converged = true;
      break;
    }
    prev_change = change;
    prev_signed = signed_change;
  }
  rep.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  using V = decltype(eval.value);
  return PolicyIterationOutcome<V>{std::move(eval.value), std::move(policy), std::move(rep)};
}

}  // namespace epi
