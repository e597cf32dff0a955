// The five allocations and policy evaluation under a reversion hazard.
#pragma once

#include <optional>
#include <string>

#include "epi/grid.hpp"
#include "epi/kernel.hpp"
#include "epi/model.hpp"

namespace epi {

enum class Allocation { myopic, spp, pbe, prme, static_efficient };

const char* to_string(Allocation a);
Allocation parse_allocation(const std::string& s);

struct SolveOptions {
  PolicyIterationOptions iteration;
  /// S-decrement wiring of the unknown-agent (PBE / PRME / evaluation) chain.
  Wiring agent_wiring = Wiring::decoupled;
  double linear_tolerance = 1e-10;
  /// Belief-slice policy iterations inside one PRME outer step.
  int prme_inner_iterations = 200;
};

struct AllocationResult {
  Allocation allocation = Allocation::myopic;
  Field policy;  // unknown-agent activity; PRME: at the equilibrium belief
  Field value;   // SPP: planner cost C; otherwise V_U (PRME: at equilibrium belief)
  double V_Ik = 0;
  SolveReport report;
  std::string params_hash;
  std::optional<Field> belief_policy;      // PRME over (S, I, mu)
  std::optional<Field> belief_value;       // PRME over (S, I, mu)
  std::optional<Field> quarantine_policy;  // static efficient a_Ik
};

std::string params_digest(const ModelParams& p);

AllocationResult solve_myopic(const ModelParams& p, const StateGrid& grid,
                              const SolveOptions& opt = {});
AllocationResult solve_spp(const ModelParams& p, const StateGrid& grid,
                           const SolveOptions& opt = {});
AllocationResult solve_pbe(const ModelParams& p, const StateGrid& grid,
                           const SolveOptions& opt = {});
/// Requires a grid with a belief dimension (n_mu >= 2).
AllocationResult solve_prme(const ModelParams& p, const StateGrid& grid,
                            const SolveOptions& opt = {});

/// Node coefficient c of the unknown agent's activity problem, given V_U.
double pbe_coefficient(double S, double I, double V_U, const ModelParams& p);
/// One best-response step against the average activity `average`.
Field pbe_best_response(const Field& V_U, const Field& average, const ModelParams& p,
                        const StateGrid& grid);
/// One planner policy-improvement step from the cost field C.
Field spp_improve(const Field& C, const ModelParams& p, const StateGrid& grid);

/// Lockdown maximising current welfare with PBE continuation values fixed.
Field static_efficient_lockdown(const AllocationResult& pbe, const ModelParams& p,
                                const StateGrid& grid);
/// Quarantine activity of known infected maximising current welfare.
Field static_efficient_quarantine(const AllocationResult& pbe, const ModelParams& p,
                                  const StateGrid& grid);
/// Packages the static efficient lockdown and quarantine as an allocation.
AllocationResult solve_static_efficient(const AllocationResult& pbe, const ModelParams& p,
                                        const StateGrid& grid);

struct ReversionValues {
  Field V_U;
  Field V_Ik;
  Field W;  // (sigma S + 1 - sigma) V_U + sigma I V_Ik
  /// eta = infinity only: per-node rate of current welfare under the imposed
  /// policies minus under equilibrium behaviour.
  std::optional<Field> instantaneous_gain;
};

/// Values of policies (a_U, a_Ik) that lapse back to the equilibrium at
/// hazard eta. a_Ik == nullptr keeps the parameters' a_Ik and flow utility;
/// a supplied a_Ik field is valued with u_I = u. eta may be +infinity.
ReversionValues evaluate_policy_with_reversion(const Field& a_U, const Field* a_Ik, double eta,
                                               const AllocationResult& equilibrium,
                                               const ModelParams& p, const StateGrid& grid,
                                               const SolveOptions& opt = {});

}  // namespace epi
