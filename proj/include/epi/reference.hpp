// Serial reference implementations of the parallel kernels, kept for testing
// and benchmarking. The stationary solve here assembles the whole chain as one
// sparse matrix and factorises it, so it shares nothing with the column sweep.
#pragma once

#include "epi/grid.hpp"
#include "epi/kernel.hpp"
#include "epi/model.hpp"
#include "epi/solvers.hpp"

namespace epi::reference {

Stencil build_spp_stencil(const Field& policy, const ModelParams& p, const StateGrid& grid);
Stencil build_agent_stencil(const Field& own, const Field& aggregate, const ModelParams& p,
                            const StateGrid& grid, Wiring wiring);

double stationary_residual(const Stencil& st, const StateGrid& grid, const Field& v);

/// Global sparse LU solve of the stationary system.
Stationary solve_stationary(const Stencil& st, const StateGrid& grid);

Field pbe_best_response(const Field& V_U, const Field& average, const ModelParams& p,
                        const StateGrid& grid);
Field spp_improve(const Field& C, const ModelParams& p, const StateGrid& grid);

/// Full policy iterations built from the serial pieces above.
AllocationResult solve_spp(const ModelParams& p, const StateGrid& grid,
                           const SolveOptions& opt = {});
AllocationResult solve_pbe(const ModelParams& p, const StateGrid& grid,
                           const SolveOptions& opt = {});

}  // namespace epi::reference
