#include "epi/reference.hpp"

#include <Eigen/SparseLU>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <vector>

namespace epi::reference {

Stencil build_spp_stencil(const Field& policy, const ModelParams& p, const StateGrid& grid) {
  Stencil st;
  st.rows.resize(grid.nodes());
  st.discount = p.r + p.nu;
  for (std::size_t iS = 0; iS < grid.nS(); ++iS)
    for (std::size_t iI = 0; iI < grid.nI(); ++iI)
      st.rows[grid.index(iS, iI)] = spp_stencil(iS, iI, policy(iS, iI), p, grid);
  return st;
}

Stencil build_agent_stencil(const Field& own, const Field& aggregate, const ModelParams& p,
                            const StateGrid& grid, Wiring wiring) {
  Stencil st;
  st.rows.resize(grid.nodes());
  st.discount = p.r + p.nu;
  st.wiring = wiring;
  for (std::size_t iS = 0; iS < grid.nS(); ++iS)
    for (std::size_t iI = 0; iI < grid.nI(); ++iI)
      st.rows[grid.index(iS, iI)] =
          agent_stencil(iS, iI, own(iS, iI), aggregate(iS, iI), p, grid, wiring);
  return st;
}

namespace {

// Off-diagonal entries (column, rate) of one row of the generator.
void neighbours(const Stencil& st, const StateGrid& grid, std::size_t iS, std::size_t iI,
                std::vector<std::pair<std::size_t, double>>& out) {
  out.clear();
  const NodeRates& n = st.rows[grid.index(iS, iI)];
  if (n.down_S != 0) {
    if (st.wiring == Wiring::decoupled) {
      out.emplace_back(grid.index(iS - 1, iI), n.down_S);
    } else {
      const auto b = grid.bracket_I(grid.I()[iI] + grid.dS());
      out.emplace_back(grid.index(iS - 1, b.lo), n.down_S * (1.0 - b.w));
      if (b.w != 0.0) out.emplace_back(grid.index(iS - 1, b.lo + 1), n.down_S * b.w);
    }
  }
  if (n.down_I != 0) out.emplace_back(grid.index(iS, iI - 1), n.down_I);
  if (n.up_I != 0) out.emplace_back(grid.index(iS, iI + 1), n.up_I);
}

}  // namespace

double stationary_residual(const Stencil& st, const StateGrid& grid, const Field& v) {
  std::vector<std::pair<std::size_t, double>> nb;
  double worst = 0;
  for (std::size_t iS = 0; iS < grid.nS(); ++iS)
    for (std::size_t iI = 0; iI < grid.nI(); ++iI) {
      const NodeRates& n = st.rows[grid.index(iS, iI)];
      const double diag = st.discount + n.down_S + n.down_I + n.up_I + n.absorb;
      const double self = v(iS, iI);
      double res = n.flow + n.absorb_inflow - diag * self;
      double scale = std::abs(n.flow) + std::abs(n.absorb_inflow) + diag * std::abs(self);
      neighbours(st, grid, iS, iI, nb);
      for (const auto& [col, rate] : nb) {
        res += rate * v.values[col];
        scale += rate * std::abs(v.values[col]);
      }
      if (scale > 0) worst = std::max(worst, std::abs(res) / scale);
    }
  return worst;
}

Stationary solve_stationary(const Stencil& st, const StateGrid& grid) {
  const auto N = static_cast<Eigen::Index>(grid.nodes());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(grid.nodes() * 5);
  Eigen::VectorXd rhs(N);
  std::vector<std::pair<std::size_t, double>> nb;
  for (std::size_t iS = 0; iS < grid.nS(); ++iS)
    for (std::size_t iI = 0; iI < grid.nI(); ++iI) {
      const std::size_t k = grid.index(iS, iI);
      const NodeRates& n = st.rows[k];
      const auto row = static_cast<Eigen::Index>(k);
      trip.emplace_back(row, row, st.discount + n.down_S + n.down_I + n.up_I + n.absorb);
      neighbours(st, grid, iS, iI, nb);
      for (const auto& [col, rate] : nb)
        trip.emplace_back(row, static_cast<Eigen::Index>(col), -rate);
      rhs(row) = n.flow + n.absorb_inflow;
    }
  Eigen::SparseMatrix<double> A(N, N);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw SolverError("reference solve: factorisation failed");
  const Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw SolverError("reference solve: back substitution failed");
  Stationary out;
  out.value = Field(grid, 0.0);
  for (Eigen::Index i = 0; i < N; ++i) out.value.values[static_cast<std::size_t>(i)] = x(i);
  out.residual = reference::stationary_residual(st, grid, out.value);
  return out;
}

Field pbe_best_response(const Field& V_U, const Field& average, const ModelParams& p,
                        const StateGrid& grid) {
  Field next(grid, 1.0, "pbe policy");
  for (std::size_t iS = 0; iS < grid.nS(); ++iS)
    for (std::size_t iI = 0; iI < grid.nI(); ++iI) {
      const double c = pbe_coefficient(grid.S()[iS], grid.I()[iI], V_U(iS, iI), p);
      next(iS, iI) = foc_activity(c, p, FocMode::given_average, average(iS, iI));
    }
  return next;
}

Field spp_improve(const Field& C, const ModelParams& p, const StateGrid& grid) {
  Field next(grid, 1.0, "spp policy");
  const std::size_t nI = grid.nI();
  for (std::size_t iS = 0; iS < grid.nS(); ++iS)
    for (std::size_t iI = 0; iI < nI; ++iI) {
      const double S = grid.S()[iS], I = grid.I()[iI];
      const double back_S = iS > 0 ? (C(iS, iI) - C(iS - 1, iI)) / grid.dS() : 0.0;
      const double fwd_I = iI + 1 < nI ? (C(iS, iI + 1) - C(iS, iI)) / grid.dI_plus(iI) : 0.0;
      const double c = p.beta * S * I * (back_S - fwd_I) / (p.r * (1.0 - p.sigma + p.sigma * S));
      double a = foc_activity(c, p, FocMode::internalized);
      if (iI + 1 == nI) a = std::min(a, boundary_cap(S, p));
      next(iS, iI) = a;
    }
  return next;
}

namespace {

struct Evaluation {
  Field value;
  double residual;
};

}  // namespace

AllocationResult solve_spp(const ModelParams& p, const StateGrid& grid, const SolveOptions& opt) {
  auto evaluate = [&](const Field& policy) {
    auto s = reference::solve_stationary(reference::build_spp_stencil(policy, p, grid), grid);
    return Evaluation{std::move(s.value), s.residual};
  };
  auto improve = [&](const Field& C, const Field&) { return reference::spp_improve(C, p, grid); };
  auto out = policy_iteration(Field(grid, 1.0), evaluate, improve, opt.iteration);
  AllocationResult r;
  r.allocation = Allocation::spp;
  r.V_Ik = value_known_infected(p);
  r.params_hash = params_digest(p);
  r.policy = std::move(out.policy);
  r.value = std::move(out.value);
  r.report = std::move(out.report);
  return r;
}

AllocationResult solve_pbe(const ModelParams& p, const StateGrid& grid, const SolveOptions& opt) {
  auto evaluate = [&](const Field& policy) {
    auto s = reference::solve_stationary(
        reference::build_agent_stencil(policy, policy, p, grid, opt.agent_wiring), grid);
    return Evaluation{std::move(s.value), s.residual};
  };
  auto improve = [&](const Field& V, const Field& policy) {
    return reference::pbe_best_response(V, policy, p, grid);
  };
  auto out = policy_iteration(Field(grid, 1.0), evaluate, improve, opt.iteration);
  AllocationResult r;
  r.allocation = Allocation::pbe;
  r.V_Ik = value_known_infected(p);
  r.params_hash = params_digest(p);
  r.policy = std::move(out.policy);
  r.value = std::move(out.value);
  r.report = std::move(out.report);
  return r;
}

}  // namespace epi::reference
