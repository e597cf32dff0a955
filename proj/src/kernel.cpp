#include "epi/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace epi {

const char* to_string(Wiring w) {
  switch (w) {
    case Wiring::decoupled: return "decoupled";
    case Wiring::joint: return "joint";
    case Wiring::joint_literal: return "joint_literal";
  }
  return "?";
}

Wiring parse_wiring(const std::string& s) {
  if (s == "decoupled") return Wiring::decoupled;
  if (s == "joint") return Wiring::joint;
  if (s == "joint_literal") return Wiring::joint_literal;
  throw ConfigError("unknown wiring '" + s + "' (decoupled | joint | joint_literal)");
}

namespace {

// Infection flow beta S a (sigma a_Ik + (1 - sigma) a_agg) I, split so the
// caller can reuse the bracket.
inline double contact(double a_agg, const ModelParams& p) {
  return p.sigma * p.a_Ik + (1.0 - p.sigma) * a_agg;
}

inline double safe_rate(double numerator, double step) { return step > 0 ? numerator / step : 0.0; }

}  // namespace

NodeRates spp_stencil(std::size_t iS, std::size_t iI, double a_U, const ModelParams& p,
                      const StateGrid& grid) {
  const double S = grid.S()[iS], I = grid.I()[iI];
  const double infection = p.beta * S * I * a_U * contact(a_U, p);
  NodeRates n;
  n.down_S = iS > 0 ? infection / grid.dS() : 0.0;
  n.up_I = safe_rate(infection, grid.dI_plus(iI));
  n.down_I = safe_rate(p.gamma * I, grid.dI_minus(iI));
  n.flow = p.r * ((1.0 - p.sigma + p.sigma * S) * -utility(a_U, p.alpha) +
                  p.sigma * I * -p.uIk_flow) +
           p.gamma * p.delta() * p.sigma * I * -p.u_D + p.nu * cost_post_vaccine(p) * I;
  return n;
}

Stencil build_spp_stencil(const Field& policy, const ModelParams& p, const StateGrid& grid) {
  Stencil st;
  st.rows.resize(grid.nodes());
  st.discount = p.r + p.nu;
  st.wiring = Wiring::decoupled;
  const long nS = static_cast<long>(grid.nS());
#pragma omp parallel for schedule(static)
  for (long iS = 0; iS < nS; ++iS)
    for (std::size_t iI = 0; iI < grid.nI(); ++iI) {
      const auto s = static_cast<std::size_t>(iS);
      st.rows[grid.index(s, iI)] = spp_stencil(s, iI, policy(s, iI), p, grid);
    }
  return st;
}

NodeRates agent_stencil(std::size_t iS, std::size_t iI, double a_own, double a_agg,
                        const ModelParams& p, const StateGrid& grid, Wiring wiring) {
  const double S = grid.S()[iS], I = grid.I()[iI];
  const double ctc = contact(a_agg, p);
  const double infection = p.beta * S * a_agg * ctc * I;
  NodeRates n;
  n.down_S = iS > 0 ? infection / grid.dS() : 0.0;
  const double drift = wiring == Wiring::joint ? -p.gamma * I : infection - p.gamma * I;
  n.up_I = safe_rate(std::max(drift, 0.0), grid.dI_plus(iI));
  n.down_I = safe_rate(std::max(-drift, 0.0), grid.dI_minus(iI));
  const double p_uk = p.sigma * belief_mu(S, p.sigma) * p.beta * a_own * ctc * I;
  n.absorb = p_uk;
  n.absorb_inflow = p_uk * value_known_infected(p);
  n.flow = p.r * utility(a_own, p.alpha);
  return n;
}

Stencil build_agent_stencil(const Field& own, const Field& aggregate, const ModelParams& p,
                            const StateGrid& grid, Wiring wiring) {
  Stencil st;
  st.rows.resize(grid.nodes());
  st.discount = p.r + p.nu;
  st.wiring = wiring;
  const long nS = static_cast<long>(grid.nS());
#pragma omp parallel for schedule(static)
  for (long iS = 0; iS < nS; ++iS)
    for (std::size_t iI = 0; iI < grid.nI(); ++iI) {
      const auto s = static_cast<std::size_t>(iS);
      st.rows[grid.index(s, iI)] =
          agent_stencil(s, iI, own(s, iI), aggregate(s, iI), p, grid, wiring);
    }
  return st;
}

double boundary_cap(double S, const ModelParams& p) {
  if (S <= 0) return 1.0;
  const double bs = p.beta * S;
  double cap;
  if (p.sigma >= 1.0) {
    const double lin = bs * p.sigma * p.a_Ik;
    cap = lin > 0 ? p.gamma / lin : 1.0;
  } else {
    const double b = bs * p.sigma * p.a_Ik;
    cap = (-b + std::sqrt(b * b + 4.0 * p.gamma * bs * (1.0 - p.sigma))) /
          (2.0 * bs * (1.0 - p.sigma));
  }
  return std::clamp(cap, p.a_min, 1.0);
}

std::vector<JointTarget> joint_targets(const StateGrid& grid) {
  std::vector<JointTarget> t(grid.nI());
  for (std::size_t i = 0; i < grid.nI(); ++i) {
    const auto b = grid.bracket_I(grid.I()[i] + grid.dS());
    t[i] = {b.lo, b.w};
  }
  return t;
}

namespace {

double target_value(const Field& v, std::size_t iS, std::size_t iI, Wiring wiring,
                    const std::vector<JointTarget>& jt) {
  if (wiring == Wiring::decoupled) return v(iS - 1, iI);
  const auto& t = jt[iI];
  const double lo = v(iS - 1, t.lo);
  return t.w == 0.0 ? lo : (1.0 - t.w) * lo + t.w * v(iS - 1, t.lo + 1);
}

}  // namespace

Stationary solve_stationary(const Stencil& st, const StateGrid& grid, double tolerance) {
  const std::size_t nS = grid.nS(), nI = grid.nI();
  if (st.rows.size() != nS * nI) throw SolverError("solve_stationary: stencil/grid size mismatch");
  const auto jt = st.wiring == Wiring::decoupled ? std::vector<JointTarget>{} : joint_targets(grid);

  Stationary out;
  out.value = Field(grid, 0.0);
  std::vector<double> diag(nI), sub(nI), sup(nI), rhs(nI), cp(nI), dp(nI);
  for (std::size_t iS = 0; iS < nS; ++iS) {
    for (std::size_t iI = 0; iI < nI; ++iI) {
      const NodeRates& n = st.rows[grid.index(iS, iI)];
      if (!(n.down_S >= 0 && n.down_I >= 0 && n.up_I >= 0 && n.absorb >= 0)) {
        std::ostringstream os;
        os << "solve_stationary: negative or non-finite rate at node (" << iS << ',' << iI << ')';
        throw SolverError(os.str());
      }
      if ((iS == 0 && n.down_S != 0) || (iI == 0 && n.down_I != 0) ||
          (iI + 1 == nI && n.up_I != 0))
        throw SolverError("solve_stationary: boundary node has an outgoing off-grid rate");
      diag[iI] = st.discount + n.down_S + n.down_I + n.up_I + n.absorb;
      sub[iI] = -n.down_I;
      sup[iI] = -n.up_I;
      rhs[iI] = n.flow + n.absorb_inflow;
      if (n.down_S != 0) rhs[iI] += n.down_S * target_value(out.value, iS, iI, st.wiring, jt);
    }
    // Thomas algorithm; the column matrix is strictly diagonally dominant.
    cp[0] = sup[0] / diag[0];
    dp[0] = rhs[0] / diag[0];
    for (std::size_t i = 1; i < nI; ++i) {
      const double m = diag[i] - sub[i] * cp[i - 1];
      cp[i] = sup[i] / m;
      dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / m;
    }
    out.value(iS, nI - 1) = dp[nI - 1];
    for (std::size_t i = nI - 1; i-- > 0;) out.value(iS, i) = dp[i] - cp[i] * out.value(iS, i + 1);
  }
  out.residual = stationary_residual(st, grid, out.value);
  if (!(out.residual <= tolerance)) {
    std::ostringstream os;
    os << "solve_stationary: residual " << out.residual << " exceeds tolerance " << tolerance;
    throw SolverError(os.str());
  }
  return out;
}

double stationary_residual(const Stencil& st, const StateGrid& grid, const Field& v) {
  const std::size_t nI = grid.nI();
  const auto jt = st.wiring == Wiring::decoupled ? std::vector<JointTarget>{} : joint_targets(grid);
  const long nS = static_cast<long>(grid.nS());
  double worst = 0;
#pragma omp parallel for schedule(static) reduction(max : worst)
  for (long s = 0; s < nS; ++s) {
    const auto iS = static_cast<std::size_t>(s);
    for (std::size_t iI = 0; iI < nI; ++iI) {
      const NodeRates& n = st.rows[grid.index(iS, iI)];
      const double self = v(iS, iI);
      const double diag = st.discount + n.down_S + n.down_I + n.up_I + n.absorb;
      double res = n.flow + n.absorb_inflow - diag * self;
      double scale = std::abs(n.flow) + std::abs(n.absorb_inflow) + diag * std::abs(self);
      if (n.down_S != 0) {
        const double t = target_value(v, iS, iI, st.wiring, jt);
        res += n.down_S * t;
        scale += n.down_S * std::abs(t);
      }
      if (n.down_I != 0) {
        res += n.down_I * v(iS, iI - 1);
        scale += n.down_I * std::abs(v(iS, iI - 1));
      }
      if (n.up_I != 0) {
        res += n.up_I * v(iS, iI + 1);
        scale += n.up_I * std::abs(v(iS, iI + 1));
      }
      if (scale > 0) worst = std::max(worst, std::abs(res) / scale);
    }
  }
  return worst;
}

}  // namespace epi
