#include "epi/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace epi {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(std::string("invalid model parameters: ") + what);
}

}  // namespace

void ModelParams::validate() const {
  require(std::isfinite(r) && r > 0, "r must be > 0");
  require(std::isfinite(nu) && nu >= 0, "nu must be >= 0");
  require(std::isfinite(beta) && beta > 0, "beta must be > 0");
  require(std::isfinite(gamma) && gamma > 0, "gamma must be > 0");
  require(sigma > 0 && sigma <= 1, "sigma must lie in (0, 1]");
  require(delta0 > 0 && delta0 <= 1, "delta0 must lie in (0, 1]");
  require(delta() <= 1, "delta = delta0 / sigma must not exceed 1");
  require(std::isfinite(alpha) && alpha > 0, "alpha must be > 0");
  require(a_min >= 0 && a_min < 1, "a_min must lie in [0, 1)");
  require(a_Ik >= a_min && a_Ik <= 1, "a_Ik must lie in [a_min, 1]");
  require(std::isfinite(u_D) && std::isfinite(uIk_flow), "utilities must be finite");
  require(u_D < uIk_flow && uIk_flow <= 0, "need u_D < uIk_flow <= 0");
}

DerivedConstants derive(const ModelParams& p) {
  DerivedConstants d{};
  d.delta = p.delta();
  d.R0 = p.beta / p.gamma;
  d.herd_threshold = 1.0 / d.R0;
  d.V_Ik = value_known_infected(p);
  d.C_vac = cost_post_vaccine(p);
  d.I_bar = full_activity_threshold(p);
  return d;
}

double utility(double a, double alpha) {
  if (!(a > 0)) {
    std::ostringstream os;
    os << "utility: activity must be positive, got " << a;
    throw DomainError(os.str());
  }
  if (alpha == 1.0) return std::log(a);
  return (std::pow(a, 1.0 - alpha) - 1.0) / (1.0 - alpha);
}

double marginal_utility(double a, double alpha) { return std::pow(a, -alpha); }

double inverse_utility(double w, double alpha) {
  if (w > 0) {
    std::ostringstream os;
    os << "inverse_utility: no activity above 1 attains utility " << w;
    throw DomainError(os.str());
  }
  if (alpha == 1.0) return std::exp(w);
  const double base = 1.0 + (1.0 - alpha) * w;
  if (base <= 0) throw DomainError("inverse_utility: utility below u(0)");
  return std::pow(base, 1.0 / (1.0 - alpha));
}

double inverse_marginal_utility(double x, double alpha, double a_min) {
  if (x <= 1.0) return 1.0;  // u'(1) = 1 under CRRA
  if (a_min > 0 && x >= marginal_utility(a_min, alpha)) return a_min;
  return std::clamp(std::pow(x, -1.0 / alpha), a_min, 1.0);
}

double belief_mu(double S, double sigma) {
  if (S <= 0) return 0.0;
  return S / (sigma * S + 1.0 - sigma);
}

double value_known_infected(const ModelParams& p) {
  return (p.r * p.uIk_flow + p.gamma * p.delta() * p.u_D) / (p.r + p.gamma);
}

double cost_post_vaccine(const ModelParams& p) {
  return p.sigma / (p.r + p.gamma) * (-p.gamma * p.delta() * p.u_D - p.r * p.uIk_flow);
}

double effective_R(double S, double a_U, const ModelParams& p) {
  return p.beta / p.gamma * a_U * S * (p.sigma * p.a_Ik + (1.0 - p.sigma) * a_U);
}

double full_activity_threshold(const ModelParams& p) {
  return -p.r / (p.sigma * p.beta * value_known_infected(p));
}

CurvatureBounds curvature_bounds(const ModelParams& p) {
  // |u''(a)| = alpha a^{-alpha-1} is decreasing in a.
  const double M = p.a_min > 0 ? p.alpha * std::pow(p.a_min, -p.alpha - 1.0)
                               : std::numeric_limits<double>::infinity();
  return {p.alpha, M};
}

double foc_activity(double c, const ModelParams& p, FocMode mode, double a_tilde) {
  if (!std::isfinite(c) || !std::isfinite(a_tilde)) {
    std::ostringstream os;
    os << "foc_activity: non-finite input c=" << c << " a_tilde=" << a_tilde;
    throw SolverError(os.str());
  }
  if (c >= 0) return 1.0;
  const double sig = p.sigma;

  if (mode == FocMode::given_average) {
    const double b = c * (sig * p.a_Ik + (1.0 - sig) * a_tilde);
    if (b >= 0) return 1.0;
    return std::clamp(std::pow(-b, -1.0 / p.alpha), p.a_min, 1.0);
  }

  const double k = mode == FocMode::internalized ? 2.0 : 1.0;
  if (p.alpha == 1.0) {
    // 1 + B a + A a^2 = 0 with A = k c (1 - sigma) <= 0, B = c sigma a_Ik <= 0.
    const double A = k * c * (1.0 - sig);
    const double B = c * sig * p.a_Ik;
    const double root = 2.0 / (-B + std::sqrt(B * B - 4.0 * A));
    if (std::isnan(root)) throw SolverError("foc_activity: no admissible root");
    return std::clamp(root, p.a_min, 1.0);
  }

  // a^{-alpha} + c (sigma a_Ik + k (1 - sigma) a) is strictly decreasing in a.
  auto g = [&](double a) {
    return std::pow(a, -p.alpha) + c * (sig * p.a_Ik + k * (1.0 - sig) * a);
  };
  if (g(1.0) >= 0) return 1.0;
  double lo = p.a_min, hi = 1.0;
  if (lo > 0 && g(lo) <= 0) return lo;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) > 0 ? lo : hi) = mid;
  }
  const double a = 0.5 * (lo + hi);
  if (!std::isfinite(a)) throw SolverError("foc_activity: bisection diverged");
  return a;
}

}  // namespace epi
