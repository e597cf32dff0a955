// Model parameters, utility, closed-form values and the activity first-order
// condition shared by every allocation.
#pragma once

#include <stdexcept>
#include <string>

namespace epi {

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Scalar economic and epidemiological parameters. Rates are per day.
struct ModelParams {
  double r = 0.05 / 365.25;   // discount rate
  double nu = 1.0 / 365.25;   // vaccine arrival rate
  double beta = 1.0 / 5.4;    // transmission rate (meeting rate x infection prob.)
  double gamma = 1.0 / 13.5;  // removal rate
  double sigma = 0.4;         // diagnosis rate
  double delta0 = 0.0027;     // infection fatality rate
  double alpha = 1.0;         // relative risk aversion
  double a_min = 0.01;        // lowest admissible activity
  double u_D = -12.22;        // flow utility of death
  double a_Ik = 1.0;          // activity of known infected agents
  double uIk_flow = 0.0;      // flow utility of known infected agents

  static ModelParams benchmark() { return {}; }

  /// Case fatality rate delta0 / sigma.
  double delta() const { return delta0 / sigma; }

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;
};

/// Constants derived once from a validated parameter set.
struct DerivedConstants {
  double delta;
  double R0;
  double herd_threshold;
  double V_Ik;
  double C_vac;
  double I_bar;
};

DerivedConstants derive(const ModelParams& p);

/// CRRA utility normalised so that u(1) = 0.
double utility(double a, double alpha);
double marginal_utility(double a, double alpha);
/// Inverse of `utility` on w <= 0.
double inverse_utility(double w, double alpha);
/// Inverse marginal utility clamped to [a_min, 1].
double inverse_marginal_utility(double x, double alpha, double a_min);

/// Probability that an undiagnosed agent is susceptible.
double belief_mu(double S, double sigma);

double value_known_infected(const ModelParams& p);
double cost_post_vaccine(const ModelParams& p);
double effective_R(double S, double a_U, const ModelParams& p);
double full_activity_threshold(const ModelParams& p);

/// Bounds m <= |u''| <= M on [a_min, 1].
struct CurvatureBounds {
  double m;
  double M;
};
CurvatureBounds curvature_bounds(const ModelParams& p);

// Which average activity enters the infection rate in the activity FOC.
//   given_average:   a fixed population average a_tilde (individual best response)
//   self_consistent: the average equals the chosen action (node-wise equilibrium)
//   internalized:    the chooser internalises its own effect (planner, factor 2)
enum class FocMode { given_average, self_consistent, internalized };

/// Maximiser over [a_min, 1] of u(a) + c a (sigma a_Ik + k (1 - sigma) x),
/// with x and k set by `mode`. Returns 1 whenever c >= 0.
double foc_activity(double c, const ModelParams& p, FocMode mode,
                    double a_tilde = 1.0);

}  // namespace epi
