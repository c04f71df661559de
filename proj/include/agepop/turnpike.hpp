#pragma once

// Turnpike diagnostics: deviation of a dynamic optimum from the static one,
// exponential fits on the boundary layers, the integral measure, and the
// dissipation inequality along constant-control trajectories.

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "agepop/lqr.hpp"

namespace agepop {

struct DeviationSeries {
  Eigen::VectorXd times;
  Eigen::VectorXd state;    // ‖Y - ȳ‖
  Eigen::VectorXd control;  // ‖V - v̄‖
  Eigen::VectorXd adjoint;  // ‖P - p̄‖
  Eigen::VectorXd total;    // state + control
};

DeviationSeries deviation_curves(const OptimalTriple& dynamic,
                                 const StaticTriple& stationary);

// Combines per-mode series (same time grid) by summing squares of each
// component; the total is recomputed as state + control.
DeviationSeries combine_modes(const std::vector<DeviationSeries>& modes);

struct ExponentialFit {
  double constant = 0.0;     // smallest C bounding the window at the fitted rate
  double rate = 0.0;         // ν
  double intercept = 0.0;    // least-squares log C
  double r_squared = 0.0;
  std::size_t points = 0;
  bool valid = false;        // R² >= 0.9 and at least 3 points
  std::string notice;
};

struct TurnpikeFit {
  ExponentialFit left;   // d ≈ C e^{-ν t} on [0, T/3]
  ExponentialFit right;  // d ≈ C e^{-ν (T - t)} on [2T/3, T]
  double plateau = 0.0;  // max d on [T/3, 2T/3]
  double peak = 0.0;     // max d overall
  double plateau_ratio = 0.0;
  bool observed = false;
  std::string verdict;
};

inline constexpr double kPlateauThreshold = 1e-3;
inline constexpr double kFitFloor = 1e-14;

TurnpikeFit fit_exponential_rates(const Eigen::VectorXd& times,
                                  const Eigen::VectorXd& d, double horizon,
                                  double plateau_threshold = kPlateauThreshold);

// Trapezoid ∫ d dt.
double integral_turnpike_measure(const Eigen::VectorXd& times,
                                 const Eigen::VectorXd& d);

// C (‖y0 - ȳ‖ e^{-νt} + ‖P(T) - p̄‖ e^{-ν(T-t)}) on the time grid, with
// ν = min of the two fitted rates and C the larger normalized constant.
Eigen::VectorXd envelope_curve(const Eigen::VectorXd& times, const TurnpikeFit& fit,
                               double initial_gap, double terminal_gap);

// Fraction of nodes where
// d(t) lies below envelope_curve.
double envelope_fraction(const Eigen::VectorXd& times, const Eigen::VectorXd& d,
                         const TurnpikeFit& fit, double initial_gap,
                         double terminal_gap);

struct DissipativityCheck {
  Eigen::VectorXd times;
  Eigen::VectorXd storage;          // ⟨y(t), p̄⟩
  Eigen::VectorXd slack;            // with the ‖y(T)‖² term of the supply
  Eigen::VectorXd slack_no_terminal;
  double min_slack = 0.0;
  double min_slack_no_terminal = 0.0;
};

// Runs y' = A y + B v̄ from y0 over [0, T] and evaluates
//   S(y(τ)) - S(y0) <= ∫₀^τ w dt - ∫₀^τ ½‖y - ȳ‖² dt,
// w = ‖y - y_d‖² + ‖y(T)‖² - ‖ȳ - y_d‖², slack = right side - left side.
DissipativityCheck dissipativity_check(const ModalLTI& sys,
                                       const Eigen::VectorXd& y0,
                                       const Eigen::VectorXd& target,
                                       const StaticTriple& stationary,
                                       double horizon, double step);

}  // namespace agepop
