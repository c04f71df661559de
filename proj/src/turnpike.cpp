#include "agepop/turnpike.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "agepop/errors.hpp"

namespace agepop {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

// Least squares of log d against s over the selected nodes.
ExponentialFit log_linear_fit(const std::vector<double>& s,
                              const std::vector<double>& d) {
  ExponentialFit fit;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (d[i] > kFitFloor) {
      xs.push_back(s[i]);
      ys.push_back(std::log(d[i]));
    }
  }
  fit.points = xs.size();
  if (xs.empty()) {
    fit.notice = "degenerate fit: deviation vanishes on the window";
    return fit;
  }
  if (xs.size() < 3) {
    fit.notice = "too few nonzero points for a fit";
    return fit;
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) {
    fit.notice = "window has no time extent";
    return fit;
  }
  const double slope = sxy / sxx;
  fit.rate = -slope;
  fit.intercept = my - slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    shift = std::max(shift, ys[i] - (fit.intercept + slope * xs[i]));
  }
  fit.constant = std::exp(fit.intercept + shift);
  fit.valid = fit.r_squared >= 0.9;
  if (!fit.valid) fit.notice = "poor log-linear fit (R^2 < 0.9)";
  return fit;
}

}  // namespace

DeviationSeries deviation_curves(const OptimalTriple& dynamic,
                                 const StaticTriple& stationary) {
  const Index rows = dynamic.states.rows();
  if (dynamic.states.cols() != stationary.state.size() ||
      dynamic.controls.cols() != stationary.control.size() ||
      dynamic.adjoints.cols() != stationary.adjoint.size() ||
      dynamic.controls.rows() != rows || dynamic.adjoints.rows() != rows) {
    throw ShapeError("deviation_curves: dynamic and static triples do not match");
  }
  DeviationSeries out;
  out.times = dynamic.times;
  out.state = (dynamic.states.rowwise() - stationary.state.transpose()).rowwise().norm();
  out.control =
      (dynamic.controls.rowwise() - stationary.control.transpose()).rowwise().norm();
  out.adjoint =
      (dynamic.adjoints.rowwise() - stationary.adjoint.transpose()).rowwise().norm();
  out.total = out.state + out.control;
  return out;
}

DeviationSeries combine_modes(const std::vector<DeviationSeries>& modes) {
  if (modes.empty()) throw ShapeError("combine_modes: no series given");
  DeviationSeries out;
  out.times = modes.front().times;
  const Index n = out.times.size();
  out.state = VectorXd::Zero(n);
  out.control = VectorXd::Zero(n);
  out.adjoint = VectorXd::Zero(n);
  for (const auto& m : modes) {
    if (m.times.size() != n) throw ShapeError("combine_modes: time grids differ");
    out.state += m.state.cwiseAbs2();
    out.control += m.control.cwiseAbs2();
    out.adjoint += m.adjoint.cwiseAbs2();
  }
  out.state = out.state.cwiseSqrt();
  out.control = out.control.cwiseSqrt();
  out.adjoint = out.adjoint.cwiseSqrt();
  out.total = out.state + out.control;
  return out;
}

TurnpikeFit fit_exponential_rates(const VectorXd& times, const VectorXd& d,
                                  double horizon, double plateau_threshold) {
  if (times.size() != d.size() || times.size() < 2) {
    throw ShapeError("fit_exponential_rates: series lengths differ");
  }
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
  const double third = horizon / 3.0;
  const double tol = 1e-12 * horizon;
  std::vector<double> ls, ld, rs, rd;
  TurnpikeFit fit;
  for (Index i = 0; i < times.size(); ++i) {
    const double t = times(i);
    if (d(i) < 0.0) throw DomainError("deviation must be nonnegative");
    fit.peak = std::max(fit.peak, d(i));
    if (t <= third + tol) {
      ls.push_back(t);
      ld.push_back(d(i));
    }
    if (t >= 2.0 * third - tol) {
      rs.push_back(horizon - t);
      rd.push_back(d(i));
    }
    if (t >= third - tol && t <= 2.0 * third + tol) {
      fit.plateau = std::max(fit.plateau, d(i));
    }
  }
  fit.left = log_linear_fit(ls, ld);
  fit.right = log_linear_fit(rs, rd);
  fit.plateau_ratio = fit.peak > 0.0 ? fit.plateau / fit.peak : 0.0;
  const bool fits_ok = fit.left.valid && fit.right.valid && fit.left.rate > 0.0 &&
                       fit.right.rate > 0.0;
  fit.observed = fits_ok && fit.plateau_ratio <= plateau_threshold;
  fit.verdict = fit.observed ? "turnpike observed" : "turnpike not observed";
  return fit;
}

double integral_turnpike_measure(const VectorXd& times, const VectorXd& d) {
  if (times.size() != d.size()) throw ShapeError("series lengths differ");
  double acc = 0.0;
  for (Index i = 1; i < times.size(); ++i) {
    acc += 0.5 * (times(i) - times(i - 1)) * (d(i) + d(i - 1));
  }
  return acc;
}

VectorXd envelope_curve(const VectorXd& times, const TurnpikeFit& fit,
                        double initial_gap, double terminal_gap) {
  if (times.size() == 0) throw ShapeError("envelope_curve: empty time grid");
  const double horizon = times(times.size() - 1);
  const double nu = std::min(fit.left.rate, fit.right.rate);
  double c = 0.0;
  if (initial_gap > 0.0) c = std::max(c, fit.left.constant / initial_gap);
  if (terminal_gap > 0.0) c = std::max(c, fit.right.constant / terminal_gap);
  VectorXd env(times.size());
  for (Index i = 0; i < times.size(); ++i) {
    const double t = times(i);
    env(i) = c * (initial_gap * std::exp(-nu * t) +
                  terminal_gap * std::exp(-nu * (horizon - t)));
  }
  return env;
}

double envelope_fraction(const VectorXd& times, const VectorXd& d,
                         const TurnpikeFit& fit, double initial_gap,
                         double terminal_gap) {
  if (times.size() != d.size() || times.size() == 0) {
    throw ShapeError("series lengths differ");
  }
  const VectorXd env = envelope_curve(times, fit, initial_gap, terminal_gap);
  std::size_t inside = 0;
  for (Index i = 0; i < times.size(); ++i) {
    if (d(i) <= env(i) * (1.0 + 1e-12)) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(times.size());
}

DissipativityCheck dissipativity_check(const ModalLTI& sys, const VectorXd& y0,
                                       const VectorXd& target,
                                       const StaticTriple& stationary,
                                       double horizon, double step) {
  const StateTrajectory traj =
      constant_control_simulate(sys, y0, stationary.control, horizon, step);
  const Index rows = traj.states.rows();
  const VectorXd final_state = traj.states.row(rows - 1).transpose();
  const double terminal_sq = final_state.squaredNorm();
  const double reference = (stationary.state - target).squaredNorm();

  DissipativityCheck out;
  out.times = traj.times;
  out.storage.resize(rows);
  out.slack.resize(rows);
  out.slack_no_terminal.resize(rows);
  double supply = 0.0;
  double supply_no_terminal = 0.0;
  double penalty = 0.0;
  double prev_w = 0.0;
  double prev_w0 = 0.0;
  double prev_pen = 0.0;
  for (Index i = 0; i < rows; ++i) {
    const VectorXd y = traj.states.row(i).transpose();
    out.storage(i) = y.dot(stationary.adjoint);
    const double w0 = (y - target).squaredNorm() - reference;
    const double w = w0 + terminal_sq;
    const double pen = 0.5 * (y - stationary.state).squaredNorm();
    if (i > 0) {
      const double dt = out.times(i) - out.times(i - 1);
      supply += 0.5 * dt * (w + prev_w);
      supply_no_terminal += 0.5 * dt * (w0 + prev_w0);
      penalty += 0.5 * dt * (pen + prev_pen);
    }
    prev_w = w;
    prev_w0 = w0;
    prev_pen = pen;
    const double lhs = out.storage(i) - out.storage(0);
    out.slack(i) = supply - penalty - lhs;
    out.slack_no_terminal(i) = supply_no_terminal - penalty - lhs;
  }
  out.min_slack = out.slack.minCoeff();
  out.min_slack_no_terminal = out.slack_no_terminal.minCoeff();
  return out;
}

}  // namespace agepop
