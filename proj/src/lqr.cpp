#include "agepop/lqr.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "agepop/errors.hpp"

namespace agepop {

namespace {

// horizon · n / steps, n = 0..steps; exact at the decimal nodes.
Eigen::VectorXd uniform_times(Eigen::Index steps, double horizon) {
  Eigen::VectorXd t(steps + 1);
  for (Eigen::Index n = 0; n <= steps; ++n) {
    t(n) = horizon * static_cast<double>(n) / static_cast<double>(steps);
  }
  return t;
}

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void symmetrize(MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

MatrixXd riccati_rhs(const ModalLTI& sys, const MatrixXd& e) {
  const MatrixXd ea = e * sys.drift;
  const MatrixXd eb = e * sys.input;
  MatrixXd out = ea + ea.transpose() - eb * eb.transpose();
  out.diagonal().array() += sys.weight;
  return out;
}

std::size_t steps_for(double horizon, double step) {
  if (!(horizon > 0.0) || !(step > 0.0)) {
    throw DomainError("horizon and step must be positive");
  }
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(std::ceil(horizon / step - 1e-9))));
}

// RK4 for y' = K y + c.
StateTrajectory linear_rk4(const MatrixXd& k, const VectorXd& c,
                           const VectorXd& y0, double horizon, double step) {
  if (y0.size() != k.rows()) throw ShapeError("initial state has wrong length");
  const std::size_t m = steps_for(horizon, step);
  const double h = horizon / static_cast<double>(m);
  StateTrajectory out;
  out.times = uniform_times(static_cast<Index>(m), horizon);
  out.states.resize(static_cast<Index>(m + 1), y0.size());
  out.states.row(0) = y0.transpose();
  VectorXd y = y0;
  for (std::size_t n = 0; n < m; ++n) {
    const VectorXd k1 = k * y + c;
    const VectorXd k2 = k * (y + 0.5 * h * k1) + c;
    const VectorXd k3 = k * (y + 0.5 * h * k2) + c;
    const VectorXd k4 = k * (y + h * k3) + c;
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.states.row(static_cast<Index>(n + 1)) = y.transpose();
  }
  return out;
}

}  // namespace

ModalLTI assemble_modal_system(const DemographicModel& model,
                               const AgeGrid& grid, double decay, double weight,
                               std::size_t mode) {
  if (!(weight > 0.0)) throw DomainError("state weight N must be positive");
  const auto n = static_cast<Index>(grid.nodes());
  const double h = grid.step();
  ModalLTI sys;
  sys.weight = weight;
  sys.mode = mode;
  sys.decay = decay;
  sys.age_step = h;
  sys.drift = MatrixXd::Zero(n, n);
  const VectorXd w = grid.trapezoid_weights();
  for (Index j = 0; j < n; ++j) {
    sys.drift(0, j) = w(j) * model.fertility(grid.age(static_cast<std::size_t>(j))) / h;
  }
  sys.drift(0, 0) -= 1.0 / h + model.mortality(0.0) + decay;
  for (Index i = 1; i < n; ++i) {
    const double mid = grid.age(static_cast<std::size_t>(i)) - 0.5 * h;
    sys.drift(i, i - 1) = 1.0 / h;
    sys.drift(i, i) = -1.0 / h - model.mortality(mid) - decay;
  }
  sys.input = MatrixXd::Zero(n, 1);
  sys.input(0, 0) = 1.0 / h;
  return sys;
}

ModalLTI make_lti(MatrixXd drift, MatrixXd input, double weight) {
  if (drift.rows() != drift.cols() || input.rows() != drift.rows()) {
    throw ShapeError("drift must be square and share its row count with B");
  }
  if (!(weight > 0.0)) throw DomainError("state weight N must be positive");
  ModalLTI sys;
  sys.drift = std::move(drift);
  sys.input = std::move(input);
  sys.weight = weight;
  return sys;
}

double critical_fertility_scale(const DemographicModel& model,
                                const AgeGrid& grid, double decay) {
  const ModalLTI full = assemble_modal_system(model, grid, decay, 1.0);
  const auto n = full.dimension();
  const VectorXd w = grid.trapezoid_weights();
  VectorXd renewal(n);
  for (Index j = 0; j < n; ++j) {
    renewal(j) = w(j) * model.fertility(grid.age(static_cast<std::size_t>(j))) /
                 grid.step();
  }
  MatrixXd base = full.drift;
  base.row(0) -= renewal.transpose();
  const VectorXd e0 = VectorXd::Unit(n, 0);
  const double denom = renewal.dot(base.partialPivLu().solve(e0));
  if (denom == 0.0) throw PreconditionError("fertility has no effect on the drift");
  return -1.0 / denom;
}

double spectral_abscissa(const MatrixXd& m) {
  Eigen::EigenSolver<MatrixXd> es(m, false);
  if (es.info() != Eigen::Success) throw SolverError("eigenvalue solver failed");
  return es.eigenvalues().real().maxCoeff();
}

// ------------------------------------------------------------------ Riccati

double default_riccati_step(const ModalLTI& sys, const MatrixXd& initial) {
  const double a = sys.drift.norm();
  const double g = sys.input_gram().norm();
  const double e = std::max(1.0, initial.norm());
  return std::min(0.01, 1.0 / (a + g * e));
}

RiccatiTrajectory solve_riccati_ode(const ModalLTI& sys, double tau_max,
                                    const RiccatiOptions& options) {
  return solve_riccati_ode(
      sys, tau_max, MatrixXd::Identity(sys.dimension(), sys.dimension()), options);
}

RiccatiTrajectory solve_riccati_ode(const ModalLTI& sys, double tau_max,
                                    const MatrixXd& initial,
                                    const RiccatiOptions& options) {
  if (!(tau_max > 0.0)) throw DomainError("Riccati horizon must be positive");
  if (initial.rows() != sys.dimension() || initial.cols() != sys.dimension()) {
    throw ShapeError("Riccati initial value has wrong shape");
  }
  const double wanted =
      options.step > 0.0 ? options.step : default_riccati_step(sys, initial);
  std::size_t outputs = 0;
  std::size_t substeps = 1;
  if (options.output_step > 0.0) {
    outputs = steps_for(tau_max, options.output_step);
    const double spacing = tau_max / static_cast<double>(outputs);
    substeps = steps_for(spacing, wanted);
  } else {
    outputs = steps_for(tau_max, wanted);
  }
  const std::size_t total = outputs * substeps;
  const double h = tau_max / static_cast<double>(total);

  RiccatiTrajectory traj;
  traj.tau.reserve(outputs + 1);
  traj.values.reserve(outputs + 1);
  MatrixXd e = initial;
  symmetrize(e);
  traj.tau.push_back(0.0);
  traj.values.push_back(e);
  for (std::size_t s = 1; s <= total; ++s) {
    const MatrixXd k1 = riccati_rhs(sys, e);
    const MatrixXd k2 = riccati_rhs(sys, e + 0.5 * h * k1);
    const MatrixXd k3 = riccati_rhs(sys, e + 0.5 * h * k2);
    const MatrixXd k4 = riccati_rhs(sys, e + h * k3);
    e += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    symmetrize(e);
    const double size = e.norm();
    if (!std::isfinite(size) || size > options.divergence_threshold) {
      std::ostringstream os;
      os << "Riccati integration diverged at tau=" << h * static_cast<double>(s)
         << " (|E|=" << size << "); retry with a smaller step than " << h;
      throw ConvergenceError(os.str());
    }
    if (s % substeps == 0) {
      traj.tau.push_back(h * static_cast<double>(s));
      traj.values.push_back(e);
    }
  }
  return traj;
}

double are_residual(const ModalLTI& sys, const MatrixXd& e) {
  MatrixXd r = riccati_rhs(sys, e);
  const double scale =
      sys.weight * std::sqrt(static_cast<double>(sys.dimension()));
  return r.norm() / scale;
}

AreSolution solve_are(const ModalLTI& sys, const AreOptions& options) {
  const auto n = sys.dimension();
  const MatrixXd g = sys.input_gram();
  AreSolution sol;
  MatrixXd e = MatrixXd::Zero(n, n);
  if (spectral_abscissa(sys.drift) >= 0.0) {
    double horizon = options.seed_horizon;
    bool stabilizing = false;
    for (int attempt = 0; attempt <= options.seed_escalations; ++attempt) {
      RiccatiOptions ro;
      ro.output_step = horizon;
      e = solve_riccati_ode(sys, horizon, MatrixXd::Zero(n, n), ro).final_value();
      if (spectral_abscissa(sys.drift - g * e) < 0.0) {
        stabilizing = true;
        break;
      }
      horizon *= 2.0;
    }
    if (!stabilizing) {
      throw ConvergenceError(
          "algebraic Riccati: no stabilizing seed found from the Riccati flow");
    }
    sol.seeded_from_ode = true;
  }
  for (int it = 1; it <= options.max_iterations; ++it) {
    const MatrixXd closed = sys.drift - g * e;
    MatrixXd q = -(e * g * e);
    q.diagonal().array() -= sys.weight;
    e = solve_lyapunov(closed.transpose(), q);
    symmetrize(e);
    sol.iterations = it;
    sol.residual = are_residual(sys, e);
    if (sol.residual <= options.tolerance) {
      sol.value = e;
      return sol;
    }
  }
  std::ostringstream os;
  os << "algebraic Riccati: Newton-Kleinman stopped after "
     << options.max_iterations << " iterations with residual " << sol.residual;
  throw ConvergenceError(os.str());
}

// ----------------------------------------------------------------- Lyapunov

MatrixXd solve_lyapunov(const MatrixXd& m, const MatrixXd& q) {
  if (m.rows() != m.cols() || q.rows() != m.rows() || q.cols() != m.cols()) {
    throw ShapeError("Lyapunov: M and Q must be square of equal size");
  }
  using Complex = std::complex<double>;
  using CMatrix = Eigen::MatrixXcd;
  const Index n = m.rows();
  Eigen::ComplexSchur<CMatrix> schur(m.cast<Complex>());
  if (schur.info() != Eigen::Success) throw SolverError("Schur decomposition failed");
  const CMatrix& t = schur.matrixT();
  const CMatrix& u = schur.matrixU();
  const CMatrix c = u.adjoint() * q.cast<Complex>() * u;
  const double scale = std::max(t.norm(), std::numeric_limits<double>::min());

  // T X + X Tᴴ = C, columns from last to first.
  CMatrix x = CMatrix::Zero(n, n);
  for (Index j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd rhs = c.col(j);
    const Index tail = n - j - 1;
    if (tail > 0) {
      rhs -= x.rightCols(tail) * t.row(j).tail(tail).adjoint();
    }
    CMatrix shifted = t;
    const Complex shift = std::conj(t(j, j));
    shifted.diagonal().array() += shift;
    if ((shifted.diagonal().array().abs() <= 1e-14 * scale).any()) {
      throw SolverError(
          "Lyapunov: M and -M share an eigenvalue (spectrum overlap)");
    }
    x.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  MatrixXd s = (u * x * u.adjoint()).real();
  if ((q - q.transpose()).norm() <= 1e-14 * std::max(1.0, q.norm())) symmetrize(s);
  return s;
}

double lyapunov_residual(const MatrixXd& m, const MatrixXd& s, const MatrixXd& q) {
  const double scale = std::max(q.norm(), std::numeric_limits<double>::min());
  return (m * s + s * m.transpose() - q).norm() / scale;
}

// ---------------------------------------------------------------- dichotomy

MatrixXd hamiltonian(const ModalLTI& sys) {
  const Index n = sys.dimension();
  MatrixXd h(2 * n, 2 * n);
  h.topLeftCorner(n, n) = sys.drift;
  h.topRightCorner(n, n) = -sys.input_gram();
  h.bottomLeftCorner(n, n) = -sys.weight * MatrixXd::Identity(n, n);
  h.bottomRightCorner(n, n) = -sys.drift.transpose();
  return h;
}

DichotomyTransform build_dichotomy(const ModalLTI& sys,
                                   const MatrixXd& are_solution,
                                   double tolerance) {
  const Index n = sys.dimension();
  if (are_solution.rows() != n || are_solution.cols() != n) {
    throw ShapeError("dichotomy: Riccati solution has wrong shape");
  }
  const MatrixXd g = sys.input_gram();
  const MatrixXd closed = sys.drift - g * are_solution;
  const MatrixXd ham = hamiltonian(sys);
  const MatrixXd id = MatrixXd::Identity(n, n);
  MatrixXd target = MatrixXd::Zero(2 * n, 2 * n);
  target.topLeftCorner(n, n) = closed;
  target.bottomRightCorner(n, n) = -closed.transpose();
  const double scale = std::max(ham.norm(), std::numeric_limits<double>::min());

  DichotomyTransform best;
  best.are_solution = are_solution;
  best.closed_loop_abscissa = spectral_abscissa(closed);
  best.residual = std::numeric_limits<double>::infinity();

  struct Candidate {
    const char* name;
    bool transposed;
  };
  const Candidate candidates[] = {{"M S + S M^T = B B^T", false},
                                  {"M^T S + S M = B B^T", true}};
  for (const auto& cand : candidates) {
    MatrixXd s;
    try {
      s = solve_lyapunov(cand.transposed ? MatrixXd(closed.transpose()) : closed, g);
    } catch (const SolverError&) {
      continue;
    }
    MatrixXd fwd(2 * n, 2 * n);
    fwd << id, s, are_solution, are_solution * s + id;
    MatrixXd inv(2 * n, 2 * n);
    inv << id + s * are_solution, -s, -are_solution, id;
    const double r_left = (inv * ham * fwd - target).norm() / scale;
    const double r_right = (fwd * ham * inv - target).norm() / scale;
    const bool left = r_left <= r_right;
    const double r = left ? r_left : r_right;
    if (r < best.residual) {
      best.residual = r;
      best.lyapunov = s;
      best.forward = fwd;
      best.inverse = inv;
      best.inverse_residual =
          (fwd * inv - MatrixXd::Identity(2 * n, 2 * n)).norm();
      best.orientation = std::string(cand.name) +
                         (left ? ", inverse * H * forward" : ", forward * H * inverse");
    }
  }
  if (!std::isfinite(best.residual)) {
    throw SolverError("dichotomy: no Lyapunov orientation could be solved");
  }
  best.ok = best.residual <= tolerance && best.closed_loop_abscissa < 0.0;
  return best;
}

double hamiltonian_imaginary_gap(const ModalLTI& sys) {
  Eigen::EigenSolver<MatrixXd> es(hamiltonian(sys), false);
  if (es.info() != Eigen::Success) throw SolverError("eigenvalue solver failed");
  return es.eigenvalues().real().cwiseAbs().minCoeff();
}

// --------------------------------------------------------------- simulation

StateTrajectory closed_loop_simulate(const ModalLTI& sys,
                                     const MatrixXd& are_solution,
                                     const VectorXd& y0, double horizon,
                                     double step) {
  const MatrixXd gain = sys.input.transpose() * are_solution;
  const MatrixXd closed = sys.drift - sys.input * gain;
  StateTrajectory out =
      linear_rk4(closed, VectorXd::Zero(sys.dimension()), y0, horizon, step);
  out.controls = -(out.states * gain.transpose());
  return out;
}

StateTrajectory riccati_feedback_simulate(const ModalLTI& sys,
                                          const VectorXd& y0, double horizon,
                                          double step, TerminalCost terminal) {
  const Index n = sys.dimension();
  if (y0.size() != n) throw ShapeError("initial state has wrong length");
  const std::size_t m = steps_for(horizon, step);
  const double h = horizon / static_cast<double>(m);
  const MatrixXd initial = terminal == TerminalCost::kHalfNorm
                               ? MatrixXd(MatrixXd::Identity(n, n))
                               : MatrixXd(MatrixXd::Zero(n, n));
  RiccatiOptions ro;
  ro.output_step = 0.5 * h;
  ro.step = std::min(0.5 * h, default_riccati_step(sys, initial));
  const RiccatiTrajectory ric = solve_riccati_ode(sys, horizon, initial, ro);
  if (ric.values.size() != 2 * m + 1) {
    throw SolverError("Riccati output grid does not align with the time grid");
  }
  auto field = [&](std::size_t half_index, const VectorXd& y) -> VectorXd {
    const MatrixXd& e = ric.values[half_index];
    return sys.drift * y - sys.input * (sys.input.transpose() * (e * y));
  };

  StateTrajectory out;
  out.times = uniform_times(static_cast<Index>(m), horizon);
  out.states.resize(static_cast<Index>(m + 1), n);
  out.controls.resize(static_cast<Index>(m + 1), sys.inputs());
  VectorXd y = y0;
  for (std::size_t k = 0; k <= m; ++k) {
    const std::size_t idx = 2 * (m - k);  // τ = T - t_k
    out.states.row(static_cast<Index>(k)) = y.transpose();
    out.controls.row(static_cast<Index>(k)) =
        -(sys.input.transpose() * (ric.values[idx] * y)).transpose();
    if (k == m) break;
    const VectorXd k1 = field(idx, y);
    const VectorXd k2 = field(idx - 1, y + 0.5 * h * k1);
    const VectorXd k3 = field(idx - 1, y + 0.5 * h * k2);
    const VectorXd k4 = field(idx - 2, y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return out;
}

StateTrajectory constant_control_simulate(const ModalLTI& sys,
                                          const VectorXd& y0,
                                          const VectorXd& control,
                                          double horizon, double step) {
  if (control.size() != sys.inputs()) throw ShapeError("control has wrong length");
  StateTrajectory out =
      linear_rk4(sys.drift, sys.input * control, y0, horizon, step);
  out.controls = control.transpose().replicate(out.states.rows(), 1);
  return out;
}

// ---------------------------------------------------------------- LQ solves

DiscreteLqProblem::DiscreteLqProblem(const ModalLTI& sys, VectorXd y0,
                                     VectorXd target, double horizon,
                                     const DynamicLqOptions& options)
    : sys_(sys),
      y0_(std::move(y0)),
      target_(std::move(target)),
      horizon_(horizon),
      options_(options) {
  const Index n = sys_.dimension();
  if (y0_.size() != n || target_.size() != n) {
    throw ShapeError("initial state and target must match the system size");
  }
  steps_ = steps_for(horizon, options.step);
  step_ = horizon / static_cast<double>(steps_);
  implicit_ = MatrixXd::Identity(n, n) - 0.5 * step_ * sys_.drift;
  explicit_ = MatrixXd::Identity(n, n) + 0.5 * step_ * sys_.drift;
  implicit_lu_.compute(implicit_);
}

double DiscreteLqProblem::running_weight(std::size_t n) const {
  return (n == 0 || n == steps_) ? 0.5 * step_ : step_;
}

MatrixXd DiscreteLqProblem::simulate(const MatrixXd& u) const {
  if (u.rows() != static_cast<Index>(steps_) || u.cols() != sys_.inputs()) {
    throw ShapeError("control sequence has wrong shape");
  }
  MatrixXd y(static_cast<Index>(steps_ + 1), sys_.dimension());
  y.row(0) = y0_.transpose();
  VectorXd cur = y0_;
  for (std::size_t n = 0; n < steps_; ++n) {
    const VectorXd rhs =
        explicit_ * cur + step_ * sys_.input * u.row(static_cast<Index>(n)).transpose();
    cur = implicit_lu_.solve(rhs);
    y.row(static_cast<Index>(n + 1)) = cur.transpose();
  }
  return y;
}

double DiscreteLqProblem::objective_from_states(const MatrixXd& y,
                                                const MatrixXd& u) const {
  double j = 0.0;
  for (std::size_t n = 0; n <= steps_; ++n) {
    const VectorXd dev = y.row(static_cast<Index>(n)).transpose() - target_;
    j += 0.5 * sys_.weight * running_weight(n) * dev.squaredNorm();
  }
  j += 0.5 * step_ * u.squaredNorm();
  if (options_.terminal == TerminalCost::kHalfNorm) {
    j += 0.5 * y.row(static_cast<Index>(steps_)).squaredNorm();
  }
  return j;
}

double DiscreteLqProblem::objective(const MatrixXd& u) const {
  return objective_from_states(simulate(u), u);
}

MatrixXd DiscreteLqProblem::gradient(const MatrixXd& u) const {
  const MatrixXd y = simulate(u);
  const double tau = options_.terminal == TerminalCost::kHalfNorm ? 1.0 : 0.0;
  Eigen::PartialPivLU<MatrixXd> lu_t(implicit_.transpose());
  MatrixXd grad(u.rows(), u.cols());
  const auto last = static_cast<Index>(steps_);
  VectorXd rhs = -(sys_.weight * running_weight(steps_) *
                       (y.row(last).transpose() - target_) +
                   tau * y.row(last).transpose());
  VectorXd lambda = lu_t.solve(rhs);  // λ_M
  for (std::size_t k = steps_; k >= 1; --k) {
    // λ currently holds λ_k; gradient for the control of step k-1.
    grad.row(static_cast<Index>(k - 1)) =
        (step_ * u.row(static_cast<Index>(k - 1)).transpose() -
         step_ * sys_.input.transpose() * lambda)
            .transpose();
    if (k == 1) break;
    const VectorXd dev = y.row(static_cast<Index>(k - 1)).transpose() - target_;
    rhs = explicit_.transpose() * lambda -
          sys_.weight * running_weight(k - 1) * dev;
    lambda = lu_t.solve(rhs);
  }
  return grad;
}

OptimalTriple DiscreteLqProblem::solve() const {
  const Index n = sys_.dimension();
  const Index m = sys_.inputs();
  const Index block = m + 2 * n;
  const auto steps = static_cast<Index>(steps_);
  const Index size = steps * block;
  const double tau = options_.terminal == TerminalCost::kHalfNorm ? 1.0 : 0.0;
  const double h = step_;

  auto u_at = [&](Index k) { return k * block; };
  auto lambda_at = [&](Index k) { return k * block + m; };  // multiplier λ_{k+1}
  auto y_at = [&](Index k) { return k * block + m + n; };   // state y_{k+1}

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(steps) *
               static_cast<std::size_t>(6 * n * n / 4 + 8 * n + 4 * m * n));
  VectorXd rhs = VectorXd::Zero(size);
  auto add_block = [&](Index r0, Index c0, const MatrixXd& blk) {
    for (Index j = 0; j < blk.cols(); ++j) {
      for (Index i = 0; i < blk.rows(); ++i) {
        if (blk(i, j) != 0.0) trip.emplace_back(r0 + i, c0 + j, blk(i, j));
      }
    }
  };
  const MatrixXd hb = h * sys_.input;
  const MatrixXd imp_t = implicit_.transpose();
  const MatrixXd exp_t = explicit_.transpose();

  for (Index k = 0; k < steps; ++k) {
    // Control stationarity: h u_k - h Bᵀ λ_{k+1} = 0.
    add_block(u_at(k), u_at(k), h * MatrixXd::Identity(m, m));
    add_block(u_at(k), lambda_at(k), -hb.transpose());
    // Dynamics: (I - h/2 A) y_{k+1} - (I + h/2 A) y_k - h B u_k = 0.
    add_block(lambda_at(k), y_at(k), implicit_);
    add_block(lambda_at(k), u_at(k), -hb);
    if (k == 0) {
      rhs.segment(lambda_at(0), n) = explicit_ * y0_;
    } else {
      add_block(lambda_at(k), y_at(k - 1), -explicit_);
    }
    // State stationarity for y_{k+1}.
    const auto node = static_cast<std::size_t>(k + 1);
    const double diag = sys_.weight * running_weight(node) + (k + 1 == steps ? tau : 0.0);
    add_block(y_at(k), y_at(k), diag * MatrixXd::Identity(n, n));
    add_block(y_at(k), lambda_at(k), imp_t);
    if (k + 1 < steps) add_block(y_at(k), lambda_at(k + 1), -exp_t);
    rhs.segment(y_at(k), n) = sys_.weight * running_weight(node) * target_;
  }

  Eigen::SparseMatrix<double> kkt(size, size);
  kkt.setFromTriplets(trip.begin(), trip.end());
  kkt.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(kkt);
  if (lu.info() != Eigen::Success) {
    std::ostringstream os;
    os << "KKT factorization failed (" << lu.lastErrorMessage()
       << "); try a smaller time step than " << h;
    throw SolverError(os.str());
  }
  const VectorXd sol = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !sol.allFinite()) {
    throw SolverError("KKT solve failed; try a smaller time step");
  }

  OptimalTriple out;
  out.times = uniform_times(static_cast<Index>(steps), horizon_);
  out.states.resize(steps + 1, n);
  out.midpoint_controls.resize(steps, m);
  out.midpoint_adjoints.resize(steps, n);
  out.states.row(0) = y0_.transpose();
  for (Index k = 0; k < steps; ++k) {
    out.midpoint_controls.row(k) = sol.segment(u_at(k), m).transpose();
    out.midpoint_adjoints.row(k) = -sol.segment(lambda_at(k), n).transpose();
    out.states.row(k + 1) = sol.segment(y_at(k), n).transpose();
  }
  auto to_nodes = [steps](const MatrixXd& mid) {
    MatrixXd nodes(steps + 1, mid.cols());
    if (steps == 1) {
      nodes.row(0) = mid.row(0);
      nodes.row(1) = mid.row(0);
      return nodes;
    }
    for (Index k = 1; k < steps; ++k) nodes.row(k) = 0.5 * (mid.row(k - 1) + mid.row(k));
    nodes.row(0) = 1.5 * mid.row(0) - 0.5 * mid.row(1);
    nodes.row(steps) = 1.5 * mid.row(steps - 1) - 0.5 * mid.row(steps - 2);
    return nodes;
  };
  out.controls = to_nodes(out.midpoint_controls);
  out.adjoints = to_nodes(out.midpoint_adjoints);
  out.objective = objective_from_states(out.states, out.midpoint_controls);
  const double rnorm = std::max(rhs.norm(), std::numeric_limits<double>::min());
  out.kkt_residual = (kkt * sol - rhs).norm() / rnorm;
  return out;
}

OptimalTriple solve_dynamic_lq(const ModalLTI& sys, const VectorXd& y0,
                               const VectorXd& target, double horizon,
                               const DynamicLqOptions& options) {
  return DiscreteLqProblem(sys, y0, target, horizon, options).solve();
}

StaticTriple solve_static_lq(const ModalLTI& sys, const VectorXd& target) {
  const Index n = sys.dimension();
  const Index m = sys.inputs();
  if (target.size() != n) throw ShapeError("target must match the system size");
  Eigen::JacobiSVD<MatrixXd> svd(sys.drift);
  const VectorXd sv = svd.singularValues();
  if (sv(0) == 0.0 || sv(sv.size() - 1) / sv(0) < 1e-12) {
    throw PreconditionError(
        "static problem is singular: the drift has a zero eigenvalue "
        "(reproduction number at the critical value 1), so the stationary "
        "state is not unique");
  }
  const Index size = 2 * n + m;
  MatrixXd k = MatrixXd::Zero(size, size);
  k.block(0, 0, n, n) = sys.drift;
  k.block(0, n, n, m) = sys.input;
  k.block(n, n, m, m) = MatrixXd::Identity(m, m);
  k.block(n, n + m, m, n) = sys.input.transpose();
  k.block(n + m, 0, n, n) = sys.weight * MatrixXd::Identity(n, n);
  k.block(n + m, n + m, n, n) = sys.drift.transpose();
  VectorXd rhs = VectorXd::Zero(size);
  rhs.tail(n) = sys.weight * target;
  const VectorXd sol = k.partialPivLu().solve(rhs);
  StaticTriple out;
  out.state = sol.head(n);
  out.control = sol.segment(n, m);
  out.adjoint = sol.tail(n);
  const double scale = std::max(rhs.norm(), 1.0);
  out.residual = (k * sol - rhs).norm() / scale;
  return out;
}

double static_objective(const ModalLTI& sys, const VectorXd& target,
                        const VectorXd& control) {
  const VectorXd y = sys.drift.partialPivLu().solve(-(sys.input * control));
  return 0.5 * sys.weight * (y - target).squaredNorm() + 0.5 * control.squaredNorm();
}

}  // namespace agepop
