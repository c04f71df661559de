#pragma once

// Linear-quadratic machinery for one spatial mode of the semi-discretized
// model y' = A y + B v: Riccati differential and algebraic equations,
// Lyapunov solves, the Hamiltonian dichotomy, closed-loop simulation and
// direct (KKT) solution of the dynamic and static problems.

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "agepop/demographics.hpp"
#include "agepop/transport.hpp"

namespace agepop {

struct ModalLTI {
  Eigen::MatrixXd drift;  // A
  Eigen::MatrixXd input;  // B, n x m
  double weight = 1.0;    // N
  std::size_t mode = 0;
  double decay = 0.0;
  double age_step = 0.0;

  Eigen::Index dimension() const { return drift.rows(); }
  Eigen::Index inputs() const { return input.cols(); }
  Eigen::MatrixXd input_gram() const { return input * input.transpose(); }
};

// Upwind discretization of -∂_a - (μ + λ_k) with the renewal condition
// relaxed into row 0 and the birth control entering as e_0/Δa. Mortality on
// rows i >= 1 is sampled at the cell midpoint a_i - Δa/2.
ModalLTI assemble_modal_system(const DemographicModel& model,
                               const AgeGrid& grid, double decay,
                               double weight, std::size_t mode = 0);

ModalLTI make_lti(Eigen::MatrixXd drift, Eigen::MatrixXd input, double weight);

// Factor s such that replacing β by s·β makes the assembled drift singular
// (the discrete counterpart of R = 1).
double critical_fertility_scale(const DemographicModel& model,
                                const AgeGrid& grid, double decay);

double spectral_abscissa(const Eigen::MatrixXd& m);

// ----------------------------------------------------------------- Riccati

struct RiccatiOptions {
  // Step in τ; zero picks one from the stiffness of the problem.
  double step = 0.0;
  // Spacing of stored values; zero stores every step.
  double output_step = 0.0;
  double divergence_threshold = 1e12;
};

struct RiccatiTrajectory {
  std::vector<double> tau;
  std::vector<Eigen::MatrixXd> values;

  const Eigen::MatrixXd& final_value() const { return values.back(); }
};

// E' = N I + E A + Aᵀ E - E B Bᵀ E from E(0) = initial, RK4 with
// symmetrization after every step.
RiccatiTrajectory solve_riccati_ode(const ModalLTI& sys, double tau_max,
                                    const RiccatiOptions& options = {});
RiccatiTrajectory solve_riccati_ode(const ModalLTI& sys, double tau_max,
                                    const Eigen::MatrixXd& initial,
                                    const RiccatiOptions& options = {});

double default_riccati_step(const ModalLTI& sys, const Eigen::MatrixXd& initial);

struct AreOptions {
  double tolerance = 1e-10;
  int max_iterations = 50;
  double seed_horizon = 50.0;
  int seed_escalations = 3;
};

struct AreSolution {
  Eigen::MatrixXd value;
  double residual = 0.0;  // relative to ‖N I‖_F
  int iterations = 0;
  bool seeded_from_ode = false;
};

// Newton–Kleinman iteration for E A + Aᵀ E - E B Bᵀ E + N I = 0.
AreSolution solve_are(const ModalLTI& sys, const AreOptions& options = {});

double are_residual(const ModalLTI& sys, const Eigen::MatrixXd& e);

// ---------------------------------------------------------------- Lyapunov

// Solves M S + S Mᵀ = Q by complex Schur reduction (Bartels–Stewart).
// Throws SolverError when M and -M share an eigenvalue.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& m, const Eigen::MatrixXd& q);

// ‖M S + S Mᵀ - Q‖_F / max(‖Q‖_F, tiny).
double lyapunov_residual(const Eigen::MatrixXd& m, const Eigen::MatrixXd& s,
                         const Eigen::MatrixXd& q);

// --------------------------------------------------------------- dichotomy

// [[A, -B Bᵀ], [-N I, -Aᵀ]].
Eigen::MatrixXd hamiltonian(const ModalLTI& sys);

struct DichotomyTransform {
  Eigen::MatrixXd are_solution;
  Eigen::MatrixXd lyapunov;
  Eigen::MatrixXd forward;  // [[I, S], [Ê, Ê S + I]]
  Eigen::MatrixXd inverse;  // [[I + S Ê, -S], [-Ê, I]]
  double residual = 0.0;          // block-diagonalization residual (Frobenius)
  double inverse_residual = 0.0;  // ‖forward · inverse - I‖_F
  double closed_loop_abscissa = 0.0;
  std::string orientation;
  bool ok = false;
};

// Tries both Lyapunov orientations and both conjugation directions and keeps
// the combination with the smallest residual; `ok` reports whether it is
// below `tolerance`.
DichotomyTransform build_dichotomy(const ModalLTI& sys,
                                   const Eigen::MatrixXd& are_solution,
                                   double tolerance = 1e-8);

// min |Re λ| over the Hamiltonian spectrum.
double hamiltonian_imaginary_gap(const ModalLTI& sys);

// ------------------------------------------------------------- simulation

struct StateTrajectory {
  Eigen::VectorXd times;
  Eigen::MatrixXd states;    // row per time
  Eigen::MatrixXd controls;  // row per time
};

// y' = (A - B Bᵀ Ê) y, v = -Bᵀ Ê y, RK4.
StateTrajectory closed_loop_simulate(const ModalLTI& sys,
                                     const Eigen::MatrixXd& are_solution,
                                     const Eigen::VectorXd& y0, double horizon,
                                     double step);

enum class TerminalCost { kNone, kHalfNorm };

// Finite-horizon optimal feedback for y_d = 0: v = -Bᵀ E(T - t) y with E from
// the Riccati ODE started at I (half-norm pay-off) or 0.
StateTrajectory riccati_feedback_simulate(const ModalLTI& sys,
                                          const Eigen::VectorXd& y0,
                                          double horizon, double step,
                                          TerminalCost terminal);

// y' = A y + B v̄ with a constant control, RK4.
StateTrajectory constant_control_simulate(const ModalLTI& sys,
                                          const Eigen::VectorXd& y0,
                                          const Eigen::VectorXd& control,
                                          double horizon, double step);

// ---------------------------------------------------------------- LQ solves

struct OptimalTriple {
  Eigen::VectorXd times;
  Eigen::MatrixXd states;    // (M+1) x n
  Eigen::MatrixXd controls;  // (M+1) x m, node values
  Eigen::MatrixXd adjoints;  // (M+1) x n, node values
  Eigen::MatrixXd midpoint_controls;  // M x m
  Eigen::MatrixXd midpoint_adjoints;  // M x n
  double objective = 0.0;
  double kkt_residual = 0.0;
};

struct StaticTriple {
  Eigen::VectorXd state;
  Eigen::VectorXd control;
  Eigen::VectorXd adjoint;
  double residual = 0.0;
};

struct DynamicLqOptions {
  double step = 0.01;
  TerminalCost terminal = TerminalCost::kHalfNorm;
};

// Discretize-then-optimize: implicit-midpoint dynamics, controls held at the
// midpoints, trapezoid running cost ½N‖y - y_d‖², control cost ½‖v‖² and an
// optional ½‖y(T)‖² pay-off.
class DiscreteLqProblem {
 public:
  DiscreteLqProblem(const ModalLTI& sys, Eigen::VectorXd y0,
                    Eigen::VectorXd target, double horizon,
                    const DynamicLqOptions& options = {});

  std::size_t steps() const { return steps_; }
  double step() const { return step_; }

  // States produced by midpoint controls u (steps x m).
  Eigen::MatrixXd simulate(const Eigen::MatrixXd& u) const;
  double objective(const Eigen::MatrixXd& u) const;
  // Reduced gradient via the discrete adjoint recursion.
  Eigen::MatrixXd gradient(const Eigen::MatrixXd& u) const;

  // One sparse KKT solve.
  OptimalTriple solve() const;

 private:
  double running_weight(std::size_t n) const;
  double objective_from_states(const Eigen::MatrixXd& y,
                               const Eigen::MatrixXd& u) const;

  ModalLTI sys_;
  Eigen::VectorXd y0_;
  Eigen::VectorXd target_;
  double horizon_;
  DynamicLqOptions options_;
  std::size_t steps_;
  double step_;
  Eigen::MatrixXd implicit_;  // I - h/2 A
  Eigen::MatrixXd explicit_;  // I + h/2 A
  Eigen::PartialPivLU<Eigen::MatrixXd> implicit_lu_;
};

OptimalTriple solve_dynamic_lq(const ModalLTI& sys, const Eigen::VectorXd& y0,
                               const Eigen::VectorXd& target, double horizon,
                               const DynamicLqOptions& options = {});

// A ȳ + B v̄ = 0, Aᵀ p̄ + N (ȳ - y_d) = 0, v̄ + Bᵀ p̄ = 0 as one dense solve.
// Throws PreconditionError when A is numerically singular.
StaticTriple solve_static_lq(const ModalLTI& sys, const Eigen::VectorXd& target);

// J₂(v) = N/2 ‖y(v) - y_d‖² + ½‖v‖² with y(v) = -A⁻¹ B v.
double static_objective(const ModalLTI& sys, const Eigen::VectorXd& target,
                        const Eigen::VectorXd& control);

}  // namespace agepop
