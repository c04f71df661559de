#pragma once

// Explicit null controls built along characteristics: a control distributed
// over the young age band [0, a0], its limit acting on newborns only, the
// closed-form controlled states, the short-horizon obstruction and the
// ε → 0 limit study.

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "agepop/demographics.hpp"
#include "agepop/spectral.hpp"
#include "agepop/transport.hpp"

namespace agepop {

// Per-mode controls sharing one horizon and time step.
struct ControlSignal {
  double horizon = 0.0;
  double step = 0.0;
  std::vector<ModalControl> modes;
};

struct NullControlReport {
  double initial_norm = 0.0;
  double final_norm = 0.0;
  double control_norm = 0.0;
  double bound = 0.0;
  std::vector<double> mode_residuals;
};

// Births produced at time c by the initial cohort alone:
//   f(c) = ∫_c^A β(z) π(z)/π(z-c) e^{-λc} y0(z-c) dz.
double initial_cohort_births(const DemographicModel& model, double decay,
                             const AgeProfile& y0, double c,
                             std::size_t cells = 2000);

// Same quantity on the grid nodes c = t_n, trapezoid on the nodes of [c, A].
Eigen::VectorXd initial_cohort_births(const DemographicModel& model,
                                      const AgeGrid& grid, double decay,
                                      const Eigen::VectorXd& y0);

// v(t_n) = -f(t_n) for t_n < A, zero afterwards. Requires horizon > A.
ModalControl birth_null_control(const DemographicModel& model,
                                const AgeGrid& grid, double decay,
                                const Eigen::VectorXd& y0, double horizon);

// Closed-form state at time t under the birth null control: free flow above
// the characteristic a = t, zero below it.
Eigen::VectorXd birth_controlled_state(const DemographicModel& model,
                                       const AgeGrid& grid, double decay,
                                       const AgeProfile& y0, double t);

// Band control on [0, a0]: v(a,t) = -f(t-a) / D(t-a) with
// D(c) = ∫_0^{min(A-c, a0)} e^{λz}/π(z) dz. Requires horizon > A - a0.
ModalControl distributed_null_control(const DemographicModel& model,
                                      const AgeGrid& grid, double decay,
                                      const Eigen::VectorXd& y0,
                                      double band_limit, double horizon);

// Closed-form state at time t under the band control.
Eigen::VectorXd distributed_controlled_state(const DemographicModel& model,
                                             const AgeGrid& grid, double decay,
                                             const AgeProfile& y0,
                                             double band_limit, double horizon,
                                             double t,
                                             std::size_t cells = 2000);

// True when β vanishes on (0, a0), the condition under which the band
// control formula is exact.
bool fertility_vanishes_on_band(const FertilityRate& beta, double band_limit);

// ‖β‖_∞ A / √2 · ‖y0‖.
double control_norm_bound(const FertilityRate& beta, double y0_norm);

// Discrete L²(0, T) norm (L²((0,T)×(0,A)) for band controls).
double control_l2_norm(const ModalControl& control, const AgeGrid& grid,
                       double horizon);

struct ObstructionWitness {
  std::size_t first_index = 0;  // first age node strictly above T + a0
  Eigen::VectorXd profile;      // state on nodes first_index..N at time T
  double norm = 0.0;            // sqrt(Δa Σ profile²)
  bool degenerate = false;
  std::string notice;
};

// Part of the state at time T that no control supported in [0, a0] can
// reach. Requires 0 < T < A - a0.
ObstructionWitness short_horizon_obstruction(const DemographicModel& model,
                                             const AgeGrid& grid, double decay,
                                             const Eigen::VectorXd& y0,
                                             double band_limit, double horizon);

struct EpsilonRow {
  double epsilon = 0.0;
  bool skipped = false;
  std::string notice;
  double weak_gap = 0.0;   // max over the test panel of the pairing gap
  double state_gap = 0.0;  // max over sample times of the L² state gap
};

struct EpsilonStudyOptions {
  std::vector<double> sample_times;  // defaults to {T/4, T/2, 3T/4} if empty
  std::size_t time_cells = 4000;
  std::size_t band_cells = 64;
  std::size_t age_cells = 2000;
};

std::vector<EpsilonRow> epsilon_limit_study(
    const DemographicModel& model, double decay, const AgeProfile& y0,
    const std::vector<double>& epsilons, double horizon,
    const EpsilonStudyOptions& options = {});

// Synthesizes the birth control for every mode, marches, and reports norms
// summed over modes.
NullControlReport verify_birth_null_control(
    const DemographicModel& model, const AgeGrid& grid,
    const std::vector<double>& decays,
    const std::vector<Eigen::VectorXd>& initial_modes, double horizon,
    ControlSignal* signal_out = nullptr,
    std::vector<ModalTrajectory>* trajectories_out = nullptr);

// Band-control analogue of verify_birth_null_control.
NullControlReport verify_distributed_null_control(
    const DemographicModel& model, const AgeGrid& grid,
    const std::vector<double>& decays,
    const std::vector<Eigen::VectorXd>& initial_modes, double band_limit,
    double horizon, ControlSignal* signal_out = nullptr,
    std::vector<ModalTrajectory>* trajectories_out = nullptr);

// Restricts per-mode birth controls to the spatial interval [lo, hi]: the
// spatial control is kept on ω and set to zero off ω, then re-projected,
// which couples the modes through ⟨1_ω φ_j, φ_k⟩.
ControlSignal restrict_to_subdomain(const ControlSignal& signal,
                                    const NeumannBasis& basis, double lo,
                                    double hi);

}  // namespace agepop
