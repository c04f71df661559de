#pragma once

// Age transport along characteristics for one spatial mode:
//   ∂_t y + ∂_a y + (μ(a) + λ_k) y = source,  y(0, t) = ∫ β y da + v(t).
// Time steps equal age steps, so transport is exact and only the renewal
// quadrature and the control source are discretized.

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "agepop/demographics.hpp"

namespace agepop {

using AgeProfile = std::function<double(double)>;

class AgeGrid {
 public:
  AgeGrid(double lifespan, std::size_t cells);

  double lifespan() const { return lifespan_; }
  std::size_t cells() const { return cells_; }
  std::size_t nodes() const { return cells_ + 1; }
  double step() const { return step_; }
  double age(std::size_t i) const {
    return lifespan_ * static_cast<double>(i) / static_cast<double>(cells_);
  }

  Eigen::VectorXd ages() const;
  Eigen::VectorXd trapezoid_weights() const;
  Eigen::VectorXd sample(const AgeProfile& f) const;

  // Number of Δa steps in `horizon`; throws DomainError unless the horizon
  // is a nonnegative multiple of Δa.
  std::size_t steps_for(double horizon) const;

  // Trapezoid L² norm over [0, A].
  double l2_norm(const Eigen::VectorXd& y) const;

 private:
  double lifespan_;
  std::size_t cells_;
  double step_;
};

enum class ControlSupport { kAgeBand, kBirth };

// Control for one mode on the march's time nodes t_n = nΔa. Birth controls
// have one column; age-band controls have one column per age node and are
// ignored above `band_limit`.
struct ModalControl {
  ControlSupport support = ControlSupport::kBirth;
  double band_limit = 0.0;
  Eigen::MatrixXd values;

  static ModalControl Birth(Eigen::VectorXd series);
  static ModalControl AgeBand(double band_limit, Eigen::MatrixXd values);
};

struct ModalTrajectory {
  std::size_t mode = 0;
  double step = 0.0;
  // Row n holds the age profile at t_n = nΔa.
  Eigen::MatrixXd values;

  std::size_t steps() const { return static_cast<std::size_t>(values.rows()) - 1; }
  double time(std::size_t n) const { return step * static_cast<double>(n); }
  Eigen::VectorXd at(std::size_t n) const {
    return values.row(static_cast<Eigen::Index>(n)).transpose();
  }
  Eigen::VectorXd final_state() const { return at(steps()); }
};

class CharacteristicMarch {
 public:
  CharacteristicMarch(const DemographicModel& model, const AgeGrid& grid,
                      double decay);

  const AgeGrid& grid() const { return grid_; }

  // Advance one step from t_n to t_{n+1}; `control` may be null.
  Eigen::VectorXd step(const Eigen::VectorXd& y, std::size_t n,
                       const ModalControl* control) const;

  ModalTrajectory evolve(const Eigen::VectorXd& y0, double horizon,
                         const ModalControl* control = nullptr,
                         std::size_t mode = 0) const;

  // Per-node factor π(a_i)/π(a_i - Δa) · e^{-λ_k Δa}.
  const Eigen::VectorXd& transfer() const { return transfer_; }
  // Per-node renewal weights w_i β(a_i).
  const Eigen::VectorXd& renewal_weights() const { return renewal_; }

 private:
  void check_control(const ModalControl& control, std::size_t steps) const;

  AgeGrid grid_;
  Eigen::VectorXd transfer_;
  Eigen::VectorXd renewal_;
};

ModalTrajectory evolve_uncontrolled(const DemographicModel& model,
                                    const AgeGrid& grid, double decay,
                                    const Eigen::VectorXd& y0, double horizon,
                                    std::size_t mode = 0);

ModalTrajectory evolve_controlled(const DemographicModel& model,
                                  const AgeGrid& grid, double decay,
                                  const Eigen::VectorXd& y0,
                                  const ModalControl& control, double horizon,
                                  std::size_t mode = 0);

// b(t_n) = trapezoid ∫ β y(·, t_n) da for every stored time.
Eigen::VectorXd renewal_trace(const ModalTrajectory& trajectory,
                              const FertilityRate& beta, const AgeGrid& grid);

}  // namespace agepop
