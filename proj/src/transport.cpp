#include "agepop/transport.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "agepop/errors.hpp"

namespace agepop {

AgeGrid::AgeGrid(double lifespan, std::size_t cells)
    : lifespan_(lifespan), cells_(cells) {
  if (!(lifespan > 0.0) || !std::isfinite(lifespan)) {
    throw DomainError("age grid: lifespan must be positive and finite");
  }
  if (cells == 0) throw DomainError("age grid: need at least one cell");
  step_ = lifespan / static_cast<double>(cells);
}

Eigen::VectorXd AgeGrid::ages() const {
  Eigen::VectorXd a(static_cast<Eigen::Index>(nodes()));
  for (std::size_t i = 0; i < nodes(); ++i) a(static_cast<Eigen::Index>(i)) = age(i);
  return a;
}

Eigen::VectorXd AgeGrid::trapezoid_weights() const {
  Eigen::VectorXd w =
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(nodes()), step_);
  w(0) *= 0.5;
  w(w.size() - 1) *= 0.5;
  return w;
}

Eigen::VectorXd AgeGrid::sample(const AgeProfile& f) const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(nodes()));
  for (std::size_t i = 0; i < nodes(); ++i) y(static_cast<Eigen::Index>(i)) = f(age(i));
  return y;
}

std::size_t AgeGrid::steps_for(double horizon) const {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw DomainError("horizon must be finite and nonnegative");
  }
  const double ratio = horizon / step_;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream os;
    os << "horizon " << horizon << " is not a multiple of the age step "
       << step_;
    throw DomainError(os.str());
  }
  return static_cast<std::size_t>(rounded);
}

double AgeGrid::l2_norm(const Eigen::VectorXd& y) const {
  if (y.size() != static_cast<Eigen::Index>(nodes())) {
    throw ShapeError("l2_norm: profile length differs from grid");
  }
  return std::sqrt(trapezoid_weights().dot(y.cwiseAbs2()));
}

ModalControl ModalControl::Birth(Eigen::VectorXd series) {
  ModalControl c;
  c.support = ControlSupport::kBirth;
  c.values = std::move(series);
  return c;
}

ModalControl ModalControl::AgeBand(double band_limit, Eigen::MatrixXd values) {
  ModalControl c;
  c.support = ControlSupport::kAgeBand;
  c.band_limit = band_limit;
  c.values = std::move(values);
  return c;
}

CharacteristicMarch::CharacteristicMarch(const DemographicModel& model,
                                         const AgeGrid& grid, double decay)
    : grid_(grid) {
  if (std::abs(model.lifespan() - grid.lifespan()) >
      1e-12 * grid.lifespan()) {
    throw ShapeError("march: model lifespan differs from grid lifespan");
  }
  const auto n = static_cast<Eigen::Index>(grid.nodes());
  const double h = grid.step();
  const double damp = std::exp(-decay * h);
  transfer_ = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 1; i < n; ++i) {
    transfer_(i) =
        survival_ratio(model.mortality, grid.age(static_cast<std::size_t>(i)), h) *
        damp;
  }
  renewal_ = grid.trapezoid_weights();
  for (Eigen::Index i = 0; i < n; ++i) {
    renewal_(i) *= model.fertility(grid.age(static_cast<std::size_t>(i)));
  }
}

void CharacteristicMarch::check_control(const ModalControl& control,
                                        std::size_t steps) const {
  const auto rows = static_cast<std::size_t>(control.values.rows());
  if (rows < steps + 1) {
    std::ostringstream os;
    os << "control has " << rows << " time nodes, march needs " << steps + 1;
    throw ShapeError(os.str());
  }
  const auto cols = static_cast<std::size_t>(control.values.cols());
  if (control.support == ControlSupport::kBirth && cols != 1) {
    throw ShapeError("birth control must have exactly one column");
  }
  if (control.support == ControlSupport::kAgeBand && cols != grid_.nodes()) {
    throw ShapeError("age-band control must have one column per age node");
  }
}

Eigen::VectorXd CharacteristicMarch::step(const Eigen::VectorXd& y,
                                          std::size_t n,
                                          const ModalControl* control) const {
  const auto nodes = static_cast<Eigen::Index>(grid_.nodes());
  if (y.size() != nodes) throw ShapeError("march: state length differs from grid");
  Eigen::VectorXd next(nodes);
  next(0) = 0.0;
  for (Eigen::Index i = 1; i < nodes; ++i) next(i) = transfer_(i) * y(i - 1);

  const auto row_now = static_cast<Eigen::Index>(n);
  const auto row_next = row_now + 1;
  if (control != nullptr && control->support == ControlSupport::kAgeBand) {
    // Trapezoid along the characteristic from (a_{i-1}, t_n) to (a_i, t_{n+1}).
    const double half = 0.5 * grid_.step();
    const double limit = control->band_limit + 1e-12 * grid_.lifespan();
    for (Eigen::Index i = 1; i < nodes; ++i) {
      const bool in_prev = grid_.age(static_cast<std::size_t>(i - 1)) <= limit;
      const bool in_here = grid_.age(static_cast<std::size_t>(i)) <= limit;
      if (!in_prev && !in_here) continue;
      double src = 0.0;
      if (in_prev) src += transfer_(i) * control->values(row_now, i - 1);
      if (in_here) src += control->values(row_next, i);
      next(i) += half * src;
    }
  }

  double births = renewal_(0) * y(0);
  for (Eigen::Index i = 1; i < nodes; ++i) births += renewal_(i) * next(i);
  if (control != nullptr && control->support == ControlSupport::kBirth) {
    births += control->values(row_next, 0);
  }
  next(0) = births;
  return next;
}

ModalTrajectory CharacteristicMarch::evolve(const Eigen::VectorXd& y0,
                                            double horizon,
                                            const ModalControl* control,
                                            std::size_t mode) const {
  const std::size_t steps = grid_.steps_for(horizon);
  const auto nodes = static_cast<Eigen::Index>(grid_.nodes());
  if (y0.size() != nodes) {
    throw ShapeError("initial state length differs from the age grid");
  }
  if (control != nullptr) check_control(*control, steps);
  ModalTrajectory out;
  out.mode = mode;
  out.step = grid_.step();
  out.values.resize(static_cast<Eigen::Index>(steps + 1), nodes);
  out.values.row(0) = y0.transpose();
  Eigen::VectorXd y = y0;
  for (std::size_t n = 0; n < steps; ++n) {
    y = step(y, n, control);
    out.values.row(static_cast<Eigen::Index>(n + 1)) = y.transpose();
  }
  return out;
}

ModalTrajectory evolve_uncontrolled(const DemographicModel& model,
                                    const AgeGrid& grid, double decay,
                                    const Eigen::VectorXd& y0, double horizon,
                                    std::size_t mode) {
  return CharacteristicMarch(model, grid, decay).evolve(y0, horizon, nullptr, mode);
}

ModalTrajectory evolve_controlled(const DemographicModel& model,
                                  const AgeGrid& grid, double decay,
                                  const Eigen::VectorXd& y0,
                                  const ModalControl& control, double horizon,
                                  std::size_t mode) {
  return CharacteristicMarch(model, grid, decay).evolve(y0, horizon, &control, mode);
}

Eigen::VectorXd renewal_trace(const ModalTrajectory& trajectory,
                              const FertilityRate& beta, const AgeGrid& grid) {
  if (trajectory.values.cols() != static_cast<Eigen::Index>(grid.nodes())) {
    throw ShapeError("renewal_trace: trajectory does not match the age grid");
  }
  Eigen::VectorXd kernel = grid.trapezoid_weights();
  for (Eigen::Index i = 0; i < kernel.size(); ++i) {
    kernel(i) *= beta(grid.age(static_cast<std::size_t>(i)));
  }
  return trajectory.values * kernel;
}

}  // namespace agepop
