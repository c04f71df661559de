#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "agepop/errors.hpp"
#include "agepop/spectral.hpp"
#include "agepop/transport.hpp"
#include "oracles.hpp"
#include "scenario.hpp"

using namespace agepop;
using Eigen::VectorXd;

namespace {

DemographicModel inert_model(double lifespan = 1.0) {
  return {MortalityRate::Constant(lifespan, 0.0), FertilityRate::Constant(lifespan, 0.0)};
}

DemographicModel paper_mortality_only() {
  return {MortalityRate::ClosedForm(1.0, 50.0), FertilityRate::Constant(1.0, 0.0)};
}

}  // namespace

TEST(AgeGrid, StepsForRequiresAlignedHorizon) {
  const AgeGrid grid(1.0, 20);
  EXPECT_EQ(grid.steps_for(0.5), 10u);
  EXPECT_EQ(grid.steps_for(0.0), 0u);
  EXPECT_THROW(grid.steps_for(0.512), DomainError);
  EXPECT_THROW(grid.steps_for(-0.05), DomainError);
}

TEST(Transport, ZeroHorizonKeepsInitialState) {
  const auto model = scenario::paper_model();
  const AgeGrid grid(1.0, 50);
  const VectorXd y0 = grid.sample([](double a) { return 1.0 + a; });
  const auto traj = evolve_uncontrolled(model, grid, 0.0, y0, 0.0);
  EXPECT_EQ(traj.steps(), 0u);
  EXPECT_EQ(traj.final_state(), y0);
}

TEST(Transport, PureShift) {
  const AgeGrid grid(1.0, 40);
  const VectorXd y0 = grid.sample([](double a) { return std::sin(3.0 * a) + 2.0; });
  const auto traj = evolve_uncontrolled(inert_model(), grid, 0.0, y0, 0.25);
  const VectorXd y = traj.final_state();
  for (std::size_t i = 0; i < grid.nodes(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (i < 10) {
      EXPECT_EQ(y(ii), 0.0);
    } else {
      EXPECT_EQ(y(ii), y0(ii - 10));
    }
  }
}

TEST(Transport, MortalityAndDiffusionAlongCharacteristics) {
  const auto model = paper_mortality_only();
  const double decay = neumann_eigenvalue(1, 1.0);
  const AgeProfile y0f = [](double a) { return scenario::gauss(a, 0.3, 0.1); };
  const AgeGrid grid(1.0, 100);
  const auto traj = evolve_uncontrolled(model, grid, decay, grid.sample(y0f), 0.4);
  const VectorXd y = traj.final_state();
  for (std::size_t i = 40; i < grid.nodes(); ++i) {
    const double a = grid.age(i);
    const double ref = survival_ratio(model.mortality, a, 0.4) * std::exp(-decay * 0.4) *
                       y0f(a - 0.4);
    EXPECT_NEAR(y(static_cast<Eigen::Index>(i)), ref, 1e-12);
  }
}

TEST(Transport, ZeroControlMatchesUncontrolled) {
  const auto model = scenario::paper_model();
  const AgeGrid grid(1.0, 50);
  const VectorXd y0 = grid.sample([](double a) { return scenario::gauss(a, 0.5, 0.2); });
  const auto free = evolve_uncontrolled(model, grid, 1.0, y0, 0.6);
  const auto birth = ModalControl::Birth(VectorXd::Zero(31));
  const auto band = ModalControl::AgeBand(0.2, Eigen::MatrixXd::Zero(31, 51));
  EXPECT_EQ(evolve_controlled(model, grid, 1.0, y0, birth, 0.6).values, free.values);
  EXPECT_EQ(evolve_controlled(model, grid, 1.0, y0, band, 0.6).values, free.values);
}

TEST(Transport, BoundaryValueIsTransported) {
  const AgeGrid grid(1.0, 20);
  const auto control = ModalControl::Birth(VectorXd::Ones(11));
  const auto traj = evolve_controlled(inert_model(), grid, 0.0,
                                      VectorXd::Zero(21), control, 0.5);
  const VectorXd y = traj.final_state();
  for (std::size_t i = 0; i < grid.nodes(); ++i) {
    // The node a = t carries y0(0) = 0 along its characteristic.
    EXPECT_EQ(y(static_cast<Eigen::Index>(i)), grid.age(i) < 0.5 - 1e-12 ? 1.0 : 0.0);
  }
}

TEST(Transport, ControlShapeMismatchThrows) {
  const auto model = scenario::paper_model();
  const AgeGrid grid(1.0, 20);
  const VectorXd y0 = VectorXd::Ones(21);
  EXPECT_THROW(evolve_controlled(model, grid, 0.0, y0,
                                 ModalControl::Birth(VectorXd::Zero(5)), 0.5),
               ShapeError);
  EXPECT_THROW(evolve_controlled(model, grid, 0.0, y0,
                                 ModalControl::AgeBand(0.2, Eigen::MatrixXd::Zero(11, 7)),
                                 0.5),
               ShapeError);
  EXPECT_THROW(evolve_uncontrolled(model, grid, 0.0, VectorXd::Ones(5), 0.5), ShapeError);
}

TEST(Transport, PositivityPreserved) {
  const auto model = scenario::paper_model(1.3);
  const AgeGrid grid(1.0, 80);
  const VectorXd y0 = grid.sample([](double a) { return scenario::bump(a, 0.1, 0.6); });
  const auto control = ModalControl::Birth(VectorXd::Constant(161, 0.3));
  const auto traj = evolve_controlled(model, grid, 2.0, y0, control, 2.0);
  EXPECT_GE(traj.values.minCoeff(), 0.0);
}

TEST(Transport, MassBudgetForPureShift) {
  const AgeGrid grid(1.0, 64);
  const VectorXd y0 = grid.sample([](double a) { return 1.0 + std::cos(5.0 * a); });
  const auto traj = evolve_uncontrolled(inert_model(), grid, 0.0, y0, 1.5);
  const VectorXd w = grid.trapezoid_weights();
  const double h = grid.step();
  const auto last = static_cast<Eigen::Index>(grid.cells());
  for (std::size_t n = 0; n < traj.steps(); ++n) {
    const VectorXd now = traj.at(n);
    const VectorXd next = traj.at(n + 1);
    const double inflow = 0.5 * h * (now(0) + next(0));
    const double outflow = 0.5 * h * (now(last) + next(last));
    EXPECT_NEAR(w.dot(next), w.dot(now) + inflow - outflow, 1e-10);
  }
}

TEST(Transport, SemigroupProperty) {
  const auto model = scenario::paper_model(0.9);
  const AgeGrid grid(1.0, 50);
  const VectorXd y0 = grid.sample([](double a) { return scenario::gauss(a, 0.4, 0.2); });
  const auto whole = evolve_uncontrolled(model, grid, 3.0, y0, 1.2).final_state();
  const auto first = evolve_uncontrolled(model, grid, 3.0, y0, 0.5).final_state();
  const auto second = evolve_uncontrolled(model, grid, 3.0, first, 0.7).final_state();
  EXPECT_LE((whole - second).cwiseAbs().maxCoeff(), 1e-14 * whole.cwiseAbs().maxCoeff());
}

TEST(Transport, FirstOrderUnderRefinement) {
  const auto model = scenario::paper_model(0.8);
  const AgeProfile y0 = [](double a) { return scenario::gauss(a, 0.4, 0.15); };
  auto coarse_sample = [&](std::size_t cells) {
    const AgeGrid grid(1.0, cells);
    const auto y = evolve_uncontrolled(model, grid, 0.0, grid.sample(y0), 0.8).final_state();
    VectorXd out(21);
    for (Eigen::Index j = 0; j <= 20; ++j) out(j) = y(j * static_cast<Eigen::Index>(cells / 20));
    return out;
  };
  const VectorXd a = coarse_sample(200);
  const VectorXd b = coarse_sample(400);
  const VectorXd c = coarse_sample(800);
  const double order = std::log2((a - b).norm() / (b - c).norm());
  EXPECT_GE(order, 0.9);
}

TEST(Renewal, TraceOfZeroIsZero) {
  const auto model = scenario::paper_model();
  const AgeGrid grid(1.0, 20);
  const auto traj = evolve_uncontrolled(model, grid, 0.0, VectorXd::Zero(21), 0.5);
  EXPECT_EQ(renewal_trace(traj, model.fertility, grid).norm(), 0.0);
}

TEST(Renewal, ConstantFertilityOnConstantState) {
  const AgeGrid grid(2.0, 40);
  ModalTrajectory traj;
  traj.step = grid.step();
  traj.values = Eigen::MatrixXd::Ones(3, 41);
  const auto b = renewal_trace(traj, FertilityRate::Constant(2.0, 0.3), grid);
  for (Eigen::Index n = 0; n < 3; ++n) EXPECT_NEAR(b(n), 0.6, 1e-14);
}

TEST(Renewal, MatchesSimpsonOnPaperData) {
  const auto model = scenario::paper_model();
  const AgeGrid grid(1.0, 2000);
  const AgeProfile y0 = [](double a) { return scenario::gauss(a, 0.5, 0.2); };
  const auto traj = evolve_uncontrolled(model, grid, 0.0, grid.sample(y0), 0.0);
  const double b = renewal_trace(traj, model.fertility, grid)(0);
  const double ref =
      oracle::simpson([&](double a) { return model.fertility(a) * y0(a); }, 0.0, 1.0);
  EXPECT_NEAR(b / ref, 1.0, 1e-6);
}
