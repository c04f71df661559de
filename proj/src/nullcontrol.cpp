#include "agepop/nullcontrol.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "agepop/errors.hpp"
#include "agepop/parallel.hpp"

namespace agepop {

namespace {

// e^{λz} / π(z) for z < A, evaluated without dividing by π.
double inverse_survival_weight(const MortalityRate& mu, double decay, double z) {
  return std::exp(decay * z + mu.integral(0.0, z));
}

// ∫_0^x e^{λz}/π(z) dz by trapezoid on `cells` uniform cells.
double band_integral(const MortalityRate& mu, double decay, double x,
                     std::size_t cells) {
  if (x <= 0.0) return 0.0;
  const double h = x / static_cast<double>(cells);
  double acc = 0.0;
  for (std::size_t j = 0; j <= cells; ++j) {
    const double w = (j == 0 || j == cells) ? 0.5 * h : h;
    acc += w * inverse_survival_weight(mu, decay, h * static_cast<double>(j));
  }
  return acc;
}

// Cumulative trapezoid table of e^{λz}/π(z) on [0, upper] with linear
// interpolation between nodes.
class BandIntegralTable {
 public:
  BandIntegralTable(const MortalityRate& mu, double decay, double upper,
                    std::size_t cells)
      : h_(upper / static_cast<double>(cells)), cum_(cells + 1, 0.0) {
    double prev = inverse_survival_weight(mu, decay, 0.0);
    for (std::size_t j = 1; j <= cells; ++j) {
      const double cur =
          inverse_survival_weight(mu, decay, h_ * static_cast<double>(j));
      cum_[j] = cum_[j - 1] + 0.5 * h_ * (prev + cur);
      prev = cur;
    }
  }

  double operator()(double x) const {
    if (x <= 0.0) return 0.0;
    const double s = x / h_;
    auto k = static_cast<std::size_t>(s);
    if (k >= cum_.size() - 1) return cum_.back();
    const double w = s - static_cast<double>(k);
    return (1.0 - w) * cum_[k] + w * cum_[k + 1];
  }

 private:
  double h_;
  std::vector<double> cum_;
};

// Linear interpolation of samples on c_j = j h, zero outside [0, (n-1)h].
class UniformTable {
 public:
  UniformTable(double h, std::vector<double> values)
      : h_(h), values_(std::move(values)) {}

  double operator()(double c) const {
    if (c < 0.0) return 0.0;
    const double s = c / h_;
    auto k = static_cast<std::size_t>(s);
    if (k >= values_.size() - 1) {
      return k == values_.size() - 1 && s == static_cast<double>(k)
                 ? values_.back()
                 : 0.0;
    }
    const double w = s - static_cast<double>(k);
    return (1.0 - w) * values_[k] + w * values_[k + 1];
  }

 private:
  double h_;
  std::vector<double> values_;
};

void require_birth_horizon(double lifespan, double horizon) {
  if (!(horizon > lifespan * (1.0 + 1e-12))) {
    std::ostringstream os;
    os << "birth null control needs a horizon T > A (T=" << horizon
       << ", A=" << lifespan << ")";
    throw PreconditionError(os.str());
  }
}

void require_band(double lifespan, double band_limit) {
  if (!(band_limit > 0.0) || !(band_limit < lifespan)) {
    throw DomainError("control band limit a0 must lie in (0, A)");
  }
}

void require_band_horizon(double lifespan, double band_limit, double horizon) {
  require_band(lifespan, band_limit);
  if (!(horizon > (lifespan - band_limit) * (1.0 + 1e-12))) {
    std::ostringstream os;
    os << "short-horizon obstruction: no control supported in [0, a0] can "
          "steer the state to zero when T <= A - a0 (T="
       << horizon << ", A - a0=" << lifespan - band_limit << ")";
    throw PreconditionError(os.str());
  }
}

double free_flow(const DemographicModel& model, double decay,
                 const AgeProfile& y0, double a, double t) {
  const double r = survival_ratio(model.mortality, a, t);
  if (r == 0.0) return 0.0;
  return r * std::exp(-decay * t) * y0(a - t);
}

}  // namespace

double initial_cohort_births(const DemographicModel& model, double decay,
                             const AgeProfile& y0, double c,
                             std::size_t cells) {
  const double lifespan = model.lifespan();
  if (c < 0.0) throw DomainError("cohort birth time must be nonnegative");
  if (c >= lifespan) return 0.0;
  cells = std::max<std::size_t>(cells, 1);
  const double h = (lifespan - c) / static_cast<double>(cells);
  const double damp = std::exp(-decay * c);
  double acc = 0.0;
  for (std::size_t j = 0; j <= cells; ++j) {
    const double z = j == cells ? lifespan : c + h * static_cast<double>(j);
    const double b = model.fertility(z);
    if (b == 0.0) continue;
    const double r = survival_ratio(model.mortality, z, c);
    if (r == 0.0) continue;
    const double w = (j == 0 || j == cells) ? 0.5 * h : h;
    acc += w * b * r * y0(z - c);
  }
  return acc * damp;
}

Eigen::VectorXd initial_cohort_births(const DemographicModel& model,
                                      const AgeGrid& grid, double decay,
                                      const Eigen::VectorXd& y0) {
  const std::size_t cells = grid.cells();
  if (y0.size() != static_cast<Eigen::Index>(grid.nodes())) {
    throw ShapeError("initial state length differs from the age grid");
  }
  const double h = grid.step();
  Eigen::VectorXd beta(static_cast<Eigen::Index>(grid.nodes()));
  for (std::size_t j = 0; j <= cells; ++j) {
    beta(static_cast<Eigen::Index>(j)) = model.fertility(grid.age(j));
  }
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.nodes()));
  for (std::size_t n = 0; n < cells; ++n) {
    const double c = grid.age(n);
    double acc = 0.0;
    for (std::size_t j = n; j <= cells; ++j) {
      const double b = beta(static_cast<Eigen::Index>(j));
      if (b == 0.0) continue;
      const double r = survival_ratio(model.mortality, grid.age(j), c);
      const double w = (j == n || j == cells) ? 0.5 * h : h;
      acc += w * b * r * y0(static_cast<Eigen::Index>(j - n));
    }
    f(static_cast<Eigen::Index>(n)) = acc * std::exp(-decay * c);
  }
  return f;
}

ModalControl birth_null_control(const DemographicModel& model,
                                const AgeGrid& grid, double decay,
                                const Eigen::VectorXd& y0, double horizon) {
  require_birth_horizon(model.lifespan(), horizon);
  const std::size_t steps = grid.steps_for(horizon);
  const Eigen::VectorXd f = initial_cohort_births(model, grid, decay, y0);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(steps + 1));
  for (std::size_t n = 0; n < std::min(steps + 1, grid.cells()); ++n) {
    v(static_cast<Eigen::Index>(n)) = -f(static_cast<Eigen::Index>(n));
  }
  return ModalControl::Birth(std::move(v));
}

Eigen::VectorXd birth_controlled_state(const DemographicModel& model,
                                       const AgeGrid& grid, double decay,
                                       const AgeProfile& y0, double t) {
  if (t < 0.0) throw DomainError("time must be nonnegative");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.nodes()));
  for (std::size_t i = 0; i < grid.nodes(); ++i) {
    const double a = grid.age(i);
    if (a >= t) y(static_cast<Eigen::Index>(i)) = free_flow(model, decay, y0, a, t);
  }
  return y;
}

ModalControl distributed_null_control(const DemographicModel& model,
                                      const AgeGrid& grid, double decay,
                                      const Eigen::VectorXd& y0,
                                      double band_limit, double horizon) {
  const double lifespan = model.lifespan();
  require_band_horizon(lifespan, band_limit, horizon);
  const std::size_t steps = grid.steps_for(horizon);
  const std::size_t cells = grid.cells();
  const double h = grid.step();
  const Eigen::VectorXd f = initial_cohort_births(model, grid, decay, y0);

  // Grid trapezoid of e^{λz}/π(z) with a partial last panel.
  std::vector<double> g(cells + 1, 0.0);
  std::vector<double> cum(cells + 1, 0.0);
  for (std::size_t j = 0; j < cells; ++j) {
    g[j] = inverse_survival_weight(model.mortality, decay, grid.age(j));
    if (j > 0) cum[j] = cum[j - 1] + 0.5 * h * (g[j - 1] + g[j]);
  }
  auto integral_to = [&](double x) {
    const auto k = static_cast<std::size_t>(std::floor(x / h + 1e-9));
    const double zk = grid.age(k);
    double acc = cum[k];
    if (x > zk + 1e-12 * lifespan) {
      acc += 0.5 * (x - zk) *
             (g[k] + inverse_survival_weight(model.mortality, decay, x));
    }
    return acc;
  };

  const double band_tol = band_limit + 1e-12 * lifespan;
  Eigen::MatrixXd values =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(steps + 1),
                            static_cast<Eigen::Index>(grid.nodes()));
  std::vector<double> denominators(cells + 1, 0.0);
  for (std::size_t m = 0; m <= cells; ++m) {
    denominators[m] = integral_to(std::min(lifespan - grid.age(m), band_limit));
  }
  for (std::size_t n = 0; n <= steps; ++n) {
    if (n > cells) break;  // t_n > A: every cohort has left the band
    for (std::size_t i = 0; i <= n && grid.age(i) <= band_tol; ++i) {
      const std::size_t m = n - i;
      const double d = denominators[m];
      if (d <= 0.0) continue;
      // The cohort on a = t holds y0(0), not the births f(0).
      const double cohort = m == 0 ? y0(0) : f(static_cast<Eigen::Index>(m));
      values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = -cohort / d;
    }
  }
  return ModalControl::AgeBand(band_limit, std::move(values));
}

Eigen::VectorXd distributed_controlled_state(const DemographicModel& model,
                                             const AgeGrid& grid, double decay,
                                             const AgeProfile& y0,
                                             double band_limit, double horizon,
                                             double t, std::size_t cells) {
  const double lifespan = model.lifespan();
  require_band_horizon(lifespan, band_limit, horizon);
  if (t < 0.0) throw DomainError("time must be nonnegative");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.nodes()));
  for (std::size_t i = 0; i < grid.nodes(); ++i) {
    const double a = grid.age(i);
    const bool on_edge = std::abs(a - t) <= 1e-12 * lifespan;
    if (a > t && !on_edge) {
      y(static_cast<Eigen::Index>(i)) = free_flow(model, decay, y0, a, t);
      continue;
    }
    const double c = on_edge ? 0.0 : t - a;
    if (c >= lifespan) continue;
    const double births =
        on_edge ? y0(0.0) : initial_cohort_births(model, decay, y0, c, cells);
    if (births == 0.0) continue;
    const double reach = std::min(lifespan - c, band_limit);
    const double full = band_integral(model.mortality, decay, reach, cells);
    const double part =
        band_integral(model.mortality, decay, std::min(a, reach), cells);
    const double bracket = full > 0.0 ? 1.0 - part / full : 1.0;
    y(static_cast<Eigen::Index>(i)) = survival(model.mortality, a) *
                                      std::exp(-decay * a) * births * bracket;
  }
  return y;
}

bool fertility_vanishes_on_band(const FertilityRate& beta, double band_limit) {
  return beta.VanishesBelow(band_limit);
}

double control_norm_bound(const FertilityRate& beta, double y0_norm) {
  return beta.SupNorm() * beta.lifespan() / std::numbers::sqrt2 * y0_norm;
}

double control_l2_norm(const ModalControl& control, const AgeGrid& grid,
                       double horizon) {
  const std::size_t steps = grid.steps_for(horizon);
  if (static_cast<std::size_t>(control.values.rows()) < steps + 1) {
    throw ShapeError("control shorter than the horizon");
  }
  const double h = grid.step();
  Eigen::VectorXd age_w;
  if (control.support == ControlSupport::kAgeBand) age_w = grid.trapezoid_weights();
  double acc = 0.0;
  for (std::size_t n = 0; n <= steps; ++n) {
    const double wt = (n == 0 || n == steps) ? 0.5 * h : h;
    const auto row = control.values.row(static_cast<Eigen::Index>(n));
    if (control.support == ControlSupport::kBirth) {
      acc += wt * row(0) * row(0);
    } else {
      acc += wt * age_w.dot(row.transpose().cwiseAbs2());
    }
  }
  return std::sqrt(acc);
}

ObstructionWitness short_horizon_obstruction(const DemographicModel& model,
                                             const AgeGrid& grid, double decay,
                                             const Eigen::VectorXd& y0,
                                             double band_limit, double horizon) {
  const double lifespan = model.lifespan();
  require_band(lifespan, band_limit);
  if (!(horizon > 0.0) || !(horizon < lifespan - band_limit)) {
    throw PreconditionError(
        "obstruction witness needs 0 < T < A - a0; larger horizons admit null "
        "controls");
  }
  if (y0.size() != static_cast<Eigen::Index>(grid.nodes())) {
    throw ShapeError("initial state length differs from the age grid");
  }
  const std::size_t steps = grid.steps_for(horizon);
  const double h = grid.step();
  const double cut = horizon + band_limit;
  std::size_t first = 0;
  while (first < grid.nodes() && grid.age(first) <= cut + 1e-9 * h) ++first;

  ObstructionWitness w;
  w.first_index = first;
  const std::size_t count = grid.nodes() > first ? grid.nodes() - first : 0;
  w.profile = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count));
  const double damp = std::exp(-decay * horizon);
  bool window_zero = true;
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t i = first + j;
    const double src = y0(static_cast<Eigen::Index>(i - steps));
    if (src != 0.0) window_zero = false;
    w.profile(static_cast<Eigen::Index>(j)) =
        survival_ratio(model.mortality, grid.age(i), horizon) * damp * src;
  }
  w.norm = std::sqrt(h * w.profile.squaredNorm());
  if (window_zero) {
    w.degenerate = true;
    w.notice =
        "initial state vanishes on (a0, A - T]; the witness is degenerate";
  }
  return w;
}

std::vector<EpsilonRow> epsilon_limit_study(
    const DemographicModel& model, double decay, const AgeProfile& y0,
    const std::vector<double>& epsilons, double horizon,
    const EpsilonStudyOptions& options) {
  const double lifespan = model.lifespan();
  std::vector<double> times = options.sample_times;
  if (times.empty()) times = {0.25 * horizon, 0.5 * horizon, 0.75 * horizon};

  // Births of the initial cohort on a fine c grid over [0, A].
  const std::size_t nc = std::max<std::size_t>(options.time_cells, 16);
  const double hc = lifespan / static_cast<double>(nc);
  std::vector<double> fvals(nc + 1, 0.0);
  for (std::size_t j = 0; j < nc; ++j) {
    fvals[j] = initial_cohort_births(model, decay, y0, hc * static_cast<double>(j),
                                     options.age_cells);
  }
  const UniformTable births(hc, std::move(fvals));

  using TestFunction = std::function<double(double, double)>;
  const std::array<TestFunction, 4> panel = {
      [](double, double) { return 1.0; },
      [horizon](double, double t) {
        return std::cos(std::numbers::pi * t / horizon);
      },
      [](double a, double t) { return (1.0 + a) * std::exp(-t); },
      [horizon](double a, double t) {
        return 0.5 + std::sin(std::numbers::pi * (t + a) / (2.0 * horizon));
      },
  };

  const std::size_t nt = std::max<std::size_t>(options.time_cells, 16);
  const double ht = horizon / static_cast<double>(nt);
  std::array<double, 4> limit_pairing{};
  for (std::size_t n = 0; n <= nt; ++n) {
    const double t = ht * static_cast<double>(n);
    const double w = (n == 0 || n == nt) ? 0.5 * ht : ht;
    const double v1 = t < lifespan ? -births(t) : 0.0;
    for (std::size_t p = 0; p < panel.size(); ++p) {
      limit_pairing[p] += w * v1 * panel[p](0.0, t);
    }
  }

  std::vector<EpsilonRow> rows;
  rows.reserve(epsilons.size());
  for (double eps : epsilons) {
    EpsilonRow row;
    row.epsilon = eps;
    if (!(eps > 0.0) || !(eps < lifespan) ||
        !(horizon > (lifespan - eps) * (1.0 + 1e-12))) {
      row.skipped = true;
      row.notice = "epsilon violates T > A - epsilon; skipped";
      rows.push_back(row);
      continue;
    }
    const BandIntegralTable band(model.mortality, decay, eps,
                                 std::max<std::size_t>(options.band_cells * 16, 64));
    auto control = [&](double a, double t) {
      const double c = t - a;
      if (c < 0.0 || c >= lifespan) return 0.0;
      const double reach = std::min(lifespan - c, eps);
      if (a > reach) return 0.0;
      const double d = band(reach);
      return d > 0.0 ? -births(c) / d : 0.0;
    };

    const std::size_t na = std::max<std::size_t>(options.band_cells, 4);
    const double ha = eps / static_cast<double>(na);
    std::array<double, 4> pairing{};
    for (std::size_t n = 0; n <= nt; ++n) {
      const double t = ht * static_cast<double>(n);
      const double wt = (n == 0 || n == nt) ? 0.5 * ht : ht;
      for (std::size_t i = 0; i <= na; ++i) {
        const double a = ha * static_cast<double>(i);
        const double wa = (i == 0 || i == na) ? 0.5 * ha : ha;
        const double v = control(a, t);
        if (v == 0.0) continue;
        for (std::size_t p = 0; p < panel.size(); ++p) {
          pairing[p] += wt * wa * v * panel[p](a, t);
        }
      }
    }
    for (std::size_t p = 0; p < panel.size(); ++p) {
      row.weak_gap = std::max(row.weak_gap, std::abs(pairing[p] - limit_pairing[p]));
    }

    // Below the characteristic the birth-controlled state is zero, so the
    // gap is the band-controlled state itself on [0, min(t, A)].
    for (double t : times) {
      const double upper = std::min(t, lifespan);
      if (upper <= 0.0) continue;
      const std::size_t cells = std::max<std::size_t>(options.age_cells, 16);
      const double h = upper / static_cast<double>(cells);
      double acc = 0.0;
      for (std::size_t j = 0; j <= cells; ++j) {
        const double a = h * static_cast<double>(j);
        const double c = t - a;
        if (c >= lifespan) continue;
        const double f = births(c);
        if (f == 0.0) continue;
        const double reach = std::min(lifespan - c, eps);
        const double full = band(reach);
        const double bracket =
            full > 0.0 ? 1.0 - band(std::min(a, reach)) / full : 1.0;
        const double y = survival(model.mortality, a) * std::exp(-decay * a) * f *
                         bracket;
        const double w = (j == 0 || j == cells) ? 0.5 * h : h;
        acc += w * y * y;
      }
      row.state_gap = std::max(row.state_gap, std::sqrt(acc));
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

NullControlReport summarize(const AgeGrid& grid, const FertilityRate& beta,
                            const std::vector<Eigen::VectorXd>& initial_modes,
                            const std::vector<ModalTrajectory>& trajectories,
                            const ControlSignal& signal) {
  NullControlReport r;
  double y0_sq = 0.0;
  double yt_sq = 0.0;
  double v_sq = 0.0;
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    const double n0 = grid.l2_norm(initial_modes[k]);
    const double nt = grid.l2_norm(trajectories[k].final_state());
    const double nv = control_l2_norm(signal.modes[k], grid, signal.horizon);
    y0_sq += n0 * n0;
    yt_sq += nt * nt;
    v_sq += nv * nv;
    r.mode_residuals.push_back(nt);
  }
  r.initial_norm = std::sqrt(y0_sq);
  r.final_norm = std::sqrt(yt_sq);
  r.control_norm = std::sqrt(v_sq);
  r.bound = control_norm_bound(beta, r.initial_norm);
  return r;
}

void check_modes(const std::vector<double>& decays,
                 const std::vector<Eigen::VectorXd>& initial_modes) {
  if (decays.size() != initial_modes.size()) {
    throw ShapeError("one initial profile per mode is required");
  }
}

}  // namespace

NullControlReport verify_birth_null_control(
    const DemographicModel& model, const AgeGrid& grid,
    const std::vector<double>& decays,
    const std::vector<Eigen::VectorXd>& initial_modes, double horizon,
    ControlSignal* signal_out, std::vector<ModalTrajectory>* trajectories_out) {
  check_modes(decays, initial_modes);
  require_birth_horizon(model.lifespan(), horizon);
  ControlSignal signal;
  signal.horizon = horizon;
  signal.step = grid.step();
  signal.modes = parallel_map(decays.size(), [&](std::size_t k) {
    return birth_null_control(model, grid, decays[k], initial_modes[k], horizon);
  });
  auto trajectories = parallel_map(decays.size(), [&](std::size_t k) {
    return evolve_controlled(model, grid, decays[k], initial_modes[k],
                             signal.modes[k], horizon, k);
  });
  NullControlReport report =
      summarize(grid, model.fertility, initial_modes, trajectories, signal);
  if (signal_out != nullptr) *signal_out = std::move(signal);
  if (trajectories_out != nullptr) *trajectories_out = std::move(trajectories);
  return report;
}

NullControlReport verify_distributed_null_control(
    const DemographicModel& model, const AgeGrid& grid,
    const std::vector<double>& decays,
    const std::vector<Eigen::VectorXd>& initial_modes, double band_limit,
    double horizon, ControlSignal* signal_out,
    std::vector<ModalTrajectory>* trajectories_out) {
  check_modes(decays, initial_modes);
  require_band_horizon(model.lifespan(), band_limit, horizon);
  ControlSignal signal;
  signal.horizon = horizon;
  signal.step = grid.step();
  signal.modes = parallel_map(decays.size(), [&](std::size_t k) {
    return distributed_null_control(model, grid, decays[k], initial_modes[k],
                                    band_limit, horizon);
  });
  auto trajectories = parallel_map(decays.size(), [&](std::size_t k) {
    return evolve_controlled(model, grid, decays[k], initial_modes[k],
                             signal.modes[k], horizon, k);
  });
  NullControlReport report =
      summarize(grid, model.fertility, initial_modes, trajectories, signal);
  if (signal_out != nullptr) *signal_out = std::move(signal);
  if (trajectories_out != nullptr) *trajectories_out = std::move(trajectories);
  return report;
}

ControlSignal restrict_to_subdomain(const ControlSignal& signal,
                                    const NeumannBasis& basis, double lo,
                                    double hi) {
  const std::size_t k_count = signal.modes.size();
  if (k_count != basis.modes()) {
    throw ShapeError("control mode count differs from the spatial basis");
  }
  const Eigen::MatrixXd g = basis.indicator_gram(lo, hi);
  ControlSignal out = signal;
  for (std::size_t k = 0; k < k_count; ++k) {
    out.modes[k].values.setZero();
    for (std::size_t j = 0; j < k_count; ++j) {
      if (signal.modes[j].values.rows() != signal.modes[k].values.rows() ||
          signal.modes[j].values.cols() != signal.modes[k].values.cols()) {
        throw ShapeError("per-mode controls must share one shape");
      }
      out.modes[k].values +=
          g(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) *
          signal.modes[j].values;
    }
  }
  return out;
}

}  // namespace agepop
