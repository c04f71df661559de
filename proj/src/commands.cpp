#include "agepop/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>

#include "agepop/demographics.hpp"
#include "agepop/errors.hpp"
#include "agepop/lqr.hpp"
#include "agepop/nullcontrol.hpp"
#include "agepop/output.hpp"
#include "agepop/parallel.hpp"
#include "agepop/spectral.hpp"
#include "agepop/transport.hpp"
#include "agepop/turnpike.hpp"

namespace agepop {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr Index kMaxHeatmapCells = 120;

// Rethrows failures of `fn` with `context` prepended, keeping the type.
template <class Fn>
auto in_context(const std::string& context, Fn&& fn) {
  try {
    return fn();
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(context + ": " + e.what());
  } catch (const SolverError& e) {
    throw SolverError(context + ": " + e.what());
  } catch (const PreconditionError& e) {
    throw PreconditionError(context + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(context + ": " + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(context + ": " + e.what());
  }
}

class Summary {
 public:
  void add(const std::string& key, const std::string& value) {
    text_ += key + " = " + value + '\n';
  }
  void add(const std::string& key, double value) { add(key, format_number(value)); }
  void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }
  void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

struct Setup {
  DemographicModel model;
  AgeGrid grid;
  NeumannBasis basis;
  std::vector<double> decays;
  std::vector<VectorXd> initial;  // per mode, on the age nodes
  std::vector<VectorXd> target;
};

Setup make_setup(const ScenarioConfig& c) {
  Setup s{build_model(c), AgeGrid(c.lifespan, c.age_cells),
          NeumannBasis(c.length, c.modes, c.space_points), {}, {}, {}};
  const MatrixXd y0 = c.initial.modal_samples(s.basis, s.grid);
  const MatrixXd yd = c.target.modal_samples(s.basis, s.grid);
  for (std::size_t k = 0; k < c.modes; ++k) {
    const auto col = static_cast<Index>(k);
    s.decays.push_back(s.basis.eigenvalue(k));
    s.initial.push_back(y0.col(col));
    s.target.push_back(yd.col(col));
  }
  return s;
}

std::size_t aligned_steps(const ScenarioConfig& c, const AgeGrid& grid) {
  try {
    return grid.steps_for(c.horizon);
  } catch (const DomainError&) {
    throw ConfigError(config_location(c, "discretization.T") + ": horizon " +
                      format_number(c.horizon) + " is not a multiple of the age step " +
                      format_number(grid.step()) + " (A / Na)");
  }
}

bool omega_is_full(const ScenarioConfig& c) {
  return c.omega_lo <= 0.0 && c.omega_hi >= c.length;
}

double modal_norm(const AgeGrid& grid, const std::vector<VectorXd>& modes) {
  double sq = 0.0;
  for (const auto& m : modes) {
    const double n = grid.l2_norm(m);
    sq += n * n;
  }
  return std::sqrt(sq);
}

// Indices 0, s, 2s, ..., always including the last one.
std::vector<Index> thin(Index count, Index limit) {
  std::vector<Index> out;
  const Index stride = std::max<Index>(1, (count + limit - 1) / limit);
  for (Index i = 0; i < count; i += stride) out.push_back(i);
  if (out.back() != count - 1) out.push_back(count - 1);
  return out;
}

void heatmap(const std::filesystem::path& path, const std::string& header,
             const PlotLabels& labels, const VectorXd& xs, const VectorXd& ys,
             const MatrixXd& values) {
  const auto rows = thin(ys.size(), kMaxHeatmapCells);
  const auto cols = thin(xs.size(), kMaxHeatmapCells);
  VectorXd tx(static_cast<Index>(cols.size()));
  VectorXd ty(static_cast<Index>(rows.size()));
  MatrixXd tv(ty.size(), tx.size());
  for (std::size_t j = 0; j < cols.size(); ++j) tx(static_cast<Index>(j)) = xs(cols[j]);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ty(static_cast<Index>(i)) = ys(rows[i]);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      tv(static_cast<Index>(i), static_cast<Index>(j)) = values(rows[i], cols[j]);
    }
  }
  write_heatmap(path, header, labels, tx, ty, tv);
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// n · Δa for n < count, with Δa = A / cells.
VectorXd time_nodes(std::size_t count, const AgeGrid& grid) {
  VectorXd t(static_cast<Index>(count));
  for (std::size_t n = 0; n < count; ++n) {
    t(static_cast<Index>(n)) = grid.lifespan() * static_cast<double>(n) /
                               static_cast<double>(grid.cells());
  }
  return t;
}

// sqrt(Σ_k y_k²) at each (time, age) node of per-mode trajectories.
MatrixXd magnitude(const std::vector<MatrixXd>& per_mode) {
  MatrixXd sq = MatrixXd::Zero(per_mode.front().rows(), per_mode.front().cols());
  for (const auto& m : per_mode) sq += m.cwiseAbs2();
  return sq.cwiseSqrt();
}

std::string csv_cell(const std::string& s) {
  std::string out;
  for (char ch : s) out += (ch == ',' ? ';' : (ch == '\n' || ch == '\r') ? ' ' : ch);
  return out;
}

// ------------------------------------------------------------- simulate

CommandOutput simulate(const ScenarioConfig& c) {
  const Setup s = make_setup(c);
  const std::size_t steps = aligned_steps(c, s.grid);
  const auto trajectories = parallel_map(c.modes, [&](std::size_t k) {
    return in_context("simulate, mode " + std::to_string(k), [&] {
      return evolve_uncontrolled(s.model, s.grid, s.decays[k], s.initial[k], c.horizon, k);
    });
  });
  std::vector<VectorXd> births;
  for (const auto& t : trajectories) births.push_back(renewal_trace(t, s.model.fertility, s.grid));

  const std::string header = c.header("simulate");
  const VectorXd times = time_nodes(steps + 1, s.grid);
  const VectorXd ages = s.grid.ages();
  const VectorXd w = s.grid.trapezoid_weights();
  CommandOutput out;
  ensure_directory(c.directory);

  if (c.write_csv) {
    CsvWriter traj(c.directory / "trajectory.csv", header, {"t", "a", "mode", "value"});
    for (std::size_t k = 0; k < c.modes; ++k) {
      for (std::size_t n = 0; n <= steps; ++n) {
        for (std::size_t i = 0; i < s.grid.nodes(); ++i) {
          traj.row({times(static_cast<Index>(n)), ages(static_cast<Index>(i)),
                    static_cast<double>(k),
                    trajectories[k].values(static_cast<Index>(n), static_cast<Index>(i))});
        }
      }
    }
    traj.close();
    out.files.push_back(traj.path());
    CsvWriter ren(c.directory / "renewal.csv", header, {"t", "mode", "births"});
    for (std::size_t k = 0; k < c.modes; ++k) {
      for (std::size_t n = 0; n <= steps; ++n) {
        ren.row({times(static_cast<Index>(n)), static_cast<double>(k),
                 births[k](static_cast<Index>(n))});
      }
    }
    ren.close();
    out.files.push_back(ren.path());
  }

  std::vector<VectorXd> finals;
  for (const auto& t : trajectories) finals.push_back(t.final_state());
  const double mass_scale = std::sqrt(c.length);
  Summary sum;
  sum.add("command", std::string("simulate"));
  sum.add("modes", c.modes);
  sum.add("steps", steps);
  sum.add("age_step", s.grid.step());
  sum.add("reproduction_number", reproduction_number(s.model.fertility, s.model.mortality));
  try {
    sum.add("lotka_root", lotka_root(s.model.fertility, s.model.mortality));
  } catch (const std::exception&) {
    sum.add("lotka_root", std::string("none"));
  }
  sum.add("initial_norm", modal_norm(s.grid, s.initial));
  sum.add("final_norm", modal_norm(s.grid, finals));
  sum.add("initial_mass", mass_scale * w.dot(s.initial.front()));
  sum.add("final_mass", mass_scale * w.dot(finals.front()));
  double peak = 0.0;
  for (const auto& b : births) peak = std::max(peak, b.cwiseAbs().maxCoeff());
  sum.add("renewal_peak", peak);
  write_text(c.directory / "summary.txt", header, sum.text());
  out.files.push_back(c.directory / "summary.txt");

  if (c.write_svg) {
    std::vector<MatrixXd> values;
    for (const auto& t : trajectories) values.push_back(t.values);
    heatmap(c.directory / "state_heatmap.svg", header,
            {"state magnitude over age and time", "age a", "time t"}, ages, times,
            magnitude(values));
    out.files.push_back(c.directory / "state_heatmap.svg");
    std::vector<PlotSeries> series;
    for (std::size_t k = 0; k < c.modes; ++k) {
      series.push_back({"mode " + std::to_string(k), to_std(times), to_std(births[k])});
    }
    write_line_plot(c.directory / "renewal.svg", header,
                    {"renewal trace", "time t", "births b(t)"}, series);
    out.files.push_back(c.directory / "renewal.svg");
  }
  out.summary = sum.text();
  return out;
}

// ---------------------------------------------------------- nullcontrol

CommandOutput nullcontrol(const ScenarioConfig& c) {
  const Setup s = make_setup(c);
  const std::size_t steps = aligned_steps(c, s.grid);
  const double lifespan = c.lifespan;
  const bool birth = c.support == ControlSupport::kBirth;
  const std::string where_t = config_location(c, "discretization.T");

  if (birth && !(c.horizon > lifespan)) {
    throw PreconditionError(where_t + ": control on newborns alone needs T > A (T = " +
                            format_number(c.horizon) + ", A = " + format_number(lifespan) +
                            ")");
  }
  if (!birth && !(c.horizon > lifespan - c.band_limit)) {
    std::ostringstream msg;
    msg << where_t << ": the system is not null-controllable for T <= A - a0 with a control "
        << "supported on ages [0, a0] (T = " << format_number(c.horizon)
        << ", A - a0 = " << format_number(lifespan - c.band_limit)
        << "); cohorts older than T + a0 at time T are out of reach";
    if (c.horizon < lifespan - c.band_limit) {
      double sq = 0.0;
      for (std::size_t k = 0; k < c.modes; ++k) {
        const auto w = short_horizon_obstruction(s.model, s.grid, s.decays[k], s.initial[k],
                                                 c.band_limit, c.horizon);
        sq += w.norm * w.norm;
      }
      msg << "; witness norm " << format_number(std::sqrt(sq));
    }
    throw PreconditionError(msg.str());
  }

  ControlSignal signal;
  std::vector<ModalTrajectory> trajectories;
  NullControlReport report =
      in_context("nullcontrol", [&] {
        return birth ? verify_birth_null_control(s.model, s.grid, s.decays, s.initial,
                                                 c.horizon, &signal, &trajectories)
                     : verify_distributed_null_control(s.model, s.grid, s.decays, s.initial,
                                                       c.band_limit, c.horizon, &signal,
                                                       &trajectories);
      });
  const bool restricted = !omega_is_full(c);
  if (restricted) {
    signal = restrict_to_subdomain(signal, s.basis, c.omega_lo, c.omega_hi);
    trajectories = parallel_map(c.modes, [&](std::size_t k) {
      return evolve_controlled(s.model, s.grid, s.decays[k], s.initial[k], signal.modes[k],
                               c.horizon, k);
    });
    double fsq = 0.0;
    double csq = 0.0;
    for (std::size_t k = 0; k < c.modes; ++k) {
      const double r = s.grid.l2_norm(trajectories[k].final_state());
      report.mode_residuals[k] = r;
      fsq += r * r;
      const double cn = control_l2_norm(signal.modes[k], s.grid, c.horizon);
      csq += cn * cn;
    }
    report.final_norm = std::sqrt(fsq);
    report.control_norm = std::sqrt(csq);
  }
  const double relative =
      report.initial_norm > 0.0 ? report.final_norm / report.initial_norm : 0.0;
  const bool ok = relative <= c.tolerance;

  const std::string header = c.header("nullcontrol");
  const VectorXd times = time_nodes(steps + 1, s.grid);
  const VectorXd ages = s.grid.ages();
  CommandOutput out;
  ensure_directory(c.directory);

  if (c.write_csv) {
    if (birth) {
      CsvWriter ctl(c.directory / "control.csv", header, {"t", "mode", "value"});
      for (std::size_t k = 0; k < c.modes; ++k) {
        const MatrixXd& v = signal.modes[k].values;
        for (Index n = 0; n < v.rows(); ++n) {
          ctl.row({times(n), static_cast<double>(k), v(n, 0)});
        }
      }
      ctl.close();
      out.files.push_back(ctl.path());
    } else {
      CsvWriter ctl(c.directory / "control.csv", header, {"t", "a", "mode", "value"});
      for (std::size_t k = 0; k < c.modes; ++k) {
        const MatrixXd& v = signal.modes[k].values;
        for (Index n = 0; n < v.rows(); ++n) {
          for (Index i = 0; i < v.cols(); ++i) {
            if (ages(i) > c.band_limit + 1e-12 * lifespan) break;
            ctl.row({times(n), ages(i), static_cast<double>(k),
                     v(n, i)});
          }
        }
      }
      ctl.close();
      out.files.push_back(ctl.path());
    }
    CsvWriter fin(c.directory / "final_state.csv", header, {"a", "mode", "value"});
    for (std::size_t k = 0; k < c.modes; ++k) {
      const VectorXd y = trajectories[k].final_state();
      for (Index i = 0; i < y.size(); ++i) fin.row({ages(i), static_cast<double>(k), y(i)});
    }
    fin.close();
    out.files.push_back(fin.path());
  }

  Summary sum;
  sum.add("command", std::string("nullcontrol"));
  sum.add("control", std::string(birth ? "birth" : "band"));
  sum.add("horizon", c.horizon);
  if (!birth) {
    sum.add("band_limit", c.band_limit);
    sum.add("fertility_vanishes_on_band",
            fertility_vanishes_on_band(s.model.fertility, c.band_limit));
  }
  sum.add("omega_restricted", restricted);
  sum.add("initial_norm", report.initial_norm);
  sum.add("final_norm", report.final_norm);
  sum.add("relative_residual", relative);
  sum.add("tolerance", c.tolerance);
  sum.add("control_norm", report.control_norm);
  sum.add("control_norm_bound", report.bound);
  for (std::size_t k = 0; k < report.mode_residuals.size(); ++k) {
    sum.add("mode_residual." + std::to_string(k), report.mode_residuals[k]);
  }
  sum.add("status", std::string(report.initial_norm == 0.0 ? "trivial"
                                : ok                        ? "nulled"
                                                            : "residual above tolerance"));
  write_text(c.directory / "report.txt", header, sum.text());
  out.files.push_back(c.directory / "report.txt");

  if (c.write_svg) {
    std::vector<MatrixXd> values;
    for (const auto& t : trajectories) values.push_back(t.values);
    heatmap(c.directory / "state_heatmap.svg", header,
            {"controlled state magnitude", "age a", "time t"}, ages, times, magnitude(values));
    out.files.push_back(c.directory / "state_heatmap.svg");
    if (birth) {
      std::vector<PlotSeries> series;
      for (std::size_t k = 0; k < c.modes; ++k) {
        const MatrixXd& v = signal.modes[k].values;
        series.push_back({"mode " + std::to_string(k),
                          to_std(time_nodes(static_cast<std::size_t>(v.rows()), s.grid)),
                          to_std(v.col(0))});
      }
      write_line_plot(c.directory / "control.svg", header,
                      {"birth control", "time t", "v(t)"}, series);
    } else {
      std::vector<MatrixXd> controls;
      for (const auto& m : signal.modes) controls.push_back(m.values);
      const MatrixXd mag = magnitude(controls);
      Index band = 0;
      while (band < ages.size() && ages(band) <= c.band_limit + 1e-12 * lifespan) ++band;
      band = std::max<Index>(band, 1);
      heatmap(c.directory / "control.svg", header,
              {"band control magnitude", "age a", "time t"}, ages.head(band),
              time_nodes(static_cast<std::size_t>(mag.rows()), s.grid),
              mag.leftCols(band));
    }
    out.files.push_back(c.directory / "control.svg");
  }
  out.summary = sum.text();
  if (!ok) {
    throw ResidualError("nullcontrol: relative residual " + format_number(relative) +
                        " exceeds tolerance " + format_number(c.tolerance) + "\n" +
                        out.summary);
  }
  return out;
}

// ------------------------------------------------------------------- lq

struct ModeSolve {
  ModalLTI sys;
  StaticTriple stationary;
  OptimalTriple dynamic;
  DeviationSeries deviation;
  DissipativityCheck dissipation;
};

struct LqRun {
  Setup setup;
  std::vector<ModeSolve> modes;
  DeviationSeries deviation;
  TurnpikeFit fit;
  double integral = 0.0;
  double initial_gap = 0.0;
  double terminal_gap = 0.0;
  VectorXd envelope;
  double envelope_fraction = 0.0;
  double kkt_residual = 0.0;
  double min_slack = 0.0;
  double min_slack_no_terminal = 0.0;
};

LqRun run_lq(const ScenarioConfig& c) {
  if (!omega_is_full(c)) {
    throw PreconditionError(config_location(c, "problem.omega") +
                            ": lq acts on the whole domain; set omega = 0, L");
  }
  LqRun run{make_setup(c), {}, {}, {}, 0.0, 0.0, 0.0, {}, 0.0, 0.0, 0.0, 0.0};
  const Setup& s = run.setup;
  const DynamicLqOptions options{c.time_step, c.terminal};
  run.modes = parallel_map(c.modes, [&](std::size_t k) {
    return in_context("lq, mode " + std::to_string(k), [&] {
      ModeSolve m;
      m.sys = assemble_modal_system(s.model, s.grid, s.decays[k], c.weight, k);
      m.stationary = solve_static_lq(m.sys, s.target[k]);
      m.dynamic = solve_dynamic_lq(m.sys, s.initial[k], s.target[k], c.horizon, options);
      m.deviation = deviation_curves(m.dynamic, m.stationary);
      m.dissipation = dissipativity_check(m.sys, s.initial[k], s.target[k], m.stationary,
                                          c.horizon, c.time_step);
      return m;
    });
  });
  std::vector<DeviationSeries> parts;
  double g0 = 0.0;
  double gT = 0.0;
  VectorXd slack = VectorXd::Zero(run.modes.front().dissipation.slack.size());
  VectorXd slack0 = slack;
  for (const auto& m : run.modes) {
    parts.push_back(m.deviation);
    g0 += (m.dynamic.states.row(0).transpose() - m.stationary.state).squaredNorm();
    const Index last = m.dynamic.adjoints.rows() - 1;
    gT += (m.dynamic.adjoints.row(last).transpose() - m.stationary.adjoint).squaredNorm();
    run.kkt_residual = std::max(run.kkt_residual, m.dynamic.kkt_residual);
    slack += m.dissipation.slack;
    slack0 += m.dissipation.slack_no_terminal;
  }
  run.deviation = combine_modes(parts);
  run.initial_gap = std::sqrt(g0);
  run.terminal_gap = std::sqrt(gT);
  run.fit = fit_exponential_rates(run.deviation.times, run.deviation.total, c.horizon);
  run.integral = integral_turnpike_measure(run.deviation.times, run.deviation.total);
  run.envelope = envelope_curve(run.deviation.times, run.fit, run.initial_gap, run.terminal_gap);
  run.envelope_fraction = envelope_fraction(run.deviation.times, run.deviation.total, run.fit,
                                            run.initial_gap, run.terminal_gap);
  run.min_slack = slack.minCoeff();
  run.min_slack_no_terminal = slack0.minCoeff();
  return run;
}

void add_fit(Summary& sum, const std::string& prefix, const ExponentialFit& f) {
  sum.add(prefix + ".rate", f.rate);
  sum.add(prefix + ".constant", f.constant);
  sum.add(prefix + ".r_squared", f.r_squared);
  sum.add(prefix + ".points", f.points);
  sum.add(prefix + ".valid", f.valid);
  if (!f.notice.empty()) sum.add(prefix + ".notice", f.notice);
}

CommandOutput lq(const ScenarioConfig& c) {
  const LqRun run = run_lq(c);
  const Setup& s = run.setup;
  const std::string header = c.header("lq");
  const VectorXd& times = run.deviation.times;
  const VectorXd ages = s.grid.ages();
  const VectorXd w = s.grid.trapezoid_weights();
  const Index nt = times.size();
  CommandOutput out;
  ensure_directory(c.directory);

  // Full-space fields: control v(x, t) and age-integrated population P(x, t).
  MatrixXd control_field(nt, static_cast<Index>(s.basis.grid_points()));
  MatrixXd population_field(nt, control_field.cols());
  for (Index n = 0; n < nt; ++n) {
    VectorXd vc(static_cast<Index>(c.modes));
    VectorXd pc(static_cast<Index>(c.modes));
    for (std::size_t k = 0; k < c.modes; ++k) {
      const auto& d = run.modes[k].dynamic;
      vc(static_cast<Index>(k)) = d.controls(n, 0);
      pc(static_cast<Index>(k)) = w.dot(d.states.row(n).transpose());
    }
    control_field.row(n) = s.basis.reconstruct(vc).transpose();
    population_field.row(n) = s.basis.reconstruct(pc).transpose();
  }

  if (c.write_csv) {
    CsvWriter st(c.directory / "state.csv", header, {"t", "a", "mode", "state", "adjoint"});
    for (std::size_t k = 0; k < c.modes; ++k) {
      const auto& d = run.modes[k].dynamic;
      for (Index n = 0; n < nt; ++n) {
        for (Index i = 0; i < ages.size(); ++i) {
          st.row({times(n), ages(i), static_cast<double>(k), d.states(n, i), d.adjoints(n, i)});
        }
      }
    }
    st.close();
    out.files.push_back(st.path());

    CsvWriter stat(c.directory / "static.csv", header, {"a", "mode", "state", "adjoint"});
    for (std::size_t k = 0; k < c.modes; ++k) {
      const auto& m = run.modes[k].stationary;
      for (Index i = 0; i < ages.size(); ++i) {
        stat.row({ages(i), static_cast<double>(k), m.state(i), m.adjoint(i)});
      }
    }
    stat.close();
    out.files.push_back(stat.path());

    CsvWriter ctl(c.directory / "control.csv", header, {"t", "mode", "value", "static"});
    for (std::size_t k = 0; k < c.modes; ++k) {
      const auto& m = run.modes[k];
      for (Index n = 0; n < nt; ++n) {
        ctl.row({times(n), static_cast<double>(k), m.dynamic.controls(n, 0),
                 m.stationary.control(0)});
      }
    }
    ctl.close();
    out.files.push_back(ctl.path());

    CsvWriter dev(c.directory / "deviation.csv", header,
                  {"t", "state", "control", "adjoint", "deviation", "envelope"});
    for (Index n = 0; n < nt; ++n) {
      dev.row({times(n), run.deviation.state(n), run.deviation.control(n),
               run.deviation.adjoint(n), run.deviation.total(n), run.envelope(n)});
    }
    dev.close();
    out.files.push_back(dev.path());

    CsvWriter fields(c.directory / "fields.csv", header, {"t", "x", "control", "population"});
    for (Index n = 0; n < nt; ++n) {
      for (Index j = 0; j < control_field.cols(); ++j) {
        fields.row({times(n), s.basis.grid()(j), control_field(n, j), population_field(n, j)});
      }
    }
    fields.close();
    out.files.push_back(fields.path());
  }

  Summary sum;
  sum.add("command", std::string("lq"));
  sum.add("horizon", c.horizon);
  sum.add("time_step", c.time_step);
  sum.add("modes", c.modes);
  double objective = 0.0;
  for (const auto& m : run.modes) objective += m.dynamic.objective;
  sum.add("objective", objective);
  sum.add("kkt_residual", run.kkt_residual);
  for (std::size_t k = 0; k < c.modes; ++k) {
    sum.add("static_residual." + std::to_string(k), run.modes[k].stationary.residual);
  }
  add_fit(sum, "fit.left", run.fit.left);
  add_fit(sum, "fit.right", run.fit.right);
  sum.add("plateau", run.fit.plateau);
  sum.add("peak", run.fit.peak);
  sum.add("plateau_ratio", run.fit.plateau_ratio);
  sum.add("integral_measure", run.integral);
  sum.add("initial_gap", run.initial_gap);
  sum.add("terminal_gap", run.terminal_gap);
  sum.add("envelope_fraction", run.envelope_fraction);
  sum.add("dissipativity.min_slack",
          c.supply_terminal ? run.min_slack : run.min_slack_no_terminal);
  sum.add("dissipativity.min_slack_with_terminal", run.min_slack);
  sum.add("dissipativity.min_slack_without_terminal", run.min_slack_no_terminal);
  sum.add("verdict", run.fit.verdict);
  write_text(c.directory / "turnpike.txt", header, sum.text());
  out.files.push_back(c.directory / "turnpike.txt");

  if (c.write_svg) {
    std::vector<MatrixXd> states;
    for (const auto& m : run.modes) states.push_back(m.dynamic.states);
    heatmap(c.directory / "state_heatmap.svg", header,
            {"optimal state magnitude", "age a", "time t"}, ages, times, magnitude(states));
    out.files.push_back(c.directory / "state_heatmap.svg");

    std::vector<PlotSeries> controls;
    for (std::size_t k = 0; k < c.modes; ++k) {
      const auto& m = run.modes[k];
      controls.push_back({"mode " + std::to_string(k), to_std(times),
                          to_std(m.dynamic.controls.col(0))});
    }
    for (std::size_t k = 0; k < c.modes; ++k) {
      const auto& m = run.modes[k];
      controls.push_back({"static " + std::to_string(k),
                          {times(0), times(nt - 1)},
                          {m.stationary.control(0), m.stationary.control(0)},
                          true});
    }
    write_line_plot(c.directory / "control.svg", header,
                    {"optimal control by mode", "time t", "v_k(t)"}, controls);
    out.files.push_back(c.directory / "control.svg");

    write_line_plot(c.directory / "deviation.svg", header,
                    {"distance to the static optimum", "time t", "deviation"},
                    {{"deviation", to_std(times), to_std(run.deviation.total)},
                     {"envelope", to_std(times), to_std(run.envelope), true}},
                    true);
    out.files.push_back(c.directory / "deviation.svg");

    heatmap(c.directory / "control_field.svg", header,
            {"control over space and time", "space x", "time t"}, s.basis.grid(), times,
            control_field);
    out.files.push_back(c.directory / "control_field.svg");
  }
  out.summary = sum.text();
  return out;
}

// ----------------------------------------------------------------- sweep

const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols = {
      "variable", "value",     "status",    "plateau",       "plateau_ratio",
      "nu_left",  "r2_left",   "nu_right",  "r2_right",      "integral",
      "envelope_fraction",     "kkt_residual",               "null_residual",
      "weak_gap", "state_gap", "verdict",   "error"};
  return cols;
}

std::string sweep_key(const std::string& variable) {
  if (variable == "T") return "discretization.T";
  if (variable == "N") return "problem.N";
  if (variable == "K") return "discretization.K";
  return "problem.a0";
}

// Relative residual of a null control of the given support, if the horizon
// allows one.
std::optional<double> null_residual(const ScenarioConfig& c, const Setup& s,
                                    ControlSupport support) {
  const bool birth = support == ControlSupport::kBirth;
  const double needed = birth ? c.lifespan : c.lifespan - c.band_limit;
  if (!(c.horizon > needed)) return std::nullopt;
  try {
    s.grid.steps_for(c.horizon);
  } catch (const DomainError&) {
    return std::nullopt;
  }
  const NullControlReport r =
      birth ? verify_birth_null_control(s.model, s.grid, s.decays, s.initial, c.horizon)
            : verify_distributed_null_control(s.model, s.grid, s.decays, s.initial,
                                              c.band_limit, c.horizon);
  return r.initial_norm > 0.0 ? r.final_norm / r.initial_norm : 0.0;
}

std::map<std::string, std::string> sweep_row(const ScenarioConfig& base, double value) {
  std::map<std::string, std::string> row;
  ScenarioConfig c = base;
  set_config_value(c, sweep_key(base.sweep_variable), format_number(value));
  validate_config(c);
  if (base.sweep_variable == "a0") {
    const Setup s = make_setup(c);
    double weak = 0.0;
    double state = 0.0;
    std::string notice;
    for (std::size_t k = 0; k < c.modes; ++k) {
      const AgeProfile y0 = c.initial.modal_profile(s.basis, c.lifespan, k);
      const auto rows = epsilon_limit_study(s.model, s.decays[k], y0, {value}, c.horizon);
      const EpsilonRow& r = rows.front();
      if (r.skipped) {
        notice = r.notice;
        continue;
      }
      weak = std::max(weak, r.weak_gap);
      state = std::max(state, r.state_gap);
    }
    row["weak_gap"] = format_number(weak);
    row["state_gap"] = format_number(state);
    if (!notice.empty()) {
      row["status"] = "skipped";
      row["error"] = notice;
    }
    if (const auto r = null_residual(c, s, ControlSupport::kAgeBand)) row["null_residual"] = format_number(*r);
    return row;
  }
  const LqRun run = run_lq(c);
  row["plateau"] = format_number(run.fit.plateau);
  row["plateau_ratio"] = format_number(run.fit.plateau_ratio);
  row["nu_left"] = format_number(run.fit.left.rate);
  row["r2_left"] = format_number(run.fit.left.r_squared);
  row["nu_right"] = format_number(run.fit.right.rate);
  row["r2_right"] = format_number(run.fit.right.r_squared);
  row["integral"] = format_number(run.integral);
  row["envelope_fraction"] = format_number(run.envelope_fraction);
  row["kkt_residual"] = format_number(run.kkt_residual);
  row["verdict"] = run.fit.verdict;
  if (const auto r = null_residual(c, run.setup, c.support)) row["null_residual"] = format_number(*r);
  return row;
}

CommandOutput sweep(const ScenarioConfig& c) {
  const std::string header = c.header("sweep");
  ensure_directory(c.directory);
  CommandOutput out;
  const auto& cols = sweep_columns();
  std::vector<std::map<std::string, std::string>> rows;
  std::size_t failed = 0;
  for (double value : c.sweep_values) {
    std::map<std::string, std::string> row;
    try {
      row = sweep_row(c, value);
      if (!row.count("status")) row["status"] = "ok";
    } catch (const std::exception& e) {
      row.clear();
      row["status"] = "error";
      row["error"] = e.what();
      ++failed;
    }
    row["variable"] = c.sweep_variable;
    row["value"] = format_number(value);
    rows.push_back(std::move(row));
  }

  CsvWriter csv(c.directory / "sweep.csv", header, cols);
  for (const auto& row : rows) {
    std::vector<std::string> cells;
    for (const auto& col : cols) {
      const auto it = row.find(col);
      cells.push_back(it == row.end() ? std::string() : csv_cell(it->second));
    }
    csv.row(cells);
  }
  csv.close();
  out.files.push_back(csv.path());

  if (c.write_svg && !rows.empty()) {
    auto column = [&](const std::string& name) {
      PlotSeries s{name, {}, {}};
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto it = rows[i].find(name);
        if (it == rows[i].end()) continue;
        s.x.push_back(c.sweep_values[i]);
        s.y.push_back(std::stod(it->second));
      }
      return s;
    };
    const bool eps = c.sweep_variable == "a0";
    std::vector<PlotSeries> series =
        eps ? std::vector<PlotSeries>{column("weak_gap"), column("state_gap")}
            : std::vector<PlotSeries>{column("integral"), column("plateau")};
    write_line_plot(c.directory / "sweep.svg", header,
                    {"sweep over " + c.sweep_variable, c.sweep_variable,
                     eps ? "gap" : "measure"},
                    series, true);
    out.files.push_back(c.directory / "sweep.svg");
  }

  Summary sum;
  sum.add("command", std::string("sweep"));
  sum.add("variable", c.sweep_variable);
  sum.add("points", c.sweep_values.size());
  sum.add("failed", failed);
  out.summary = sum.text();
  return out;
}

}  // namespace

CommandOutput cmd_simulate(const ScenarioConfig& config) {
  validate_config(config);
  return simulate(config);
}

CommandOutput cmd_nullcontrol(const ScenarioConfig& config) {
  validate_config(config);
  return nullcontrol(config);
}

CommandOutput cmd_lq(const ScenarioConfig& config) {
  validate_config(config);
  return lq(config);
}

CommandOutput cmd_sweep(const ScenarioConfig& config) {
  validate_config(config);
  return sweep(config);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const std::filesystem::filesystem_error*>(&e)) {
    return kExitIo;
  }
  if (dynamic_cast<const PreconditionError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const ShapeError*>(&e)) {
    return kExitPrecondition;
  }
  return kExitSolver;
}

int run_command(std::string_view name, const ScenarioConfig& config, std::ostream& out,
                std::ostream& err) {
  try {
    CommandOutput result;
    if (name == "simulate") {
      result = cmd_simulate(config);
    } else if (name == "nullcontrol") {
      result = cmd_nullcontrol(config);
    } else if (name == "lq") {
      result = cmd_lq(config);
    } else if (name == "sweep") {
      result = cmd_sweep(config);
    } else {
      err << "agepop: unknown command '" << name << "'\n";
      return kExitPrecondition;
    }
    out << result.summary;
    for (const auto& f : result.files) out << "wrote " << f.generic_string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "agepop " << name << ": " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace agepop
