#pragma once

// Scenario configuration for the command-line tool: a flat `key = value`
// file with dotted section keys, plus the small expression language used
// for initial and target profiles.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "agepop/demographics.hpp"
#include "agepop/errors.hpp"
#include "agepop/lqr.hpp"
#include "agepop/spectral.hpp"
#include "agepop/transport.hpp"

namespace agepop {

// Invalid configuration. The message starts with `source:line:`.
class ConfigError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// Sum of products of factors in (x, a). See README for the grammar.
class Profile {
 public:
  struct Factor {
    std::string name;
    std::vector<double> args;
  };
  struct Term {
    double coefficient = 1.0;
    std::vector<Factor> factors;
  };

  Profile() = default;
  // Throws ConfigError (without line information) on malformed text.
  static Profile parse(std::string_view text);

  const std::string& text() const { return text_; }
  bool is_zero() const { return terms_.empty(); }
  double operator()(double x, double a, double length) const;

  // Modal coefficients at every age node: row i = projection at a_i.
  Eigen::MatrixXd modal_samples(const NeumannBasis& basis, const AgeGrid& grid) const;
  // Coefficient of mode k as a function of age, tabulated on `cells` cells
  // and interpolated linearly.
  AgeProfile modal_profile(const NeumannBasis& basis, double lifespan,
                           std::size_t mode, std::size_t cells = 4000) const;

 private:
  std::string text_ = "0";
  std::vector<Term> terms_;
};

struct ScenarioConfig {
  // demographics
  double lifespan = 1.0;
  double length = 1.0;
  std::string mortality_kind = "closed_form";
  double mortality_c = 50.0;
  double mortality_rate = 0.0;
  std::string mortality_table;
  std::string fertility_kind = "closed_form";
  double fertility_value = 0.0;
  std::string fertility_table;
  double fertility_floor = 0.0;
  bool rescale = true;
  double target_r = 0.8;

  // discretization
  std::size_t age_cells = 100;
  std::size_t space_points = 129;
  std::size_t modes = 4;
  double horizon = 1.25;
  double time_step = 0.01;

  // problem
  double weight = 1.0;
  Profile initial =
      Profile::parse("gauss(0.7, 0.1) * mode(1) + 0.5 * gauss(0.7, 0.1) * mode(2)");
  Profile target = Profile::parse("gauss(0.3, 0.15) * mode(1)");
  TerminalCost terminal = TerminalCost::kHalfNorm;
  ControlSupport support = ControlSupport::kBirth;
  double band_limit = 0.2;
  double omega_lo = 0.0;
  double omega_hi = 1.0;
  double tolerance = 1e-2;
  bool supply_terminal = true;

  // output
  std::filesystem::path directory = "out";
  bool write_csv = true;
  bool write_svg = true;

  // sweep
  std::string sweep_variable = "T";
  std::vector<double> sweep_values;

  std::uint64_t seed = 0;

  // Line each key was set on, for validation messages.
  std::map<std::string, std::size_t> lines;
  std::string source = "<defaults>";
  // Relative rate-table paths are resolved against this directory.
  std::filesystem::path base_dir;

  // Every key with its current value, sorted by key.
  std::vector<std::pair<std::string, std::string>> resolved() const;
  // Comment header listing resolved() as `# key = value` lines.
  std::string header(std::string_view command) const;
};

// Sets one key. `line` is zero for overrides that do not come from a file.
void set_config_value(ScenarioConfig& config, const std::string& key,
                      const std::string& value, std::size_t line = 0);

ScenarioConfig parse_config(std::string_view text,
                            std::string_view source = "<string>");
ScenarioConfig load_config(const std::filesystem::path& path);

// Positivity and ordering checks; throws ConfigError naming the line of the
// offending key.
void validate_config(const ScenarioConfig& config);

// Mortality and fertility with tables loaded and β rescaled.
DemographicModel build_model(const ScenarioConfig& config);

// Two-column (age, value) CSV; a non-numeric first row is a header.
std::pair<std::vector<double>, std::vector<double>> read_rate_table(
    const std::filesystem::path& path);

// `source:line: key` for the line that set `key`, for error messages.
std::string config_location(const ScenarioConfig& config, const std::string& key);

// Shortest round-trip decimal form; "0" for both signed zeros.
std::string format_number(double v);

}  // namespace agepop
