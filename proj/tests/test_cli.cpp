#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "agepop/commands.hpp"
#include "agepop/config.hpp"
#include "agepop/output.hpp"

namespace fs = std::filesystem;
using namespace agepop;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  fs::path dir = fs::temp_directory_path() / "agepop_cli_tests" /
                 (std::string(info->test_suite_name()) + "_" + info->name()) / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw std::runtime_error("no column " + name);
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Table read_csv(const fs::path& p) {
  Table t;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') {
      t.comments.push_back(line);
    } else if (t.header.empty()) {
      t.header = split(line);
    } else {
      t.rows.push_back(split(line));
    }
  }
  return t;
}

std::map<std::string, std::string> read_summary(const fs::path& p) {
  std::map<std::string, std::string> out;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

// Coarse grids unless the test sets them itself.
ScenarioConfig small_config(const std::string& extra, const fs::path& out) {
  ScenarioConfig c = parse_config(extra);
  const std::vector<std::pair<std::string, std::string>> coarse = {
      {"discretization.Na", "20"}, {"discretization.K", "2"}, {"discretization.Nx", "33"}};
  for (const auto& [key, value] : coarse) {
    if (!c.lines.count(key)) set_config_value(c, key, value);
  }
  set_config_value(c, "output.directory", out.string());
  validate_config(c);
  return c;
}

int run(const std::string& command, const ScenarioConfig& c, std::string* err = nullptr) {
  std::ostringstream o;
  std::ostringstream e;
  const int code = run_command(command, c, o, e);
  if (err) *err = e.str();
  return code;
}

}  // namespace

// ------------------------------------------------------------------ config

TEST(Config, ParsesDottedKeysAndComments) {
  const ScenarioConfig c = parse_config(
      "# scenario\n"
      "demographics.A = 2.0   # lifespan\n"
      "\n"
      "demographics.L = 3\n"
      "discretization.K = 5\n"
      "problem.y0 = gauss(1, 0.2) * mode(1)\n"
      "problem.terminal = none\n"
      "problem.control = band\n"
      "problem.a0 = 0.5\n"
      "output.formats = csv\n"
      "sweep.variable = eps\n"
      "sweep.values = 0.4, 0.2\n",
      "scenario.cfg");
  EXPECT_EQ(c.lifespan, 2.0);
  EXPECT_EQ(c.length, 3.0);
  EXPECT_EQ(c.omega_hi, 3.0);
  EXPECT_EQ(c.modes, 5u);
  EXPECT_EQ(c.terminal, TerminalCost::kNone);
  EXPECT_EQ(c.support, ControlSupport::kAgeBand);
  EXPECT_TRUE(c.write_csv);
  EXPECT_FALSE(c.write_svg);
  EXPECT_EQ(c.sweep_variable, "a0");
  ASSERT_EQ(c.sweep_values.size(), 2u);
  EXPECT_EQ(c.lines.at("demographics.L"), 4u);
}

TEST(Config, UnknownKeyNamesTheLine) {
  try {
    parse_config("demographics.A = 1\n\ndemographics.Z = 3\n", "bad.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.cfg:3: demographics.Z: unknown key"),
              std::string::npos)
        << e.what();
  }
}

TEST(Config, MalformedLinesAreRejected) {
  EXPECT_THROW(parse_config("just words\n"), ConfigError);
  EXPECT_THROW(parse_config("= 3\n"), ConfigError);
  EXPECT_THROW(parse_config("demographics.A = one\n"), ConfigError);
  EXPECT_THROW(parse_config("discretization.K = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("discretization.K = 2.5\n"), ConfigError);
  EXPECT_THROW(parse_config("problem.terminal = maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("problem.omega = 0.5\n"), ConfigError);
  EXPECT_THROW(parse_config("demographics.A = inf\n"), ConfigError);
}

TEST(Config, DuplicateKeyPointsAtBothLines) {
  try {
    parse_config("problem.N = 1\nproblem.N = 2\n", "dup.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("dup.cfg:2:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
  }
}

TEST(Config, ValidationIsLineAnchored) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"x = 1\n", ""},
      {"demographics.A = -1\n", "v.cfg:1: demographics.A"},
      {"\ndemographics.L = 0\n", "v.cfg:2: demographics.L"},
      {"discretization.Na = 1\n", "v.cfg:1: discretization.Na"},
      {"discretization.K = 0\n", "v.cfg:1: discretization.K"},
      {"discretization.T = 0\n", "v.cfg:1: discretization.T"},
      {"problem.N = 0\n", "v.cfg:1: problem.N"},
      {"problem.a0 = 1.5\n", "v.cfg:1: problem.a0"},
      {"problem.omega = 0.6, 0.4\n", "v.cfg:1: problem.omega"},
      {"demographics.R = 0\n", "v.cfg:1: demographics.R"},
      {"demographics.mortality = table\n", "demographics.mortality.table (default)"},
  };
  for (const auto& [text, expected] : cases) {
    if (expected.empty()) continue;
    try {
      parse_config(text, "v.cfg");
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(expected), std::string::npos)
          << text << " -> " << e.what();
    }
  }
}

TEST(Config, OmegaFollowsLengthUntilSet) {
  ScenarioConfig c = parse_config("demographics.L = 2\n");
  EXPECT_EQ(c.omega_hi, 2.0);
  c = parse_config("problem.omega = 0, 0.5\ndemographics.L = 2\n");
  EXPECT_EQ(c.omega_hi, 0.5);
}

TEST(Config, OverridesReplaceValues) {
  ScenarioConfig c = parse_config("discretization.T = 1\n");
  set_config_value(c, "discretization.T", "3");
  EXPECT_EQ(c.horizon, 3.0);
  EXPECT_EQ(c.lines.at("discretization.T"), 0u);
  try {
    set_config_value(c, "discretization.K", "many");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("override: discretization.K"), std::string::npos);
  }
}

TEST(Config, ResolvedValuesParseBackToTheSameConfig) {
  const ScenarioConfig c = parse_config(
      "demographics.A = 1.5\n"
      "demographics.R = none\n"
      "demographics.fertility = constant\n"
      "demographics.fertility.value = 0.25\n"
      "discretization.T = 0.3\n"
      "problem.omega = 0.1, 0.7\n"
      "problem.yd = -0.5 * bump(0.1, 0.4) * xindicator(0, 0.5)\n"
      "sweep.values = 0.1, 1e-3\n"
      "output.formats = svg\n");
  std::string text;
  for (const auto& [k, v] : c.resolved()) text += k + " = " + v + "\n";
  const ScenarioConfig d = parse_config(text);
  EXPECT_EQ(c.resolved(), d.resolved());
  EXPECT_EQ(d.lifespan, 1.5);
  EXPECT_FALSE(d.rescale);
  EXPECT_EQ(d.sweep_values.back(), 1e-3);
}

TEST(Config, HeaderListsEveryKeyAsComment) {
  const ScenarioConfig c;
  const std::string h = c.header("lq");
  std::istringstream in(h);
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(line.rfind("# ", 0), 0u) << line;
    ++count;
  }
  EXPECT_EQ(count, c.resolved().size() + 1);
}

TEST(Config, FormatNumberRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9, 1e22, -0.0}) {
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(0.25), "0.25");
}

TEST(Config, RateTablesLoadWithHeader) {
  const fs::path dir = fresh_dir("tables");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "mu.csv");
    f << "age,value\n0,0.5\n0.5,1.0\n1,2\n";
  }
  const auto [ages, values] = read_rate_table(dir / "mu.csv");
  ASSERT_EQ(ages.size(), 3u);
  EXPECT_EQ(values[1], 1.0);
  {
    std::ofstream f(dir / "bad.csv");
    f << "0,1\n0,2\n";
  }
  EXPECT_THROW(read_rate_table(dir / "bad.csv"), ConfigError);
  EXPECT_THROW(read_rate_table(dir / "missing.csv"), IoError);

  {
    std::ofstream f(dir / "scenario.cfg");
    f << "demographics.mortality = table\n"
         "demographics.mortality.table = mu.csv\n"
         "demographics.fertility = constant\n"
         "demographics.fertility.value = 1\n"
         "demographics.R = 0.5\n";
  }
  const ScenarioConfig c = load_config(dir / "scenario.cfg");
  const DemographicModel m = build_model(c);
  EXPECT_NEAR(m.mortality(0.25), 0.75, 1e-12);
  EXPECT_NEAR(reproduction_number(m.fertility, m.mortality), 0.5, 1e-10);
}

TEST(Config, MissingFileIsAnIoError) {
  EXPECT_THROW(load_config("/nonexistent/agepop.cfg"), IoError);
}

// ----------------------------------------------------------------- profile

TEST(Profile, EvaluatesProductsAndSums) {
  const Profile p = Profile::parse("2 * gauss(0.5, 0.1) * cos(1) - indicator(0, 0.2)");
  const double x = 0.3;
  const double a = 0.1;
  const double expected = 2.0 * std::exp(-0.5 * 16.0) * std::cos(M_PI * x) - 1.0;
  EXPECT_NEAR(p(x, a, 1.0), expected, 1e-14);
  EXPECT_NEAR(Profile::parse("const(3) * xgauss(0.5, 1)")(0.5, 0.9, 1.0), 3.0, 1e-15);
  EXPECT_NEAR(Profile::parse("bump(0, 1) * xbump(0, 2)")(1.0, 0.5, 2.0), 1.0, 1e-15);
  EXPECT_NEAR(Profile::parse("1e-1")(0.0, 0.0, 1.0), 0.1, 1e-15);
}

TEST(Profile, ZeroTermsAreDropped) {
  EXPECT_TRUE(Profile::parse("0").is_zero());
  EXPECT_TRUE(Profile::parse("zero").is_zero());
  EXPECT_TRUE(Profile::parse("zero() * gauss(0.5, 0.1) + 0 * cos(2)").is_zero());
  EXPECT_FALSE(Profile::parse("cos(2)").is_zero());
}

TEST(Profile, RejectsMalformedText) {
  for (const char* bad : {"", "gauss(1)", "foo(1)", "cos(1.5)", "indicator(1, 0)",
                          "gauss(0.5, 0.1", "2 *", "gauss(0.5, -1)", "2 ^ 3", "cos(-1)"}) {
    EXPECT_THROW(Profile::parse(bad), ConfigError) << bad;
  }
  try {
    parse_config("\nproblem.y0 = gauss(0.5)\n", "p.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("p.cfg:2: problem.y0"), std::string::npos)
        << e.what();
  }
}

TEST(Profile, ModeFactorProjectsOntoOneMode) {
  const NeumannBasis basis(1.0, 4, 129);
  const AgeGrid grid(1.0, 10);
  const Profile p = Profile::parse("gauss(0.5, 0.2) * mode(2)");
  const Eigen::MatrixXd m = p.modal_samples(basis, grid);
  for (std::size_t i = 0; i < grid.nodes(); ++i) {
    const double g = std::exp(-0.5 * std::pow((grid.age(i) - 0.5) / 0.2, 2));
    for (Eigen::Index k = 0; k < 4; ++k) {
      EXPECT_NEAR(m(static_cast<Eigen::Index>(i), k), k == 2 ? g : 0.0, 1e-12);
    }
  }
  const AgeProfile f = p.modal_profile(basis, 1.0, 2, 1000);
  EXPECT_NEAR(f(0.5), 1.0, 1e-9);
  EXPECT_NEAR(f(0.123), std::exp(-0.5 * std::pow((0.123 - 0.5) / 0.2, 2)), 1e-5);
}

// ------------------------------------------------------------------ output

TEST(Output, CsvStartsWithCommentThenHeader) {
  const fs::path dir = fresh_dir("csv");
  ensure_directory(dir);
  CsvWriter w(dir / "t.csv", "# one\n# two\n", {"a", "b"});
  w.row(std::vector<double>{1.5, -0.0});
  EXPECT_THROW(w.row(std::vector<double>{1.0}), ShapeError);
  w.close();
  EXPECT_EQ(slurp(dir / "t.csv"), "# one\n# two\na,b\n1.5,0\n");
}

TEST(Output, SvgFilesAreCommentedAndWellFormed) {
  const fs::path dir = fresh_dir("svg");
  ensure_directory(dir);
  write_line_plot(dir / "l.svg", "# key = a--b\n", {"t", "x", "y"},
                  {{"s", {0, 1, 2}, {1, 0.1, 0.01}}}, true);
  Eigen::MatrixXd v(2, 3);
  v << 0, 1, 2, 3, 4, 5;
  write_heatmap(dir / "h.svg", "# h\n", {"t", "x", "y"}, Eigen::Vector3d(0, 1, 2),
                Eigen::Vector2d(0, 1), v);
  for (const char* name : {"l.svg", "h.svg"}) {
    const std::string s = slurp(dir / name);
    EXPECT_EQ(s.rfind("<!--\n", 0), 0u);
    const auto close = s.find("-->");
    ASSERT_NE(close, std::string::npos);
    EXPECT_EQ(s.substr(4, close - 4).find("--"), std::string::npos);
    EXPECT_NE(s.find("<svg"), std::string::npos);
    EXPECT_EQ(s.substr(s.size() - 7), "</svg>\n");
  }
  const std::string h = slurp(dir / "h.svg");
  std::size_t rects = 0;
  for (auto p = h.find("<rect x="); p != std::string::npos; p = h.find("<rect x=", p + 1)) ++rects;
  EXPECT_GE(rects, 6u);
  EXPECT_THROW(write_heatmap(dir / "bad.svg", "", {}, Eigen::Vector2d(0, 1),
                             Eigen::Vector2d(0, 1), v),
               ShapeError);
}

TEST(Output, UnwritableDirectoryIsAnIoError) {
  const fs::path dir = fresh_dir("io");
  fs::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  EXPECT_THROW(ensure_directory(dir / "file"), IoError);
  EXPECT_THROW(CsvWriter(dir / "missing" / "t.csv", "", {"a"}), IoError);
}

// ---------------------------------------------------------------- simulate

TEST(Simulate, ZeroInitialStateGivesZeroTrajectory) {
  const fs::path out = fresh_dir("run");
  const ScenarioConfig c = small_config("problem.y0 = 0\n", out);
  ASSERT_EQ(run("simulate", c), kExitOk);
  const Table t = read_csv(out / "trajectory.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"t", "a", "mode", "value"}));
  ASSERT_EQ(t.rows.size(), 2u * 26u * 21u);
  for (const auto& r : t.rows) EXPECT_EQ(r[3], "0");
  EXPECT_EQ(read_summary(out / "summary.txt").at("final_norm"), "0");
}

TEST(Simulate, PaperScenarioHasRenewalTrace) {
  const fs::path out = fresh_dir("run");
  const ScenarioConfig c = small_config("problem.y0 = gauss(0.5, 0.1) * mode(0)\n", out);
  ASSERT_EQ(run("simulate", c), kExitOk);
  const Table t = read_csv(out / "renewal.csv");
  ASSERT_FALSE(t.rows.empty());
  double peak = 0.0;
  for (const auto& r : t.rows) peak = std::max(peak, std::abs(std::stod(r[2])));
  EXPECT_GT(peak, 0.0);
  EXPECT_TRUE(fs::exists(out / "state_heatmap.svg"));
  EXPECT_TRUE(fs::exists(out / "renewal.svg"));
  const auto s = read_summary(out / "summary.txt");
  EXPECT_NEAR(std::stod(s.at("reproduction_number")), 0.8, 1e-9);
}

TEST(Simulate, PureShiftIsByteIdenticalAcrossRuns) {
  const std::string pure =
      "demographics.mortality = constant\n"
      "demographics.mortality.rate = 0\n"
      "demographics.fertility = constant\n"
      "demographics.fertility.value = 0\n"
      "demographics.R = none\n"
      "discretization.T = 0.5\n"
      "problem.y0 = bump(0, 0.4) * mode(0)\n";
  const fs::path a = fresh_dir("a");
  const fs::path b = fresh_dir("b");
  ASSERT_EQ(run("simulate", small_config(pure, a)), kExitOk);
  ASSERT_EQ(run("simulate", small_config(pure, b)), kExitOk);
  for (const char* f : {"trajectory.csv", "renewal.csv", "summary.txt", "state_heatmap.svg"}) {
    const std::string x = slurp(a / f);
    const std::string y = slurp(b / f);
    // Only the output.directory line of the header may differ.
    const auto fix = [](std::string s) {
      const auto p = s.find("# output.directory = ");
      const auto e = s.find('\n', p);
      return s.erase(p, e - p);
    };
    EXPECT_EQ(fix(x), fix(y)) << f;
  }
  // Transport without death or births: y(a, t) = y0(a - t) for a >= t.
  const Table t = read_csv(a / "trajectory.csv");
  std::map<std::pair<std::string, std::string>, double> mode0;
  for (const auto& r : t.rows) {
    if (r[2] == "0") mode0[{r[0], r[1]}] = std::stod(r[3]);
  }
  const double y0_at_02 = mode0.at({"0", "0.2"});
  EXPECT_GT(y0_at_02, 0.0);
  EXPECT_EQ(mode0.at({"0.3", "0.5"}), y0_at_02);
  EXPECT_EQ(mode0.at({"0.3", "0.1"}), 0.0);
}

TEST(Simulate, MisalignedHorizonIsAPrecondition) {
  const fs::path out = fresh_dir("run");
  std::string err;
  EXPECT_EQ(run("simulate", small_config("discretization.T = 0.333\n", out), &err),
            kExitPrecondition);
  EXPECT_NE(err.find("not a multiple of the age step"), std::string::npos) << err;
}

// ------------------------------------------------------------- nullcontrol

TEST(NullControlCommand, PaperScenarioNullsTheState) {
  const fs::path out = fresh_dir("run");
  const ScenarioConfig c =
      small_config("discretization.Na = 80\ndiscretization.T = 1.25\n", out);
  ASSERT_EQ(run("nullcontrol", c), kExitOk);
  const auto s = read_summary(out / "report.txt");
  EXPECT_LE(std::stod(s.at("relative_residual")), c.tolerance);
  EXPECT_EQ(s.at("status"), "nulled");
  const Table t = read_csv(out / "control.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"t", "mode", "value"}));
  EXPECT_FALSE(t.rows.empty());
}

TEST(NullControlCommand, ShortBandHorizonReportsTheObstruction) {
  const fs::path out = fresh_dir("run");
  const ScenarioConfig c = small_config(
      "problem.control = band\nproblem.a0 = 0.2\ndiscretization.T = 0.5\n", out);
  std::string err;
  EXPECT_EQ(run("nullcontrol", c, &err), kExitPrecondition);
  EXPECT_NE(err.find("not null-controllable"), std::string::npos) << err;
  const auto w = err.find("witness norm ");
  ASSERT_NE(w, std::string::npos) << err;
  EXPECT_GT(std::stod(err.substr(w + 13)), 0.0);
  EXPECT_FALSE(fs::exists(out / "report.txt"));
}

TEST(NullControlCommand, BirthControlNeedsHorizonBeyondLifespan) {
  const fs::path out = fresh_dir("run");
  std::string err;
  EXPECT_EQ(run("nullcontrol", small_config("discretization.T = 1\n", out), &err),
            kExitPrecondition);
  EXPECT_NE(err.find("T > A"), std::string::npos) << err;
}

TEST(NullControlCommand, ZeroInitialStateIsTrivial) {
  const fs::path out = fresh_dir("run");
  ASSERT_EQ(run("nullcontrol", small_config("problem.y0 = 0\n", out)), kExitOk);
  const auto s = read_summary(out / "report.txt");
  EXPECT_EQ(s.at("status"), "trivial");
  EXPECT_EQ(s.at("control_norm"), "0");
}

TEST(NullControlCommand, BandControlWritesAgeResolvedControl) {
  const fs::path out = fresh_dir("run");
  const ScenarioConfig c = small_config(
      "problem.control = band\nproblem.a0 = 0.2\ndiscretization.T = 1.25\n"
      "demographics.fertility.floor = 0.2\n",
      out);
  ASSERT_EQ(run("nullcontrol", c), kExitOk);
  const Table t = read_csv(out / "control.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"t", "a", "mode", "value"}));
  for (const auto& r : t.rows) EXPECT_LE(std::stod(r[1]), 0.2 + 1e-12);
  EXPECT_EQ(read_summary(out / "report.txt").at("fertility_vanishes_on_band"), "true");
}

TEST(NullControlCommand, ResidualAboveToleranceExitsWithSolverCode) {
  const fs::path out = fresh_dir("run");
  const ScenarioConfig c = small_config(
      "discretization.T = 1.25\nproblem.omega = 0, 0.5\nproblem.tolerance = 1e-6\n", out);
  std::string err;
  EXPECT_EQ(run("nullcontrol", c, &err), kExitSolver);
  EXPECT_NE(err.find("exceeds tolerance"), std::string::npos) << err;
  const auto s = read_summary(out / "report.txt");
  EXPECT_EQ(s.at("omega_restricted"), "true");
  EXPECT_EQ(s.at("status"), "residual above tolerance");
}

// ---------------------------------------------------------------------- lq

TEST(LqCommand, ZeroDataGivesZeroOutputs) {
  const fs::path out = fresh_dir("run");
  const ScenarioConfig c =
      small_config("problem.y0 = 0\nproblem.yd = 0\ndiscretization.T = 0.5\n", out);
  ASSERT_EQ(run("lq", c), kExitOk);
  for (const char* f : {"state.csv", "control.csv", "fields.csv", "static.csv"}) {
    const Table t = read_csv(out / f);
    ASSERT_FALSE(t.rows.empty()) << f;
    for (const auto& r : t.rows) {
      for (std::size_t j = 0; j < r.size(); ++j) {
        if (t.header[j] == "t" || t.header[j] == "a" || t.header[j] == "x" ||
            t.header[j] == "mode") {
          continue;
        }
        EXPECT_EQ(r[j], "0") << f << " " << t.header[j];
      }
    }
  }
}

TEST(LqCommand, LongHorizonShowsTurnpikeShortHorizonDoesNot) {
  const fs::path out = fresh_dir("long");
  ASSERT_EQ(run("lq", small_config("discretization.T = 3\n", out)), kExitOk);
  const auto s = read_summary(out / "turnpike.txt");
  EXPECT_EQ(s.at("verdict"), "turnpike observed");
  EXPECT_LT(std::stod(s.at("plateau")), 1e-3 * std::stod(s.at("peak")));
  const Table d = read_csv(out / "deviation.csv");
  EXPECT_EQ(d.header, (std::vector<std::string>{"t", "state", "control", "adjoint",
                                                "deviation", "envelope"}));
  EXPECT_EQ(d.rows.size(), 301u);
  for (const char* f : {"state_heatmap.svg", "control.svg", "deviation.svg",
                        "control_field.svg"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }

  const fs::path out2 = fresh_dir("short");
  ASSERT_EQ(run("lq", small_config("discretization.T = 0.3\n", out2)), kExitOk);
  EXPECT_EQ(read_summary(out2 / "turnpike.txt").at("verdict"), "turnpike not observed");
}

TEST(LqCommand, OutputsAreDeterministic) {
  const fs::path a = fresh_dir("a");
  const fs::path b = fresh_dir("b");
  ScenarioConfig c = small_config("discretization.T = 1\ndiscretization.K = 3\n", a);
  ASSERT_EQ(run("lq", c), kExitOk);
  set_config_value(c, "output.directory", a.string());
  fs::create_directories(b);
  for (const auto& e : fs::directory_iterator(a)) fs::copy(e.path(), b / e.path().filename());
  fs::remove_all(a);
  ASSERT_EQ(run("lq", c), kExitOk);
  for (const auto& e : fs::directory_iterator(b)) {
    EXPECT_EQ(slurp(e.path()), slurp(a / e.path().filename())) << e.path();
  }
}

TEST(LqCommand, PartialControlDomainIsRejected) {
  const fs::path out = fresh_dir("run");
  std::string err;
  EXPECT_EQ(run("lq", small_config("problem.omega = 0.2, 1\n", out), &err), kExitPrecondition);
  EXPECT_NE(err.find("problem.omega"), std::string::npos) << err;
}

TEST(LqCommand, EveryFileStartsWithTheResolvedConfig) {
  const fs::path out = fresh_dir("run");
  const ScenarioConfig c = small_config("discretization.T = 0.5\n", out);
  ASSERT_EQ(run("lq", c), kExitOk);
  const std::string header = c.header("lq");
  for (const auto& e : fs::directory_iterator(out)) {
    const std::string s = slurp(e.path());
    if (e.path().extension() == ".svg") {
      EXPECT_EQ(s.substr(5, header.size()), header) << e.path();
    } else {
      EXPECT_EQ(s.substr(0, header.size()), header) << e.path();
    }
  }
}

// ------------------------------------------------------------------- sweep

TEST(SweepCommand, EmptyListGivesHeaderOnlyCsv) {
  const fs::path out = fresh_dir("run");
  ASSERT_EQ(run("sweep", small_config("sweep.values =\n", out)), kExitOk);
  const Table t = read_csv(out / "sweep.csv");
  EXPECT_FALSE(t.header.empty());
  EXPECT_TRUE(t.rows.empty());
  EXPECT_FALSE(t.comments.empty());
}

TEST(SweepCommand, EpsilonGapsShrinkMonotonically) {
  const fs::path out = fresh_dir("run");
  const ScenarioConfig c = small_config(
      "sweep.variable = eps\nsweep.values = 0.4, 0.2, 0.1\ndiscretization.T = 1\n"
      "discretization.K = 1\nproblem.y0 = gauss(0.5, 0.1) * mode(0)\n",
      out);
  ASSERT_EQ(run("sweep", c), kExitOk);
  const Table t = read_csv(out / "sweep.csv");
  ASSERT_EQ(t.rows.size(), 3u);
  const auto wg = t.column("weak_gap");
  const auto sg = t.column("state_gap");
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    EXPECT_EQ(t.rows[i][t.column("status")], "ok");
    EXPECT_LT(std::stod(t.rows[i][wg]), std::stod(t.rows[i - 1][wg]));
    EXPECT_LT(std::stod(t.rows[i][sg]), std::stod(t.rows[i - 1][sg]));
  }
}

TEST(SweepCommand, HorizonSweepKeepsIntegralMeasureBounded) {
  const fs::path out = fresh_dir("run");
  const ScenarioConfig c =
      small_config("sweep.variable = T\nsweep.values = 0.5, 1, 2, 4\n", out);
  ASSERT_EQ(run("sweep", c), kExitOk);
  const Table t = read_csv(out / "sweep.csv");
  ASSERT_EQ(t.rows.size(), 4u);
  double lo = 1e300;
  double hi = 0.0;
  for (const auto& r : t.rows) {
    const double m = std::stod(r[t.column("integral")]);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi / lo, 2.0);
  // Horizons beyond A also report the null-control residual.
  EXPECT_FALSE(t.rows[2][t.column("null_residual")].empty());
  EXPECT_TRUE(t.rows[0][t.column("null_residual")].empty());
}

TEST(SweepCommand, FailedRowsAreRecordedAndTheRunContinues) {
  const fs::path out = fresh_dir("run");
  const ScenarioConfig c =
      small_config("sweep.variable = K\nsweep.values = 1, 2.5, 2\ndiscretization.T = 0.5\n",
                   out);
  ASSERT_EQ(run("sweep", c), kExitOk);
  const Table t = read_csv(out / "sweep.csv");
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[0][t.column("status")], "ok");
  EXPECT_EQ(t.rows[1][t.column("status")], "error");
  EXPECT_FALSE(t.rows[1][t.column("error")].empty());
  EXPECT_EQ(t.rows[2][t.column("status")], "ok");
}

// -------------------------------------------------------------- exit codes

TEST(ExitCodes, MapErrorFamilies) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), kExitPrecondition);
  EXPECT_EQ(exit_code_for(PreconditionError("x")), kExitPrecondition);
  EXPECT_EQ(exit_code_for(DomainError("x")), kExitPrecondition);
  EXPECT_EQ(exit_code_for(ShapeError("x")), kExitPrecondition);
  EXPECT_EQ(exit_code_for(SolverError("x")), kExitSolver);
  EXPECT_EQ(exit_code_for(ConvergenceError("x")), kExitSolver);
  EXPECT_EQ(exit_code_for(ResidualError("x")), kExitSolver);
  EXPECT_EQ(exit_code_for(IoError("x")), kExitIo);
}

TEST(ExitCodes, UnknownCommandAndUnwritableOutput) {
  const fs::path out = fresh_dir("run");
  EXPECT_EQ(run("report", small_config("", out)), kExitPrecondition);
  fs::create_directories(out.parent_path());
  std::ofstream(out) << "not a directory";
  std::string err;
  EXPECT_EQ(run("simulate", small_config("", out), &err), kExitIo);
  EXPECT_NE(err.find(out.string()), std::string::npos) << err;
}

#ifdef AGEPOP_TOOL
TEST(Tool, CommandLineExitCodes) {
  const fs::path dir = fresh_dir("tool");
  fs::create_directories(dir);
  const std::string tool = AGEPOP_TOOL;
  auto code = [&](const std::string& args) {
    const int status = std::system((tool + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  {
    std::ofstream f(dir / "band.cfg");
    f << "problem.control = band\nproblem.a0 = 0.2\ndiscretization.Na = 80\n"
         "discretization.K = 1\ndiscretization.T = 0.5\n"
         "problem.y0 = gauss(0.5, 0.1) * mode(0)\n";
  }
  const std::string cfg = "--config " + (dir / "band.cfg").string();
  const std::string out = " --out " + (dir / "out").string();
  EXPECT_EQ(code("nullcontrol " + cfg + out), kExitPrecondition);
  EXPECT_EQ(code("nullcontrol " + cfg + out + " --horizon 1.25"), kExitOk);
  EXPECT_EQ(code("simulate " + cfg + out + " --modes 2 --seed 7"), kExitOk);
  EXPECT_NE(slurp(dir / "out" / "trajectory.csv").find("# run.seed = 7"), std::string::npos);
  EXPECT_NE(slurp(dir / "out" / "trajectory.csv").find("# discretization.K = 2"),
            std::string::npos);
  EXPECT_EQ(code("simulate --config " + (dir / "missing.cfg").string()), kExitIo);
  EXPECT_EQ(code("simulate " + cfg + out + " --modes lots"), kExitPrecondition);
  EXPECT_EQ(code("frobnicate"), kExitPrecondition);
  EXPECT_EQ(code(""), kExitPrecondition);
  EXPECT_EQ(code("--help"), kExitOk);
}
#endif
