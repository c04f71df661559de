#include "agepop/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>

namespace agepop {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  const std::string last = trim(cur);
  if (!last.empty() || !out.empty()) out.push_back(last);
  return out;
}

bool try_number(std::string_view s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  const char* last = t.data() + t.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

double parse_number(std::string_view s) {
  double v = 0.0;
  if (!try_number(s, v)) {
    throw ConfigError("expected a number, got '" + trim(s) + "'");
  }
  if (!std::isfinite(v)) throw ConfigError("value must be finite");
  return v;
}

std::size_t parse_count(std::string_view s) {
  const std::string t = trim(s);
  std::size_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError("expected a nonnegative integer, got '" + t + "'");
  }
  return v;
}

bool parse_bool(std::string_view s) {
  const std::string t = trim(s);
  if (t == "true" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "no" || t == "0") return false;
  throw ConfigError("expected true or false, got '" + t + "'");
}

std::string parse_choice(std::string_view s, std::initializer_list<const char*> options) {
  const std::string t = trim(s);
  std::string joined;
  for (const char* o : options) {
    if (t == o) return t;
    if (!joined.empty()) joined += ", ";
    joined += o;
  }
  throw ConfigError("expected one of {" + joined + "}, got '" + t + "'");
}

std::string join_numbers(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_number(values[i]);
  }
  return out;
}

// ------------------------------------------------------------ profile parser

class ProfileParser {
 public:
  explicit ProfileParser(std::string_view text) : s_(text) {}

  std::vector<Profile::Term> parse() {
    std::vector<Profile::Term> terms;
    skip();
    double sign = 1.0;
    if (peek() == '-') {
      sign = -1.0;
      ++pos_;
    } else if (peek() == '+') {
      ++pos_;
    }
    while (true) {
      Profile::Term t = term();
      t.coefficient *= sign;
      terms.push_back(std::move(t));
      skip();
      if (pos_ >= s_.size()) break;
      const char op = s_[pos_];
      if (op != '+' && op != '-') fail("expected '+', '-', '*' or end of profile");
      sign = op == '-' ? -1.0 : 1.0;
      ++pos_;
    }
    std::vector<Profile::Term> kept;
    for (auto& t : terms) {
      const bool zero = t.coefficient == 0.0 ||
                        std::any_of(t.factors.begin(), t.factors.end(),
                                    [](const auto& f) { return f.name == "zero"; });
      if (!zero) kept.push_back(std::move(t));
    }
    return kept;
  }

 private:
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream os;
    os << "profile '" << s_ << "', column " << pos_ + 1 << ": " << what;
    throw ConfigError(os.str());
  }

  Profile::Term term() {
    Profile::Term t;
    factor(t);
    while (true) {
      skip();
      if (peek() != '*') break;
      ++pos_;
      factor(t);
    }
    return t;
  }

  double number() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
            s_[pos_] == 'e' || s_[pos_] == 'E' ||
            ((s_[pos_] == '-' || s_[pos_] == '+') && pos_ > start &&
             (s_[pos_ - 1] == 'e' || s_[pos_ - 1] == 'E')) ||
            (s_[pos_] == '-' && pos_ == start))) {
      ++pos_;
    }
    double v = 0.0;
    if (!try_number(s_.substr(start, pos_ - start), v)) {
      pos_ = start;
      fail("expected a number");
    }
    return v;
  }

  void factor(Profile::Term& t) {
    skip();
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      t.coefficient *= number();
      return;
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) fail("expected a number or a function");
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '_')) {
      ++pos_;
    }
    Profile::Factor f;
    f.name = std::string(s_.substr(start, pos_ - start));
    skip();
    if (peek() == '(') {
      ++pos_;
      skip();
      if (peek() != ')') {
        f.args.push_back(number());
        skip();
        while (peek() == ',') {
          ++pos_;
          f.args.push_back(number());
          skip();
        }
      }
      if (peek() != ')') fail("expected ')'");
      ++pos_;
    }
    check(f, start);
    if (f.name == "const") {
      t.coefficient *= f.args[0];
      return;
    }
    t.factors.push_back(std::move(f));
  }

  void check(const Profile::Factor& f, std::size_t at) {
    static const std::map<std::string, std::size_t> arity = {
        {"zero", 0},       {"const", 1},      {"gauss", 2},   {"indicator", 2},
        {"bump", 2},       {"cos", 1},        {"mode", 1},    {"xgauss", 2},
        {"xindicator", 2}, {"xbump", 2},
    };
    const auto it = arity.find(f.name);
    if (it == arity.end()) {
      pos_ = at;
      fail("unknown function '" + f.name + "'");
    }
    if (f.args.size() != it->second) {
      pos_ = at;
      fail(f.name + " takes " + std::to_string(it->second) + " argument(s)");
    }
    const bool interval = f.name == "indicator" || f.name == "bump" ||
                          f.name == "xindicator" || f.name == "xbump";
    if (interval && !(f.args[0] < f.args[1])) {
      pos_ = at;
      fail(f.name + " needs lo < hi");
    }
    if ((f.name == "gauss" || f.name == "xgauss") && !(f.args[1] > 0.0)) {
      pos_ = at;
      fail(f.name + " needs a positive width");
    }
    if ((f.name == "cos" || f.name == "mode") &&
        (f.args[0] < 0.0 || f.args[0] != std::floor(f.args[0]))) {
      pos_ = at;
      fail(f.name + " needs a nonnegative integer index");
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

double sin2_bump(double z, double lo, double hi) {
  if (z <= lo || z >= hi) return 0.0;
  const double s = std::sin(std::numbers::pi * (z - lo) / (hi - lo));
  return s * s;
}

double eval_factor(const Profile::Factor& f, double x, double a, double length) {
  const auto& p = f.args;
  if (f.name == "gauss") {
    const double z = (a - p[0]) / p[1];
    return std::exp(-0.5 * z * z);
  }
  if (f.name == "indicator") return a >= p[0] && a <= p[1] ? 1.0 : 0.0;
  if (f.name == "bump") return sin2_bump(a, p[0], p[1]);
  if (f.name == "cos") return std::cos(p[0] * std::numbers::pi * x / length);
  if (f.name == "mode") {
    const double norm = p[0] == 0.0 ? std::sqrt(1.0 / length) : std::sqrt(2.0 / length);
    return norm * std::cos(p[0] * std::numbers::pi * x / length);
  }
  if (f.name == "xgauss") {
    const double z = (x - p[0]) / p[1];
    return std::exp(-0.5 * z * z);
  }
  if (f.name == "xindicator") return x >= p[0] && x <= p[1] ? 1.0 : 0.0;
  if (f.name == "xbump") return sin2_bump(x, p[0], p[1]);
  return 0.0;
}

// ------------------------------------------------------------------- keys

struct KeySpec {
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

std::string terminal_name(TerminalCost t) {
  return t == TerminalCost::kHalfNorm ? "half_norm" : "none";
}

const std::map<std::string, KeySpec>& key_table() {
  using C = ScenarioConfig;
  using S = const std::string&;
  static const std::map<std::string, KeySpec> table = {
      {"demographics.A",
       {[](C& c, S v) { c.lifespan = parse_number(v); },
        [](const C& c) { return format_number(c.lifespan); }}},
      {"demographics.L",
       {[](C& c, S v) {
          c.length = parse_number(v);
          if (!c.lines.count("problem.omega")) c.omega_hi = c.length;
        },
        [](const C& c) { return format_number(c.length); }}},
      {"demographics.mortality",
       {[](C& c, S v) { c.mortality_kind = parse_choice(v, {"closed_form", "constant", "table"}); },
        [](const C& c) { return c.mortality_kind; }}},
      {"demographics.mortality.c",
       {[](C& c, S v) { c.mortality_c = parse_number(v); },
        [](const C& c) { return format_number(c.mortality_c); }}},
      {"demographics.mortality.rate",
       {[](C& c, S v) { c.mortality_rate = parse_number(v); },
        [](const C& c) { return format_number(c.mortality_rate); }}},
      {"demographics.mortality.table",
       {[](C& c, S v) { c.mortality_table = trim(v); },
        [](const C& c) { return c.mortality_table; }}},
      {"demographics.fertility",
       {[](C& c, S v) { c.fertility_kind = parse_choice(v, {"closed_form", "constant", "table"}); },
        [](const C& c) { return c.fertility_kind; }}},
      {"demographics.fertility.value",
       {[](C& c, S v) { c.fertility_value = parse_number(v); },
        [](const C& c) { return format_number(c.fertility_value); }}},
      {"demographics.fertility.table",
       {[](C& c, S v) { c.fertility_table = trim(v); },
        [](const C& c) { return c.fertility_table; }}},
      {"demographics.fertility.floor",
       {[](C& c, S v) { c.fertility_floor = parse_number(v); },
        [](const C& c) { return format_number(c.fertility_floor); }}},
      {"demographics.R",
       {[](C& c, S v) {
          if (trim(v) == "none") {
            c.rescale = false;
          } else {
            c.rescale = true;
            c.target_r = parse_number(v);
          }
        },
        [](const C& c) { return c.rescale ? format_number(c.target_r) : std::string("none"); }}},
      {"discretization.Na",
       {[](C& c, S v) { c.age_cells = parse_count(v); },
        [](const C& c) { return std::to_string(c.age_cells); }}},
      {"discretization.Nx",
       {[](C& c, S v) { c.space_points = parse_count(v); },
        [](const C& c) { return std::to_string(c.space_points); }}},
      {"discretization.K",
       {[](C& c, S v) { c.modes = parse_count(v); },
        [](const C& c) { return std::to_string(c.modes); }}},
      {"discretization.T",
       {[](C& c, S v) { c.horizon = parse_number(v); },
        [](const C& c) { return format_number(c.horizon); }}},
      {"discretization.dt",
       {[](C& c, S v) { c.time_step = parse_number(v); },
        [](const C& c) { return format_number(c.time_step); }}},
      {"problem.N",
       {[](C& c, S v) { c.weight = parse_number(v); },
        [](const C& c) { return format_number(c.weight); }}},
      {"problem.y0",
       {[](C& c, S v) { c.initial = Profile::parse(v); },
        [](const C& c) { return c.initial.text(); }}},
      {"problem.yd",
       {[](C& c, S v) { c.target = Profile::parse(v); },
        [](const C& c) { return c.target.text(); }}},
      {"problem.terminal",
       {[](C& c, S v) {
          c.terminal = parse_choice(v, {"half_norm", "none"}) == "half_norm"
                           ? TerminalCost::kHalfNorm
                           : TerminalCost::kNone;
        },
        [](const C& c) { return terminal_name(c.terminal); }}},
      {"problem.control",
       {[](C& c, S v) {
          c.support = parse_choice(v, {"birth", "band"}) == "birth" ? ControlSupport::kBirth
                                                                    : ControlSupport::kAgeBand;
        },
        [](const C& c) {
          return std::string(c.support == ControlSupport::kBirth ? "birth" : "band");
        }}},
      {"problem.a0",
       {[](C& c, S v) { c.band_limit = parse_number(v); },
        [](const C& c) { return format_number(c.band_limit); }}},
      {"problem.omega",
       {[](C& c, S v) {
          const auto parts = split_list(v);
          if (parts.size() != 2) throw ConfigError("expected 'lo, hi'");
          c.omega_lo = parse_number(parts[0]);
          c.omega_hi = parse_number(parts[1]);
        },
        [](const C& c) { return format_number(c.omega_lo) + ", " + format_number(c.omega_hi); }}},
      {"problem.tolerance",
       {[](C& c, S v) { c.tolerance = parse_number(v); },
        [](const C& c) { return format_number(c.tolerance); }}},
      {"problem.supply_terminal",
       {[](C& c, S v) { c.supply_terminal = parse_bool(v); },
        [](const C& c) { return std::string(c.supply_terminal ? "true" : "false"); }}},
      {"output.directory",
       {[](C& c, S v) {
          const std::string t = trim(v);
          if (t.empty()) throw ConfigError("directory must not be empty");
          c.directory = t;
        },
        [](const C& c) { return c.directory.generic_string(); }}},
      {"output.formats",
       {[](C& c, S v) {
          c.write_csv = false;
          c.write_svg = false;
          for (const auto& f : split_list(v)) {
            const std::string k = parse_choice(f, {"csv", "svg"});
            (k == "csv" ? c.write_csv : c.write_svg) = true;
          }
        },
        [](const C& c) {
          std::string out;
          if (c.write_csv) out += "csv";
          if (c.write_svg) out += out.empty() ? "svg" : ", svg";
          return out;
        }}},
      {"sweep.variable",
       {[](C& c, S v) {
          std::string k = parse_choice(v, {"T", "a0", "eps", "N", "K"});
          if (k == "eps") k = "a0";
          c.sweep_variable = k;
        },
        [](const C& c) { return c.sweep_variable; }}},
      {"sweep.values",
       {[](C& c, S v) {
          c.sweep_values.clear();
          for (const auto& item : split_list(v)) c.sweep_values.push_back(parse_number(item));
        },
        [](const C& c) { return join_numbers(c.sweep_values); }}},
      {"run.seed",
       {[](C& c, S v) { c.seed = parse_count(v); },
        [](const C& c) { return std::to_string(c.seed); }}},
  };
  return table;
}

void require(bool ok, const ScenarioConfig& c, const std::string& key,
             const std::string& what) {
  if (!ok) throw ConfigError(config_location(c, key) + ": " + what);
}

}  // namespace

std::string config_location(const ScenarioConfig& c, const std::string& key) {
  const auto it = c.lines.find(key);
  if (it == c.lines.end()) return c.source + ": " + key + " (default)";
  if (it->second == 0) return "override: " + key;
  return c.source + ":" + std::to_string(it->second) + ": " + key;
}

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ------------------------------------------------------------------ Profile

Profile Profile::parse(std::string_view text) {
  Profile p;
  p.text_ = trim(text);
  if (p.text_.empty()) throw ConfigError("empty profile");
  p.terms_ = ProfileParser(p.text_).parse();
  return p;
}

double Profile::operator()(double x, double a, double length) const {
  double sum = 0.0;
  for (const auto& t : terms_) {
    double v = t.coefficient;
    for (const auto& f : t.factors) v *= eval_factor(f, x, a, length);
    sum += v;
  }
  return sum;
}

Eigen::MatrixXd Profile::modal_samples(const NeumannBasis& basis,
                                       const AgeGrid& grid) const {
  const auto nodes = static_cast<Eigen::Index>(grid.nodes());
  const auto modes = static_cast<Eigen::Index>(basis.modes());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nodes, modes);
  if (is_zero()) return out;
  Eigen::VectorXd f(basis.grid().size());
  for (Eigen::Index i = 0; i < nodes; ++i) {
    const double a = grid.age(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j < f.size(); ++j) f(j) = (*this)(basis.grid()(j), a, basis.length());
    out.row(i) = basis.project(f).transpose();
  }
  return out;
}

AgeProfile Profile::modal_profile(const NeumannBasis& basis, double lifespan,
                                  std::size_t mode, std::size_t cells) const {
  if (mode >= basis.modes()) throw ShapeError("modal_profile: mode out of range");
  const AgeGrid fine(lifespan, cells);
  const Eigen::VectorXd column =
      modal_samples(basis, fine).col(static_cast<Eigen::Index>(mode));
  const double step = fine.step();
  return [column, step, cells](double a) {
    const double s = std::clamp(a / step, 0.0, static_cast<double>(cells));
    const auto i = std::min(static_cast<std::size_t>(s), cells - 1);
    const double w = s - static_cast<double>(i);
    const auto j = static_cast<Eigen::Index>(i);
    return (1.0 - w) * column(j) + w * column(j + 1);
  };
}

// ------------------------------------------------------------ ScenarioConfig

std::vector<std::pair<std::string, std::string>> ScenarioConfig::resolved() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, spec] : key_table()) out.emplace_back(key, spec.get(*this));
  return out;
}

std::string ScenarioConfig::header(std::string_view command) const {
  std::string out = "# agepop ";
  out += command;
  out += '\n';
  for (const auto& [k, v] : resolved()) out += "# " + k + " = " + v + '\n';
  return out;
}

void set_config_value(ScenarioConfig& config, const std::string& key,
                      const std::string& value, std::size_t line) {
  const auto& table = key_table();
  const std::string prefix =
      line == 0 ? "override: " + key : config.source + ":" + std::to_string(line) + ": " + key;
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError(prefix + ": unknown key");
  try {
    it->second.set(config, value);
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + ": " + e.what());
  }
  config.lines[key] = line;
}

ScenarioConfig parse_config(std::string_view text, std::string_view source) {
  ScenarioConfig config;
  config.source = std::string(source);
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string content = raw;
    if (const auto hash = content.find('#'); hash != std::string::npos) content.resize(hash);
    content = trim(content);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(config.source + ":" + std::to_string(line) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(config.source + ":" + std::to_string(line) + ": missing key");
    }
    if (const auto prev = config.lines.find(key); prev != config.lines.end()) {
      throw ConfigError(config.source + ":" + std::to_string(line) + ": " + key +
                        ": duplicate key (first set on line " +
                        std::to_string(prev->second) + ")");
    }
    set_config_value(config, key, value, line);
  }
  validate_config(config);
  return config;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  ScenarioConfig config = parse_config(buf.str(), path.string());
  config.base_dir = path.parent_path();
  return config;
}

void validate_config(const ScenarioConfig& c) {
  require(c.lifespan > 0.0, c, "demographics.A", "lifespan must be positive");
  require(c.length > 0.0, c, "demographics.L", "domain length must be positive");
  if (c.mortality_kind == "closed_form") {
    require(c.mortality_c > 0.0, c, "demographics.mortality.c", "must be positive");
  }
  if (c.mortality_kind == "constant") {
    require(c.mortality_rate >= 0.0, c, "demographics.mortality.rate",
            "mortality must be nonnegative");
  }
  if (c.mortality_kind == "table") {
    require(!c.mortality_table.empty(), c, "demographics.mortality.table",
            "a table path is required for tabulated mortality");
  }
  if (c.fertility_kind == "constant") {
    require(c.fertility_value >= 0.0, c, "demographics.fertility.value",
            "fertility must be nonnegative");
  }
  if (c.fertility_kind == "table") {
    require(!c.fertility_table.empty(), c, "demographics.fertility.table",
            "a table path is required for tabulated fertility");
  }
  require(c.fertility_floor >= 0.0 && c.fertility_floor < c.lifespan, c,
          "demographics.fertility.floor", "must lie in [0, A)");
  if (c.rescale) require(c.target_r > 0.0, c, "demographics.R", "target R must be positive");
  require(c.age_cells >= 2, c, "discretization.Na", "need at least 2 age cells");
  require(c.space_points >= 2, c, "discretization.Nx", "need at least 2 spatial points");
  require(c.modes >= 1, c, "discretization.K", "need at least one mode");
  require(c.horizon > 0.0, c, "discretization.T", "horizon must be positive");
  require(c.time_step > 0.0, c, "discretization.dt", "time step must be positive");
  require(c.time_step <= c.horizon, c, "discretization.dt", "time step exceeds the horizon");
  require(c.weight > 0.0, c, "problem.N", "weight must be positive");
  require(c.band_limit > 0.0 && c.band_limit < c.lifespan, c, "problem.a0",
          "band limit must lie in (0, A)");
  require(c.omega_lo >= 0.0 && c.omega_lo < c.omega_hi && c.omega_hi <= c.length, c,
          "problem.omega", "need 0 <= lo < hi <= L");
  require(c.tolerance > 0.0, c, "problem.tolerance", "tolerance must be positive");
}

std::pair<std::vector<double>, std::vector<double>> read_rate_table(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rate table " + path.string());
  std::vector<double> ages;
  std::vector<double> values;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string content = trim(raw);
    if (content.empty() || content.front() == '#') continue;
    const auto parts = split_list(content);
    double a = 0.0;
    double v = 0.0;
    const bool numeric = parts.size() == 2 && try_number(parts[0], a) && try_number(parts[1], v);
    if (!numeric) {
      if (ages.empty() && values.empty() && parts.size() == 2) continue;  // header
      throw ConfigError(path.string() + ":" + std::to_string(line) +
                        ": expected 'age, value'");
    }
    if (!ages.empty() && !(a > ages.back())) {
      throw ConfigError(path.string() + ":" + std::to_string(line) +
                        ": ages must increase");
    }
    ages.push_back(a);
    values.push_back(v);
  }
  if (ages.size() < 2) throw ConfigError(path.string() + ": table needs at least 2 rows");
  return {ages, values};
}

DemographicModel build_model(const ScenarioConfig& c) {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() ? c.base_dir / path : path;
  };
  std::optional<MortalityRate> mu;
  if (c.mortality_kind == "closed_form") {
    mu = MortalityRate::ClosedForm(c.lifespan, c.mortality_c);
  } else if (c.mortality_kind == "constant") {
    mu = MortalityRate::Constant(c.lifespan, c.mortality_rate);
  } else {
    auto [ages, values] = read_rate_table(resolve(c.mortality_table));
    mu = MortalityRate::Tabulated(c.lifespan, std::move(ages), std::move(values));
  }
  std::optional<FertilityRate> beta;
  if (c.fertility_kind == "closed_form") {
    beta = FertilityRate::ClosedForm(c.lifespan);
  } else if (c.fertility_kind == "constant") {
    beta = FertilityRate::Constant(c.lifespan, c.fertility_value);
  } else {
    auto [ages, values] = read_rate_table(resolve(c.fertility_table));
    beta = FertilityRate::Tabulated(c.lifespan, std::move(ages), std::move(values));
  }
  if (c.fertility_floor > 0.0) beta = beta->WithSupportFloor(c.fertility_floor);
  if (c.rescale) beta = normalize_to_reproduction_number(*beta, *mu, c.target_r);
  return {*mu, *beta};
}

}  // namespace agepop
