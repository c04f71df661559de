#include "agepop/demographics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "agepop/errors.hpp"

namespace agepop {

namespace {

constexpr double kAgeTol = 1e-12;

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys,
                   double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const auto k = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double w = (x - xs[k]) / (xs[k + 1] - xs[k]);
  return (1.0 - w) * ys[k] + w * ys[k + 1];
}

void validate_table(double lifespan, std::vector<double>& ages,
                    std::vector<double>& values, const char* what) {
  if (ages.size() != values.size() || ages.empty()) {
    throw ShapeError(std::string(what) +
                     ": table needs matching, non-empty age/value columns");
  }
  for (std::size_t i = 1; i < ages.size(); ++i) {
    if (!(ages[i] > ages[i - 1])) {
      throw DomainError(std::string(what) +
                        ": table ages must be strictly increasing");
    }
  }
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DomainError(std::string(what) +
                        ": rates must be finite and nonnegative");
    }
  }
  // Extend to cover [0, A] with constant extrapolation.
  if (ages.front() > 0.0) {
    ages.insert(ages.begin(), 0.0);
    values.insert(values.begin(), values.front());
  }
  if (ages.back() < lifespan) {
    ages.push_back(lifespan);
    values.push_back(values.back());
  }
}

void check_lifespan(double lifespan) {
  if (!(lifespan > 0.0) || !std::isfinite(lifespan)) {
    throw DomainError("lifespan must be positive and finite");
  }
}

double paper_fertility_shape(double a, double lifespan) {
  const double p5 = 60.0 * 60.0 * 60.0 * 60.0 * 60.0;
  const double d = a - 0.5 * lifespan;
  return p5 * a * a * (lifespan - a) * (lifespan - a) * std::exp(-3.0 * d * d);
}

}  // namespace

// ---------------------------------------------------------------- mortality

MortalityRate MortalityRate::ClosedForm(double lifespan, double c) {
  check_lifespan(lifespan);
  if (!(c > 0.0)) throw DomainError("mortality constant c must be positive");
  return MortalityRate(Kind::kClosedFormPaper, lifespan, c);
}

MortalityRate MortalityRate::Constant(double lifespan, double rate) {
  check_lifespan(lifespan);
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw DomainError("constant mortality must be finite and nonnegative");
  }
  return MortalityRate(Kind::kConstant, lifespan, rate);
}

MortalityRate MortalityRate::Tabulated(double lifespan,
                                       std::vector<double> ages,
                                       std::vector<double> values) {
  check_lifespan(lifespan);
  validate_table(lifespan, ages, values, "mortality");
  MortalityRate m(Kind::kTabulated, lifespan, 0.0);
  m.cumulative_.assign(ages.size(), 0.0);
  for (std::size_t i = 1; i < ages.size(); ++i) {
    m.cumulative_[i] = m.cumulative_[i - 1] +
                       0.5 * (ages[i] - ages[i - 1]) * (values[i] + values[i - 1]);
  }
  m.ages_ = std::move(ages);
  m.values_ = std::move(values);
  return m;
}

double MortalityRate::operator()(double a) const {
  switch (kind_) {
    case Kind::kClosedFormPaper:
      if (a >= lifespan_) return std::numeric_limits<double>::infinity();
      return 1.0 / (param_ * (lifespan_ - a));
    case Kind::kConstant:
      return param_;
    case Kind::kTabulated:
      return interpolate(ages_, values_, a);
  }
  return 0.0;
}

double MortalityRate::tabulated_cumulative(double a) const {
  if (a <= ages_.front()) return 0.0;
  if (a >= ages_.back()) {
    return cumulative_.back() + (a - ages_.back()) * values_.back();
  }
  auto it = std::upper_bound(ages_.begin(), ages_.end(), a);
  const auto k = static_cast<std::size_t>(it - ages_.begin()) - 1;
  const double va = interpolate(ages_, values_, a);
  return cumulative_[k] + 0.5 * (a - ages_[k]) * (values_[k] + va);
}

double MortalityRate::integral(double lo, double hi) const {
  if (hi <= lo) return 0.0;
  switch (kind_) {
    case Kind::kClosedFormPaper: {
      const double rem_hi = lifespan_ - hi;
      if (rem_hi <= 0.0) return std::numeric_limits<double>::infinity();
      // (1/c) ln((A - lo)/(A - hi)) = (1/c) log1p((hi - lo)/(A - hi))
      return std::log1p((hi - lo) / rem_hi) / param_;
    }
    case Kind::kConstant:
      return param_ * (hi - lo);
    case Kind::kTabulated:
      return tabulated_cumulative(hi) - tabulated_cumulative(lo);
  }
  return 0.0;
}

// ---------------------------------------------------------------- fertility

FertilityRate FertilityRate::ClosedForm(double lifespan, double scale) {
  check_lifespan(lifespan);
  if (!(scale >= 0.0)) throw DomainError("fertility scale must be nonnegative");
  return FertilityRate(Kind::kClosedFormPaper, lifespan, scale);
}

FertilityRate FertilityRate::Constant(double lifespan, double value) {
  check_lifespan(lifespan);
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw DomainError("constant fertility must be finite and nonnegative");
  }
  return FertilityRate(Kind::kConstant, lifespan, value);
}

FertilityRate FertilityRate::Tabulated(double lifespan,
                                       std::vector<double> ages,
                                       std::vector<double> values) {
  check_lifespan(lifespan);
  validate_table(lifespan, ages, values, "fertility");
  FertilityRate f(Kind::kTabulated, lifespan, 1.0);
  f.ages_ = std::move(ages);
  f.values_ = std::move(values);
  return f;
}

double FertilityRate::raw(double a) const {
  switch (kind_) {
    case Kind::kClosedFormPaper:
      return paper_fertility_shape(a, lifespan_);
    case Kind::kConstant:
      return 1.0;
    case Kind::kTabulated:
      return interpolate(ages_, values_, a);
  }
  return 0.0;
}

double FertilityRate::operator()(double a) const {
  if (a < floor_) return 0.0;
  return scale_ * raw(a);
}

FertilityRate FertilityRate::Scaled(double factor) const {
  if (!(factor >= 0.0) || !std::isfinite(factor)) {
    throw DomainError("fertility scale factor must be finite and nonnegative");
  }
  FertilityRate out = *this;
  out.scale_ *= factor;
  return out;
}

FertilityRate FertilityRate::WithSupportFloor(double floor) const {
  if (!(floor >= 0.0) || floor >= lifespan_) {
    throw DomainError("fertility support floor must lie in [0, A)");
  }
  FertilityRate out = *this;
  out.floor_ = floor;
  return out;
}

double FertilityRate::SupNorm(std::size_t samples) const {
  samples = std::max<std::size_t>(samples, 2);
  double best = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double a = lifespan_ * static_cast<double>(i) /
                     static_cast<double>(samples - 1);
    best = std::max(best, (*this)(a));
  }
  return best;
}

bool FertilityRate::VanishesBelow(double a0, std::size_t samples) const {
  if (a0 <= floor_) return true;
  samples = std::max<std::size_t>(samples, 2);
  for (std::size_t i = 1; i < samples; ++i) {
    const double a = a0 * static_cast<double>(i) / static_cast<double>(samples);
    if ((*this)(a) != 0.0) return false;
  }
  return true;
}

// ------------------------------------------------------------- functionals

double survival(const MortalityRate& mu, double a) {
  const double lifespan = mu.lifespan();
  if (a < -kAgeTol * lifespan || a > lifespan * (1.0 + kAgeTol)) {
    std::ostringstream os;
    os << "survival: age " << a << " outside [0, " << lifespan << "]";
    throw DomainError(os.str());
  }
  a = std::clamp(a, 0.0, lifespan);
  return std::exp(-mu.integral(0.0, a));
}

double survival_ratio(const MortalityRate& mu, double a, double t) {
  const double lifespan = mu.lifespan();
  if (t < 0.0 || t > a * (1.0 + kAgeTol) + kAgeTol * lifespan) {
    std::ostringstream os;
    os << "survival_ratio: need 0 <= t <= a, got a=" << a << ", t=" << t;
    throw DomainError(os.str());
  }
  if (a < -kAgeTol * lifespan || a > lifespan * (1.0 + kAgeTol)) {
    throw DomainError("survival_ratio: age outside [0, A]");
  }
  if (t == 0.0) return 1.0;
  a = std::clamp(a, 0.0, lifespan);
  const double lo = std::max(0.0, a - t);
  return std::exp(-mu.integral(lo, a));
}

double lotka_transform(const FertilityRate& beta, const MortalityRate& mu,
                       double lambda, std::size_t cells) {
  cells = std::max<std::size_t>(cells, 1);
  const double lifespan = mu.lifespan();
  const double h = lifespan / static_cast<double>(cells);
  double acc = 0.0;
  for (std::size_t i = 0; i <= cells; ++i) {
    const double a = h * static_cast<double>(i);
    const double w = (i == 0 || i == cells) ? 0.5 * h : h;
    const double b = beta(a);
    if (b == 0.0) continue;
    const double pi = survival(mu, a);
    if (pi == 0.0) continue;
    acc += w * b * std::exp(-lambda * a) * pi;
  }
  return acc;
}

double reproduction_number(const FertilityRate& beta, const MortalityRate& mu,
                           std::size_t cells) {
  return lotka_transform(beta, mu, 0.0, cells);
}

double lotka_root(const FertilityRate& beta, const MortalityRate& mu,
                  std::size_t cells) {
  const double r = reproduction_number(beta, mu, cells);
  if (!(r > 0.0)) {
    throw PreconditionError(
        "lotka_root: reproduction number is zero, Lotka equation has no real "
        "root");
  }
  auto g = [&](double lambda) {
    return lotka_transform(beta, mu, lambda, cells) - 1.0;
  };
  constexpr int kExpansionCap = 64;
  double lo = -1.0;
  double hi = 1.0;
  int expansions = 0;
  // g is strictly decreasing; need g(lo) > 0 > g(hi).
  while (g(lo) <= 0.0) {
    if (g(lo) == 0.0) return lo;
    hi = lo;
    lo *= 2.0;
    if (++expansions > kExpansionCap || !std::isfinite(g(lo))) {
      throw ConvergenceError("lotka_root: could not bracket root from below");
    }
  }
  while (g(hi) >= 0.0) {
    if (g(hi) == 0.0) return hi;
    lo = hi;
    hi *= 2.0;
    if (++expansions > kExpansionCap) {
      throw ConvergenceError("lotka_root: could not bracket root from above");
    }
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if (gm > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

FertilityRate normalize_to_reproduction_number(const FertilityRate& beta,
                                               const MortalityRate& mu,
                                               double target,
                                               std::size_t cells) {
  if (!(target >= 0.0)) {
    throw DomainError("target reproduction number must be nonnegative");
  }
  const double r = reproduction_number(beta, mu, cells);
  if (!(r > 0.0)) {
    throw PreconditionError(
        "cannot normalize a fertility rate with zero reproduction number");
  }
  return beta.Scaled(target / r);
}

}  // namespace agepop
