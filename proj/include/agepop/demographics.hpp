#pragma once

// Demographic primitives of the age-structured model: mortality μ(a),
// fertility β(a), survival π(a) = exp(-∫₀^a μ), reproduction number and the
// real root of Lotka's characteristic equation.

#include <cstddef>
#include <vector>

namespace agepop {

class MortalityRate {
 public:
  enum class Kind { kClosedFormPaper, kConstant, kTabulated };

  // μ(a) = 1 / (c (A - a)); survival ((A - a)/A)^{1/c}, zero at a = A.
  static MortalityRate ClosedForm(double lifespan, double c);
  static MortalityRate Constant(double lifespan, double rate);
  // Piecewise-linear interpolation of (age, value) samples, held constant
  // outside the table.
  static MortalityRate Tabulated(double lifespan, std::vector<double> ages,
                                 std::vector<double> values);

  Kind kind() const { return kind_; }
  double lifespan() const { return lifespan_; }
  double parameter() const { return param_; }

  // μ(a). Returns +inf at a = A for the closed form.
  double operator()(double a) const;

  // ∫_lo^hi μ(s) ds for 0 <= lo <= hi <= A, computed without forming
  // the (possibly infinite) cumulative hazard at A.
  double integral(double lo, double hi) const;

 private:
  MortalityRate(Kind kind, double lifespan, double param)
      : kind_(kind), lifespan_(lifespan), param_(param) {}

  double tabulated_cumulative(double a) const;

  Kind kind_;
  double lifespan_;
  double param_;
  std::vector<double> ages_;
  std::vector<double> values_;
  std::vector<double> cumulative_;
};

class FertilityRate {
 public:
  enum class Kind { kClosedFormPaper, kConstant, kTabulated };

  // β(a) = scale · 60⁵ a² (A - a)² exp(-3 (a - A/2)²).
  static FertilityRate ClosedForm(double lifespan, double scale = 1.0);
  static FertilityRate Constant(double lifespan, double value);
  static FertilityRate Tabulated(double lifespan, std::vector<double> ages,
                                 std::vector<double> values);

  Kind kind() const { return kind_; }
  double lifespan() const { return lifespan_; }
  double scale() const { return scale_; }
  // Age a_b below which β is forced to zero (the "no early fertility"
  // hypothesis). Zero means no truncation.
  double support_floor() const { return floor_; }

  double operator()(double a) const;

  FertilityRate Scaled(double factor) const;
  FertilityRate WithSupportFloor(double floor) const;

  // max β over `samples` equispaced ages in [0, A].
  double SupNorm(std::size_t samples = 4097) const;

  // True when β vanishes on (0, a0), i.e. a0 <= support floor, or β is
  // identically zero there when sampled.
  bool VanishesBelow(double a0, std::size_t samples = 1025) const;

 private:
  FertilityRate(Kind kind, double lifespan, double scale)
      : kind_(kind), lifespan_(lifespan), scale_(scale) {}

  double raw(double a) const;

  Kind kind_;
  double lifespan_;
  double scale_;
  double floor_ = 0.0;
  std::vector<double> ages_;
  std::vector<double> values_;
};

struct DemographicModel {
  MortalityRate mortality;
  FertilityRate fertility;

  double lifespan() const { return mortality.lifespan(); }
};

// Default number of trapezoid cells used by the integral functionals below.
inline constexpr std::size_t kDefaultQuadratureCells = 4000;

// π(a) = exp(-∫₀^a μ). Throws DomainError for a outside [0, A].
double survival(const MortalityRate& mu, double a);

// π(a)/π(a-t) = exp(-∫_{a-t}^a μ), evaluated in log space. Requires
// 0 <= t <= a <= A.
double survival_ratio(const MortalityRate& mu, double a, double t);

// R = ∫₀^A β π da (composite trapezoid on `cells` uniform cells).
double reproduction_number(const FertilityRate& beta, const MortalityRate& mu,
                           std::size_t cells = kDefaultQuadratureCells);

// β̃(λ) = ∫₀^A β(a) e^{-λa} π(a) da.
double lotka_transform(const FertilityRate& beta, const MortalityRate& mu,
                       double lambda,
                       std::size_t cells = kDefaultQuadratureCells);

// Unique real λ* with β̃(λ*) = 1 (bisection on an expanding bracket).
double lotka_root(const FertilityRate& beta, const MortalityRate& mu,
                  std::size_t cells = kDefaultQuadratureCells);

// β rescaled so that reproduction_number(...) == target.
FertilityRate normalize_to_reproduction_number(
    const FertilityRate& beta, const MortalityRate& mu, double target,
    std::size_t cells = kDefaultQuadratureCells);

}  // namespace agepop
