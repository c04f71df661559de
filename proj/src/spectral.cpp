#include "agepop/spectral.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "agepop/errors.hpp"

namespace agepop {

namespace {

// ∫_lo^hi cos(m π x / L) dx
double cosine_integral(long m, double lo, double hi, double length) {
  if (m == 0) return hi - lo;
  const double w = static_cast<double>(m) * std::numbers::pi / length;
  return (std::sin(w * hi) - std::sin(w * lo)) / w;
}

}  // namespace

double neumann_eigenvalue(std::size_t k, double length) {
  if (!(length > 0.0)) throw DomainError("domain length must be positive");
  const double kk = static_cast<double>(k);
  return kk * kk * std::numbers::pi * std::numbers::pi / (length * length);
}

NeumannBasis::NeumannBasis(double length, std::size_t modes,
                           std::size_t grid_points)
    : length_(length), modes_(modes) {
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw DomainError("domain length must be positive and finite");
  }
  if (modes == 0) throw DomainError("at least one spatial mode is required");
  if (grid_points < 2) throw DomainError("spatial grid needs at least 2 points");
  const auto n = static_cast<Eigen::Index>(grid_points);
  grid_ = Eigen::VectorXd::LinSpaced(n, 0.0, length);
  const double h = length / static_cast<double>(grid_points - 1);
  weights_ = Eigen::VectorXd::Constant(n, h);
  weights_(0) *= 0.5;
  weights_(n - 1) *= 0.5;
  samples_.resize(n, static_cast<Eigen::Index>(modes));
  for (std::size_t k = 0; k < modes; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      samples_(i, static_cast<Eigen::Index>(k)) = phi(k, grid_(i));
    }
  }
}

double NeumannBasis::normalization(std::size_t k) const {
  return k == 0 ? std::sqrt(1.0 / length_) : std::sqrt(2.0 / length_);
}

double NeumannBasis::phi(std::size_t k, double x) const {
  return normalization(k) *
         std::cos(static_cast<double>(k) * std::numbers::pi * x / length_);
}

ModeCoefficients NeumannBasis::project(const Eigen::VectorXd& f) const {
  if (f.size() != grid_.size()) {
    std::ostringstream os;
    os << "project: profile has " << f.size() << " samples, grid has "
       << grid_.size();
    throw ShapeError(os.str());
  }
  return samples_.transpose() * weights_.cwiseProduct(f);
}

Eigen::VectorXd NeumannBasis::reconstruct(const ModeCoefficients& c) const {
  if (c.size() != static_cast<Eigen::Index>(modes_)) {
    throw ShapeError("reconstruct: coefficient count differs from mode count");
  }
  return samples_ * c;
}

ModeCoefficients NeumannBasis::heat_propagate(const ModeCoefficients& c,
                                              double t) const {
  if (t < 0.0) throw DomainError("heat_propagate: negative duration");
  if (c.size() != static_cast<Eigen::Index>(modes_)) {
    throw ShapeError("heat_propagate: coefficient count differs from mode count");
  }
  ModeCoefficients out = c;
  for (std::size_t k = 0; k < modes_; ++k) {
    out(static_cast<Eigen::Index>(k)) *= std::exp(-eigenvalue(k) * t);
  }
  return out;
}

Eigen::MatrixXd NeumannBasis::gram() const {
  return samples_.transpose() * weights_.asDiagonal() * samples_;
}

Eigen::MatrixXd NeumannBasis::indicator_gram(double lo, double hi) const {
  if (!(lo >= 0.0) || !(hi <= length_) || !(lo < hi)) {
    throw DomainError("indicator interval must satisfy 0 <= lo < hi <= L");
  }
  const auto k_count = static_cast<Eigen::Index>(modes_);
  Eigen::MatrixXd g(k_count, k_count);
  for (Eigen::Index j = 0; j < k_count; ++j) {
    for (Eigen::Index k = 0; k <= j; ++k) {
      const double scale = normalization(static_cast<std::size_t>(j)) *
                           normalization(static_cast<std::size_t>(k)) * 0.5;
      const double v = scale * (cosine_integral(j - k, lo, hi, length_) +
                                cosine_integral(j + k, lo, hi, length_));
      g(j, k) = v;
      g(k, j) = v;
    }
  }
  return g;
}

}  // namespace agepop
