#pragma once

// Cosine eigenbasis of the Neumann Laplacian on (0, L), with projection onto
// and reconstruction from a uniform spatial grid.

#include <cstddef>

#include <Eigen/Dense>

namespace agepop {

using ModeCoefficients = Eigen::VectorXd;

// k²π²/L².
double neumann_eigenvalue(std::size_t k, double length);

class NeumannBasis {
 public:
  NeumannBasis(double length, std::size_t modes, std::size_t grid_points = 512);

  double length() const { return length_; }
  std::size_t modes() const { return modes_; }
  std::size_t grid_points() const { return static_cast<std::size_t>(grid_.size()); }
  const Eigen::VectorXd& grid() const { return grid_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  double eigenvalue(std::size_t k) const { return neumann_eigenvalue(k, length_); }
  // L²-orthonormal scaling: √(1/L) for k = 0, √(2/L) otherwise.
  double normalization(std::size_t k) const;
  double phi(std::size_t k, double x) const;

  // Columns are φ_k sampled on the grid.
  const Eigen::MatrixXd& samples() const { return samples_; }

  ModeCoefficients project(const Eigen::VectorXd& f) const;
  Eigen::VectorXd reconstruct(const ModeCoefficients& c) const;
  ModeCoefficients heat_propagate(const ModeCoefficients& c, double t) const;

  // Discrete Gram matrix ⟨φ_j, φ_k⟩ under the grid quadrature.
  Eigen::MatrixXd gram() const;
  // Exact ⟨1_[lo,hi] φ_j, φ_k⟩; equals the identity for [0, L].
  Eigen::MatrixXd indicator_gram(double lo, double hi) const;

 private:
  double length_;
  std::size_t modes_;
  Eigen::VectorXd grid_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd samples_;
};

}  // namespace agepop
