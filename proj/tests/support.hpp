#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

#include "ecmpc/armav.hpp"

namespace ecmpc::testing {

// z_t = sum Phi_i z_{t-i} + a_t - sum Theta_i a_{t-i}, started from zero and
// run for `burn` extra samples that are dropped.
inline Eigen::MatrixXd simulate_armav(const MatrixList& phi, const MatrixList& theta, int length, double noise_std,
                                      std::uint64_t seed, int burn = 500) {
  const Eigen::Index r = !phi.empty() ? phi.front().rows() : theta.front().rows();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise_std);
  const int total = length + burn;
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(total, r);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(total, r);
  for (int t = 0; t < total; ++t) {
    for (Eigen::Index c = 0; c < r; ++c) a(t, c) = normal(rng);
    Eigen::VectorXd v = a.row(t).transpose();
    for (std::size_t i = 1; i <= phi.size(); ++i)
      if (t >= static_cast<int>(i)) v += phi[i - 1] * z.row(t - static_cast<int>(i)).transpose();
    for (std::size_t i = 1; i <= theta.size(); ++i)
      if (t >= static_cast<int>(i)) v -= theta[i - 1] * a.row(t - static_cast<int>(i)).transpose();
    z.row(t) = v.transpose();
  }
  return z.bottomRows(length);
}

// Spectral radius of the block companion matrix of {M_1..M_k}.
inline double companion_radius(const MatrixList& blocks) {
  if (blocks.empty()) return 0.0;
  const Eigen::Index r = blocks.front().rows();
  const Eigen::Index k = static_cast<Eigen::Index>(blocks.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(r * k, r * k);
  for (Eigen::Index i = 0; i < k; ++i) c.block(0, i * r, r, r) = blocks[static_cast<std::size_t>(i)];
  if (k > 1) c.bottomLeftCorner(r * (k - 1), r * (k - 1)).setIdentity();
  return c.eigenvalues().cwiseAbs().maxCoeff();
}

// Random r x r blocks rescaled until the companion radius is below `radius`.
inline MatrixList random_stable_blocks(int count, int r, double radius, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  MatrixList blocks(static_cast<std::size_t>(count), Eigen::MatrixXd(r, r));
  for (auto& b : blocks)
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) b(i, j) = uni(rng);
  while (companion_radius(blocks) >= radius)
    for (auto& b : blocks) b *= 0.8;
  return blocks;
}

// Exact I_1..I_len of Theta(B)^{-1} Phi(B):
// I_j = Phi_j - Theta_j + sum_{i=1}^{min(j-1,m)} Theta_i I_{j-i}.
inline InverseExpansion analytic_inverse(const MatrixList& phi, const MatrixList& theta, int len) {
  const Eigen::Index r = !phi.empty() ? phi.front().rows() : theta.front().rows();
  InverseExpansion inv;
  for (int j = 1; j <= len; ++j) {
    Eigen::MatrixXd ij = Eigen::MatrixXd::Zero(r, r);
    if (j <= static_cast<int>(phi.size())) ij += phi[static_cast<std::size_t>(j - 1)];
    if (j <= static_cast<int>(theta.size())) ij -= theta[static_cast<std::size_t>(j - 1)];
    for (int i = 1; i <= std::min(j - 1, static_cast<int>(theta.size())); ++i)
      ij += theta[static_cast<std::size_t>(i - 1)] * inv.coeffs[static_cast<std::size_t>(j - i - 1)];
    inv.coeffs.push_back(ij);
  }
  return inv;
}

inline double max_abs_diff(const MatrixList& a, const MatrixList& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace ecmpc::testing
