// Independent reference implementations used to pin down expected values.
// Deliberately naive: exhaustive scans, textbook formulas, fixed-step
// integration. Nothing here shares code paths with the library under test.
#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace oracle {

using Complex = std::complex<double>;

// Edges by pairwise distance threshold (inclusive, with relative slack).
inline std::vector<std::pair<int, int>> edges_within(
    const std::vector<std::array<double, 2>>& coords, double radius) {
  std::vector<std::pair<int, int>> out;
  const int n = static_cast<int>(coords.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double dx = coords[i][0] - coords[j][0];
      const double dy = coords[i][1] - coords[j][1];
      if (std::sqrt(dx * dx + dy * dy) <= radius * (1.0 + 1e-6))
        out.emplace_back(i, j);
    }
  return out;
}

inline bool independent(std::uint64_t mask,
                        const std::vector<std::pair<int, int>>& edges) {
  for (const auto& [i, j] : edges)
    if ((mask >> i & 1) && (mask >> j & 1)) return false;
  return true;
}

// Exhaustive maximum-independent-set enumeration over all 2^n masks.
inline std::pair<int, std::vector<std::uint64_t>> brute_mis(
    int n, const std::vector<std::pair<int, int>>& edges) {
  int best = 0;
  std::vector<std::uint64_t> states;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    if (!independent(mask, edges)) continue;
    const int k = std::popcount(mask);
    if (k > best) {
      best = k;
      states.clear();
    }
    if (k == best) states.push_back(mask);
  }
  return {best, states};
}

// Closed-form gauge potential of H = h . sigma (two levels):
//   A = (h x d_lambda h) . sigma / (2 |h|^2)
inline Eigen::Matrix2cd two_level_agp(const Eigen::Vector3d& h,
                                      const Eigen::Vector3d& dh) {
  const Eigen::Vector3d c = h.cross(dh) / (2.0 * h.squaredNorm());
  Eigen::Matrix2cd a;
  const Complex i(0.0, 1.0);
  a << c[2], c[0] - i * c[1], c[0] + i * c[1], -c[2];
  return a;
}

// Fixed-step classical Runge-Kutta for dy/dt = rhs(t, y).
inline Eigen::VectorXcd rk4_evolve(
    const std::function<Eigen::VectorXcd(double, const Eigen::VectorXcd&)>& rhs,
    Eigen::VectorXcd y, double t0, double t1, long steps) {
  const double h = (t1 - t0) / steps;
  for (long s = 0; s < steps; ++s) {
    const double t = t0 + s * h;
    const Eigen::VectorXcd k1 = rhs(t, y);
    const Eigen::VectorXcd k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
    const Eigen::VectorXcd k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
    const Eigen::VectorXcd k4 = rhs(t + h, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

// Gauge potential straight from the definition via Eigen's Hermitian solver.
inline Eigen::MatrixXcd direct_agp(const Eigen::MatrixXcd& h,
                                   const Eigen::MatrixXcd& dh,
                                   double gap_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const Eigen::VectorXd& e = es.eigenvalues();
  const Eigen::MatrixXcd dht =
      es.eigenvectors().adjoint() * dh * es.eigenvectors();
  const Eigen::Index dim = h.rows();
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
  const Complex i(0.0, 1.0);
  for (Eigen::Index nn = 0; nn < dim; ++nn)
    for (Eigen::Index mm = 0; mm < dim; ++mm) {
      const double gap = e[nn] - e[mm];
      if (std::abs(gap) > gap_tol) a(mm, nn) = i * dht(mm, nn) / gap;
    }
  return es.eigenvectors() * a * es.eigenvectors().adjoint();
}

// Symmetric-difference numerical derivative.
inline double fd(const std::function<double(double)>& f, double x,
                 double step) {
  return (f(x + step) - f(x - step)) / (2.0 * step);
}

}  // namespace oracle
