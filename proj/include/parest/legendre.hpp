#pragma once

#include "parest/quadrature.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>
#include <string>
#include <vector>

namespace parest {

/// Legendre polynomial P_q on the reference interval (-1, 1).
inline double legendre_ref(int q, double x) {
  if (q == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= q; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  return p1;
}

/// Partition 0 = t_0 < ... < t_N = T with a temporal polynomial degree per step.
/// Steps are indexed 0..N-1; step s spans I_s = (t_s, t_{s+1}) with size tau(s).
class TimePartition {
 public:
  TimePartition() = default;
  TimePartition(std::vector<double> nodes, std::vector<int> degrees)
      : nodes_(std::move(nodes)), degrees_(std::move(degrees)) {
    if (nodes_.size() < 2) throw std::invalid_argument("TimePartition: need at least one step");
    if (degrees_.size() != nodes_.size() - 1)
      throw std::invalid_argument("TimePartition: one degree per step required");
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
      if (!(nodes_[i] < nodes_[i + 1]))
        throw std::invalid_argument("TimePartition: nodes must be strictly increasing");
    for (int q : degrees_)
      if (q < 0) throw std::invalid_argument("TimePartition: degrees must be >= 0");
  }

  static TimePartition uniform(double T, int n_steps, int q) {
    std::vector<double> nodes(n_steps + 1);
    for (int i = 0; i <= n_steps; ++i) nodes[i] = T * double(i) / n_steps;
    nodes.back() = T;
    return TimePartition(std::move(nodes), std::vector<int>(n_steps, q));
  }

  /// Geometric partition with tau_{s+1} = ratio * tau_s.
  static TimePartition geometric(double T, int n_steps, double ratio, int q) {
    std::vector<double> nodes(n_steps + 1);
    double w = 1.0, acc = 0.0;
    std::vector<double> tau(n_steps);
    for (int i = 0; i < n_steps; ++i) {
      tau[i] = w;
      acc += w;
      w *= ratio;
    }
    nodes[0] = 0.0;
    for (int i = 0; i < n_steps; ++i) nodes[i + 1] = nodes[i] + tau[i] * T / acc;
    nodes.back() = T;
    return TimePartition(std::move(nodes), std::vector<int>(n_steps, q));
  }

  int n_steps() const { return int(nodes_.size()) - 1; }
  double t(int node) const { return nodes_.at(node); }
  double tau(int s) const { return nodes_.at(s + 1) - nodes_.at(s); }
  int degree(int s) const { return degrees_.at(s); }
  double final_time() const { return nodes_.back(); }
  const std::vector<double>& nodes() const { return nodes_; }

  /// Map t in the closure of I_s to the reference coordinate in [-1, 1].
  double reference_coord(int s, double t) const {
    const double xi = (2.0 * t - nodes_[s] - nodes_[s + 1]) / tau(s);
    if (xi < -1.0 - 1e-12 || xi > 1.0 + 1e-12)
      throw std::domain_error("TimePartition: t outside step interval");
    return std::clamp(xi, -1.0, 1.0);
  }

 private:
  std::vector<double> nodes_;
  std::vector<int> degrees_;
};

/// Mapped Legendre polynomial L_q on step s: L_q(t_{s+1}) = 1, L_q(t_s) = (-1)^q.
inline double legendre_eval(const TimePartition& part, int s, int q, double t) {
  return legendre_ref(q, part.reference_coord(s, t));
}

/// int_{I_s} |L_q|^2 dt = tau_s / (2q+1).
inline double legendre_mass(const TimePartition& part, int s, int q) {
  assert(q >= 0);
  return part.tau(s) / (2.0 * q + 1.0);
}

/// Value of L_q at the left endpoint of its step.
inline double legendre_left_value(int q) { return (q % 2 == 0) ? 1.0 : -1.0; }

/// int_{I_s} L_j' L_k dt: equals 2 when j > k with j+k odd, else 0
/// (step-independent; the affine map cancels).
inline double legendre_deriv_pairing(int j, int k) {
  return (j > k && ((j + k) % 2 == 1)) ? 2.0 : 0.0;
}

/// Expansion of d/dt L_j on step s in the Legendre basis:
/// L_j' = (2/tau) * sum_{m < j, j-m odd} (2m+1) L_m. Returns the coefficient of L_m.
inline double legendre_deriv_coeff(const TimePartition& part, int s, int j, int m) {
  if (m >= j || ((j - m) % 2 == 0)) return 0.0;
  return 2.0 / part.tau(s) * (2.0 * m + 1.0);
}

}  // namespace parest
