#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ymloop/lattice.hpp"
#include "ymloop/loops.hpp"

namespace ymloop {

/// Quadrature grid size per free edge and the gauge tree (positive edge ids fixed to angle 0).
struct QuadratureSpec {
  int n_points = 32;
  std::vector<int> gauge_tree;
  std::vector<int> free_edges;  // complement of the tree, ascending

  /// Throws std::invalid_argument unless n_points >= 8 and the tree spans lat.
  void validate(const Lattice& lat) const;
};

/// Largest tensor grid (n_points^free_edges) the oracle will walk.
inline constexpr std::uint64_t kOracleNodeBudget = std::uint64_t{1} << 28;

class OracleBudgetExceeded : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Breadth-first spanning tree from `root` (default: the smallest vertex), neighbours
/// visited by axis then sign. Throws std::invalid_argument if the lattice is disconnected
/// or has no plaquette.
QuadratureSpec gauge_fix(const Lattice& lat, int n_points = 32, int root = 0);

/// phi(s) for U(1): periodic trapezoid over the free-edge angles of W_s exp(beta sum_p cos theta_p),
/// divided by the same sum without W_s.
std::complex<double> exact_phi_u1(const Lattice& lat, double beta, const LoopSequence& s, const QuadratureSpec& spec);

}  // namespace ymloop
