#pragma once

#include <complex>
#include <span>
#include <vector>

#include "ymloop/group.hpp"
#include "ymloop/lattice.hpp"
#include "ymloop/loops.hpp"

namespace ymloop {

/// Assignment of a group matrix to every positive edge. Negative edges evaluate
/// to the adjoint of their reversal.
class Configuration {
public:
  /// Identity on every edge.
  Configuration(const Lattice& lat, const GroupSpec& g);
  /// Independent Haar matrices on every edge (the beta = 0 measure).
  static Configuration haar(const Lattice& lat, const GroupSpec& g, Rng& rng);

  const Lattice& lattice() const { return *lat_; }
  const GroupSpec& group() const { return g_; }

  const Matrix& link(int edge_index) const { return links_[edge_index]; }
  Matrix& link(int edge_index) { return links_[edge_index]; }
  /// Q_e for any directed edge (Q_{e^-1}^* on negative edges).
  Matrix operator[](DirectedEdge e) const;
  std::span<const Matrix> links() const { return links_; }

  /// Largest ||QQ* - I||_inf over edges.
  double max_unitarity_defect() const;
  /// Re-projects links whose defect exceeds `tol`; returns how many were touched.
  int retract_if_needed(double tol = GroupElement::kManifoldTolerance);

private:
  const Lattice* lat_;
  GroupSpec g_;
  std::vector<Matrix> links_;
};

struct ActionParams {
  double beta = 0.0;
  GroupSpec group;
};

/// Ordered product along a path. `acc` is right-multiplied in place.
void multiply_path(Matrix& acc, const Configuration& q, std::span<const DirectedEdge> path);
Matrix path_matrix(const Configuration& q, std::span<const DirectedEdge> path);

Matrix plaquette_matrix(const Configuration& q, const Plaquette& p);

/// S(Q) = N beta Re sum_{p in P+} Tr Q_p
double action(const Configuration& q, const ActionParams& params);

/// Sum of Q_f Q_g Q_h over plaquettes p = e f g h with p starting at e.
Matrix staple_sum(const Configuration& q, DirectedEdge e);

/// Half gradient (1/2) grad S(Q)_e for a positive edge e, in the explicit
/// -(N beta / 4) sum (Q_p - Q_p^*) Q_e form, with the trace correction for SU.
Matrix half_action_gradient(const Configuration& q, DirectedEdge e, const ActionParams& params);

/// Same quantity for any directed edge (p runs over plaquettes starting at e).
Matrix half_action_gradient_any(const Configuration& q, DirectedEdge e, const ActionParams& params);

/// grad S(Q)_e through the projection form N beta sum_p proj(Q_p^*) (Q_e^*)^-1.
Matrix action_gradient_projected(const Configuration& q, DirectedEdge e, const ActionParams& params);

std::complex<double> wilson_loop(const Configuration& q, const Loop& l);
/// Product of Wilson loops over the sequence; 1 for the empty sequence.
std::complex<double> wilson_sequence(const Configuration& q, const LoopSequence& s);

/// Q_e -> g_{u(e)} Q_e g_{v(e)}^-1 for a vertex field g.
Configuration gauge_transform(const Configuration& q, std::span<const Matrix> vertex_field);

}  // namespace ymloop
