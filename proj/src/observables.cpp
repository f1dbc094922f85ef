#include "ymloop/observables.hpp"

#include <stdexcept>

namespace ymloop {

Configuration::Configuration(const Lattice& lat, const GroupSpec& g)
    : lat_(&lat), g_(g), links_(lat.num_edges(), identity(g.n())) {}

Configuration Configuration::haar(const Lattice& lat, const GroupSpec& g, Rng& rng) {
  Configuration c(lat, g);
  for (auto& m : c.links_) m = haar_sample(g, rng).matrix();
  return c;
}

Matrix Configuration::operator[](DirectedEdge e) const {
  const Matrix& m = links_[e.index()];
  if (e.is_positive()) return m;
  return m.adjoint();
}

double Configuration::max_unitarity_defect() const {
  double worst = 0.0;
  for (const auto& m : links_) worst = std::max(worst, unitarity_defect(m));
  return worst;
}

int Configuration::retract_if_needed(double tol) {
  int touched = 0;
  for (auto& m : links_) {
    if (unitarity_defect(m) > tol) {
      m = retract_to_group(m, g_);
      ++touched;
    }
  }
  return touched;
}

void multiply_path(Matrix& acc, const Configuration& q, std::span<const DirectedEdge> path) {
  for (DirectedEdge e : path) {
    const Matrix& m = q.link(e.index());
    if (e.is_positive()) {
      acc = acc * m;
    } else {
      acc = acc * m.adjoint();
    }
  }
}

Matrix path_matrix(const Configuration& q, std::span<const DirectedEdge> path) {
  if (path.empty()) return identity(q.group().n());
  Matrix acc = q[path[0]];
  multiply_path(acc, q, path.subspan(1));
  return acc;
}

Matrix plaquette_matrix(const Configuration& q, const Plaquette& p) { return path_matrix(q, p.edges); }

double action(const Configuration& q, const ActionParams& params) {
  double sum = 0.0;
  for (const Plaquette& p : q.lattice().positive_plaquettes()) sum += plaquette_matrix(q, p).trace().real();
  return params.group.n() * params.beta * sum;
}

Matrix staple_sum(const Configuration& q, DirectedEdge e) {
  const int n = q.group().n();
  Matrix sum = Matrix::Zero(n, n);
  for (const Plaquette& p : q.lattice().plaquettes_through(e)) {
    sum += path_matrix(q, std::span<const DirectedEdge>(p.edges).subspan(1));
  }
  return sum;
}

Matrix half_action_gradient_any(const Configuration& q, DirectedEdge e, const ActionParams& params) {
  const int n = q.group().n();
  const Matrix qe = q[e];
  Matrix sum = Matrix::Zero(n, n);
  for (const Plaquette& p : q.lattice().plaquettes_through(e)) {
    const Matrix qp = qe * path_matrix(q, std::span<const DirectedEdge>(p.edges).subspan(1));
    Matrix diff = qp - qp.adjoint();
    if (params.group.kind() == GroupKind::SU) diff.diagonal().array() -= diff.trace() / static_cast<double>(n);
    sum += diff;
  }
  return (-0.25 * n * params.beta) * sum * qe;
}

Matrix half_action_gradient(const Configuration& q, DirectedEdge e, const ActionParams& params) {
  if (!e.is_positive()) throw std::invalid_argument("half_action_gradient: edge must be positively oriented");
  return half_action_gradient_any(q, e, params);
}

Matrix action_gradient_projected(const Configuration& q, DirectedEdge e, const ActionParams& params) {
  const int n = q.group().n();
  const Matrix qe = q[e];
  Matrix sum = Matrix::Zero(n, n);
  for (const Plaquette& p : q.lattice().plaquettes_through(e)) {
    sum += project_matrix(plaquette_matrix(q, p).adjoint(), params.group);
  }
  // (Q_e^*)^-1 = Q_e for unitary Q_e
  return (n * params.beta) * sum * qe.adjoint().inverse();
}

std::complex<double> wilson_loop(const Configuration& q, const Loop& l) {
  for (DirectedEdge e : l.edges())
    if (!q.lattice().contains(e)) throw std::out_of_range("wilson_loop: loop leaves the lattice");
  return path_matrix(q, l.edges()).trace();
}

std::complex<double> wilson_sequence(const Configuration& q, const LoopSequence& s) {
  std::complex<double> w = 1.0;
  for (const Loop& l : s.loops()) w *= wilson_loop(q, l);
  return w;
}

Configuration gauge_transform(const Configuration& q, std::span<const Matrix> vertex_field) {
  const Lattice& lat = q.lattice();
  if (static_cast<int>(vertex_field.size()) != lat.num_vertices()) {
    throw std::invalid_argument("gauge_transform: need one matrix per vertex");
  }
  Configuration out = q;
  for (int k = 0; k < lat.num_edges(); ++k) {
    const DirectedEdge e = DirectedEdge::positive(k);
    out.link(k) = vertex_field[lat.start(e)] * q.link(k) * vertex_field[lat.end(e)].adjoint();
  }
  return out;
}

}  // namespace ymloop
