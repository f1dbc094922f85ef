#include "ymloop/lattice.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace ymloop {

Lattice::Lattice(int dim, Coords lo, Coords hi) : dim_(dim), lo_(std::move(lo)), hi_(std::move(hi)) {
  if (dim_ < 2) throw std::invalid_argument("lattice dimension must be >= 2");
  if (static_cast<int>(lo_.size()) != dim_ || static_cast<int>(hi_.size()) != dim_) {
    throw std::invalid_argument("lattice corners must have " + std::to_string(dim_) + " coordinates");
  }
  extent_.resize(dim_);
  std::size_t count = 1;
  for (int a = 0; a < dim_; ++a) {
    if (hi_[a] <= lo_[a]) {
      throw std::invalid_argument("degenerate box: zero extent along axis " + std::to_string(a));
    }
    extent_[a] = hi_[a] - lo_[a] + 1;
    count *= static_cast<std::size_t>(extent_[a]);
  }

  vertices_.reserve(count);
  Coords x = lo_;
  for (std::size_t v = 0; v < count; ++v) {
    vertices_.push_back(x);
    for (int a = dim_ - 1; a >= 0; --a) {
      if (++x[a] <= hi_[a]) break;
      x[a] = lo_[a];
    }
  }

  edge_lookup_.assign(count * dim_, -1);
  for (int v = 0; v < num_vertices(); ++v) {
    for (int a = 0; a < dim_; ++a) {
      if (vertices_[v][a] < hi_[a]) {
        edge_lookup_[v * dim_ + a] = static_cast<int>(edge_start_.size());
        edge_start_.push_back(v);
        edge_dir_.push_back(a);
      }
    }
  }

  auto edge_at = [&](int v, int a) { return DirectedEdge::positive(edge_lookup_[v * dim_ + a]); };
  auto shifted = [&](int v, int a) {
    Coords y = vertices_[v];
    ++y[a];
    return *vertex_id(y);
  };

  std::vector<Plaquette> all;
  for (int v = 0; v < num_vertices(); ++v) {
    for (int mu = 0; mu < dim_; ++mu) {
      for (int nu = mu + 1; nu < dim_; ++nu) {
        if (vertices_[v][mu] >= hi_[mu] || vertices_[v][nu] >= hi_[nu]) continue;
        const int vmu = shifted(v, mu);
        const int vnu = shifted(v, nu);
        const int square = static_cast<int>(positive_.size());
        // v -> v+nu -> v+nu+mu -> v+mu -> v : v+nu is lexicographically below v+mu for mu < nu
        Plaquette p{{edge_at(v, nu), edge_at(vnu, mu), edge_at(vmu, nu).reversed(), edge_at(v, mu).reversed()},
                    square,
                    false};
        positive_.push_back(p);
        Plaquette r{{p.edges[3].reversed(), p.edges[2].reversed(), p.edges[1].reversed(), p.edges[0].reversed()},
                    square,
                    true};
        for (const Plaquette& base : {p, r}) {
          for (int k = 0; k < 4; ++k) {
            Plaquette rot = base;
            std::rotate(rot.edges.begin(), rot.edges.begin() + k, rot.edges.end());
            all.push_back(rot);
          }
        }
      }
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Plaquette& a, const Plaquette& b) { return a.edges[0] < b.edges[0]; });
  plaquettes_ = std::move(all);

  through_offset_.assign(2 * num_edges() + 1, 0);
  for (const Plaquette& p : plaquettes_) ++through_offset_[p.edges[0].code() + 1];
  for (std::size_t i = 1; i < through_offset_.size(); ++i) through_offset_[i] += through_offset_[i - 1];
}

std::optional<int> Lattice::vertex_id(const Coords& x) const {
  if (static_cast<int>(x.size()) != dim_) return std::nullopt;
  int id = 0;
  for (int a = 0; a < dim_; ++a) {
    if (x[a] < lo_[a] || x[a] > hi_[a]) return std::nullopt;
    id = id * extent_[a] + (x[a] - lo_[a]);
  }
  return id;
}

int Lattice::start(DirectedEdge e) const {
  const int s = edge_start_[e.index()];
  if (e.is_positive()) return s;
  Coords y = vertices_[s];
  ++y[edge_dir_[e.index()]];
  return *vertex_id(y);
}

int Lattice::end(DirectedEdge e) const { return start(e.reversed()); }

std::optional<DirectedEdge> Lattice::step(int v, int axis, int sign) const {
  if (axis < 0 || axis >= dim_ || v < 0 || v >= num_vertices()) return std::nullopt;
  if (sign > 0) {
    const int id = edge_lookup_[v * dim_ + axis];
    if (id < 0) return std::nullopt;
    return DirectedEdge::positive(id);
  }
  Coords y = vertices_[v];
  --y[axis];
  const auto u = vertex_id(y);
  if (!u) return std::nullopt;
  return DirectedEdge::positive(edge_lookup_[*u * dim_ + axis]).reversed();
}

std::span<const Plaquette> Lattice::plaquettes_through(DirectedEdge e) const {
  if (!contains(e)) throw std::out_of_range("plaquettes_through: edge not in lattice");
  const int b = through_offset_[e.code()];
  const int n = through_offset_[e.code() + 1] - b;
  return std::span<const Plaquette>(plaquettes_).subspan(b, n);
}

namespace {
std::string coords_str(const Coords& x) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
  os << ')';
  return os.str();
}
}  // namespace

std::string Lattice::describe() const {
  std::ostringstream os;
  os << "d=" << dim_ << " lo=" << coords_str(lo_) << " hi=" << coords_str(hi_);
  return os.str();
}

std::string Lattice::describe(DirectedEdge e) const {
  return coords_str(vertices_[start(e)]) + "->" + coords_str(vertices_[end(e)]);
}

Lattice build_lattice(int dim, const Coords& lo, const Coords& hi) { return Lattice(dim, lo, hi); }

}  // namespace ymloop
