#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ymloop {

using Coords = std::vector<int>;

/// A lattice edge with orientation. Encoded as 2k for the positive edge k of the
/// lattice and 2k+1 for its reversal, so reversal is a bit flip and the integer
/// order is the total order used for canonical loop rotations.
class DirectedEdge {
public:
  constexpr DirectedEdge() = default;
  static constexpr DirectedEdge positive(int index) { return DirectedEdge(2 * index); }
  static constexpr DirectedEdge from_code(int code) { return DirectedEdge(code); }

  constexpr int code() const { return code_; }
  constexpr int index() const { return code_ >> 1; }
  constexpr bool is_positive() const { return (code_ & 1) == 0; }
  constexpr DirectedEdge reversed() const { return DirectedEdge(code_ ^ 1); }

  friend constexpr auto operator<=>(DirectedEdge, DirectedEdge) = default;

private:
  constexpr explicit DirectedEdge(int code) : code_(code) {}
  int code_ = 0;
};

constexpr DirectedEdge reverse_edge(DirectedEdge e) { return e.reversed(); }

/// A closed length-4 path around a unit square. `square` indexes the positive
/// representative in Lattice::positive_plaquettes(); `reversed` tells whether this
/// path runs against that representative (so Tr Q_p is the conjugate).
struct Plaquette {
  std::array<DirectedEdge, 4> edges;
  int square = 0;
  bool reversed = false;

  friend bool operator==(const Plaquette&, const Plaquette&) = default;
};

/// Open-boundary box [lo, hi] in Z^d with lexicographic enumeration of vertices,
/// positive edges and plaquettes.
class Lattice {
public:
  Lattice(int dim, Coords lo, Coords hi);

  int dim() const { return dim_; }
  const Coords& lo() const { return lo_; }
  const Coords& hi() const { return hi_; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_edges() const { return static_cast<int>(edge_start_.size()); }
  const Coords& vertex(int v) const { return vertices_[v]; }
  std::optional<int> vertex_id(const Coords& x) const;

  int start(DirectedEdge e) const;
  int end(DirectedEdge e) const;
  /// Axis of the underlying edge.
  int direction(DirectedEdge e) const { return edge_dir_[e.index()]; }
  /// Edge leaving `v` along +axis (sign > 0) or -axis, if it stays inside the box.
  std::optional<DirectedEdge> step(int v, int axis, int sign) const;
  bool contains(DirectedEdge e) const { return e.index() >= 0 && e.index() < num_edges(); }

  /// All plaquettes of the box (8 per unit square), grouped by first edge.
  std::span<const Plaquette> plaquettes() const { return plaquettes_; }
  /// Representatives whose first edge starts at the lexicographically smallest
  /// vertex and ends at the second smallest.
  std::span<const Plaquette> positive_plaquettes() const { return positive_; }
  /// Plaquettes p with p's first edge equal to e.
  std::span<const Plaquette> plaquettes_through(DirectedEdge e) const;
  /// Positive representative of the cyclic/reversal class of p.
  const Plaquette& canonical_plaquette(const Plaquette& p) const { return positive_[p.square]; }

  std::string describe() const;
  std::string describe(DirectedEdge e) const;

private:
  int dim_;
  Coords lo_, hi_;
  std::vector<int> extent_;
  std::vector<Coords> vertices_;
  std::vector<int> edge_start_, edge_dir_;
  std::vector<int> edge_lookup_;  // vertex * dim + axis -> positive edge id or -1
  std::vector<Plaquette> plaquettes_;
  std::vector<int> through_offset_;  // by edge code, size 2E+1
  std::vector<Plaquette> positive_;
};

Lattice build_lattice(int dim, const Coords& lo, const Coords& hi);

}  // namespace ymloop
