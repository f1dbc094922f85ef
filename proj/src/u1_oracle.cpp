#include "ymloop/u1_oracle.hpp"

#include <cmath>
#include <deque>
#include <numbers>
#include <numeric>
#include <string>

namespace ymloop {

namespace {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

}  // namespace

void QuadratureSpec::validate(const Lattice& lat) const {
  if (n_points < 8) throw std::invalid_argument("quadrature needs n_points >= 8");
  if (static_cast<int>(gauge_tree.size()) != lat.num_vertices() - 1)
    throw std::invalid_argument("gauge tree must have |V| - 1 edges");
  DisjointSets ds(lat.num_vertices());
  std::vector<bool> in_tree(lat.num_edges(), false);
  for (int k : gauge_tree) {
    if (k < 0 || k >= lat.num_edges()) throw std::invalid_argument("gauge tree edge outside the lattice");
    const DirectedEdge e = DirectedEdge::positive(k);
    if (!ds.unite(lat.start(e), lat.end(e))) throw std::invalid_argument("gauge tree contains a cycle");
    in_tree[k] = true;
  }
  std::vector<int> expected;
  for (int k = 0; k < lat.num_edges(); ++k)
    if (!in_tree[k]) expected.push_back(k);
  if (expected != free_edges) throw std::invalid_argument("free edges are not the complement of the gauge tree");
}

QuadratureSpec gauge_fix(const Lattice& lat, int n_points, int root) {
  if (lat.positive_plaquettes().empty()) throw std::invalid_argument("gauge_fix: lattice has no plaquette");
  if (root < 0 || root >= lat.num_vertices()) throw std::invalid_argument("gauge_fix: root outside the lattice");
  QuadratureSpec spec;
  spec.n_points = n_points;
  std::vector<bool> seen(lat.num_vertices(), false);
  std::vector<bool> in_tree(lat.num_edges(), false);
  std::deque<int> queue{root};
  seen[root] = true;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int axis = 0; axis < lat.dim(); ++axis) {
      for (int sign : {1, -1}) {
        const auto e = lat.step(v, axis, sign);
        if (!e) continue;
        const int w = lat.end(*e);
        if (seen[w]) continue;
        seen[w] = true;
        in_tree[e->index()] = true;
        queue.push_back(w);
      }
    }
  }
  for (int v = 0; v < lat.num_vertices(); ++v)
    if (!seen[v]) throw std::invalid_argument("gauge_fix: lattice is disconnected");
  for (int k = 0; k < lat.num_edges(); ++k) (in_tree[k] ? spec.gauge_tree : spec.free_edges).push_back(k);
  spec.validate(lat);
  return spec;
}

namespace {

struct Walker {
  int n;
  int levels;
  std::vector<std::vector<int>> completing;               // level -> plaquettes closing there
  std::vector<std::vector<std::pair<int, int>>> terms;    // plaquette -> (level, sign)
  std::vector<int> winding;                               // level -> t(e) of the sequence
  std::vector<double> weight_table;                       // exp(beta cos(2 pi k / n) - |beta|)
  std::vector<std::complex<double>> phase_table;          // exp(2 pi i k / n)
  std::vector<int> j;
  double z = 0.0;
  std::complex<double> a = 0.0;

  void walk(int level, double w, long phase) {
    if (level == levels) {
      z += w;
      a += w * phase_table[((phase % n) + n) % n];
      return;
    }
    for (int k = 0; k < n; ++k) {
      j[level] = k;
      double wk = w;
      for (int p : completing[level]) {
        long idx = 0;
        for (auto [lv, sign] : terms[p]) idx += sign * j[lv];
        wk *= weight_table[((idx % n) + n) % n];
      }
      walk(level + 1, wk, phase + static_cast<long>(winding[level]) * k);
    }
  }
};

}  // namespace

std::complex<double> exact_phi_u1(const Lattice& lat, double beta, const LoopSequence& s, const QuadratureSpec& spec) {
  spec.validate(lat);
  if (!std::isfinite(beta)) throw std::invalid_argument("exact_phi_u1: beta must be finite");
  const int free = static_cast<int>(spec.free_edges.size());
  double nodes = std::pow(static_cast<double>(spec.n_points), free);
  if (nodes > static_cast<double>(kOracleNodeBudget)) {
    throw OracleBudgetExceeded("exact_phi_u1: " + std::to_string(spec.n_points) + "^" + std::to_string(free) +
                               " grid nodes exceed the oracle budget of 2^28");
  }

  std::vector<int> level_of(lat.num_edges(), -1);
  for (int k = 0; k < free; ++k) level_of[spec.free_edges[k]] = k;

  Walker w{spec.n_points, free};
  w.completing.resize(free);
  w.winding.assign(free, 0);
  w.j.assign(free, 0);
  const double tau = 2.0 * std::numbers::pi / spec.n_points;
  for (int k = 0; k < spec.n_points; ++k) {
    w.weight_table.push_back(std::exp(beta * std::cos(tau * k) - std::abs(beta)));
    w.phase_table.push_back(std::polar(1.0, tau * k));
  }

  // Plaquettes with no free edge contribute a constant factor that cancels.
  for (const Plaquette& p : lat.positive_plaquettes()) {
    std::vector<std::pair<int, int>> t;
    int last = -1;
    for (DirectedEdge e : p.edges) {
      const int lv = level_of[e.index()];
      if (lv < 0) continue;
      t.emplace_back(lv, e.is_positive() ? 1 : -1);
      last = std::max(last, lv);
    }
    if (last < 0) continue;
    w.completing[last].push_back(static_cast<int>(w.terms.size()));
    w.terms.push_back(std::move(t));
  }

  for (const Loop& l : s.loops()) {
    for (DirectedEdge e : l.edges()) {
      if (!lat.contains(e)) throw std::out_of_range("exact_phi_u1: loop leaves the lattice");
      const int lv = level_of[e.index()];
      if (lv >= 0) w.winding[lv] += e.is_positive() ? 1 : -1;
    }
  }

  if (free == 0) return 1.0;
  w.walk(0, 1.0, 0);
  return w.a / w.z;
}

}  // namespace ymloop
