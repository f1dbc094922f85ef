#include "ymloop/loops.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace ymloop {

// --- reduction and canonical form ----------------------------------------------

Path reduce_cycle(std::span<const DirectedEdge> cycle) {
  Path word;
  word.reserve(cycle.size());
  for (DirectedEdge e : cycle) {
    if (!word.empty() && word.back() == e.reversed()) {
      word.pop_back();
    } else {
      word.push_back(e);
    }
  }
  std::size_t lo = 0, hi = word.size();
  while (hi - lo >= 2 && word[lo] == word[hi - 1].reversed()) {
    ++lo;
    --hi;
  }
  return Path(word.begin() + static_cast<std::ptrdiff_t>(lo), word.begin() + static_cast<std::ptrdiff_t>(hi));
}

Path minimal_rotation(std::span<const DirectedEdge> cycle) {
  const std::size_t n = cycle.size();
  std::size_t best = 0;
  for (std::size_t r = 1; r < n; ++r) {
    for (std::size_t k = 0; k < n; ++k) {
      const DirectedEdge a = cycle[(r + k) % n];
      const DirectedEdge b = cycle[(best + k) % n];
      if (a != b) {
        if (a < b) best = r;
        break;
      }
    }
  }
  Path out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(cycle[(best + k) % n]);
  return out;
}

bool is_closed(const Lattice& lat, std::span<const DirectedEdge> path) {
  if (path.empty()) return false;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!lat.contains(path[i])) return false;
    if (lat.end(path[i]) != lat.start(path[(i + 1) % path.size()])) return false;
  }
  return true;
}

bool has_backtrack(std::span<const DirectedEdge> cycle) {
  const std::size_t n = cycle.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (n >= 2 && cycle[(i + 1) % n] == cycle[i].reversed()) return true;
  }
  return false;
}

std::optional<Loop> Loop::from_closed_path(std::span<const DirectedEdge> cycle) {
  Path reduced = reduce_cycle(cycle);
  if (reduced.empty()) return std::nullopt;
  return Loop(minimal_rotation(reduced));
}

Loop Loop::reversed() const {
  Path r;
  r.reserve(edges_.size());
  for (auto it = edges_.rbegin(); it != edges_.rend(); ++it) r.push_back(it->reversed());
  return Loop(minimal_rotation(r));
}

std::optional<Loop> backtrack_erase(const Lattice& lat, std::span<const DirectedEdge> cycle) {
  if (!is_closed(lat, cycle)) throw std::invalid_argument("backtrack_erase: edge sequence is not a closed path");
  return Loop::from_closed_path(cycle);
}

Loop plaquette_loop(const Plaquette& p) { return *Loop::from_closed_path(p.edges); }

LoopSequence::LoopSequence(const std::vector<std::optional<Loop>>& loops) {
  for (const auto& l : loops)
    if (l) loops_.push_back(*l);
}

int LoopSequence::length() const {
  int n = 0;
  for (const Loop& l : loops_) n += l.length();
  return n;
}

int WindingTable::total(int edge_index) const {
  const auto it = per_loop.find(edge_index);
  if (it == per_loop.end()) return 0;
  int t = 0;
  for (int v : it->second) t += v;
  return t;
}

LoopStats lengths_and_windings(const LoopSequence& s) {
  LoopStats st;
  st.length = s.length();
  const std::size_t m = s.loops().size();
  for (std::size_t i = 0; i < m; ++i) {
    for (DirectedEdge e : s.loops()[i].edges()) {
      auto& row = st.windings.per_loop[e.index()];
      row.resize(m, 0);
      row[i] += e.is_positive() ? 1 : -1;
    }
  }
  for (const auto& [edge, row] : st.windings.per_loop) {
    std::int64_t t = 0;
    for (int v : row) t += v;
    st.ell += t * t;
  }
  return st;
}

// --- operations ----------------------------------------------------------------

namespace {

/// cycle rotated to start at location x
Path rotated(std::span<const DirectedEdge> cycle, int x) {
  Path out;
  out.reserve(cycle.size());
  for (std::size_t k = 0; k < cycle.size(); ++k) out.push_back(cycle[(x + k) % cycle.size()]);
  return out;
}

Path inverse(std::span<const DirectedEdge> path) {
  Path out;
  out.reserve(path.size());
  for (auto it = path.rbegin(); it != path.rend(); ++it) out.push_back(it->reversed());
  return out;
}

Path concat(std::initializer_list<std::span<const DirectedEdge>> parts) {
  Path out;
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

enum class Match { same, inverse };

Match match_locations(std::span<const DirectedEdge> a, int x, std::span<const DirectedEdge> b, int y, const char* who) {
  const int na = static_cast<int>(a.size());
  const int nb = static_cast<int>(b.size());
  if (x < 0 || x >= na || y < 0 || y >= nb) throw std::invalid_argument(std::string(who) + ": location out of range");
  if (b[y] == a[x]) return Match::same;
  if (b[y] == a[x].reversed()) return Match::inverse;
  throw std::invalid_argument(std::string(who) + ": locations do not carry matching edges");
}

/// Writes a cycle as e B f C with e at x and f at y, so that with a = {} the
/// operation formulas read directly off (B, C).
struct TwoLocations {
  DirectedEdge e;
  Path b, c;
  Match match;
};

TwoLocations decompose(std::span<const DirectedEdge> cycle, int x, int y, const char* who) {
  if (x == y) throw std::invalid_argument(std::string(who) + ": locations must differ");
  const Match m = match_locations(cycle, x, cycle, y, who);
  const int n = static_cast<int>(cycle.size());
  const Path r = rotated(cycle, x);
  const int gap = ((y - x) % n + n) % n;
  TwoLocations out{r[0], Path(r.begin() + 1, r.begin() + gap), Path(r.begin() + gap + 1, r.end()), m};
  return out;
}

}  // namespace

SplitResult split(std::span<const DirectedEdge> cycle, int x, int y) {
  const TwoLocations t = decompose(cycle, x, y, "split");
  const std::span<const DirectedEdge> e(&t.e, 1);
  if (t.match == Match::same) {
    // l = a e b e c -> ([a e c], [b e])
    return {Loop::from_closed_path(concat({e, t.c})), Loop::from_closed_path(concat({t.b, e}))};
  }
  // l = a e b e^-1 c -> ([a c], [b])
  return {Loop::from_closed_path(t.c), Loop::from_closed_path(t.b)};
}

SplitResult split(const Loop& l, int x, int y) { return split(std::span<const DirectedEdge>(l.edges()), x, y); }

std::optional<Loop> twist(std::span<const DirectedEdge> cycle, int x, int y) {
  const TwoLocations t = decompose(cycle, x, y, "twist");
  const Path binv = inverse(t.b);
  if (t.match == Match::same) {
    // l = a e b e c -> [a b^-1 c]
    return Loop::from_closed_path(concat({binv, t.c}));
  }
  // l = a e b e^-1 c -> [a e b^-1 e^-1 c]
  const DirectedEdge ei = t.e.reversed();
  return Loop::from_closed_path(
      concat({std::span<const DirectedEdge>(&t.e, 1), binv, std::span<const DirectedEdge>(&ei, 1), t.c}));
}

std::optional<Loop> twist(const Loop& l, int x, int y) { return twist(std::span<const DirectedEdge>(l.edges()), x, y); }

std::optional<Loop> merge(std::span<const DirectedEdge> a, std::span<const DirectedEdge> b, int x, int y, Sign sign) {
  const Match m = match_locations(a, x, b, y, "merge");
  const Path ra = rotated(a, x);  // e B
  const Path rb = rotated(b, y);  // e D  or  e^-1 D
  const std::span<const DirectedEdge> e(ra.data(), 1);
  const std::span<const DirectedEdge> bb(ra.data() + 1, ra.size() - 1);
  const std::span<const DirectedEdge> d(rb.data() + 1, rb.size() - 1);
  if (m == Match::same) {
    // l = a e b, l' = c e d:  (+) [a e d c e b],  (-) [a c^-1 d^-1 b]
    if (sign == Sign::plus) return Loop::from_closed_path(concat({e, d, e, bb}));
    return Loop::from_closed_path(concat({inverse(d), bb}));
  }
  // l' = c e^-1 d:  (+) [a e c^-1 d^-1 e b],  (-) [a d c b]
  if (sign == Sign::plus) return Loop::from_closed_path(concat({e, inverse(d), e, bb}));
  return Loop::from_closed_path(concat({d, bb}));
}

std::optional<Loop> merge(const Loop& a, const Loop& b, int x, int y, Sign sign) {
  return merge(std::span<const DirectedEdge>(a.edges()), std::span<const DirectedEdge>(b.edges()), x, y, sign);
}

std::optional<Loop> deform(const Loop& l, int x, const Plaquette& p, Sign sign) {
  if (x < 0 || x >= l.length()) throw std::invalid_argument("deform: location out of range");
  const DirectedEdge e = l.at(x);
  for (int y = 0; y < 4; ++y) {
    if (p.edges[y] == e || p.edges[y] == e.reversed()) {
      return merge(std::span<const DirectedEdge>(l.edges()), std::span<const DirectedEdge>(p.edges), x, y, sign);
    }
  }
  throw std::invalid_argument("deform: plaquette does not pass through e or e^-1");
}

ExpansionSets expansion_sets(const Loop& l, const Lattice& lat) {
  ExpansionSets out;
  for (int x = 0; x < l.length(); ++x) {
    const DirectedEdge e = l.at(x);
    if (!lat.contains(e)) throw std::invalid_argument("expansion_sets: loop leaves the lattice");
    for (const Plaquette& p : lat.plaquettes_through(e.reversed()))
      out.positive.push_back(LoopSequence(std::vector<Loop>{l, plaquette_loop(p)}));
    for (const Plaquette& p : lat.plaquettes_through(e))
      out.negative.push_back(LoopSequence(std::vector<Loop>{l, plaquette_loop(p)}));
  }
  return out;
}

// --- operation sets ------------------------------------------------------------

std::string_view op_set_name(OpSet op) {
  static constexpr std::array<std::string_view, kNumOpSets> names = {"S+", "S-", "T+",  "T-",  "M+", "M-",
                                                                      "MU+", "MU-", "D+", "D-", "E+", "E-"};
  return names[static_cast<int>(op)];
}

bool is_padded(const LoopSequence& s, const Lattice& lat) {
  for (const Loop& l : s.loops()) {
    for (DirectedEdge e : l.edges()) {
      if (!lat.contains(e)) return false;
      const Coords& v = lat.vertex(lat.start(e));
      for (int a = 0; a < lat.dim(); ++a) {
        if (v[a] - 1 < lat.lo()[a] || v[a] + 1 > lat.hi()[a]) return false;
      }
    }
  }
  return true;
}

namespace {

LoopSequence replace_one(const LoopSequence& s, int i, std::initializer_list<std::optional<Loop>> with) {
  std::vector<std::optional<Loop>> loops;
  for (int k = 0; k < s.size(); ++k) {
    if (k == i) {
      loops.insert(loops.end(), with.begin(), with.end());
    } else {
      loops.emplace_back(s.loops()[k]);
    }
  }
  return LoopSequence(loops);
}

LoopSequence replace_pair(const LoopSequence& s, int i, int j, const std::optional<Loop>& merged) {
  std::vector<std::optional<Loop>> loops;
  for (int k = 0; k < s.size(); ++k) {
    if (k == i) {
      loops.push_back(merged);
    } else if (k != j) {
      loops.emplace_back(s.loops()[k]);
    }
  }
  return LoopSequence(loops);
}

}  // namespace

OperationSets build_operation_sets(const LoopSequence& s, const Lattice& lat) {
  if (!is_padded(s, lat)) {
    throw PaddingViolation("loop sequence is not padded: some vertex within distance 1 of a loop is outside " +
                           lat.describe());
  }
  OperationSets out;
  const int m = s.size();
  for (int i = 0; i < m; ++i) {
    const Loop& l = s.loops()[i];
    const int n = l.length();
    // splittings and twistings over ordered location pairs
    for (int x = 0; x < n; ++x) {
      for (int y = 0; y < n; ++y) {
        if (x == y) continue;
        const DirectedEdge ex = l.at(x), ey = l.at(y);
        if (ey == ex) {
          const SplitResult sp = split(l, x, y);
          out[OpSet::split_plus].push_back(replace_one(s, i, {sp.first, sp.second}));
          out[OpSet::twist_minus].push_back(replace_one(s, i, {twist(l, x, y)}));
        } else if (ey == ex.reversed()) {
          const SplitResult sp = split(l, x, y);
          out[OpSet::split_minus].push_back(replace_one(s, i, {sp.first, sp.second}));
          out[OpSet::twist_plus].push_back(replace_one(s, i, {twist(l, x, y)}));
        }
      }
    }
    // mergers over ordered loop pairs
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      const Loop& lp = s.loops()[j];
      for (int x = 0; x < n; ++x) {
        for (int y = 0; y < lp.length(); ++y) {
          const DirectedEdge ex = l.at(x), ey = lp.at(y);
          if (ey != ex && ey != ex.reversed()) continue;
          LoopSequence plus = replace_pair(s, i, j, merge(l, lp, x, y, Sign::plus));
          LoopSequence minus = replace_pair(s, i, j, merge(l, lp, x, y, Sign::minus));
          if (ey == ex) {
            out[OpSet::merge_u_plus].push_back(plus);
          } else {
            out[OpSet::merge_u_minus].push_back(minus);
          }
          out[OpSet::merge_plus].push_back(std::move(plus));
          out[OpSet::merge_minus].push_back(std::move(minus));
        }
      }
    }
    // deformations and expansions
    for (int x = 0; x < n; ++x) {
      const DirectedEdge e = l.at(x);
      for (const Plaquette& p : lat.plaquettes_through(e)) {
        out[OpSet::deform_plus].push_back(replace_one(s, i, {deform(l, x, p, Sign::plus)}));
        out[OpSet::deform_minus].push_back(replace_one(s, i, {deform(l, x, p, Sign::minus)}));
        std::vector<Loop> with_p = s.loops();
        with_p.push_back(plaquette_loop(p));
        out[OpSet::expand_minus].emplace_back(std::move(with_p));
      }
      for (const Plaquette& p : lat.plaquettes_through(e.reversed())) {
        std::vector<Loop> with_p = s.loops();
        with_p.push_back(plaquette_loop(p));
        out[OpSet::expand_plus].emplace_back(std::move(with_p));
      }
    }
  }
  return out;
}

// --- text syntax ----------------------------------------------------------------

namespace {

constexpr std::string_view kAxisNames = "xyztuv";

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string coords_text(const Coords& x) {
  std::string out = "(";
  for (std::size_t i = 0; i < x.size(); ++i) out += (i ? "," : "") + std::to_string(x[i]);
  return out + ")";
}

}  // namespace

Loop parse_loop(const Lattice& lat, std::string_view text) {
  text = trim(text);
  if (text.empty() || text.front() != '(') throw LoopSyntaxError("loop '" + std::string(text) + "': expected '(' base vertex");
  const auto close = text.find(')');
  if (close == std::string_view::npos) throw LoopSyntaxError("loop '" + std::string(text) + "': missing ')'");
  Coords base;
  {
    std::string inner(text.substr(1, close - 1));
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        base.push_back(std::stoi(item, &used));
        if (!trim(std::string_view(item).substr(used)).empty()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw LoopSyntaxError("loop base vertex: bad coordinate '" + item + "'");
      }
    }
  }
  const auto start = lat.vertex_id(base);
  if (!start) throw LoopSyntaxError("loop base vertex " + coords_text(base) + " is not in the lattice");

  std::stringstream steps{std::string(text.substr(close + 1))};
  std::string tok;
  Path path;
  int at = *start;
  int k = 0;
  while (steps >> tok) {
    ++k;
    const std::string where = "step " + std::to_string(k) + " '" + tok + "'";
    if (tok.size() != 2 || (tok[0] != '+' && tok[0] != '-')) throw LoopSyntaxError(where + ": expected +<axis> or -<axis>");
    const auto axis = kAxisNames.find(tok[1]);
    if (axis == std::string_view::npos || static_cast<int>(axis) >= lat.dim()) {
      throw LoopSyntaxError(where + ": unknown axis for d=" + std::to_string(lat.dim()));
    }
    const auto e = lat.step(at, static_cast<int>(axis), tok[0] == '+' ? 1 : -1);
    if (!e) throw LoopSyntaxError(where + " leaves the lattice at " + coords_text(lat.vertex(at)));
    path.push_back(*e);
    at = lat.end(*e);
  }
  if (path.empty()) throw LoopSyntaxError("loop at " + coords_text(base) + " has no steps");
  if (at != *start) {
    throw LoopSyntaxError("loop at " + coords_text(base) + " does not close: step " + std::to_string(k) + " '" + tok +
                          "' ends at " + coords_text(lat.vertex(at)));
  }
  auto loop = Loop::from_closed_path(path);
  if (!loop) throw LoopSyntaxError("loop at " + coords_text(base) + " erases to a null cycle");
  return *loop;
}

LoopSequence parse_sequence(const Lattice& lat, std::string_view text) {
  std::vector<Loop> loops;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto semi = text.find(';', pos);
    const std::string_view part = trim(text.substr(pos, semi == std::string_view::npos ? text.npos : semi - pos));
    if (!part.empty()) loops.push_back(parse_loop(lat, part));
    if (semi == std::string_view::npos) break;
    pos = semi + 1;
  }
  return LoopSequence(std::move(loops));
}

std::string format_loop(const Lattice& lat, const Loop& l) {
  std::string out = coords_text(lat.vertex(lat.start(l.at(0))));
  for (DirectedEdge e : l.edges()) {
    out += ' ';
    out += e.is_positive() ? '+' : '-';
    out += kAxisNames[lat.direction(e)];
  }
  return out;
}

std::string format_sequence(const Lattice& lat, const LoopSequence& s) {
  std::string out;
  for (int i = 0; i < s.size(); ++i) {
    if (i) out += " ; ";
    out += format_loop(lat, s.loops()[i]);
  }
  return out;
}

}  // namespace ymloop
