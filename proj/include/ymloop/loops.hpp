#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ymloop/lattice.hpp"

namespace ymloop {

using Path = std::vector<DirectedEdge>;

/// A cycle with no backtracking, stored as its lexicographically minimal rotation
/// (integer order of DirectedEdge codes). Two loops compare equal iff they are
/// the same cyclic class.
class Loop {
public:
  /// Erases backtracks of a closed edge sequence and canonicalizes. Returns
  /// nullopt when erasure empties the cycle. Closure is the caller's contract;
  /// use backtrack_erase() to validate it against a lattice.
  static std::optional<Loop> from_closed_path(std::span<const DirectedEdge> cycle);

  const Path& edges() const { return edges_; }
  int length() const { return static_cast<int>(edges_.size()); }
  DirectedEdge at(int location) const { return edges_[location]; }
  Loop reversed() const;

  friend auto operator<=>(const Loop&, const Loop&) = default;
  friend bool operator==(const Loop&, const Loop&) = default;

private:
  explicit Loop(Path canonical) : edges_(std::move(canonical)) {}
  Path edges_;
};

/// Free + cyclic reduction of an edge word (adjacent e e^-1 pairs, including across the wrap).
Path reduce_cycle(std::span<const DirectedEdge> cycle);
/// Rotation of `cycle` that is lexicographically minimal.
Path minimal_rotation(std::span<const DirectedEdge> cycle);
bool is_closed(const Lattice& lat, std::span<const DirectedEdge> path);
bool has_backtrack(std::span<const DirectedEdge> cycle);

/// Backtrack erasure [l] of a closed path; throws std::invalid_argument if the path is not closed.
std::optional<Loop> backtrack_erase(const Lattice& lat, std::span<const DirectedEdge> cycle);

Loop plaquette_loop(const Plaquette& p);

/// Ordered list of non-null loops: the minimal representation of a loop sequence.
class LoopSequence {
public:
  LoopSequence() = default;
  explicit LoopSequence(std::vector<Loop> loops) : loops_(std::move(loops)) {}
  /// Null entries are dropped.
  explicit LoopSequence(const std::vector<std::optional<Loop>>& loops);

  const std::vector<Loop>& loops() const { return loops_; }
  int size() const { return static_cast<int>(loops_.size()); }
  bool empty() const { return loops_.empty(); }
  /// |s| = sum of loop lengths.
  int length() const;

  friend bool operator==(const LoopSequence&, const LoopSequence&) = default;

private:
  std::vector<Loop> loops_;
};

/// t_i(e) per positive edge index (one entry per loop of the sequence).
struct WindingTable {
  std::map<int, std::vector<int>> per_loop;
  int total(int edge_index) const;
};

struct LoopStats {
  int length = 0;
  WindingTable windings;
  std::int64_t ell = 0;  // sum_e t(e)^2 over positive edges
};

LoopStats lengths_and_windings(const LoopSequence& s);

// --- loop operations --------------------------------------------------------
// Locations index the given edge sequence. For Loop overloads this is the
// canonical representative. All results are backtrack-erased (nullopt = null loop).

enum class Sign { plus, minus };

struct SplitResult {
  std::optional<Loop> first;   // [a e c] or [a c]
  std::optional<Loop> second;  // [b e] or [b]
};

SplitResult split(std::span<const DirectedEdge> cycle, int x, int y);
SplitResult split(const Loop& l, int x, int y);

std::optional<Loop> twist(std::span<const DirectedEdge> cycle, int x, int y);
std::optional<Loop> twist(const Loop& l, int x, int y);

/// Merger of two cycles at locations x (edge e in `a`) and y (e or e^-1 in `b`).
std::optional<Loop> merge(std::span<const DirectedEdge> a, std::span<const DirectedEdge> b, int x, int y, Sign sign);
std::optional<Loop> merge(const Loop& a, const Loop& b, int x, int y, Sign sign);

/// l (+)_x p or l (-)_x p: merger with p at the unique location of p carrying e_x or e_x^-1.
std::optional<Loop> deform(const Loop& l, int x, const Plaquette& p, Sign sign);

struct ExpansionSets {
  std::vector<LoopSequence> positive;  // (l, p) with p starting with e_x^-1
  std::vector<LoopSequence> negative;  // (l, p) with p starting with e_x
};

ExpansionSets expansion_sets(const Loop& l, const Lattice& lat);

// --- operation sets ---------------------------------------------------------

enum class OpSet {
  split_plus,
  split_minus,
  twist_plus,
  twist_minus,
  merge_plus,
  merge_minus,
  merge_u_plus,
  merge_u_minus,
  deform_plus,
  deform_minus,
  expand_plus,
  expand_minus,
};

inline constexpr int kNumOpSets = 12;
std::string_view op_set_name(OpSet op);
constexpr int loop_count_shift(OpSet op) {
  // m' - m for members of each set
  switch (op) {
    case OpSet::split_plus:
    case OpSet::split_minus:
    case OpSet::expand_plus:
    case OpSet::expand_minus: return 1;
    case OpSet::merge_plus:
    case OpSet::merge_minus:
    case OpSet::merge_u_plus:
    case OpSet::merge_u_minus: return -1;
    default: return 0;
  }
}

/// Multisets of loop sequences produced by one operation on s. Splittings and
/// twistings run over ordered location pairs (x, y) and (y, x); mergers over
/// ordered loop pairs (i, j) and (j, i). Merged loops take the slot of l_i;
/// expansion plaquettes are appended.
struct OperationSets {
  std::array<std::vector<LoopSequence>, kNumOpSets> sets;

  const std::vector<LoopSequence>& operator[](OpSet op) const { return sets[static_cast<int>(op)]; }
  std::vector<LoopSequence>& operator[](OpSet op) { return sets[static_cast<int>(op)]; }
};

class PaddingViolation : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Every vertex at distance <= 1 from a vertex of some loop lies in the box.
bool is_padded(const LoopSequence& s, const Lattice& lat);

/// Throws PaddingViolation when s is not padded in lat.
OperationSets build_operation_sets(const LoopSequence& s, const Lattice& lat);

// --- text syntax ------------------------------------------------------------
// A loop is "(x0,x1,..) +x +y -x -y": a base vertex followed by unit steps along
// axes x, y, z, t, u, v. A sequence separates loops with ';'.

class LoopSyntaxError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

Loop parse_loop(const Lattice& lat, std::string_view text);
LoopSequence parse_sequence(const Lattice& lat, std::string_view text);
std::string format_loop(const Lattice& lat, const Loop& l);
std::string format_sequence(const Lattice& lat, const LoopSequence& s);

}  // namespace ymloop
