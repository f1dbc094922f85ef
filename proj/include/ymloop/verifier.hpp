#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ymloop/group.hpp"
#include "ymloop/lattice.hpp"
#include "ymloop/loops.hpp"
#include "ymloop/observables.hpp"
#include "ymloop/samplers.hpp"

namespace ymloop {

/// Thrown when a statistical check would rest on too few effective samples.
class InsufficientSamples : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// --- coefficient tables ------------------------------------------------------

/// factor * beta^(times_beta ? 1 : 0), factor rational in N.
struct Coefficient {
  Rational factor;
  bool times_beta = false;

  double value(double beta) const { return times_beta ? factor.value() * beta : factor.value(); }
  std::string str() const;
  friend bool operator==(const Coefficient&, const Coefficient&) = default;
};

struct TermSpec {
  OpSet op;
  Coefficient coefficient;
};

/// Right-hand side terms of the master loop equation for the group, in a fixed order.
std::vector<TermSpec> master_equation_terms(const GroupSpec& g);

/// (N-1)|s| for SO, N|s| - l(s)/N for SU, N|s| for U.
Rational lhs_prefactor(const GroupSpec& g, const LoopSequence& s);

// --- master equation ---------------------------------------------------------

struct TermRow {
  OpSet op;
  Coefficient coefficient;
  int set_size = 0;
  /// Estimate of the sum of phi(s') over the multiset (exactly 0 with zero error when empty).
  MCEstimate estimate;
};

struct MasterEquationReport {
  GroupSpec group;
  double beta = 0.0;
  LoopSequence s;
  Rational lhs_prefactor;
  MCEstimate lhs;  // phi(s)
  std::vector<TermRow> terms;
  double residual = 0.0;        // real part of the per-sample residual mean
  double residual_imag = 0.0;
  double residual_sigma = 0.0;
  double n_effective = 0.0;
  long n_samples = 0;
  double acceptance = 1.0;
  Scheme scheme = Scheme::metropolis;
  double step = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> chain_seeds;
  /// Set in extrapolation mode: residual from 2 r(h/2) - r(h).
  bool extrapolated = false;

  bool within(double n_sigma) const { return std::abs(residual) <= n_sigma * residual_sigma; }
};

/// W_{s'} / N^{m'} sums for a fixed family of loop sequences, evaluated through a
/// registry of the distinct loops they contain so each trace is computed once.
class SequenceEvaluator {
public:
  SequenceEvaluator(const Lattice& lat, int n);

  /// Registers a family (summed together); returns its slot.
  int add_family(std::span<const LoopSequence> family);
  int families() const { return static_cast<int>(families_.size()); }
  int distinct_loops() const { return static_cast<int>(loops_.size()); }

  /// Writes one value per family into `out`.
  void evaluate(const Configuration& q, std::span<std::complex<double>> out) const;

private:
  int intern(const Loop& l);

  const Lattice* lat_;
  int n_;
  std::vector<Loop> loops_;
  std::vector<std::vector<std::vector<int>>> families_;  // family -> members -> loop ids
};

/// phi_hat(s') from a stored sample of configurations.
MCEstimate phi_hat(std::span<const Configuration> samples, const LoopSequence& s, int batches = 20);

struct VerifyOptions {
  ChainConfig chain;
  /// Langevin only: also run at h/2 and report 2 r(h/2) - r(h).
  bool extrapolate = false;
};

/// Throws PaddingViolation when s is not padded in lat.
MasterEquationReport verify_master_equation(const GroupSpec& g, double beta, const LoopSequence& s,
                                            const Lattice& lat, const VerifyOptions& opt);

struct CellVerdict {
  std::vector<MasterEquationReport> runs;  // one per seed
  int residual_exceedances = 0;
  /// At beta = 0 the Haar measure forces phi(s) = 0 for the sequences in use.
  int forced_value_exceedances = 0;
  bool check_forced_value = false;
  double min_n_effective = 0.0;
  bool passed = false;
};

/// Runs the cell for seeds derived from opt.chain.seed, counts 3-sigma
/// exceedances and fails on a majority (2 of 3 for three seeds).
CellVerdict verify_cell(const GroupSpec& g, double beta, const LoopSequence& s, const Lattice& lat,
                        const VerifyOptions& opt, int n_seeds = 3, double n_sigma = 3.0,
                        bool forced_zero = false);

// --- stochastic identities ---------------------------------------------------

struct EntryCheck {
  std::string label;
  std::complex<double> expected;
  std::complex<double> observed;
  double se_re = 0.0;
  double se_im = 0.0;
  double z = 0.0;  // worst of the real and imaginary z-scores
  bool passed = false;
};

struct EntrywiseReport {
  std::vector<EntryCheck> entries;
  long n = 0;
  double worst_z = 0.0;
  int failures = 0;
  bool passed() const { return failures == 0; }
};

/// Deviation within n_sigma standard errors, or 1e-12 absolute when the error vanishes.
EntryCheck compare_entry(std::string label, std::complex<double> expected, std::complex<double> observed,
                         double se_re, double se_im, double n_sigma = 3.0);

/// Empirical E[X^ij X^kl] over n standard algebra Gaussians against
/// lambda d_il d_jk + nu d_ij d_kl + mu d_ik d_jl.
EntrywiseReport covariance_check(const GroupSpec& g, long n, Rng& rng, double n_sigma = 3.0);

/// Empirical dB M dB / h and Tr(dB M) Tr(dB M2) / h against lambda Tr(M) I + nu M + mu M^t
/// and lambda Tr(M M2) + nu Tr(M) Tr(M2) + mu Tr(M M2^t). Requires n >= 10^4.
EntrywiseReport magic_formula_check(const Matrix& m, const Matrix& m2, const GroupSpec& g, double h, long n, Rng& rng,
                                    double n_sigma = 3.0);

/// max_ij |(sum_a v_a^2 - c_g I)_ij| over the algebra basis.
double basis_identity_defect(const GroupSpec& g);

/// Majority rule over independent replicates of an entrywise check: an entry fails
/// when it exceeds in at least `needed` of the replicates.
struct ReplicateVerdict {
  int replicates = 0;
  int worst_entry_exceedances = 0;
  std::string worst_label;
  bool passed = false;
};
ReplicateVerdict combine_replicates(std::span<const EntrywiseReport> reports, int needed = 2);

// --- stationarity ------------------------------------------------------------

struct StationarityRow {
  std::string observable;
  MCEstimate metropolis;
  MCEstimate langevin_h;
  MCEstimate langevin_half;
  double z_half = 0.0;      // |L(h/2) - M| / combined sigma
  double z_full = 0.0;      // |L(h) - M| / combined sigma
  double allowance = 0.0;   // O(h) allowance |L(h) - L(h/2)| carried to h/2
  bool bias_shrinks = false;
  bool passed = false;
};

struct StationarityReport {
  GroupSpec group;
  double beta = 0.0;
  double h = 0.0;
  std::vector<StationarityRow> rows;
  bool passed = false;
};

/// Observable basket on lat: mean Re W_p / N over positive plaquettes, mean
/// Re W / N over 2x1 rectangles in the first two axes, action density S / |P+|.
std::vector<std::string> stationarity_observables();
void evaluate_stationarity_observables(const Configuration& q, double beta, std::span<std::complex<double>> out);

/// Metropolis (cfg.scheme ignored) vs Langevin at h and h/2. Pass rule per
/// observable: L(h/2) within n_sigma combined sigma of M plus the allowance
/// |L(h) - L(h/2)|, and |L(h/2) - M| <= |L(h) - M| + n_sigma sigma(L(h) - L(h/2)).
/// Throws InsufficientSamples when any n_effective is below 100.
StationarityReport stationarity_check(const GroupSpec& g, double beta, const Lattice& lat, const ChainConfig& metropolis,
                                      const ChainConfig& langevin, double n_sigma = 3.0);

}  // namespace ymloop
