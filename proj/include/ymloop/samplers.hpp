#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ymloop/group.hpp"
#include "ymloop/lattice.hpp"
#include "ymloop/observables.hpp"

namespace ymloop {

enum class Scheme { langevin, metropolis };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& text);

/// Default Metropolis proposal scale 0.5 / sqrt(N (1 + |beta|)).
double default_proposal_scale(const GroupSpec& g, double beta);
inline constexpr double kDefaultLangevinStep = 0.01;

struct ChainConfig {
  Scheme scheme = Scheme::metropolis;
  double step = 0.0;  // h for Langevin, epsilon for Metropolis; <= 0 selects the default
  int burn_in = 1000;
  long n_samples = 10000;
  int thinning = 1;  // sweeps (Metropolis) or steps (Langevin) between records
  std::uint64_t seed = 1;
  int n_chains = 1;
  int batches = 40;  // per chain
  bool keep_series = false;

  /// Throws std::invalid_argument on nonsensical values.
  void validate() const;
  double resolved_step(const GroupSpec& g, double beta) const;
};

struct MCEstimate {
  std::complex<double> mean{0.0, 0.0};
  double std_error = 0.0;       // of the real part, by batch means
  double std_error_imag = 0.0;  // of the imaginary part
  double n_effective = 0.0;     // n * var / (n * se^2), capped at n
  long n_samples = 0;
  int batch_count = 0;
};

/// Online batch-means accumulator for a fixed number of samples known upfront.
class BatchAccumulator {
public:
  BatchAccumulator(int n_observables, long n_samples, int batches);

  void add(std::span<const std::complex<double>> values);
  long count() const { return count_; }
  int n_observables() const { return n_obs_; }

  /// Pools the batches of several accumulators (e.g. independent chains).
  static std::vector<MCEstimate> estimate(std::span<const BatchAccumulator> parts);

private:
  int n_obs_;
  long n_samples_;
  int batches_;
  long count_ = 0;
  std::vector<std::complex<double>> batch_sum_;  // batches x obs
  std::vector<long> batch_count_;
  std::vector<double> sum_sq_re_, sum_sq_im_;
  std::vector<std::complex<double>> sum_;
};

/// One geodesic Euler step of the Langevin dynamic, all edges updated from the
/// same drift evaluation: Q_e <- exp(sqrt(h) xi_e + h A_e) Q_e with
/// A_e = (1/2 grad S)_e Q_e^-1.
void langevin_step(Configuration& q, double h, const ActionParams& params, Rng& rng);

/// One Metropolis sweep over positive edges in index order; returns accepted count.
int metropolis_step(Configuration& q, double eps, const ActionParams& params, Rng& rng);

/// A single chain: configuration, rng stream and counters. Hot start from Haar.
class Chain {
public:
  Chain(const Lattice& lat, const ActionParams& params, Scheme scheme, double step, std::uint64_t seed);

  void advance();
  const Configuration& state() const { return q_; }
  Configuration& state() { return q_; }
  double acceptance() const;
  long steps() const { return steps_; }

  /// Text snapshot: links as row-major (re, im) lists, rng state and counters.
  void save(std::ostream& os) const;
  static Chain load(std::istream& is, const Lattice& lat);

  friend bool operator==(const Chain& a, const Chain& b);

private:
  Chain(const Lattice& lat, const ActionParams& params, Scheme scheme, double step, Rng rng, Configuration q);

  ActionParams params_;
  Scheme scheme_;
  double step_;
  Rng rng_;
  Configuration q_;
  long steps_ = 0;
  long proposals_ = 0;
  long accepted_ = 0;
};

/// Fills one value per observable for the current configuration. May be called
/// concurrently from different chains.
using ObservableFn = std::function<void(const Configuration&, std::span<std::complex<double>>)>;

struct ChainResult {
  std::vector<MCEstimate> estimates;
  double acceptance = 1.0;
  std::vector<std::uint64_t> chain_seeds;
  /// Per observable, chains concatenated in chain order (only with keep_series).
  std::vector<std::vector<std::complex<double>>> series;
};

/// Number of worker threads from YMLOOP_THREADS, else hardware concurrency.
int worker_threads();

ChainResult run_chain(const ChainConfig& cfg, const Lattice& lat, const ActionParams& params, int n_observables,
                      const ObservableFn& observe);

}  // namespace ymloop
