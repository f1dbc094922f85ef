#include "ymloop/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace ymloop {

std::string to_string(Scheme s) { return s == Scheme::langevin ? "langevin" : "metropolis"; }

Scheme parse_scheme(const std::string& text) {
  if (text == "langevin") return Scheme::langevin;
  if (text == "metropolis") return Scheme::metropolis;
  throw std::invalid_argument("unknown sampler scheme '" + text + "' (expected langevin or metropolis)");
}

double default_proposal_scale(const GroupSpec& g, double beta) {
  return 0.5 / std::sqrt(g.n() * (1.0 + std::abs(beta)));
}

void ChainConfig::validate() const {
  if (!(step >= 0.0) || !std::isfinite(step)) throw std::invalid_argument("step size must be a finite value >= 0");
  if (burn_in < 0) throw std::invalid_argument("burn_in must be >= 0");
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (thinning < 1) throw std::invalid_argument("thinning must be >= 1");
  if (n_chains < 1) throw std::invalid_argument("n_chains must be >= 1");
  if (batches < 1) throw std::invalid_argument("batches must be >= 1");
  if (n_chains * static_cast<long>(batches) < 2) throw std::invalid_argument("need at least 2 batches in total");
  if (n_samples < batches) throw std::invalid_argument("n_samples must be >= batches");
}

double ChainConfig::resolved_step(const GroupSpec& g, double beta) const {
  if (step > 0.0) return step;
  return scheme == Scheme::langevin ? kDefaultLangevinStep : default_proposal_scale(g, beta);
}

// --- batch means -----------------------------------------------------------------

BatchAccumulator::BatchAccumulator(int n_observables, long n_samples, int batches)
    : n_obs_(n_observables),
      n_samples_(n_samples),
      batches_(batches),
      batch_sum_(static_cast<std::size_t>(batches) * n_observables),
      batch_count_(batches, 0),
      sum_sq_re_(n_observables, 0.0),
      sum_sq_im_(n_observables, 0.0),
      sum_(n_observables) {
  if (n_samples < batches) throw std::invalid_argument("BatchAccumulator: fewer samples than batches");
}

void BatchAccumulator::add(std::span<const std::complex<double>> values) {
  if (count_ >= n_samples_) throw std::logic_error("BatchAccumulator: more samples than announced");
  const int b = static_cast<int>(count_ * batches_ / n_samples_);
  ++batch_count_[b];
  for (int k = 0; k < n_obs_; ++k) {
    const auto v = values[k];
    batch_sum_[static_cast<std::size_t>(b) * n_obs_ + k] += v;
    sum_[k] += v;
    sum_sq_re_[k] += v.real() * v.real();
    sum_sq_im_[k] += v.imag() * v.imag();
  }
  ++count_;
}

std::vector<MCEstimate> BatchAccumulator::estimate(std::span<const BatchAccumulator> parts) {
  if (parts.empty()) throw std::invalid_argument("estimate: no samples");
  const int n_obs = parts[0].n_obs_;
  long total = 0;
  int batches = 0;
  for (const auto& p : parts) {
    if (p.n_obs_ != n_obs) throw std::invalid_argument("estimate: observable count mismatch");
    total += p.count_;
    for (long c : p.batch_count_) batches += c > 0 ? 1 : 0;
  }
  if (total == 0) throw std::invalid_argument("estimate: empty sample set");
  if (batches < 2) throw std::invalid_argument("estimate: fewer than 2 batches");

  std::vector<MCEstimate> out(n_obs);
  for (int k = 0; k < n_obs; ++k) {
    std::complex<double> sum = 0.0;
    double sq_re = 0.0, sq_im = 0.0;
    for (const auto& p : parts) {
      sum += p.sum_[k];
      sq_re += p.sum_sq_re_[k];
      sq_im += p.sum_sq_im_[k];
    }
    const std::complex<double> mean = sum / static_cast<double>(total);
    double ss_re = 0.0, ss_im = 0.0;
    for (const auto& p : parts) {
      for (int b = 0; b < p.batches_; ++b) {
        if (p.batch_count_[b] == 0) continue;
        const auto bm = p.batch_sum_[static_cast<std::size_t>(b) * n_obs + k] / static_cast<double>(p.batch_count_[b]);
        ss_re += (bm.real() - mean.real()) * (bm.real() - mean.real());
        ss_im += (bm.imag() - mean.imag()) * (bm.imag() - mean.imag());
      }
    }
    MCEstimate& e = out[k];
    e.mean = mean;
    e.n_samples = total;
    e.batch_count = batches;
    e.std_error = std::sqrt(ss_re / (batches - 1) / batches);
    e.std_error_imag = std::sqrt(ss_im / (batches - 1) / batches);
    const double var = std::max(0.0, sq_re / total - mean.real() * mean.real());
    const double se2 = e.std_error * e.std_error;
    e.n_effective = se2 > 0.0 ? std::min(static_cast<double>(total), var / se2) : static_cast<double>(total);
  }
  return out;
}

// --- update rules ----------------------------------------------------------------

void langevin_step(Configuration& q, double h, const ActionParams& params, Rng& rng) {
  if (!(h > 0.0)) throw std::invalid_argument("langevin_step: h must be > 0");
  const Lattice& lat = q.lattice();
  const GroupSpec& g = q.group();
  const int n = g.n();
  const double sqrt_h = std::sqrt(h);
  const double drift_scale = -0.5 * n * params.beta * h;

  std::vector<Matrix> generator(lat.num_edges());
  Matrix xi;
  for (int k = 0; k < lat.num_edges(); ++k) {
    const DirectedEdge e = DirectedEdge::positive(k);
    // A_e = -(N beta / 4) sum_p (Q_p - Q_p^*) = -(N beta / 2) proj(Q_e S_e)
    const Matrix qs = q.link(k) * staple_sum(q, e);
    fill_algebra_gaussian(xi, g, rng);
    generator[k] = sqrt_h * xi + drift_scale * project_matrix(qs, g);
  }
  for (int k = 0; k < lat.num_edges(); ++k) {
    Matrix& link = q.link(k);
    link = expm(generator[k]) * link;
    const double defect = unitarity_defect(link);
    if (!(defect <= 1e-3)) throw NumericalFault("langevin_step: link left the group manifold");
    if (defect > GroupElement::kManifoldTolerance) link = retract_to_group(link, g);
  }
}

int metropolis_step(Configuration& q, double eps, const ActionParams& params, Rng& rng) {
  if (!(eps > 0.0)) throw std::invalid_argument("metropolis_step: eps must be > 0");
  const Lattice& lat = q.lattice();
  const GroupSpec& g = q.group();
  const double scale = g.n() * params.beta;
  int accepted = 0;
  Matrix xi;
  for (int k = 0; k < lat.num_edges(); ++k) {
    const Matrix staple = staple_sum(q, DirectedEdge::positive(k));
    fill_algebra_gaussian(xi, g, rng);
    const Matrix proposal = expm(eps * xi) * q.link(k);
    const double delta = scale * ((proposal - q.link(k)) * staple).trace().real();
    const double u = rng.uniform();
    if (delta >= 0.0 || u < std::exp(delta)) {
      q.link(k) = proposal;
      ++accepted;
    }
  }
  q.retract_if_needed();
  return accepted;
}

// --- chains ------------------------------------------------------------------------

Chain::Chain(const Lattice& lat, const ActionParams& params, Scheme scheme, double step, std::uint64_t seed)
    : params_(params), scheme_(scheme), step_(step), rng_(seed), q_(lat, params.group) {
  if (!(step > 0.0)) throw std::invalid_argument("Chain: step must be > 0");
  q_ = Configuration::haar(lat, params.group, rng_);
}

Chain::Chain(const Lattice&, const ActionParams& params, Scheme scheme, double step, Rng rng, Configuration q)
    : params_(params), scheme_(scheme), step_(step), rng_(std::move(rng)), q_(std::move(q)) {}

void Chain::advance() {
  if (scheme_ == Scheme::langevin) {
    langevin_step(q_, step_, params_, rng_);
  } else {
    accepted_ += metropolis_step(q_, step_, params_, rng_);
    proposals_ += q_.lattice().num_edges();
  }
  ++steps_;
}

double Chain::acceptance() const {
  return proposals_ > 0 ? static_cast<double>(accepted_) / static_cast<double>(proposals_) : 1.0;
}

void Chain::save(std::ostream& os) const {
  const auto old_precision = os.precision();
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "ymloop-checkpoint 1\n";
  os << "group " << to_string(params_.group.kind()) << ' ' << params_.group.n() << '\n';
  os << "beta " << params_.beta << '\n';
  os << "scheme " << to_string(scheme_) << ' ' << step_ << '\n';
  os << "counters " << steps_ << ' ' << proposals_ << ' ' << accepted_ << '\n';
  os << "edges " << q_.lattice().num_edges() << '\n';
  const int n = params_.group.n();
  for (const Matrix& m : q_.links()) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) os << m(i, j).real() << ' ' << m(i, j).imag() << (i == n - 1 && j == n - 1 ? "" : " ");
    os << '\n';
  }
  os << "rng " << rng_ << '\n';
  os.precision(old_precision);
}

Chain Chain::load(std::istream& is, const Lattice& lat) {
  auto expect = [&](const char* word) {
    std::string tok;
    if (!(is >> tok) || tok != word) throw std::runtime_error(std::string("checkpoint: expected '") + word + "'");
  };
  expect("ymloop-checkpoint");
  int version = 0;
  is >> version;
  if (version != 1) throw std::runtime_error("checkpoint: unsupported version");
  expect("group");
  std::string kind;
  int n = 0;
  is >> kind >> n;
  const GroupSpec g(parse_group_kind(kind), n);
  expect("beta");
  double beta = 0.0;
  is >> beta;
  expect("scheme");
  std::string scheme;
  double step = 0.0;
  is >> scheme >> step;
  expect("counters");
  long steps = 0, proposals = 0, accepted = 0;
  is >> steps >> proposals >> accepted;
  expect("edges");
  int edges = 0;
  is >> edges;
  if (edges != lat.num_edges()) throw std::runtime_error("checkpoint: lattice edge count mismatch");
  Configuration q(lat, g);
  for (int k = 0; k < edges; ++k) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double re = 0.0, im = 0.0;
        is >> re >> im;
        m(i, j) = Scalar(re, im);
      }
    q.link(k) = m;
  }
  expect("rng");
  Rng rng;
  is >> rng;
  if (!is) throw std::runtime_error("checkpoint: truncated or malformed");
  Chain c(lat, ActionParams{beta, g}, parse_scheme(scheme), step, std::move(rng), std::move(q));
  c.steps_ = steps;
  c.proposals_ = proposals;
  c.accepted_ = accepted;
  return c;
}

bool operator==(const Chain& a, const Chain& b) {
  if (!(a.params_.group == b.params_.group) || a.params_.beta != b.params_.beta || a.scheme_ != b.scheme_ ||
      a.step_ != b.step_ || a.steps_ != b.steps_ || a.proposals_ != b.proposals_ || a.accepted_ != b.accepted_ ||
      !(a.rng_ == b.rng_)) {
    return false;
  }
  for (int k = 0; k < a.q_.lattice().num_edges(); ++k)
    if (a.q_.link(k) != b.q_.link(k)) return false;
  return true;
}

int worker_threads() {
  if (const char* env = std::getenv("YMLOOP_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct ChainOutput {
  BatchAccumulator acc;
  double acceptance = 1.0;
  std::vector<std::vector<std::complex<double>>> series;
};

ChainOutput run_single(const ChainConfig& cfg, const Lattice& lat, const ActionParams& params, int n_obs,
                       const ObservableFn& observe, std::uint64_t seed) {
  Chain chain(lat, params, cfg.scheme, cfg.resolved_step(params.group, params.beta), seed);
  ChainOutput out{BatchAccumulator(n_obs, cfg.n_samples, cfg.batches), 1.0, {}};
  if (cfg.keep_series) {
    out.series.resize(n_obs);
    for (auto& s : out.series) s.reserve(cfg.n_samples);
  }
  for (int i = 0; i < cfg.burn_in; ++i) chain.advance();
  std::vector<std::complex<double>> values(n_obs);
  for (long s = 0; s < cfg.n_samples; ++s) {
    for (int t = 0; t < cfg.thinning; ++t) chain.advance();
    observe(chain.state(), values);
    out.acc.add(values);
    if (cfg.keep_series)
      for (int k = 0; k < n_obs; ++k) out.series[k].push_back(values[k]);
  }
  out.acceptance = chain.acceptance();
  return out;
}

}  // namespace

ChainResult run_chain(const ChainConfig& cfg, const Lattice& lat, const ActionParams& params, int n_observables,
                      const ObservableFn& observe) {
  cfg.validate();
  ChainResult result;
  for (int c = 0; c < cfg.n_chains; ++c) result.chain_seeds.push_back(derive_seed(cfg.seed, c));

  std::vector<std::optional<ChainOutput>> outputs(cfg.n_chains);
  std::vector<std::exception_ptr> errors(cfg.n_chains);
  auto work = [&](int c) {
    try {
      outputs[c].emplace(run_single(cfg, lat, params, n_observables, observe, result.chain_seeds[c]));
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  const int threads = std::min(worker_threads(), cfg.n_chains);
  if (threads <= 1) {
    for (int c = 0; c < cfg.n_chains; ++c) work(c);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int c = t; c < cfg.n_chains; c += threads) work(c);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<BatchAccumulator> parts;
  double acc_sum = 0.0;
  if (cfg.keep_series) result.series.resize(n_observables);
  for (auto& o : outputs) {
    parts.push_back(o->acc);
    acc_sum += o->acceptance;
    if (cfg.keep_series)
      for (int k = 0; k < n_observables; ++k)
        result.series[k].insert(result.series[k].end(), o->series[k].begin(), o->series[k].end());
  }
  result.estimates = BatchAccumulator::estimate(parts);
  result.acceptance = acc_sum / cfg.n_chains;
  return result;
}

}  // namespace ymloop
