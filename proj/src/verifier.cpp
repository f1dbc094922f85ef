#include "ymloop/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace ymloop {

std::string Coefficient::str() const {
  if (!times_beta) return factor.str();
  if (factor == Rational(1)) return "beta";
  if (factor == Rational(-1)) return "-beta";
  return factor.str() + "*beta";
}

std::vector<TermSpec> master_equation_terms(const GroupSpec& g) {
  const std::int64_t n = g.n();
  const Rational inv_n(1, n);
  switch (g.kind()) {
    case GroupKind::SO:
      return {{OpSet::deform_minus, {Rational(n), true}},  {OpSet::deform_plus, {Rational(-n), true}},
              {OpSet::split_minus, {Rational(n), false}},  {OpSet::split_plus, {Rational(-n), false}},
              {OpSet::twist_minus, {Rational(1), false}},  {OpSet::twist_plus, {Rational(-1), false}},
              {OpSet::merge_minus, {inv_n, false}},        {OpSet::merge_plus, {-inv_n, false}}};
    case GroupKind::SU:
      return {{OpSet::deform_minus, {Rational(n, 2), true}},  {OpSet::deform_plus, {Rational(-n, 2), true}},
              {OpSet::split_minus, {Rational(n), false}},     {OpSet::split_plus, {Rational(-n), false}},
              {OpSet::expand_minus, {Rational(n, 2), true}},  {OpSet::expand_plus, {Rational(-n, 2), true}},
              {OpSet::merge_u_minus, {inv_n, false}},         {OpSet::merge_u_plus, {-inv_n, false}}};
    case GroupKind::U:
      return {{OpSet::deform_minus, {Rational(n, 2), true}}, {OpSet::deform_plus, {Rational(-n, 2), true}},
              {OpSet::split_minus, {Rational(n), false}},    {OpSet::split_plus, {Rational(-n), false}},
              {OpSet::merge_u_minus, {inv_n, false}},        {OpSet::merge_u_plus, {-inv_n, false}}};
  }
  return {};
}

Rational lhs_prefactor(const GroupSpec& g, const LoopSequence& s) {
  const std::int64_t n = g.n();
  const std::int64_t len = s.length();
  switch (g.kind()) {
    case GroupKind::SO: return Rational((n - 1) * len);
    case GroupKind::U: return Rational(n * len);
    case GroupKind::SU: return Rational(n * len) + -Rational(lengths_and_windings(s).ell, n);
  }
  return Rational(0);
}

// --- sequence evaluation ------------------------------------------------------------

SequenceEvaluator::SequenceEvaluator(const Lattice& lat, int n) : lat_(&lat), n_(n) {}

int SequenceEvaluator::intern(const Loop& l) {
  for (DirectedEdge e : l.edges())
    if (!lat_->contains(e)) throw std::out_of_range("SequenceEvaluator: loop leaves the lattice");
  const auto it = std::find(loops_.begin(), loops_.end(), l);
  if (it != loops_.end()) return static_cast<int>(it - loops_.begin());
  loops_.push_back(l);
  return static_cast<int>(loops_.size()) - 1;
}

int SequenceEvaluator::add_family(std::span<const LoopSequence> family) {
  std::vector<std::vector<int>> members;
  members.reserve(family.size());
  for (const LoopSequence& s : family) {
    std::vector<int> ids;
    for (const Loop& l : s.loops()) ids.push_back(intern(l));
    members.push_back(std::move(ids));
  }
  families_.push_back(std::move(members));
  return static_cast<int>(families_.size()) - 1;
}

void SequenceEvaluator::evaluate(const Configuration& q, std::span<std::complex<double>> out) const {
  std::vector<std::complex<double>> w(loops_.size());
  const double inv_n = 1.0 / n_;
  for (std::size_t k = 0; k < loops_.size(); ++k) w[k] = path_matrix(q, loops_[k].edges()).trace() * inv_n;
  for (std::size_t f = 0; f < families_.size(); ++f) {
    std::complex<double> sum = 0.0;
    for (const auto& ids : families_[f]) {
      std::complex<double> prod = 1.0;
      for (int id : ids) prod *= w[id];
      sum += prod;
    }
    out[f] = sum;
  }
}

MCEstimate phi_hat(std::span<const Configuration> samples, const LoopSequence& s, int batches) {
  if (samples.empty()) throw std::invalid_argument("phi_hat: empty sample set");
  const int n = samples[0].group().n();
  const double norm = std::pow(static_cast<double>(n), s.size());
  const long count = static_cast<long>(samples.size());
  if (count < 2) {
    MCEstimate e;
    e.mean = wilson_sequence(samples[0], s) / norm;
    e.n_samples = 1;
    e.n_effective = 1;
    e.batch_count = 1;
    return e;
  }
  BatchAccumulator acc(1, count, static_cast<int>(std::min<long>(std::max(batches, 2), count)));
  for (const Configuration& q : samples) {
    const std::complex<double> v = wilson_sequence(q, s) / norm;
    acc.add(std::span<const std::complex<double>>(&v, 1));
  }
  return BatchAccumulator::estimate(std::span<const BatchAccumulator>(&acc, 1))[0];
}

// --- master equation --------------------------------------------------------------

namespace {

MCEstimate zero_estimate(long n_samples, int batches) {
  MCEstimate e;
  e.n_samples = n_samples;
  e.n_effective = static_cast<double>(n_samples);
  e.batch_count = batches;
  return e;
}

MasterEquationReport run_master_equation(const GroupSpec& g, double beta, const LoopSequence& s, const Lattice& lat,
                                         const ChainConfig& cfg, const OperationSets& sets) {
  const ActionParams params{beta, g};
  const auto terms = master_equation_terms(g);
  const Rational prefactor = lhs_prefactor(g, s);

  SequenceEvaluator eval(lat, g.n());
  eval.add_family(std::span<const LoopSequence>(&s, 1));
  std::vector<int> family_of(terms.size(), -1);
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const auto& set = sets[terms[t].op];
    if (!set.empty()) family_of[t] = eval.add_family(set);
  }
  const int n_fam = eval.families();
  std::vector<double> family_coef(n_fam, 0.0);
  for (std::size_t t = 0; t < terms.size(); ++t)
    if (family_of[t] >= 0) family_coef[family_of[t]] = terms[t].coefficient.value(beta);
  const double lhs_coef = prefactor.value();

  // observables: families, then the residual
  auto observe = [&](const Configuration& q, std::span<std::complex<double>> out) {
    eval.evaluate(q, out.first(n_fam));
    std::complex<double> r = lhs_coef * out[0];
    for (int f = 1; f < n_fam; ++f) r -= family_coef[f] * out[f];
    out[n_fam] = r;
  };
  const ChainResult res = run_chain(cfg, lat, params, n_fam + 1, observe);

  MasterEquationReport rep{.group = g, .beta = beta, .s = s, .lhs_prefactor = prefactor};
  rep.lhs = res.estimates[0];
  const long total = rep.lhs.n_samples;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    TermRow row{terms[t].op, terms[t].coefficient, static_cast<int>(sets[terms[t].op].size()),
                zero_estimate(total, rep.lhs.batch_count)};
    if (family_of[t] >= 0) row.estimate = res.estimates[family_of[t]];
    rep.terms.push_back(row);
  }
  const MCEstimate& r = res.estimates[n_fam];
  rep.residual = r.mean.real();
  rep.residual_imag = r.mean.imag();
  rep.residual_sigma = r.std_error;
  rep.n_effective = r.n_effective;
  rep.n_samples = r.n_samples;
  rep.acceptance = res.acceptance;
  rep.scheme = cfg.scheme;
  rep.step = cfg.resolved_step(g, beta);
  rep.seed = cfg.seed;
  rep.chain_seeds = res.chain_seeds;
  return rep;
}

MCEstimate extrapolate(const MCEstimate& full, const MCEstimate& half) {
  MCEstimate e = half;
  e.mean = 2.0 * half.mean - full.mean;
  e.std_error = std::sqrt(4.0 * half.std_error * half.std_error + full.std_error * full.std_error);
  e.std_error_imag =
      std::sqrt(4.0 * half.std_error_imag * half.std_error_imag + full.std_error_imag * full.std_error_imag);
  e.n_effective = std::min(full.n_effective, half.n_effective);
  return e;
}

}  // namespace

MasterEquationReport verify_master_equation(const GroupSpec& g, double beta, const LoopSequence& s, const Lattice& lat,
                                            const VerifyOptions& opt) {
  opt.chain.validate();
  const OperationSets sets = build_operation_sets(s, lat);
  MasterEquationReport rep = run_master_equation(g, beta, s, lat, opt.chain, sets);
  if (!opt.extrapolate || opt.chain.scheme != Scheme::langevin) return rep;

  ChainConfig half = opt.chain;
  half.step = 0.5 * opt.chain.resolved_step(g, beta);
  const MasterEquationReport rh = run_master_equation(g, beta, s, lat, half, sets);
  MasterEquationReport out = rep;
  out.lhs = extrapolate(rep.lhs, rh.lhs);
  for (std::size_t t = 0; t < out.terms.size(); ++t)
    out.terms[t].estimate = extrapolate(rep.terms[t].estimate, rh.terms[t].estimate);
  out.residual = 2.0 * rh.residual - rep.residual;
  out.residual_imag = 2.0 * rh.residual_imag - rep.residual_imag;
  out.residual_sigma = std::sqrt(4.0 * rh.residual_sigma * rh.residual_sigma + rep.residual_sigma * rep.residual_sigma);
  out.n_effective = std::min(rep.n_effective, rh.n_effective);
  out.n_samples = rep.n_samples + rh.n_samples;
  out.extrapolated = true;
  return out;
}

CellVerdict verify_cell(const GroupSpec& g, double beta, const LoopSequence& s, const Lattice& lat,
                        const VerifyOptions& opt, int n_seeds, double n_sigma, bool forced_zero) {
  if (n_seeds < 1) throw std::invalid_argument("verify_cell: need at least one seed");
  CellVerdict v;
  v.check_forced_value = forced_zero;
  v.min_n_effective = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n_seeds; ++k) {
    VerifyOptions o = opt;
    o.chain.seed = derive_seed(opt.chain.seed, 0x5eed0000u + k);
    MasterEquationReport rep = verify_master_equation(g, beta, s, lat, o);
    if (!rep.within(n_sigma)) ++v.residual_exceedances;
    if (forced_zero && std::abs(rep.lhs.mean.real()) > n_sigma * rep.lhs.std_error) ++v.forced_value_exceedances;
    v.min_n_effective = std::min(v.min_n_effective, rep.n_effective);
    v.runs.push_back(std::move(rep));
  }
  const int needed = n_seeds / 2 + 1;
  v.passed = v.residual_exceedances < needed && (!forced_zero || v.forced_value_exceedances < needed);
  return v;
}

// --- stochastic identities --------------------------------------------------------

EntryCheck compare_entry(std::string label, std::complex<double> expected, std::complex<double> observed, double se_re,
                         double se_im, double n_sigma) {
  constexpr double kExact = 1e-12;
  EntryCheck c{std::move(label), expected, observed, se_re, se_im};
  auto part = [&](double dev, double se) {
    if (se <= 0.0) return std::abs(dev) <= kExact ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(dev) / se;
  };
  const double z_re = part(observed.real() - expected.real(), se_re);
  const double z_im = part(observed.imag() - expected.imag(), se_im);
  c.z = std::max(z_re, z_im);
  c.passed = c.z <= n_sigma || std::abs(observed - expected) <= kExact;
  return c;
}

namespace {

// Mean and standard error of the real and imaginary parts of iid complex draws.
struct ComplexMoments {
  std::complex<double> sum = 0.0;
  double sq_re = 0.0;
  double sq_im = 0.0;

  void add(std::complex<double> v) {
    sum += v;
    sq_re += v.real() * v.real();
    sq_im += v.imag() * v.imag();
  }
  std::complex<double> mean(long n) const { return sum / static_cast<double>(n); }
  double se_re(long n) const {
    const double m = sum.real() / n;
    return std::sqrt(std::max(0.0, sq_re / n - m * m) / (n - 1));
  }
  double se_im(long n) const {
    const double m = sum.imag() / n;
    return std::sqrt(std::max(0.0, sq_im / n - m * m) / (n - 1));
  }
};

void finish(EntrywiseReport& rep) {
  for (const auto& e : rep.entries) {
    rep.worst_z = std::max(rep.worst_z, e.z);
    if (!e.passed) ++rep.failures;
  }
}

std::string index_label(std::initializer_list<int> idx) {
  std::ostringstream os;
  os << '[';
  bool first = true;
  for (int i : idx) {
    os << (first ? "" : ",") << i;
    first = false;
  }
  os << ']';
  return os.str();
}

}  // namespace

EntrywiseReport covariance_check(const GroupSpec& g, long n, Rng& rng, double n_sigma) {
  if (n < 2) throw std::invalid_argument("covariance_check: need at least 2 samples");
  const int dim = g.n();
  const auto c = group_constants(g);
  const int entries = dim * dim * dim * dim;
  std::vector<ComplexMoments> mom(entries);
  Matrix x;
  for (long s = 0; s < n; ++s) {
    fill_algebra_gaussian(x, g, rng);
    int k = 0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        for (int a = 0; a < dim; ++a)
          for (int b = 0; b < dim; ++b) mom[k++].add(x(i, j) * x(a, b));
  }
  EntrywiseReport rep;
  rep.n = n;
  int k = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b, ++k) {
          const double expected = c.lambda.value() * (i == b && j == a) + c.nu.value() * (i == j && a == b) +
                                  c.mu.value() * (i == a && j == b);
          rep.entries.push_back(compare_entry("E[X" + index_label({i, j}) + "X" + index_label({a, b}) + "]",
                                              expected, mom[k].mean(n), mom[k].se_re(n), mom[k].se_im(n), n_sigma));
        }
  finish(rep);
  return rep;
}

EntrywiseReport magic_formula_check(const Matrix& m, const Matrix& m2, const GroupSpec& g, double h, long n, Rng& rng,
                                    double n_sigma) {
  if (n < 10000) throw std::invalid_argument("magic_formula_check: need n >= 10^4");
  if (!(h > 0.0)) throw std::invalid_argument("magic_formula_check: h must be > 0");
  const int dim = g.n();
  if (m.rows() != dim || m.cols() != dim || m2.rows() != dim || m2.cols() != dim)
    throw std::invalid_argument("magic_formula_check: dimension mismatch");
  const auto c = group_constants(g);
  const double lam = c.lambda.value(), nu = c.nu.value(), mu = c.mu.value();

  std::vector<ComplexMoments> mom(dim * dim + 1);
  const double sqrt_h = std::sqrt(h);
  Matrix xi;
  for (long s = 0; s < n; ++s) {
    fill_algebra_gaussian(xi, g, rng);
    const Matrix db = sqrt_h * xi;
    const Matrix quad = db * m * db / h;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) mom[i * dim + j].add(quad(i, j));
    mom[dim * dim].add((db * m).trace() * (db * m2).trace() / h);
  }

  const Matrix expected = lam * m.trace() * identity(dim) + nu * m + mu * m.transpose();
  const std::complex<double> expected_tr =
      lam * (m * m2).trace() + nu * m.trace() * m2.trace() + mu * (m * m2.transpose()).trace();
  EntrywiseReport rep;
  rep.n = n;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      const auto& mo = mom[i * dim + j];
      rep.entries.push_back(compare_entry("dB M dB" + index_label({i, j}), expected(i, j), mo.mean(n), mo.se_re(n),
                                          mo.se_im(n), n_sigma));
    }
  const auto& mt = mom[dim * dim];
  rep.entries.push_back(
      compare_entry("Tr(dB M)Tr(dB N)", expected_tr, mt.mean(n), mt.se_re(n), mt.se_im(n), n_sigma));
  finish(rep);
  return rep;
}

double basis_identity_defect(const GroupSpec& g) {
  const int n = g.n();
  Matrix sum = Matrix::Zero(n, n);
  for (const Matrix& v : algebra_basis(g)) sum += v * v;
  sum.diagonal().array() -= group_constants(g).c_g.value();
  return sum.cwiseAbs().maxCoeff();
}

ReplicateVerdict combine_replicates(std::span<const EntrywiseReport> reports, int needed) {
  ReplicateVerdict v;
  v.replicates = static_cast<int>(reports.size());
  if (reports.empty()) return v;
  const std::size_t entries = reports[0].entries.size();
  for (const auto& r : reports)
    if (r.entries.size() != entries) throw std::invalid_argument("combine_replicates: reports differ in shape");
  for (std::size_t k = 0; k < entries; ++k) {
    int count = 0;
    for (const auto& r : reports) count += r.entries[k].passed ? 0 : 1;
    if (count > v.worst_entry_exceedances) {
      v.worst_entry_exceedances = count;
      v.worst_label = reports[0].entries[k].label;
    }
  }
  v.passed = v.worst_entry_exceedances < needed;
  return v;
}

// --- stationarity -------------------------------------------------------------------

std::vector<std::string> stationarity_observables() { return {"re_wp", "re_w2x1", "action_density"}; }

void evaluate_stationarity_observables(const Configuration& q, double beta, std::span<std::complex<double>> out) {
  const Lattice& lat = q.lattice();
  const double n = q.group().n();
  double wp = 0.0;
  const auto plaqs = lat.positive_plaquettes();
  for (const Plaquette& p : plaqs) wp += plaquette_matrix(q, p).trace().real();
  const double np = static_cast<double>(plaqs.size());

  double wr = 0.0;
  int nr = 0;
  Path rect;
  for (int v = 0; v < lat.num_vertices(); ++v) {
    // +x +x +y -x -x -y
    static constexpr int axis[6] = {0, 0, 1, 0, 0, 1};
    static constexpr int sign[6] = {1, 1, 1, -1, -1, -1};
    rect.clear();
    int at = v;
    bool ok = true;
    for (int k = 0; k < 6 && ok; ++k) {
      const auto next = lat.step(at, axis[k], sign[k]);
      if (!next) {
        ok = false;
        break;
      }
      rect.push_back(*next);
      at = lat.end(*next);
    }
    if (!ok) continue;
    wr += path_matrix(q, rect).trace().real();
    ++nr;
  }
  out[0] = wp / (np * n);
  out[1] = nr > 0 ? wr / (nr * n) : 0.0;
  out[2] = n * beta * wp / np;
}

StationarityReport stationarity_check(const GroupSpec& g, double beta, const Lattice& lat,
                                      const ChainConfig& metropolis, const ChainConfig& langevin, double n_sigma) {
  const ActionParams params{beta, g};
  const auto names = stationarity_observables();
  const int n_obs = static_cast<int>(names.size());
  auto observe = [beta](const Configuration& q, std::span<std::complex<double>> out) {
    evaluate_stationarity_observables(q, beta, out);
  };
  ChainConfig mc = metropolis;
  mc.scheme = Scheme::metropolis;
  ChainConfig l1 = langevin;
  l1.scheme = Scheme::langevin;
  const double h = l1.resolved_step(g, beta);
  l1.step = h;
  ChainConfig l2 = l1;
  l2.step = 0.5 * h;
  l2.burn_in = 2 * l1.burn_in;
  l2.thinning = 2 * l1.thinning;

  const ChainResult rm = run_chain(mc, lat, params, n_obs, observe);
  const ChainResult r1 = run_chain(l1, lat, params, n_obs, observe);
  const ChainResult r2 = run_chain(l2, lat, params, n_obs, observe);

  StationarityReport rep{.group = g, .beta = beta, .h = h};
  rep.passed = true;
  auto comb = [](const MCEstimate& a, const MCEstimate& b) {
    return std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
  };
  auto zscore = [](double dev, double sigma) {
    if (sigma > 0.0) return std::abs(dev) / sigma;
    return std::abs(dev) <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
  };
  for (int k = 0; k < n_obs; ++k) {
    StationarityRow row{names[k], rm.estimates[k], r1.estimates[k], r2.estimates[k]};
    for (const MCEstimate* e : {&row.metropolis, &row.langevin_h, &row.langevin_half}) {
      if (e->std_error > 0.0 && e->n_effective < 100.0)
        throw InsufficientSamples("stationarity_check: fewer than 100 effective samples for " + names[k]);
    }
    const double m = row.metropolis.mean.real();
    const double d1 = row.langevin_h.mean.real() - m;
    const double d2 = row.langevin_half.mean.real() - m;
    row.allowance = std::abs(row.langevin_h.mean.real() - row.langevin_half.mean.real());
    const double s2 = comb(row.langevin_half, row.metropolis);
    row.z_half = zscore(d2, s2);
    row.z_full = zscore(d1, comb(row.langevin_h, row.metropolis));
    row.bias_shrinks = std::abs(d2) <= std::abs(d1) + n_sigma * comb(row.langevin_h, row.langevin_half) + 1e-12;
    row.passed = std::abs(d2) <= n_sigma * s2 + row.allowance + 1e-12 && row.bias_shrinks;
    rep.passed = rep.passed && row.passed;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace ymloop
