#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "test_support.hpp"
#include "ymloop/samplers.hpp"

using namespace ymloop;

namespace {

const Lattice& single() {
  static const Lattice lat = build_lattice(2, {0, 0}, {1, 1});
  return lat;
}

const Lattice& box3() {
  static const Lattice lat = build_lattice(2, {0, 0}, {2, 2});
  return lat;
}

// mean real plaquette trace / N
void plaquette_observable(const Configuration& q, std::span<std::complex<double>> out) {
  std::complex<double> sum = 0.0;
  const auto plaqs = q.lattice().positive_plaquettes();
  for (const Plaquette& p : plaqs) sum += plaquette_matrix(q, p).trace();
  out[0] = sum / static_cast<double>(plaqs.size() * q.group().n());
}

double max_link_difference(const Configuration& a, const Configuration& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.links().size(); ++k) d = std::max(d, testing::max_abs(a.links()[k] - b.links()[k]));
  return d;
}

struct ThreadsEnv {
  explicit ThreadsEnv(const char* value) { setenv("YMLOOP_THREADS", value, 1); }
  ~ThreadsEnv() { unsetenv("YMLOOP_THREADS"); }
};

}  // namespace

TEST_CASE("scheme names") {
  CHECK(parse_scheme("langevin") == Scheme::langevin);
  CHECK(parse_scheme(to_string(Scheme::metropolis)) == Scheme::metropolis);
  CHECK_THROWS_AS(parse_scheme("heatbath"), std::invalid_argument);
}

TEST_CASE("chain config validation") {
  ChainConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = [](auto edit) {
    ChainConfig c;
    edit(c);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  };
  bad([](ChainConfig& c) { c.step = -1.0; });
  bad([](ChainConfig& c) { c.step = std::nan(""); });
  bad([](ChainConfig& c) { c.burn_in = -1; });
  bad([](ChainConfig& c) { c.n_samples = 0; });
  bad([](ChainConfig& c) { c.thinning = 0; });
  bad([](ChainConfig& c) { c.n_chains = 0; });
  bad([](ChainConfig& c) { c.batches = 1; });
  bad([](ChainConfig& c) { c.n_samples = 10; });
  const GroupSpec g(GroupKind::SU, 2);
  CHECK(c.resolved_step(g, 1.0) == doctest::Approx(default_proposal_scale(g, 1.0)));
  c.scheme = Scheme::langevin;
  CHECK(c.resolved_step(g, 1.0) == kDefaultLangevinStep);
  c.step = 0.3;
  CHECK(c.resolved_step(g, 1.0) == 0.3);
}

TEST_CASE("batch means on independent and correlated series") {
  Rng rng(4);
  const long n = 40000;
  BatchAccumulator iid(1, n, 40), ar(1, n, 40);
  double x = 0.0;
  const double rho = 0.9;
  for (long k = 0; k < n; ++k) {
    const std::complex<double> a(rng.normal(), 0.5 * rng.normal());
    iid.add(std::span<const std::complex<double>>(&a, 1));
    x = rho * x + std::sqrt(1 - rho * rho) * rng.normal();
    const std::complex<double> b(x, 0.0);
    ar.add(std::span<const std::complex<double>>(&b, 1));
  }
  const auto e1 = BatchAccumulator::estimate(std::span<const BatchAccumulator>(&iid, 1))[0];
  CHECK(e1.n_samples == n);
  CHECK(e1.batch_count == 40);
  CHECK(e1.std_error == doctest::Approx(1.0 / std::sqrt(n)).epsilon(0.3));
  CHECK(e1.std_error_imag == doctest::Approx(0.5 / std::sqrt(n)).epsilon(0.3));
  CHECK(std::abs(e1.mean.real()) < 4 * e1.std_error);
  CHECK(e1.n_effective > 0.5 * n);
  CHECK(e1.n_effective <= n);

  const auto e2 = BatchAccumulator::estimate(std::span<const BatchAccumulator>(&ar, 1))[0];
  const double tau_ratio = (1 - rho) / (1 + rho);
  CHECK(e2.n_effective > 0.5 * tau_ratio * n);
  CHECK(e2.n_effective < 2.0 * tau_ratio * n);

  // pooling two accumulators doubles the batch count
  const BatchAccumulator parts[] = {iid, iid};
  const auto pooled = BatchAccumulator::estimate(parts)[0];
  CHECK(pooled.batch_count == 80);
  CHECK(pooled.n_samples == 2 * n);
}

TEST_CASE("tiny Langevin step barely moves the configuration") {
  for (const GroupSpec& g : testing::small_groups()) {
    Rng rng(1);
    Configuration q = Configuration::haar(box3(), g, rng);
    const Configuration before = q;
    langevin_step(q, 1e-20, {1.0, g}, rng);
    CHECK(max_link_difference(q, before) < 1e-8);
  }
}

TEST_CASE("Langevin steps stay on the group") {
  for (const GroupSpec& g : testing::small_groups()) {
    CAPTURE(g.name());
    Rng rng(2);
    Configuration q = Configuration::haar(box3(), g, rng);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      langevin_step(q, 0.05, {2.0, g}, rng);
      worst = std::max(worst, q.max_unitarity_defect());
      for (const Matrix& m : q.links()) CHECK(in_group(m, g));
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("long Langevin run stays on the manifold") {
  const GroupSpec g(GroupKind::SU, 3);
  Rng rng(3);
  Configuration q = Configuration::haar(single(), g, rng);
  double worst = 0.0;
  for (int k = 0; k < 100000; ++k) {
    langevin_step(q, 0.01, {1.0, g}, rng);
    if (k % 100 == 0) worst = std::max(worst, q.max_unitarity_defect());
  }
  CHECK(worst < 1e-8);
  for (const Matrix& m : q.links()) CHECK(std::abs(m.determinant() - 1.0) < 1e-8);
}

TEST_CASE("Metropolis acceptance") {
  for (const GroupSpec& g : testing::small_groups()) {
    CAPTURE(g.name());
    Rng rng(6);
    Configuration q = Configuration::haar(box3(), g, rng);
    const int edges = box3().num_edges();
    long accepted = 0;
    for (int k = 0; k < 50; ++k) accepted += metropolis_step(q, 0.5, {0.0, g}, rng);
    CHECK(accepted == 50L * edges);

    accepted = 0;
    for (int k = 0; k < 200; ++k) accepted += metropolis_step(q, 0.5, {2.0, g}, rng);
    const double rate = static_cast<double>(accepted) / (200.0 * edges);
    CHECK(rate > 0.0);
    CHECK(rate < 1.0);
    for (const Matrix& m : q.links()) CHECK(in_group(m, g));
  }
}

TEST_CASE("a constant observable has zero error") {
  ChainConfig cfg;
  cfg.burn_in = 10;
  cfg.n_samples = 200;
  cfg.batches = 10;
  const GroupSpec g(GroupKind::SO, 3);
  const auto r = run_chain(cfg, box3(), {1.0, g}, 1,
                           [](const Configuration&, std::span<std::complex<double>> out) { out[0] = 2.5; });
  CHECK(r.estimates[0].mean == std::complex<double>(2.5));
  CHECK(r.estimates[0].std_error == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("Haar plaquette average vanishes at beta zero") {
  for (const GroupSpec& g : {GroupSpec(GroupKind::U, 1), GroupSpec(GroupKind::U, 2), GroupSpec(GroupKind::U, 3)}) {
    CAPTURE(g.name());
    int pass = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      ChainConfig cfg;
      cfg.burn_in = 100;
      cfg.n_samples = 4000;
      cfg.seed = seed;
      const auto r = run_chain(cfg, box3(), {0.0, g}, 1, plaquette_observable);
      CHECK(r.acceptance == 1.0);
      const auto& e = r.estimates[0];
      if (std::abs(e.mean.real()) <= 3 * e.std_error && std::abs(e.mean.imag()) <= 3 * e.std_error_imag) ++pass;
    }
    CHECK(pass >= 2);
  }
}

TEST_CASE("U(1) single plaquette matches the Bessel ratio") {
  const GroupSpec g(GroupKind::U, 1);
  for (double beta : {0.5, 1.0, 2.0}) {
    CAPTURE(beta);
    const double exact = testing::bessel_i(1, beta) / testing::bessel_i(0, beta);
    int pass = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      ChainConfig cfg;
      cfg.step = 2.0;
      cfg.burn_in = 500;
      cfg.n_samples = 100000;
      cfg.seed = seed;
      const auto r = run_chain(cfg, single(), {beta, g}, 1, plaquette_observable);
      const auto& e = r.estimates[0];
      if (std::abs(e.mean.real() - exact) <= 3 * e.std_error) ++pass;
    }
    CHECK(pass >= 2);
  }
}

TEST_CASE("runs are deterministic and independent of the thread count") {
  ChainConfig cfg;
  cfg.burn_in = 20;
  cfg.n_samples = 400;
  cfg.n_chains = 4;
  cfg.batches = 10;
  cfg.seed = 99;
  cfg.keep_series = true;
  const GroupSpec g(GroupKind::SU, 2);
  ChainResult one, many, again;
  {
    ThreadsEnv env("1");
    one = run_chain(cfg, box3(), {1.0, g}, 1, plaquette_observable);
  }
  {
    ThreadsEnv env("4");
    many = run_chain(cfg, box3(), {1.0, g}, 1, plaquette_observable);
    again = run_chain(cfg, box3(), {1.0, g}, 1, plaquette_observable);
  }
  CHECK(one.series == many.series);
  CHECK(many.series == again.series);
  CHECK(one.estimates[0].mean == many.estimates[0].mean);
  CHECK(one.estimates[0].std_error == many.estimates[0].std_error);
  CHECK(one.chain_seeds == many.chain_seeds);
  REQUIRE(one.series.size() == 1);
  CHECK(one.series[0].size() == 4 * 400);

  cfg.seed = 100;
  const auto other = run_chain(cfg, box3(), {1.0, g}, 1, plaquette_observable);
  CHECK(other.series != one.series);
}

TEST_CASE("checkpoint round trip") {
  for (Scheme scheme : {Scheme::metropolis, Scheme::langevin}) {
    const GroupSpec g(GroupKind::U, 2);
    Chain a(box3(), {0.7, g}, scheme, 0.05, 12);
    for (int k = 0; k < 10; ++k) a.advance();
    std::stringstream ss;
    a.save(ss);
    Chain b = Chain::load(ss, box3());
    CHECK(a == b);
    for (int k = 0; k < 10; ++k) {
      a.advance();
      b.advance();
    }
    CHECK(a == b);
    CHECK(a.steps() == 20);
    CHECK(max_link_difference(a.state(), b.state()) == 0.0);
  }
  std::istringstream junk("not a checkpoint");
  CHECK_THROWS(Chain::load(junk, box3()));
}
