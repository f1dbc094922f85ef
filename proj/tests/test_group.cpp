#include <doctest.h>

#include <sstream>

#include "test_support.hpp"
#include "ymloop/group.hpp"
#include "ymloop/verifier.hpp"

using namespace ymloop;
using testing::max_abs;
using testing::random_matrix;

TEST_CASE("group spec validation") {
  CHECK_THROWS_AS(GroupSpec(GroupKind::SO, 1), std::invalid_argument);
  CHECK_THROWS_AS(GroupSpec(GroupKind::SU, 1), std::invalid_argument);
  CHECK_THROWS_AS(GroupSpec(GroupKind::U, 0), std::invalid_argument);
  CHECK_THROWS_AS(GroupSpec(GroupKind::U, kMaxN + 1), std::invalid_argument);
  CHECK_NOTHROW(GroupSpec(GroupKind::U, 1));
  CHECK(GroupSpec(GroupKind::SU, 3).algebra_dim() == 8);
  CHECK(GroupSpec(GroupKind::SO, 4).algebra_dim() == 6);
  CHECK(GroupSpec(GroupKind::U, 2).name() == "U(2)");
  CHECK(parse_group_kind("SU") == GroupKind::SU);
  CHECK_THROWS(parse_group_kind("Sp"));
}

TEST_CASE("rational arithmetic stays reduced") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(3, -6) == Rational(-1, 2));
  CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
  CHECK(Rational(2, 3) * Rational(3, 4) == Rational(1, 2));
  CHECK(Rational(-8, 3).str() == "-8/3");
  CHECK_THROWS(Rational(1, 0));
}

TEST_CASE("group constants: documented examples") {
  auto so3 = group_constants(GroupSpec(GroupKind::SO, 3));
  CHECK(so3.c_g == Rational(-1));
  CHECK(so3.lambda == Rational(-1, 2));
  CHECK(so3.nu == Rational(0));
  CHECK(so3.mu == Rational(1, 2));
  auto u2 = group_constants(GroupSpec(GroupKind::U, 2));
  CHECK(u2.c_g == Rational(-2));
  CHECK(u2.lambda == Rational(-1));
  CHECK(u2.nu == Rational(0));
  CHECK(u2.mu == Rational(0));
  auto su3 = group_constants(GroupSpec(GroupKind::SU, 3));
  CHECK(su3.c_g == Rational(-8, 3));
  CHECK(su3.lambda == Rational(-1));
  CHECK(su3.nu == Rational(1, 3));
  CHECK(su3.mu == Rational(0));
}

TEST_CASE("inner product") {
  CHECK(inner_product(identity(2), identity(2)) == doctest::Approx(2.0));
  Matrix x(2, 2);
  x << 0, 1, -1, 0;
  CHECK(inner_product(x, x) == doctest::Approx(2.0));
  CHECK_THROWS_AS(inner_product(identity(2), identity(3)), std::invalid_argument);

  Rng rng(5);
  for (const auto& g : testing::small_groups()) {
    const Matrix a = sample_algebra_gaussian(g, rng).matrix();
    const Matrix b = sample_algebra_gaussian(g, rng).matrix();
    CHECK(inner_product(a, b) == doctest::Approx(-(a * b).trace().real()).epsilon(1e-12));
    CHECK(inner_product(a, b) == doctest::Approx(inner_product(b, a)).epsilon(1e-14));
  }
}

TEST_CASE("projection onto the algebra") {
  Matrix sym(3, 3);
  sym << 1, 2, 3, 2, 5, 6, 3, 6, 9;
  CHECK(max_abs(project_matrix(sym, GroupSpec(GroupKind::SO, 3))) == 0.0);

  Rng rng(11);
  const GroupSpec u3(GroupKind::U, 3);
  const Matrix ah = sample_algebra_gaussian(u3, rng).matrix();
  CHECK(max_abs(project_matrix(ah, u3) - ah) < 1e-15);

  const Matrix ii = Scalar(0.0, 1.0) * identity(2);
  CHECK(max_abs(project_matrix(ii, GroupSpec(GroupKind::SU, 2))) < 1e-15);

  for (const auto& g : testing::small_groups()) {
    CAPTURE(g.name());
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix m = random_matrix(g.n(), rng);
      const Matrix y = random_matrix(g.n(), rng);
      const Matrix p = project_matrix(m, g);
      CHECK(max_abs(project_matrix(p, g) - p) < 1e-12);
      // self-adjoint: <P m, y> = <m, P y>
      CHECK(std::abs(inner_product(p, y) - inner_product(m, project_matrix(y, g))) < 1e-12);
      CHECK_NOTHROW(AlgebraElement(p, g));
    }
  }
  CHECK_THROWS_AS(project_to_algebra(identity(2), GroupSpec(GroupKind::U, 3)), std::invalid_argument);
}

TEST_CASE("algebra basis is orthonormal and satisfies the c_g identity") {
  for (int n = 1; n <= kMaxN; ++n) {
    for (GroupKind k : {GroupKind::SO, GroupKind::U, GroupKind::SU}) {
      if (n == 1 && k != GroupKind::U) continue;
      const GroupSpec g(k, n);
      CAPTURE(g.name());
      const auto basis = algebra_basis(g);
      REQUIRE(static_cast<int>(basis.size()) == g.algebra_dim());
      for (std::size_t a = 0; a < basis.size(); ++a) {
        CHECK_NOTHROW(AlgebraElement(basis[a], g));
        for (std::size_t b = a; b < basis.size(); ++b)
          CHECK(std::abs(inner_product(basis[a], basis[b]) - (a == b ? 1.0 : 0.0)) < 1e-12);
      }
      CHECK(basis_identity_defect(g) < 1e-10);
    }
  }
}

TEST_CASE("gaussian algebra samples") {
  Rng rng(3);
  for (const auto& g : testing::small_groups()) {
    CAPTURE(g.name());
    for (int i = 0; i < 50; ++i) {
      const Matrix x = sample_algebra_gaussian(g, rng).matrix();
      CHECK(max_abs(x + x.adjoint()) == 0.0);
      if (g.kind() == GroupKind::SU) CHECK(std::abs(x.trace()) < 1e-15);
      if (g.kind() == GroupKind::SO) CHECK(max_abs(x.imag()) == 0.0);
    }
  }
}

TEST_CASE("gaussian coefficients over the basis are standard normal") {
  // Coefficients <X, v_a> should have mean 0, unit variance and no correlation.
  const GroupSpec g(GroupKind::SU, 3);
  const auto basis = algebra_basis(g);
  const int dim = static_cast<int>(basis.size());
  const long n = 40000;
  std::vector<int> exceed(dim * dim, 0);
  for (int rep = 0; rep < 3; ++rep) {
    Rng rng(derive_seed(77, rep));
    std::vector<double> sum(dim, 0.0), sum2(dim * dim, 0.0), sum4(dim * dim, 0.0);
    for (long s = 0; s < n; ++s) {
      const Matrix x = sample_algebra_gaussian(g, rng).matrix();
      std::vector<double> c(dim);
      for (int a = 0; a < dim; ++a) c[a] = inner_product(x, basis[a]);
      for (int a = 0; a < dim; ++a) {
        sum[a] += c[a];
        for (int b = 0; b < dim; ++b) {
          sum2[a * dim + b] += c[a] * c[b];
          sum4[a * dim + b] += c[a] * c[a] * c[b] * c[b];
        }
      }
    }
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) {
        const double m = sum2[a * dim + b] / n;
        const double var = sum4[a * dim + b] / n - m * m;
        const double se = std::sqrt(var / n);
        if (std::abs(m - (a == b ? 1.0 : 0.0)) > 3 * se) ++exceed[a * dim + b];
      }
  }
  // an entry fails when it exceeds 3 sigma in 2 of 3 replicates
  for (int e : exceed) CHECK(e < 2);
}

TEST_CASE("matrix exponential") {
  CHECK(max_abs(expm(Matrix::Zero(3, 3)) - identity(3)) == 0.0);

  for (double theta : {0.001, 0.3, 1.0, 2.5, 7.0}) {
    Matrix x(2, 2);
    x << 0, theta, -theta, 0;
    Matrix rot(2, 2);
    rot << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
    CHECK(max_abs(expm(x) - rot) < 1e-13);
  }

  Rng rng(21);
  for (double scale : {1e-4, 0.01, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    for (int n : {2, 3, 5}) {
      const Matrix a = scale * random_matrix(n, rng);
      const Matrix ref = testing::taylor_exp(a);
      CAPTURE(scale);
      CHECK(max_abs(expm(a) - ref) / std::max(1.0, max_abs(ref)) < 1e-12);
    }
  }

  const GroupSpec su3(GroupKind::SU, 3);
  for (int i = 0; i < 20; ++i) {
    const Matrix x = sample_algebra_gaussian(su3, rng).matrix();
    const Matrix q = expm(x);
    CHECK(unitarity_defect(q) < 1e-12);
    CHECK(std::abs(q.determinant() - Scalar(1.0)) < 1e-10);
  }

  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(expm(bad), NumericalFault);
}

TEST_CASE("group_exp stays in the group for norms up to 10") {
  Rng rng(8);
  for (const auto& g : testing::small_groups()) {
    CAPTURE(g.name());
    for (int i = 0; i < 30; ++i) {
      Matrix x = sample_algebra_gaussian(g, rng).matrix();
      const double norm = std::sqrt(inner_product(x, x));
      if (norm > 0) x *= (10.0 * rng.uniform()) / norm;
      const GroupElement q = group_exp(AlgebraElement(x, g));
      CHECK(in_group(q.matrix(), g));
    }
  }
}

TEST_CASE("haar samples satisfy the group invariants") {
  Rng rng(2);
  for (const auto& g : testing::small_groups()) {
    CAPTURE(g.name());
    for (int i = 0; i < 100; ++i) {
      const Matrix q = haar_sample(g, rng).matrix();
      CHECK(unitarity_defect(q) < 1e-12);
      if (g.kind() != GroupKind::U) CHECK(std::abs(q.determinant() - Scalar(1.0)) < 1e-10);
      if (g.kind() == GroupKind::SO) CHECK(max_abs(q.imag()) == 0.0);
    }
  }
}

TEST_CASE("haar moments for U(N)") {
  // E Q^ij = 0 and E Q^ij conj(Q^kl) = d_ik d_jl / N, entrywise 3 sigma, failing on 2 of 3 replicates.
  for (int n : {2, 3}) {
    const GroupSpec g(GroupKind::U, n);
    CAPTURE(n);
    const long samples = 50000;
    const int entries = n * n * n * n;
    std::vector<int> exceed(entries + 1, 0);
    for (int rep = 0; rep < 3; ++rep) {
      Rng rng(derive_seed(400 + n, rep));
      std::vector<Scalar> sum(entries, 0.0);
      std::vector<double> sq(entries, 0.0);
      Scalar tr_sum = 0.0;
      double tr_sq = 0.0;
      for (long s = 0; s < samples; ++s) {
        const Matrix q = haar_sample(g, rng).matrix();
        const Scalar tr = q.trace();
        tr_sum += tr;
        tr_sq += std::norm(tr);
        int k = 0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int a = 0; a < n; ++a)
              for (int b = 0; b < n; ++b, ++k) {
                const Scalar v = q(i, j) * std::conj(q(a, b));
                sum[k] += v;
                sq[k] += std::norm(v);
              }
      }
      const Scalar tr_mean = tr_sum / static_cast<double>(samples);
      const double tr_se = std::sqrt(tr_sq / samples / 2.0 / samples);
      if (std::abs(tr_mean.real()) > 3 * tr_se || std::abs(tr_mean.imag()) > 3 * tr_se) ++exceed[entries];
      int k = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b, ++k) {
              const Scalar mean = sum[k] / static_cast<double>(samples);
              const double expected = (i == a && j == b) ? 1.0 / n : 0.0;
              const double se = std::sqrt(std::max(sq[k] / samples - std::norm(mean), 1e-30) / samples);
              // se of the modulus bounds the se of each part
              if (std::abs(mean - Scalar(expected)) > 3 * se) ++exceed[k];
            }
    }
    for (int e : exceed) CHECK(e < 2);
  }
}

TEST_CASE("retraction returns the nearest group element") {
  Rng rng(4);
  for (const auto& g : testing::small_groups()) {
    const Matrix q = haar_sample(g, rng).matrix();
    Matrix noisy = q;
    noisy(0, 0) += 1e-6;
    const Matrix r = retract_to_group(noisy, g);
    CHECK(in_group(r, g, 1e-12));
    CHECK(max_abs(r - q) < 1e-5);
  }
}

TEST_CASE("rng state round-trips") {
  Rng a(123);
  a.normal();
  std::stringstream ss;
  ss << a;
  Rng b;
  ss >> b;
  CHECK(a == b);
  CHECK(a.normal() == b.normal());
  CHECK(a.uniform() == b.uniform());
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
}
