#include "ymloop/group.hpp"

#include <array>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ymloop {

std::string to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::SO: return "SO";
    case GroupKind::U: return "U";
    case GroupKind::SU: return "SU";
  }
  return "?";
}

GroupKind parse_group_kind(const std::string& text) {
  if (text == "SO" || text == "so") return GroupKind::SO;
  if (text == "U" || text == "u") return GroupKind::U;
  if (text == "SU" || text == "su") return GroupKind::SU;
  throw std::invalid_argument("unknown group kind '" + text + "' (expected SO, U or SU)");
}

// --- Rational --------------------------------------------------------------

Rational::Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
  if (d == 0) throw std::invalid_argument("Rational: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

Rational operator*(const Rational& a, const Rational& b) { return {a.num * b.num, a.den * b.den}; }
Rational operator+(const Rational& a, const Rational& b) {
  return {a.num * b.den + b.num * a.den, a.den * b.den};
}
Rational operator-(const Rational& a) { return {-a.num, a.den}; }

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

// --- GroupSpec -------------------------------------------------------------

GroupSpec::GroupSpec(GroupKind kind, int n) : kind_(kind), n_(n) {
  const int min_n = kind == GroupKind::U ? 1 : 2;
  if (n < min_n) {
    throw std::invalid_argument(to_string(kind) + "(" + std::to_string(n) + ") is not supported; N must be >= " +
                                std::to_string(min_n));
  }
  if (n > kMaxN) throw std::invalid_argument("N = " + std::to_string(n) + " exceeds kMaxN");
}

int GroupSpec::algebra_dim() const {
  switch (kind_) {
    case GroupKind::SO: return n_ * (n_ - 1) / 2;
    case GroupKind::U: return n_ * n_;
    case GroupKind::SU: return n_ * n_ - 1;
  }
  return 0;
}

std::string GroupSpec::name() const { return to_string(kind_) + "(" + std::to_string(n_) + ")"; }

GroupConstants group_constants(const GroupSpec& g) {
  const std::int64_t n = g.n();
  switch (g.kind()) {
    case GroupKind::SO: return {Rational(-(n - 1), 2), Rational(-1, 2), Rational(0), Rational(1, 2)};
    case GroupKind::U: return {Rational(-n), Rational(-1), Rational(0), Rational(0)};
    case GroupKind::SU: return {Rational(-(n * n - 1), n), Rational(-1), Rational(1, n), Rational(0)};
  }
  return {};
}

// --- Rng ---------------------------------------------------------------------

std::ostream& operator<<(std::ostream& os, const Rng& rng) {
  return os << rng.engine_ << ' ' << rng.normal_ << ' ' << rng.uniform_;
}

std::istream& operator>>(std::istream& is, Rng& rng) { return is >> rng.engine_ >> rng.normal_ >> rng.uniform_; }

bool operator==(const Rng& a, const Rng& b) {
  return a.engine_ == b.engine_ && a.normal_ == b.normal_ && a.uniform_ == b.uniform_;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// --- matrices ----------------------------------------------------------------

Matrix identity(int n) { return Matrix::Identity(n, n); }

double inner_product(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw std::invalid_argument("inner_product: dimension mismatch");
  }
  // Re Tr(X Y*) = Re sum_ij X_ij conj(Y_ij)
  double acc = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) acc += (x(i, j) * std::conj(y(i, j))).real();
  return acc;
}

double unitarity_defect(const Matrix& q) {
  const Matrix d = q * q.adjoint() - Matrix::Identity(q.rows(), q.cols());
  return d.cwiseAbs().maxCoeff();
}

namespace {

struct PadeTable {
  int degree;
  double theta;  // largest ||A||_1 for which this degree reaches double precision
  std::array<double, 14> coeff{};
};

PadeTable make_pade(int m, double theta) {
  PadeTable t{m, theta, {}};
  // c_j = (2m-j)! m! / ((2m)! j! (m-j)!), built by the ratio c_{j+1}/c_j = (m-j) / ((2m-j)(j+1))
  double c = 1.0;
  for (int j = 0; j <= m; ++j) {
    t.coeff[j] = c;
    c *= static_cast<double>(m - j) / (static_cast<double>(2 * m - j) * static_cast<double>(j + 1));
  }
  return t;
}

const std::array<PadeTable, 5>& pade_tables() {
  static const std::array<PadeTable, 5> tables = {
      make_pade(3, 1.495585217958292e-2), make_pade(5, 2.539398330063230e-1), make_pade(7, 9.504178996162932e-1),
      make_pade(9, 2.097847961257068e0), make_pade(13, 5.371920351148152e0)};
  return tables;
}

Matrix pade_exp(const Matrix& a, const PadeTable& t) {
  const Eigen::Index n = a.rows();
  const Matrix a2 = a * a;
  Matrix even = Matrix::Zero(n, n);
  Matrix odd = Matrix::Zero(n, n);
  Matrix power = Matrix::Identity(n, n);
  for (int k = 0; 2 * k <= t.degree; ++k) {
    even += t.coeff[2 * k] * power;
    if (2 * k + 1 <= t.degree) odd += t.coeff[2 * k + 1] * power;
    if (2 * k + 2 <= t.degree) power = power * a2;
  }
  const Matrix u = a * odd;
  const Matrix p = even + u;
  const Matrix q = even - u;
  return q.partialPivLu().solve(p);
}

}  // namespace

Matrix expm(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("expm: matrix not square");
  if (!a.allFinite()) throw NumericalFault("expm: non-finite input");
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  const auto& tables = pade_tables();
  for (const auto& t : tables) {
    if (norm <= t.theta) return pade_exp(a, t);
  }
  const PadeTable& top = tables.back();
  const int s = std::max(0, static_cast<int>(std::ceil(std::log2(norm / top.theta))));
  Matrix r = pade_exp(a / std::ldexp(1.0, s), top);
  for (int i = 0; i < s; ++i) r = r * r;
  if (!r.allFinite()) throw NumericalFault("expm: scaling and squaring did not produce a finite result");
  return r;
}

// --- algebra / group elements ------------------------------------------------

namespace {

double anti_hermitian_defect(const Matrix& m) { return (m + m.adjoint()).cwiseAbs().maxCoeff(); }

void check_dims(const Matrix& m, const GroupSpec& g, const char* who) {
  if (m.rows() != g.n() || m.cols() != g.n()) {
    throw std::invalid_argument(std::string(who) + ": expected " + std::to_string(g.n()) + "x" +
                                std::to_string(g.n()) + " matrix");
  }
}

}  // namespace

AlgebraElement::AlgebraElement(Matrix m, const GroupSpec& g, double tol) : m_(std::move(m)), g_(g) {
  check_dims(m_, g_, "AlgebraElement");
  if (anti_hermitian_defect(m_) > tol) throw std::invalid_argument("AlgebraElement: X + X* != 0");
  if (g_.is_real() && m_.imag().cwiseAbs().maxCoeff() > tol) {
    throw std::invalid_argument("AlgebraElement: so(N) element must be real");
  }
  if (g_.kind() == GroupKind::SU && std::abs(m_.trace()) > tol) {
    throw std::invalid_argument("AlgebraElement: su(N) element must be traceless");
  }
}

bool in_group(const Matrix& m, const GroupSpec& g, double tol) {
  if (m.rows() != g.n() || m.cols() != g.n() || !m.allFinite()) return false;
  if (unitarity_defect(m) > tol) return false;
  if (g.is_real() && m.imag().cwiseAbs().maxCoeff() > tol) return false;
  const Scalar det = m.determinant();
  switch (g.kind()) {
    case GroupKind::SO:
    case GroupKind::SU: return std::abs(det - 1.0) <= 100 * tol;
    case GroupKind::U: return std::abs(std::abs(det) - 1.0) <= 100 * tol;
  }
  return false;
}

GroupElement::GroupElement(Matrix m, const GroupSpec& g, double tol) : m_(std::move(m)), g_(g) {
  check_dims(m_, g_, "GroupElement");
  if (!in_group(m_, g_, tol)) throw std::invalid_argument("GroupElement: matrix is not in " + g_.name());
}

Matrix project_matrix(const Matrix& m, const GroupSpec& g) {
  check_dims(m, g, "project_to_algebra");
  switch (g.kind()) {
    case GroupKind::SO: {
      const Matrix re = m.real().cast<Scalar>();
      return 0.5 * (re - re.transpose());
    }
    case GroupKind::U: return 0.5 * (m - m.adjoint());
    case GroupKind::SU: {
      Matrix x = 0.5 * (m - m.adjoint());
      const Scalar tr = x.trace() / static_cast<double>(g.n());
      x.diagonal().array() -= tr;
      return x;
    }
  }
  return m;
}

AlgebraElement project_to_algebra(const Matrix& m, const GroupSpec& g) {
  return AlgebraElement(project_matrix(m, g), g, AlgebraElement::Unchecked{});
}

std::vector<Matrix> algebra_basis(const GroupSpec& g) {
  const int n = g.n();
  const double r = 1.0 / std::sqrt(2.0);
  const Scalar i1(0.0, 1.0);
  std::vector<Matrix> basis;
  basis.reserve(g.algebra_dim());
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      Matrix a = Matrix::Zero(n, n);
      a(j, k) = r;
      a(k, j) = -r;
      basis.push_back(a);
      if (g.kind() != GroupKind::SO) {
        Matrix s = Matrix::Zero(n, n);
        s(j, k) = i1 * r;
        s(k, j) = i1 * r;
        basis.push_back(s);
      }
    }
  }
  if (g.kind() == GroupKind::U) {
    for (int j = 0; j < n; ++j) {
      Matrix d = Matrix::Zero(n, n);
      d(j, j) = i1;
      basis.push_back(d);
    }
  } else if (g.kind() == GroupKind::SU) {
    // i * diag(1,..,1,-k,0,..) / sqrt(k(k+1)), k = 1..n-1
    for (int k = 1; k < n; ++k) {
      Matrix d = Matrix::Zero(n, n);
      const double norm = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
      for (int j = 0; j < k; ++j) d(j, j) = i1 * norm;
      d(k, k) = -i1 * (k * norm);
      basis.push_back(d);
    }
  }
  return basis;
}

void fill_algebra_gaussian(Matrix& out, const GroupSpec& g, Rng& rng) {
  // Coefficient order matches algebra_basis().
  const int n = g.n();
  const double r = 1.0 / std::sqrt(2.0);
  out.setZero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      const double a = rng.normal() * r;
      const double s = g.kind() == GroupKind::SO ? 0.0 : rng.normal() * r;
      out(j, k) = Scalar(a, s);
      out(k, j) = Scalar(-a, s);
    }
  }
  if (g.kind() == GroupKind::U) {
    for (int j = 0; j < n; ++j) out(j, j) = Scalar(0.0, rng.normal());
  } else if (g.kind() == GroupKind::SU) {
    for (int k = 1; k < n; ++k) {
      const double c = rng.normal() / std::sqrt(static_cast<double>(k) * (k + 1));
      for (int j = 0; j < k; ++j) out(j, j) += Scalar(0.0, c);
      out(k, k) += Scalar(0.0, -k * c);
    }
  }
}

AlgebraElement sample_algebra_gaussian(const GroupSpec& g, Rng& rng) {
  Matrix m;
  fill_algebra_gaussian(m, g, rng);
  return AlgebraElement(std::move(m), g, AlgebraElement::Unchecked{});
}

GroupElement group_exp(const AlgebraElement& x) {
  Matrix q = expm(x.matrix());
  if (!in_group(q, x.group())) throw NumericalFault("group_exp: result left " + x.group().name());
  return GroupElement(std::move(q), x.group());
}

GroupElement haar_sample(const GroupSpec& g, Rng& rng) {
  const int n = g.n();
  Matrix z(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (g.is_real()) {
        z(i, j) = rng.normal();
      } else {
        const double re = rng.normal();
        const double im = rng.normal();
        z(i, j) = Scalar(re, im) / std::sqrt(2.0);
      }
    }
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Q diag(r_jj / |r_jj|) is Haar on O(N) / U(N)
  for (int j = 0; j < n; ++j) {
    const Scalar d = r(j, j);
    const double a = std::abs(d);
    q.col(j) *= a > 0 ? d / a : Scalar(1.0);
  }
  if (g.kind() == GroupKind::SO) {
    q = q.real().cast<Scalar>();
    if (q.determinant().real() < 0) q.col(0) *= -1.0;
  } else if (g.kind() == GroupKind::SU) {
    const double phase = std::arg(q.determinant());
    q *= std::polar(1.0, -phase / n);
  }
  return GroupElement(std::move(q), g);
}

Matrix retract_to_group(const Matrix& m, const GroupSpec& g) {
  check_dims(m, g, "retract_to_group");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix q = svd.matrixU() * svd.matrixV().adjoint();
  if (g.kind() == GroupKind::SO) {
    q = q.real().cast<Scalar>();
    if (q.determinant().real() < 0) throw NumericalFault("retract_to_group: determinant flipped sign");
  } else if (g.kind() == GroupKind::SU) {
    const double phase = std::arg(q.determinant());
    q *= std::polar(1.0, -phase / g.n());
  }
  return q;
}

}  // namespace ymloop
