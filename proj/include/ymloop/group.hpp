#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ymloop {

/// Largest matrix dimension supported. Matrices live on the stack up to this size.
inline constexpr int kMaxN = 10;

using Scalar = std::complex<double>;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxN, kMaxN>;

/// Raised when a numerical routine leaves the group manifold or produces non-finite values.
class NumericalFault : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class GroupKind { SO, U, SU };

std::string to_string(GroupKind kind);
GroupKind parse_group_kind(const std::string& text);

/// Exact rational number with 64-bit numerator and positive denominator, kept reduced.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a);
  std::string str() const;
};

/// Structure group constants. c_g is defined by sum_a v_a^2 = c_g I over an orthonormal
/// algebra basis; (lambda, nu, mu) parametrize E[X^ij X^kl] = lambda d_il d_jk + nu d_ij d_kl
/// + mu d_ik d_jl for a unit-time algebra increment X.
struct GroupConstants {
  Rational c_g;
  Rational lambda;
  Rational nu;
  Rational mu;
};

class GroupSpec {
public:
  GroupSpec(GroupKind kind, int n);

  GroupKind kind() const { return kind_; }
  int n() const { return n_; }
  bool is_real() const { return kind_ == GroupKind::SO; }
  /// Real dimension of the Lie algebra.
  int algebra_dim() const;
  std::string name() const;

  friend bool operator==(const GroupSpec&, const GroupSpec&) = default;

private:
  GroupKind kind_;
  int n_;
};

GroupConstants group_constants(const GroupSpec& g);

/// Wraps std::mt19937_64 with the normal distribution used for algebra noise. The
/// full state (engine and cached normal) round-trips through operator<< / >>.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::mt19937_64& engine() { return engine_; }

  friend std::ostream& operator<<(std::ostream& os, const Rng& rng);
  friend std::istream& operator>>(std::istream& is, Rng& rng);
  friend bool operator==(const Rng& a, const Rng& b);

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Counter-based seed splitting: the k-th stream of a master seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// --- matrices -------------------------------------------------------------

Matrix identity(int n);

/// Hilbert-Schmidt inner product Re Tr(X Y*).
double inner_product(const Matrix& x, const Matrix& y);

/// max_ij |(Q Q* - I)_ij|
double unitarity_defect(const Matrix& q);

/// Matrix exponential by scaling and squaring with a diagonal Padé core.
/// Throws NumericalFault on non-finite output.
Matrix expm(const Matrix& a);

// --- Lie algebra and group elements ----------------------------------------

class AlgebraElement {
public:
  /// Validates X + X* = 0 (and Tr X = 0 for SU) to `tol`; throws std::invalid_argument.
  AlgebraElement(Matrix m, const GroupSpec& g, double tol = 1e-10);

  const Matrix& matrix() const { return m_; }
  const GroupSpec& group() const { return g_; }

private:
  struct Unchecked {};
  AlgebraElement(Matrix m, const GroupSpec& g, Unchecked) : m_(std::move(m)), g_(g) {}
  friend AlgebraElement project_to_algebra(const Matrix&, const GroupSpec&);
  friend AlgebraElement sample_algebra_gaussian(const GroupSpec&, Rng&);

  Matrix m_;
  GroupSpec g_;
};

class GroupElement {
public:
  /// Validates ||QQ* - I||_inf <= tol and the determinant condition; throws std::invalid_argument.
  GroupElement(Matrix m, const GroupSpec& g, double tol = kManifoldTolerance);

  const Matrix& matrix() const { return m_; }
  const GroupSpec& group() const { return g_; }

  static constexpr double kManifoldTolerance = 1e-8;

private:
  Matrix m_;
  GroupSpec g_;
};

/// True when `m` is a member of the group to within `tol` (unitarity and determinant).
bool in_group(const Matrix& m, const GroupSpec& g, double tol = GroupElement::kManifoldTolerance);

/// Orthogonal projection onto the Lie algebra under the Hilbert-Schmidt product.
/// For SO the imaginary part of M is discarded.
AlgebraElement project_to_algebra(const Matrix& m, const GroupSpec& g);
Matrix project_matrix(const Matrix& m, const GroupSpec& g);

/// An orthonormal basis of the Lie algebra (real dimension algebra_dim()).
std::vector<Matrix> algebra_basis(const GroupSpec& g);

/// Standard Gaussian on the algebra: sum of iid N(0,1) coefficients over algebra_basis().
AlgebraElement sample_algebra_gaussian(const GroupSpec& g, Rng& rng);
/// Same distribution as sample_algebra_gaussian, written in place without validation.
void fill_algebra_gaussian(Matrix& out, const GroupSpec& g, Rng& rng);

GroupElement group_exp(const AlgebraElement& x);

/// Haar-distributed group element (QR of a Gaussian matrix with phase fixing).
GroupElement haar_sample(const GroupSpec& g, Rng& rng);

/// Nearest group element in the polar sense, with determinant fixed for SO/SU.
Matrix retract_to_group(const Matrix& m, const GroupSpec& g);

}  // namespace ymloop
