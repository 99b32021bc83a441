#pragma once

// Conventions and the U(M) <-> K(2M) correspondence.
//
// Quadratures are ordered R = (q_1..q_M, p_1..p_M) with symplectic form
// Omega = [[0, I], [-I, 0]]. A coherent state |x> has mean vector x and
// energy ||x||^2 / 2. A linear optical unitary U with complex transfer
// matrix G acts on mean vectors through O = [[Re G, Im G], [-Im G, Re G]],
// U|x> = |O x>.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "random.hpp"

namespace linopt {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

/// Mode labels, 1-based: a subset of {1..M}.
using ModeSet = std::vector<int>;

inline constexpr double kGroupTolerance = 1e-10;
inline constexpr double kUnitarityTolerance = 1e-6;
inline constexpr double kBlockTolerance = 1e-8;

inline RealMatrix symplectic_form(int modes) {
  RealMatrix omega = RealMatrix::Zero(2 * modes, 2 * modes);
  omega.topRightCorner(modes, modes).setIdentity();
  omega.bottomLeftCorner(modes, modes) = -RealMatrix::Identity(modes, modes);
  return omega;
}

inline double spectral_norm(const RealMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<RealMatrix> svd(a);
  return svd.singularValues()(0);
}

class MeanVector {
 public:
  MeanVector() = default;
  explicit MeanVector(RealVector components) : x_(std::move(components)) {
    detail::require(x_.size() % 2 == 0, "mean vector must have 2M components");
    detail::require(x_.allFinite(), "mean vector entries must be finite");
  }

  int mode_count() const { return static_cast<int>(x_.size() / 2); }
  double energy() const { return 0.5 * x_.squaredNorm(); }
  const RealVector& components() const { return x_; }

 private:
  RealVector x_;
};

/// Complex M x M transfer matrix. Not necessarily unitary: this is the raw
/// variable the optimizer moves.
class ComplexTransfer {
 public:
  ComplexTransfer() = default;
  explicit ComplexTransfer(ComplexMatrix g) : g_(std::move(g)) {
    detail::require(g_.rows() == g_.cols(), "transfer matrix must be square");
  }

  static ComplexTransfer identity(int modes) {
    return ComplexTransfer(ComplexMatrix::Identity(modes, modes));
  }

  int mode_count() const { return static_cast<int>(g_.rows()); }
  const ComplexMatrix& matrix() const { return g_; }

  /// ||G^dagger G - I||_F^2
  double unitarity_residual() const {
    return (g_.adjoint() * g_ - ComplexMatrix::Identity(g_.rows(), g_.cols())).squaredNorm();
  }
  bool is_unitary(double tolerance = kUnitarityTolerance) const {
    return unitarity_residual() <= tolerance;
  }

 private:
  ComplexMatrix g_;
};

class SymplecticOrthogonal;
inline SymplecticOrthogonal realify(const ComplexTransfer& g);

/// Element of K(2M) = O(2M) ∩ Sp(2M, R), block form [[A, B], [-B, A]].
class SymplecticOrthogonal {
 public:
  SymplecticOrthogonal() = default;

  /// Validates orthogonality, symplecticity and block structure.
  static SymplecticOrthogonal from_matrix(RealMatrix o, double tolerance = kGroupTolerance) {
    detail::require(o.rows() == o.cols() && o.rows() % 2 == 0, "expected a 2M x 2M matrix");
    SymplecticOrthogonal s(std::move(o));
    if (s.orthogonality_residual() > tolerance)
      throw InvalidParameter("matrix is not orthogonal");
    if (s.symplectic_residual() > tolerance)
      throw InvalidParameter("matrix is not symplectic");
    return s;
  }

  static SymplecticOrthogonal identity(int modes) {
    return SymplecticOrthogonal(RealMatrix::Identity(2 * modes, 2 * modes));
  }

  int mode_count() const { return static_cast<int>(o_.rows() / 2); }
  const RealMatrix& matrix() const { return o_; }

  double orthogonality_residual() const {
    return (o_.transpose() * o_ - RealMatrix::Identity(o_.rows(), o_.cols())).norm();
  }
  double symplectic_residual() const {
    RealMatrix omega = symplectic_form(mode_count());
    return (o_.transpose() * omega * o_ - omega).norm();
  }

  SymplecticOrthogonal inverse() const { return SymplecticOrthogonal(o_.transpose()); }

  friend SymplecticOrthogonal operator*(const SymplecticOrthogonal& a,
                                        const SymplecticOrthogonal& b) {
    detail::require_dims(a.o_.cols() == b.o_.rows(), "mode counts differ");
    return SymplecticOrthogonal(a.o_ * b.o_);
  }

 private:
  explicit SymplecticOrthogonal(RealMatrix o) : o_(std::move(o)) {}
  friend SymplecticOrthogonal realify(const ComplexTransfer& g);

  RealMatrix o_;
};

/// Block matrix [[Re G, Im G], [-Im G, Re G]] without any unitarity check.
inline RealMatrix realify_unchecked(const ComplexMatrix& g) {
  const Eigen::Index m = g.rows();
  RealMatrix o(2 * m, 2 * m);
  o.topLeftCorner(m, m) = g.real();
  o.topRightCorner(m, m) = g.imag();
  o.bottomLeftCorner(m, m) = -g.imag();
  o.bottomRightCorner(m, m) = g.real();
  return o;
}

inline SymplecticOrthogonal realify(const ComplexTransfer& g) {
  const double residual = g.unitarity_residual();
  if (residual > kUnitarityTolerance)
    throw NonUnitaryInput("||G^dagger G - I||_F^2 = " + std::to_string(residual));
  return SymplecticOrthogonal(realify_unchecked(g.matrix()));
}

/// Reads G back from the (1,1) and (1,2) blocks.
inline ComplexTransfer complexify(const RealMatrix& o) {
  if (o.rows() != o.cols() || o.rows() % 2 != 0)
    throw MalformedBlocks("expected a 2M x 2M matrix");
  const Eigen::Index m = o.rows() / 2;
  const RealMatrix a = o.topLeftCorner(m, m);
  const RealMatrix b = o.topRightCorner(m, m);
  const double defect = m == 0 ? 0.0
                               : (o.bottomLeftCorner(m, m) + b).cwiseAbs().maxCoeff() +
                                     (o.bottomRightCorner(m, m) - a).cwiseAbs().maxCoeff();
  if (defect > kBlockTolerance)
    throw MalformedBlocks("matrix is not of the form [[A, B], [-B, A]]");
  ComplexMatrix g(m, m);
  g.real() = a;
  g.imag() = b;
  return ComplexTransfer(std::move(g));
}

inline ComplexTransfer complexify(const SymplecticOrthogonal& o) { return complexify(o.matrix()); }

/// zeta = q - i p, the coordinates in which O x corresponds to G zeta.
inline ComplexVector to_transfer_coordinates(const RealVector& x) {
  const Eigen::Index m = x.size() / 2;
  ComplexVector z(m);
  for (Eigen::Index i = 0; i < m; ++i) z[i] = Complex(x[i], -x[m + i]);
  return z;
}

inline RealVector from_transfer_coordinates(const ComplexVector& z) {
  const Eigen::Index m = z.size();
  RealVector x(2 * m);
  x.head(m) = z.real();
  x.tail(m) = -z.imag();
  return x;
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// diag(R) absorbed into Q.
inline ComplexMatrix haar_unitary(int modes, Rng& rng) {
  detail::require(modes >= 1, "mode count must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(2.0));
  ComplexMatrix z(modes, modes);
  for (int j = 0; j < modes; ++j)
    for (int i = 0; i < modes; ++i) z(i, j) = Complex(normal(rng), normal(rng));
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(modes, modes);
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < modes; ++i) {
    const double mag = std::abs(r(i, i));
    const Complex phase = mag > 0.0 ? r(i, i) / mag : Complex(1.0, 0.0);
    q.col(i) *= phase;
  }
  return q;
}

inline SymplecticOrthogonal random_linear_optical(int modes, Rng& rng) {
  return realify(ComplexTransfer(haar_unitary(modes, rng)));
}

inline SymplecticOrthogonal random_linear_optical(int modes, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return random_linear_optical(modes, rng);
}

/// Throws ModeIndexOutOfRange unless `modes` are distinct labels in 1..M.
inline void validate_modes(const ModeSet& modes, int mode_count) {
  std::vector<bool> seen(static_cast<std::size_t>(std::max(mode_count, 0)), false);
  for (int label : modes) {
    if (label < 1 || label > mode_count)
      throw ModeIndexOutOfRange("mode " + std::to_string(label) + " outside 1.." +
                                std::to_string(mode_count));
    if (seen[static_cast<std::size_t>(label - 1)])
      throw ModeIndexOutOfRange("mode " + std::to_string(label) + " listed twice");
    seen[static_cast<std::size_t>(label - 1)] = true;
  }
}

/// Places `inner` on the listed modes (inner index a -> label modes[a]) and
/// the identity elsewhere.
inline ComplexMatrix embed_transfer(const ComplexMatrix& inner, const ModeSet& modes,
                                    int mode_count) {
  validate_modes(modes, mode_count);
  detail::require_dims(inner.rows() == static_cast<Eigen::Index>(modes.size()) &&
                           inner.cols() == inner.rows(),
                       "inner matrix size does not match the mode set");
  ComplexMatrix g = ComplexMatrix::Identity(mode_count, mode_count);
  for (std::size_t a = 0; a < modes.size(); ++a)
    for (std::size_t b = 0; b < modes.size(); ++b)
      g(modes[a] - 1, modes[b] - 1) = inner(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  return g;
}

/// O = T ⊕ I on the complement of `modes`.
struct JuntaSpec {
  int mode_count = 0;
  ModeSet modes;
  SymplecticOrthogonal inner;
};

inline SymplecticOrthogonal embed_junta(const JuntaSpec& spec) {
  validate_modes(spec.modes, spec.mode_count);
  detail::require_dims(spec.inner.mode_count() == static_cast<int>(spec.modes.size()),
                       "inner matrix acts on a different number of modes than |J|");
  const ComplexMatrix inner = complexify(spec.inner).matrix();
  return realify(ComplexTransfer(embed_transfer(inner, spec.modes, spec.mode_count)));
}

inline JuntaSpec random_junta(int mode_count, ModeSet modes, Rng& rng) {
  validate_modes(modes, mode_count);
  JuntaSpec spec;
  spec.mode_count = mode_count;
  spec.inner = modes.empty() ? SymplecticOrthogonal()
                             : random_linear_optical(static_cast<int>(modes.size()), rng);
  spec.modes = std::move(modes);
  return spec;
}

/// L(U, V) = (O_U - O_V)^T (O_U - O_V)
inline RealMatrix difference_gram(const RealMatrix& o_u, const RealMatrix& o_v) {
  const RealMatrix d = o_u - o_v;
  return d.transpose() * d;
}

/// |<x|U^dagger V|x>|^2 = exp(-x^T L x / 2), for arbitrary real matrices.
inline double fidelity(const RealVector& x, const RealMatrix& o_u, const RealMatrix& o_v) {
  detail::require_dims(o_u.rows() == o_v.rows() && o_u.cols() == o_v.cols(),
                       "circuits act on different numbers of modes");
  detail::require_dims(o_u.cols() == x.size(), "mean vector does not match the mode count");
  return std::exp(-0.5 * ((o_u - o_v) * x).squaredNorm());
}

inline double fidelity(const MeanVector& x, const SymplecticOrthogonal& o_u,
                       const SymplecticOrthogonal& o_v) {
  return fidelity(x.components(), o_u.matrix(), o_v.matrix());
}

inline double frobenius_distance_sq(const SymplecticOrthogonal& a, const SymplecticOrthogonal& b) {
  return (a.matrix() - b.matrix()).squaredNorm();
}

}  // namespace linopt
