#pragma once

// Truncated Fock-space brute force for one or two modes. Used only to check
// the closed-form Gaussian formulas.
//
// Conventions: q = (a + a^dag)/sqrt2, p = (a - a^dag)/(i sqrt2), so that the
// displacement D(x) = exp(-i x^T Omega R) = exp(alpha a^dag - alpha* a) with
// alpha = (x_q + i x_p)/sqrt2. A transfer matrix G acts on q - i p, hence on
// alpha by conj(G); the Fock unitary is exp(-i a^dag H a) with
// exp(-i H) = conj(G).

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <unsupported/Eigen/MatrixFunctions>

#include "core.hpp"

namespace linopt {

inline int default_cutoff(int modes) { return modes == 1 ? 40 : 25; }

using SparseComplex = Eigen::SparseMatrix<Complex>;

/// Per-mode cutoff n_max: levels 0..n_max on each mode, mode 1 most
/// significant in the product basis.
class FockSpace {
 public:
  explicit FockSpace(int modes, int cutoff = -1) : modes_(modes), cutoff_(cutoff) {
    detail::require(modes == 1 || modes == 2, "Fock oracle supports M = 1 or 2");
    if (cutoff_ < 0) cutoff_ = default_cutoff(modes);
    detail::require(cutoff_ >= 1, "cutoff must be >= 1");
  }

  int modes() const { return modes_; }
  int cutoff() const { return cutoff_; }
  int levels() const { return cutoff_ + 1; }
  Eigen::Index dim() const { return modes_ == 1 ? levels() : levels() * levels(); }
  Eigen::Index index(int n1, int n2 = 0) const { return modes_ == 1 ? n1 : n1 * levels() + n2; }

  /// Annihilation operator on mode j (1-based).
  SparseComplex annihilation(int j) const {
    detail::require(j >= 1 && j <= modes_, "mode out of range");
    const SparseComplex single = single_mode_annihilation();
    if (modes_ == 1) return single;
    SparseComplex id(levels(), levels());
    id.setIdentity();
    return j == 1 ? kron(single, id) : kron(id, single);
  }

  SparseComplex position(int j) const {
    const SparseComplex a = annihilation(j);
    return SparseComplex((a + SparseComplex(a.adjoint())) * Complex(1.0 / std::sqrt(2.0), 0.0));
  }

  SparseComplex momentum(int j) const {
    const SparseComplex a = annihilation(j);
    return SparseComplex((a - SparseComplex(a.adjoint())) * Complex(0.0, -1.0 / std::sqrt(2.0)));
  }

  /// Total number operator sum_j a_j^dag a_j (diagonal).
  SparseComplex number_operator() const {
    SparseComplex n(dim(), dim());
    for (int j = 1; j <= modes_; ++j) {
      const SparseComplex a = annihilation(j);
      n += SparseComplex(a.adjoint()) * a;
    }
    return n;
  }

 private:
  SparseComplex single_mode_annihilation() const {
    SparseComplex a(levels(), levels());
    for (int n = 1; n < levels(); ++n) a.insert(n - 1, n) = std::sqrt(static_cast<double>(n));
    a.makeCompressed();
    return a;
  }

  static SparseComplex kron(const SparseComplex& a, const SparseComplex& b) {
    SparseComplex out(a.rows() * b.rows(), a.cols() * b.cols());
    std::vector<Eigen::Triplet<Complex>> entries;
    for (int ka = 0; ka < a.outerSize(); ++ka)
      for (SparseComplex::InnerIterator ia(a, ka); ia; ++ia)
        for (int kb = 0; kb < b.outerSize(); ++kb)
          for (SparseComplex::InnerIterator ib(b, kb); ib; ++ib)
            entries.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                                 ia.value() * ib.value());
    out.setFromTriplets(entries.begin(), entries.end());
    return out;
  }

  int modes_;
  int cutoff_;
};

namespace detail {

inline void check_truncation(const RealVector& x, const FockSpace& space) {
  require_dims(x.size() == 2 * space.modes(), "mean vector does not match the Fock space");
  if (0.5 * x.squaredNorm() > space.cutoff() / 4.0)
    throw TruncationRisk("mean photon number " + std::to_string(0.5 * x.squaredNorm()) +
                         " exceeds cutoff/4 = " + std::to_string(space.cutoff() / 4.0));
}

}  // namespace detail

/// D(x)|0> with D built as the matrix exponential of -i x^T Omega R on each
/// mode's truncated space. The truncated generator is anti-Hermitian, so
/// the result is normalized.
inline ComplexVector coherent_vector(const RealVector& x, const FockSpace& space) {
  detail::check_truncation(x, space);
  const int m = space.modes();
  const FockSpace single(1, space.cutoff());
  const ComplexMatrix q(single.position(1));
  const ComplexMatrix p(single.momentum(1));
  std::vector<ComplexVector> per_mode;
  for (int j = 0; j < m; ++j) {
    const ComplexMatrix generator = Complex(0.0, -1.0) * (x[j] * p - x[m + j] * q);
    ComplexVector vacuum = ComplexVector::Zero(single.levels());
    vacuum[0] = 1.0;
    per_mode.push_back(generator.exp() * vacuum);
  }
  if (m == 1) return per_mode[0];
  ComplexVector out(space.dim());
  for (int n1 = 0; n1 < space.levels(); ++n1)
    for (int n2 = 0; n2 < space.levels(); ++n2) out[space.index(n1, n2)] = per_mode[0][n1] * per_mode[1][n2];
  return out;
}

inline ComplexVector coherent_vector(const MeanVector& x, const FockSpace& space) {
  return coherent_vector(x.components(), space);
}

/// Photon-number-conserving unitary exp(-i a^dag H a) stored as one dense
/// block per total photon number N = 0..cutoff. Product-basis states with
/// N > cutoff lie outside every complete sector and are left unchanged.
class FockUnitary {
 public:
  FockUnitary(const FockSpace& space, std::vector<ComplexMatrix> blocks, bool branch_warning)
      : space_(space), blocks_(std::move(blocks)), branch_warning_(branch_warning) {}

  const FockSpace& space() const { return space_; }
  const ComplexMatrix& sector(int n) const { return blocks_.at(static_cast<std::size_t>(n)); }
  /// An eigenvalue of G sat at -1 and was nudged off the branch cut.
  bool branch_warning() const { return branch_warning_; }

  ComplexVector apply(const ComplexVector& v) const {
    detail::require_dims(v.size() == space_.dim(), "vector does not match the Fock space");
    ComplexVector out = v;
    for (int n = 0; n <= space_.cutoff(); ++n) {
      const auto idx = sector_indices(n);
      ComplexVector local(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) local[static_cast<Eigen::Index>(k)] = v[idx[k]];
      local = blocks_[static_cast<std::size_t>(n)] * local;
      for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = local[static_cast<Eigen::Index>(k)];
    }
    return out;
  }

  ComplexMatrix to_dense() const {
    ComplexMatrix u = ComplexMatrix::Identity(space_.dim(), space_.dim());
    for (int n = 0; n <= space_.cutoff(); ++n) {
      const auto idx = sector_indices(n);
      const ComplexMatrix& b = blocks_[static_cast<std::size_t>(n)];
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < idx.size(); ++c)
          u(idx[r], idx[c]) = b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
    return u;
  }

  /// Product-basis indices of sector N; for two modes ordered by n1.
  std::vector<Eigen::Index> sector_indices(int n) const {
    if (space_.modes() == 1) return {n};
    std::vector<Eigen::Index> idx;
    for (int k = 0; k <= n; ++k) idx.push_back(space_.index(k, n - k));
    return idx;
  }

 private:
  FockSpace space_;
  std::vector<ComplexMatrix> blocks_;
  bool branch_warning_;
};

/// Hermitian H with exp(-i H) = conj(G), from the Schur form of conj(G)
/// (diagonal, since G is normal) and the principal logarithm.
inline ComplexMatrix transfer_hamiltonian(const ComplexMatrix& g, bool* branch_warning = nullptr) {
  Eigen::ComplexSchur<ComplexMatrix> schur(g.conjugate());
  const ComplexMatrix& t = schur.matrixT();
  ComplexVector phase(t.rows());
  bool warned = false;
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    double arg = std::arg(t(i, i));
    if (std::abs(t(i, i) + 1.0) < 1e-9) {
      arg = M_PI - 1e-9;
      warned = true;
    }
    phase[i] = Complex(arg, 0.0);  // exp(-i H) = conj(G)  =>  H = -arg
  }
  if (branch_warning) *branch_warning = warned;
  const ComplexMatrix& z = schur.matrixU();
  ComplexMatrix h = -(z * phase.asDiagonal() * z.adjoint());
  return 0.5 * (h + h.adjoint());
}

inline FockUnitary gaussian_unitary(const SymplecticOrthogonal& o, const FockSpace& space) {
  detail::require_dims(o.mode_count() == space.modes(), "circuit does not match the Fock space");
  const ComplexMatrix g = complexify(o).matrix();
  bool warned = false;
  const ComplexMatrix h = transfer_hamiltonian(g, &warned);
  std::vector<ComplexMatrix> blocks;
  for (int n = 0; n <= space.cutoff(); ++n) {
    ComplexMatrix hn;
    if (space.modes() == 1) {
      hn = ComplexMatrix::Constant(1, 1, h(0, 0) * static_cast<double>(n));
    } else {
      // basis |k, n-k>, k = 0..n
      hn = ComplexMatrix::Zero(n + 1, n + 1);
      for (int k = 0; k <= n; ++k) {
        hn(k, k) = h(0, 0) * static_cast<double>(k) + h(1, 1) * static_cast<double>(n - k);
        if (k < n) {
          const double amp = std::sqrt(static_cast<double>((k + 1) * (n - k)));
          hn(k + 1, k) = h(0, 1) * amp;  // a1^dag a2
          hn(k, k + 1) = h(1, 0) * amp;  // a2^dag a1
        }
      }
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hn);
    const ComplexVector phases =
        (Complex(0.0, -1.0) * es.eigenvalues().cast<Complex>()).array().exp().matrix();
    blocks.push_back(es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint());
  }
  return FockUnitary(space, std::move(blocks), warned);
}

/// |<x| U^dag V |x>|^2 evaluated in the truncated Fock space.
inline double oracle_fidelity(const RealVector& x, const SymplecticOrthogonal& o_u,
                              const SymplecticOrthogonal& o_v, const FockSpace& space) {
  const ComplexVector psi = coherent_vector(x, space);
  const ComplexVector u = gaussian_unitary(o_u, space).apply(psi);
  const ComplexVector v = gaussian_unitary(o_v, space).apply(psi);
  return std::norm(u.dot(v));
}

inline double oracle_fidelity(const MeanVector& x, const SymplecticOrthogonal& o_u,
                              const SymplecticOrthogonal& o_v, const FockSpace& space) {
  return oracle_fidelity(x.components(), o_u, o_v, space);
}

}  // namespace linopt
