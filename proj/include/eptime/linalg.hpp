#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace eptime {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

namespace linalg {

/// Largest absolute entry.
double max_abs(const CMatrix &a);

/// max |A - A^dagger| entrywise.
double hermiticity_defect(const CMatrix &a);

/// Largest singular value.
double spectral_norm(const CMatrix &a);

/// Kronecker product with `a` as the outer (slow) index.
CMatrix kron(const CMatrix &a, const CMatrix &b);
CVector kron(const CVector &a, const CVector &b);

/// |<a|b>| / (|a| |b|); insensitive to global phase and scale.
double fidelity(const CVector &a, const CVector &b);

/// Hermitian eigendecomposition, eigenvalues ascending.
struct HermitianEigen {
    RVector values;
    CMatrix vectors;
};
HermitianEigen eigh(const CMatrix &h);

/// exp(-i * theta * H) from a precomputed eigendecomposition.
CMatrix unitary_propagator(const HermitianEigen &eig, double theta);

/// Applies exp(-i * theta * H) to `v` without forming the full propagator.
CVector apply_propagator(const HermitianEigen &eig, double theta,
                         const CVector &v);

/// Modified Gram-Schmidt with one re-orthogonalization pass. Columns whose
/// residual norm drops below `drop_tol` are discarded.
CMatrix orthonormalize(const CMatrix &columns, double drop_tol = 1e-10);

/// Principal angles (radians, ascending) between the column spans of two
/// matrices with orthonormal columns. Computed from sines, so small angles
/// are resolved to roundoff rather than to sqrt(roundoff).
std::vector<double> principal_angles(const CMatrix &a, const CMatrix &b);

} // namespace linalg
} // namespace eptime
