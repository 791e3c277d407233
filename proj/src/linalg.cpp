#include "eptime/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "eptime/errors.hpp"

namespace eptime::linalg {

double max_abs(const CMatrix &a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

double hermiticity_defect(const CMatrix &a) {
    if (a.rows() != a.cols()) {
        throw InvalidInput("hermiticity_defect: matrix is not square");
    }
    return max_abs(a - a.adjoint());
}

double spectral_norm(const CMatrix &a) {
    if (a.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<CMatrix> svd(a);
    return svd.singularValues()(0);
}

CMatrix kron(const CMatrix &a, const CMatrix &b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
                a(i, j) * b;
        }
    }
    return out;
}

CVector kron(const CVector &a, const CVector &b) {
    CVector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        out.segment(i * b.size(), b.size()) = a(i) * b;
    }
    return out;
}

double fidelity(const CVector &a, const CVector &b) {
    if (a.size() != b.size()) {
        throw InvalidInput("fidelity: dimension mismatch");
    }
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
        throw InvalidInput("fidelity: zero vector");
    }
    return std::abs(a.dot(b)) / (na * nb);
}

HermitianEigen eigh(const CMatrix &h) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
    if (solver.info() != Eigen::Success) {
        throw NumericalFailure("eigh: eigendecomposition did not converge");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

CMatrix unitary_propagator(const HermitianEigen &eig, double theta) {
    CVector phases(eig.values.size());
    for (Eigen::Index k = 0; k < phases.size(); ++k) {
        phases(k) = std::exp(-kI * theta * eig.values(k));
    }
    return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

CVector apply_propagator(const HermitianEigen &eig, double theta,
                         const CVector &v) {
    CVector coeffs = eig.vectors.adjoint() * v;
    for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
        coeffs(k) *= std::exp(-kI * theta * eig.values(k));
    }
    return eig.vectors * coeffs;
}

CMatrix orthonormalize(const CMatrix &columns, double drop_tol) {
    std::vector<CVector> kept;
    for (Eigen::Index c = 0; c < columns.cols(); ++c) {
        CVector v = columns.col(c);
        const double original = v.norm();
        if (original == 0.0) {
            continue;
        }
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto &q : kept) {
                v -= q.dot(v) * q;
            }
        }
        const double residual = v.norm();
        if (residual <= drop_tol * original) {
            continue;
        }
        kept.push_back(v / residual);
    }
    CMatrix out(columns.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t c = 0; c < kept.size(); ++c) {
        out.col(static_cast<Eigen::Index>(c)) = kept[c];
    }
    return out;
}

std::vector<double> principal_angles(const CMatrix &a, const CMatrix &b) {
    if (a.rows() != b.rows()) {
        throw InvalidInput("principal_angles: ambient dimension mismatch");
    }
    if (a.cols() == 0 || b.cols() == 0) {
        return {};
    }
    // Sines of the angles are the singular values of (I - P_a) b.
    const CMatrix residual = b - a * (a.adjoint() * b);
    Eigen::JacobiSVD<CMatrix> svd(residual);
    std::vector<double> angles;
    const auto sv = svd.singularValues();
    const Eigen::Index count = std::min(a.cols(), b.cols());
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
        angles.push_back(std::asin(std::min(1.0, sv(k))));
    }
    std::sort(angles.begin(), angles.end());
    angles.resize(static_cast<std::size_t>(count));
    return angles;
}

} // namespace eptime::linalg
