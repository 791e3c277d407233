#include "eptime/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "eptime/errors.hpp"

namespace eptime::quantum {

namespace {

// exp(2 pi i j / M) with j reduced mod M first, so large k*m products do not
// lose phase accuracy.
Complex root_of_unity(long long j, int m) {
    long long r = j % m;
    if (r < 0) {
        r += m;
    }
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(r) /
                         static_cast<double>(m);
    return {std::cos(angle), std::sin(angle)};
}

// Column-major view with X(m, i) = psi[i * M + m].
using StateGrid = Eigen::Map<const CMatrix>;

} // namespace

SystemSpace build_system_space(const CMatrix &h) {
    if (h.rows() == 0 || h.rows() != h.cols()) {
        throw InvalidInput("build_system_space: Hamiltonian must be a non-empty "
                           "square matrix");
    }
    if (!h.allFinite()) {
        throw InvalidInput("build_system_space: non-finite entry");
    }
    const double defect = linalg::hermiticity_defect(h);
    if (defect > 1e-10) {
        throw InvalidInput("build_system_space: matrix is not Hermitian "
                           "(max |H - H^dagger| = " + std::to_string(defect) + ")");
    }
    SystemSpace space;
    // Symmetrize away the sub-tolerance anti-Hermitian part.
    space.h_ = 0.5 * (h + h.adjoint());
    space.eig_ = linalg::eigh(space.h_);
    return space;
}

ClockSpace build_clock(int m, double delta_t, double t0, Sign sign) {
    if (m < 8 || m % 2 != 0) {
        throw InvalidInput("build_clock: M must be even and >= 8 (got " +
                           std::to_string(m) + ")");
    }
    if (!(delta_t > 0.0) || !std::isfinite(delta_t)) {
        throw InvalidInput("build_clock: deltaT must be positive");
    }
    if (!std::isfinite(t0)) {
        throw InvalidInput("build_clock: T0 must be finite");
    }
    ClockSpace clock;
    clock.m_ = m;
    clock.delta_t_ = delta_t;
    clock.t0_ = t0;
    clock.sign_ = sign;
    clock.times_.resize(m);
    for (int j = 0; j < m; ++j) {
        clock.times_(j) = t0 + j * delta_t;
    }

    // S is circulant: S_{mn} = c[(m - n) mod M] with
    // c[d] = (1/M) sum_k omega_k exp(2 pi i k d / M).
    const double step = clock.frequency_step();
    CVector c = CVector::Zero(m);
    for (int d = 0; d < m; ++d) {
        Complex acc{0.0, 0.0};
        for (int k = -m / 2; k < m / 2; ++k) {
            acc += (k * step) * root_of_unity(static_cast<long long>(k) * d, m);
        }
        c(d) = acc / static_cast<double>(m);
    }
    clock.s_op_.resize(m, m);
    for (int r = 0; r < m; ++r) {
        for (int col = 0; col < m; ++col) {
            clock.s_op_(r, col) = c(((r - col) % m + m) % m);
        }
    }
    return clock;
}

double ClockSpace::frequency_step() const noexcept {
    return 2.0 * std::numbers::pi / (static_cast<double>(m_) * delta_t_);
}

CMatrix ClockSpace::time_operator() const {
    return times_.cast<Complex>().asDiagonal();
}

CVector ClockSpace::eigenvector(int k) const {
    if (k < min_k() || k > max_k()) {
        throw InvalidInput("ClockSpace::eigenvector: k out of range");
    }
    const Complex origin_phase = std::exp(kI * frequency(k) * t0_);
    const double norm = 1.0 / std::sqrt(static_cast<double>(m_));
    CVector v(m_);
    for (int j = 0; j < m_; ++j) {
        v(j) = norm * origin_phase *
               root_of_unity(static_cast<long long>(k) * j, m_);
    }
    return v;
}

linalg::HermitianEigen ClockSpace::eigen() const {
    linalg::HermitianEigen eig;
    eig.values.resize(m_);
    eig.vectors.resize(m_, m_);
    for (int k = min_k(); k <= max_k(); ++k) {
        const int col = k - min_k();
        eig.values(col) = frequency(k);
        eig.vectors.col(col) = eigenvector(k);
    }
    return eig;
}

CMatrix ClockSpace::propagator(double theta) const {
    return linalg::unitary_propagator(eigen(), sigma() * theta);
}

double commutator_residual(const ClockSpace &clock, const CVector &phi) {
    const int m = clock.size();
    if (phi.size() != m) {
        throw InvalidInput("commutator_residual: vector length != M");
    }
    const CVector unit = phi / phi.norm();
    const CMatrix &s = clock.conjugate_operator();
    const RVector &t = clock.times();
    CVector out = CVector::Zero(m);
    for (int r = 0; r < m; ++r) {
        Complex acc{0.0, 0.0};
        for (int c = 0; c < m; ++c) {
            acc += s(r, c) * (t(r) - t(c)) * unit(c);
        }
        out(r) = acc - kI * unit(r);
    }
    return out.norm();
}

double grid_center(const ClockSpace &clock) {
    return clock.origin() + 0.5 * (clock.size() - 1) * clock.delta_t();
}

CVector gaussian_clock_state(const ClockSpace &clock, double center,
                             double width, double k0) {
    if (!(width > 0.0)) {
        throw InvalidInput("gaussian_clock_state: width must be positive");
    }
    CVector v(clock.size());
    for (int j = 0; j < clock.size(); ++j) {
        const double x = clock.times()(j) - center;
        v(j) = std::exp(-x * x / (4.0 * width * width)) *
               std::exp(kI * k0 * clock.times()(j));
    }
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw NumericalFailure("gaussian_clock_state: packet underflows the grid");
    }
    return v / n;
}

ExtendedState ExtendedState::make(CVector amplitudes) {
    const double n = amplitudes.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw InvalidInput("ExtendedState: zero or non-finite amplitudes");
    }
    return ExtendedState{amplitudes / n};
}

ExtendedState ExtendedState::product(const CVector &system, const CVector &clock) {
    return make(linalg::kron(system, clock));
}

ExtendedSpace build_extended(const SystemSpace &sys, const ClockSpace &clock) {
    ExtendedSpace ext;
    ext.sys_ = sys;
    ext.clock_ = clock;
    const Eigen::Index ns = sys.dim();
    const int m = clock.size();
    const CMatrix id_m = CMatrix::Identity(m, m);
    const CMatrix id_s = CMatrix::Identity(ns, ns);
    ext.h_ex_ = linalg::kron(sys.hamiltonian(), id_m) +
                clock.sigma() * linalg::kron(id_s, clock.conjugate_operator());
    ext.eig_ = linalg::eigh(ext.h_ex_);
    return ext;
}

CMatrix ExtendedSpace::clock_time_operator() const {
    return linalg::kron(CMatrix::Identity(system_dim(), system_dim()),
                        clock_.time_operator());
}

CMatrix ExtendedSpace::clock_conjugate_operator() const {
    return linalg::kron(CMatrix::Identity(system_dim(), system_dim()),
                        clock_.conjugate_operator());
}

std::vector<double> kronecker_sum_spectrum(const SystemSpace &sys,
                                           const ClockSpace &clock) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(sys.dim()) *
                static_cast<std::size_t>(clock.size()));
    for (Eigen::Index i = 0; i < sys.dim(); ++i) {
        for (int k = clock.min_k(); k <= clock.max_k(); ++k) {
            out.push_back(sys.energies()(i) + clock.sigma() * clock.frequency(k));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

ExtendedState evolve_extended(const ExtendedSpace &ext, const ExtendedState &psi,
                              double theta) {
    if (psi.amplitudes.size() != ext.dim()) {
        throw InvalidInput("evolve_extended: state dimension mismatch");
    }
    if (!std::isfinite(theta)) {
        throw InvalidInput("evolve_extended: theta must be finite");
    }
    return ExtendedState{
        linalg::apply_propagator(ext.eigen(), theta, psi.amplitudes)};
}

ExtendedState evolve_kronecker(const ExtendedSpace &ext,
                               const ExtendedState &psi, double theta) {
    if (psi.amplitudes.size() != ext.dim()) {
        throw InvalidInput("evolve_kronecker: state dimension mismatch");
    }
    const CMatrix us = linalg::unitary_propagator(ext.system().eigen(), theta);
    const CMatrix ut = ext.clock().propagator(theta);
    const StateGrid grid(psi.amplitudes.data(), ext.clock_dim(), ext.system_dim());
    const CMatrix evolved = ut * grid * us.transpose();
    return ExtendedState{Eigen::Map<const CVector>(evolved.data(), evolved.size())};
}

FactoredState evolve_factored(const SystemSpace &sys, const ClockSpace &clock,
                              const CVector &psi_s, const CVector &psi_t,
                              double t) {
    if (psi_s.size() != sys.dim() || psi_t.size() != clock.size()) {
        throw InvalidInput("evolve_factored: factor dimension mismatch");
    }
    return {linalg::apply_propagator(sys.eigen(), t, psi_s),
            linalg::apply_propagator(clock.eigen(), clock.sigma() * t, psi_t)};
}

UncertaintyProduct uncertainty_product(const ExtendedSpace &ext,
                                       const ExtendedState &psi) {
    const CVector &v = psi.amplitudes;
    if (v.size() != ext.dim()) {
        throw InvalidInput("uncertainty_product: state dimension mismatch");
    }
    // Spreads as |(A - <A>) psi| to avoid the cancellation in <A^2> - <A>^2.
    const CVector hv = ext.hamiltonian() * v;
    const double mean_h = v.dot(hv).real();
    const double delta_h = (hv - mean_h * v).norm();

    const RVector &times = ext.clock().times();
    const int m = ext.clock_dim();
    CVector tv(v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        tv(j) = times(j % m) * v(j);
    }
    const double mean_t = v.dot(tv).real();
    const double delta_t = (tv - mean_t * v).norm();
    return {delta_h, delta_t, delta_h * delta_t};
}

RVector clock_marginal(const ExtendedState &psi, Eigen::Index system_dim,
                       int clock_dim) {
    if (psi.amplitudes.size() != system_dim * clock_dim) {
        throw InvalidInput("clock_marginal: dimension mismatch");
    }
    RVector p = RVector::Zero(clock_dim);
    for (Eigen::Index i = 0; i < system_dim; ++i) {
        for (int m = 0; m < clock_dim; ++m) {
            p(m) += std::norm(psi.amplitudes(i * clock_dim + m));
        }
    }
    return p;
}

double mean_time(const ExtendedSpace &ext, const ExtendedState &psi) {
    const RVector p = clock_marginal(psi, ext.system_dim(), ext.clock_dim());
    return p.dot(ext.clock().times());
}

} // namespace eptime::quantum
