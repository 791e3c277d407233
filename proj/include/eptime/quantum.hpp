#pragma once

/**
 * @file
 * Extended quantum system on H_s (x) H_T with hbar = 1.
 *
 * The clock factor H_T is an M-point time grid T_m = T0 + m * deltaT. Its
 * conjugate S is the discrete-Fourier multiplier with centered frequencies
 * omega_k = 2 pi k / (M deltaT), k in [-M/2, M/2), so that [T, S] ~ i on
 * states that vanish near the grid ends and exp(-i S deltaT) is an exact
 * one-bin cyclic shift.
 *
 * The sign convention sigma = +1/-1 selects H_ex = H_s (x) I + sigma I (x) S.
 * Basis ordering is system-major: index = i * M + m.
 */

#include <vector>

#include "eptime/linalg.hpp"

namespace eptime::quantum {

/// Truncated system Hilbert space with its sorted eigendecomposition.
class SystemSpace {
  public:
    const CMatrix &hamiltonian() const noexcept { return h_; }
    const RVector &energies() const noexcept { return eig_.values; }
    const CMatrix &eigenvectors() const noexcept { return eig_.vectors; }
    const linalg::HermitianEigen &eigen() const noexcept { return eig_; }
    Eigen::Index dim() const noexcept { return h_.rows(); }

    /// Column i of the eigenvector matrix.
    CVector eigenvector(Eigen::Index i) const { return eig_.vectors.col(i); }

  private:
    friend SystemSpace build_system_space(const CMatrix &h);
    CMatrix h_;
    linalg::HermitianEigen eig_;
};

/// Validates Hermiticity (1e-10) and diagonalizes. Throws InvalidInput with
/// the violation norm otherwise.
SystemSpace build_system_space(const CMatrix &h);

enum class Sign : int { plus = 1, minus = -1 };

inline double sign_value(Sign s) { return static_cast<double>(static_cast<int>(s)); }

/// Discretized clock: T diagonal on the grid and its DFT conjugate S.
class ClockSpace {
  public:
    int size() const noexcept { return m_; }
    double delta_t() const noexcept { return delta_t_; }
    double origin() const noexcept { return t0_; }
    Sign sign() const noexcept { return sign_; }
    double sigma() const noexcept { return sign_value(sign_); }

    /// Grid points T_m.
    const RVector &times() const noexcept { return times_; }
    CMatrix time_operator() const;
    const CMatrix &conjugate_operator() const noexcept { return s_op_; }

    /// Spacing 2 pi / (M deltaT) of the frequency grid.
    double frequency_step() const noexcept;
    /// omega for centered integer k in [-M/2, M/2).
    double frequency(int k) const noexcept { return k * frequency_step(); }
    int min_k() const noexcept { return -m_ / 2; }
    int max_k() const noexcept { return m_ / 2 - 1; }

    /// Eigenvector of S with eigenvalue frequency(k): entries
    /// exp(i omega_k T_m) / sqrt(M).
    CVector eigenvector(int k) const;

    /// Analytic eigendecomposition of S (columns ordered by k ascending).
    linalg::HermitianEigen eigen() const;

    /// exp(-i sigma S theta) from the analytic eigenbasis.
    CMatrix propagator(double theta) const;

  private:
    friend ClockSpace build_clock(int m, double delta_t, double t0, Sign sign);
    int m_ = 0;
    double delta_t_ = 0.0;
    double t0_ = 0.0;
    Sign sign_ = Sign::plus;
    RVector times_;
    CMatrix s_op_;
};

/// M even and >= 8, deltaT > 0.
ClockSpace build_clock(int m, double delta_t, double t0 = 0.0,
                       Sign sign = Sign::plus);

/// |[T, S] phi - i phi| for a normalized clock vector. Evaluated through the
/// exact commutator matrix S_{mn} (T_m - T_n).
double commutator_residual(const ClockSpace &clock, const CVector &phi);

/// Normalized clock wave packet with amplitude
/// exp(-(T - center)^2 / (4 width^2) + i k0 T); `width` is the standard
/// deviation of the time distribution in the continuum limit.
CVector gaussian_clock_state(const ClockSpace &clock, double center,
                             double width, double k0 = 0.0);

/// Mid-point of the clock grid.
double grid_center(const ClockSpace &clock);

/// Unit-norm vector on H_s (x) H_T.
struct ExtendedState {
    CVector amplitudes;

    /// Normalizes; throws InvalidInput on a zero or non-finite vector.
    static ExtendedState make(CVector amplitudes);
    static ExtendedState product(const CVector &system, const CVector &clock);
};

class ExtendedSpace {
  public:
    const SystemSpace &system() const noexcept { return sys_; }
    const ClockSpace &clock() const noexcept { return clock_; }
    const CMatrix &hamiltonian() const noexcept { return h_ex_; }
    Eigen::Index dim() const noexcept { return h_ex_.rows(); }
    Eigen::Index system_dim() const noexcept { return sys_.dim(); }
    int clock_dim() const noexcept { return clock_.size(); }

    /// Dense eigendecomposition of H_ex.
    const linalg::HermitianEigen &eigen() const noexcept { return eig_; }

    /// I (x) T_op as a dense operator.
    CMatrix clock_time_operator() const;
    /// I (x) S_op as a dense operator.
    CMatrix clock_conjugate_operator() const;

  private:
    friend ExtendedSpace build_extended(const SystemSpace &, const ClockSpace &);
    SystemSpace sys_;
    ClockSpace clock_;
    CMatrix h_ex_;
    linalg::HermitianEigen eig_;
};

ExtendedSpace build_extended(const SystemSpace &sys, const ClockSpace &clock);

/// Sorted multiset {E_i + sigma * omega_k} from the two factor spectra.
std::vector<double> kronecker_sum_spectrum(const SystemSpace &sys,
                                           const ClockSpace &clock);

/// exp(-i H_ex theta) psi through the dense eigendecomposition of H_ex.
ExtendedState evolve_extended(const ExtendedSpace &ext, const ExtendedState &psi,
                              double theta);

/// exp(-i H_ex theta) psi through exp(-i H_s theta) (x) exp(-i sigma S theta).
ExtendedState evolve_kronecker(const ExtendedSpace &ext,
                               const ExtendedState &psi, double theta);

struct FactoredState {
    CVector system;
    CVector clock;
};

/// (exp(-i H_s t) psi_s, exp(-i sigma S t) psi_T).
FactoredState evolve_factored(const SystemSpace &sys, const ClockSpace &clock,
                              const CVector &psi_s, const CVector &psi_t,
                              double t);

struct UncertaintyProduct {
    double delta_h = 0.0;
    double delta_t = 0.0;
    double product = 0.0;
};

UncertaintyProduct uncertainty_product(const ExtendedSpace &ext,
                                       const ExtendedState &psi);

/// Distribution over clock bins after tracing out the system.
RVector clock_marginal(const ExtendedState &psi, Eigen::Index system_dim,
                       int clock_dim);

/// <I (x) T> of the state.
double mean_time(const ExtendedSpace &ext, const ExtendedState &psi);

} // namespace eptime::quantum
