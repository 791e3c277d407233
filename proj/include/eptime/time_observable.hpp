#pragma once

/**
 * @file
 * Time observable restricted to the physical-event subspace.
 *
 * With B the (N_s M) x d matrix of physical basis columns, the effect for
 * clock bin m is E_m = B^dagger (I (x) |T_m><T_m|) B. These are positive and
 * sum to the identity on the subspace, but for d < M they are neither
 * idempotent nor mutually orthogonal: the restricted time is a POVM, not a
 * projector measure.
 */

#include <vector>

#include "eptime/constraint.hpp"
#include "eptime/quantum.hpp"

namespace eptime::timeobs {

class TimePOVM {
  public:
    Eigen::Index dim() const noexcept { return d_; }
    int size() const noexcept { return static_cast<int>(effects_.size()); }
    const std::vector<CMatrix> &effects() const noexcept { return effects_; }
    const CMatrix &effect(int m) const { return effects_.at(static_cast<std::size_t>(m)); }
    /// Row blocks R_m (N_s x d) of B with E_m = R_m^dagger R_m.
    const std::vector<CMatrix> &factors() const noexcept { return factors_; }
    const RVector &times() const noexcept { return times_; }
    double delta_t() const noexcept { return delta_t_; }

    /// sum_m T_m E_m.
    const CMatrix &restricted_time() const noexcept { return t_phys_; }
    /// E_m / deltaT, for comparing grids of different M.
    std::vector<CMatrix> density_effects() const;

    double min_eigenvalue() const noexcept { return min_eigenvalue_; }
    /// max |sum_m E_m - I|.
    double completeness_residual() const noexcept { return completeness_; }

  private:
    friend TimePOVM build_time_povm_from_basis(const CMatrix &, Eigen::Index,
                                               const quantum::ClockSpace &);
    Eigen::Index d_ = 0;
    std::vector<CMatrix> effects_;
    std::vector<CMatrix> factors_;
    RVector times_;
    double delta_t_ = 0.0;
    CMatrix t_phys_;
    double min_eigenvalue_ = 0.0;
    double completeness_ = 0.0;
};

/// Throws NoPhysicalStates for d = 0, NumericalFailure if positivity
/// (min eigenvalue >= -1e-12) or completeness (1e-10) fails.
TimePOVM build_time_povm(const constraint::PhysicalSubspace &sub,
                         const quantum::ClockSpace &clock);

/// Same construction for an arbitrary orthonormal basis of H_s (x) H_T;
/// B = I gives the unrestricted clock projectors.
TimePOVM build_time_povm_from_basis(const CMatrix &basis,
                                    Eigen::Index system_dim,
                                    const quantum::ClockSpace &clock);

struct PmViolation {
    double orthogonality_defect = 0.0; ///< max_{m != m'} |E_m E_m'|_2
    double idempotency_defect = 0.0;   ///< max_m |E_m^2 - E_m|_2
    int worst_pair_first = 0;
    int worst_pair_second = 0;
};

PmViolation pm_violation_report(const TimePOVM &povm);

/// Direct evaluation of both defects from dense products of the effects.
PmViolation pm_violation_bruteforce(const TimePOVM &povm);

/// G_{mm'} = sum_i <E_i, T_m| P_phys |E_i, T_m'>, the partial trace of the
/// physical projector over the system factor, as an M x M matrix. For the
/// unrestricted space this is the identity.
CMatrix gram_of_restricted_time_states(const constraint::PhysicalSubspace &sub,
                                       const quantum::ClockSpace &clock);

/// Born probabilities p_m = c^dagger E_m c.
RVector time_distribution(const TimePOVM &povm,
                          const constraint::PhysicalState &phys);

/// Normalized <T_m|psi> in the basis of the system Hamiltonian matrix.
CVector conditional_state(const constraint::PhysicalSubspace &sub,
                          const constraint::PhysicalState &phys, int m);

/// "System in V during the bins of the window".
class EventOperator {
  public:
    /// Throws InvalidInput unless the projector is Hermitian and idempotent
    /// (1e-10) and every bin lies in [0, clock_dim).
    EventOperator(CMatrix system_projector, std::vector<int> window,
                  int clock_dim);

    const CMatrix &system_projector() const noexcept { return projector_; }
    const std::vector<int> &window() const noexcept { return window_; }

  private:
    CMatrix projector_;
    std::vector<int> window_;
};

double event_probability(const EventOperator &ev,
                         const constraint::PhysicalSubspace &sub,
                         const constraint::PhysicalState &phys);

/// Per-bin joint probability of the system event: entry m is the event
/// probability for the one-bin window {m}.
RVector event_time_profile(const CMatrix &system_projector,
                           const constraint::PhysicalSubspace &sub,
                           const constraint::PhysicalState &phys);

struct CovarianceReport {
    double theta = 0.0;
    double bins = 0.0;        ///< theta / deltaT
    int shift = 0;            ///< sigma * nearest integer of `bins`
    bool interpolated = false;///< theta was not an integer multiple of deltaT
    double max_shift_deviation = 0.0; ///< evolved marginal vs shifted marginal
    double physical_weight = 0.0;
    double max_physical_drift = 0.0;  ///< physical part: marginal change
    RVector initial_marginal;
    RVector evolved_marginal;
};

/// Evolves psi by theta and compares its clock marginal with the cyclic shift
/// of the initial marginal by sigma * theta / deltaT bins. The projection of
/// psi onto the physical subspace is evolved too; its marginal must not move.
CovarianceReport covariance_report(const quantum::ExtendedSpace &ext,
                                   const TimePOVM &povm,
                                   const constraint::PhysicalSubspace &sub,
                                   const quantum::ExtendedState &psi,
                                   double theta);

} // namespace eptime::timeobs
