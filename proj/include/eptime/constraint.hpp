#pragma once

// Physical-event subspace: vectors of H_s (x) H_T annihilated by H_ex.
//
// Two independent routes are provided. The spectral route pairs every
// system level E_i with the clock frequency s_k satisfying E_i + sigma s_k ~ 0
// and emits the product vectors |E_i> (x) |s_k>. The kernel route
// diagonalizes H_ex densely and keeps the eigenvectors with small
// eigenvalue. On a commensurate spectrum both give the same subspace.

#include <optional>
#include <vector>

#include "eptime/quantum.hpp"

namespace eptime::constraint {

enum class Method { spectral, kernel };

struct MatchedPair {
    Eigen::Index level = 0;     ///< system eigenvalue index i
    int k = 0;                  ///< centered clock frequency index
    double energy = 0.0;        ///< E_i
    double clock_value = 0.0;   ///< eigenvalue of S, close to -sigma E_i
    double mismatch = 0.0;      ///< |E_i + sigma s_k|
};

/// Unmatched system level and its closest clock frequency.
struct Miss {
    Eigen::Index level = 0;
    double energy = 0.0;
    int nearest_k = 0;
    double distance = 0.0;
};

struct PhysicalSubspace {
    Method method = Method::spectral;
    /// Orthonormal columns spanning the subspace, (N_s * M) x d.
    CMatrix basis;
    /// One entry per basis column (spectral route only).
    std::vector<MatchedPair> pairs;
    /// Spectral route: levels with no admissible clock partner.
    std::vector<Miss> misses;
    /// Kernel route: smallest |eigenvalue| that was excluded, if any.
    std::optional<double> nearest_excluded_eigenvalue;
    double tolerance = 0.0;
    Eigen::Index system_dim = 0;
    int clock_dim = 0;

    Eigen::Index dim() const noexcept { return basis.cols(); }
    bool empty() const noexcept { return basis.cols() == 0; }
};

/// Half the clock frequency spacing, pi / (M deltaT).
double default_match_tolerance(const quantum::ClockSpace &clock);

/// Spectral-matching route. With eps_match at most half the frequency spacing
/// each level takes its single nearest frequency (ties go to the lower k);
/// larger tolerances admit every frequency within eps_match.
PhysicalSubspace solve_constraint_spectral(const quantum::ExtendedSpace &ext,
                                           double eps_match);
PhysicalSubspace solve_constraint_spectral(const quantum::ExtendedSpace &ext);

/// Kernel route: eigenvectors of H_ex with |eigenvalue| <= eps_eig, gauge
/// fixed, ordered deterministically and re-orthonormalized.
PhysicalSubspace solve_constraint_kernel(const quantum::ExtendedSpace &ext,
                                         double eps_eig);
PhysicalSubspace solve_constraint_kernel(const quantum::ExtendedSpace &ext);

struct PhysicalState {
    CVector coeffs;               ///< unit-norm coefficients over the basis
    quantum::ExtendedState state; ///< basis * coeffs
};

/// Throws NoPhysicalStates for d = 0 and InvalidInput for a zero or
/// wrong-length coefficient vector.
PhysicalState make_physical_state(const PhysicalSubspace &sub, const CVector &c);

struct Projection {
    std::optional<PhysicalState> state; ///< empty when weight < 1e-14
    double weight = 0.0;                ///< squared norm of the projection
};

Projection project_physical(const PhysicalSubspace &sub,
                            const quantum::ExtendedState &psi);

struct StationarityReport {
    std::vector<double> thetas;
    std::vector<double> fidelities; ///< |<psi| U_ex(theta) |psi>|
    double min_fidelity = 1.0;
};

StationarityReport stationarity_check(const quantum::ExtendedSpace &ext,
                                      const PhysicalState &phys,
                                      const std::vector<double> &thetas);

/// |H_ex v|.
double constraint_residual(const quantum::ExtendedSpace &ext, const CVector &v);

/// Largest constraint residual over the basis columns.
double max_basis_residual(const quantum::ExtendedSpace &ext,
                          const PhysicalSubspace &sub);

/// Max row sum of |H_ex|.
double hamiltonian_scale(const quantum::ExtendedSpace &ext);

/// Upper bound eps * (max matched |E_i| + frequency step) for |H_ex psi| of
/// physical states built from a spectral subspace.
double physical_residual_bound(const quantum::ExtendedSpace &ext,
                               const PhysicalSubspace &sub);

/// max |B^dagger (I (x) S) B - diag(-sigma E_pair)| on a spectral subspace.
double spectral_transfer_defect(const quantum::ExtendedSpace &ext,
                                const PhysicalSubspace &sub);

} // namespace eptime::constraint
