#include "eptime/constraint.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "eptime/errors.hpp"

namespace eptime::constraint {

namespace {

void check_tolerance(double eps, const char *who) {
    if (!(eps > 0.0) || !std::isfinite(eps)) {
        throw InvalidInput(std::string(who) + ": tolerance must be positive");
    }
}

// Rotates v so its first non-negligible component is real and positive.
CVector fix_gauge(const CVector &v) {
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (std::abs(v(j)) > 1e-8) {
            return v * (std::abs(v(j)) / v(j));
        }
    }
    return v;
}

bool lexicographic_less(const CVector &a, const CVector &b) {
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        if (a(j).real() != b(j).real()) return a(j).real() < b(j).real();
        if (a(j).imag() != b(j).imag()) return a(j).imag() < b(j).imag();
    }
    return false;
}

} // namespace

double default_match_tolerance(const quantum::ClockSpace &clock) {
    return std::numbers::pi / (clock.size() * clock.delta_t());
}

PhysicalSubspace solve_constraint_spectral(const quantum::ExtendedSpace &ext,
                                           double eps_match) {
    check_tolerance(eps_match, "solve_constraint_spectral");
    const auto &sys = ext.system();
    const auto &clock = ext.clock();
    const double sigma = clock.sigma();
    const double step = clock.frequency_step();
    const bool nearest_only = eps_match <= 0.5 * step * (1.0 + 1e-12);

    PhysicalSubspace sub;
    sub.method = Method::spectral;
    sub.tolerance = eps_match;
    sub.system_dim = sys.dim();
    sub.clock_dim = clock.size();

    std::vector<CVector> columns;
    for (Eigen::Index i = 0; i < sys.dim(); ++i) {
        const double energy = sys.energies()(i);
        auto mismatch = [&](int k) {
            return std::abs(energy + sigma * clock.frequency(k));
        };

        // Nearest grid frequency to the target -sigma E, ties to lower k.
        const double target = -sigma * energy / step;
        int k_lo = static_cast<int>(std::floor(target));
        k_lo = std::clamp(k_lo, clock.min_k(), clock.max_k());
        const int k_hi = std::min(k_lo + 1, clock.max_k());
        const int nearest = mismatch(k_hi) < mismatch(k_lo) ? k_hi : k_lo;

        std::vector<int> chosen;
        if (nearest_only) {
            if (mismatch(nearest) <= eps_match) {
                chosen.push_back(nearest);
            }
        } else {
            for (int k = clock.min_k(); k <= clock.max_k(); ++k) {
                if (mismatch(k) <= eps_match) {
                    chosen.push_back(k);
                }
            }
        }
        if (chosen.empty()) {
            sub.misses.push_back({i, energy, nearest, mismatch(nearest)});
            continue;
        }
        for (int k : chosen) {
            sub.pairs.push_back(
                {i, k, energy, clock.frequency(k), mismatch(k)});
            columns.push_back(linalg::kron(CVector(sys.eigenvector(i)),
                                           clock.eigenvector(k)));
        }
    }

    sub.basis.resize(ext.dim(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        sub.basis.col(static_cast<Eigen::Index>(c)) = columns[c];
    }
    return sub;
}

PhysicalSubspace solve_constraint_spectral(const quantum::ExtendedSpace &ext) {
    return solve_constraint_spectral(ext, default_match_tolerance(ext.clock()));
}

PhysicalSubspace solve_constraint_kernel(const quantum::ExtendedSpace &ext,
                                         double eps_eig) {
    check_tolerance(eps_eig, "solve_constraint_kernel");
    const auto &eig = ext.eigen();

    PhysicalSubspace sub;
    sub.method = Method::kernel;
    sub.tolerance = eps_eig;
    sub.system_dim = ext.system_dim();
    sub.clock_dim = ext.clock_dim();

    struct Candidate {
        double value;
        CVector vector;
    };
    std::vector<Candidate> kept;
    for (Eigen::Index j = 0; j < eig.values.size(); ++j) {
        const double lambda = eig.values(j);
        if (std::abs(lambda) <= eps_eig) {
            kept.push_back({lambda, fix_gauge(eig.vectors.col(j))});
        } else if (!sub.nearest_excluded_eigenvalue ||
                   std::abs(lambda) < *sub.nearest_excluded_eigenvalue) {
            sub.nearest_excluded_eigenvalue = std::abs(lambda);
        }
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const Candidate &a, const Candidate &b) {
                         if (a.value != b.value) return a.value < b.value;
                         return lexicographic_less(a.vector, b.vector);
                     });

    CMatrix raw(ext.dim(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t c = 0; c < kept.size(); ++c) {
        raw.col(static_cast<Eigen::Index>(c)) = kept[c].vector;
    }
    sub.basis = linalg::orthonormalize(raw);
    return sub;
}

PhysicalSubspace solve_constraint_kernel(const quantum::ExtendedSpace &ext) {
    return solve_constraint_kernel(ext, default_match_tolerance(ext.clock()));
}

PhysicalState make_physical_state(const PhysicalSubspace &sub, const CVector &c) {
    if (sub.empty()) {
        throw NoPhysicalStates("make_physical_state: physical subspace is empty");
    }
    if (c.size() != sub.dim()) {
        throw InvalidInput("make_physical_state: expected " +
                           std::to_string(sub.dim()) + " coefficients, got " +
                           std::to_string(c.size()));
    }
    const double n = c.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw InvalidInput("make_physical_state: zero or non-finite coefficients");
    }
    const CVector unit = c / n;
    return {unit, quantum::ExtendedState::make(sub.basis * unit)};
}

Projection project_physical(const PhysicalSubspace &sub,
                            const quantum::ExtendedState &psi) {
    if (psi.amplitudes.size() != sub.basis.rows() && !sub.empty()) {
        throw InvalidInput("project_physical: state dimension mismatch");
    }
    Projection out;
    if (sub.empty()) {
        return out;
    }
    const CVector coeffs = sub.basis.adjoint() * psi.amplitudes;
    out.weight = coeffs.squaredNorm();
    if (out.weight >= 1e-14) {
        out.state = make_physical_state(sub, coeffs);
    }
    return out;
}

StationarityReport stationarity_check(const quantum::ExtendedSpace &ext,
                                      const PhysicalState &phys,
                                      const std::vector<double> &thetas) {
    StationarityReport report;
    report.thetas = thetas;
    for (double theta : thetas) {
        const auto evolved = quantum::evolve_extended(ext, phys.state, theta);
        const double f =
            std::abs(phys.state.amplitudes.dot(evolved.amplitudes)) /
            (phys.state.amplitudes.norm() * evolved.amplitudes.norm());
        report.fidelities.push_back(std::min(f, 1.0));
        report.min_fidelity = std::min(report.min_fidelity, report.fidelities.back());
    }
    return report;
}

double constraint_residual(const quantum::ExtendedSpace &ext, const CVector &v) {
    return (ext.hamiltonian() * v).norm();
}

double max_basis_residual(const quantum::ExtendedSpace &ext,
                          const PhysicalSubspace &sub) {
    double worst = 0.0;
    for (Eigen::Index c = 0; c < sub.dim(); ++c) {
        worst = std::max(worst, constraint_residual(ext, sub.basis.col(c)));
    }
    return worst;
}

double hamiltonian_scale(const quantum::ExtendedSpace &ext) {
    return ext.hamiltonian().cwiseAbs().rowwise().sum().maxCoeff();
}

double physical_residual_bound(const quantum::ExtendedSpace &ext,
                               const PhysicalSubspace &sub) {
    double max_energy = 0.0;
    for (const auto &pair : sub.pairs) {
        max_energy = std::max(max_energy, std::abs(pair.energy));
    }
    return sub.tolerance * (max_energy + ext.clock().frequency_step());
}

double spectral_transfer_defect(const quantum::ExtendedSpace &ext,
                                const PhysicalSubspace &sub) {
    if (sub.method != Method::spectral) {
        throw InvalidInput("spectral_transfer_defect: needs the spectral route's "
                           "matched basis");
    }
    if (sub.empty()) {
        return 0.0;
    }
    const CMatrix restricted =
        sub.basis.adjoint() * ext.clock_conjugate_operator() * sub.basis;
    CMatrix expected = CMatrix::Zero(sub.dim(), sub.dim());
    for (Eigen::Index a = 0; a < sub.dim(); ++a) {
        expected(a, a) = -ext.clock().sigma() *
                         sub.pairs[static_cast<std::size_t>(a)].energy;
    }
    return linalg::max_abs(restricted - expected);
}

} // namespace eptime::constraint
