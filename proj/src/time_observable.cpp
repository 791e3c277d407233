#include "eptime/time_observable.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "eptime/errors.hpp"

namespace eptime::timeobs {

namespace {

// Rows {i * M + m : i} of B, i.e. the block contracted by I (x) <T_m|.
CMatrix bin_factor(const CMatrix &basis, Eigen::Index system_dim, int clock_dim,
                   int m) {
    CMatrix r(system_dim, basis.cols());
    for (Eigen::Index i = 0; i < system_dim; ++i) {
        r.row(i) = basis.row(i * clock_dim + m);
    }
    return r;
}

// Unnormalized <T_m|psi> as a system vector.
CVector clock_slice(const CVector &psi, Eigen::Index system_dim, int clock_dim,
                    int m) {
    CVector v(system_dim);
    for (Eigen::Index i = 0; i < system_dim; ++i) {
        v(i) = psi(i * clock_dim + m);
    }
    return v;
}

RVector cyclic_shift(const RVector &p, int shift) {
    const auto m = static_cast<int>(p.size());
    RVector out(p.size());
    for (int j = 0; j < m; ++j) {
        out(((j + shift) % m + m) % m) = p(j);
    }
    return out;
}

void check_state(const constraint::PhysicalSubspace &sub,
                 const constraint::PhysicalState &phys, const char *who) {
    if (sub.empty()) {
        throw NoPhysicalStates(std::string(who) + ": physical subspace is empty");
    }
    if (phys.coeffs.size() != sub.dim() ||
        phys.state.amplitudes.size() != sub.basis.rows()) {
        throw InvalidInput(std::string(who) + ": state does not belong to the "
                                              "subspace");
    }
}

} // namespace

std::vector<CMatrix> TimePOVM::density_effects() const {
    std::vector<CMatrix> out;
    out.reserve(effects_.size());
    for (const auto &e : effects_) {
        out.push_back(e / delta_t_);
    }
    return out;
}

TimePOVM build_time_povm_from_basis(const CMatrix &basis, Eigen::Index system_dim,
                                    const quantum::ClockSpace &clock) {
    const int m_count = clock.size();
    if (basis.cols() == 0) {
        throw NoPhysicalStates("build_time_povm: physical subspace is empty");
    }
    if (basis.rows() != system_dim * m_count) {
        throw InvalidInput("build_time_povm: basis rows != N_s * M");
    }
    TimePOVM povm;
    povm.d_ = basis.cols();
    povm.times_ = clock.times();
    povm.delta_t_ = clock.delta_t();
    povm.effects_.reserve(static_cast<std::size_t>(m_count));
    povm.factors_.reserve(static_cast<std::size_t>(m_count));

    const Eigen::Index d = povm.d_;
    CMatrix total = CMatrix::Zero(d, d);
    povm.t_phys_ = CMatrix::Zero(d, d);
    povm.min_eigenvalue_ = std::numeric_limits<double>::infinity();
    for (int m = 0; m < m_count; ++m) {
        CMatrix r = bin_factor(basis, system_dim, m_count, m);
        CMatrix e = r.adjoint() * r;
        e = 0.5 * (e + e.adjoint());
        const double lowest = linalg::eigh(e).values(0);
        povm.min_eigenvalue_ = std::min(povm.min_eigenvalue_, lowest);
        total += e;
        povm.t_phys_ += povm.times_(m) * e;
        povm.effects_.push_back(std::move(e));
        povm.factors_.push_back(std::move(r));
    }
    povm.completeness_ = linalg::max_abs(total - CMatrix::Identity(d, d));

    if (povm.min_eigenvalue_ < -1e-12) {
        throw NumericalFailure("build_time_povm: effect with eigenvalue " +
                               std::to_string(povm.min_eigenvalue_));
    }
    if (povm.completeness_ > 1e-10) {
        throw NumericalFailure("build_time_povm: effects do not resolve the "
                               "identity (residual " +
                               std::to_string(povm.completeness_) + ")");
    }
    // The first moment must coincide with the compression of I (x) T.
    const RVector &times = clock.times();
    CMatrix tb(basis.rows(), basis.cols());
    for (Eigen::Index row = 0; row < basis.rows(); ++row) {
        tb.row(row) = times(row % m_count) * basis.row(row);
    }
    const CMatrix compressed = basis.adjoint() * tb;
    const double scale = std::max(1.0, times.cwiseAbs().maxCoeff());
    if (linalg::max_abs(compressed - povm.t_phys_) > 1e-10 * scale) {
        throw NumericalFailure("build_time_povm: first moment disagrees with the "
                               "restricted time operator");
    }
    return povm;
}

TimePOVM build_time_povm(const constraint::PhysicalSubspace &sub,
                         const quantum::ClockSpace &clock) {
    if (sub.clock_dim != clock.size()) {
        throw InvalidInput("build_time_povm: clock size does not match subspace");
    }
    return build_time_povm_from_basis(sub.basis, sub.system_dim, clock);
}

PmViolation pm_violation_report(const TimePOVM &povm) {
    // E_m = Q_m G_m Q_m^dagger with Q_m orthonormal (thin QR of R_m^dagger),
    // so |E_m E_m'| = |G_m (Q_m^dagger Q_m') G_m'| and
    // |E_m^2 - E_m| = |G_m^2 - G_m| on p x p blocks, p = min(d, N_s).
    const auto &factors = povm.factors();
    const int m_count = povm.size();
    std::vector<CMatrix> q(static_cast<std::size_t>(m_count));
    std::vector<CMatrix> g(static_cast<std::size_t>(m_count));
    for (int m = 0; m < m_count; ++m) {
        const CMatrix rt = factors[static_cast<std::size_t>(m)].adjoint();
        const Eigen::Index p = std::min(rt.rows(), rt.cols());
        Eigen::HouseholderQR<CMatrix> qr(rt);
        CMatrix qm = qr.householderQ() * CMatrix::Identity(rt.rows(), p);
        const CMatrix r = qm.adjoint() * rt;
        g[static_cast<std::size_t>(m)] = r * r.adjoint();
        q[static_cast<std::size_t>(m)] = std::move(qm);
    }

    PmViolation out;
    for (int m = 0; m < m_count; ++m) {
        const CMatrix &gm = g[static_cast<std::size_t>(m)];
        out.idempotency_defect =
            std::max(out.idempotency_defect, linalg::spectral_norm(gm * gm - gm));
        for (int n = m + 1; n < m_count; ++n) {
            const CMatrix overlap =
                q[static_cast<std::size_t>(m)].adjoint() * q[static_cast<std::size_t>(n)];
            const double v = linalg::spectral_norm(
                gm * overlap * g[static_cast<std::size_t>(n)]);
            if (v > out.orthogonality_defect) {
                out.orthogonality_defect = v;
                out.worst_pair_first = m;
                out.worst_pair_second = n;
            }
        }
    }
    return out;
}

PmViolation pm_violation_bruteforce(const TimePOVM &povm) {
    PmViolation out;
    const auto &effects = povm.effects();
    for (int m = 0; m < povm.size(); ++m) {
        const CMatrix &em = effects[static_cast<std::size_t>(m)];
        out.idempotency_defect =
            std::max(out.idempotency_defect, linalg::spectral_norm(em * em - em));
        for (int n = 0; n < povm.size(); ++n) {
            if (n == m) continue;
            const double v =
                linalg::spectral_norm(em * effects[static_cast<std::size_t>(n)]);
            if (v > out.orthogonality_defect) {
                out.orthogonality_defect = v;
                out.worst_pair_first = std::min(m, n);
                out.worst_pair_second = std::max(m, n);
            }
        }
    }
    return out;
}

CMatrix gram_of_restricted_time_states(const constraint::PhysicalSubspace &sub,
                                       const quantum::ClockSpace &clock) {
    if (sub.empty()) {
        throw NoPhysicalStates("gram_of_restricted_time_states: physical "
                               "subspace is empty");
    }
    const int m_count = clock.size();
    if (sub.clock_dim != m_count) {
        throw InvalidInput("gram_of_restricted_time_states: clock mismatch");
    }
    CMatrix gram = CMatrix::Zero(m_count, m_count);
    for (Eigen::Index i = 0; i < sub.system_dim; ++i) {
        const CMatrix block = sub.basis.middleRows(i * m_count, m_count);
        gram += block * block.adjoint();
    }
    return gram;
}

RVector time_distribution(const TimePOVM &povm,
                          const constraint::PhysicalState &phys) {
    if (phys.coeffs.size() != povm.dim()) {
        throw InvalidInput("time_distribution: coefficient length != d");
    }
    RVector p(povm.size());
    for (int m = 0; m < povm.size(); ++m) {
        p(m) = std::max(0.0, phys.coeffs.dot(povm.effect(m) * phys.coeffs).real());
    }
    return p;
}

CVector conditional_state(const constraint::PhysicalSubspace &sub,
                          const constraint::PhysicalState &phys, int m) {
    check_state(sub, phys, "conditional_state");
    if (m < 0 || m >= sub.clock_dim) {
        throw InvalidInput("conditional_state: clock index out of range");
    }
    CVector v = clock_slice(phys.state.amplitudes, sub.system_dim, sub.clock_dim, m);
    const double n = v.norm();
    if (!(n > 1e-300)) {
        throw NumericalFailure("conditional_state: vanishing contraction at bin " +
                               std::to_string(m));
    }
    return v / n;
}

EventOperator::EventOperator(CMatrix system_projector, std::vector<int> window,
                             int clock_dim)
    : projector_(std::move(system_projector)), window_(std::move(window)) {
    if (projector_.rows() != projector_.cols()) {
        throw InvalidInput("EventOperator: projector must be square");
    }
    if (linalg::hermiticity_defect(projector_) > 1e-10 ||
        linalg::max_abs(projector_ * projector_ - projector_) > 1e-10) {
        throw InvalidInput("EventOperator: system operator is not an orthogonal "
                           "projector");
    }
    for (int m : window_) {
        if (m < 0 || m >= clock_dim) {
            throw InvalidInput("EventOperator: window bin " + std::to_string(m) +
                               " outside the clock grid");
        }
    }
    std::sort(window_.begin(), window_.end());
    window_.erase(std::unique(window_.begin(), window_.end()), window_.end());
}

RVector event_time_profile(const CMatrix &system_projector,
                           const constraint::PhysicalSubspace &sub,
                           const constraint::PhysicalState &phys) {
    check_state(sub, phys, "event_time_profile");
    if (system_projector.rows() != sub.system_dim) {
        throw InvalidInput("event_time_profile: projector dimension != N_s");
    }
    RVector p(sub.clock_dim);
    for (int m = 0; m < sub.clock_dim; ++m) {
        const CVector v =
            clock_slice(phys.state.amplitudes, sub.system_dim, sub.clock_dim, m);
        p(m) = std::max(0.0, v.dot(system_projector * v).real());
    }
    return p;
}

double event_probability(const EventOperator &ev,
                         const constraint::PhysicalSubspace &sub,
                         const constraint::PhysicalState &phys) {
    const RVector profile = event_time_profile(ev.system_projector(), sub, phys);
    double total = 0.0;
    for (int m : ev.window()) {
        total += profile(m);
    }
    return total;
}

CovarianceReport covariance_report(const quantum::ExtendedSpace &ext,
                                   const TimePOVM &povm,
                                   const constraint::PhysicalSubspace &sub,
                                   const quantum::ExtendedState &psi,
                                   double theta) {
    const auto &clock = ext.clock();
    CovarianceReport report;
    report.theta = theta;
    report.bins = theta / clock.delta_t();
    const double nearest = std::round(report.bins);
    report.interpolated = std::abs(report.bins - nearest) > 1e-9;

    report.initial_marginal =
        quantum::clock_marginal(psi, ext.system_dim(), ext.clock_dim());
    const auto evolved = quantum::evolve_extended(ext, psi, theta);
    report.evolved_marginal =
        quantum::clock_marginal(evolved, ext.system_dim(), ext.clock_dim());

    // Expected marginal: shift by sigma * bins, linearly interpolated between
    // neighbouring integer shifts when bins is fractional.
    const double signed_bins = clock.sigma() * report.bins;
    RVector expected;
    if (report.interpolated) {
        const double lower = std::floor(signed_bins);
        const double frac = signed_bins - lower;
        const int lo = static_cast<int>(lower);
        expected = (1.0 - frac) * cyclic_shift(report.initial_marginal, lo) +
                   frac * cyclic_shift(report.initial_marginal, lo + 1);
        report.shift = static_cast<int>(std::round(signed_bins));
    } else {
        report.shift = static_cast<int>(clock.sigma() * nearest);
        expected = cyclic_shift(report.initial_marginal, report.shift);
    }
    report.max_shift_deviation =
        (report.evolved_marginal - expected).cwiseAbs().maxCoeff();

    const auto projection = constraint::project_physical(sub, psi);
    report.physical_weight = projection.weight;
    if (projection.state) {
        const auto &phys = *projection.state;
        const RVector before = time_distribution(povm, phys);
        const auto moved = quantum::evolve_extended(ext, phys.state, theta);
        const CVector coeffs = sub.basis.adjoint() * moved.amplitudes;
        const constraint::PhysicalState after{coeffs, moved};
        const RVector after_p = time_distribution(povm, after);
        const RVector direct = quantum::clock_marginal(moved, ext.system_dim(),
                                                       ext.clock_dim());
        report.max_physical_drift =
            std::max((after_p - before).cwiseAbs().maxCoeff(),
                     (direct - before).cwiseAbs().maxCoeff());
    }
    return report;
}

} // namespace eptime::timeobs
