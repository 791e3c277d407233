#include "eptime/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "eptime/classical.hpp"
#include "eptime/constraint.hpp"
#include "eptime/errors.hpp"
#include "eptime/serialization.hpp"
#include "eptime/time_observable.hpp"

#ifndef EPTIME_VERSION
#define EPTIME_VERSION "unknown"
#endif

namespace eptime::scenario {

namespace {

using config::ScenarioConfig;
using config::SystemKind;

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

bool holds(double measured, Relation r, double threshold) {
    switch (r) {
    case Relation::less: return measured < threshold;
    case Relation::less_equal: return measured <= threshold;
    case Relation::greater: return measured > threshold;
    case Relation::greater_equal: return measured >= threshold;
    case Relation::equal: return measured == threshold;
    }
    return false;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

CVector random_complex(std::mt19937_64 &rng, Eigen::Index n) {
    std::normal_distribution<double> g;
    CVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(g(rng), g(rng));
    return v / v.norm();
}

CVector random_real(std::mt19937_64 &rng, Eigen::Index n) {
    std::normal_distribution<double> g;
    CVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
    return v / v.norm();
}

Json to_json(const RVector &v) {
    return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

bool is_classical_kind(SystemKind k) {
    return k == SystemKind::oscillator || k == SystemKind::free_particle ||
           k == SystemKind::quartic;
}

// ---------------------------------------------------------------------------
// Per-run state shared between suites.

struct Quantum {
    quantum::ExtendedSpace ext;
    constraint::PhysicalSubspace spectral;
};

struct Context {
    const ScenarioConfig &cfg;
    ScenarioResult &out;
    std::optional<Quantum> primary;
    std::optional<Quantum> mirrored; ///< sigma = -1 partner of a paired run

    AuditReport &report() { return out.report; }

    std::mt19937_64 rng_for(const std::string &suite) const {
        const std::uint64_t salt = std::stoull(fnv1a_hex(suite), nullptr, 16);
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                          static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(salt),
                          static_cast<std::uint32_t>(salt >> 32)};
        return std::mt19937_64(seq);
    }
};

quantum::Sign primary_sign(const ScenarioConfig &cfg) {
    if (cfg.clock.paired) return quantum::Sign::plus;
    return cfg.clock.sigma < 0 ? quantum::Sign::minus : quantum::Sign::plus;
}

double match_tolerance(const ScenarioConfig &cfg, const quantum::ClockSpace &clock) {
    if (cfg.tolerances.eps_match) return *cfg.tolerances.eps_match;
    if (cfg.tolerances.eps_match_bins) {
        return *cfg.tolerances.eps_match_bins * clock.frequency_step();
    }
    return constraint::default_match_tolerance(clock);
}

Quantum build_quantum(const ScenarioConfig &cfg, const config::ClockSpec &clock_spec,
                      quantum::Sign sign) {
    const auto clock = build_clock(clock_spec, sign);
    std::mt19937_64 system_rng(cfg.seed);
    const auto sys =
        quantum::build_system_space(build_system_matrix(cfg.system, clock, system_rng));
    auto ext = quantum::build_extended(sys, clock);
    auto sub = constraint::solve_constraint_spectral(ext, match_tolerance(cfg, clock));
    return {std::move(ext), std::move(sub)};
}

const Quantum &primary(Context &c) {
    if (!c.primary) c.primary = build_quantum(c.cfg, c.cfg.clock, primary_sign(c.cfg));
    return *c.primary;
}

const Quantum *mirrored(Context &c) {
    if (!c.cfg.clock.paired) return nullptr;
    if (!c.mirrored) c.mirrored = build_quantum(c.cfg, c.cfg.clock, quantum::Sign::minus);
    return &*c.mirrored;
}

// ---------------------------------------------------------------------------
// classical-equivalence

classical::HamiltonianSystem classical_system(const config::SystemSpec &s) {
    switch (s.kind) {
    case SystemKind::oscillator:
        return classical::HamiltonianSystem::harmonic_oscillator(s.omega);
    case SystemKind::free_particle:
        return classical::HamiltonianSystem::free_particle();
    case SystemKind::quartic:
        return classical::HamiltonianSystem::quartic_oscillator();
    default:
        throw InvalidInput("classical-equivalence needs system.kind oscillator, "
                           "free-particle or quartic, got " + config::to_string(s.kind));
    }
}

PlotTable trajectory_table(const classical::OriginalTrajectory &t) {
    PlotTable table{{"param", "q1", "p1"}, {}};
    for (std::size_t k = 0; k < t.size(); ++k) {
        table.rows.push_back({t.param[k], t.states[k].q[0], t.states[k].p[0]});
    }
    return table;
}

PlotTable trajectory_table(const classical::ExtendedTrajectory &t) {
    PlotTable table{{"param", "q1", "p1", "T", "S"}, {}};
    for (std::size_t k = 0; k < t.size(); ++k) {
        const auto &y = t.states[k];
        table.rows.push_back({t.param[k], y.base.q[0], y.base.p[0], y.T, y.S});
    }
    return table;
}

double poisson_table_error(std::mt19937_64 &rng, std::size_t points) {
    using namespace classical;
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const struct {
        PhaseFunction f, g;
        double exact;
    } table[] = {
        {coordinate::T(), coordinate::S(), 1.0},
        {coordinate::T(), coordinate::q(0), 0.0},
        {coordinate::T(), coordinate::p(0), 0.0},
        {coordinate::S(), coordinate::q(0), 0.0},
        {coordinate::S(), coordinate::p(0), 0.0},
    };
    double worst = 0.0;
    for (std::size_t k = 0; k < points; ++k) {
        ExtendedPhaseState y{PhaseState::make({u(rng)}, {u(rng)}), u(rng), u(rng)};
        for (const auto &row : table) {
            worst = std::max(worst, std::abs(poisson_bracket(row.f, row.g, y) - row.exact));
        }
    }
    return worst;
}

void suite_classical(Context &c) {
    const auto &cfg = c.cfg;
    auto &rep = c.report();
    auto rng = c.rng_for("classical-equivalence");
    const auto sys = classical_system(cfg.system);
    const auto x0 = classical::PhaseState::make(cfg.classical.q0, cfg.classical.p0);
    const auto &cl = cfg.classical;

    const auto orig = classical::integrate_original(sys, x0, cl.t_end, cl.dt, cl.t0);
    const classical::ExtendedSystem ext(sys);
    const auto y0 = classical::extend_state(sys, x0, cl.t0);
    const auto traj = classical::integrate_extended(ext, y0, cl.t_end, cl.dt);
    const auto eq = classical::check_equivalence(sys, orig, traj);

    double max_hex = 0.0, s_drift = 0.0;
    for (const auto &y : traj.states) {
        max_hex = std::max(max_hex, std::abs(classical::eval_extended_hamiltonian(ext, y)));
        s_drift = std::max(s_drift, std::abs(y.S - y0.S));
    }

    const double ctol = cfg.tolerances.classical_constraint;
    rep.check("classical.state_deviation", eq.max_state_deviation, Relation::less,
              cfg.tolerances.equivalence);
    rep.check("classical.time_channel_residual", eq.max_time_deviation, Relation::less, 1e-10);
    rep.check("classical.s_channel_drift", s_drift, Relation::less, 1e-10);
    rep.check("classical.constraint_drift", eq.max_constraint_violation, Relation::less, ctol);
    rep.check("classical.max_extended_hamiltonian", max_hex, Relation::less, ctol);
    rep.check("classical.time_offset", std::abs(eq.time_offset), Relation::less_equal, 1e-12);
    rep.check("classical.gradient_error", classical::max_gradient_error(sys, rng),
              Relation::less, 1e-6);
    rep.check("classical.poisson_table", poisson_table_error(rng, 100), Relation::less, 1e-6);

    if (cfg.system.kind == SystemKind::oscillator) {
        const double w = cfg.system.omega;
        const double tau = traj.param.back();
        const double q0 = x0.q[0], p0 = x0.p[0];
        const double q = q0 * std::cos(w * tau) + p0 / w * std::sin(w * tau);
        const double p = -q0 * w * std::sin(w * tau) + p0 * std::cos(w * tau);
        const auto &xf = orig.states.back();
        rep.check("classical.closed_form_error", std::hypot(xf.q[0] - q, xf.p[0] - p),
                  Relation::less, 1e-5);
    }

    rep.set_data("classical", Json{{"system", sys.label()},
                                   {"steps", orig.size() - 1},
                                   {"step", orig.step},
                                   {"integrator", orig.integrator},
                                   {"max_state_deviation", eq.max_state_deviation},
                                   {"max_constraint_violation", eq.max_constraint_violation},
                                   {"max_extended_hamiltonian", max_hex}});
    c.out.plots["trajectory_original"] = trajectory_table(orig);
    c.out.plots["trajectory_extended"] = trajectory_table(traj);
}

// ---------------------------------------------------------------------------
// quantum-equivalence

void suite_quantum(Context &c) {
    const auto &cfg = c.cfg;
    auto &rep = c.report();
    auto rng = c.rng_for("quantum-equivalence");
    const auto &ext = primary(c).ext;
    const auto &sys = ext.system();
    const auto &clock = ext.clock();
    std::uniform_real_distribution<double> theta_dist(0.0, 20.0);

    double min_factored = 1.0, min_kron = 1.0;
    for (int s = 0; s < cfg.quantum.random_states; ++s) {
        const CVector psi_s = random_complex(rng, sys.dim());
        const CVector psi_t = random_complex(rng, clock.size());
        const auto psi = quantum::ExtendedState::product(psi_s, psi_t);
        for (int t = 0; t < cfg.quantum.random_thetas; ++t) {
            const double theta = theta_dist(rng);
            const auto dense = quantum::evolve_extended(ext, psi, theta);
            const auto f = quantum::evolve_factored(sys, clock, psi_s, psi_t, theta);
            const auto kron = quantum::evolve_kronecker(ext, psi, theta);
            min_factored = std::min(
                min_factored,
                linalg::fidelity(dense.amplitudes, linalg::kron(f.system, f.clock)));
            min_kron = std::min(min_kron,
                                linalg::fidelity(dense.amplitudes, kron.amplitudes));
        }
    }
    rep.check("quantum.factorization_min_fidelity", min_factored, Relation::greater,
              1.0 - 1e-11);
    rep.check("quantum.kronecker_path_min_fidelity", min_kron, Relation::greater,
              1.0 - 1e-11);

    const auto sum = quantum::kronecker_sum_spectrum(sys, clock);
    const RVector &dense = ext.eigen().values;
    double spectrum_dev = 0.0;
    for (std::size_t k = 0; k < sum.size(); ++k) {
        spectrum_dev = std::max(spectrum_dev,
                                std::abs(dense(static_cast<Eigen::Index>(k)) - sum[k]));
    }
    rep.check("quantum.spectrum_deviation", spectrum_dev, Relation::less,
              1e-9 * std::max(1.0, constraint::hamiltonian_scale(ext)));

    // Clock packet well inside the grid.
    const double width = clock.size() * clock.delta_t() / 20.0;
    const CVector packet = quantum::gaussian_clock_state(clock, quantum::grid_center(clock), width);
    const double ccr = quantum::commutator_residual(clock, packet);
    rep.check("quantum.commutator_residual", ccr, Relation::less, 1e-3);

    const auto up = quantum::uncertainty_product(
        ext, quantum::ExtendedState::product(sys.eigenvector(0), packet));
    rep.check("quantum.uncertainty_lower", up.product, Relation::greater_equal, 0.5 - 1e-3);
    rep.check("quantum.uncertainty_upper", up.product, Relation::less_equal, 0.6);

    rep.set_data("quantum", Json{{"sigma", clock.sigma()},
                                 {"system_dim", sys.dim()},
                                 {"clock_dim", clock.size()},
                                 {"energies", to_json(sys.energies())},
                                 {"packet_width", width},
                                 {"commutator_residual", ccr},
                                 {"delta_h", up.delta_h},
                                 {"delta_t", up.delta_t},
                                 {"uncertainty_product", up.product}});
}

// ---------------------------------------------------------------------------
// constraint-solve

void suite_constraint(Context &c) {
    const auto &cfg = c.cfg;
    auto &rep = c.report();
    auto rng = c.rng_for("constraint-solve");
    const auto &q = primary(c);
    const auto &ext = q.ext;
    const auto &spec = q.spectral;
    const auto kern = constraint::solve_constraint_kernel(ext, spec.tolerance);
    const double scale = constraint::hamiltonian_scale(ext);
    const auto ns = static_cast<double>(ext.system_dim());

    rep.check("constraint.full_dimension", static_cast<double>(spec.dim()),
              Relation::equal, ns, cfg.expect_deficient_subspace,
              spec.misses.empty() ? "" : std::to_string(spec.misses.size()) +
                                             " level(s) without a clock partner");
    rep.check("constraint.method_dimension_gap",
              std::abs(static_cast<double>(spec.dim() - kern.dim())), Relation::equal, 0.0);

    Json data{{"method_tolerance", spec.tolerance},
              {"dim_spectral", spec.dim()},
              {"dim_kernel", kern.dim()},
              {"hamiltonian_scale", scale}};
    if (kern.nearest_excluded_eigenvalue) {
        data["nearest_excluded_eigenvalue"] = *kern.nearest_excluded_eigenvalue;
    }
    Json misses = Json::array();
    for (const auto &m : spec.misses) {
        misses.push_back({{"i", m.level}, {"E_i", m.energy},
                          {"nearest_k", m.nearest_k}, {"distance", m.distance}});
    }
    data["misses"] = std::move(misses);
    c.out.artifacts["physical_subspace"] = io::subspace_to_json(spec, ext.clock());

    if (spec.empty()) {
        rep.check("constraint.nonempty", 0.0, Relation::greater, 0.0,
                  cfg.expect_deficient_subspace, "no physical states");
        rep.set_data("constraint", std::move(data));
        return;
    }
    if (spec.dim() == kern.dim()) {
        const auto angles = linalg::principal_angles(spec.basis, kern.basis);
        const double worst = angles.empty() ? 0.0 : angles.back();
        rep.check("constraint.max_principal_angle", worst, Relation::less, 1e-8);
        data["max_principal_angle"] = worst;
    }
    rep.check("constraint.spectral_residual", constraint::max_basis_residual(ext, spec),
              Relation::less, 1e-9 * scale);
    rep.check("constraint.kernel_residual", constraint::max_basis_residual(ext, kern),
              Relation::less, std::max(1e-9 * scale, kern.tolerance * (1.0 + 1e-9)));

    const auto phys = constraint::make_physical_state(spec, random_complex(rng, spec.dim()));
    const auto st = constraint::stationarity_check(ext, phys, {0.1, 1.0, 10.0});
    rep.check("constraint.stationarity_min_fidelity", st.min_fidelity, Relation::greater,
              1.0 - 1e-10);

    const RVector marginal =
        quantum::clock_marginal(phys.state, ext.system_dim(), ext.clock_dim());
    const double uniform_dev =
        (marginal.array() - 1.0 / ext.clock_dim()).abs().maxCoeff();
    rep.check("constraint.marginal_uniformity", uniform_dev, Relation::less, 1e-10);
    rep.check("constraint.transfer_defect", constraint::spectral_transfer_defect(ext, spec),
              Relation::less, 1e-9);

    if (const auto *m = mirrored(c)) {
        if (!m->spectral.empty()) {
            rep.check("constraint.mirrored_transfer_defect",
                      constraint::spectral_transfer_defect(m->ext, m->spectral),
                      Relation::less, 1e-9);
        }
        rep.check("constraint.mirrored_dimension_gap",
                  std::abs(static_cast<double>(m->spectral.dim() - spec.dim())),
                  Relation::equal, 0.0);
    }
    rep.set_data("constraint", std::move(data));
}

// ---------------------------------------------------------------------------
// povm-audit

bool distinct_levels(const constraint::PhysicalSubspace &sub) {
    std::vector<Eigen::Index> levels;
    for (const auto &p : sub.pairs) levels.push_back(p.level);
    std::sort(levels.begin(), levels.end());
    return std::adjacent_find(levels.begin(), levels.end()) == levels.end();
}

// For a spectral basis of distinct levels every effect is I/M.
struct ClosedDefects {
    double orthogonality, idempotency;
};
ClosedDefects closed_form_defects(int m) {
    const double e = 1.0 / m;
    return {e * e, e - e * e};
}

void suite_povm(Context &c) {
    const auto &cfg = c.cfg;
    auto &rep = c.report();
    const auto &q = primary(c);
    const auto &sub = q.spectral;
    const auto &clock = q.ext.clock();
    const int m = clock.size();

    if (sub.empty()) {
        rep.check("povm.nonempty", 0.0, Relation::greater, 0.0,
                  cfg.expect_deficient_subspace, "no physical states");
        return;
    }
    const auto povm = timeobs::build_time_povm(sub, clock);
    rep.check("povm.min_eigenvalue", povm.min_eigenvalue(), Relation::greater_equal, -1e-12);
    rep.check("povm.completeness", povm.completeness_residual(), Relation::less, 1e-10);

    const auto pm = timeobs::pm_violation_report(povm);
    const auto brute = timeobs::pm_violation_bruteforce(povm);
    rep.check("povm.fast_vs_bruteforce",
              std::max(std::abs(pm.orthogonality_defect - brute.orthogonality_defect),
                       std::abs(pm.idempotency_defect - brute.idempotency_defect)),
              Relation::less, 1e-12);
    const auto density = povm.density_effects();
    Json data{{"sigma", clock.sigma()},
              {"d", povm.dim()},
              {"M", m},
              {"completeness_residual", povm.completeness_residual()},
              {"min_eigenvalue", povm.min_eigenvalue()},
              {"density_effect_max", linalg::max_abs(density.front())},
              {"orthogonality_defect", pm.orthogonality_defect},
              {"idempotency_defect", pm.idempotency_defect},
              {"worst_pair", {pm.worst_pair_first, pm.worst_pair_second}}};
    if (povm.dim() < m) {
        rep.check("povm.orthogonality_defect", pm.orthogonality_defect, Relation::greater, 1e-6);
        rep.check("povm.idempotency_defect", pm.idempotency_defect, Relation::greater, 1e-6);
    }
    if (distinct_levels(sub)) {
        const auto closed = closed_form_defects(m);
        rep.check("povm.orthogonality_vs_closed_form", pm.orthogonality_defect,
                  Relation::greater, closed.orthogonality - 1e-10);
        rep.check("povm.idempotency_vs_closed_form",
                  std::abs(pm.idempotency_defect - closed.idempotency), Relation::less, 1e-10);
        data["closed_form_orthogonality"] = closed.orthogonality;
        data["closed_form_idempotency"] = closed.idempotency;
    }

    const CMatrix gram = timeobs::gram_of_restricted_time_states(sub, clock);
    rep.check("povm.gram_trace", std::abs(gram.trace().real() - povm.dim()), Relation::less,
              1e-10);

    // Control: the full clock factor of one system level, d = M.
    {
        const auto ns = q.ext.system_dim();
        CMatrix basis = CMatrix::Zero(ns * m, m);
        basis.topRows(m) = CMatrix::Identity(m, m);
        const auto control = timeobs::build_time_povm_from_basis(basis, ns, clock);
        const auto cpm = timeobs::pm_violation_report(control);
        rep.check("povm.control_orthogonality", cpm.orthogonality_defect, Relation::less, 1e-12);
        rep.check("povm.control_idempotency", cpm.idempotency_defect, Relation::less, 1e-12);
    }

    // Defect against grid size at fixed deltaT.
    PlotTable sweep{{"M", "d", "orthogonality_defect", "idempotency_defect",
                     "closed_form_orthogonality", "closed_form_idempotency"}, {}};
    for (int mm = 16; mm <= 128; mm *= 2) {
        auto spec = cfg.clock;
        spec.m = mm;
        const auto qq = build_quantum(cfg, spec, primary_sign(cfg));
        if (qq.spectral.empty()) continue;
        const auto p = timeobs::build_time_povm(qq.spectral, qq.ext.clock());
        const auto v = timeobs::pm_violation_report(p);
        const auto closed = closed_form_defects(mm);
        sweep.rows.push_back({static_cast<double>(mm), static_cast<double>(p.dim()),
                              v.orthogonality_defect, v.idempotency_defect,
                              closed.orthogonality, closed.idempotency});
    }
    c.out.plots["defect_vs_M"] = sweep;

    if (const auto *mq = mirrored(c); mq && !mq->spectral.empty()) {
        const auto other = timeobs::build_time_povm(mq->spectral, mq->ext.clock());
        double worst = other.dim() == povm.dim() ? 0.0 : HUGE_VAL;
        for (int k = 0; k < m && std::isfinite(worst); ++k) {
            worst = std::max(worst, linalg::max_abs(other.effect(k) - povm.effect(k).conjugate()));
        }
        rep.check("povm.mirrored_conjugate_effects", worst, Relation::less, 1e-10);
        // Physical clock factors are conjugated between the two signs.
        double factor_dev = 0.0;
        for (std::size_t a = 0; a < sub.pairs.size() && a < mq->spectral.pairs.size(); ++a) {
            const CVector x = sub.basis.col(static_cast<Eigen::Index>(a));
            const CVector y = mq->spectral.basis.col(static_cast<Eigen::Index>(a));
            factor_dev = std::max(factor_dev, linalg::max_abs(y - x.conjugate()));
        }
        rep.check("povm.mirrored_conjugate_basis", factor_dev, Relation::less, 1e-10);
    }
    rep.set_data("povm", std::move(data));
}

// ---------------------------------------------------------------------------
// time-distribution

CMatrix event_projector(const ScenarioConfig &cfg, const quantum::SystemSpace &sys) {
    const auto &ev = cfg.event;
    if (ev.position) {
        if (!is_classical_kind(cfg.system.kind)) {
            throw InvalidInput("event.position needs an oscillator-like system");
        }
        return position_projector(cfg.system.levels, cfg.system.omega, (*ev.position)[0],
                                  (*ev.position)[1]);
    }
    if (ev.system && *ev.system == "ground") {
        const CVector v = sys.eigenvector(0);
        return v * v.adjoint();
    }
    if (sys.dim() < 2) throw InvalidInput("event.system plus needs two levels");
    const CVector v = (sys.eigenvector(0) + sys.eigenvector(1)) / std::sqrt(2.0);
    return v * v.adjoint();
}

void suite_time_distribution(Context &c) {
    const auto &cfg = c.cfg;
    auto &rep = c.report();
    auto rng = c.rng_for("time-distribution");
    const auto &q = primary(c);
    const auto &sub = q.spectral;
    const auto &ext = q.ext;
    const auto &clock = ext.clock();
    const auto &sys = ext.system();
    const int m = clock.size();

    if (sub.empty()) {
        rep.check("time.nonempty", 0.0, Relation::greater, 0.0,
                  cfg.expect_deficient_subspace, "no physical states");
        return;
    }
    const auto povm = timeobs::build_time_povm(sub, clock);
    const auto phys = constraint::make_physical_state(sub, random_complex(rng, sub.dim()));
    const RVector p = timeobs::time_distribution(povm, phys);
    rep.check("time.normalization", std::abs(p.sum() - 1.0), Relation::less, 1e-12);
    rep.check("time.min_probability", p.minCoeff(), Relation::greater_equal, -1e-15);
    PlotTable dist{{"m", "T_m", "p_m"}, {}};
    for (int k = 0; k < m; ++k) dist.rows.push_back({double(k), clock.times()(k), p(k)});
    c.out.plots["time_distribution"] = dist;

    // One bin of clock advance is exp(-i sigma H_s deltaT) on the system.
    const CMatrix step = linalg::unitary_propagator(sys.eigen(), clock.sigma() * clock.delta_t());
    double min_fid = 1.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto st = constraint::make_physical_state(sub, random_complex(rng, sub.dim()));
        for (int k = 0; k < m; ++k) {
            const CVector a = timeobs::conditional_state(sub, st, k);
            const CVector b = timeobs::conditional_state(sub, st, (k + 1) % m);
            min_fid = std::min(min_fid, linalg::fidelity(step * a, b));
        }
    }
    rep.check("time.conditional_min_fidelity", min_fid, Relation::greater, 1.0 - 1e-10);

    const double first_moment = clock.times().dot(p);
    const double restricted =
        phys.coeffs.dot(povm.restricted_time() * phys.coeffs).real();
    rep.check("time.first_moment", std::abs(first_moment - restricted), Relation::less, 1e-10);

    Json data{{"sigma", clock.sigma()},
              {"d", sub.dim()},
              {"M", m},
              {"distribution", to_json(p)},
              {"mean_time", first_moment},
              {"conditional_min_fidelity", min_fid}};

    // Two-level fringe seen through |+> = (|E_a> + |E_b>)/sqrt(2).
    const auto second = std::find_if(sub.pairs.begin(), sub.pairs.end(), [&](const auto &pr) {
        return pr.level != sub.pairs.front().level;
    });
    if (second != sub.pairs.end()) {
        const auto ia = 0;
        const auto ib = static_cast<Eigen::Index>(second - sub.pairs.begin());
        const auto &pa = sub.pairs[ia];
        const auto &pb = *second;
        const double phi = 0.7;
        CVector coeffs = CVector::Zero(sub.dim());
        coeffs(ia) = 1.0 / std::sqrt(2.0);
        coeffs(ib) = std::polar(1.0 / std::sqrt(2.0), phi);
        const auto st = constraint::make_physical_state(sub, coeffs);
        const CVector plus = (sys.eigenvector(pa.level) + sys.eigenvector(pb.level)) / std::sqrt(2.0);
        const RVector profile = timeobs::event_time_profile(plus * plus.adjoint(), sub, st);
        PlotTable fringe{{"m", "T_m", "p_m", "closed_form"}, {}};
        double dev = 0.0;
        for (int k = 0; k < m; ++k) {
            const double t = clock.times()(k);
            const double closed =
                (1.0 + std::cos((pa.clock_value - pb.clock_value) * t - phi)) / (2.0 * m);
            dev = std::max(dev, std::abs(profile(k) - closed));
            fringe.rows.push_back({double(k), t, profile(k), closed});
        }
        rep.check("time.fringe_closed_form", dev, Relation::less, 1e-9);
        c.out.plots["fringe"] = fringe;
    }

    if (cfg.event.position || cfg.event.system) {
        const CMatrix proj = event_projector(cfg, sys);
        std::vector<int> window = cfg.event.window;
        if (window.empty()) {
            for (int k = 0; k < m; ++k) window.push_back(k);
        }
        const timeobs::EventOperator ev(proj, window, m);
        const double prob = timeobs::event_probability(ev, sub, phys);
        const RVector profile = timeobs::event_time_profile(proj, sub, phys);
        double window_sum = 0.0;
        for (int k : ev.window()) window_sum += profile(k);
        rep.check("time.event_probability_range", std::min(prob, 1.0 - prob),
                  Relation::greater_equal, -1e-12);
        rep.check("time.event_profile_consistency", std::abs(window_sum - prob),
                  Relation::less, 1e-12);
        data["event_probability"] = prob;
        PlotTable ep{{"m", "T_m", "p_event"}, {}};
        for (int k = 0; k < m; ++k) ep.rows.push_back({double(k), clock.times()(k), profile(k)});
        c.out.plots["event_profile"] = ep;
    }

    if (const auto *mq = mirrored(c); mq && !mq->spectral.empty()) {
        const auto other = timeobs::build_time_povm(mq->spectral, mq->ext.clock());
        double worst = other.dim() == povm.dim() ? 0.0 : HUGE_VAL;
        for (int trial = 0; trial < 20 && std::isfinite(worst); ++trial) {
            const CVector coeffs = random_real(rng, sub.dim());
            const RVector a = timeobs::time_distribution(povm, constraint::make_physical_state(sub, coeffs));
            const RVector b = timeobs::time_distribution(
                other, constraint::make_physical_state(mq->spectral, coeffs));
            worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
        }
        rep.check("time.mirrored_distribution_gap", worst, Relation::less, 1e-10);

        const CMatrix back = linalg::unitary_propagator(sys.eigen(), -clock.delta_t());
        const auto st = constraint::make_physical_state(mq->spectral, random_complex(rng, sub.dim()));
        double fid = 1.0;
        for (int k = 0; k < m; ++k) {
            fid = std::min(fid, linalg::fidelity(back * timeobs::conditional_state(mq->spectral, st, k),
                                                 timeobs::conditional_state(mq->spectral, st, (k + 1) % m)));
        }
        rep.check("time.mirrored_conditional_min_fidelity", fid, Relation::greater, 1.0 - 1e-10);
    }
    rep.set_data("time_distribution", std::move(data));
}

// ---------------------------------------------------------------------------
// covariance

void suite_covariance(Context &c) {
    const auto &cfg = c.cfg;
    auto &rep = c.report();
    auto rng = c.rng_for("covariance");
    const auto &q = primary(c);
    const auto &ext = q.ext;
    const auto &clock = ext.clock();
    const int bins = cfg.quantum.covariance_bins;

    if (q.spectral.empty()) {
        rep.check("covariance.nonempty", 0.0, Relation::greater, 0.0,
                  cfg.expect_deficient_subspace, "no physical states");
        return;
    }
    const auto povm = timeobs::build_time_povm(q.spectral, clock);
    const auto psi = quantum::ExtendedState::make(random_complex(rng, ext.dim()));
    const auto r = timeobs::covariance_report(ext, povm, q.spectral, psi, bins * clock.delta_t());
    rep.check("covariance.shift_deviation", r.max_shift_deviation, Relation::less, 1e-8);
    rep.check("covariance.physical_drift", r.max_physical_drift, Relation::less, 1e-10);

    const auto half = timeobs::covariance_report(ext, povm, q.spectral, psi,
                                                 (bins + 0.5) * clock.delta_t());
    PlotTable table{{"m", "T_m", "initial", "evolved"}, {}};
    for (int k = 0; k < clock.size(); ++k) {
        table.rows.push_back({double(k), clock.times()(k), r.initial_marginal(k),
                              r.evolved_marginal(k)});
    }
    c.out.plots["covariance"] = table;
    rep.set_data("covariance", Json{{"theta", r.theta},
                                    {"bins", r.bins},
                                    {"shift", r.shift},
                                    {"physical_weight", r.physical_weight},
                                    {"half_bin_theta", half.theta},
                                    {"half_bin_interpolated", half.interpolated},
                                    {"half_bin_shift_deviation", half.max_shift_deviation}});
}

using Suite = std::function<void(Context &)>;

const std::map<std::string, Suite> &suite_table() {
    static const std::map<std::string, Suite> table{
        {"classical-equivalence", suite_classical},
        {"quantum-equivalence", suite_quantum},
        {"constraint-solve", suite_constraint},
        {"povm-audit", suite_povm},
        {"time-distribution", suite_time_distribution},
        {"covariance", suite_covariance},
    };
    return table;
}

} // namespace

// ---------------------------------------------------------------------------

std::string to_string(Relation r) {
    switch (r) {
    case Relation::less: return "<";
    case Relation::less_equal: return "<=";
    case Relation::greater: return ">";
    case Relation::greater_equal: return ">=";
    case Relation::equal: return "==";
    }
    return "?";
}

std::string fnv1a_hex(const std::string &text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

AuditReport::AuditReport(std::string scenario, std::string config_text, std::uint64_t seed)
    : scenario_(std::move(scenario)), config_text_(std::move(config_text)), seed_(seed) {}

const CheckRecord &AuditReport::check(const std::string &id, double measured,
                                      Relation relation, double threshold,
                                      bool expected_fail, std::string note) {
    for (const auto &c : checks_) {
        if (c.id == id) throw InvalidInput("duplicate check id '" + id + "'");
    }
    CheckRecord rec{id, fnv1a_hex(config_text_ + "\n" + id), measured, threshold, relation,
                    holds(measured, relation, threshold), expected_fail, std::move(note)};
    checks_.push_back(std::move(rec));
    return checks_.back();
}

void AuditReport::set_data(const std::string &section, Json value) {
    data_[section] = std::move(value);
}

bool AuditReport::passed() const {
    return std::all_of(checks_.begin(), checks_.end(),
                       [](const CheckRecord &c) { return c.passed(); });
}

Json AuditReport::to_json(bool with_timestamp) const {
    Json checks = Json::array();
    for (const auto &c : checks_) {
        Json j{{"id", c.id},
               {"digest", c.digest},
               {"measured", c.measured},
               {"relation", to_string(c.relation)},
               {"threshold", c.threshold},
               {"satisfied", c.satisfied},
               {"expected_fail", c.expected_fail},
               {"passed", c.passed()}};
        if (!c.note.empty()) j["note"] = c.note;
        checks.push_back(std::move(j));
    }
    Json env{{"version", EPTIME_VERSION},
             {"compiler", __VERSION__},
             {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                           std::to_string(EIGEN_MAJOR_VERSION) + "." +
                           std::to_string(EIGEN_MINOR_VERSION)},
             {"cplusplus", __cplusplus}};
    if (with_timestamp) env["timestamp"] = utc_timestamp();
    Json data = Json::object();
    for (const auto &[k, v] : data_) data[k] = v;
    return Json{{"scenario", scenario_},
                {"seed", seed_},
                {"config_digest", fnv1a_hex(config_text_)},
                {"passed", passed()},
                {"checks", std::move(checks)},
                {"data", std::move(data)},
                {"environment", std::move(env)}};
}

std::string AuditReport::to_csv() const {
    std::ostringstream os;
    os << "id,digest,measured,relation,threshold,passed,expected_fail\n";
    for (const auto &c : checks_) {
        os << c.id << ',' << c.digest << ',' << format_double(c.measured) << ','
           << to_string(c.relation) << ',' << format_double(c.threshold) << ','
           << (c.passed() ? 1 : 0) << ',' << (c.expected_fail ? 1 : 0) << '\n';
    }
    return os.str();
}

void emit_plotdata(const PlotTable &table, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        out << (i ? "," : "") << table.columns[i];
    }
    out << '\n';
    for (const auto &row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << format_double(row[i]);
        }
        out << '\n';
    }
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

std::vector<std::string> default_suites(const ScenarioConfig &cfg) {
    if (!cfg.suites.empty()) return cfg.suites;
    std::vector<std::string> out;
    for (const auto &name : config::suite_names()) {
        if (name == "classical-equivalence" && !is_classical_kind(cfg.system.kind)) continue;
        out.push_back(name);
    }
    return out;
}

ScenarioResult run_scenario(const ScenarioConfig &cfg, const std::vector<std::string> &suites) {
    ScenarioResult result{AuditReport(cfg.name, config::serialize_config(cfg), cfg.seed), {}, {}};
    Context ctx{cfg, result, std::nullopt, std::nullopt};
    const auto selected = suites.empty() ? default_suites(cfg) : suites;
    for (const auto &name : selected) {
        const auto it = suite_table().find(name);
        if (it == suite_table().end()) throw InvalidInput("unknown suite '" + name + "'");
        const std::string where = "scenario '" + cfg.name + "', suite '" + name + "': ";
        try {
            it->second(ctx);
        } catch (const NoPhysicalStates &e) {
            throw NoPhysicalStates(where + e.what());
        } catch (const NumericalFailure &e) {
            throw NumericalFailure(where + e.what());
        } catch (const InvalidInput &e) {
            throw InvalidInput(where + e.what());
        } catch (const Error &e) {
            throw Error(where + e.what());
        }
    }
    result.report.set_data("suites", Json(selected));
    return result;
}

void write_outputs(const ScenarioResult &result, const std::filesystem::path &dir,
                   Format format) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create '" + dir.string() + "': " + ec.message());
    const auto report_path = dir / (format == Format::json ? "report.json" : "report.csv");
    std::ofstream out(report_path);
    if (!out) throw Error("cannot open '" + report_path.string() + "' for writing");
    out << (format == Format::json ? result.report.to_json().dump(2) + "\n"
                                   : result.report.to_csv());
    if (!out) throw Error("write to '" + report_path.string() + "' failed");
    for (const auto &[stem, table] : result.plots) emit_plotdata(table, dir / (stem + ".csv"));
    for (const auto &[stem, doc] : result.artifacts) {
        const auto path = dir / (stem + ".json");
        std::ofstream a(path);
        if (!a) throw Error("cannot open '" + path.string() + "' for writing");
        a << doc.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------

quantum::ClockSpace build_clock(const config::ClockSpec &spec, quantum::Sign sign) {
    return quantum::build_clock(spec.m, spec.delta_t, spec.t0, sign);
}

CMatrix position_matrix(int levels, double omega) {
    CMatrix a = CMatrix::Zero(levels, levels);
    for (int n = 1; n < levels; ++n) a(n - 1, n) = std::sqrt(double(n));
    return (a + a.adjoint()) / std::sqrt(2.0 * omega);
}

CMatrix momentum_matrix(int levels, double omega) {
    CMatrix a = CMatrix::Zero(levels, levels);
    for (int n = 1; n < levels; ++n) a(n - 1, n) = std::sqrt(double(n));
    return kI * std::sqrt(omega / 2.0) * (a.adjoint() - a);
}

CMatrix position_projector(int levels, double omega, double a, double b) {
    const auto eig = linalg::eigh(position_matrix(levels, omega));
    CMatrix p = CMatrix::Zero(levels, levels);
    for (int k = 0; k < levels; ++k) {
        const double x = eig.values(k);
        if (x >= a && x <= b) p += eig.vectors.col(k) * eig.vectors.col(k).adjoint();
    }
    return p;
}

CMatrix snap_to_grid(const CMatrix &h, const quantum::ClockSpace &clock) {
    const auto eig = linalg::eigh(0.5 * (h + h.adjoint()));
    const double step = clock.frequency_step();
    RVector snapped = eig.values;
    for (Eigen::Index i = 0; i < snapped.size(); ++i) {
        snapped(i) = std::round(snapped(i) / step) * step;
    }
    CMatrix out = eig.vectors * snapped.asDiagonal() * eig.vectors.adjoint();
    return 0.5 * (out + out.adjoint());
}

CMatrix build_system_matrix(const config::SystemSpec &spec, const quantum::ClockSpace &clock,
                            std::mt19937_64 &rng) {
    const int n = spec.levels;
    CMatrix h;
    switch (spec.kind) {
    case SystemKind::oscillator:
        h = CMatrix::Zero(n, n);
        for (int k = 0; k < n; ++k) h(k, k) = spec.omega * (k + 0.5);
        break;
    case SystemKind::qubit: {
        const double gap = spec.gap ? *spec.gap
                                    : spec.gap_bins.value_or(1.0) * clock.frequency_step();
        h = CMatrix::Zero(2, 2);
        h(1, 1) = gap;
        break;
    }
    case SystemKind::free_particle: {
        const CMatrix p = momentum_matrix(n, spec.omega);
        h = 0.5 * p * p;
        break;
    }
    case SystemKind::quartic: {
        const CMatrix p = momentum_matrix(n, spec.omega);
        const CMatrix x = position_matrix(n, spec.omega);
        const CMatrix x2 = x * x;
        h = 0.5 * p * p + 0.25 * x2 * x2;
        break;
    }
    case SystemKind::random_hermitian: {
        std::normal_distribution<double> g(0.0, spec.scale);
        CMatrix a(n, n);
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) a(r, c) = Complex(g(rng), g(rng));
        }
        h = 0.5 * (a + a.adjoint());
        break;
    }
    case SystemKind::explicit_matrix: {
        const auto &m = spec.matrix;
        const auto rows = static_cast<Eigen::Index>(m.size());
        h = CMatrix::Zero(rows, rows);
        for (Eigen::Index r = 0; r < rows; ++r) {
            if (static_cast<Eigen::Index>(m[r].size()) != rows) {
                throw InvalidInput("system.matrix must be square");
            }
            for (Eigen::Index c = 0; c < rows; ++c) h(r, c) = m[r][c];
        }
        break;
    }
    }
    return spec.snap_to_grid ? snap_to_grid(h, clock) : h;
}

} // namespace eptime::scenario
