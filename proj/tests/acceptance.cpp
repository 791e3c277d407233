// Acceptance criteria AC1-AC14. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. argv[1] is the output directory for AC14.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eptime/classical.hpp"
#include "eptime/cli.hpp"
#include "eptime/config.hpp"
#include "eptime/constraint.hpp"
#include "eptime/quantum.hpp"
#include "eptime/scenario.hpp"
#include "eptime/time_observable.hpp"
#include "oracles.hpp"

using namespace eptime;
using oracle::CMatrix;
using oracle::CVector;
using oracle::Complex;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string &what) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double spectral_norm(const CMatrix &a) {
    return Eigen::JacobiSVD<CMatrix>(a).singularValues()(0);
}

// H_ex = H_s (x) I + sigma I (x) S from first principles.
CMatrix hex_oracle(const CMatrix &hs, int m, double dt, double sigma) {
    return oracle::kron(hs, CMatrix::Identity(m, m)) +
           sigma * oracle::kron(CMatrix::Identity(hs.rows(), hs.rows()), oracle::dft_conjugate(m, dt));
}

CMatrix effect_oracle(const CMatrix &basis, Eigen::Index ns, int m, int bin) {
    CMatrix proj = CMatrix::Zero(m, m);
    proj(bin, bin) = 1.0;
    return basis.adjoint() * oracle::kron(CMatrix::Identity(ns, ns), proj) * basis;
}

struct Built {
    quantum::ExtendedSpace ext;
    constraint::PhysicalSubspace spectral;
};

config::ScenarioConfig bundled(const std::string &name) {
    return config::load_config(cli::bundled_scenario_dir() + "/" + name + ".conf");
}

Built build_from(const config::ScenarioConfig &cfg, quantum::Sign sign) {
    const auto clock = scenario::build_clock(cfg.clock, sign);
    std::mt19937_64 rng(cfg.seed);
    const CMatrix h = scenario::build_system_matrix(cfg.system, clock, rng);
    auto ext = quantum::build_extended(quantum::build_system_space(h), clock);
    auto sub = constraint::solve_constraint_spectral(ext);
    return {std::move(ext), std::move(sub)};
}

Built qubit(quantum::Sign sign, int m = 64, double dt = 0.25, double t0 = 0.0) {
    CMatrix h = CMatrix::Zero(2, 2);
    h(1, 1) = 8 * 2.0 * oracle::pi / (m * dt);
    auto ext = quantum::build_extended(quantum::build_system_space(h), quantum::build_clock(m, dt, t0, sign));
    auto sub = constraint::solve_constraint_spectral(ext);
    return {std::move(ext), std::move(sub)};
}

// --------------------------------------------------------------------------

Outcome ac1() {
    Outcome o;
    const auto start = Clock::now();
    const auto sys = classical::HamiltonianSystem::harmonic_oscillator(1.0);
    const auto x0 = classical::PhaseState::make({1.0}, {0.0});
    const double t_end = 2.0 * oracle::pi;
    const auto orig = classical::integrate_original(sys, x0, t_end, 1e-3);
    const classical::ExtendedSystem ext(sys);
    const auto y0 = classical::extend_state(sys, x0, 0.0);
    const auto traj = classical::integrate_extended(ext, y0, t_end, 1e-3);

    double dev = 0.0, tres = 0.0, sdrift = 0.0, hmax = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto &a = orig.states[k];
        const auto &y = traj.states[k];
        dev = std::max(dev, std::hypot(a.q[0] - y.base.q[0], a.p[0] - y.base.p[0]));
        tres = std::max(tres, std::abs(y.T - traj.param[k]));
        const double h = 0.5 * (y.base.q[0] * y.base.q[0] + y.base.p[0] * y.base.p[0]);
        sdrift = std::max({sdrift, std::abs(y.S + h), std::abs(y.S - y0.S)});
        hmax = std::max(hmax, std::abs(classical::eval_extended_hamiltonian(ext, y)));
    }
    const double secs = seconds_since(start);
    o.require(dev < 1e-9, "deviation " + fmt(dev));
    o.require(tres < 1e-10, "T residual " + fmt(tres));
    o.require(sdrift < 1e-10, "S drift " + fmt(sdrift));
    o.require(hmax < 1e-8, "max|H_ex| " + fmt(hmax));
    o.require(secs < 1.0, "runtime " + fmt(secs) + " s");
    o.detail = o.ok ? "dev " + fmt(dev) + ", S drift " + fmt(sdrift) + ", " + fmt(secs) + " s" : o.detail;
    return o;
}

Outcome ac2() {
    Outcome o;
    const auto start = Clock::now();
    using namespace classical;
    const std::vector<HamiltonianSystem> systems = {
        HamiltonianSystem::harmonic_oscillator(1.3), HamiltonianSystem::free_particle(),
        HamiltonianSystem::quartic_oscillator()};
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    double worst = 0.0;
    for (const auto &sys : systems) {
        const ExtendedSystem ext(sys);
        const PhaseFunction hex = [&ext](const ExtendedPhaseState &y) { return eval_extended_hamiltonian(ext, y); };
        for (int n = 0; n < 100; ++n) {
            const ExtendedPhaseState y{PhaseState::make({u(rng)}, {u(rng)}), u(rng), u(rng)};
            const struct {
                PhaseFunction f, g;
                double exact;
            } table[] = {
                {coordinate::q(0), coordinate::p(0), 1.0},
                {coordinate::T(), coordinate::S(), 1.0},
                {coordinate::q(0), coordinate::T(), 0.0},
                {coordinate::q(0), coordinate::S(), 0.0},
                {coordinate::p(0), coordinate::T(), 0.0},
                {coordinate::p(0), coordinate::S(), 0.0},
                {coordinate::T(), hex, 1.0},
            };
            for (const auto &row : table) {
                worst = std::max(worst, std::abs(poisson_bracket(row.f, row.g, y) - row.exact));
            }
        }
    }
    const double secs = seconds_since(start);
    o.require(worst < 1e-6, "worst bracket error " + fmt(worst));
    o.require(secs < 1.0, "runtime " + fmt(secs) + " s");
    if (o.ok) o.detail = "worst " + fmt(worst) + ", " + fmt(secs) + " s";
    return o;
}

Outcome ac3() {
    Outcome o;
    const auto sys = classical::HamiltonianSystem::harmonic_oscillator(1.0);
    const auto x0 = classical::PhaseState::make({1.0}, {0.0});
    const double t_end = 4.0;
    std::vector<double> errors;
    for (double dt : {0.125, 0.0625, 0.03125, 0.015625}) {
        const auto traj = classical::integrate_original(sys, x0, t_end, dt);
        const auto &xf = traj.states.back();
        errors.push_back(std::hypot(xf.q[0] - std::cos(t_end), xf.p[0] + std::sin(t_end)));
    }
    std::string ratios;
    for (std::size_t i = 1; i < errors.size(); ++i) {
        const double r = errors[i - 1] / errors[i];
        ratios += (i > 1 ? ", " : "") + fmt(r);
        o.require(r >= 3.5 && r <= 4.5, "ratio " + fmt(r));
    }
    if (o.ok) o.detail = "ratios " + ratios;
    return o;
}

// |[T,S] phi - i phi| with T and S rebuilt from the DFT definition.
double commutator_oracle(int m, double dt, const CVector &phi) {
    const CMatrix t = oracle::time_diag(m, dt, 0.0);
    const CMatrix s = oracle::dft_conjugate(m, dt);
    return ((t * s - s * t) * phi - Complex(0.0, 1.0) * phi).norm();
}

CVector gaussian_oracle(int m, double dt, double center, double width) {
    CVector g(m);
    for (int j = 0; j < m; ++j) {
        const double x = j * dt - center;
        g(j) = std::exp(-x * x / (4.0 * width * width));
    }
    return g / g.norm();
}

Outcome ac4() {
    Outcome o;
    const double dt = 0.1, width = 1.5;
    double prev = -1.0, secs = 0.0;
    std::string trail;
    for (int m = 64; m <= 512; m *= 2) {
        // Only the library path is timed; the dense oracle below is not.
        const auto start = Clock::now();
        const auto clock = quantum::build_clock(m, dt);
        const double center = (m - 1) * dt / 2.0;
        const CVector g = quantum::gaussian_clock_state(clock, center, width);
        const double r = quantum::commutator_residual(clock, g);
        secs += seconds_since(start);
        const double ref = commutator_oracle(m, dt, gaussian_oracle(m, dt, center, width));
        o.require(std::abs(r - ref) <= 1e-9 + 1e-6 * ref, "M=" + std::to_string(m) + " oracle mismatch");
        if (prev > 0.0) o.require(r * 10.0 <= prev, "M=" + std::to_string(m) + " ratio " + fmt(prev / r));
        trail += (prev > 0.0 ? " " : "") + fmt(r);
        prev = r;
    }
    o.require(secs < 10.0, "runtime " + fmt(secs) + " s");
    if (o.ok) o.detail = "residuals " + trail + ", library " + fmt(secs) + " s";
    return o;
}

Outcome ac5() {
    Outcome o;
    std::mt19937_64 rng(5);
    const CMatrix hs = oracle::random_hermitian(rng, 3);
    const int m = 32;
    const double dt = 0.3;
    std::uniform_real_distribution<double> theta(-10.0, 10.0);
    double worst = 1.0;
    for (auto sign : {quantum::Sign::plus, quantum::Sign::minus}) {
        const auto ext = quantum::build_extended(quantum::build_system_space(hs), quantum::build_clock(m, dt, 0.0, sign));
        for (int n = 0; n < 50; ++n) {
            const CVector a = oracle::random_vector(rng, 3);
            const CVector b = oracle::random_vector(rng, m);
            const auto psi = quantum::ExtendedState::product(a, b);
            for (int k = 0; k < 10; ++k) {
                const double t = theta(rng);
                const auto ev = quantum::evolve_extended(ext, psi, t);
                const auto fac = quantum::evolve_factored(ext.system(), ext.clock(), a, b, t);
                worst = std::min(worst, oracle::overlap(ev.amplitudes, oracle::kron(fac.system, fac.clock)));
            }
        }
    }
    o.require(worst > 1.0 - 1e-11, "min fidelity 1-" + fmt(1.0 - worst));
    if (o.ok) o.detail = "min fidelity 1-" + fmt(1.0 - worst);
    return o;
}

// Delta H_ex * Delta T from dense oracle operators.
double uncertainty_oracle(const CMatrix &hex, const CMatrix &tfull, const CVector &psi) {
    auto spread = [&psi](const CMatrix &a) {
        const CVector ap = a * psi;
        const double mean = psi.dot(ap).real();
        return std::sqrt(std::max(0.0, ap.squaredNorm() - mean * mean));
    };
    return spread(hex) * spread(tfull);
}

Outcome ac6() {
    Outcome o;
    const int m = 256;
    const double dt = 0.1;
    std::mt19937_64 rng(6);
    const CMatrix hs = oracle::random_hermitian(rng, 2);
    const CMatrix hex = hex_oracle(hs, m, dt, 1.0);
    const CMatrix tfull = oracle::kron(CMatrix::Identity(2, 2), oracle::time_diag(m, dt, 0.0));
    const auto ext = quantum::build_extended(quantum::build_system_space(hs), quantum::build_clock(m, dt));
    const double center = (m - 1) * dt / 2.0;

    Eigen::SelfAdjointEigenSolver<CMatrix> es(hs);
    const CVector e0 = es.eigenvectors().col(0);
    const CVector packet = oracle::kron(e0, gaussian_oracle(m, dt, center, 1.2));
    const double p0 = uncertainty_oracle(hex, tfull, packet);
    const double lib = quantum::uncertainty_product(ext, quantum::ExtendedState::make(packet)).product;
    o.require(p0 >= 0.5 - 1e-3 && p0 <= 0.6, "packet product " + fmt(p0));
    o.require(std::abs(lib - p0) < 1e-9, "library product " + fmt(lib));

    std::uniform_real_distribution<double> c(9.0, 16.5), w(0.4, 2.0), k0(-5.0, 5.0);
    double lowest = 1e300;
    for (int n = 0; n < 100; ++n) {
        CVector amp = CVector::Zero(2 * m);
        for (int i = 0; i < 2; ++i) {
            const double cc = c(rng), ww = w(rng), kk = k0(rng);
            CVector g = gaussian_oracle(m, dt, cc, ww);
            for (int j = 0; j < m; ++j) g(j) *= std::polar(1.0, kk * j * dt);
            amp += oracle::kron(oracle::random_vector(rng, 2), g);
        }
        amp /= amp.norm();
        const double p = uncertainty_oracle(hex, tfull, amp);
        lowest = std::min(lowest, p);
        const double q = quantum::uncertainty_product(ext, quantum::ExtendedState::make(amp)).product;
        o.require(std::abs(q - p) < 1e-8, "state " + std::to_string(n) + " library mismatch");
    }
    o.require(lowest >= 0.5 - 1e-3, "lowest random product " + fmt(lowest));
    if (o.ok) o.detail = "packet " + fmt(p0) + ", lowest random " + fmt(lowest);
    return o;
}

// Largest principal angle between two orthonormal column sets of equal size.
double max_principal_angle(const CMatrix &a, const CMatrix &b) {
    const CMatrix resid = b - a * (a.adjoint() * b);
    if (resid.cols() == 0) return 0.0;
    return std::asin(std::min(1.0, spectral_norm(resid)));
}

Outcome ac7() {
    Outcome o;
    std::string summary;
    for (const std::string name : {"qubit_commensurate", "oscillator_snapped"}) {
        const auto cfg = bundled(name);
        const auto sign = cfg.clock.sigma < 0 ? quantum::Sign::minus : quantum::Sign::plus;
        const auto b = build_from(cfg, sign);
        const auto kern = constraint::solve_constraint_kernel(b.ext);
        o.require(kern.dim() == b.spectral.dim(), name + " d " + std::to_string(kern.dim()) + " vs " +
                                                      std::to_string(b.spectral.dim()));
        if (kern.dim() != b.spectral.dim()) continue;
        const double angle = max_principal_angle(b.spectral.basis, kern.basis);
        o.require(angle < 1e-8, name + " angle " + fmt(angle));

        const CMatrix hex = hex_oracle(b.ext.system().hamiltonian(), cfg.clock.m, cfg.clock.delta_t,
                                       quantum::sign_value(sign));
        const double scale = Eigen::SelfAdjointEigenSolver<CMatrix>(hex, Eigen::EigenvaluesOnly)
                                 .eigenvalues().cwiseAbs().maxCoeff();
        double worst = 0.0;
        for (const auto *sub : {&b.spectral, &kern}) {
            for (Eigen::Index j = 0; j < sub->dim(); ++j) worst = std::max(worst, (hex * sub->basis.col(j)).norm());
        }
        o.require(worst < 1e-9 * scale, name + " residual " + fmt(worst / scale));
        summary += name + " d=" + std::to_string(kern.dim()) + " angle " + fmt(angle) + "; ";
    }
    if (o.ok) o.detail = summary;
    return o;
}

Outcome ac8() {
    Outcome o;
    std::mt19937_64 rng(8);
    double worst_fid = 1.0, worst_marg = 0.0, worst_s = 0.0;
    std::vector<std::pair<config::ScenarioConfig, quantum::Sign>> cases;
    cases.emplace_back(bundled("qubit_commensurate"), quantum::Sign::plus);
    cases.emplace_back(bundled("qubit_commensurate"), quantum::Sign::minus);
    cases.emplace_back(bundled("oscillator_snapped"), quantum::Sign::plus);
    for (const auto &[cfg, sign] : cases) {
        const auto b = build_from(cfg, sign);
        const int m = cfg.clock.m;
        const double sigma = quantum::sign_value(sign);
        const Eigen::Index ns = b.ext.system_dim();
        const CMatrix hex = hex_oracle(b.ext.system().hamiltonian(), m, cfg.clock.delta_t, sigma);
        const Eigen::SelfAdjointEigenSolver<CMatrix> es(hex);
        std::vector<CMatrix> props;
        for (double theta : {0.1, 1.0, 10.0}) {
            const CVector phases = (-Complex(0.0, theta) * es.eigenvalues().cast<Complex>()).array().exp();
            props.push_back(es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint());
        }
        for (int n = 0; n < 5; ++n) {
            const auto phys = constraint::make_physical_state(b.spectral, oracle::random_vector(rng, b.spectral.dim()));
            const CVector &psi = phys.state.amplitudes;
            for (const CMatrix &u : props) worst_fid = std::min(worst_fid, std::abs(psi.dot(u * psi)));
            for (double p : oracle::marginal(psi, static_cast<int>(ns), m)) {
                worst_marg = std::max(worst_marg, std::abs(p - 1.0 / m));
            }
        }
        const CMatrix sfull = oracle::kron(CMatrix::Identity(ns, ns), oracle::dft_conjugate(m, cfg.clock.delta_t));
        const CMatrix restricted = b.spectral.basis.adjoint() * sfull * b.spectral.basis;
        CMatrix expected = CMatrix::Zero(b.spectral.dim(), b.spectral.dim());
        for (Eigen::Index j = 0; j < b.spectral.dim(); ++j) {
            expected(j, j) = -sigma * b.spectral.pairs[j].energy;
        }
        worst_s = std::max(worst_s, (restricted - expected).cwiseAbs().maxCoeff());
    }
    o.require(worst_fid > 1.0 - 1e-10, "stationarity 1-" + fmt(1.0 - worst_fid));
    o.require(worst_marg < 1e-10, "marginal " + fmt(worst_marg));
    o.require(worst_s < 1e-9, "restricted S " + fmt(worst_s));
    if (o.ok) {
        o.detail = "fidelity 1-" + fmt(1.0 - worst_fid) + ", marginal " + fmt(worst_marg) + ", S " + fmt(worst_s);
    }
    return o;
}

Outcome ac9() {
    Outcome o;
    std::vector<Built> builds;
    for (const auto &entry : std::filesystem::directory_iterator(cli::bundled_scenario_dir())) {
        if (entry.path().extension() != ".conf") continue;
        const auto cfg = config::load_config(entry.path().string());
        if (cfg.system.kind == config::SystemKind::free_particle || cfg.system.kind == config::SystemKind::quartic)
            continue;
        builds.push_back(build_from(cfg, quantum::Sign::plus));
        builds.push_back(build_from(cfg, quantum::Sign::minus));
    }
    std::mt19937_64 rng(9);
    for (int n = 0; n < 6; ++n) {
        const CMatrix h = oracle::random_hermitian(rng, 3);
        auto ext = quantum::build_extended(quantum::build_system_space(h), quantum::build_clock(16, 0.4));
        auto sub = constraint::solve_constraint_spectral(ext);
        builds.push_back({std::move(ext), std::move(sub)});
    }
    double min_eig = 1e300, worst_complete = 0.0, worst_effect = 0.0;
    int count = 0;
    for (const auto &b : builds) {
        const auto povm = timeobs::build_time_povm(b.spectral, b.ext.clock());
        ++count;
        CMatrix sum = CMatrix::Zero(povm.dim(), povm.dim());
        for (int m = 0; m < povm.size(); ++m) {
            const CMatrix &e = povm.effect(m);
            min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<CMatrix>(e).eigenvalues().minCoeff());
            sum += e;
            worst_effect = std::max(worst_effect,
                (e - effect_oracle(b.spectral.basis, b.ext.system_dim(), b.ext.clock_dim(), m)).cwiseAbs().maxCoeff());
        }
        worst_complete = std::max(worst_complete, spectral_norm(sum - CMatrix::Identity(povm.dim(), povm.dim())));
    }
    o.require(min_eig >= -1e-12, "min eigenvalue " + fmt(min_eig));
    o.require(worst_complete < 1e-10, "completeness " + fmt(worst_complete));
    o.require(worst_effect < 1e-12, "effects differ from dense construction by " + fmt(worst_effect));
    if (o.ok) {
        o.detail = std::to_string(count) + " POVMs, min eig " + fmt(min_eig) + ", completeness " + fmt(worst_complete);
    }
    return o;
}

struct Defects {
    double ortho = 0.0, idem = 0.0;
};

Defects defects_oracle(const std::vector<CMatrix> &effects) {
    Defects d;
    for (std::size_t a = 0; a < effects.size(); ++a) {
        d.idem = std::max(d.idem, spectral_norm(effects[a] * effects[a] - effects[a]));
        for (std::size_t b = 0; b < effects.size(); ++b) {
            if (a != b) d.ortho = std::max(d.ortho, spectral_norm(effects[a] * effects[b]));
        }
    }
    return d;
}

Outcome ac10() {
    Outcome o;
    const int m = 64;
    const auto b = build_from(bundled("qubit_commensurate"), quantum::Sign::plus);
    o.require(b.spectral.dim() == 2, "d = " + std::to_string(b.spectral.dim()));
    std::vector<CMatrix> effects;
    for (int bin = 0; bin < m; ++bin) effects.push_back(effect_oracle(b.spectral.basis, 2, m, bin));
    const Defects ref = defects_oracle(effects);
    const auto povm = timeobs::build_time_povm(b.spectral, b.ext.clock());
    const auto lib = timeobs::pm_violation_report(povm);
    // Distinct levels make every effect I/M: E_m E_m' = I/M^2 and E_m^2 - E_m = (1/M^2 - 1/M) I.
    const double closed_ortho = 1.0 / (m * m);
    const double closed_idem = 1.0 / m - 1.0 / (m * m);
    o.require(ref.ortho >= closed_ortho - 1e-10, "orthogonality " + fmt(ref.ortho));
    o.require(ref.ortho > 1e-6, "orthogonality not > 1e-6");
    o.require(ref.idem > 1e-6, "idempotency " + fmt(ref.idem));
    o.require(std::abs(ref.idem - closed_idem) < 1e-12, "idempotency vs closed form " + fmt(ref.idem));
    o.require(std::abs(lib.orthogonality_defect - ref.ortho) < 1e-12, "library orthogonality " + fmt(lib.orthogonality_defect));
    o.require(std::abs(lib.idempotency_defect - ref.idem) < 1e-12, "library idempotency " + fmt(lib.idempotency_defect));

    // d = M control: the unrestricted clock projectors.
    const auto clock = quantum::build_clock(m, 0.25);
    const CMatrix full = CMatrix::Identity(m, m);
    const auto ctrl = timeobs::build_time_povm_from_basis(full, 1, clock);
    std::vector<CMatrix> ctrl_effects;
    for (int bin = 0; bin < m; ++bin) ctrl_effects.push_back(effect_oracle(full, 1, m, bin));
    const Defects cref = defects_oracle(ctrl_effects);
    const auto clib = timeobs::pm_violation_report(ctrl);
    o.require(ctrl.dim() == m, "control d " + std::to_string(ctrl.dim()));
    o.require(cref.ortho < 1e-12 && cref.idem < 1e-12, "control oracle defects");
    o.require(clib.orthogonality_defect < 1e-12 && clib.idempotency_defect < 1e-12,
              "control library defects " + fmt(clib.orthogonality_defect) + ", " + fmt(clib.idempotency_defect));
    if (o.ok) {
        o.detail = "orthogonality " + fmt(ref.ortho) + " (closed form " + fmt(closed_ortho) + "), idempotency " +
                   fmt(ref.idem) + ", control " + fmt(clib.orthogonality_defect);
    }
    return o;
}

Outcome ac11() {
    Outcome o;
    const int m = 64;
    const double dt = 0.25, t0 = 0.5;
    std::mt19937_64 rng(11);
    double worst = 1.0, fringe = 0.0;
    for (auto sign : {quantum::Sign::plus, quantum::Sign::minus}) {
        const auto b = qubit(sign, m, dt, t0);
        const double sigma = quantum::sign_value(sign);
        const CMatrix &hs = b.ext.system().hamiltonian();
        const CMatrix u = oracle::expm_minus_i(hs, sigma * dt);
        for (int n = 0; n < 20; ++n) {
            const auto phys = constraint::make_physical_state(b.spectral, oracle::random_vector(rng, 2));
            for (int bin = 0; bin < m; ++bin) {
                const CVector a = timeobs::conditional_state(b.spectral, phys, bin);
                const CVector c = timeobs::conditional_state(b.spectral, phys, (bin + 1) % m);
                worst = std::min(worst, oracle::overlap(u * a, c));
            }
        }
        // |+> on the two levels; the joint profile is (1 + cos(sigma gap T_m - phi)) / (2M).
        const double phi = 1.1;
        const double gap = hs(1, 1).real() - hs(0, 0).real();
        CVector coeffs(2);
        coeffs << 1.0, std::polar(1.0, phi);
        const auto phys = constraint::make_physical_state(b.spectral, coeffs);
        CVector plus(2);
        plus << 1.0, 1.0;
        plus /= std::sqrt(2.0);
        const RVector prof = timeobs::event_time_profile(plus * plus.adjoint(), b.spectral, phys);
        for (int bin = 0; bin < m; ++bin) {
            const double t = t0 + bin * dt;
            fringe = std::max(fringe, std::abs(prof(bin) - (1.0 + std::cos(sigma * gap * t - phi)) / (2.0 * m)));
        }
    }
    o.require(worst > 1.0 - 1e-10, "conditional fidelity 1-" + fmt(1.0 - worst));
    o.require(fringe < 1e-9, "fringe " + fmt(fringe));
    if (o.ok) o.detail = "fidelity 1-" + fmt(1.0 - worst) + ", fringe " + fmt(fringe);
    return o;
}

Outcome ac12() {
    Outcome o;
    const int m = 64;
    const double dt = 0.25;
    std::mt19937_64 rng(12);
    double shift_dev = 0.0, phys_dev = 0.0;
    for (auto sign : {quantum::Sign::plus, quantum::Sign::minus}) {
        const auto b = qubit(sign);
        const int shift = 5 * static_cast<int>(sign);
        const CMatrix u = oracle::expm_minus_i(hex_oracle(b.ext.system().hamiltonian(), m, dt, quantum::sign_value(sign)), 5 * dt);
        const auto povm = timeobs::build_time_povm(b.spectral, b.ext.clock());

        CVector sys(2);
        sys << 0.6, Complex(0.0, 0.8);
        CVector g = gaussian_oracle(m, dt, 6.0, 1.0);
        for (int j = 0; j < m; ++j) g(j) *= std::polar(1.0, 2.0 * j * dt);
        const CVector psi = oracle::kron(sys, g);
        const auto before = oracle::marginal(psi, 2, m);
        const auto after = oracle::marginal(u * psi, 2, m);
        const auto rep = timeobs::covariance_report(b.ext, povm, b.spectral, quantum::ExtendedState::make(psi), 5 * dt);
        for (int bin = 0; bin < m; ++bin) {
            const int src = ((bin - shift) % m + m) % m;
            shift_dev = std::max(shift_dev, std::abs(after[bin] - before[src]));
            shift_dev = std::max(shift_dev, std::abs(rep.evolved_marginal(bin) - after[bin]));
        }
        o.require(rep.shift == shift, "library shift " + std::to_string(rep.shift));

        for (int n = 0; n < 10; ++n) {
            const auto phys = constraint::make_physical_state(b.spectral, oracle::random_vector(rng, 2));
            const auto p0 = oracle::marginal(phys.state.amplitudes, 2, m);
            const auto p1 = oracle::marginal(u * phys.state.amplitudes, 2, m);
            for (int bin = 0; bin < m; ++bin) phys_dev = std::max(phys_dev, std::abs(p1[bin] - p0[bin]));
        }
    }
    o.require(shift_dev < 1e-8, "shift deviation " + fmt(shift_dev));
    o.require(phys_dev < 1e-10, "physical drift " + fmt(phys_dev));
    if (o.ok) o.detail = "shift " + fmt(shift_dev) + ", physical " + fmt(phys_dev);
    return o;
}

Outcome ac13() {
    Outcome o;
    const auto cfg = bundled("sign_comparison");
    const auto a = build_from(cfg, quantum::Sign::plus);
    const auto b = build_from(cfg, quantum::Sign::minus);
    const auto pa = timeobs::build_time_povm(a.spectral, a.ext.clock());
    const auto pb = timeobs::build_time_povm(b.spectral, b.ext.clock());
    const Eigen::Index ns = a.ext.system_dim();
    const int m = a.ext.clock_dim();
    double effects = 0.0, dist = 0.0;
    o.require(pa.dim() == pb.dim(), "dimensions differ");
    if (!o.ok) return o;
    for (int bin = 0; bin < m; ++bin) {
        const CMatrix ea = effect_oracle(a.spectral.basis, ns, m, bin);
        const CMatrix eb = effect_oracle(b.spectral.basis, ns, m, bin);
        effects = std::max(effects, (eb - ea.conjugate()).cwiseAbs().maxCoeff());
        effects = std::max(effects, (pb.effect(bin) - pa.effect(bin).conjugate()).cwiseAbs().maxCoeff());
    }
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g;
    for (int n = 0; n < 20; ++n) {
        CVector c(pa.dim());
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = g(rng);
        const auto sa = constraint::make_physical_state(a.spectral, c);
        const auto sb = constraint::make_physical_state(b.spectral, c);
        const auto ma = oracle::marginal(sa.state.amplitudes, static_cast<int>(ns), m);
        const auto mb = oracle::marginal(sb.state.amplitudes, static_cast<int>(ns), m);
        const RVector da = timeobs::time_distribution(pa, sa);
        const RVector db = timeobs::time_distribution(pb, sb);
        for (int bin = 0; bin < m; ++bin) {
            dist = std::max({dist, std::abs(ma[bin] - mb[bin]), std::abs(da(bin) - db(bin))});
        }
    }
    o.require(effects < 1e-12, "conjugate effects " + fmt(effects));
    o.require(dist < 1e-10, "distribution gap " + fmt(dist));
    if (o.ok) o.detail = "effects " + fmt(effects) + ", distributions " + fmt(dist);
    return o;
}

Outcome ac14(const std::string &out_dir) {
    Outcome o;
    const auto start = Clock::now();
    std::ostringstream out, err;
    const int code = cli::run({"all", "--out", out_dir}, out, err);
    const double secs = seconds_since(start);
    int scenarios = 0;
    for (const auto &entry : std::filesystem::directory_iterator(out_dir)) {
        if (std::filesystem::exists(entry.path() / "report.json")) ++scenarios;
    }
    o.require(code == 0, "exit code " + std::to_string(code) + ": " + err.str());
    o.require(scenarios == 6, std::to_string(scenarios) + " reports");
    o.require(secs < 60.0, "runtime " + fmt(secs) + " s");
    if (o.ok) o.detail = "exit 0, " + std::to_string(scenarios) + " scenarios, " + fmt(secs) + " s";
    return o;
}

} // namespace

int main(int argc, char **argv) {
    const std::string out_dir = argc > 1 ? argv[1] : "acceptance_out";
    std::filesystem::remove_all(out_dir);
    std::filesystem::create_directories(out_dir);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"AC1 classical equivalence", ac1},
        {"AC2 Poisson bracket table", ac2},
        {"AC3 convergence order", ac3},
        {"AC4 CCR approximation", ac4},
        {"AC5 evolution factorization", ac5},
        {"AC6 uncertainty product", ac6},
        {"AC7 constraint cross-method", ac7},
        {"AC8 physical-state structure", ac8},
        {"AC9 POVM axioms", ac9},
        {"AC10 POVM is not a projector measure", ac10},
        {"AC11 conditional dynamics", ac11},
        {"AC12 covariance", ac12},
        {"AC13 sign equivalence", ac13},
        {"AC14 end-to-end", [&] { return ac14(out_dir); }},
    };

    int failed = 0;
    for (const auto &[name, fn] : criteria) {
        Outcome o;
        const auto start = Clock::now();
        try {
            o = fn();
        } catch (const std::exception &e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.ok) ++failed;
        std::cout << (o.ok ? "PASS " : "FAIL ") << name << " (" << o.detail << ") [" << fmt(seconds_since(start)) << " s]"
                  << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
