#include "eptime/classical.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "eptime/errors.hpp"

namespace eptime::classical {

namespace {

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(),
                       [](double x) { return std::isfinite(x); });
}

// Flat layout used by the integrator: (q_1..q_n, p_1..p_n[, T, S]).
using Flat = std::vector<double>;
using VectorField = std::function<void(const Flat &z, Flat &dz)>;

std::size_t step_count(double span_end, double step, const char *who) {
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw InvalidInput(std::string(who) + ": step must be positive");
    }
    if (!(span_end > 0.0) || !std::isfinite(span_end)) {
        throw InvalidInput(std::string(who) + ": end must be positive");
    }
    const double ratio = span_end / step;
    // Absorb representation error so that 1.0 / 1e-3 gives 1000 steps.
    auto n = static_cast<std::size_t>(std::ceil(ratio - 1e-9 * ratio));
    return std::max<std::size_t>(n, 1);
}

// One implicit-midpoint step z1 = z0 + h f((z0 + z1) / 2), solved by
// fixed-point iteration started from the explicit Euler predictor.
void midpoint_step(const VectorField &field, const Flat &z0, double h,
                   Flat &z1, const IntegratorOptions &opts, std::size_t step) {
    const std::size_t dim = z0.size();
    Flat mid(dim), dz(dim), next(dim);
    field(z0, dz);
    for (std::size_t i = 0; i < dim; ++i) {
        z1[i] = z0[i] + h * dz[i];
    }
    for (int it = 0; it < opts.max_iterations; ++it) {
        for (std::size_t i = 0; i < dim; ++i) {
            mid[i] = 0.5 * (z0[i] + z1[i]);
        }
        field(mid, dz);
        double change = 0.0;
        double scale = 1.0;
        for (std::size_t i = 0; i < dim; ++i) {
            next[i] = z0[i] + h * dz[i];
            change = std::max(change, std::abs(next[i] - z1[i]));
            scale = std::max(scale, std::abs(next[i]));
        }
        z1.swap(next);
        if (!all_finite(z1)) {
            throw DivergenceError("implicit midpoint produced non-finite state",
                                  step);
        }
        if (change <= opts.tolerance * scale) {
            return;
        }
    }
    throw DivergenceError("implicit midpoint iteration did not converge", step);
}

PhaseState unflatten(const Flat &z, std::size_t n) {
    PhaseState x;
    x.q.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n));
    x.p.assign(z.begin() + static_cast<std::ptrdiff_t>(n),
               z.begin() + static_cast<std::ptrdiff_t>(2 * n));
    return x;
}

void write_number(std::ostream &out, double v) {
    out << std::setprecision(17) << v;
}

} // namespace

PhaseState PhaseState::make(std::vector<double> q, std::vector<double> p) {
    if (q.empty() || q.size() != p.size()) {
        throw InvalidInput("PhaseState: q and p must have equal length >= 1");
    }
    if (!all_finite(q) || !all_finite(p)) {
        throw InvalidInput("PhaseState: non-finite coordinate");
    }
    return PhaseState{std::move(q), std::move(p)};
}

HamiltonianSystem::HamiltonianSystem(std::size_t n, EnergyFn energy,
                                     GradientFn gradient, std::string label)
    : n_(n), energy_(std::move(energy)), gradient_(std::move(gradient)),
      label_(std::move(label)) {
    if (n_ == 0) {
        throw InvalidInput("HamiltonianSystem: dimension must be >= 1");
    }
}

HamiltonianSystem HamiltonianSystem::harmonic_oscillator(double omega) {
    if (!(omega > 0.0)) {
        throw InvalidInput("harmonic_oscillator: omega must be positive");
    }
    return HamiltonianSystem(
        1,
        [omega](std::span<const double> q, std::span<const double> p) {
            return 0.5 * (p[0] * p[0] + omega * omega * q[0] * q[0]);
        },
        [omega](std::span<const double> q, std::span<const double> p) {
            return Gradient{{omega * omega * q[0]}, {p[0]}};
        },
        "harmonic-oscillator");
}

HamiltonianSystem HamiltonianSystem::free_particle() {
    return HamiltonianSystem(
        1,
        [](std::span<const double>, std::span<const double> p) {
            return 0.5 * p[0] * p[0];
        },
        [](std::span<const double>, std::span<const double> p) {
            return Gradient{{0.0}, {p[0]}};
        },
        "free-particle");
}

HamiltonianSystem HamiltonianSystem::quartic_oscillator() {
    return HamiltonianSystem(
        1,
        [](std::span<const double> q, std::span<const double> p) {
            const double q2 = q[0] * q[0];
            return 0.5 * p[0] * p[0] + 0.25 * q2 * q2;
        },
        [](std::span<const double> q, std::span<const double> p) {
            return Gradient{{q[0] * q[0] * q[0]}, {p[0]}};
        },
        "quartic-oscillator");
}

void HamiltonianSystem::check_dim(const PhaseState &x) const {
    if (x.q.size() != n_ || x.p.size() != n_) {
        throw InvalidInput("HamiltonianSystem '" + label_ +
                           "': state dimension " + std::to_string(x.q.size()) +
                           " does not match system dimension " +
                           std::to_string(n_));
    }
}

double HamiltonianSystem::energy(const PhaseState &x) const {
    check_dim(x);
    return energy_(x.q, x.p);
}

Gradient HamiltonianSystem::gradient(const PhaseState &x) const {
    check_dim(x);
    return gradient_(x.q, x.p);
}

double max_gradient_error(const HamiltonianSystem &sys, std::mt19937_64 &rng,
                          std::size_t probes, double scale, double step) {
    std::uniform_real_distribution<double> coord(-scale, scale);
    const std::size_t n = sys.dim();
    double worst = 0.0;
    for (std::size_t k = 0; k < probes; ++k) {
        PhaseState x;
        x.q.resize(n);
        x.p.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            x.q[i] = coord(rng);
            x.p[i] = coord(rng);
        }
        const Gradient g = sys.gradient(x);
        auto check = [&](std::vector<double> &v, std::size_t i, double analytic) {
            const double saved = v[i];
            const double h = step * std::max(1.0, std::abs(saved));
            v[i] = saved + h;
            const double up = sys.energy(x);
            v[i] = saved - h;
            const double down = sys.energy(x);
            v[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - analytic) /
                                        std::max(1.0, std::abs(analytic)));
        };
        for (std::size_t i = 0; i < n; ++i) {
            check(x.q, i, g.dq[i]);
            check(x.p, i, g.dp[i]);
        }
    }
    return worst;
}

double ExtendedSystem::eval(const ExtendedPhaseState &y) const {
    return inner_.energy(y.base) + y.S;
}

ExtendedPhaseState extend_state(const HamiltonianSystem &sys,
                                const PhaseState &x, double t0) {
    if (!std::isfinite(t0)) {
        throw InvalidInput("extend_state: non-finite t0");
    }
    return ExtendedPhaseState{x, t0, -sys.energy(x)};
}

double eval_extended_hamiltonian(const ExtendedSystem &ext,
                                 const ExtendedPhaseState &y) {
    return ext.eval(y);
}

namespace coordinate {
PhaseFunction q(std::size_t i) {
    return [i](const ExtendedPhaseState &y) { return y.base.q.at(i); };
}
PhaseFunction p(std::size_t i) {
    return [i](const ExtendedPhaseState &y) { return y.base.p.at(i); };
}
PhaseFunction T() {
    return [](const ExtendedPhaseState &y) { return y.T; };
}
PhaseFunction S() {
    return [](const ExtendedPhaseState &y) { return y.S; };
}
} // namespace coordinate

double poisson_bracket(const PhaseFunction &f, const PhaseFunction &g,
                       const ExtendedPhaseState &y, double rel_step) {
    const std::size_t n = y.dim();
    ExtendedPhaseState probe = y;

    // Pointers to the n+1 (q_i, p_i) coordinate pairs of `probe`.
    std::vector<std::pair<double *, double *>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        pairs.emplace_back(&probe.base.q[i], &probe.base.p[i]);
    }
    pairs.emplace_back(&probe.T, &probe.S);

    auto partial = [&](double *coord, const PhaseFunction &fn) {
        const double saved = *coord;
        const double h = rel_step * std::max(1.0, std::abs(saved));
        *coord = saved + h;
        const double up = fn(probe);
        *coord = saved - h;
        const double down = fn(probe);
        *coord = saved;
        const double d = (up - down) / (2.0 * h);
        if (!std::isfinite(d)) {
            throw NumericalFailure("poisson_bracket: non-finite derivative");
        }
        return d;
    };

    double sum = 0.0;
    for (auto [qi, pi] : pairs) {
        sum += partial(qi, f) * partial(pi, g) - partial(pi, f) * partial(qi, g);
    }
    return sum;
}

OriginalTrajectory integrate_original(const HamiltonianSystem &sys,
                                      const PhaseState &x0, double t_end,
                                      double dt, double t0,
                                      const IntegratorOptions &opts) {
    const std::size_t n = sys.dim();
    if (x0.dim() != n) {
        throw InvalidInput("integrate_original: dimension mismatch");
    }
    const std::size_t steps = step_count(t_end, dt, "integrate_original");
    const double h = t_end / static_cast<double>(steps);

    VectorField field = [&](const Flat &z, Flat &dz) {
        const std::span<const double> q(z.data(), n);
        const std::span<const double> p(z.data() + n, n);
        const PhaseState x{{q.begin(), q.end()}, {p.begin(), p.end()}};
        const Gradient g = sys.gradient(x);
        for (std::size_t i = 0; i < n; ++i) {
            dz[i] = g.dp[i];
            dz[n + i] = -g.dq[i];
        }
    };

    OriginalTrajectory traj;
    traj.integrator = "implicit-midpoint";
    traj.step = h;
    traj.param.reserve(steps + 1);
    traj.states.reserve(steps + 1);

    Flat z(2 * n), z1(2 * n);
    std::copy(x0.q.begin(), x0.q.end(), z.begin());
    std::copy(x0.p.begin(), x0.p.end(), z.begin() + static_cast<std::ptrdiff_t>(n));
    traj.param.push_back(t0);
    traj.states.push_back(x0);
    for (std::size_t k = 1; k <= steps; ++k) {
        midpoint_step(field, z, h, z1, opts, k);
        z.swap(z1);
        traj.param.push_back(t0 + static_cast<double>(k) * h);
        traj.states.push_back(unflatten(z, n));
    }
    return traj;
}

ExtendedTrajectory integrate_extended(const ExtendedSystem &ext,
                                      const ExtendedPhaseState &y0,
                                      double theta_end, double dtheta,
                                      const IntegratorOptions &opts) {
    const HamiltonianSystem &sys = ext.inner();
    const std::size_t n = sys.dim();
    if (y0.dim() != n) {
        throw InvalidInput("integrate_extended: dimension mismatch");
    }
    const std::size_t steps = step_count(theta_end, dtheta, "integrate_extended");
    const double h = theta_end / static_cast<double>(steps);

    // dT/dtheta = dH_ex/dS = 1; dS/dtheta = -dH_ex/dT = 0 (autonomous H).
    VectorField field = [&](const Flat &z, Flat &dz) {
        const std::span<const double> q(z.data(), n);
        const std::span<const double> p(z.data() + n, n);
        const PhaseState x{{q.begin(), q.end()}, {p.begin(), p.end()}};
        const Gradient g = sys.gradient(x);
        for (std::size_t i = 0; i < n; ++i) {
            dz[i] = g.dp[i];
            dz[n + i] = -g.dq[i];
        }
        dz[2 * n] = 1.0;
        dz[2 * n + 1] = 0.0;
    };

    ExtendedTrajectory traj;
    traj.integrator = "implicit-midpoint";
    traj.step = h;
    traj.param.reserve(steps + 1);
    traj.states.reserve(steps + 1);

    Flat z(2 * n + 2), z1(2 * n + 2);
    std::copy(y0.base.q.begin(), y0.base.q.end(), z.begin());
    std::copy(y0.base.p.begin(), y0.base.p.end(),
              z.begin() + static_cast<std::ptrdiff_t>(n));
    z[2 * n] = y0.T;
    z[2 * n + 1] = y0.S;
    traj.param.push_back(0.0);
    traj.states.push_back(y0);
    for (std::size_t k = 1; k <= steps; ++k) {
        midpoint_step(field, z, h, z1, opts, k);
        z.swap(z1);
        traj.param.push_back(static_cast<double>(k) * h);
        traj.states.push_back(ExtendedPhaseState{unflatten(z, n), z[2 * n],
                                                 z[2 * n + 1]});
    }
    return traj;
}

EquivalenceReport check_equivalence(const HamiltonianSystem &sys,
                                    const OriginalTrajectory &orig,
                                    const ExtendedTrajectory &ext) {
    if (orig.size() != ext.size() || orig.size() == 0 ||
        orig.param.size() != orig.size() || ext.param.size() != ext.size()) {
        throw InvalidInput("check_equivalence: trajectories have different "
                           "sample counts");
    }
    const double t0 = orig.param.front();
    const double theta0 = ext.param.front();
    for (std::size_t k = 0; k < orig.size(); ++k) {
        const double dt_k = orig.param[k] - t0;
        const double dth_k = ext.param[k] - theta0;
        if (std::abs(dt_k - dth_k) > 1e-12 * std::max(1.0, std::abs(dt_k))) {
            throw InvalidInput("check_equivalence: parameter grids differ at "
                               "sample " + std::to_string(k));
        }
    }

    EquivalenceReport report;
    report.samples = orig.size();
    report.time_offset = ext.states.front().T - t0;
    report.offset_flagged = std::abs(report.time_offset) > 1e-12;
    for (std::size_t k = 0; k < orig.size(); ++k) {
        const PhaseState &a = orig.states[k];
        const ExtendedPhaseState &b = ext.states[k];
        if (a.dim() != b.dim()) {
            throw InvalidInput("check_equivalence: state dimension mismatch");
        }
        double dev2 = 0.0;
        for (std::size_t i = 0; i < a.dim(); ++i) {
            dev2 += (a.q[i] - b.base.q[i]) * (a.q[i] - b.base.q[i]);
            dev2 += (a.p[i] - b.base.p[i]) * (a.p[i] - b.base.p[i]);
        }
        report.max_state_deviation =
            std::max(report.max_state_deviation, std::sqrt(dev2));
        report.max_time_deviation = std::max(
            report.max_time_deviation, std::abs(b.T - orig.param[k]));
        report.max_constraint_violation =
            std::max(report.max_constraint_violation,
                     std::abs(b.S + sys.energy(b.base)));
    }
    return report;
}

void write_csv(std::ostream &out, const OriginalTrajectory &traj) {
    const std::size_t n = traj.states.empty() ? 1 : traj.states.front().dim();
    out << "param";
    for (std::size_t i = 1; i <= n; ++i) out << ",q" << i;
    for (std::size_t i = 1; i <= n; ++i) out << ",p" << i;
    out << '\n';
    for (std::size_t k = 0; k < traj.size(); ++k) {
        write_number(out, traj.param[k]);
        for (double v : traj.states[k].q) { out << ','; write_number(out, v); }
        for (double v : traj.states[k].p) { out << ','; write_number(out, v); }
        out << '\n';
    }
}

void write_csv(std::ostream &out, const ExtendedTrajectory &traj) {
    const std::size_t n = traj.states.empty() ? 1 : traj.states.front().dim();
    out << "param";
    for (std::size_t i = 1; i <= n; ++i) out << ",q" << i;
    for (std::size_t i = 1; i <= n; ++i) out << ",p" << i;
    out << ",T,S\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto &s = traj.states[k];
        write_number(out, traj.param[k]);
        for (double v : s.base.q) { out << ','; write_number(out, v); }
        for (double v : s.base.p) { out << ','; write_number(out, v); }
        out << ','; write_number(out, s.T);
        out << ','; write_number(out, s.S);
        out << '\n';
    }
}

} // namespace eptime::classical
