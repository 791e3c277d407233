#pragma once

/**
 * @file
 * Extended classical Hamiltonian system.
 *
 * The original system lives on R^{2n} with canonical coordinates (q, p) and
 * an autonomous Hamiltonian H. The extended system adds the canonical pair
 * (T, S) and evolves in the parameter theta under H_ex = H + S; physical
 * motions are the ones on the constraint surface H_ex = 0, i.e. S = -H.
 * The scaling factor dt/dtheta is fixed to one.
 */

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace eptime::classical {

/// Point of the original phase space R^{2n}.
struct PhaseState {
    std::vector<double> q;
    std::vector<double> p;

    /// Validates equal lengths, n >= 1 and finiteness.
    static PhaseState make(std::vector<double> q, std::vector<double> p);

    std::size_t dim() const noexcept { return q.size(); }
};

/// Point of the extended phase space R^{2n+2}; T is q_{n+1}, S is p_{n+1}.
struct ExtendedPhaseState {
    PhaseState base;
    double T = 0.0;
    double S = 0.0;

    std::size_t dim() const noexcept { return base.dim(); }
};

struct Gradient {
    std::vector<double> dq;
    std::vector<double> dp;
};

using EnergyFn = std::function<double(std::span<const double> q,
                                      std::span<const double> p)>;
using GradientFn = std::function<Gradient(std::span<const double> q,
                                          std::span<const double> p)>;

/// Autonomous Hamiltonian with an analytic gradient.
class HamiltonianSystem {
  public:
    HamiltonianSystem(std::size_t n, EnergyFn energy, GradientFn gradient,
                      std::string label);

    static HamiltonianSystem harmonic_oscillator(double omega = 1.0);
    static HamiltonianSystem free_particle();
    /// H = p^2/2 + q^4/4.
    static HamiltonianSystem quartic_oscillator();

    std::size_t dim() const noexcept { return n_; }
    const std::string &label() const noexcept { return label_; }

    double energy(const PhaseState &x) const;
    Gradient gradient(const PhaseState &x) const;

  private:
    void check_dim(const PhaseState &x) const;

    std::size_t n_;
    EnergyFn energy_;
    GradientFn gradient_;
    std::string label_;
};

/// Largest relative deviation between the analytic gradient and central
/// differences of H at `probes` random points drawn from [-scale, scale].
double max_gradient_error(const HamiltonianSystem &sys, std::mt19937_64 &rng,
                          std::size_t probes = 50, double scale = 2.0,
                          double step = 1e-5);

/// H_ex = H + S with the scaling factor fixed to one.
class ExtendedSystem {
  public:
    explicit ExtendedSystem(HamiltonianSystem inner) : inner_(std::move(inner)) {}

    const HamiltonianSystem &inner() const noexcept { return inner_; }
    double eval(const ExtendedPhaseState &y) const;

  private:
    HamiltonianSystem inner_;
};

/// Lifts x onto the constraint surface: T = t0, S = -H(x).
ExtendedPhaseState extend_state(const HamiltonianSystem &sys,
                                const PhaseState &x, double t0);

double eval_extended_hamiltonian(const ExtendedSystem &ext,
                                 const ExtendedPhaseState &y);

// Poisson brackets ---------------------------------------------------------

using PhaseFunction = std::function<double(const ExtendedPhaseState &)>;

namespace coordinate {
PhaseFunction q(std::size_t i);
PhaseFunction p(std::size_t i);
PhaseFunction T();
PhaseFunction S();
} // namespace coordinate

/// {f, g} over all n+1 canonical pairs, by central differences with step
/// `rel_step * max(1, |coordinate|)`.
double poisson_bracket(const PhaseFunction &f, const PhaseFunction &g,
                       const ExtendedPhaseState &y, double rel_step = 1e-5);

// Integration ---------------------------------------------------------------

template <class State> struct Trajectory {
    std::vector<double> param;
    std::vector<State> states;
    std::string integrator;
    double step = 0.0;

    std::size_t size() const noexcept { return states.size(); }
};

using OriginalTrajectory = Trajectory<PhaseState>;
using ExtendedTrajectory = Trajectory<ExtendedPhaseState>;

struct IntegratorOptions {
    double tolerance = 1e-13;
    int max_iterations = 50;
};

/// Implicit-midpoint integration of Hamilton's equations in t, starting at
/// `t0`. The step actually used is t_end / ceil(t_end / dt).
OriginalTrajectory integrate_original(const HamiltonianSystem &sys,
                                      const PhaseState &x0, double t_end,
                                      double dt, double t0 = 0.0,
                                      const IntegratorOptions &opts = {});

/// Implicit-midpoint integration of the extended canonical equations in
/// theta, starting at theta = 0.
ExtendedTrajectory integrate_extended(const ExtendedSystem &ext,
                                      const ExtendedPhaseState &y0,
                                      double theta_end, double dtheta,
                                      const IntegratorOptions &opts = {});

struct EquivalenceReport {
    double max_state_deviation = 0.0;     ///< max |(q,p)_orig - (q,p)_ext|_2
    double max_time_deviation = 0.0;      ///< max |T(theta_k) - t_k|
    double max_constraint_violation = 0.0;///< max |S + H(q,p)|
    double time_offset = 0.0;             ///< T(0) - t(0)
    bool offset_flagged = false;
    std::size_t samples = 0;
};

EquivalenceReport check_equivalence(const HamiltonianSystem &sys,
                                    const OriginalTrajectory &orig,
                                    const ExtendedTrajectory &ext);

/// CSV with header `param,q1..qn,p1..pn[,T,S]`, 17 significant digits.
void write_csv(std::ostream &out, const OriginalTrajectory &traj);
void write_csv(std::ostream &out, const ExtendedTrajectory &traj);

} // namespace eptime::classical
