#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "eptime/errors.hpp"
#include "eptime/time_observable.hpp"
#include "oracles.hpp"

using namespace eptime;
using namespace eptime::quantum;
using namespace eptime::constraint;
using namespace eptime::timeobs;

namespace {

constexpr int kM = 64;
constexpr double kDt = 0.25;
const double kStep = 2.0 * oracle::pi / (kM * kDt);

struct Setup {
    ExtendedSpace ext;
    PhysicalSubspace sub;
};

Setup qubit(Sign s = Sign::plus, int m = kM, double t0 = 0.0) {
    const double step = 2.0 * oracle::pi / (m * kDt);
    CMatrix h = CMatrix::Zero(2, 2);
    h(1, 1) = 8 * step;
    auto ext = build_extended(build_system_space(h), build_clock(m, kDt, t0, s));
    auto sub = solve_constraint_spectral(ext);
    return {std::move(ext), std::move(sub)};
}

Setup single_level(int m) {
    auto ext = build_extended(build_system_space(CMatrix::Zero(1, 1)), build_clock(m, 1.0));
    auto sub = solve_constraint_spectral(ext);
    return {std::move(ext), std::move(sub)};
}

// E_m = B^dagger (I (x) |T_m><T_m|) B from explicit dense matrices.
CMatrix effect_oracle(const CMatrix &basis, int ns, int m, int bin) {
    CMatrix proj = CMatrix::Zero(m, m);
    proj(bin, bin) = 1.0;
    return basis.adjoint() * oracle::kron(CMatrix::Identity(ns, ns), proj) * basis;
}

double spectral_norm(const CMatrix &a) {
    return Eigen::JacobiSVD<CMatrix>(a).singularValues()(0);
}

} // namespace

TEST(Povm, SingleLevelEffectsAreScalars) {
    const auto s = single_level(8);
    const auto povm = build_time_povm(s.sub, s.ext.clock());
    ASSERT_EQ(povm.dim(), 1);
    for (const auto &e : povm.effects()) EXPECT_NEAR(std::abs(e(0, 0) - 1.0 / 8.0), 0.0, 1e-15);
    EXPECT_NEAR(pm_violation_report(povm).orthogonality_defect, 1.0 / 64.0, 1e-15);
    EXPECT_NEAR(pm_violation_bruteforce(povm).orthogonality_defect, 1.0 / 64.0, 1e-15);
}

TEST(Povm, EffectsMatchDenseConstruction) {
    for (Sign sg : {Sign::plus, Sign::minus}) {
        const auto s = qubit(sg);
        const auto povm = build_time_povm(s.sub, s.ext.clock());
        for (int m = 0; m < kM; ++m) {
            const CMatrix expected = effect_oracle(s.sub.basis, 2, kM, m);
            EXPECT_LT((povm.effect(m) - expected).cwiseAbs().maxCoeff(), 1e-15);
            // Distinct system levels are orthogonal, so each effect is I/M.
            EXPECT_LT((povm.effect(m) - CMatrix::Identity(2, 2) / kM).cwiseAbs().maxCoeff(), 1e-15);
        }
    }
}

TEST(Povm, AxiomsOnRandomSystems) {
    std::mt19937_64 rng(30);
    for (int trial = 0; trial < 8; ++trial) {
        const CMatrix h = oracle::random_hermitian(rng, 3);
        const auto ext = build_extended(build_system_space(h), build_clock(16, 0.4));
        const auto sub = solve_constraint_spectral(ext, 2.5 * ext.clock().frequency_step());
        if (sub.empty()) continue;
        const auto povm = build_time_povm(sub, ext.clock());
        CMatrix sum = CMatrix::Zero(sub.dim(), sub.dim());
        double min_eig = 1.0;
        for (int m = 0; m < 16; ++m) {
            sum += povm.effect(m);
            min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<CMatrix>(povm.effect(m)).eigenvalues().minCoeff());
        }
        EXPECT_GE(min_eig, -1e-12);
        EXPECT_LT((sum - CMatrix::Identity(sub.dim(), sub.dim())).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_NEAR(povm.min_eigenvalue(), min_eig, 1e-12);
    }
}

TEST(Povm, EmptySubspaceThrows) {
    CMatrix h = CMatrix::Zero(2, 2);
    h(0, 0) = 0.5 * kStep;
    h(1, 1) = 3.5 * kStep;
    const auto ext = build_extended(build_system_space(h), build_clock(kM, kDt));
    const auto sub = solve_constraint_spectral(ext, 0.1 * kStep);
    ASSERT_TRUE(sub.empty());
    EXPECT_THROW(build_time_povm(sub, ext.clock()), NoPhysicalStates);
    EXPECT_THROW(gram_of_restricted_time_states(sub, ext.clock()), NoPhysicalStates);
}

TEST(Povm, RestrictedTimeIsFirstMoment) {
    const auto s = qubit(Sign::plus, kM, -3.0);
    const auto povm = build_time_povm(s.sub, s.ext.clock());
    const CMatrix t = s.sub.basis.adjoint() *
                      oracle::kron(CMatrix::Identity(2, 2), oracle::time_diag(kM, kDt, -3.0)) * s.sub.basis;
    EXPECT_LT((povm.restricted_time() - t).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(povm.density_effects()[3](0, 0).real(), 1.0 / (kM * kDt), 1e-14);
}

TEST(PmViolation, CommensurateQubitClosedForm) {
    const auto s = qubit();
    const auto povm = build_time_povm(s.sub, s.ext.clock());
    const auto fast = pm_violation_report(povm);
    // Oracle: dense products over every pair.
    double ortho = 0.0, idem = 0.0;
    for (int a = 0; a < kM; ++a) {
        const CMatrix ea = effect_oracle(s.sub.basis, 2, kM, a);
        idem = std::max(idem, spectral_norm(ea * ea - ea));
        for (int b = 0; b < kM; ++b) {
            if (a != b) ortho = std::max(ortho, spectral_norm(ea * effect_oracle(s.sub.basis, 2, kM, b)));
        }
    }
    EXPECT_NEAR(fast.orthogonality_defect, ortho, 1e-15);
    EXPECT_NEAR(fast.idempotency_defect, idem, 1e-15);
    EXPECT_NEAR(fast.orthogonality_defect, 1.0 / (kM * kM), 1e-15);
    EXPECT_GE(fast.orthogonality_defect, 1e-4);
    EXPECT_NEAR(fast.idempotency_defect, 1.0 / kM - 1.0 / (kM * kM), 1e-15);
}

TEST(PmViolation, FastRouteMatchesBruteForce) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 6; ++trial) {
        const auto ext = build_extended(build_system_space(oracle::random_hermitian(rng, 3)),
                                        build_clock(16, 0.4));
        const auto sub = solve_constraint_kernel(ext, 1.8 * ext.clock().frequency_step());
        if (sub.empty()) continue;
        const auto povm = build_time_povm(sub, ext.clock());
        const auto a = pm_violation_report(povm);
        const auto b = pm_violation_bruteforce(povm);
        EXPECT_NEAR(a.orthogonality_defect, b.orthogonality_defect, 1e-12);
        EXPECT_NEAR(a.idempotency_defect, b.idempotency_defect, 1e-12);
    }
}

TEST(PmViolation, UnrestrictedClockIsProjectorMeasure) {
    const auto clock = build_clock(kM, kDt);
    const auto povm = build_time_povm_from_basis(CMatrix::Identity(kM, kM), 1, clock);
    const auto r = pm_violation_report(povm);
    EXPECT_LT(r.orthogonality_defect, 1e-12);
    EXPECT_LT(r.idempotency_defect, 1e-12);
    const auto b = pm_violation_bruteforce(povm);
    EXPECT_LT(b.orthogonality_defect, 1e-12);
    EXPECT_LT(b.idempotency_defect, 1e-12);
}

TEST(Gram, PartialTraceOfPhysicalProjector) {
    const auto s = qubit();
    const CMatrix g = gram_of_restricted_time_states(s.sub, s.ext.clock());
    const CMatrix p = s.sub.basis * s.sub.basis.adjoint();
    CMatrix expected = CMatrix::Zero(kM, kM);
    for (int i = 0; i < 2; ++i) expected += p.block(i * kM, i * kM, kM, kM);
    EXPECT_LT((g - expected).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_GT(std::abs(g(0, 1)), 0.0);
    EXPECT_GT(std::abs(g(10, 11)), 1e-3);
}

TEST(Gram, SingleLevelAndControl) {
    const auto s = single_level(16);
    const CMatrix g = gram_of_restricted_time_states(s.sub, s.ext.clock());
    for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) EXPECT_NEAR(std::abs(g(a, b)), 1.0 / 16.0, 1e-15);

    // d = M: every clock mode of the single level is physical.
    const auto ext = build_extended(build_system_space(CMatrix::Zero(1, 1)), build_clock(16, 1.0));
    const auto full = solve_constraint_spectral(ext, 100.0);
    ASSERT_EQ(full.dim(), 16);
    const CMatrix gi = gram_of_restricted_time_states(full, ext.clock());
    EXPECT_LT((gi - CMatrix::Identity(16, 16)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(TimeDistribution, SinglePairIsUniform) {
    const auto s = qubit();
    const auto povm = build_time_povm(s.sub, s.ext.clock());
    CVector c(2);
    c << 0.0, 1.0;
    const RVector p = time_distribution(povm, make_physical_state(s.sub, c));
    for (int m = 0; m < kM; ++m) EXPECT_NEAR(p(m), 1.0 / kM, 1e-15);
}

TEST(TimeDistribution, NormalizedAndConsistentWithMoment) {
    const auto s = qubit(Sign::plus, kM, 1.0);
    const auto povm = build_time_povm(s.sub, s.ext.clock());
    std::mt19937_64 rng(32);
    for (int n = 0; n < 100; ++n) {
        const auto phys = make_physical_state(s.sub, oracle::random_vector(rng, 2));
        const RVector p = time_distribution(povm, phys);
        EXPECT_NEAR(p.sum(), 1.0, 1e-10);
        EXPECT_GE(p.minCoeff(), 0.0);
        const auto marg = oracle::marginal(phys.state.amplitudes, 2, kM);
        for (int m = 0; m < kM; ++m) EXPECT_NEAR(p(m), marg[m], 1e-15);
        const double moment = s.ext.clock().times().dot(p);
        EXPECT_NEAR(moment, phys.coeffs.dot(povm.restricted_time() * phys.coeffs).real(), 1e-10);
    }
}

TEST(EventProfile, TwoLevelFringe) {
    for (Sign sg : {Sign::plus, Sign::minus}) {
        const auto s = qubit(sg, kM, 0.5);
        const double phi = 1.1;
        CVector c(2);
        c << 1.0, std::polar(1.0, phi);
        const auto phys = make_physical_state(s.sub, c);
        const CVector plus = (CVector(s.ext.system().eigenvector(0)) + CVector(s.ext.system().eigenvector(1))) / std::sqrt(2.0);
        const RVector prof = event_time_profile(plus * plus.adjoint(), s.sub, phys);
        // Conditional system state at T is (e^{-i s E_0 T}|0> + e^{i phi} e^{-i s E_1 T}|1>)/sqrt(2M)
        // with s = sigma; project on |+>.
        const double sigma = sign_value(sg);
        const double gap = 8 * kStep;
        for (int m = 0; m < kM; ++m) {
            const double t = 0.5 + m * kDt;
            const double closed = (1.0 + std::cos(sigma * gap * t - phi)) / (2.0 * kM);
            EXPECT_NEAR(prof(m), closed, 1e-9) << m;
        }
    }
}

TEST(Conditional, SinglePairIsConstant) {
    const auto s = qubit();
    CVector c(2);
    c << 0.0, 1.0;
    const auto phys = make_physical_state(s.sub, c);
    for (int m = 0; m < kM; m += 7) {
        EXPECT_NEAR(oracle::overlap(conditional_state(s.sub, phys, m), s.ext.system().eigenvector(1)), 1.0, 1e-14);
    }
}

TEST(Conditional, OneBinStepIsSchrodingerEvolution) {
    std::mt19937_64 rng(33);
    for (Sign sg : {Sign::plus, Sign::minus}) {
        const auto s = qubit(sg);
        const CMatrix u = oracle::expm_minus_i(s.ext.system().hamiltonian(), sign_value(sg) * kDt);
        for (int n = 0; n < 20; ++n) {
            const auto phys = make_physical_state(s.sub, oracle::random_vector(rng, 2));
            for (int m = 0; m < kM; ++m) {
                const CVector a = conditional_state(s.sub, phys, m);
                const CVector b = conditional_state(s.sub, phys, (m + 1) % kM);
                EXPECT_GT(oracle::overlap(u * a, b), 1.0 - 1e-10);
            }
        }
    }
}

TEST(Conditional, ZeroBinAtZeroOrigin) {
    const auto s = qubit();
    CVector c(2);
    c << Complex(0.6, 0.1), Complex(-0.2, 0.7);
    const auto phys = make_physical_state(s.sub, c);
    const CVector expected = c(0) * s.ext.system().eigenvector(0) + c(1) * s.ext.system().eigenvector(1);
    EXPECT_GT(oracle::overlap(conditional_state(s.sub, phys, 0), expected), 1.0 - 1e-14);
}

TEST(Event, Examples) {
    const auto s = qubit();
    std::mt19937_64 rng(34);
    const auto phys = make_physical_state(s.sub, oracle::random_vector(rng, 2));
    std::vector<int> all(kM);
    for (int m = 0; m < kM; ++m) all[m] = m;
    EXPECT_NEAR(event_probability(EventOperator(CMatrix::Identity(2, 2), all, kM), s.sub, phys), 1.0, 1e-12);
    EXPECT_EQ(event_probability(EventOperator(CMatrix::Zero(2, 2), all, kM), s.sub, phys), 0.0);

    CVector c(2);
    c << 1.0, 0.0;
    const auto single = make_physical_state(s.sub, c);
    EXPECT_NEAR(event_probability(EventOperator(CMatrix::Identity(2, 2), {17}, kM), s.sub, single), 1.0 / kM, 1e-15);
}

TEST(Event, RejectsInvalidOperators) {
    CMatrix notproj = CMatrix::Identity(2, 2) * 0.5;
    EXPECT_THROW(EventOperator(notproj, {0}, 8), InvalidInput);
    EXPECT_THROW(EventOperator(CMatrix::Identity(2, 2), {8}, 8), InvalidInput);
    EXPECT_THROW(EventOperator(CMatrix::Identity(2, 2), {-1}, 8), InvalidInput);
    const EventOperator ev(CMatrix::Identity(2, 2), {3, 1, 3}, 8);
    EXPECT_EQ(ev.window(), (std::vector<int>{1, 3}));
}

TEST(Covariance, GenericStateShiftsByBins) {
    for (Sign sg : {Sign::plus, Sign::minus}) {
        const auto s = qubit(sg);
        const auto povm = build_time_povm(s.sub, s.ext.clock());
        const CVector g = gaussian_clock_state(s.ext.clock(), 6.0, 1.0, 2.0);
        const CVector sys = (CVector(s.ext.system().eigenvector(0)) + CVector(s.ext.system().eigenvector(1))) / std::sqrt(2.0);
        const auto psi = ExtendedState::product(sys, g);
        const auto r = covariance_report(s.ext, povm, s.sub, psi, 5 * kDt);
        EXPECT_LT(r.max_shift_deviation, 1e-8);
        EXPECT_FALSE(r.interpolated);
        EXPECT_EQ(r.shift, 5 * static_cast<int>(sg));

        // Oracle: evolve with the matrix exponential and roll the marginal.
        const CVector evolved = oracle::expm_minus_i(s.ext.hamiltonian(), 5 * kDt) * psi.amplitudes;
        const auto before = oracle::marginal(psi.amplitudes, 2, kM);
        const auto after = oracle::marginal(evolved, 2, kM);
        for (int m = 0; m < kM; ++m) {
            const int src = ((m - r.shift) % kM + kM) % kM;
            EXPECT_NEAR(after[m], before[src], 1e-8);
        }
    }
}

TEST(Covariance, PhysicalMarginalInvariantAndZeroShift) {
    const auto s = qubit();
    const auto povm = build_time_povm(s.sub, s.ext.clock());
    std::mt19937_64 rng(35);
    const auto phys = make_physical_state(s.sub, oracle::random_vector(rng, 2));
    for (int j : {0, 3, 17}) {
        const auto r = covariance_report(s.ext, povm, s.sub, phys.state, j * kDt);
        EXPECT_LT(r.max_shift_deviation, 1e-10);
        EXPECT_LT(r.max_physical_drift, 1e-10);
        EXPECT_NEAR(r.physical_weight, 1.0, 1e-12);
    }
    const auto psi = ExtendedState::make(oracle::random_vector(rng, 2 * kM));
    EXPECT_LT(covariance_report(s.ext, povm, s.sub, psi, 0.0).max_shift_deviation, 1e-15);
}

TEST(Covariance, FractionalThetaIsFlagged) {
    const auto s = qubit();
    const auto povm = build_time_povm(s.sub, s.ext.clock());
    std::mt19937_64 rng(36);
    const auto psi = ExtendedState::make(oracle::random_vector(rng, 2 * kM));
    const auto r = covariance_report(s.ext, povm, s.sub, psi, 2.5 * kDt);
    EXPECT_TRUE(r.interpolated);
    EXPECT_NEAR(r.bins, 2.5, 1e-12);
}

TEST(SignEquivalence, ConjugateEffectsAndEqualDistributions) {
    const auto a = qubit(Sign::plus);
    const auto b = qubit(Sign::minus);
    const auto pa = build_time_povm(a.sub, a.ext.clock());
    const auto pb = build_time_povm(b.sub, b.ext.clock());
    for (int m = 0; m < kM; ++m) {
        EXPECT_LT((pb.effect(m) - pa.effect(m).conjugate()).cwiseAbs().maxCoeff(), 1e-15);
    }
    std::mt19937_64 rng(37);
    std::normal_distribution<double> g;
    for (int n = 0; n < 20; ++n) {
        CVector c(2);
        c << g(rng), g(rng);
        const RVector da = time_distribution(pa, make_physical_state(a.sub, c));
        const RVector db = time_distribution(pb, make_physical_state(b.sub, c));
        EXPECT_LT((da - db).cwiseAbs().maxCoeff(), 1e-10);
    }
}
