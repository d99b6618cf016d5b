#include <gtest/gtest.h>

#include <cmath>

#include "ep/cat_code.hpp"
#include "ep/random.hpp"
#include "ep/spin_register.hpp"
#include "oracles.hpp"

using namespace ep;

TEST(Cats, OverlapMatchesCoherentStateFormula) {
    for (double a : {1.0, 1.5, 2.0, 2.5}) {
        const int nm = CavitySpec::min_n_max(a);
        Vec c0 = cat_amplitudes(a, 1, nm);
        Vec c1 = cat_amplitudes(cplx(0.0, a), 1, nm);
        EXPECT_NEAR(std::abs(c0.dot(c1)), oracle::cat_overlap(a), 1e-8) << a;
        EXPECT_LT(std::abs(c0.dot(c1)), 3.0 * std::exp(-a * a)) << a;
    }
}

TEST(Cats, EvenCatHasOnlyEvenPhotonNumbers) {
    Vec c = cat_amplitudes(2.0, 1, 40);
    for (Eigen::Index n = 1; n < c.size(); n += 2) {
        EXPECT_EQ(c[n], cplx(0.0));
    }
    Vec odd = cat_amplitudes(2.0, -1, 40);
    for (Eigen::Index n = 0; n < odd.size(); n += 2) {
        EXPECT_EQ(odd[n], cplx(0.0));
    }
}

TEST(Cats, MeanPhotonsOfCoherentState) {
    EXPECT_NEAR(mean_photons(coherent_amplitudes(cplx(1.2, 0.5), 40)), 1.69, 1e-10);
}

TEST(Cats, TruncationGuard) {
    EXPECT_THROW(coherent(2.0, 10), TruncationError);
    CavitySpec s{2.0, 12, 0.0};
    EXPECT_THROW(s.validate(), TruncationError);
    EXPECT_NO_THROW(CavitySpec::with_alpha(2.0).validate());
}

TEST(Cats, LoweringFlipsParity) {
    const int nm = 30;
    Vec c = cat_amplitudes(2.0, 1, nm);
    Vec l = lowering(nm) * c;
    Mat odd = parity_projector(nm, -1);
    EXPECT_NEAR((odd * l).norm() / l.norm(), 1.0, 1e-12);
}

TEST(Dispersive, RotatesCavityConditionedOnQubitZero) {
    const int nm = 30;
    DispersiveCoupling dc{2.0, 4.0};
    const double t = 0.8;
    const double chi = dc.g * dc.g / dc.delta;
    for (int q : {0, 1}) {
        Vec qb = Vec::Unit(2, q);
        StateVector in(oracle::kron(qb, coherent_amplitudes(1.5, nm)), SubsystemLayout({2, nm + 1}));
        StateVector out = dispersive_rotation(in, dc, t);
        cplx beta = q == 0 ? 1.5 * std::exp(cplx(0, -chi * t)) : cplx(1.5);
        StateVector ref(oracle::kron(qb, coherent_amplitudes(beta, nm)), SubsystemLayout({2, nm + 1}));
        EXPECT_NEAR(fidelity(out, ref), 1.0, 1e-10) << q;
    }
}

TEST(Encode, UnitaryAndRoundTrip) {
    CavitySpec cav = CavitySpec::with_alpha(2.0);
    Mat u = encode_unitary(cav.alpha, cav.n_max);
    EXPECT_LT(unitarity_defect(u), 1e-12);
    const Eigen::Index nc = cav.dim();
    Vec in = Vec::Zero(4 * nc);
    in[0] = 0.6;
    in[3 * nc] = cplx(0.0, 0.8);
    StateVector s(in, encode_layout(cav.n_max));
    StateVector enc = encode(s, cav);
    EXPECT_NEAR(std::abs(enc.amplitudes().segment(0, nc).dot(cat_amplitudes(2.0, 1, cav.n_max))), 0.6, 1e-12);
    StateVector dec = decode(enc, cav);
    EXPECT_GE(fidelity(dec, s), 1.0 - 1e-8);
    Vec bad = Vec::Zero(4 * nc);
    bad[1] = 1.0;
    EXPECT_THROW(encode(StateVector(bad, encode_layout(cav.n_max)), cav), std::invalid_argument);
}

TEST(Register, ExtendChainKeepsLogicalState) {
    CavitySpec cav = CavitySpec::with_alpha(2.0);
    StateVector bell = build_bell(1e8).state;
    CavityRegister reg = CavityRegister::chain(cav.alpha, 1, cav.n_max, 0.6, cplx(0.0, 0.8));
    for (size_t k = 2; k <= 3; ++k) {
        reg = extend_chain(reg, bell, cav);
        CavityRegister ref = CavityRegister::chain(cav.alpha, k, cav.n_max, 0.6, cplx(0.0, 0.8));
        EXPECT_GE(logical_fidelity(reg, ref), 1.0 - 1e-10) << k;
    }
}

TEST(Register, StateVectorRoundTrip) {
    CavitySpec cav = CavitySpec::with_alpha(1.0);
    CavityRegister reg = CavityRegister::chain(cav.alpha, 2, cav.n_max, 1.0, cplx(0.0, 1.0));
    StateVector sv = reg.to_state_vector();
    EXPECT_EQ(sv.layout().size(), 3u);
    CavityRegister back = CavityRegister::from_state_vector(sv);
    EXPECT_NEAR(logical_fidelity(back, reg), 1.0, 1e-12);
}

TEST(Register, ProtectDecodeRoundTrip) {
    CavitySpec cav = CavitySpec::with_alpha(2.0);
    for (size_t n : {2u, 4u, 6u}) {
        StateVector g = ghz_state(n);
        CavityRegister reg = protect_register(g, cav);
        EXPECT_EQ(reg.n_cavities(), n - 1);
        DecodeResult d = decode_register(reg, cav);
        EXPECT_NEAR(d.success, 1.0, 1e-12);
        EXPECT_GE(fidelity(d.dots, g), 1.0 - 1e-12);
    }
}

TEST(Parity, MeasurementOnRegisterAndStateAgree) {
    CavitySpec cav = CavitySpec::with_alpha(2.0);
    CavityRegister reg = CavityRegister::chain(cav.alpha, 2, cav.n_max);
    reg.apply_lowering(1);
    reg.normalize();
    ParityResult pr = parity_measure(reg, 1, 0.3);
    EXPECT_EQ(pr.outcome, -1);
    EXPECT_NEAR(pr.probability, 1.0, 1e-12);
    StateParityResult sp = parity_measure(reg.to_state_vector(), 2, 0.3);
    EXPECT_EQ(sp.outcome, -1);
}

TEST(Trajectories, NoLossKeepsBothArmsPerfect) {
    CavitySpec cav = CavitySpec::with_alpha(2.0, 0.0);
    CavityRegister ref = CavityRegister::chain(cav.alpha, 3, cav.n_max);
    std::vector<CavitySpec> specs(3, cav);
    for (bool corr : {true, false}) {
        TrajectoryRecord r = loss_trajectory(ref, specs, {0.2, 0.05, corr}, 5);
        EXPECT_NEAR(logical_fidelity(r.final_state, ref), 1.0, 1e-8);
    }
}

TEST(Trajectories, ParityOutcomesTrackJumpsExactly) {
    CavitySpec cav = CavitySpec::with_alpha(2.0, 1.0);
    CavityRegister ref = CavityRegister::chain(cav.alpha, 3, cav.n_max);
    std::vector<CavitySpec> specs(3, cav);
    size_t rounds = 0;
    for (uint64_t i = 0; i < 200; ++i) {
        for (bool corr : {true, false}) {
            TrajectoryRecord r = loss_trajectory(ref, specs, {0.2, 0.05, corr}, derive_seed(99, i));
            for (size_t j = 0; j < 3; ++j) {
                ASSERT_EQ(r.syndromes[j].size(), 4u);
                for (size_t k = 0; k < 4; ++k) {
                    const int expect = r.jumps_per_round[j][k] % 2 == 0 ? 1 : -1;
                    EXPECT_EQ(r.syndromes[j][k], expect);
                    if (corr) {
                        EXPECT_EQ(r.parity_outcomes[j][k], expect);
                    }
                    ++rounds;
                }
            }
        }
    }
    EXPECT_EQ(rounds, 200u * 2 * 3 * 4);
}

TEST(Trajectories, JumpCountsFollowPoissonLaw) {
    CavitySpec cav = CavitySpec::with_alpha(2.0, 1.0);
    std::vector<CavitySpec> specs{cav};
    CavityRegister reg = CavityRegister::product({coherent_amplitudes(2.0, cav.n_max)}, cav.n_max);
    const int m = 4000;
    double jumps = 0.0, photons = 0.0;
    for (int i = 0; i < m; ++i) {
        TrajectoryRecord r = loss_trajectory(reg, specs, {0.1, 0.0, true}, derive_seed(3, static_cast<uint64_t>(i)));
        jumps += static_cast<double>(r.jump_times[0].size());
        photons += r.final_state.mean_photons(0);
    }
    const double mean = oracle::expected_jumps(4.0, 0.1);
    EXPECT_NEAR(jumps / m, mean, 4.0 * std::sqrt(mean / m));
    EXPECT_NEAR(photons / m, 4.0 * std::exp(-0.1), 1e-6);
}

TEST(Trajectories, SameSeedSameRecord) {
    CavitySpec cav = CavitySpec::with_alpha(2.0, 1.0);
    CavityRegister ref = CavityRegister::chain(cav.alpha, 2, cav.n_max);
    std::vector<CavitySpec> specs(2, cav);
    TrajectoryRecord a = loss_trajectory(ref, specs, {0.2, 0.05, true}, 42);
    TrajectoryRecord b = loss_trajectory(ref, specs, {0.2, 0.05, true}, 42);
    EXPECT_EQ(a.jump_times, b.jump_times);
    EXPECT_EQ(a.parity_outcomes, b.parity_outcomes);
}

TEST(Repump, UnitaryMapsDecayedOddCatsBack) {
    const cplx alpha = 2.0;
    const int nm = CavitySpec::min_n_max(2.0);
    const double kt = 0.05;
    Mat u = repump_unitary(alpha, kt, nm);
    EXPECT_LT(unitarity_defect(u), 1e-12);
    const double s = std::exp(-kt / 2);
    Vec src = lowering(nm) * cat_amplitudes(alpha * s, 1, nm);
    Vec out = u * src.normalized();
    EXPECT_GT(std::norm(cat_amplitudes(alpha, 1, nm).dot(out)), 0.999);
}
