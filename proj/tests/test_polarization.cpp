#include <gtest/gtest.h>

#include <cmath>

#include "ep/polarization.hpp"

using namespace ep;

namespace {

SubsystemLayout rails(size_t n) { return SubsystemLayout(std::vector<int>(n, 2)); }

// a |10>^n + b |01>^n over 2n rails.
StateVector dual_rail_ghz(size_t n, cplx a, cplx b) {
    Vec v = Vec::Zero(static_cast<Eigen::Index>(size_t{1} << (2 * n)));
    size_t ia = 0, ib = 0;
    for (size_t i = 0; i < n; ++i) {
        ia = (ia << 2) | 2U;
        ib = (ib << 2) | 1U;
    }
    v[static_cast<Eigen::Index>(ia)] = a;
    v[static_cast<Eigen::Index>(ib)] = b;
    return StateVector::normalized(v, rails(2 * n));
}

}  // namespace

TEST(ConvertOne, BalancedPairGivesDiagonalPolarization) {
    ConversionResult r = convert_one(dual_rail_ghz(1, 1.0, 1.0), {});
    EXPECT_NEAR(std::abs(r.polarization[0]), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(std::abs(r.polarization[1]), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_EQ(r.herald, 1.0);
}

TEST(ConvertOne, SingleBranchAndHerald) {
    ConversionSpec spec{0.5, 0.8};
    ConversionResult r = convert_one(StateVector::from_index(rails(2), 2), spec);
    EXPECT_NEAR(std::abs(r.polarization[0]), 1.0, 1e-15);
    EXPECT_NEAR(r.herald, 0.4, 1e-15);
}

TEST(ConvertOne, RelativePhasePreserved) {
    ConversionResult r = convert_one(dual_rail_ghz(1, 1.0, -1.0), {});
    EXPECT_NEAR(std::abs(r.polarization[0] + r.polarization[1]), 0.0, 1e-15);
}

TEST(ConvertOne, RejectsLeakage) {
    EXPECT_THROW(convert_one(StateVector::from_index(rails(2), 3), {}), std::invalid_argument);
    EXPECT_THROW(convert_one(StateVector::from_index(rails(2), 1), {0.0, 1.0}), std::invalid_argument);
}

TEST(ConvertRegister, MatchesConvertOneForOnePhoton) {
    StateVector in = dual_rail_ghz(1, 0.6, cplx(0.0, 0.8));
    ConversionSpec spec{0.9, 0.7};
    ConversionResult a = convert_one(in, spec);
    ConversionResult b = convert_register(in, spec);
    EXPECT_NEAR(fidelity(a.polarization, b.polarization), 1.0, 1e-15);
    EXPECT_EQ(a.herald, b.herald);
}

TEST(ConvertRegister, ThreePhotonGhz) {
    ConversionResult r = convert_register(dual_rail_ghz(3, 1.0, 1.0), {});
    EXPECT_NEAR(fidelity(r.polarization, polarization_ghz(3)), 1.0, 1e-9);
}

TEST(ConvertRegister, HeraldForTwoPhotons) {
    ConversionResult r = convert_register(dual_rail_ghz(2, 1.0, 1.0), {0.5, 0.8});
    EXPECT_NEAR(r.herald, 0.16, 1e-15);
}

TEST(ConvertRegister, PhaseTransportProperty) {
    for (int k = 0; k < 12; ++k) {
        const double th = 0.13 * k;
        const cplx a = std::cos(th);
        const cplx b = std::sin(th) * std::exp(cplx(0.0, 0.7 * k));
        for (size_t n : {1u, 2u, 3u}) {
            ConversionResult r = convert_register(dual_rail_ghz(n, a, b), {});
            EXPECT_NEAR(std::abs(r.polarization[0] - a), 0.0, 1e-12);
            EXPECT_NEAR(std::abs(r.polarization[(size_t{1} << n) - 1] - b), 0.0, 1e-12);
        }
    }
}

TEST(ConvertRegister, HeraldMultiplicativity) {
    ConversionSpec spec{0.7, 0.9};
    const double one = convert_one(dual_rail_ghz(1, 1.0, 1.0), spec).herald;
    for (size_t n = 1; n <= 4; ++n) {
        EXPECT_EQ(convert_register(dual_rail_ghz(n, 1.0, 1.0), spec).herald, std::pow(one, static_cast<double>(n)));
    }
}

TEST(ConvertRegister, SchmidtSpectrumPreserved) {
    StateVector in = dual_rail_ghz(3, 0.6, 0.8);
    ConversionResult r = convert_register(in, {});
    for (size_t cut = 1; cut < 3; ++cut) {
        std::vector<size_t> pol, rail;
        for (size_t i = 0; i < cut; ++i) {
            pol.push_back(i);
            rail.push_back(2 * i);
            rail.push_back(2 * i + 1);
        }
        auto a = schmidt_spectrum(r.polarization, pol);
        auto b = schmidt_spectrum(in, rail);
        for (size_t i = 0; i < a.size(); ++i) {
            EXPECT_NEAR(a[i], b[i], 1e-9);
        }
    }
}

TEST(ConvertRegister, RejectsOddRailCount) {
    EXPECT_THROW(convert_register(StateVector::from_index(rails(3), 4), {}), DimensionError);
}
