#include "etaform/spectral_eta.hpp"

#include "etaform/families.hpp"
#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace etaform;

namespace {

LagrangianFrame circle_lagrangian(const SymplecticSpace& space, double a) {
    return lagrangian_from_graph(space,
                                 GraphUnitary{(CMatrix(1, 1) << std::polar(1.0, -a)).finished()});
}

struct ModelPairs {
    SymplecticSpace space = standard_space(1);
    LagrangianFrame l0 = circle_lagrangian(space, 0.0);
    LagrangianFrame l1 = circle_lagrangian(space, kPi);
    LagrangianFrame l2 = circle_lagrangian(space, 1.5 * kPi);
};

}  // namespace

TEST_CASE("boundary phases of the symmetric pair") {
    Rng rng(50);
    for (int l : {1, 2, 3}) {
        const SymplecticSpace s = standard_space(l);
        const LagrangianFrame f = random_lagrangian(s, rng);
        const BoundaryPhases bp = boundary_phases(s, f, apply_structure(s, f));
        for (double theta : bp.thetas) {
            REQUIRE(theta == Catch::Approx(kPi / 2).margin(1e-12));
        }
    }
}

TEST_CASE("boundary phases of circle pairs") {
    const SymplecticSpace s = standard_space(1);
    Rng rng(51);
    for (int trial = 0; trial < 10; ++trial) {
        const double a = 2.0 * kPi * rng.uniform();
        double b = 2.0 * kPi * rng.uniform();
        if (std::abs(std::remainder(a - b, 2.0 * kPi)) < 0.05) b += 0.3;
        const BoundaryPhases bp =
            boundary_phases(s, circle_lagrangian(s, a), circle_lagrangian(s, b));
        double expected = std::fmod(a - b, 2.0 * kPi);
        if (expected < 0) expected += 2.0 * kPi;
        expected *= 0.5;
        REQUIRE(bp.thetas[0] == Catch::Approx(expected).margin(1e-12));
    }
    REQUIRE_THROWS_AS(
        boundary_phases(s, circle_lagrangian(s, 1.0), circle_lagrangian(s, 1.0 + 1e-12)),
        DegenerateError);
}

TEST_CASE("eta closed form on reference pairs") {
    const ModelPairs mp;
    REQUIRE(eta_closed_form(mp.space, mp.l0, mp.l1).value == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(eta_closed_form(mp.space, mp.l1, mp.l2).value == Catch::Approx(-0.5).margin(1e-12));
    // theta -> 0+ gives +1 per phase
    const double theta = 1e-3;
    const double eta =
        eta_closed_form(mp.space, circle_lagrangian(mp.space, 2.0 * theta), mp.l0).value;
    REQUIRE(eta == Catch::Approx(1.0 - 2.0 * theta / kPi).margin(1e-12));

    // |eta| < l for transverse pairs
    Rng rng(52);
    for (int l : {2, 4}) {
        const SymplecticSpace s = standard_space(l);
        for (int trial = 0; trial < 10; ++trial) {
            const LagrangianFrame a = random_lagrangian(s, rng);
            const LagrangianFrame b = random_lagrangian(s, rng);
            if (transversality_gap(a, b) < 1e-4) continue;
            REQUIRE(std::abs(eta_closed_form(s, a, b).value) < l);
            REQUIRE(eta_closed_form(s, a, b).value ==
                    Catch::Approx(-eta_closed_form(s, b, a).value).margin(1e-10));
        }
    }
}

TEST_CASE("eta is invariant under unitaries commuting with I") {
    Rng rng(53);
    const SymplecticSpace s = standard_space(3);
    const LagrangianFrame a = random_lagrangian(s, rng);
    const LagrangianFrame b = random_lagrangian(s, rng);
    const double eta = eta_closed_form(s, a, b).value;
    for (int trial = 0; trial < 5; ++trial) {
        const CMatrix kp = test::random_antihermitian(rng, 3);
        const CMatrix km = test::random_antihermitian(rng, 3);
        const CMatrix u = s.Vplus * expm_antihermitian(kp) * s.Vplus.adjoint() +
                          s.Vminus * expm_antihermitian(km) * s.Vminus.adjoint();
        const double moved =
            eta_closed_form(s, LagrangianFrame{u * a.F}, LagrangianFrame{u * b.F}).value;
        REQUIRE(moved == Catch::Approx(eta).margin(1e-10));
    }
}

TEST_CASE("hurwitz zeta reproduces the z = 0 line") {
    for (double a : {0.1, 0.33, 0.5, 0.77, 0.95}) {
        REQUIRE(hurwitz_zeta(0.0, a) == Catch::Approx(0.5 - a).margin(1e-13));
    }
    // spot check against the Riemann zeta at a = 1
    REQUIRE(hurwitz_zeta(2.0, 1.0) == Catch::Approx(kPi * kPi / 6.0).margin(1e-12));
}

TEST_CASE("zeta oracle agrees with the closed form at z = 0") {
    Rng rng(54);
    double max_err = 0.0;
    for (int trial = 0; trial < 60; ++trial) {
        const int l = 1 + static_cast<int>(rng.bits() % 4);
        const SymplecticSpace s = standard_space(l);
        const LagrangianFrame a = random_lagrangian(s, rng);
        const LagrangianFrame b = random_lagrangian(s, rng);
        if (transversality_gap(a, b) < 1e-3) continue;
        max_err = std::max(max_err, std::abs(eta_zeta_oracle(s, a, b, 0.0) -
                                             eta_closed_form(s, a, b).value));
    }
    REQUIRE(max_err < 1e-12);
}

TEST_CASE("zeta oracle at z = 2 matches direct summation") {
    const ModelPairs mp;
    const BoundaryPhases bp = boundary_phases(mp.space, mp.l1, mp.l2);
    double direct = 0.0;
    for (double theta : bp.thetas) {
        for (int k = 0; k <= 1000000; ++k) {
            const double lp = theta + k * kPi;
            const double lm = kPi - theta + k * kPi;
            direct += 1.0 / (lp * lp) - 1.0 / (lm * lm);
        }
    }
    REQUIRE(eta_zeta_oracle(mp.space, mp.l1, mp.l2, 2.0) == Catch::Approx(direct).margin(1e-8));
}

TEST_CASE("heat oracle reproduces the closed form") {
    const ModelPairs mp;
    REQUIRE(std::abs(eta_heat_oracle(mp.space, mp.l0, mp.l1)) < 1e-6);
    REQUIRE(eta_heat_oracle(mp.space, mp.l1, mp.l2) == Catch::Approx(-0.5).margin(1e-3));

    Rng rng(55);
    for (int trial = 0; trial < 6; ++trial) {
        const int l = 1 + static_cast<int>(rng.bits() % 2);
        const SymplecticSpace s = standard_space(l);
        const LagrangianFrame a = random_lagrangian(s, rng);
        const LagrangianFrame b = random_lagrangian(s, rng);
        if (transversality_gap(a, b) < 0.05) continue;
        REQUIRE(eta_heat_oracle(s, a, b) ==
                Catch::Approx(eta_closed_form(s, a, b).value).margin(1e-3));
    }
}

TEST_CASE("heat oracle converges in the lower cutoff at order >= 1") {
    const ModelPairs mp;
    const double exact = eta_closed_form(mp.space, mp.l1, mp.l2).value;
    auto error_at = [&](double s_min) {
        HeatOracleParams params;
        params.s_min = s_min;
        params.n_s = 400;
        return std::abs(eta_heat_oracle(mp.space, mp.l1, mp.l2, params) - exact);
    };
    const double e0 = error_at(0.4);
    const double e1 = error_at(0.2);
    const double e2 = error_at(0.1);
    REQUIRE(e1 < e0);
    REQUIRE(e2 < e1);
    REQUIRE(std::log2(e0 / e2) / 2.0 >= 1.0);
}

TEST_CASE("galerkin matrix of the zero potential is the exact lattice") {
    Rng rng(56);
    const SymplecticSpace s = standard_space(2);
    const LagrangianFrame a = random_lagrangian(s, rng);
    const LagrangianFrame b = random_lagrangian(s, rng);
    const int K = 8;
    const RVector eigs = galerkin_spectrum_oracle(
        s, a, b, [&](double) { return CMatrix::Zero(4, 4); }, K);
    const ReferenceBasis basis = build_reference_basis(s, a, b, K);
    std::vector<double> lattice = basis.lambda;
    std::sort(lattice.begin(), lattice.end());
    for (int i = 0; i < basis.size(); ++i) {
        REQUIRE(eigs(i) == Catch::Approx(lattice[static_cast<std::size_t>(i)]).margin(1e-12));
    }
}

TEST_CASE("conjugated operator is unitarily equivalent to the moved pair") {
    // Reference pair at b0, potential -chi0' I A0 - chi1' I A1 moving the
    // boundary conditions to a nearby pair: the low Galerkin spectrum must
    // match the analytic phases of the moved pair.
    const SymplecticSpace s = standard_space(1);
    const LagrangianFrame l0_ref = circle_lagrangian(s, 0.25);
    const LagrangianFrame l1_ref = circle_lagrangian(s, kPi - 0.35);
    const LagrangianFrame l0_b = circle_lagrangian(s, 0.55);
    const LagrangianFrame l1_b = circle_lagrangian(s, kPi - 0.05);
    const CMatrix a0 = unitary_log(transport_unitary(s, l0_b, l0_ref));
    const CMatrix a1 = unitary_log(transport_unitary(s, l1_b, l1_ref));
    const CutoffPair cut = cutoffs();
    auto potential = [&](double t) {
        return CMatrix(-cut.dchi0(t) * (s.I * a0) - cut.dchi1(t) * (s.I * a1));
    };
    const int K = 128;
    const RVector eigs = galerkin_spectrum_oracle(s, l0_ref, l1_ref, potential, K);

    const BoundaryPhases moved = boundary_phases(s, l0_b, l1_b);
    std::vector<double> expected;
    for (double theta : moved.thetas) {
        for (int k = -3; k <= 3; ++k) expected.push_back(theta + k * kPi);
    }
    std::sort(expected.begin(), expected.end(), [](double x, double y) {
        return std::abs(x) < std::abs(y);
    });
    std::vector<double> low(eigs.data(), eigs.data() + eigs.size());
    std::sort(low.begin(), low.end(), [](double x, double y) { return std::abs(x) < std::abs(y); });
    for (int i = 0; i < 5; ++i) {
        double best = 1e9;
        for (double e : expected) best = std::min(best, std::abs(e - low[static_cast<std::size_t>(i)]));
        REQUIRE(best < 1e-4);
    }
}

TEST_CASE("galerkin spectrum is stable between K = 128 and K = 256") {
    const SymplecticSpace s = standard_space(1);
    const LagrangianFrame l0_ref = circle_lagrangian(s, 0.0);
    const LagrangianFrame l1_ref = circle_lagrangian(s, kPi - 0.4);
    const CMatrix a1 = unitary_log(
        transport_unitary(s, circle_lagrangian(s, kPi + 0.3), l1_ref));
    const CutoffPair cut = cutoffs();
    auto potential = [&](double t) { return CMatrix(-cut.dchi1(t) * (s.I * a1)); };
    auto lowest = [&](int K) {
        const RVector eigs = galerkin_spectrum_oracle(s, l0_ref, l1_ref, potential, K);
        std::vector<double> v(eigs.data(), eigs.data() + eigs.size());
        std::sort(v.begin(), v.end(), [](double x, double y) { return std::abs(x) < std::abs(y); });
        v.resize(10);
        std::sort(v.begin(), v.end());
        return v;
    };
    const auto a = lowest(128);
    const auto b = lowest(256);
    for (int i = 0; i < 10; ++i) {
        REQUIRE(a[static_cast<std::size_t>(i)] ==
                Catch::Approx(b[static_cast<std::size_t>(i)]).margin(1e-4));
    }
}

TEST_CASE("eta cocycle sum equals the Maslov index") {
    const ModelPairs mp;
    const double sum = eta_cocycle_sum(mp.space, mp.l0, mp.l1, mp.l2);
    REQUIRE(sum == Catch::Approx(-1.0).margin(1e-12));
    REQUIRE(maslov_index(mp.space, mp.l0, mp.l1, mp.l2) == -1);

    for (int l : {1, 2, 3, 4}) {
        const SymplecticSpace s = standard_space(l);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto t = random_transverse_triple(s, 1200 + seed, 0.15);
            const double sum_t = eta_cocycle_sum(s, t[0], t[1], t[2]);
            const int tau = maslov_index(s, t[0], t[1], t[2]);
            REQUIRE(sum_t == Catch::Approx(tau).margin(1e-8));
        }
    }
}

TEST_CASE("eta cocycle sum adds over direct sums") {
    const SymplecticSpace s1 = standard_space(1);
    const SymplecticSpace s2 = standard_space(2);
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto ta = random_transverse_triple(s1, 1300 + seed, 0.2);
        const auto tb = random_transverse_triple(s2, 1400 + seed, 0.2);
        const test::DirectSum ds = test::direct_sum(s1, s2);
        const double sum = eta_cocycle_sum(ds.space, test::direct_sum_frame(ds, ta[0], tb[0]),
                                           test::direct_sum_frame(ds, ta[1], tb[1]),
                                           test::direct_sum_frame(ds, ta[2], tb[2]));
        REQUIRE(sum == Catch::Approx(eta_cocycle_sum(s1, ta[0], ta[1], ta[2]) +
                                     eta_cocycle_sum(s2, tb[0], tb[1], tb[2]))
                           .margin(1e-9));
    }
}
