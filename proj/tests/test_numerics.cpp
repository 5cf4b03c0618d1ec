#include "etaform/numerics.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace etaform;

TEST_CASE("hermitian_eigs on diagonal input") {
    CMatrix m = CMatrix::Zero(3, 3);
    m(0, 0) = 3.0;
    m(1, 1) = 1.0;
    m(2, 2) = 2.0;
    const HermitianEig eig = hermitian_eigs(m);
    REQUIRE(eig.values(0) == Catch::Approx(1.0));
    REQUIRE(eig.values(1) == Catch::Approx(2.0));
    REQUIRE(eig.values(2) == Catch::Approx(3.0));
    // permutation eigenvectors
    for (int k = 0; k < 3; ++k) {
        CVector col = eig.vectors.col(k);
        int hits = 0;
        for (int r = 0; r < 3; ++r) {
            if (std::abs(col(r)) > 0.5) ++hits;
        }
        REQUIRE(hits == 1);
    }
}

TEST_CASE("hermitian_eigs on pauli-x") {
    CMatrix m(2, 2);
    m << 0, 1, 1, 0;
    const HermitianEig eig = hermitian_eigs(m);
    REQUIRE(eig.values(0) == Catch::Approx(-1.0));
    REQUIRE(eig.values(1) == Catch::Approx(1.0));
}

TEST_CASE("hermitian_eigs matches characteristic-polynomial roots") {
    Rng rng(7);
    const CMatrix m = test::random_hermitian(rng, 8);
    const HermitianEig eig = hermitian_eigs(m);
    const std::vector<double> roots = test::charpoly_roots_hermitian(m);
    for (int k = 0; k < 8; ++k) {
        REQUIRE(std::abs(eig.values(k) - roots[static_cast<std::size_t>(k)]) < 1e-9);
    }
}

TEST_CASE("hermitian_eigs invariants") {
    Rng rng(11);
    for (int n : {4, 16, 64}) {
        const CMatrix m = test::random_hermitian(rng, n);
        const HermitianEig eig = hermitian_eigs(m);
        REQUIRE(frob(eig.vectors.adjoint() * eig.vectors - CMatrix::Identity(n, n)) < 1e-10);
        const CMatrix recon =
            eig.vectors * eig.values.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
        REQUIRE(frob(recon - m) < 1e-10 * std::max(1.0, frob(m)));
        REQUIRE(std::abs(eig.values.sum() - m.trace().real()) < 1e-9 * std::max(1.0, frob(m)));
    }
}

TEST_CASE("hermitian_eigs rejects non-hermitian input") {
    CMatrix m(2, 2);
    m << 0, 1, 0, 0;
    REQUIRE_THROWS_AS(hermitian_eigs(m), ContractViolationError);
}

TEST_CASE("unitary_log of the identity") {
    const CMatrix a = unitary_log(CMatrix::Identity(4, 4));
    REQUIRE(frob(a) < 1e-12);
}

TEST_CASE("unitary_log of a scalar phase") {
    CMatrix u(1, 1);
    u(0, 0) = std::polar(1.0, kPi / 3.0);
    const CMatrix a = unitary_log(u);
    REQUIRE(std::abs(a(0, 0) - Complex(0, kPi / 3.0)) < 1e-13);
}

TEST_CASE("unitary_log round trip") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.bits() % 5);
        CMatrix a = test::random_antihermitian(rng, n);
        const double norm = a.operatorNorm();
        if (norm > 1.9) a *= 1.9 / norm;
        const CMatrix u = expm_antihermitian(a);
        const CMatrix back = unitary_log(u);
        REQUIRE(frob(back - a) < 1e-8);
        REQUIRE(frob(expm_antihermitian(back) - u) < 1e-8);
    }
}

TEST_CASE("unitary_log flags the branch cut") {
    CMatrix u = CMatrix::Identity(2, 2);
    u(0, 0) = -1.0;
    REQUIRE_THROWS_AS(unitary_log(u), BranchCutError);
}

TEST_CASE("signature of small forms") {
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    const Signature s = signature(m, 1e-8);
    REQUIRE(s.positive == 1);
    REQUIRE(s.negative == 1);
    REQUIRE(s.tau() == 0);

    CMatrix one(1, 1);
    one(0, 0) = 1.0;
    const Signature s1 = signature(one, 1e-8);
    REQUIRE(s1.positive == 1);
    REQUIRE(s1.negative == 0);

    CMatrix degen = CMatrix::Zero(2, 2);
    degen(0, 0) = 1.0;
    REQUIRE_THROWS_AS(signature(degen, 1e-8), DegenerateError);
}
