// Dense complex linear algebra: hermitian eigendecomposition, the principal
// unitary logarithm, and signatures of hermitian forms.
#pragma once

#include "etaform/common.hpp"

#include <Eigen/Eigenvalues>

namespace etaform {

struct HermitianEig {
    RVector values;   // ascending
    CMatrix vectors;  // orthonormal columns
};

inline double frob(const CMatrix& m) { return m.norm(); }

// Eigendecomposition of a hermitian matrix. Rejects inputs whose
// anti-hermitian part exceeds the hermiticity tolerance.
inline HermitianEig hermitian_eigs(const CMatrix& m) {
    const double scale = std::max(1.0, frob(m));
    if (frob(m - m.adjoint()) > tolerances().hermiticity * scale) {
        throw ContractViolationError("hermitian_eigs: input is not hermitian within tolerance");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(0.5 * (m + m.adjoint()));
    if (solver.info() != Eigen::Success) {
        throw ContractViolationError("hermitian_eigs: eigensolver failed to converge");
    }
    return HermitianEig{solver.eigenvalues(), solver.eigenvectors()};
}

// exp(A) for anti-hermitian A, via the hermitian eigendecomposition of iA.
inline CMatrix expm_antihermitian(const CMatrix& a) {
    const HermitianEig eig = hermitian_eigs(Complex(0, 1) * a);
    CVector phases(eig.values.size());
    for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
        phases(k) = std::exp(Complex(0, -eig.values(k)));
    }
    return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

// Principal logarithm of a unitary matrix: anti-hermitian with eigenphases in
// (-pi, pi). Throws BranchCutError when an eigenphase sits within the branch
// margin of pi; the caller is expected to shrink its chart.
inline CMatrix unitary_log(const CMatrix& u, double branch_margin = -1.0) {
    if (branch_margin < 0.0) branch_margin = tolerances().branch_cut_margin;
    const Eigen::Index n = u.rows();
    const double udev = frob(u.adjoint() * u - CMatrix::Identity(n, n));
    if (udev > tolerances().unitary) {
        throw ContractViolationError("unitary_log: input is not unitary within tolerance");
    }
    // A unitary matrix is normal, so its Schur form is diagonal up to
    // rounding and the Schur basis is an orthonormal eigenbasis.
    Eigen::ComplexSchur<CMatrix> schur(u);
    if (schur.info() != Eigen::Success) {
        throw ContractViolationError("unitary_log: Schur decomposition failed");
    }
    CVector logs(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double theta = std::arg(schur.matrixT()(k, k));
        if (kPi - std::abs(theta) < branch_margin) {
            throw BranchCutError("unitary_log: eigenphase at the branch cut");
        }
        logs(k) = Complex(0.0, theta);
    }
    CMatrix a = schur.matrixU() * logs.asDiagonal() * schur.matrixU().adjoint();
    return 0.5 * (a - a.adjoint().eval());
}

struct Signature {
    int positive = 0;
    int negative = 0;
    int tau() const { return positive - negative; }
};

// Counts of eigenvalues above/below +-tol. Any eigenvalue inside the band is
// a degenerate configuration upstream.
inline Signature signature(const CMatrix& h, double tol) {
    const HermitianEig eig = hermitian_eigs(h);
    Signature sig;
    for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
        const double v = eig.values(k);
        if (v > tol) {
            ++sig.positive;
        } else if (v < -tol) {
            ++sig.negative;
        } else {
            throw DegenerateError("signature: eigenvalue inside the null band");
        }
    }
    return sig;
}

// Thin orthonormal basis for the column span.
inline CMatrix orthonormalize(const CMatrix& f) {
    Eigen::HouseholderQR<CMatrix> qr(f);
    CMatrix q = qr.householderQ() * CMatrix::Identity(f.rows(), f.cols());
    return q;
}

}  // namespace etaform
