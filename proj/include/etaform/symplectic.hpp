// Hermitean symplectic linear algebra.
//
// V is a complex Hilbert space with complex structure I (I^2 = -1, I* = -I,
// tr I = 0) and form Omega(x,y) = (Ix, y). The inner product is linear in the
// first argument and conjugate-linear in the second: (u,v) = v^dagger u.
// A Lagrangian subspace satisfies L perp IL and L (+) IL = V; it is stored as
// an orthonormal 2l x l frame. Every Lagrangian is the graph {v + phi v} of a
// unitary phi: V+ -> V- between the (+i)/(-i) eigenspaces of I, expressed in
// the fixed orthonormal frames Vplus / Vminus chosen once per space.
#pragma once

#include "etaform/numerics.hpp"

#include <array>

namespace etaform {

struct SymplecticSpace {
    int l = 0;       // half dimension, dim V = 2l
    CMatrix I;       // complex structure
    CMatrix Vplus;   // 2l x l frame of the +i eigenspace
    CMatrix Vminus;  // 2l x l frame of the -i eigenspace

    int dim() const { return 2 * l; }
};

struct LagrangianFrame {
    CMatrix F;  // 2l x l, orthonormal columns

    int l() const { return static_cast<int>(F.cols()); }
};

struct GraphUnitary {
    CMatrix phi;  // l x l unitary, L = {v + phi v : v in V+}
};

// Omega(x, y) = (Ix, y) = y^dagger I x.
inline Complex omega(const SymplecticSpace& space, const CVector& x, const CVector& y) {
    return y.dot(space.I * x);  // Eigen's dot conjugates its *own* argument
}

inline SymplecticSpace standard_space(int l) {
    if (l < 1) throw ContractViolationError("standard_space: l must be >= 1");
    SymplecticSpace s;
    s.l = l;
    s.I = CMatrix::Zero(2 * l, 2 * l);
    for (int k = 0; k < l; ++k) {
        s.I(k, k) = Complex(0, 1);
        s.I(l + k, l + k) = Complex(0, -1);
    }
    s.Vplus = CMatrix::Zero(2 * l, l);
    s.Vminus = CMatrix::Zero(2 * l, l);
    for (int k = 0; k < l; ++k) {
        s.Vplus(k, k) = 1.0;
        s.Vminus(l + k, k) = 1.0;
    }
    return s;
}

// Rebuilds the V+- frames from an externally supplied complex structure.
inline SymplecticSpace space_from_structure(const CMatrix& I) {
    const Eigen::Index n = I.rows();
    if (n % 2 != 0) throw ContractViolationError("space_from_structure: odd dimension");
    const int l = static_cast<int>(n / 2);
    const double scale = std::max(1.0, frob(I));
    if (frob(I + I.adjoint()) > 1e-10 * scale || frob(I * I + CMatrix::Identity(n, n)) > 1e-10 * scale ||
        std::abs(I.trace()) > 1e-10 * scale) {
        throw ContractViolationError("space_from_structure: I must satisfy I*=-I, I^2=-1, tr I=0");
    }
    // -iI is hermitian with eigenvalues +-1; the +1 eigenspace is V+.
    const HermitianEig eig = hermitian_eigs(Complex(0, -1) * I);
    SymplecticSpace s;
    s.l = l;
    s.I = I;
    s.Vminus = eig.vectors.leftCols(l);   // eigenvalue -1
    s.Vplus = eig.vectors.rightCols(l);   // eigenvalue +1
    return s;
}

inline double lagrangian_residual(const SymplecticSpace& space, const CMatrix& f) {
    return frob(f.adjoint() * (space.I * f));
}

inline bool is_lagrangian(const SymplecticSpace& space, const LagrangianFrame& frame, double tol,
                          double* residual = nullptr) {
    const double r = lagrangian_residual(space, frame.F);
    if (residual) *residual = r;
    return r <= tol;
}

// ||F F* - G G*||_F: basis-independent subspace comparison.
inline double subspace_distance(const LagrangianFrame& a, const LagrangianFrame& b) {
    return frob(a.F * a.F.adjoint() - b.F * b.F.adjoint());
}

// Smallest singular value of [F0 | F1]; zero iff the spans intersect.
inline double transversality_gap(const LagrangianFrame& l0, const LagrangianFrame& l1) {
    CMatrix joint(l0.F.rows(), l0.F.cols() + l1.F.cols());
    joint << l0.F, l1.F;
    Eigen::JacobiSVD<CMatrix> svd(joint);
    return svd.singularValues().minCoeff();
}

inline LagrangianFrame apply_structure(const SymplecticSpace& space, const LagrangianFrame& frame) {
    return LagrangianFrame{space.I * frame.F};
}

inline GraphUnitary graph_unitary(const SymplecticSpace& space, const LagrangianFrame& frame) {
    const CMatrix fp = space.Vplus.adjoint() * frame.F;
    const CMatrix fm = space.Vminus.adjoint() * frame.F;
    // fp is invertible for every Lagrangian (L meets V- trivially).
    CMatrix phi = fm * fp.partialPivLu().solve(CMatrix::Identity(space.l, space.l));
    // Project onto the unitary group to absorb rounding.
    Eigen::JacobiSVD<CMatrix> svd(phi, Eigen::ComputeFullU | Eigen::ComputeFullV);
    phi = svd.matrixU() * svd.matrixV().adjoint();
    return GraphUnitary{phi};
}

inline LagrangianFrame lagrangian_from_graph(const SymplecticSpace& space, const GraphUnitary& g) {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    return LagrangianFrame{inv_sqrt2 * (space.Vplus + space.Vminus * g.phi)};
}

// Unitary commuting with I mapping L_from onto L_to, smooth in the inputs and
// equal to 1 when the subspaces coincide: identity on V+, phi_to phi_from* on V-.
inline CMatrix transport_unitary(const SymplecticSpace& space, const LagrangianFrame& from,
                                 const LagrangianFrame& to) {
    const CMatrix u_minus = graph_unitary(space, to).phi * graph_unitary(space, from).phi.adjoint();
    return space.Vplus * space.Vplus.adjoint() + space.Vminus * u_minus * space.Vminus.adjoint();
}

// Projection onto Lp with kernel L (both Lagrangian, transverse).
inline CMatrix projection_along(const SymplecticSpace& space, const LagrangianFrame& l,
                                const LagrangianFrame& lp) {
    if (transversality_gap(l, lp) < tolerances().transversality) {
        throw DegenerateError("projection_along: subspaces are not transverse");
    }
    const Eigen::Index n = space.dim();
    CMatrix basis(n, n);
    basis << lp.F, l.F;
    CMatrix rhs(n, n);
    rhs << lp.F, CMatrix::Zero(n, space.l);
    return rhs * basis.partialPivLu().solve(CMatrix::Identity(n, n));
}

// Q_{L'}(x,y) = Omega(P_{L'} x, y) - (1/2) Omega(x, y), returned as the
// hermitian operator I(P - 1/2) so that Q(x,y) = y^dagger Q x.
inline CMatrix q_form(const SymplecticSpace& space, const LagrangianFrame& l,
                      const LagrangianFrame& lp) {
    const CMatrix p = projection_along(space, l, lp);
    return space.I * (p - 0.5 * CMatrix::Identity(space.dim(), space.dim()));
}

// Inverse of q_form: P' = 1/2 - I Q, and L' is the range of P'.
inline LagrangianFrame lagrangian_from_qform(const SymplecticSpace& space, const LagrangianFrame& l,
                                             const CMatrix& q) {
    const Eigen::Index n = space.dim();
    const CMatrix p = 0.5 * CMatrix::Identity(n, n) - space.I * q;
    if (frob(p * p - p) > 1e-8 * std::max(1.0, frob(p))) {
        throw DegenerateError("lagrangian_from_qform: recovered operator is not idempotent");
    }
    Eigen::JacobiSVD<CMatrix> svd(p, Eigen::ComputeThinU);
    int rank = 0;
    for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
        if (svd.singularValues()(k) > 0.5) ++rank;
    }
    if (rank != space.l) {
        throw DegenerateError("lagrangian_from_qform: recovered projection has wrong rank");
    }
    LagrangianFrame lp{svd.matrixU().leftCols(space.l)};
    if (!is_lagrangian(space, lp, 1e-7)) {
        throw DegenerateError("lagrangian_from_qform: recovered subspace is not Lagrangian");
    }
    return lp;
}

// Affine path in the space of Lagrangians transverse to L, through the affine
// structure on the quadratic forms: Q_r = (1-r) Q0 + r Q1.
inline LagrangianFrame affine_path(const SymplecticSpace& space, const LagrangianFrame& l,
                                   const LagrangianFrame& lp0, const LagrangianFrame& lp1,
                                   double r) {
    const CMatrix q0 = q_form(space, l, lp0);
    const CMatrix q1 = q_form(space, l, lp1);
    return lagrangian_from_qform(space, l, ((1.0 - r) * q0 + r * q1).eval());
}

// L2 transverse to L0 written as {Bx + x : x in IL0}. In the frames
// (F0, I F0) the map I: L0 -> IL0 is the identity matrix, so the returned
// l x l matrix represents both B and the symmetric form BI on L0.
inline CMatrix graph_over_il0(const SymplecticSpace& space, const LagrangianFrame& l0,
                              const LagrangianFrame& l2) {
    if (transversality_gap(l0, l2) < tolerances().transversality) {
        throw DegenerateError("graph_over_il0: L2 meets L0");
    }
    const CMatrix g0 = space.I * l0.F;  // frame of IL0
    const CMatrix a = l0.F.adjoint() * l2.F;  // L0 components of the L2 frame
    const CMatrix c = g0.adjoint() * l2.F;    // IL0 components
    return a * c.partialPivLu().solve(CMatrix::Identity(space.l, space.l));
}

// Rebuilds the Lagrangian {Bx + x : x in IL0} from the frame representation
// produced by graph_over_il0.
inline LagrangianFrame lagrangian_from_il0_graph(const SymplecticSpace& space,
                                                 const LagrangianFrame& l0, const CMatrix& b) {
    const CMatrix g0 = space.I * l0.F;
    return LagrangianFrame{orthonormalize(l0.F * b + g0)};
}

inline LagrangianFrame random_lagrangian(const SymplecticSpace& space, Rng& rng) {
    CMatrix g(space.l, space.l);
    for (int i = 0; i < space.l; ++i) {
        for (int j = 0; j < space.l; ++j) g(i, j) = rng.cnormal();
    }
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ() * CMatrix::Identity(space.l, space.l);
    // Fix the QR phase ambiguity so the draw is determined by the stream.
    const CMatrix r = q.adjoint() * g;
    for (int k = 0; k < space.l; ++k) {
        const Complex d = r(k, k);
        if (std::abs(d) > 0) q.col(k) *= d / std::abs(d);
    }
    return lagrangian_from_graph(space, GraphUnitary{q});
}

inline LagrangianFrame random_lagrangian(const SymplecticSpace& space, std::uint64_t seed) {
    Rng rng(seed);
    return random_lagrangian(space, rng);
}

inline std::array<LagrangianFrame, 3> random_transverse_triple(const SymplecticSpace& space,
                                                               std::uint64_t seed,
                                                               double min_gap = 0.1) {
    Rng rng(seed);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::array<LagrangianFrame, 3> triple{random_lagrangian(space, rng),
                                              random_lagrangian(space, rng),
                                              random_lagrangian(space, rng)};
        if (transversality_gap(triple[0], triple[1]) >= min_gap &&
            transversality_gap(triple[1], triple[2]) >= min_gap &&
            transversality_gap(triple[2], triple[0]) >= min_gap) {
            return triple;
        }
    }
    throw DegenerateError("random_transverse_triple: retry budget exhausted");
}

}  // namespace etaform
