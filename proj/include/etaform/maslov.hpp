// The Maslov triple index: the quadratic form Q(x0) = Omega(x1, x2) on L0
// (x0 = x1 + x2, x_i in L_i), its signature, the induced splitting
// L0 = L0+ (+) L0-, the normalization homotopy towards an involution, and
// l = 1 circle/winding bookkeeping.
#pragma once

#include "etaform/symplectic.hpp"

namespace etaform {

struct TripleIndex {
    int n = 0;         // positive eigenvalues of Q
    int m = 0;         // negative eigenvalues
    int tau0 = 0;      // n - m
    CMatrix q_matrix;  // Q in the L0 frame, hermitian l x l
};

// Q(x, y) = Omega(P x, y) with P the projection onto L1 along L2 applied to
// x in L0 and the complement supplying the L2 part. In the frame F0 the
// matrix is X2^dagger I X1 with X1 = P F0, X2 = F0 - X1.
inline TripleIndex triple_form(const SymplecticSpace& space, const LagrangianFrame& l0,
                               const LagrangianFrame& l1, const LagrangianFrame& l2,
                               double min_gap = -1.0) {
    if (min_gap < 0.0) min_gap = tolerances().transversality;
    if (transversality_gap(l0, l1) < min_gap || transversality_gap(l1, l2) < min_gap ||
        transversality_gap(l2, l0) < min_gap) {
        throw DegenerateError("triple_form: triple is not pairwise transverse");
    }
    const CMatrix p = projection_along(space, l2, l1);  // kernel L2, range L1
    const CMatrix x1 = p * l0.F;
    const CMatrix x2 = l0.F - x1;
    CMatrix q = x2.adjoint() * (space.I * x1);
    q = 0.5 * (q + q.adjoint().eval());
    const Signature sig = signature(q, tolerances().signature_rel * std::max(1.0, frob(q)));
    return TripleIndex{sig.positive, sig.negative, sig.tau(), q};
}

inline int maslov_index(const SymplecticSpace& space, const LagrangianFrame& l0,
                        const LagrangianFrame& l1, const LagrangianFrame& l2) {
    return triple_form(space, l0, l1, l2).tau0;
}

struct SplitFrames {
    CMatrix Fplus;   // 2l x n frame of L0+
    CMatrix Fminus;  // 2l x m frame of L0-
};

inline SplitFrames split_l0(const SymplecticSpace& space, const LagrangianFrame& l0,
                            const LagrangianFrame& l1, const LagrangianFrame& l2) {
    const TripleIndex idx = triple_form(space, l0, l1, l2);
    const HermitianEig eig = hermitian_eigs(idx.q_matrix);
    // Ascending order: the first m columns span L0-, the rest L0+.
    return SplitFrames{l0.F * eig.vectors.rightCols(idx.n), l0.F * eig.vectors.leftCols(idx.m)};
}

// ---------------------------------------------------------------------------
// Normalization homotopy. L1, L2 are written as graphs over IL0 with
// symmetric endomorphisms A_i = -B_i of L0; the linear stage
//   A_i(t) = (1-t) (A_i - A_{3-i})/2 + t A_i
// keeps A_1 - A_2 constant (hence L1, L2 transverse throughout) and ends at
// A_1 = -A_2 = A; the radial stage moves A to A/|A|, so A^2 = 1.

struct HomotopyStep {
    double t = 0.0;
    CMatrix a1, a2;
    int maslov = 0;
    double min_gap = 0.0;
};

struct NormalizedTriple {
    std::vector<HomotopyStep> trace;
    CMatrix a;  // final symmetric involution
};

inline NormalizedTriple normalize_triple(const SymplecticSpace& space, const LagrangianFrame& l0,
                                         const LagrangianFrame& l1, const LagrangianFrame& l2,
                                         int steps = 16) {
    if (steps < 1) throw ContractViolationError("normalize_triple: steps must be >= 1");
    const CMatrix a1_init = -graph_over_il0(space, l0, l1);
    const CMatrix a2_init = -graph_over_il0(space, l0, l2);

    NormalizedTriple out;
    const int reference = maslov_index(space, l0, l1, l2);

    // s is the combined path parameter: [0,1] is the linear stage, [1,2] the
    // radial one.
    auto evaluate = [&](double s, const CMatrix& a1, const CMatrix& a2) {
        const LagrangianFrame f1 = lagrangian_from_il0_graph(space, l0, (-a1).eval());
        const LagrangianFrame f2 = lagrangian_from_il0_graph(space, l0, (-a2).eval());
        const double gap = std::min({transversality_gap(l0, f1), transversality_gap(l0, f2),
                                     transversality_gap(f1, f2)});
        const int idx = maslov_index(space, l0, f1, f2);
        if (idx != reference) {
            throw DegenerateError("normalize_triple: index jumped along the homotopy");
        }
        out.trace.push_back(HomotopyStep{s, a1, a2, idx, gap});
    };

    const CMatrix half_diff = 0.5 * (a1_init - a2_init);
    for (int k = 0; k <= steps; ++k) {
        const double t = 1.0 - static_cast<double>(k) / steps;
        evaluate(1.0 - t, ((1.0 - t) * half_diff + t * a1_init).eval(),
                 (-(1.0 - t) * half_diff + t * a2_init).eval());
    }

    // Radial stage: A -> A/|A| through (1-r) A + r sign(A).
    const CMatrix a0 = half_diff;
    const HermitianEig eig = hermitian_eigs(a0);
    CMatrix sign_a = CMatrix::Zero(space.l, space.l);
    for (int k = 0; k < space.l; ++k) {
        const double v = eig.values(k);
        if (std::abs(v) < 1e-12) {
            throw DegenerateError("normalize_triple: A_1 - A_2 is not invertible");
        }
        sign_a += (v > 0 ? 1.0 : -1.0) * eig.vectors.col(k) * eig.vectors.col(k).adjoint();
    }
    for (int k = 1; k <= steps; ++k) {
        const double r = static_cast<double>(k) / steps;
        const CMatrix a = (1.0 - r) * a0 + r * sign_a;
        evaluate(1.0 + r, a, (-a).eval());
    }
    out.a = sign_a;
    return out;
}

// ---------------------------------------------------------------------------
// l = 1: Lagrangians are C(e^{i theta}, 1), parametrized by the circle.

inline double circle_parameter(const SymplecticSpace& space, const LagrangianFrame& frame) {
    if (space.l != 1) throw ContractViolationError("circle_parameter: requires l = 1");
    const Complex phi = graph_unitary(space, frame).phi(0, 0);
    double a = -std::arg(phi);
    if (a < 0) a += 2.0 * kPi;
    if (a >= 2.0 * kPi) a -= 2.0 * kPi;
    return a;
}

// Winding of a closed discrete loop of l = 1 Lagrangians. Adjacent parameter
// steps must stay below pi/2 so unwrapping is unambiguous.
inline int winding_number(const SymplecticSpace& space, const std::vector<LagrangianFrame>& loop) {
    if (space.l != 1) throw ContractViolationError("winding_number: requires l = 1");
    if (loop.size() < 2) return 0;
    double total = 0.0;
    double prev = circle_parameter(space, loop.front());
    for (std::size_t k = 1; k <= loop.size(); ++k) {
        const double cur = circle_parameter(space, loop[k % loop.size()]);
        double d = cur - prev;
        while (d > kPi) d -= 2.0 * kPi;
        while (d < -kPi) d += 2.0 * kPi;
        if (std::abs(d) >= kPi / 2) {
            throw AmbiguousError("winding_number: adjacent step exceeds pi/2");
        }
        total += d;
        prev = cur;
    }
    const double w = total / (2.0 * kPi);
    const int rounded = static_cast<int>(std::lround(w));
    if (std::abs(w - rounded) > 1e-6) {
        throw AmbiguousError("winding_number: loop does not close to an integer");
    }
    return rounded;
}

// +1 on the component with cyclic order phi0 < phi1 < phi2, -1 on the other.
// Under the conventions fixed here the component class equals -sign(tau0).
inline int component_class(const SymplecticSpace& space, const LagrangianFrame& l0,
                           const LagrangianFrame& l1, const LagrangianFrame& l2) {
    if (space.l != 1) throw ContractViolationError("component_class: requires l = 1");
    const double a0 = circle_parameter(space, l0);
    const double a1 = circle_parameter(space, l1);
    const double a2 = circle_parameter(space, l2);
    auto gap = [](double from, double to) {
        double d = to - from;
        while (d <= 0) d += 2.0 * kPi;
        while (d > 2.0 * kPi) d -= 2.0 * kPi;
        return d;
    };
    const double g1 = gap(a0, a1);
    const double g2 = gap(a0, a2);
    if (std::abs(g1) < 1e-12 || std::abs(g2) < 1e-12 || std::abs(g1 - g2) < 1e-12) {
        throw DegenerateError("component_class: coincident circle parameters");
    }
    return g1 < g2 ? 1 : -1;
}

}  // namespace etaform
