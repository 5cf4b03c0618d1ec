// Test-only oracles, independent of the library code paths they check:
//  - characteristic-polynomial roots through a companion matrix
//  - a faithful matrix representation of Lambda(R^d) (x) C_1 ("Grassmann
//    embedding") with a scaling-and-squaring exponential
//  - direct sums of symplectic spaces and frames
#pragma once

#include "etaform/etaform.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace etaform::test {

// Characteristic polynomial coefficients by Faddeev-LeVerrier, roots through
// the companion matrix and the general complex eigensolver.
inline std::vector<double> charpoly_roots_hermitian(const CMatrix& m) {
    const Eigen::Index n = m.rows();
    std::vector<Complex> coeff(static_cast<std::size_t>(n) + 1);  // c[k] multiplies lambda^k
    coeff[static_cast<std::size_t>(n)] = 1.0;
    CMatrix a = m;
    Complex c = -a.trace();
    coeff[static_cast<std::size_t>(n - 1)] = c;
    for (Eigen::Index k = 2; k <= n; ++k) {
        a = m * (a + c * CMatrix::Identity(n, n));
        c = -a.trace() / static_cast<double>(k);
        coeff[static_cast<std::size_t>(n - k)] = c;
    }
    CMatrix companion = CMatrix::Zero(n, n);
    for (Eigen::Index i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) companion(i, n - 1) = -coeff[static_cast<std::size_t>(i)];
    Eigen::ComplexEigenSolver<CMatrix> solver(companion);
    std::vector<double> roots(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) roots[static_cast<std::size_t>(i)] = solver.eigenvalues()(i).real();
    std::sort(roots.begin(), roots.end());
    return roots;
}

// ---------------------------------------------------------------------------
// Grassmann embedding: Lambda(R^d) (x) C_1 (x) End(C^n) acts faithfully on
// Lambda(R^d) (x) C^2 (x) C^n with
//   db_mu -> (e_mu ^) (x) 1,   sigma -> Gamma (x) pauli_x,
// Gamma the form parity. Extracting the (mask, parity) blocks against the
// vacuum column recovers the coefficients.

class GrassmannRep {
  public:
    GrassmannRep(int dim, int n) : dim_(dim), n_(n), forms_(1 << dim), big_(forms_ * 2 * n) {}

    Eigen::Index size() const { return big_; }

    Eigen::Index slot(unsigned fmask, int parity, Eigen::Index k) const {
        return (static_cast<Eigen::Index>(fmask) * 2 + parity) * n_ + k;
    }

    CMatrix represent(const CliffordFormMatrix& x) const {
        CMatrix big = CMatrix::Zero(big_, big_);
        for (const auto& [key, m] : x.blocks()) {
            const unsigned mask = static_cast<unsigned>(key) >> 1;
            const int parity = key & 1;
            add_block(big, mask, parity, m);
        }
        return big;
    }

    CMatrix represent_plain(const CMatrix& m) const {
        CMatrix big = CMatrix::Zero(big_, big_);
        add_block(big, 0, 0, m);
        return big;
    }

    CliffordFormMatrix extract(const CMatrix& big) const {
        CliffordFormMatrix out(dim_, static_cast<int>(n_));
        for (unsigned mask = 0; mask < static_cast<unsigned>(forms_); ++mask) {
            for (int parity = 0; parity < 2; ++parity) {
                CMatrix m(n_, n_);
                for (Eigen::Index r = 0; r < n_; ++r) {
                    for (Eigen::Index c = 0; c < n_; ++c) {
                        m(r, c) = big(slot(mask, parity, r), slot(0, 0, c));
                    }
                }
                if (m.norm() > 0) out.add_block(mask, parity, m);
            }
        }
        return out;
    }

  private:
    // action of the basis element (mask, parity) on the form/Clifford factors:
    // target (g, b) and sign for each source (f, a).
    void add_block(CMatrix& big, unsigned mask, int parity, const CMatrix& m) const {
        for (unsigned f = 0; f < static_cast<unsigned>(forms_); ++f) {
            for (int a = 0; a < 2; ++a) {
                int sign = 1;
                unsigned g = f;
                int b = a;
                if (parity == 1) {
                    // sigma -> Gamma (x) pauli_x applied first
                    if (std::popcount(f) % 2 == 1) sign = -sign;
                    b = 1 - a;
                }
                // then the exterior products, highest symbol innermost
                bool dead = false;
                for (int bit = dim_ - 1; bit >= 0; --bit) {
                    if (!(mask & (1u << bit))) continue;
                    if (g & (1u << bit)) {
                        dead = true;
                        break;
                    }
                    const int below = std::popcount(g & ((1u << bit) - 1));
                    if (below % 2 == 1) sign = -sign;
                    g |= (1u << bit);
                }
                if (dead) continue;
                for (Eigen::Index r = 0; r < n_; ++r) {
                    for (Eigen::Index c = 0; c < n_; ++c) {
                        big(slot(g, b, r), slot(f, a, c)) += static_cast<double>(sign) * m(r, c);
                    }
                }
            }
        }
    }

    int dim_;
    Eigen::Index n_;
    Eigen::Index forms_;
    Eigen::Index big_;
};

// Brute-force e^{-(H+N)} through the embedding and a dense matrix exponential.
inline CliffordFormMatrix duhamel_oracle(const CMatrix& h, const CliffordFormMatrix& n) {
    GrassmannRep rep(n.dim(), static_cast<int>(h.rows()));
    const CMatrix big = rep.represent_plain(h) + rep.represent(n);
    const CMatrix heat = (-big).exp();
    return rep.extract(heat);
}

// ---------------------------------------------------------------------------
// Direct sums.

struct DirectSum {
    SymplecticSpace space;
    CMatrix embed1, embed2;  // isometries V_i -> V with orthogonal ranges
};

inline DirectSum direct_sum(const SymplecticSpace& s1, const SymplecticSpace& s2) {
    DirectSum out;
    const int l = s1.l + s2.l;
    out.space = standard_space(l);
    out.embed1 = CMatrix::Zero(2 * l, 2 * s1.l);
    out.embed2 = CMatrix::Zero(2 * l, 2 * s2.l);
    for (int k = 0; k < s1.l; ++k) {
        out.embed1(k, k) = 1.0;                        // V1+ -> first plus slots
        out.embed1(l + k, s1.l + k) = 1.0;             // V1- -> first minus slots
    }
    for (int k = 0; k < s2.l; ++k) {
        out.embed2(s1.l + k, k) = 1.0;                 // V2+ -> remaining plus slots
        out.embed2(l + s1.l + k, s2.l + k) = 1.0;      // V2- -> remaining minus slots
    }
    return out;
}

inline LagrangianFrame direct_sum_frame(const DirectSum& ds, const LagrangianFrame& f1,
                                        const LagrangianFrame& f2) {
    CMatrix f(ds.space.dim(), f1.F.cols() + f2.F.cols());
    f << ds.embed1 * f1.F, ds.embed2 * f2.F;
    return LagrangianFrame{f};
}

// Random hermitian / anti-hermitian / unitary matrices from a stream.
inline CMatrix random_hermitian(Rng& rng, int n, double scale = 1.0) {
    CMatrix m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = scale * rng.cnormal();
    }
    return 0.5 * (m + m.adjoint().eval());
}

inline CMatrix random_antihermitian(Rng& rng, int n, double scale = 1.0) {
    return Complex(0, 1) * random_hermitian(rng, n, scale);
}

inline CMatrix random_matrix(Rng& rng, int n, double scale = 1.0) {
    CMatrix m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = scale * rng.cnormal();
    }
    return m;
}

}  // namespace etaform::test
