// Matrices with coefficients in Lambda(R^d) (x) C_1, the graded algebra
// carrying superconnection curvature, together with the terminating Volterra
// expansion of exp(-(H+N)) evaluated through divided differences of exp.
//
// Basis elements are db_{i1}^...^db_{ip} (x) sigma^q with sigma^2 = 1,
// sigma* = sigma, deg sigma = 1. Products follow the Koszul rule: moving a
// sigma factor past a p-form costs (-1)^p.
#pragma once

#include "etaform/numerics.hpp"

#include <bit>
#include <map>

namespace etaform {

// Supertrace normalization: tr_sigma extracts the sigma-coefficient block and
// takes the matrix trace, scaled by kappa. kappa = 2 makes the degree-0
// eta-form equal the full spectral eta invariant (calibrated once against the
// interval spectrum, see the spectral module's oracles).
inline constexpr double kSupertraceKappa = 2.0;

namespace detail {

// Sign of merging two disjoint sorted multi-indices; -2 flags an overlap.
inline int wedge_sign(unsigned mi, unsigned mj) {
    if ((mi & mj) != 0) return -2;
    int swaps = 0;
    unsigned j = mj;
    while (j != 0) {
        const int bit = std::countr_zero(j);
        swaps += std::popcount(mi >> (bit + 1));
        j &= j - 1;
    }
    return (swaps % 2 == 0) ? 1 : -1;
}

}  // namespace detail

class CliffordFormMatrix {
  public:
    CliffordFormMatrix() = default;
    CliffordFormMatrix(int dim, int n) : dim_(dim), n_(n) {
        if (dim < 0 || dim > 3) throw ContractViolationError("CliffordFormMatrix: dim must be in [0,3]");
    }

    static int key(unsigned mask, int parity) { return static_cast<int>((mask << 1) | static_cast<unsigned>(parity)); }

    int dim() const { return dim_; }
    int size() const { return n_; }

    bool empty() const { return blocks_.empty(); }
    const std::map<int, CMatrix>& blocks() const { return blocks_; }

    const CMatrix* block(unsigned mask, int parity) const {
        auto it = blocks_.find(key(mask, parity));
        return it == blocks_.end() ? nullptr : &it->second;
    }

    CMatrix block_or_zero(unsigned mask, int parity) const {
        const CMatrix* b = block(mask, parity);
        return b ? *b : CMatrix::Zero(n_, n_);
    }

    void add_block(unsigned mask, int parity, const CMatrix& m) {
        if (m.rows() != n_ || m.cols() != n_) throw ContractViolationError("CliffordFormMatrix: block size mismatch");
        auto [it, inserted] = blocks_.try_emplace(key(mask, parity), m);
        if (!inserted) it->second += m;
    }

    void set_block(unsigned mask, int parity, const CMatrix& m) {
        if (m.rows() != n_ || m.cols() != n_) throw ContractViolationError("CliffordFormMatrix: block size mismatch");
        blocks_[key(mask, parity)] = m;
    }

    static CliffordFormMatrix unit(int dim, int n) {
        CliffordFormMatrix x(dim, n);
        x.set_block(0, 0, CMatrix::Identity(n, n));
        return x;
    }

    CliffordFormMatrix& operator+=(const CliffordFormMatrix& other) {
        check_compatible(other);
        for (const auto& [k, m] : other.blocks_) {
            auto [it, inserted] = blocks_.try_emplace(k, m);
            if (!inserted) it->second += m;
        }
        return *this;
    }

    CliffordFormMatrix& operator-=(const CliffordFormMatrix& other) {
        check_compatible(other);
        for (const auto& [k, m] : other.blocks_) {
            auto [it, inserted] = blocks_.try_emplace(k, -m);
            if (!inserted) it->second -= m;
        }
        return *this;
    }

    CliffordFormMatrix& operator*=(Complex c) {
        for (auto& [k, m] : blocks_) m *= c;
        return *this;
    }

    friend CliffordFormMatrix operator+(CliffordFormMatrix a, const CliffordFormMatrix& b) { return a += b; }
    friend CliffordFormMatrix operator-(CliffordFormMatrix a, const CliffordFormMatrix& b) { return a -= b; }
    friend CliffordFormMatrix operator*(Complex c, CliffordFormMatrix a) { return a *= c; }

    friend CliffordFormMatrix operator*(const CliffordFormMatrix& a, const CliffordFormMatrix& b) {
        a.check_compatible(b);
        CliffordFormMatrix out(a.dim_, a.n_);
        for (const auto& [ka, ma] : a.blocks_) {
            const unsigned mask_a = static_cast<unsigned>(ka) >> 1;
            const int par_a = ka & 1;
            for (const auto& [kb, mb] : b.blocks_) {
                const unsigned mask_b = static_cast<unsigned>(kb) >> 1;
                const int par_b = kb & 1;
                int sign = detail::wedge_sign(mask_a, mask_b);
                if (sign == -2) continue;
                if (par_a == 1 && (std::popcount(mask_b) % 2) == 1) sign = -sign;
                CMatrix prod = ma * mb;
                if (sign < 0) prod = -prod;
                out.add_block(mask_a | mask_b, par_a ^ par_b, prod);
            }
        }
        return out;
    }

    // Algebra star: anti-automorphism with sigma* = sigma, (db_mu)* = -db_mu
    // and matrix adjoints. Superconnection curvatures are fixed points.
    CliffordFormMatrix star() const {
        CliffordFormMatrix out(dim_, n_);
        for (const auto& [k, m] : blocks_) {
            const unsigned mask = static_cast<unsigned>(k) >> 1;
            const int parity = k & 1;
            const int p = std::popcount(mask);
            const int total = p + parity;
            int sign = (p % 2 == 0) ? 1 : -1;
            if ((total * (total - 1) / 2) % 2 == 1) sign = -sign;
            CMatrix adj = m.adjoint();
            if (sign < 0) adj = -adj;
            out.set_block(mask, parity, adj);
        }
        return out;
    }

    double norm() const {
        double s = 0.0;
        for (const auto& [k, m] : blocks_) s += m.squaredNorm();
        return std::sqrt(s);
    }

  private:
    void check_compatible(const CliffordFormMatrix& other) const {
        if (dim_ != other.dim_ || n_ != other.n_) {
            throw ContractViolationError("CliffordFormMatrix: incompatible operands");
        }
    }

    int dim_ = 0;
    int n_ = 0;
    std::map<int, CMatrix> blocks_;
};

// tr_sigma^even: kappa * matrix trace of the sigma-coefficient, per even-degree
// form multi-index.
inline std::map<unsigned, Complex> supertrace_even(const CliffordFormMatrix& x,
                                                   double kappa = kSupertraceKappa) {
    std::map<unsigned, Complex> out;
    for (unsigned mask = 0; mask < (1u << x.dim()); ++mask) {
        if (std::popcount(mask) % 2 != 0) continue;
        const CMatrix* b = x.block(mask, 1);
        out[mask] = b ? Complex(kappa) * b->trace() : Complex(0.0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Divided differences of t -> exp(-t). dd_ek is the integral of
// exp(-sum u_i x_i) over the standard k-simplex; callers pass exp(-x_i)
// alongside each node so the kernels never call exp themselves.

namespace detail {

inline constexpr double kDDThreshold = 1e-6;  // series fallback half-width

inline double dd_e1(double x, double ex, double y, double ey) {
    if (x > y) {
        std::swap(x, y);
        std::swap(ex, ey);
    }
    if (ex == 0.0) return 0.0;
    const double d = y - x;
    if (d < kDDThreshold) {
        return ex * (1.0 - d / 2.0 + d * d / 6.0 - d * d * d / 24.0 + d * d * d * d / 120.0 -
                     d * d * d * d * d / 720.0);
    }
    return ex * (1.0 - ey / ex) / d;
}

inline double dd_e2(double x, double ex, double y, double ey, double z, double ez) {
    if (x > y) { std::swap(x, y); std::swap(ex, ey); }
    if (y > z) { std::swap(y, z); std::swap(ey, ez); }
    if (x > y) { std::swap(x, y); std::swap(ex, ey); }
    if (ex == 0.0) return 0.0;
    const double span = z - x;
    if (span < kDDThreshold) {
        const double d1 = y - x, d2 = z - x;
        return ex * (0.5 - (d1 + d2) / 6.0 + (d1 * d1 + d2 * d2 + d1 * d2) / 24.0 -
                     ((d1 * d1 * d1 + d2 * d2 * d2) + d1 * d2 * (d1 + d2)) / 120.0);
    }
    return (dd_e1(x, ex, y, ey) - dd_e1(y, ey, z, ez)) / span;
}

inline double dd_e3(double x, double ex, double y, double ey, double z, double ez, double w,
                    double ew) {
    if (x > y) { std::swap(x, y); std::swap(ex, ey); }
    if (z > w) { std::swap(z, w); std::swap(ez, ew); }
    if (x > z) { std::swap(x, z); std::swap(ex, ez); }
    if (y > w) { std::swap(y, w); std::swap(ey, ew); }
    if (y > z) { std::swap(y, z); std::swap(ey, ez); }
    if (ex == 0.0) return 0.0;
    const double span = w - x;
    if (span < kDDThreshold) {
        const double d1 = y - x, d2 = z - x, d3 = w - x;
        const double s1 = d1 + d2 + d3;
        const double q = d1 * d1 + d2 * d2 + d3 * d3 + d1 * d2 + d1 * d3 + d2 * d3;
        return ex * (1.0 / 6.0 - s1 / 24.0 + q / 120.0);
    }
    return (dd_e2(x, ex, y, ey, z, ez) - dd_e2(y, ey, z, ez, w, ew)) / span;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// exp(-(H+N)) for hermitian H and a nilpotent form-degree >= 1 perturbation N,
// expanded by the Volterra series
//   e^{-H} - int_{D^1} e^{-u0 H} N e^{-u1 H} + int_{D^2} e^{-u0 H} N e^{-u1 H} N e^{-u2 H} - ...
// which terminates at order <= 3 because form degrees cap at dim <= 3. The
// simplex integrals are evaluated exactly in the eigenbasis of H via divided
// differences of exp.
inline CliffordFormMatrix duhamel_exp(const CMatrix& h, const CliffordFormMatrix& n) {
    const int dim = n.dim();
    const Eigen::Index sz = h.rows();
    if (n.size() != sz) throw ContractViolationError("duhamel_exp: size mismatch");
    for (const auto& [k, m] : n.blocks()) {
        if ((static_cast<unsigned>(k) >> 1) == 0 && m.norm() > 0.0) {
            throw ContractViolationError("duhamel_exp: N must have no 0-form block");
        }
    }

    const HermitianEig eig = hermitian_eigs(h);
    const RVector& ev = eig.values;
    RVector ex(sz);
    for (Eigen::Index i = 0; i < sz; ++i) ex(i) = std::exp(-ev(i));

    // Blocks of N in the eigenbasis, as (mask, parity, matrix) triples.
    struct Block {
        unsigned mask;
        int parity;
        CMatrix m;
    };
    std::vector<Block> nb;
    for (const auto& [k, m] : n.blocks()) {
        nb.push_back(Block{static_cast<unsigned>(k) >> 1, k & 1,
                           eig.vectors.adjoint() * m * eig.vectors});
    }

    CliffordFormMatrix out(dim, static_cast<int>(sz));
    out.set_block(0, 0, CMatrix(ex.cast<Complex>().asDiagonal()));

    // Order 1: entry (a,b) = -N_ab * E1(h_a, h_b).
    for (const auto& b1 : nb) {
        CMatrix t(sz, sz);
        for (Eigen::Index a = 0; a < sz; ++a) {
            for (Eigen::Index b = 0; b < sz; ++b) {
                t(a, b) = -b1.m(a, b) * detail::dd_e1(ev(a), ex(a), ev(b), ex(b));
            }
        }
        out.add_block(b1.mask, b1.parity, t);
    }

    // Order 2: entry (a,b) = sum_c N1_ac N2_cb E2(h_a, h_c, h_b), with the
    // Koszul sign of merging the two basis symbols.
    for (const auto& b1 : nb) {
        for (const auto& b2 : nb) {
            int sign = detail::wedge_sign(b1.mask, b2.mask);
            if (sign == -2) continue;
            if (b1.parity == 1 && (std::popcount(b2.mask) % 2) == 1) sign = -sign;
            CMatrix t = CMatrix::Zero(sz, sz);
            for (Eigen::Index a = 0; a < sz; ++a) {
                for (Eigen::Index b = 0; b < sz; ++b) {
                    Complex acc(0, 0);
                    for (Eigen::Index c = 0; c < sz; ++c) {
                        acc += b1.m(a, c) * b2.m(c, b) *
                               detail::dd_e2(ev(a), ex(a), ev(c), ex(c), ev(b), ex(b));
                    }
                    t(a, b) = static_cast<double>(sign) * acc;
                }
            }
            out.add_block(b1.mask | b2.mask, b1.parity ^ b2.parity, t);
        }
    }

    // Order 3 (only reachable when dim = 3 with three 1-form factors).
    for (const auto& b1 : nb) {
        for (const auto& b2 : nb) {
            for (const auto& b3 : nb) {
                int s12 = detail::wedge_sign(b1.mask, b2.mask);
                if (s12 == -2) continue;
                if (b1.parity == 1 && (std::popcount(b2.mask) % 2) == 1) s12 = -s12;
                const unsigned m12 = b1.mask | b2.mask;
                const int p12 = b1.parity ^ b2.parity;
                int s3 = detail::wedge_sign(m12, b3.mask);
                if (s3 == -2) continue;
                if (p12 == 1 && (std::popcount(b3.mask) % 2) == 1) s3 = -s3;
                const int sign = -s12 * s3;  // Volterra (-1)^3
                CMatrix t = CMatrix::Zero(sz, sz);
                for (Eigen::Index a = 0; a < sz; ++a) {
                    for (Eigen::Index b = 0; b < sz; ++b) {
                        Complex acc(0, 0);
                        for (Eigen::Index c = 0; c < sz; ++c) {
                            for (Eigen::Index e = 0; e < sz; ++e) {
                                acc += b1.m(a, c) * b2.m(c, e) * b3.m(e, b) *
                                       detail::dd_e3(ev(a), ex(a), ev(c), ex(c), ev(e), ex(e),
                                                     ev(b), ex(b));
                            }
                        }
                        t(a, b) = static_cast<double>(sign) * acc;
                    }
                }
                out.add_block(m12 | b3.mask, p12 ^ b3.parity, t);
            }
        }
    }

    // Back to the original basis.
    CliffordFormMatrix result(dim, static_cast<int>(sz));
    for (const auto& [k, m] : out.blocks()) {
        result.set_block(static_cast<unsigned>(k) >> 1, k & 1,
                         eig.vectors * m * eig.vectors.adjoint());
    }
    return result;
}

}  // namespace etaform
