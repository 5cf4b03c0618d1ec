// Spectrum and eta invariant of D = I d/dt on [0,1] with Lagrangian boundary
// conditions f(0) in L0, f(1) in L1.
//
// Separation of variables: f(t) = e^{-I lambda t} f(0) lands in L1 at t = 1
// iff (phi0* phi1) v = e^{2 i lambda} v, so with u_m the eigenvalues of
// phi0* phi1 and theta_m = arg(u_m)/2 in (0, pi) the spectrum is the lattice
// {theta_m + k pi : k in Z}. Transversality is exactly u_m != 1.
#pragma once

#include "etaform/symplectic.hpp"

#include <vector>

namespace etaform {

struct BoundaryPhases {
    std::vector<double> thetas;  // l values in (0, pi)
    CMatrix vectors;             // orthonormal eigenvectors of phi0* phi1 (columns)
    CMatrix u;                   // phi0* phi1
};

inline BoundaryPhases boundary_phases(const SymplecticSpace& space, const LagrangianFrame& l0,
                                      const LagrangianFrame& l1) {
    const CMatrix phi0 = graph_unitary(space, l0).phi;
    const CMatrix phi1 = graph_unitary(space, l1).phi;
    const CMatrix u = phi0.adjoint() * phi1;
    Eigen::ComplexSchur<CMatrix> schur(u);
    if (schur.info() != Eigen::Success) {
        throw ContractViolationError("boundary_phases: Schur decomposition failed");
    }
    BoundaryPhases out;
    out.u = u;
    out.vectors = schur.matrixU();
    out.thetas.resize(static_cast<std::size_t>(space.l));
    for (int m = 0; m < space.l; ++m) {
        const Complex um = schur.matrixT()(m, m);
        if (std::abs(um - Complex(1.0)) < tolerances().transversality) {
            throw DegenerateError("boundary_phases: boundary pair is not transverse");
        }
        double a = std::arg(um);  // (-pi, pi]
        if (a <= 0) a += 2.0 * kPi;
        out.thetas[static_cast<std::size_t>(m)] = 0.5 * a;
    }
    return out;
}

struct EtaValue {
    double value = 0.0;
};

// Lesch-Wojciechowski closed form: eta = sum_m (1 - 2 theta_m / pi).
// Re-derived by the Hurwitz-zeta continuation below (zeta_H(0,a) = 1/2 - a).
inline EtaValue eta_closed_form(const SymplecticSpace& space, const LagrangianFrame& l0,
                                const LagrangianFrame& l1) {
    const BoundaryPhases bp = boundary_phases(space, l0, l1);
    double eta = 0.0;
    for (double theta : bp.thetas) eta += 1.0 - 2.0 * theta / kPi;
    return EtaValue{eta};
}

// ---------------------------------------------------------------------------
// Hurwitz zeta by Euler-Maclaurin: shift N = 20, 8 Bernoulli corrections.
// Absolute error below 1e-12 for a in (0,1], z in [-1, 6].
inline double hurwitz_zeta(double z, double a) {
    if (a <= 0.0) throw ContractViolationError("hurwitz_zeta: a must be positive");
    if (std::abs(z - 1.0) < 1e-12) throw ContractViolationError("hurwitz_zeta: pole at z = 1");
    constexpr int kShift = 20;
    static const double bernoulli[8] = {1.0 / 6.0,   -1.0 / 30.0,    1.0 / 42.0, -1.0 / 30.0,
                                        5.0 / 66.0,  -691.0 / 2730.0, 7.0 / 6.0,  -3617.0 / 510.0};
    double sum = 0.0;
    for (int n = 0; n < kShift; ++n) sum += std::pow(n + a, -z);
    const double na = kShift + a;
    sum += std::pow(na, 1.0 - z) / (z - 1.0);
    sum += 0.5 * std::pow(na, -z);
    double poch = z;                      // (z)_{2k-1}, starts at k = 1
    double fact = 2.0;                    // (2k)!
    for (int k = 1; k <= 8; ++k) {
        sum += bernoulli[k - 1] / fact * poch * std::pow(na, -z - 2.0 * k + 1.0);
        poch *= (z + 2.0 * k - 1.0) * (z + 2.0 * k);
        fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
    }
    return sum;
}

// eta(z) = pi^{-z} sum_m [zeta_H(z, theta/pi) - zeta_H(z, 1 - theta/pi)],
// the analytic continuation of sum sign(lambda) |lambda|^{-z} over the
// lattice spectrum. At z = 0 this reproduces the closed form exactly.
inline double eta_zeta_oracle(const SymplecticSpace& space, const LagrangianFrame& l0,
                              const LagrangianFrame& l1, double z) {
    const BoundaryPhases bp = boundary_phases(space, l0, l1);
    double sum = 0.0;
    for (double theta : bp.thetas) {
        const double a = theta / kPi;
        sum += hurwitz_zeta(z, a) - hurwitz_zeta(z, 1.0 - a);
    }
    return std::pow(kPi, -z) * sum;
}

// ---------------------------------------------------------------------------
// Heat-kernel oracle: (1/sqrt(pi)) int s^{-1/2} sum lambda e^{-s lambda^2} ds
// over the truncated lattice, log-trapezoid in s with an extrapolated small-s
// strip and an exponential tail estimate.

struct HeatOracleParams {
    int k_max = 10000;
    double s_min = 1e-4;
    double s_max = 50.0;
    int n_s = 200;
};

inline double eta_heat_oracle(const SymplecticSpace& space, const LagrangianFrame& l0,
                              const LagrangianFrame& l1, const HeatOracleParams& params = {}) {
    const BoundaryPhases bp = boundary_phases(space, l0, l1);
    auto integrand = [&](double s) {
        double j = 0.0;
        for (double theta : bp.thetas) {
            for (int k = 0; k <= params.k_max; ++k) {
                const double lp = theta + k * kPi;
                const double lm = theta - (k + 1) * kPi;
                const double tp = s * lp * lp;
                const double tm = s * lm * lm;
                if (tp > 745.0 && tm > 745.0) break;
                if (tp <= 745.0) j += lp * std::exp(-tp);
                if (tm <= 745.0) j += lm * std::exp(-tm);
            }
        }
        return j / (std::sqrt(kPi) * std::sqrt(s));
    };

    std::vector<double> s(static_cast<std::size_t>(params.n_s));
    std::vector<double> f(static_cast<std::size_t>(params.n_s));
    const double log_min = std::log(params.s_min), log_max = std::log(params.s_max);
    for (int i = 0; i < params.n_s; ++i) {
        s[static_cast<std::size_t>(i)] =
            std::exp(log_min + (log_max - log_min) * i / (params.n_s - 1));
        f[static_cast<std::size_t>(i)] = integrand(s[static_cast<std::size_t>(i)]);
    }
    std::vector<double> pieces(s.size() - 1);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        pieces[i] = 0.5 * (f[i] + f[i + 1]) * (s[i + 1] - s[i]);
    }
    double total = pairwise_sum(pieces);

    // Small-s strip: Richardson extrapolation of the integrand in sqrt(s).
    const double r0 = std::sqrt(s[0]), r1 = std::sqrt(s[1]);
    const double slope = (f[1] - f[0]) / (r1 - r0);
    const double f_at_zero = f[0] - slope * r0;
    total += f_at_zero * s[0] + (2.0 / 3.0) * slope * r0 * s[0];

    // Exponential tail beyond s_max, with rate set by the smallest phase.
    double theta_min = kPi;
    for (double theta : bp.thetas) theta_min = std::min({theta_min, theta, kPi - theta});
    total += f.back() / (theta_min * theta_min);
    return total;
}

// ---------------------------------------------------------------------------
// Galerkin discretization in the eigenbasis of the reference operator.

struct ReferenceBasis {
    int l = 0;
    int K = 0;
    std::vector<double> lambda;  // index a = m (2K+1) + (k+K)
    BoundaryPhases phases;
    CMatrix wp;  // V+ coordinates of the basis sections: column m = v_m
    CMatrix wm;  // V- coordinates: column m = phi0 v_m

    int size() const { return l * (2 * K + 1); }
    int index(int m, int k) const { return m * (2 * K + 1) + (k + K); }
};

inline ReferenceBasis build_reference_basis(const SymplecticSpace& space, const LagrangianFrame& l0,
                                            const LagrangianFrame& l1, int K) {
    ReferenceBasis basis;
    basis.l = space.l;
    basis.K = K;
    basis.phases = boundary_phases(space, l0, l1);
    basis.wp = basis.phases.vectors;
    basis.wm = graph_unitary(space, l0).phi * basis.phases.vectors;
    basis.lambda.resize(static_cast<std::size_t>(basis.size()));
    for (int m = 0; m < basis.l; ++m) {
        for (int k = -K; k <= K; ++k) {
            basis.lambda[static_cast<std::size_t>(basis.index(m, k))] =
                basis.phases.thetas[static_cast<std::size_t>(m)] + k * kPi;
        }
    }
    return basis;
}

// Composite Gauss-Legendre scheme on [a, b] with enough panels to resolve
// e^{i mu t} up to |mu| = mu_max.
struct LineQuadrature {
    std::vector<double> t;
    std::vector<double> w;
};

inline LineQuadrature oscillatory_panels(double a, double b, double mu_max, int nodes_per_panel = 24) {
    const int panels = std::max(4, static_cast<int>(std::ceil(std::abs(mu_max) * (b - a) / 15.0)));
    const Quadrature& gl = gauss_legendre(nodes_per_panel);
    LineQuadrature q;
    q.t.reserve(static_cast<std::size_t>(panels * nodes_per_panel));
    q.w.reserve(static_cast<std::size_t>(panels * nodes_per_panel));
    for (int p = 0; p < panels; ++p) {
        const double lo = a + (b - a) * p / panels;
        const double hi = a + (b - a) * (p + 1) / panels;
        for (int i = 0; i < nodes_per_panel; ++i) {
            q.t.push_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.nodes[static_cast<std::size_t>(i)]);
            q.w.push_back(0.5 * (hi - lo) * gl.weights[static_cast<std::size_t>(i)]);
        }
    }
    return q;
}

// Matrix of a pointwise multiplication operator V(t) in the reference basis.
// The four V+-/V- blocks reduce every entry to oscillatory line integrals,
// which are accumulated per (m, m', frequency offset) with phase recurrences.
inline CMatrix galerkin_potential_matrix(const SymplecticSpace& space, const ReferenceBasis& basis,
                                         const std::function<CMatrix(double)>& potential,
                                         int nodes_per_panel = 64) {
    const int l = basis.l;
    const int K = basis.K;
    const int n = basis.size();
    const int offsets = 4 * K + 1;
    const double mu_max = 2.0 * (kPi * (K + 1));
    const LineQuadrature quad = oscillatory_panels(0.0, 1.0, mu_max, nodes_per_panel);
    const std::size_t nq = quad.t.size();

    // Per-node sesquilinear data c{pp,pm,mp,mm}[m][m'](q).
    std::vector<CMatrix> cpp(nq), cpm(nq), cmp(nq), cmm(nq);
    for (std::size_t q = 0; q < nq; ++q) {
        const CMatrix v = potential(quad.t[q]);
        const CMatrix vpp = space.Vplus.adjoint() * v * space.Vplus;
        const CMatrix vpm = space.Vplus.adjoint() * v * space.Vminus;
        const CMatrix vmp = space.Vminus.adjoint() * v * space.Vplus;
        const CMatrix vmm = space.Vminus.adjoint() * v * space.Vminus;
        cpp[q] = basis.wp.adjoint() * vpp * basis.wp;
        cpm[q] = basis.wp.adjoint() * vpm * basis.wm;
        cmp[q] = basis.wm.adjoint() * vmp * basis.wp;
        cmm[q] = basis.wm.adjoint() * vmm * basis.wm;
    }

    // S tables over frequency offsets d = -2K .. 2K, dtheta = theta_m - theta_m',
    // stheta = theta_m + theta_m':
    //   S1[m][m'][d] = int c_pp e^{i ( dtheta + d pi) t}
    //   S2[m][m'][d] = int c_pm e^{i ( stheta + d pi) t}
    //   S3[m][m'][d] = int c_mp e^{i (-stheta + d pi) t}
    //   S4[m][m'][d] = int c_mm e^{i (-dtheta + d pi) t}
    auto table = [&](const std::vector<CMatrix>& c, double sign_theta, bool sum_thetas) {
        std::vector<CVector> out(static_cast<std::size_t>(l * l), CVector::Zero(offsets));
        for (std::size_t q = 0; q < nq; ++q) {
            const double t = quad.t[q];
            const Complex step = std::polar(1.0, kPi * t);
            for (int m = 0; m < l; ++m) {
                for (int mp = 0; mp < l; ++mp) {
                    const double th = sum_thetas
                                          ? basis.phases.thetas[static_cast<std::size_t>(m)] +
                                                basis.phases.thetas[static_cast<std::size_t>(mp)]
                                          : basis.phases.thetas[static_cast<std::size_t>(m)] -
                                                basis.phases.thetas[static_cast<std::size_t>(mp)];
                    Complex phase = std::polar(1.0, sign_theta * th * t - 2 * K * kPi * t);
                    CVector& dst = out[static_cast<std::size_t>(m * l + mp)];
                    const Complex base = quad.w[q] * c[q](m, mp);
                    for (int d = -2 * K; d <= 2 * K; ++d) {
                        dst(d + 2 * K) += base * phase;
                        phase *= step;
                    }
                }
            }
        }
        return out;
    };

    const auto s1 = table(cpp, +1.0, false);
    const auto s2 = table(cpm, +1.0, true);
    const auto s3 = table(cmp, -1.0, true);
    const auto s4 = table(cmm, -1.0, false);

    CMatrix out(n, n);
    for (int m = 0; m < l; ++m) {
        for (int k = -K; k <= K; ++k) {
            const int a = basis.index(m, k);
            for (int mp = 0; mp < l; ++mp) {
                for (int kp = -K; kp <= K; ++kp) {
                    const int ap = basis.index(mp, kp);
                    const int dk = k - kp;
                    const int sk = k + kp;
                    const std::size_t mm = static_cast<std::size_t>(m * l + mp);
                    out(a, ap) = 0.5 * (s1[mm](dk + 2 * K) + s2[mm](sk + 2 * K) +
                                        s3[mm](-sk + 2 * K) + s4[mm](-dk + 2 * K));
                }
            }
        }
    }
    return out;
}

// Full Galerkin matrix of D + potential and its eigenvalues (ascending).
inline RVector galerkin_spectrum_oracle(const SymplecticSpace& space, const LagrangianFrame& l0ref,
                                        const LagrangianFrame& l1ref,
                                        const std::function<CMatrix(double)>& potential, int K,
                                        int nodes_per_panel = 64) {
    const ReferenceBasis basis = build_reference_basis(space, l0ref, l1ref, K);
    CMatrix h = galerkin_potential_matrix(space, basis, potential, nodes_per_panel);
    for (int a = 0; a < basis.size(); ++a) {
        h(a, a) += basis.lambda[static_cast<std::size_t>(a)];
    }
    h = 0.5 * (h + h.adjoint().eval());
    return hermitian_eigs(h).values;
}

// ---------------------------------------------------------------------------

inline double eta_cocycle_sum(const SymplecticSpace& space, const LagrangianFrame& l0,
                              const LagrangianFrame& l1, const LagrangianFrame& l2) {
    return eta_closed_form(space, l0, l1).value + eta_closed_form(space, l1, l2).value +
           eta_closed_form(space, l2, l0).value;
}

}  // namespace etaform
