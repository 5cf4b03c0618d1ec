// Numerical eta-form of the family D(b) = I d/dt with moving Lagrangian
// boundary conditions, through the superconnection
//   A_s = nabla - d(chi0 A0 + chi1 A1) + sqrt(s) sigma Dtilde,
// whose curvature splits by form degree as
//   A_s^2 = s Dtilde^2  +  sqrt(s) sigma (dDtilde + [omega, Dtilde])  +  (domega + omega ^ omega),
// with omega = -d(chi0 A0 + chi1 A1). Since omega is exact along B, domega
// vanishes identically. The operators live in the Galerkin eigenbasis of the
// reference operator; the heat factor is expanded by the terminating Volterra
// series, and only traces against sigma Dtilde are accumulated, which reduces
// each s-sample to O(n^2) divided-difference sums.
#pragma once

#include "etaform/families.hpp"
#include "etaform/form_algebra.hpp"
#include "etaform/spectral_eta.hpp"

namespace etaform {

// Orientation of the degree-2 component: the raw supertrace integral is
// purely imaginary and the Chern normalization divides by 2 pi i; the overall
// sign is fixed once by the closed-surface comparison with the lattice Chern
// number (the degree-2 half of the main identity).
inline constexpr double kEtaTwoFormOrientation = 1.0;

struct EtaFormParams {
    int K = 64;
    double s_min = 1e-3;
    double s_max = 30.0;
    int n_s = 200;
    int pf_window = 15;
    CutoffPair cut = cutoffs();
};

struct EtaFormDiagnostics {
    double fit_residual_rel = 0.0;
    double imag_residual = 0.0;
    double tail = 0.0;
    double s_min = 0.0, s_max = 0.0;
    int n_s = 0;
};

struct EtaFormValue {
    double f0 = 0.0;
    std::vector<double> f2;  // per 2-form mask of the chart, ascending masks
    EtaFormDiagnostics diag;
};

// ---------------------------------------------------------------------------
// Profile transforms: Ghat_g[m][m'][dk + 2K] = int g(t) e^{i ((theta_m -
// theta_m') + dk pi) t} dt over the support of g.

namespace detail {

struct ProfileTables {
    int l = 0;
    int K = 0;
    // 0: chi0, 1: chi1, 2: dchi0, 3: dchi1
    std::array<std::vector<CVector>, 4> ghat;

    const Complex& get(int g, int m, int mp, int dk) const {
        return ghat[static_cast<std::size_t>(g)][static_cast<std::size_t>(m * l + mp)](dk + 2 * K);
    }
};

inline ProfileTables build_profile_tables(const ReferenceBasis& basis, const CutoffPair& cut) {
    ProfileTables tab;
    tab.l = basis.l;
    tab.K = basis.K;
    const double mu_max = kPi * (2.0 * basis.K + 2.0);
    struct Spec {
        std::function<double(double)> g;
        double lo, hi;
    };
    const std::array<Spec, 4> specs{
        Spec{[&cut](double t) { return cut.chi0(t); }, 0.0, cut.support0},
        Spec{[&cut](double t) { return cut.chi1(t); }, cut.support1, 1.0},
        Spec{[&cut](double t) { return cut.dchi0(t); }, cut.plateau0, cut.support0},
        Spec{[&cut](double t) { return cut.dchi1(t); }, cut.support1, cut.plateau1}};
    const int offsets = 4 * basis.K + 1;
    for (std::size_t gi = 0; gi < 4; ++gi) {
        auto& dst = tab.ghat[gi];
        dst.assign(static_cast<std::size_t>(basis.l * basis.l), CVector::Zero(offsets));
        const LineQuadrature quad = oscillatory_panels(specs[gi].lo, specs[gi].hi, mu_max);
        for (std::size_t q = 0; q < quad.t.size(); ++q) {
            const double t = quad.t[q];
            const double gw = specs[gi].g(t) * quad.w[q];
            if (gw == 0.0) continue;
            const Complex step = std::polar(1.0, kPi * t);
            for (int m = 0; m < basis.l; ++m) {
                for (int mp = 0; mp < basis.l; ++mp) {
                    const double dth = basis.phases.thetas[static_cast<std::size_t>(m)] -
                                       basis.phases.thetas[static_cast<std::size_t>(mp)];
                    Complex phase = std::polar(gw, dth * t - 2.0 * basis.K * kPi * t);
                    CVector& col = dst[static_cast<std::size_t>(m * basis.l + mp)];
                    for (int dk = -2 * basis.K; dk <= 2 * basis.K; ++dk) {
                        col(dk + 2 * basis.K) += phase;
                        phase *= step;
                    }
                }
            }
        }
    }
    return tab;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Discretized family operator: reference basis at the gauge center plus the
// gauge fields A_i(b) over the chart.

struct FamilyOperator {
    const FamilyChart* chart = nullptr;
    int first = 0;   // Lagrangian index carrying the t = 0 boundary condition
    int second = 1;  // t = 1 boundary condition
    int K = 0;
    CutoffPair cut;
    std::array<int, 3> center{0, 0, 0};
    ReferenceBasis basis;
    detail::ProfileTables tables;
    std::vector<CMatrix> a_first;   // A_first(b) over all vertices
    std::vector<CMatrix> a_second;  // A_second(b)
};

namespace detail {

// V+- blocks of a matrix commuting with I.
struct Blocks {
    CMatrix plus, minus;
};

inline Blocks split_blocks(const SymplecticSpace& space, const CMatrix& x) {
    return Blocks{space.Vplus.adjoint() * x * space.Vplus,
                  space.Vminus.adjoint() * x * space.Vminus};
}

// Matrix of multiplication by g(t) X with X = blockdiag(X+, X-) in V+-.
inline CMatrix multiplication_matrix(const ReferenceBasis& basis, const ProfileTables& tab, int gi,
                                     const CMatrix& xplus, const CMatrix& xminus) {
    const int l = basis.l, K = basis.K, n = basis.size();
    const CMatrix p = basis.wp.adjoint() * xplus * basis.wp;
    const CMatrix q = basis.wm.adjoint() * xminus * basis.wm;
    CMatrix out(n, n);
    for (int m = 0; m < l; ++m) {
        for (int mp = 0; mp < l; ++mp) {
            const Complex pm = p(m, mp), qm = q(m, mp);
            for (int k = -K; k <= K; ++k) {
                const int a = basis.index(m, k);
                for (int kp = -K; kp <= K; ++kp) {
                    const Complex g = tab.get(gi, m, mp, k - kp);
                    out(a, basis.index(mp, kp)) = 0.5 * (g * pm + std::conj(g) * qm);
                }
            }
        }
    }
    return out;
}

// Multiplication by -chi0' I A0 - chi1' I A1 (the potential of Dtilde) or by
// -(chi0 dA0 + chi1 dA1) (a connection coefficient). I acts as +-i on V+-.
inline CMatrix potential_matrix(const SymplecticSpace& space, const ReferenceBasis& basis,
                                const ProfileTables& tab, const CMatrix& a0, const CMatrix& a1) {
    const Blocks b0 = split_blocks(space, a0);
    const Blocks b1 = split_blocks(space, a1);
    const Complex mi(0, -1), pi_(0, 1);
    return multiplication_matrix(basis, tab, 2, (mi * b0.plus).eval(), (pi_ * b0.minus).eval()) +
           multiplication_matrix(basis, tab, 3, (mi * b1.plus).eval(), (pi_ * b1.minus).eval());
}

inline CMatrix connection_coefficient(const SymplecticSpace& space, const ReferenceBasis& basis,
                                      const ProfileTables& tab, const CMatrix& da0,
                                      const CMatrix& da1) {
    const Blocks b0 = split_blocks(space, da0);
    const Blocks b1 = split_blocks(space, da1);
    return multiplication_matrix(basis, tab, 0, (-b0.plus).eval(), (-b0.minus).eval()) +
           multiplication_matrix(basis, tab, 1, (-b1.plus).eval(), (-b1.minus).eval());
}

}  // namespace detail

inline FamilyOperator discretize_family(const FamilyChart& chart, int first, int second, int K,
                                        const CutoffPair& cut = cutoffs()) {
    FamilyOperator op;
    op.chart = &chart;
    op.first = first;
    op.second = second;
    op.K = K;
    op.cut = cut;
    op.center = chart.basepoint;
    const std::size_t c = chart.index(chart.basepoint);
    op.basis = build_reference_basis(chart.space, chart.samples[c][static_cast<std::size_t>(first)],
                                     chart.samples[c][static_cast<std::size_t>(second)], K);
    op.tables = detail::build_profile_tables(op.basis, cut);
    GaugeData g0 = build_gauge(chart, first);
    GaugeData g1 = build_gauge(chart, second);
    op.a_first = std::move(g0.A);
    op.a_second = std::move(g1.A);
    return op;
}

// Dtilde(b) = diag(lattice) + potential(b) in the reference basis.
inline CMatrix dtilde_matrix(const FamilyOperator& op, const std::array<int, 3>& iv) {
    const std::size_t v = op.chart->index(iv);
    CMatrix d = detail::potential_matrix(op.chart->space, op.basis, op.tables, op.a_first[v],
                                         op.a_second[v]);
    for (int a = 0; a < op.basis.size(); ++a) d(a, a) += op.basis.lambda[static_cast<std::size_t>(a)];
    return d;
}

// ---------------------------------------------------------------------------
// Curvature blocks at a vertex (interior only; derivatives along B by central
// differences of the gauge fields).

struct SuperconnectionCurvature {
    CliffordFormMatrix F;  // the full A_s^2
};

namespace detail {

struct VertexMatrices {
    CMatrix dtilde;
    std::vector<CMatrix> omega;    // per axis
    std::vector<CMatrix> ddtilde;  // per axis
};

inline VertexMatrices vertex_matrices(const FamilyOperator& op, const std::array<int, 3>& iv) {
    const FamilyChart& chart = *op.chart;
    if (!chart.interior(iv)) throw OutOfDomainError("superconnection: interior vertex required");
    VertexMatrices out;
    out.dtilde = dtilde_matrix(op, iv);
    out.omega.resize(static_cast<std::size_t>(chart.dim));
    out.ddtilde.resize(static_cast<std::size_t>(chart.dim));
    for (int axis = 0; axis < chart.dim; ++axis) {
        const CMatrix da0 = fd_partial_at(chart, op.a_first, iv, axis);
        const CMatrix da1 = fd_partial_at(chart, op.a_second, iv, axis);
        out.omega[static_cast<std::size_t>(axis)] =
            detail::connection_coefficient(chart.space, op.basis, op.tables, da0, da1);
        out.ddtilde[static_cast<std::size_t>(axis)] =
            detail::potential_matrix(chart.space, op.basis, op.tables, da0, da1);
    }
    return out;
}

}  // namespace detail

// The connection-plus-Dirac part Theta = omega + sqrt(s) sigma Dtilde as an
// element of the form algebra (the derivative term of A_s is excluded).
inline CliffordFormMatrix connection_form(const FamilyOperator& op, const std::array<int, 3>& iv,
                                          double s) {
    const detail::VertexMatrices vm = detail::vertex_matrices(op, iv);
    CliffordFormMatrix theta(op.chart->dim, op.basis.size());
    theta.set_block(0, 1, (std::sqrt(s) * vm.dtilde).eval());
    for (int axis = 0; axis < op.chart->dim; ++axis) {
        theta.set_block(1u << axis, 0, vm.omega[static_cast<std::size_t>(axis)]);
    }
    return theta;
}

inline SuperconnectionCurvature curvature(const FamilyOperator& op, const std::array<int, 3>& iv,
                                          double s) {
    const detail::VertexMatrices vm = detail::vertex_matrices(op, iv);
    const int dim = op.chart->dim;
    CliffordFormMatrix f(dim, op.basis.size());
    f.set_block(0, 0, (s * vm.dtilde * vm.dtilde).eval());
    const double sqs = std::sqrt(s);
    for (int axis = 0; axis < dim; ++axis) {
        const CMatrix& om = vm.omega[static_cast<std::size_t>(axis)];
        f.set_block(1u << axis, 1,
                    (sqs * (vm.ddtilde[static_cast<std::size_t>(axis)] + om * vm.dtilde -
                            vm.dtilde * om))
                        .eval());
    }
    // domega = -d d(chi0 A0 + chi1 A1) = 0, so the 2-form block is omega ^ omega.
    for (int mu = 0; mu < dim; ++mu) {
        for (int nu = mu + 1; nu < dim; ++nu) {
            const CMatrix& a = vm.omega[static_cast<std::size_t>(mu)];
            const CMatrix& b = vm.omega[static_cast<std::size_t>(nu)];
            f.set_block((1u << mu) | (1u << nu), 0, (a * b - b * a).eval());
        }
    }
    return SuperconnectionCurvature{f};
}

// ---------------------------------------------------------------------------
// Eta integrand. The reference path assembles sigma Dtilde e^{-A_s^2} in the
// form algebra; the fast path accumulates only the traces.

struct EtaIntegrand {
    double f0 = 0.0;
    std::vector<Complex> f2;  // per 2-form mask, before orientation/reality
};

// Reference evaluation through duhamel_exp (cross-validation and small K).
inline EtaIntegrand eta_integrand_algebra(const FamilyOperator& op, const std::array<int, 3>& iv,
                                          double s) {
    const SuperconnectionCurvature cur = curvature(op, iv, s);
    const CMatrix h = cur.F.block_or_zero(0, 0);
    CliffordFormMatrix n = cur.F;
    n.set_block(0, 0, CMatrix::Zero(op.basis.size(), op.basis.size()));
    const CliffordFormMatrix heat = duhamel_exp(h, n);
    CliffordFormMatrix sigma_d(op.chart->dim, op.basis.size());
    sigma_d.set_block(0, 1, dtilde_matrix(op, iv));
    const auto traces = supertrace_even(sigma_d * heat);
    const double pref = 1.0 / (2.0 * std::sqrt(kPi) * std::sqrt(s));
    EtaIntegrand out;
    out.f0 = pref * traces.at(0).real();
    for (unsigned mask : form_masks(op.chart->dim, 2)) {
        out.f2.push_back(pref * traces.at(mask));
    }
    return out;
}

namespace detail {

// Everything eta_form needs at one vertex, reduced to the eigenbasis of
// Dtilde(b). At a gauge center Dtilde is already diagonal.
struct VertexEtaData {
    int dim = 0;
    RVector mu;                   // eigenvalues of Dtilde
    std::vector<CMatrix> r;       // per axis: dDtilde + [omega, Dtilde]
    std::vector<CMatrix> comm;    // per 2-form mask: [omega_mu, omega_nu]
    double mu_min_abs = 0.0;
};

inline VertexEtaData reduce_vertex(const SymplecticSpace& space, int dim, const CMatrix& dtilde,
                                   bool diagonal, const std::vector<double>& lattice,
                                   const std::vector<CMatrix>& omega,
                                   const std::vector<CMatrix>& ddtilde) {
    VertexEtaData data;
    data.dim = dim;
    const Eigen::Index n = dtilde.rows();
    CMatrix basis;
    if (diagonal) {
        data.mu = Eigen::Map<const RVector>(lattice.data(), static_cast<Eigen::Index>(lattice.size()));
    } else {
        const HermitianEig eig = hermitian_eigs(dtilde);
        data.mu = eig.values;
        basis = eig.vectors;
    }
    auto to_eigenbasis = [&](const CMatrix& m) {
        return diagonal ? m : CMatrix(basis.adjoint() * m * basis);
    };
    data.r.resize(static_cast<std::size_t>(dim));
    for (int axis = 0; axis < dim; ++axis) {
        CMatrix r = ddtilde[static_cast<std::size_t>(axis)] +
                    omega[static_cast<std::size_t>(axis)] * dtilde -
                    dtilde * omega[static_cast<std::size_t>(axis)];
        data.r[static_cast<std::size_t>(axis)] = to_eigenbasis(r);
    }
    for (int mu_ = 0; mu_ < dim; ++mu_) {
        for (int nu = mu_ + 1; nu < dim; ++nu) {
            const CMatrix& a = omega[static_cast<std::size_t>(mu_)];
            const CMatrix& b = omega[static_cast<std::size_t>(nu)];
            data.comm.push_back(to_eigenbasis(a * b - b * a));
        }
    }
    data.mu_min_abs = data.mu.size() ? data.mu.cwiseAbs().minCoeff() : 0.0;
    (void)space;
    (void)n;
    return data;
}

inline EtaIntegrand integrand_from_data(const VertexEtaData& data, double s) {
    const Eigen::Index n = data.mu.size();
    RVector h(n), ex(n);
    for (Eigen::Index a = 0; a < n; ++a) {
        h(a) = s * data.mu(a) * data.mu(a);
        ex(a) = h(a) > 745.0 ? 0.0 : std::exp(-h(a));
    }
    const double pref = kSupertraceKappa / (2.0 * std::sqrt(kPi) * std::sqrt(s));
    EtaIntegrand out;
    double f0 = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) f0 += data.mu(a) * ex(a);
    out.f0 = pref * f0;
    const std::size_t ncomp = data.comm.size();
    out.f2.assign(ncomp, Complex(0, 0));
    int lo = 0, hi = 1;
    std::size_t ci = 0;
    for (int mu_ = 0; mu_ < data.dim; ++mu_) {
        for (int nu = mu_ + 1; nu < data.dim; ++nu, ++ci) {
            lo = mu_;
            hi = nu;
            const CMatrix& rl = data.r[static_cast<std::size_t>(lo)];
            const CMatrix& rh = data.r[static_cast<std::size_t>(hi)];
            const CMatrix& cm = data.comm[ci];
            Complex t1(0, 0);
            for (Eigen::Index a = 0; a < n; ++a) t1 += data.mu(a) * cm(a, a) * ex(a);
            Complex t2(0, 0);
            for (Eigen::Index a = 0; a < n; ++a) {
                const double mua = data.mu(a);
                if (mua == 0.0) continue;
                const double ha = h(a), ea = ex(a);
                for (Eigen::Index c = 0; c < n; ++c) {
                    // E2 over the node multiset (h_a, h_c, h_a).
                    const double w = dd_e2(ha, ea, h(c), ex(c), ha, ea);
                    if (w == 0.0) continue;
                    t2 += mua * w * (rl(a, c) * rh(c, a) - rh(a, c) * rl(c, a));
                }
            }
            out.f2[ci] = pref * (-t1 - s * t2);
        }
    }
    return out;
}

}  // namespace detail

// Fast-path integrand at a vertex of the global operator.
inline EtaIntegrand eta_integrand(const FamilyOperator& op, const std::array<int, 3>& iv, double s) {
    const detail::VertexMatrices vm = detail::vertex_matrices(op, iv);
    const bool diagonal = (iv == op.center);
    const detail::VertexEtaData data =
        detail::reduce_vertex(op.chart->space, op.chart->dim, vm.dtilde, diagonal,
                              op.basis.lambda, vm.omega, vm.ddtilde);
    return detail::integrand_from_data(data, s);
}

// ---------------------------------------------------------------------------
// Finite-part s-integration: log-spaced trapezoid with the fitted small-s
// model c_-/sqrt(s) + c0 + c1 sqrt(s); the divergent term is integrated in
// closed form and the fit residual is reported.

namespace detail {

struct PFResult {
    Complex value;
    double fit_residual_rel = 0.0;
    double tail = 0.0;
};

inline PFResult finite_part_integral(const std::vector<double>& s, const std::vector<Complex>& f,
                                     int pf_window, double decay_rate) {
    const std::size_t n = s.size();
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(pf_window), n);
    // Least squares for f ~ cm / sqrt(s) + c0 + c1 sqrt(s) on the window.
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3cd atb = Eigen::Vector3cd::Zero();
    for (std::size_t i = 0; i < w; ++i) {
        const Eigen::Vector3d row(1.0 / std::sqrt(s[i]), 1.0, std::sqrt(s[i]));
        ata += row * row.transpose();
        atb += row.cast<Complex>() * f[i];
    }
    const Eigen::Vector3cd coef = ata.ldlt().solve(atb.real()).cast<Complex>() +
                                  Complex(0, 1) * ata.ldlt().solve(atb.imag()).cast<Complex>();
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(f[i]));
    double resid = 0.0;
    for (std::size_t i = 0; i < w; ++i) {
        const Complex model = coef(0) / std::sqrt(s[i]) + coef(1) + coef(2) * std::sqrt(s[i]);
        resid = std::max(resid, std::abs(f[i] - model));
    }
    PFResult out;
    out.fit_residual_rel = scale > 0.0 ? resid / scale : 0.0;
    if (scale > 1e-14 && out.fit_residual_rel > tolerances().pf_fit_rel) {
        throw PoorFitError("finite_part_integral: small-s fit residual too large");
    }
    // Trapezoid of (f - c_- / sqrt(s)), then the singular part in closed form
    // over [0, s_max] and the regular completion over [0, s_min].
    std::vector<Complex> pieces(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const Complex fa = f[i] - coef(0) / std::sqrt(s[i]);
        const Complex fb = f[i + 1] - coef(0) / std::sqrt(s[i + 1]);
        pieces[i] = 0.5 * (fa + fb) * (s[i + 1] - s[i]);
    }
    Complex total = pairwise_sum(pieces);
    total += 2.0 * coef(0) * std::sqrt(s[n - 1]);
    total += coef(1) * s[0] + (2.0 / 3.0) * coef(2) * std::pow(s[0], 1.5);
    const Complex tail = decay_rate > 0.0 ? f[n - 1] / decay_rate : Complex(0, 0);
    total += tail;
    out.tail = std::abs(tail);
    out.value = total;
    return out;
}

inline EtaFormValue integrate_eta(const VertexEtaData& data, const EtaFormParams& params) {
    std::vector<double> s(static_cast<std::size_t>(params.n_s));
    const double log_min = std::log(params.s_min), log_max = std::log(params.s_max);
    for (int i = 0; i < params.n_s; ++i) {
        s[static_cast<std::size_t>(i)] =
            std::exp(log_min + (log_max - log_min) * i / (params.n_s - 1));
    }
    const std::size_t ncomp = data.comm.size();
    std::vector<Complex> f0(s.size());
    std::vector<std::vector<Complex>> f2(ncomp, std::vector<Complex>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
        const EtaIntegrand val = integrand_from_data(data, s[i]);
        f0[i] = val.f0;
        for (std::size_t c = 0; c < ncomp; ++c) f2[c][i] = val.f2[c];
    }
    const double rate = data.mu_min_abs * data.mu_min_abs;
    EtaFormValue out;
    out.diag.s_min = params.s_min;
    out.diag.s_max = params.s_max;
    out.diag.n_s = params.n_s;
    const PFResult p0 = finite_part_integral(s, f0, params.pf_window, rate);
    out.f0 = p0.value.real();
    out.diag.fit_residual_rel = p0.fit_residual_rel;
    out.diag.tail = p0.tail;
    out.diag.imag_residual = std::abs(p0.value.imag());
    out.f2.resize(ncomp);
    for (std::size_t c = 0; c < ncomp; ++c) {
        const PFResult pc = finite_part_integral(s, f2[c], params.pf_window, rate);
        // Chern normalization 1/(2 pi i): the raw integral is imaginary and
        // its real part is the reality residual.
        out.f2[c] = kEtaTwoFormOrientation * pc.value.imag() / (2.0 * kPi);
        out.diag.imag_residual =
            std::max(out.diag.imag_residual, std::abs(pc.value.real()) / (2.0 * kPi));
        out.diag.fit_residual_rel = std::max(out.diag.fit_residual_rel, pc.fit_residual_rel);
        out.diag.tail = std::max(out.diag.tail, pc.tail);
    }
    return out;
}

}  // namespace detail

// Eta-form at a vertex of the globally gauged operator.
inline EtaFormValue eta_form(const FamilyOperator& op, const std::array<int, 3>& iv,
                             const EtaFormParams& params) {
    const detail::VertexMatrices vm = detail::vertex_matrices(op, iv);
    const bool diagonal = (iv == op.center);
    const detail::VertexEtaData data =
        detail::reduce_vertex(op.chart->space, op.chart->dim, vm.dtilde, diagonal,
                              op.basis.lambda, vm.omega, vm.ddtilde);
    return detail::integrate_eta(data, params);
}

// ---------------------------------------------------------------------------
// Local-gauge evaluation: the vertex itself is the gauge center, so the
// reference operator is exactly diagonal and only the one-step transports to
// the stencil neighbours enter. This is the mesh workhorse; by the
// gauge-independence lemma it computes the same form as the global gauge.

// Optional deterministic twist of the transports (still gauge-admissible):
// U_i(b) is premultiplied by exp(rho_i(b) K_i) with K_i a seeded anti-hermitian
// stabilizer of L_i(center) commuting with I, rho_i linear and 0 at the center.
struct GaugeTwist {
    double scale = 0.0;
    std::uint64_t seed = 1;
};

namespace detail {

struct PairStencil {
    const SymplecticSpace* space = nullptr;
    int dim = 0;
    std::array<double, 3> step{};
    std::array<LagrangianFrame, 2> center;                     // first, second
    std::vector<std::array<std::array<LagrangianFrame, 2>, 2>> nb;  // [axis][lagrangian][minus/plus]
};

inline VertexEtaData reduce_stencil(const PairStencil& st, const ReferenceBasis& basis,
                                    const ProfileTables& tables, const GaugeTwist* twist) {
    const SymplecticSpace& space = *st.space;
    const int n2 = space.dim();

    std::array<CMatrix, 2> stab{CMatrix::Zero(n2, n2), CMatrix::Zero(n2, n2)};
    if (twist && twist->scale != 0.0) {
        Rng rng(twist->seed);
        for (int which = 0; which < 2; ++which) {
            CMatrix kplus(space.l, space.l);
            for (int i = 0; i < space.l; ++i) {
                for (int j = 0; j < space.l; ++j) kplus(i, j) = rng.cnormal();
            }
            kplus = 0.5 * (kplus - kplus.adjoint().eval());
            const CMatrix phi = graph_unitary(space, st.center[static_cast<std::size_t>(which)]).phi;
            const CMatrix kminus = phi * kplus * phi.adjoint();
            stab[static_cast<std::size_t>(which)] =
                space.Vplus * kplus * space.Vplus.adjoint() +
                space.Vminus * kminus * space.Vminus.adjoint();
        }
    }

    // A fields on the stencil; A = 0 at the center.
    std::vector<CMatrix> da_first(static_cast<std::size_t>(st.dim));
    std::vector<CMatrix> da_second(static_cast<std::size_t>(st.dim));
    for (int axis = 0; axis < st.dim; ++axis) {
        std::array<std::array<CMatrix, 2>, 2> a;  // [lagrangian][minus/plus]
        for (int which = 0; which < 2; ++which) {
            for (int side = 0; side < 2; ++side) {
                const LagrangianFrame& from =
                    st.nb[static_cast<std::size_t>(axis)][static_cast<std::size_t>(which)]
                         [static_cast<std::size_t>(side)];
                CMatrix u = transport_unitary(space, from, st.center[static_cast<std::size_t>(which)]);
                if (twist && twist->scale != 0.0) {
                    const double sign = side == 0 ? -1.0 : 1.0;
                    const double rho = twist->scale * (axis + 1) * sign *
                                       st.step[static_cast<std::size_t>(axis)];
                    u = expm_antihermitian((rho * stab[static_cast<std::size_t>(which)]).eval()) * u;
                }
                a[static_cast<std::size_t>(which)][static_cast<std::size_t>(side)] =
                    unitary_log(u, tolerances().gauge_branch_margin);
            }
        }
        const double h2 = 2.0 * st.step[static_cast<std::size_t>(axis)];
        da_first[static_cast<std::size_t>(axis)] = (a[0][1] - a[0][0]) / h2;
        da_second[static_cast<std::size_t>(axis)] = (a[1][1] - a[1][0]) / h2;
    }

    std::vector<CMatrix> omega(static_cast<std::size_t>(st.dim));
    std::vector<CMatrix> ddtilde(static_cast<std::size_t>(st.dim));
    for (int axis = 0; axis < st.dim; ++axis) {
        omega[static_cast<std::size_t>(axis)] = connection_coefficient(
            space, basis, tables, da_first[static_cast<std::size_t>(axis)],
            da_second[static_cast<std::size_t>(axis)]);
        ddtilde[static_cast<std::size_t>(axis)] =
            potential_matrix(space, basis, tables, da_first[static_cast<std::size_t>(axis)],
                             da_second[static_cast<std::size_t>(axis)]);
    }
    CMatrix dtilde = CMatrix::Zero(basis.size(), basis.size());
    for (int a = 0; a < basis.size(); ++a) dtilde(a, a) = basis.lambda[static_cast<std::size_t>(a)];
    return reduce_vertex(space, st.dim, dtilde, true, basis.lambda, omega, ddtilde);
}

inline EtaFormValue eta_form_stencil(const PairStencil& st, int K, const EtaFormParams& params,
                                     const GaugeTwist* twist) {
    const ReferenceBasis basis = build_reference_basis(*st.space, st.center[0], st.center[1], K);
    const ProfileTables tables = build_profile_tables(basis, params.cut);
    const VertexEtaData data = reduce_stencil(st, basis, tables, twist);
    return integrate_eta(data, params);
}

}  // namespace detail

inline EtaFormValue eta_form_at(const FamilyChart& chart, const std::array<int, 3>& iv, int first,
                                int second, const EtaFormParams& params,
                                const GaugeTwist* twist = nullptr) {
    if (!chart.interior(iv)) throw OutOfDomainError("eta_form_at: interior vertex required");
    detail::PairStencil st;
    st.space = &chart.space;
    st.dim = chart.dim;
    st.step = chart.step;
    st.center = {chart.frame(iv, first), chart.frame(iv, second)};
    st.nb.resize(static_cast<std::size_t>(chart.dim));
    for (int axis = 0; axis < chart.dim; ++axis) {
        std::array<int, 3> up = iv, dn = iv;
        ++up[static_cast<std::size_t>(axis)];
        --dn[static_cast<std::size_t>(axis)];
        st.nb[static_cast<std::size_t>(axis)] = {
            std::array<LagrangianFrame, 2>{chart.frame(dn, first), chart.frame(up, first)},
            std::array<LagrangianFrame, 2>{chart.frame(dn, second), chart.frame(up, second)}};
    }
    return detail::eta_form_stencil(st, params.K, params, twist);
}

inline EtaFormValue eta_form_at(const SurfaceFamily& surface, int i, int j, int first, int second,
                                const EtaFormParams& params, const GaugeTwist* twist = nullptr) {
    detail::PairStencil st;
    st.space = &surface.space;
    st.dim = 2;
    st.step = {surface.dtheta(), surface.dphi(), 0.0};
    const auto& cs = surface.samples[surface.index(i, j)];
    st.center = {cs[static_cast<std::size_t>(first)], cs[static_cast<std::size_t>(second)]};
    st.nb.resize(2);
    auto frame = [&](int ii, int jj, int which) {
        return surface.samples[surface.index(ii, jj)][static_cast<std::size_t>(which)];
    };
    st.nb[0] = {std::array<LagrangianFrame, 2>{frame(i - 1, j, first), frame(i + 1, j, first)},
                std::array<LagrangianFrame, 2>{frame(i - 1, j, second), frame(i + 1, j, second)}};
    st.nb[1] = {std::array<LagrangianFrame, 2>{frame(i, j - 1, first), frame(i, j + 1, first)},
                std::array<LagrangianFrame, 2>{frame(i, j - 1, second), frame(i, j + 1, second)}};
    return detail::eta_form_stencil(st, params.K, params, twist);
}

// Spectral eta of a pair through the conjugated Galerkin operator: reference
// boundary conditions (L0, I L0), with the potential moving I L0 to L1, then
// the finite-part heat integral over the truncated spectrum.
inline EtaFormValue eta_galerkin(const SymplecticSpace& space, const LagrangianFrame& l0,
                                 const LagrangianFrame& l1, const EtaFormParams& params) {
    const LagrangianFrame il0 = apply_structure(space, l0);
    const ReferenceBasis basis = build_reference_basis(space, l0, il0, params.K);
    const detail::ProfileTables tables = detail::build_profile_tables(basis, params.cut);
    const CMatrix a1 = unitary_log(transport_unitary(space, l1, il0));
    const CMatrix zero = CMatrix::Zero(space.dim(), space.dim());
    CMatrix d = detail::potential_matrix(space, basis, tables, zero, a1);
    for (int a = 0; a < basis.size(); ++a) d(a, a) += basis.lambda[static_cast<std::size_t>(a)];
    const HermitianEig eig = hermitian_eigs(0.5 * (d + d.adjoint()).eval());
    detail::VertexEtaData data;
    data.dim = 0;
    data.mu = eig.values;
    data.mu_min_abs = eig.values.cwiseAbs().minCoeff();
    return detail::integrate_eta(data, params);
}

// ---------------------------------------------------------------------------
// Theorem-level drivers: the cyclic sum eta(L0,L1) + eta(L1,L2) + eta(L2,L0)
// evaluated with local gauges.

inline EtaFormValue eta_sum_at(const FamilyChart& chart, const std::array<int, 3>& iv,
                               const EtaFormParams& params) {
    static constexpr int pairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
    EtaFormValue sum;
    for (const auto& pr : pairs) {
        const EtaFormValue v = eta_form_at(chart, iv, pr[0], pr[1], params);
        if (sum.f2.empty()) sum.f2.assign(v.f2.size(), 0.0);
        sum.f0 += v.f0;
        for (std::size_t c = 0; c < v.f2.size(); ++c) sum.f2[c] += v.f2[c];
        sum.diag.fit_residual_rel = std::max(sum.diag.fit_residual_rel, v.diag.fit_residual_rel);
        sum.diag.imag_residual = std::max(sum.diag.imag_residual, v.diag.imag_residual);
    }
    return sum;
}

inline EtaFormValue eta_sum_at(const SurfaceFamily& surface, int i, int j,
                               const EtaFormParams& params) {
    static constexpr int pairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
    EtaFormValue sum;
    for (const auto& pr : pairs) {
        const EtaFormValue v = eta_form_at(surface, i, j, pr[0], pr[1], params);
        if (sum.f2.empty()) sum.f2.assign(v.f2.size(), 0.0);
        sum.f0 += v.f0;
        for (std::size_t c = 0; c < v.f2.size(); ++c) sum.f2[c] += v.f2[c];
        sum.diag.fit_residual_rel = std::max(sum.diag.fit_residual_rel, v.diag.fit_residual_rel);
        sum.diag.imag_residual = std::max(sum.diag.imag_residual, v.diag.imag_residual);
    }
    return sum;
}

struct ClosednessResult {
    double max_d_residual = 0.0;    // max |d(sum of eta 2-forms)| over the probed lattice
    double degree0_max_dev = 0.0;   // max deviation of the f0 sum from its median
    double degree0_int_dev = 0.0;   // distance of the f0 sum from the Maslov integer
    int maslov = 0;
    std::size_t vertices = 0;
};

// Closedness of the summed eta 2-form on a d = 3 chart: the 2-form field is
// computed with local gauges on the interior lattice and differentiated once
// more; degree 0 must be constant and equal to the Maslov index.
inline ClosednessResult cocycle_closedness(const FamilyChart& chart, const EtaFormParams& params,
                                           int threads = 0) {
    if (chart.dim != 3) throw ContractViolationError("cocycle_closedness: d = 3 chart required");
    const auto masks2 = form_masks(3, 2);
    FormField<double> sum2;
    sum2.dim = 3;
    sum2.degree = 2;
    sum2.comp.assign(masks2.size(), std::vector<double>(chart.vertex_count(), 0.0));
    std::vector<double> sum0(chart.vertex_count(), 0.0);

    std::vector<std::array<int, 3>> inner;
    for (int i0 = 1; i0 < chart.shape[0] - 1; ++i0) {
        for (int i1 = 1; i1 < chart.shape[1] - 1; ++i1) {
            for (int i2 = 1; i2 < chart.shape[2] - 1; ++i2) {
                inner.push_back({i0, i1, i2});
            }
        }
    }
    if (inner.empty()) throw ContractViolationError("cocycle_closedness: chart has no interior");
    parallel_for(inner.size(), [&](std::size_t t) {
        const auto iv = inner[t];
        const EtaFormValue v = eta_sum_at(chart, iv, params);
        const std::size_t vi = chart.index(iv);
        sum0[vi] = v.f0;
        for (std::size_t c = 0; c < masks2.size(); ++c) sum2.comp[c][vi] = v.f2[c];
    }, threads);

    ClosednessResult out;
    out.vertices = inner.size();
    const std::array<int, 3> bp = chart.basepoint;
    out.maslov = maslov_index(chart.space, chart.frame(bp, 0), chart.frame(bp, 1), chart.frame(bp, 2));
    for (const auto& iv : inner) {
        const double f0 = sum0[chart.index(iv)];
        out.degree0_int_dev = std::max(out.degree0_int_dev, std::abs(f0 - out.maslov));
        if (maslov_index(chart.space, chart.frame(iv, 0), chart.frame(iv, 1), chart.frame(iv, 2)) !=
            out.maslov) {
            throw DegenerateError("cocycle_closedness: Maslov index is not constant on the chart");
        }
    }
    double lo = sum0[chart.index(inner.front())], hi = lo;
    for (const auto& iv : inner) {
        const double f0 = sum0[chart.index(iv)];
        lo = std::min(lo, f0);
        hi = std::max(hi, f0);
    }
    out.degree0_max_dev = hi - lo;
    for (const auto& iv : inner) {
        if (!chart.interior(iv, 2)) continue;
        const auto d = exterior_derivative_at(chart, sum2, iv);
        for (double comp : d) out.max_d_residual = std::max(out.max_d_residual, std::abs(comp));
    }
    return out;
}

struct SurfaceCocycleResult {
    double integral = 0.0;
    double max_fit_residual = 0.0;
    double max_imag_residual = 0.0;
    std::vector<double> field;  // d theta ^ d phi coefficient of the eta sum
};

// Integral over the closed surface of the summed eta 2-forms; by the main
// theorem it equals the degree-2 Chern character difference of the splitting
// bundle.
inline SurfaceCocycleResult surface_cocycle_integral(const SurfaceFamily& surface,
                                                     const EtaFormParams& params, int threads = 0) {
    SurfaceCocycleResult out;
    out.field.assign(surface.vertex_count(), 0.0);
    std::vector<double> fits(surface.vertex_count(), 0.0);
    std::vector<double> imags(surface.vertex_count(), 0.0);
    parallel_for(surface.vertex_count(), [&](std::size_t v) {
        const int i = static_cast<int>(v) / surface.nphi;
        const int j = static_cast<int>(v) % surface.nphi;
        const EtaFormValue val = eta_sum_at(surface, i, j, params);
        out.field[v] = val.f2[0];
        fits[v] = val.diag.fit_residual_rel;
        imags[v] = val.diag.imag_residual;
    }, threads);
    for (std::size_t v = 0; v < surface.vertex_count(); ++v) {
        out.max_fit_residual = std::max(out.max_fit_residual, fits[v]);
        out.max_imag_residual = std::max(out.max_imag_residual, imags[v]);
    }
    out.integral = surface_integral_2form(surface, out.field);
    return out;
}

}  // namespace etaform
