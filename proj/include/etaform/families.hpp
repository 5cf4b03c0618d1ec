// Families of Lagrangian subspaces over parameter charts and closed-surface
// meshes: gauge data U_i(b), A_i(b), the cutoff profiles, finite-difference
// exterior calculus, the splitting bundle L0 = L0+ (+) L0- with its Chern
// character forms, plaquette-based lattice Chern numbers, and the built-in
// test families.
#pragma once

#include "etaform/maslov.hpp"

#include <array>
#include <vector>

namespace etaform {

// ---------------------------------------------------------------------------
// Charts: regular lattices over a rectangle in R^d, d <= 3, vertex-major
// storage with row-major vertex order.

struct FamilyChart {
    int dim = 0;
    std::array<int, 3> shape{1, 1, 1};
    std::array<double, 3> step{0.0, 0.0, 0.0};
    std::array<int, 3> basepoint{0, 0, 0};
    SymplecticSpace space;
    int frames_per_vertex = 2;
    std::vector<std::vector<LagrangianFrame>> samples;

    std::size_t vertex_count() const {
        std::size_t n = 1;
        for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(shape[static_cast<std::size_t>(a)]);
        return n;
    }

    std::size_t index(const std::array<int, 3>& iv) const {
        std::size_t idx = 0;
        for (int a = 0; a < dim; ++a) {
            const int na = shape[static_cast<std::size_t>(a)];
            const int i = iv[static_cast<std::size_t>(a)];
            if (i < 0 || i >= na) throw OutOfDomainError("FamilyChart: vertex outside the grid");
            idx = idx * static_cast<std::size_t>(na) + static_cast<std::size_t>(i);
        }
        return idx;
    }

    bool interior(const std::array<int, 3>& iv, int margin = 1) const {
        for (int a = 0; a < dim; ++a) {
            const int i = iv[static_cast<std::size_t>(a)];
            if (i < margin || i >= shape[static_cast<std::size_t>(a)] - margin) return false;
        }
        return true;
    }

    const LagrangianFrame& frame(const std::array<int, 3>& iv, int which) const {
        return samples[index(iv)][static_cast<std::size_t>(which)];
    }
};

// Latitude-longitude mesh on S^2 with cell-centered vertices; the poles are
// excluded and stencils reaching past a pole wrap to the antipodal column.
struct SurfaceFamily {
    int ntheta = 0;  // polar rows
    int nphi = 0;    // azimuthal columns, must be even for the polar wrap
    SymplecticSpace space;
    int frames_per_vertex = 3;
    std::vector<std::vector<LagrangianFrame>> samples;  // index = i * nphi + j

    double dtheta() const { return kPi / ntheta; }
    double dphi() const { return 2.0 * kPi / nphi; }
    double theta(int i) const { return (i + 0.5) * dtheta(); }
    double phi(int j) const { return j * dphi(); }
    std::size_t vertex_count() const { return static_cast<std::size_t>(ntheta * nphi); }

    std::pair<int, int> wrap(int i, int j) const {
        if (i < 0) {
            i = -i - 1;
            j += nphi / 2;
        } else if (i >= ntheta) {
            i = 2 * ntheta - 1 - i;
            j += nphi / 2;
        }
        j %= nphi;
        if (j < 0) j += nphi;
        return {i, j};
    }

    std::size_t index(int i, int j) const {
        auto [wi, wj] = wrap(i, j);
        return static_cast<std::size_t>(wi * nphi + wj);
    }

    // Area weights, summing to 4 pi.
    double area_weight(int i) const { return std::sin(theta(i)) * dtheta() * dphi(); }
};

// ---------------------------------------------------------------------------
// Gauge data over a chart: U_i(b) L_i(b) = L_i(b0), U_i(b0) = 1,
// A_i(b) = log U_i(b) through the principal branch.

struct GaugeData {
    int which = 0;
    std::vector<CMatrix> U;
    std::vector<CMatrix> A;
};

inline GaugeData build_gauge(const FamilyChart& chart, int which) {
    GaugeData g;
    g.which = which;
    const std::size_t n = chart.vertex_count();
    g.U.resize(n);
    g.A.resize(n);
    const LagrangianFrame& base =
        chart.samples[chart.index(chart.basepoint)][static_cast<std::size_t>(which)];
    for (std::size_t v = 0; v < n; ++v) {
        const LagrangianFrame& lv = chart.samples[v][static_cast<std::size_t>(which)];
        g.U[v] = transport_unitary(chart.space, lv, base);
        g.A[v] = unitary_log(g.U[v], tolerances().gauge_branch_margin);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Cutoff profiles: chi0 = 1 on [0, plateau0], 0 beyond support0;
// chi1(t) mirrors chi0(1 - t). Built from the exp(-1/x) smoothstep, so the
// plateaus are exact.

struct CutoffPair {
    double plateau0 = 0.2;
    double support0 = 0.4;
    double support1 = 0.6;
    double plateau1 = 0.8;

    static double bump(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }
    static double bump_prime(double x) { return x > 0.0 ? std::exp(-1.0 / x) / (x * x) : 0.0; }
    static double smoothstep(double x) {
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return 1.0;
        const double a = bump(x), b = bump(1.0 - x);
        return a / (a + b);
    }
    static double smoothstep_prime(double x) {
        if (x <= 0.0 || x >= 1.0) return 0.0;
        const double a = bump(x), b = bump(1.0 - x);
        const double ap = bump_prime(x), bp = bump_prime(1.0 - x);
        const double denom = (a + b) * (a + b);
        return (ap * b + a * bp) / denom;
    }

    double chi0(double t) const { return smoothstep((support0 - t) / (support0 - plateau0)); }
    double dchi0(double t) const {
        return -smoothstep_prime((support0 - t) / (support0 - plateau0)) / (support0 - plateau0);
    }
    double chi1(double t) const { return smoothstep((t - support1) / (plateau1 - support1)); }
    double dchi1(double t) const {
        return smoothstep_prime((t - support1) / (plateau1 - support1)) / (plateau1 - support1);
    }
};

inline CutoffPair cutoffs() { return CutoffPair{}; }

// A second admissible profile, used to exercise the gauge-independence lemma.
inline CutoffPair alternate_cutoffs() { return CutoffPair{0.10, 0.45, 0.55, 0.90}; }

// ---------------------------------------------------------------------------
// Finite-difference exterior calculus on chart lattices. Central differences,
// interior vertices only.

inline std::vector<unsigned> form_masks(int dim, int degree) {
    std::vector<unsigned> masks;
    for (unsigned m = 0; m < (1u << dim); ++m) {
        if (std::popcount(m) == degree) masks.push_back(m);
    }
    return masks;
}

template <typename T>
struct FormField {
    int dim = 0;
    int degree = 0;
    std::vector<std::vector<T>> comp;  // comp[ci][vertex], ci indexes form_masks(dim, degree)
};

template <typename T>
T fd_partial_at(const FamilyChart& chart, const std::vector<T>& field,
                const std::array<int, 3>& iv, int axis) {
    if (!chart.interior(iv)) throw OutOfDomainError("fd_partial_at: boundary vertex");
    std::array<int, 3> up = iv, dn = iv;
    ++up[static_cast<std::size_t>(axis)];
    --dn[static_cast<std::size_t>(axis)];
    const double h = chart.step[static_cast<std::size_t>(axis)];
    return (field[chart.index(up)] - field[chart.index(dn)]) / (2.0 * h);
}

// Components of (d field) at one interior vertex, ordered by form_masks.
template <typename T>
std::vector<T> exterior_derivative_at(const FamilyChart& chart, const FormField<T>& field,
                                      const std::array<int, 3>& iv) {
    const auto in_masks = form_masks(chart.dim, field.degree);
    const auto out_masks = form_masks(chart.dim, field.degree + 1);
    std::vector<T> out;
    out.reserve(out_masks.size());
    for (unsigned mask : out_masks) {
        T acc{};
        bool first = true;
        int pos = 0;
        for (int axis = 0; axis < chart.dim; ++axis) {
            if (!(mask & (1u << axis))) continue;
            const unsigned rest = mask & ~(1u << axis);
            const std::size_t ci =
                static_cast<std::size_t>(std::find(in_masks.begin(), in_masks.end(), rest) -
                                         in_masks.begin());
            T term = fd_partial_at(chart, field.comp[ci], iv, axis);
            if (pos % 2 == 1) term = -term;
            if (first) {
                acc = term;
                first = false;
            } else {
                acc += term;
            }
            ++pos;
        }
        out.push_back(acc);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splitting bundle L0 = L0+ (+) L0- induced by the triple form, as projector
// and frame fields over the vertex list.

struct SplitBundle {
    int rank_plus = 0;
    int rank_minus = 0;
    std::vector<CMatrix> proj_plus;
    std::vector<CMatrix> proj_minus;
    std::vector<CMatrix> frame_plus;
    std::vector<CMatrix> frame_minus;
};

inline SplitBundle split_bundle(const SymplecticSpace& space,
                                const std::vector<std::vector<LagrangianFrame>>& samples) {
    SplitBundle out;
    out.proj_plus.reserve(samples.size());
    out.proj_minus.reserve(samples.size());
    out.frame_plus.reserve(samples.size());
    out.frame_minus.reserve(samples.size());
    bool first = true;
    for (const auto& frames : samples) {
        if (frames.size() < 3) throw ContractViolationError("split_bundle: triple family required");
        const SplitFrames split = split_l0(space, frames[0], frames[1], frames[2]);
        const int n = static_cast<int>(split.Fplus.cols());
        const int m = static_cast<int>(split.Fminus.cols());
        if (first) {
            out.rank_plus = n;
            out.rank_minus = m;
            first = false;
        } else if (n != out.rank_plus || m != out.rank_minus) {
            throw DegenerateError("split_bundle: rank jump across the family");
        }
        out.frame_plus.push_back(split.Fplus);
        out.frame_minus.push_back(split.Fminus);
        out.proj_plus.push_back(split.Fplus * split.Fplus.adjoint());
        out.proj_minus.push_back(split.Fminus * split.Fminus.adjoint());
    }
    return out;
}

inline SplitBundle split_bundle(const FamilyChart& chart) {
    return split_bundle(chart.space, chart.samples);
}

inline SplitBundle split_bundle(const SurfaceFamily& surface) {
    return split_bundle(surface.space, surface.samples);
}

// ---------------------------------------------------------------------------
// Chern character of a projector field: degree 0 is the rank, degree 2 is
// (i/2pi) tr(P dP dP) per 2-form basis element. Chart version (interior
// vertices carry values, boundary entries are zero).

struct ChernForm {
    int rank = 0;
    FormField<double> degree2;
    double imag_residual = 0.0;
};

namespace detail {

inline ChernForm chern_from_partials(
    int dim, std::size_t vertex_count,
    const std::function<bool(std::size_t)>& valid,
    const std::function<CMatrix(std::size_t)>& proj,
    const std::function<CMatrix(std::size_t, int)>& partial, int rank) {
    ChernForm out;
    out.rank = rank;
    const auto masks = form_masks(dim, 2);
    out.degree2.dim = dim;
    out.degree2.degree = 2;
    out.degree2.comp.assign(masks.size(), std::vector<double>(vertex_count, 0.0));
    for (std::size_t v = 0; v < vertex_count; ++v) {
        if (!valid(v)) continue;
        const CMatrix p = proj(v);
        std::vector<CMatrix> dp(static_cast<std::size_t>(dim));
        for (int axis = 0; axis < dim; ++axis) dp[static_cast<std::size_t>(axis)] = partial(v, axis);
        for (std::size_t ci = 0; ci < masks.size(); ++ci) {
            const int mu = std::countr_zero(masks[ci]);
            const int nu = std::countr_zero(masks[ci] & (masks[ci] - 1));
            // masks are bitmasks; bit positions ascending: mu < nu
            const int lo = std::min(mu, nu), hi = std::max(mu, nu);
            const Complex tr = (p * (dp[static_cast<std::size_t>(lo)] * dp[static_cast<std::size_t>(hi)] -
                                     dp[static_cast<std::size_t>(hi)] * dp[static_cast<std::size_t>(lo)]))
                                   .trace();
            const Complex val = Complex(0, 1) / (2.0 * kPi) * tr;
            out.degree2.comp[ci][v] = val.real();
            out.imag_residual = std::max(out.imag_residual, std::abs(val.imag()));
        }
    }
    return out;
}

}  // namespace detail

inline ChernForm chern_character_form(const FamilyChart& chart, const std::vector<CMatrix>& proj,
                                      int rank) {
    std::vector<std::array<int, 3>> coords(chart.vertex_count());
    for (int i0 = 0; i0 < chart.shape[0]; ++i0) {
        for (int i1 = 0; i1 < (chart.dim > 1 ? chart.shape[1] : 1); ++i1) {
            for (int i2 = 0; i2 < (chart.dim > 2 ? chart.shape[2] : 1); ++i2) {
                std::array<int, 3> iv{i0, i1, i2};
                coords[chart.index(iv)] = iv;
            }
        }
    }
    return detail::chern_from_partials(
        chart.dim, chart.vertex_count(),
        [&](std::size_t v) { return chart.interior(coords[v]); },
        [&](std::size_t v) { return proj[v]; },
        [&](std::size_t v, int axis) { return fd_partial_at(chart, proj, coords[v], axis); }, rank);
}

// Surface version: axis 0 = theta, axis 1 = phi; stencils wrap through the
// poles and around the azimuth, so every vertex is interior.
inline ChernForm chern_character_form(const SurfaceFamily& surface,
                                      const std::vector<CMatrix>& proj, int rank) {
    return detail::chern_from_partials(
        2, surface.vertex_count(), [](std::size_t) { return true; },
        [&](std::size_t v) { return proj[v]; },
        [&](std::size_t v, int axis) {
            const int i = static_cast<int>(v) / surface.nphi;
            const int j = static_cast<int>(v) % surface.nphi;
            CMatrix up, dn;
            double h = 0.0;
            if (axis == 0) {
                up = proj[surface.index(i + 1, j)];
                dn = proj[surface.index(i - 1, j)];
                h = surface.dtheta();
            } else {
                up = proj[surface.index(i, j + 1)];
                dn = proj[surface.index(i, j - 1)];
                h = surface.dphi();
            }
            return CMatrix(((up - dn) / (2.0 * h)));
        },
        rank);
}

// Integral of a 2-form field over the closed surface in (theta, phi)
// coordinates; the single component is the coefficient of dtheta ^ dphi.
inline double surface_integral_2form(const SurfaceFamily& surface, const std::vector<double>& comp) {
    std::vector<double> cells(comp.size());
    const double cell = surface.dtheta() * surface.dphi();
    for (std::size_t v = 0; v < comp.size(); ++v) cells[v] = comp[v] * cell;
    return pairwise_sum(cells);
}

// ---------------------------------------------------------------------------
// Lattice Chern number: plaquette phases arg det of the cycle of frame
// overlaps, plus the two polar-cap cycles. The plaquette traversal follows
// the (theta, phi) orientation, which matches the complex orientation of
// CP^1 under [cos(theta/2) : sin(theta/2) e^{i phi}].

struct LatticeChern {
    int chern = 0;
    double residual = 0.0;       // distance of the phase sum / 2 pi from the integer
    double max_plaquette = 0.0;  // largest single cycle phase
};

inline LatticeChern lattice_chern_number(const SurfaceFamily& surface,
                                         const std::vector<CMatrix>& frames) {
    auto overlap = [&](std::size_t a, std::size_t b) { return CMatrix(frames[a].adjoint() * frames[b]); };
    auto cycle_phase = [&](const std::vector<std::size_t>& cycle) {
        CMatrix prod = overlap(cycle[0], cycle[1]);
        for (std::size_t k = 1; k + 1 < cycle.size(); ++k) prod = prod * overlap(cycle[k], cycle[k + 1]);
        const Complex det = prod.determinant();
        if (std::abs(det) < 1e-12) throw DegenerateError("lattice_chern_number: singular overlap");
        return std::arg(det);
    };

    std::vector<double> phases;
    double max_phase = 0.0;
    for (int i = 0; i + 1 < surface.ntheta; ++i) {
        for (int j = 0; j < surface.nphi; ++j) {
            const double p = cycle_phase({surface.index(i, j), surface.index(i + 1, j),
                                          surface.index(i + 1, j + 1), surface.index(i, j + 1),
                                          surface.index(i, j)});
            phases.push_back(p);
            max_phase = std::max(max_phase, std::abs(p));
        }
    }
    // North cap: ring at i = 0 traversed with increasing phi; south cap at
    // i = ntheta - 1 with decreasing phi. Each shared link is then used once
    // in each direction across the mesh.
    std::vector<std::size_t> north, south;
    for (int j = 0; j <= surface.nphi; ++j) north.push_back(surface.index(0, j));
    for (int j = surface.nphi; j >= 0; --j) south.push_back(surface.index(surface.ntheta - 1, j));
    for (const auto& cap : {north, south}) {
        const double p = cycle_phase(cap);
        phases.push_back(p);
        max_phase = std::max(max_phase, std::abs(p));
    }
    if (max_phase > tolerances().plaquette_phase) {
        throw LargeResidualError("lattice_chern_number: plaquette phase too large, refine the mesh");
    }
    const double total = pairwise_sum(phases) / (2.0 * kPi);
    const int rounded = static_cast<int>(std::lround(total));
    LatticeChern out{rounded, std::abs(total - rounded), max_phase};
    if (out.residual >= tolerances().chern_rounding) {
        throw LargeResidualError("lattice_chern_number: rounding residual too large");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Built-in families.

// d = 1 pair family: L0(b) = C(e^{i b}, 1) rotating against the fixed
// L1 = C(-1, 1), over b in [-halfwidth, halfwidth].
inline FamilyChart rotating_l1_family(int n, double halfwidth = 0.5) {
    if (n < 3 || n % 2 == 0) throw ContractViolationError("rotating_l1_family: need odd n >= 3");
    FamilyChart chart;
    chart.dim = 1;
    chart.shape = {n, 1, 1};
    chart.step = {2.0 * halfwidth / (n - 1), 0.0, 0.0};
    chart.basepoint = {n / 2, 0, 0};
    chart.space = standard_space(1);
    chart.frames_per_vertex = 2;
    chart.samples.resize(static_cast<std::size_t>(n));
    const LagrangianFrame l1 =
        lagrangian_from_graph(chart.space, GraphUnitary{(CMatrix(1, 1) << Complex(-1, 0)).finished()});
    for (int i = 0; i < n; ++i) {
        const double b = -halfwidth + i * chart.step[0];
        const CMatrix phi = (CMatrix(1, 1) << std::polar(1.0, -b)).finished();
        chart.samples[static_cast<std::size_t>(i)] = {
            lagrangian_from_graph(chart.space, GraphUnitary{phi}), l1};
    }
    return chart;
}

// d = 3 triple family of rotating l = 1 Lagrangians with analytic, mildly
// nonlinear circle parameters; pairwise transverse over the default chart.
inline FamilyChart three_param_test_family(int n, double halfwidth = 0.4) {
    if (n < 3 || n % 2 == 0) throw ContractViolationError("three_param_test_family: need odd n >= 3");
    FamilyChart chart;
    chart.dim = 3;
    chart.shape = {n, n, n};
    const double h = 2.0 * halfwidth / (n - 1);
    chart.step = {h, h, h};
    chart.basepoint = {n / 2, n / 2, n / 2};
    chart.space = standard_space(1);
    chart.frames_per_vertex = 3;
    chart.samples.resize(chart.vertex_count());
    auto angle0 = [](double b1, double b2, double b3) {
        return 0.50 * b1 + 0.15 * b2 + 0.10 * b3 + 0.20 * b1 * b2 + 0.10 * b3 * b3;
    };
    auto angle1 = [](double b1, double b2, double b3) {
        return 2.0 * kPi / 3.0 + 0.10 * b1 - 0.40 * b2 + 0.20 * b3 + 0.15 * b2 * b3 + 0.10 * b1 * b1;
    };
    auto angle2 = [](double b1, double b2, double b3) {
        return 4.0 * kPi / 3.0 + 0.20 * b1 + 0.10 * b2 - 0.50 * b3 + 0.15 * b1 * b3 + 0.10 * b2 * b2;
    };
    for (int i0 = 0; i0 < n; ++i0) {
        for (int i1 = 0; i1 < n; ++i1) {
            for (int i2 = 0; i2 < n; ++i2) {
                const double b1 = -halfwidth + i0 * h;
                const double b2 = -halfwidth + i1 * h;
                const double b3 = -halfwidth + i2 * h;
                std::array<int, 3> iv{i0, i1, i2};
                auto frame = [&](double a) {
                    const CMatrix phi = (CMatrix(1, 1) << std::polar(1.0, -a)).finished();
                    return lagrangian_from_graph(chart.space, GraphUnitary{phi});
                };
                chart.samples[chart.index(iv)] = {frame(angle0(b1, b2, b3)),
                                                  frame(angle1(b1, b2, b3)),
                                                  frame(angle2(b1, b2, b3))};
            }
        }
    }
    return chart;
}

// Tautological line of [cos(theta/2) : sin(theta/2) e^{i phi}] in C^2.
inline CVector tautological_point(double theta, double phi) {
    CVector z(2);
    z(0) = std::cos(0.5 * theta);
    z(1) = std::polar(std::sin(0.5 * theta), phi);
    return z;
}

// The paper's example over a projective line: V = C^4 with the standard
// structure, L0 the graph of phi = 1, L1 = I L0, and L2(b) the Lagrangian
// with BI-form 2 z z* - 1 on L0 (the quadratic form diag(1,-1) with respect
// to the splitting L0 = T_b (+) T_b-perp).
inline SurfaceFamily cp2_example(int ntheta, int nphi) {
    if (ntheta < 2 || nphi < 4 || nphi % 2 != 0) {
        throw ContractViolationError("cp2_example: need ntheta >= 2 and even nphi >= 4");
    }
    SurfaceFamily surface;
    surface.ntheta = ntheta;
    surface.nphi = nphi;
    surface.space = standard_space(2);
    surface.frames_per_vertex = 3;
    surface.samples.resize(surface.vertex_count());
    const LagrangianFrame l0 =
        lagrangian_from_graph(surface.space, GraphUnitary{CMatrix::Identity(2, 2)});
    const LagrangianFrame il0 = apply_structure(surface.space, l0);
    for (int i = 0; i < ntheta; ++i) {
        for (int j = 0; j < nphi; ++j) {
            const CVector z = tautological_point(surface.theta(i), surface.phi(j));
            const CMatrix q = 2.0 * (z * z.adjoint()) - CMatrix::Identity(2, 2);
            const LagrangianFrame l2 = lagrangian_from_il0_graph(surface.space, l0, q);
            surface.samples[static_cast<std::size_t>(i * nphi + j)] = {l0, il0, l2};
        }
    }
    return surface;
}

// Tautological-line projector/frame fields over the same mesh, the reference
// bundle for lattice Chern tests.
inline std::vector<CMatrix> tautological_frames(const SurfaceFamily& surface) {
    std::vector<CMatrix> frames(surface.vertex_count());
    for (int i = 0; i < surface.ntheta; ++i) {
        for (int j = 0; j < surface.nphi; ++j) {
            frames[static_cast<std::size_t>(i * surface.nphi + j)] =
                tautological_point(surface.theta(i), surface.phi(j));
        }
    }
    return frames;
}

}  // namespace etaform
