// Shared substrate: scalar/matrix aliases, error taxonomy, central tolerance
// block, deterministic RNG, pairwise summation, quadrature nodes, thread pool.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace etaform {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Error taxonomy. Mathematical degeneracy is kept distinct from contract
// violations so the CLI can map them to different exit codes.

struct ContractViolationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Non-transverse configuration (or an operation that requires one to be).
struct DegenerateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Unitary logarithm hit the branch cut; the caller must shrink the chart.
struct BranchCutError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AmbiguousError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OutOfDomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LargeResidualError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PoorFitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Central tolerance block. Every run report echoes these values.

struct Tolerances {
    double hermiticity = 1e-9;        // relative, on ||M - M*||
    double eig_reconstruction = 1e-10; // relative, dims <= 1024
    double unitary = 1e-9;            // on ||U*U - 1||
    double branch_cut_margin = 1e-6;  // eigenphase distance from pi
    double gauge_branch_margin = 1e-3; // germ smallness for chart gauges
    double transversality = 1e-8;     // Degenerate threshold
    double lagrangian_residual = 1e-9; // on ||F*(I F)||
    double subspace_match = 1e-9;     // projector distance
    double divided_difference = 1e-6; // series fallback threshold
    double signature_rel = 1e-8;      // |eigenvalue| floor, relative to ||Q||
    double chern_rounding = 0.05;     // lattice Chern residual
    double plaquette_phase = kPi / 2; // LargeResidual threshold
    double pf_fit_rel = 1e-3;         // PoorFit threshold
};

inline const Tolerances& tolerances() {
    static const Tolerances tol{};
    return tol;
}

// ---------------------------------------------------------------------------
// Deterministic RNG. Box-Muller on explicit 53-bit uniforms so streams do not
// depend on the standard library's distribution internals.

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        have_spare_ = true;
        spare_ = r * std::sin(2.0 * kPi * u2);
        return r * std::cos(2.0 * kPi * u2);
    }

    Complex cnormal() { return Complex(normal(), normal()); }

    std::uint64_t bits() { return gen_(); }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Pairwise (binary tree) summation: reproducible independent of thread count
// once the element order is fixed.

template <typename T>
T pairwise_sum(std::span<const T> xs) {
    const std::size_t n = xs.size();
    if (n == 0) return T{};
    if (n <= 8) {
        T acc = xs[0];
        for (std::size_t i = 1; i < n; ++i) acc += xs[i];
        return acc;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

template <typename T>
T pairwise_sum(const std::vector<T>& xs) {
    return pairwise_sum(std::span<const T>(xs.data(), xs.size()));
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.

struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline const Quadrature& gauss_legendre(int n) {
    static std::vector<Quadrature> cache(129);
    if (n < 1 || n > 128) throw std::invalid_argument("gauss_legendre: order out of range");
    Quadrature& q = cache[static_cast<std::size_t>(n)];
    if (!q.nodes.empty()) return q;
    q.nodes.resize(static_cast<std::size_t>(n));
    q.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        q.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        q.weights[static_cast<std::size_t>(n - 1 - i)] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    return q;
}

// ---------------------------------------------------------------------------
// Work-queue parallel map over [0, n). Results must be written to
// caller-owned slots indexed by task id so reductions stay deterministic.

inline int default_thread_count() {
    if (const char* env = std::getenv("ETAFORM_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                         int threads = 0) {
    if (threads <= 0) threads = default_thread_count();
    if (threads == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int nw = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    pool.reserve(static_cast<std::size_t>(nw));
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int w = 0; w < nw; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    body(i);
                } catch (...) {
                    std::scoped_lock lock(error_mutex);
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed.load()) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// FNV-1a digest for run reports.

inline std::uint64_t fnv1a(std::span<const unsigned char> bytes,
                           std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s) {
    return fnv1a(std::span<const unsigned char>(
        reinterpret_cast<const unsigned char*>(s.data()), s.size()));
}

}  // namespace etaform
