// per-block tridiagonal Hamiltonians, exact spectra, and sl(2) reference solutions

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "slpd/block.hpp"
#include "slpd/errors.hpp"
#include "slpd/hypergeometric.hpp"
#include "slpd/structure_function.hpp"

namespace slpd {

// H = a V0 + g V+ + g* V- + C with g = g_mod * exp(i g_phase).
struct HamiltonianParams {
    double a{0.0};
    double g_mod{0.0};
    double g_phase{0.0};
    double C{0.0};

    std::complex<double> g() const { return std::polar(g_mod, g_phase); }
};

// Real symmetric form of H on one block. The phase of g is removed by the diagonal
// unitary D_v = exp(-i v phase): H_real = D H D^dagger.
struct TridiagonalHamiltonian {
    Eigen::VectorXd diag;
    Eigen::VectorXd offdiag;
    double gauge_phase{0.0};

    int dim() const noexcept { return static_cast<int>(diag.size()); }

    // Infinity norm; bounds the spectral radius.
    double norm() const noexcept {
        double best = 0.0;
        const int d = dim();
        for (int v = 0; v < d; ++v) {
            double row = std::abs(diag[v]);
            if (v > 0) row += std::abs(offdiag[v - 1]);
            if (v + 1 < d) row += std::abs(offdiag[v]);
            best = std::max(best, row);
        }
        return best;
    }

    Eigen::MatrixXd dense() const {
        const int d = dim();
        Eigen::MatrixXd h = diag.asDiagonal();
        for (int v = 0; v + 1 < d; ++v) h(v + 1, v) = h(v, v + 1) = offdiag[v];
        return h;
    }

    // Gershgorin interval containing every eigenvalue.
    std::pair<double, double> gershgorin() const noexcept {
        const int d = dim();
        double lo = diag[0], hi = diag[0];
        for (int v = 0; v < d; ++v) {
            double radius = 0.0;
            if (v > 0) radius += std::abs(offdiag[v - 1]);
            if (v + 1 < d) radius += std::abs(offdiag[v]);
            lo = std::min(lo, diag[v] - radius);
            hi = std::max(hi, diag[v] + radius);
        }
        return {lo, hi};
    }
};

// Ascending energies with eigenvectors Q(v, f) = Q_v(E_f) in the real gauge.
struct Spectrum {
    Eigen::VectorXd energies;
    Eigen::MatrixXd amplitudes;
    double gauge_phase{0.0};

    int dim() const noexcept { return static_cast<int>(energies.size()); }

    // Amplitudes in the basis where H carries the phase of g (inverse of the gauge reduction).
    Eigen::MatrixXcd amplitudes_original_gauge() const {
        Eigen::MatrixXcd out = amplitudes.cast<std::complex<double>>();
        for (int v = 0; v < out.rows(); ++v) out.row(v) *= std::polar(1.0, v * gauge_phase);
        return out;
    }
};

inline TridiagonalHamiltonian build_hamiltonian(const Block& block, const StructureFunction& psi,
                                                const HamiltonianParams& params) {
    const int d = block.dim;
    TridiagonalHamiltonian tri;
    tri.diag.resize(d);
    tri.offdiag.resize(std::max(d - 1, 0));
    tri.gauge_phase = params.g_phase;
    for (int v = 0; v < d; ++v) tri.diag[v] = params.C + params.a * (block.l0 + v);
    for (int v = 0; v + 1 < d; ++v) {
        const double value = psi(block.l0 + v + 1);
        if (value < 0.0) {
            std::ostringstream msg;
            msg << "non-unitary block: psi(l0+" << v + 1 << ") = " << value;
            throw DomainError(msg.str());
        }
        tri.offdiag[v] = params.g_mod * std::sqrt(value);
    }
    return tri;
}

namespace detail {

// Modified Gram-Schmidt inside clusters of (numerically) degenerate eigenvalues.
inline void reorthogonalize_clusters(Spectrum& s, double spacing) {
    const int d = s.dim();
    int start = 0;
    while (start < d) {
        int stop = start + 1;
        while (stop < d && s.energies[stop] - s.energies[stop - 1] < spacing) ++stop;
        for (int f = start + 1; f < stop; ++f) {
            for (int p = start; p < f; ++p)
                s.amplitudes.col(f) -= s.amplitudes.col(p).dot(s.amplitudes.col(f)) * s.amplitudes.col(p);
            s.amplitudes.col(f).normalize();
        }
        start = stop;
    }
}

} // namespace detail

// Full eigendecomposition of the real symmetric tridiagonal matrix (implicit-shift QL/QR).
inline Spectrum eigensolve(const TridiagonalHamiltonian& tri) {
    const int d = tri.dim();
    Spectrum s;
    s.gauge_phase = tri.gauge_phase;
    if (d == 1) {
        s.energies = tri.diag;
        s.amplitudes = Eigen::MatrixXd::Identity(1, 1);
        return s;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(tri.diag, tri.offdiag, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "eigensolve: no convergence for d = " << d << " (norm " << tri.norm() << ")";
        throw NumericError(msg.str());
    }
    s.energies = solver.eigenvalues();
    s.amplitudes = solver.eigenvectors();
    // Fix the sign convention: the first nonnegligible component of each column is positive.
    for (int f = 0; f < d; ++f) {
        int lead = 0;
        while (lead + 1 < d && std::abs(s.amplitudes(lead, f)) <= 1e-8) ++lead;
        if (s.amplitudes(lead, f) < 0.0) s.amplitudes.col(f) *= -1.0;
    }
    detail::reorthogonalize_clusters(s, 1e-12 * std::max(tri.norm(), 1e-300));
    return s;
}

// Number of eigenvalues strictly below x, from the signs of the ratios
// q_v = -P_{v+1}(x)/P_v(x) of the characteristic three-term recurrence
// P_{v+1} = (x - diag[v]) P_v - offdiag[v-1]^2 P_{v-1}.
inline int sturm_count(const TridiagonalHamiltonian& tri, double x) noexcept {
    const int d = tri.dim();
    const double tiny = std::numeric_limits<double>::min() * 1e6;
    int count = 0;
    double q = tri.diag[0] - x;
    for (int v = 0; v < d; ++v) {
        if (v > 0) {
            const double e = tri.offdiag[v - 1];
            q = (tri.diag[v] - x) - e * e / q;
        }
        if (q == 0.0) q = -tiny;
        if (q < 0.0) ++count;
    }
    return count;
}

// Roots of the spectral polynomial P_d by Sturm-count bisection on the Gershgorin bracket.
// Every count narrows the brackets of all roots it separates. Independent of eigensolve;
// used as its oracle.
inline std::vector<double> spectral_polynomial_roots(const TridiagonalHamiltonian& tri,
                                                     double abs_tol = 1e-12) {
    const int d = tri.dim();
    auto [lo0, hi0] = tri.gershgorin();
    const double pad = 1e-12 * std::max(std::abs(lo0), std::abs(hi0));
    std::vector<double> lo(d, lo0 - pad), hi(d, hi0 + pad), roots(d);
    for (int k = 0; k < d; ++k) {
        if (k > 0) lo[k] = std::max(lo[k], roots[k - 1]);
        for (int iter = 0; iter < 2000; ++iter) {
            const double width = hi[k] - lo[k];
            const double floor = 4.0 * std::numeric_limits<double>::epsilon() *
                                 std::max(std::abs(lo[k]), std::abs(hi[k]));
            if (width <= std::max(abs_tol, floor)) break;
            const double mid = lo[k] + 0.5 * width;
            if (mid <= lo[k] || mid >= hi[k]) break;
            const int count = sturm_count(tri, mid);
            // roots 0..count-1 lie below mid, the rest at or above it
            for (int i = k; i < count; ++i) hi[i] = std::min(hi[i], mid);
            for (int i = std::max(k, count); i < d; ++i) {
                if (lo[i] >= mid) break;
                lo[i] = mid;
            }
        }
        roots[k] = 0.5 * (lo[k] + hi[k]);
    }
    return roots;
}

struct AmplitudeSolution {
    Eigen::VectorXd amplitudes;  // normalized Q_v
    double closure_residual{0.0}; // residual of the last recurrence row, after normalization
};

// Propagates E Q_v = diag[v] Q_v + offdiag[v-1] Q_{v-1} + offdiag[v] Q_{v+1} from the seed Q = 1
// at the first index of each chain segment separated by vanishing couplings, and keeps the
// segment with the smallest closure residual.
inline AmplitudeSolution amplitude_recurrence(const TridiagonalHamiltonian& tri, double energy) {
    const int d = tri.dim();
    const double coupling_floor = 1e-300;

    AmplitudeSolution best;
    best.closure_residual = std::numeric_limits<double>::infinity();
    int start = 0;
    while (start < d) {
        int stop = start;
        while (stop + 1 < d && std::abs(tri.offdiag[stop]) > coupling_floor) ++stop;

        Eigen::VectorXd q = Eigen::VectorXd::Zero(d);
        q[start] = 1.0;
        for (int v = start; v < stop; ++v) {
            double rhs = (energy - tri.diag[v]) * q[v];
            if (v > start) rhs -= tri.offdiag[v - 1] * q[v - 1];
            q[v + 1] = rhs / tri.offdiag[v];
            const double big = q.cwiseAbs().maxCoeff();
            if (big > 1e100) q /= big;
        }
        q /= q.norm();
        double closure = (energy - tri.diag[stop]) * q[stop];
        if (stop > start) closure -= tri.offdiag[stop - 1] * q[stop - 1];
        closure = std::abs(closure);
        if (closure < best.closure_residual) {
            best.closure_residual = closure;
            best.amplitudes = q;
        }
        start = stop + 1;
    }
    return best;
}

// Quasi-equidistant sl(2) reference: the deformed generators are replaced by su(2) ones,
// giving E_v = C + a(l0 + j) + (-j + v) sqrt(a^2 + 4|g|^2).
inline Spectrum sl2_reference_spectrum(const Block& block, const HamiltonianParams& params) {
    const int d = block.dim;
    const double j = block.j();
    TridiagonalHamiltonian su2;
    su2.diag.resize(d);
    su2.offdiag.resize(std::max(d - 1, 0));
    su2.gauge_phase = params.g_phase;
    for (int v = 0; v < d; ++v) su2.diag[v] = params.a * (v - j);
    for (int v = 0; v + 1 < d; ++v) su2.offdiag[v] = params.g_mod * std::sqrt((v + 1.0) * (2.0 * j - v));
    Spectrum s = eigensolve(su2);
    const double omega = std::hypot(params.a, 2.0 * params.g_mod);
    for (int v = 0; v < d; ++v) s.energies[v] = params.C + params.a * (block.l0 + j) + (v - j) * omega;
    return s;
}

// Components <f| S_Y(xi)^dagger |v> of the SL(2) coherent state built on basis vector v,
// xi = r exp(i theta), from the closed hypergeometric expansion. Terms with f < v use the
// regularized F~ (1/(f-v)! absorbed into 1/Gamma(f-v+1)).
inline Eigen::VectorXcd gcs_overlaps(const Block& block, int v, double r, double theta) {
    const int d = block.dim;
    const long two_j = block.two_j();
    if (v < 0 || v >= d) throw DomainError("gcs_overlaps: level index out of range");
    const double cos_r = std::cos(r);
    if (std::abs(cos_r) < 1e-300) throw DomainError("gcs_overlaps: cos r = 0");
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(d);
    const double tan_r = std::tan(r);
    if (tan_r == 0.0) {
        out[v] = 1.0;
        return out;
    }
    const double x = std::sin(r) * std::sin(r);
    const double b = static_cast<double>(two_j - v + 1);
    const double log_cos2 = std::log(cos_r * cos_r);
    const double log_tan = std::log(std::abs(tan_r));
    const int tan_sign = tan_r > 0 ? -1 : 1; // sign of (-tan r)
    for (int f = 0; f < d; ++f) {
        const SignedLog hyp = reg_hyp_2F1_log(v, b, f - v + 1, x);
        if (hyp.sign == 0) continue;
        const int power = f - v;
        const double log_mag = 0.5 * (two_j - 2.0 * v) * log_cos2 + power * log_tan +
                               0.5 * (log_factorial(two_j - v) + log_factorial(f) -
                                      log_factorial(two_j - f) - log_factorial(v)) +
                               hyp.log_abs;
        const int sign = hyp.sign * ((std::abs(power) % 2 == 1) ? tan_sign : 1);
        out[f] = std::polar(sign * std::exp(log_mag), power * theta);
    }
    return out;
}

} // namespace slpd
