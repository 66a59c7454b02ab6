// the three-wave mixing model
//   H = w1 N1 + w2 N2 + w3 N3 + g a1+ a2+ a3 + g* a1 a2 a3+
// as a direct sum of su_pd(2) blocks with a cubic structure function.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <string>
#include <vector>

#include "slpd/block.hpp"
#include "slpd/exact_solver.hpp"
#include "slpd/structure_function.hpp"

namespace slpd::three_boson {

struct Params {
    double omega1{1.0};
    double omega2{1.0};
    double omega3{2.0};
    double g_mod{1.0};
    double g_phase{0.0};
};

enum class Sign { plus, minus };

// Block generated from |k,0,m> (plus) or |0,k,m> (minus). Basis vector v is
// |k+v, v, m-v> (plus) or |v, k+v, m-v> (minus); the dimension is m+1.
struct BlockLabel {
    int k{0};
    Sign sign{Sign::plus};
    int m{0};

    int dim() const noexcept { return m + 1; }
    int r1() const noexcept { return sign == Sign::plus ? k : -k; }
    // 3 R2 = N1 + N2 + 2 N3 and 3 V0 = N1 + N2 - N3 on the lowest vector, kept as integers.
    int three_r2() const noexcept { return k + 2 * m; }
    int three_l0() const noexcept { return k - m; }

    std::array<int, 3> fock(int v) const noexcept {
        return sign == Sign::plus ? std::array<int, 3>{k + v, v, m - v}
                                  : std::array<int, 3>{v, k + v, m - v};
    }

    std::string id() const {
        return "k" + std::to_string(k) + (sign == Sign::plus ? "+" : "-") + "m" + std::to_string(m);
    }

    friend bool operator==(const BlockLabel&, const BlockLabel&) = default;
};

// Canonical label: for k = 0 the sign carries no information and is normalized to plus.
inline BlockLabel make_label(int k, Sign sign, int m) {
    if (k < 0 || m < 0) throw DomainError("three_boson: k and m must be nonnegative");
    return {k, k == 0 ? Sign::plus : sign, m};
}

// Label and position v of the block containing the Fock state |n1, n2, n3>.
inline std::pair<BlockLabel, int> locate(int n1, int n2, int n3) {
    const int v = std::min(n1, n2);
    const int k = std::abs(n1 - n2);
    return {make_label(k, n1 >= n2 ? Sign::plus : Sign::minus, n3 + v), v};
}

struct StructureData {
    StructureFunction psi;
    double l0{0.0};
};

// psi_3(V0) = 1/4 (2V0 + R2 - R1)(2V0 + R1 + R2)(-V0 + R2 + 1) = -(V0 - l_a)(V0 - l_b)(V0 - l_c),
// roots written with a common denominator of 3 so that psi(l0) vanishes exactly.
inline StructureData psi3_for_block(const BlockLabel& label) {
    const double k = label.k, m = label.m;
    const double low = (k - m) / 3.0;                // (R1 - R2)/2 for plus, -(R1 + R2)/2 for minus
    const double mid = -(2.0 * k + m) / 3.0;         // the other of the two
    const double top = (k + 2.0 * m + 3.0) / 3.0;    // R2 + 1
    std::vector<double> roots = label.sign == Sign::plus ? std::vector<double>{low, mid, top}
                                                         : std::vector<double>{mid, low, top};
    return {StructureFunction(-1.0, std::move(roots)), static_cast<double>(label.three_l0()) / 3.0};
}

// a = w1 + w2 - w3; 2C = R1 (w1 - w2) + R2 (w1 + w2 + 2 w3).
inline HamiltonianParams block_constants(const BlockLabel& label, const Params& p) {
    HamiltonianParams h;
    h.a = p.omega1 + p.omega2 - p.omega3;
    h.g_mod = p.g_mod;
    h.g_phase = p.g_phase;
    h.C = 0.5 * (label.r1() * (p.omega1 - p.omega2) +
                 label.three_r2() * (p.omega1 + p.omega2 + 2.0 * p.omega3) / 3.0);
    return h;
}

// Everything needed to solve one block.
struct ModelBlock {
    BlockLabel label;
    StructureFunction psi;
    Block block;
    HamiltonianParams hamiltonian;
};

inline ModelBlock make_block(const BlockLabel& label, const Params& p) {
    auto [psi, l0] = psi3_for_block(label);
    const std::map<std::string, double> labels{{"R1", static_cast<double>(label.r1())},
                                               {"R2", label.three_r2() / 3.0}};
    const HamiltonianParams h = block_constants(label, p);
    Block block = build_block(psi, l0, labels, h.C, label.dim() + 1);
    return {label, std::move(psi), std::move(block), h};
}

// All blocks with at least one basis state inside the cube n_i <= ncut,
// ordered by (k, sign, m).
inline std::vector<BlockLabel> enumerate_blocks(int ncut) {
    if (ncut < 0) throw DomainError("enumerate_blocks: ncut must be nonnegative");
    std::vector<BlockLabel> out;
    for (int k = 0; k <= ncut; ++k) {
        for (Sign sign : {Sign::plus, Sign::minus}) {
            if (k == 0 && sign == Sign::minus) continue;
            // the smallest usable v is max(0, m - ncut); it needs k + v <= ncut
            for (int m = 0; m <= 2 * ncut - k; ++m) out.push_back({k, sign, m});
        }
    }
    return out;
}

// Input product coherent state |alpha1> |alpha2> |alpha3>, truncated to the Fock cube.
struct CoherentInput {
    std::complex<double> alpha1{0.0};
    std::complex<double> alpha2{0.0};
    std::complex<double> alpha3{0.0};
    int ncut{20};
};

// exp(-|alpha|^2/2) alpha^n / sqrt(n!), evaluated in log space.
inline std::complex<double> poisson_amplitude(std::complex<double> alpha, int n) {
    const double mod = std::abs(alpha);
    if (mod == 0.0) return n == 0 ? 1.0 : 0.0;
    const double log_mag = -0.5 * mod * mod + n * std::log(mod) - 0.5 * std::lgamma(n + 1.0);
    return std::polar(std::exp(log_mag), n * std::arg(alpha));
}

inline Eigen::VectorXcd project_coherent(const CoherentInput& in, const BlockLabel& label) {
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(label.dim());
    for (int v = 0; v < label.dim(); ++v) {
        const auto n = label.fock(v);
        if (n[0] > in.ncut || n[1] > in.ncut || n[2] > in.ncut) continue;
        c[v] = poisson_amplitude(in.alpha1, n[0]) * poisson_amplitude(in.alpha2, n[1]) *
               poisson_amplitude(in.alpha3, n[2]);
    }
    return c;
}

// 1 - sum over the cube of |<n|alpha>|^2, from the per-mode Poisson tails beyond ncut.
inline double tail_deficit(const CoherentInput& in) {
    double log_keep = 0.0;
    for (auto alpha : {in.alpha1, in.alpha2, in.alpha3}) {
        double tail = 0.0;
        for (int n = in.ncut + 1;; ++n) {
            const double p = std::norm(poisson_amplitude(alpha, n));
            tail += p;
            if ((p < 1e-300 || p < 1e-20 * tail) && n > std::norm(alpha)) break;
            if (n > in.ncut + 100000) break;
        }
        log_keep += std::log1p(-std::min(tail, 1.0));
    }
    return -std::expm1(log_keep);
}

// <N3> on a block: sum_v |c_v|^2 (m - v).
inline double observable_n3(const BlockLabel& label, const Eigen::VectorXcd& amplitudes) {
    double total = 0.0;
    for (int v = 0; v < amplitudes.size(); ++v) total += std::norm(amplitudes[v]) * (label.m - v);
    return total;
}

} // namespace slpd::three_boson
