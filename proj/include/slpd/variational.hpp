// smooth sl(2) approximation of block spectra.
//
// The Hamiltonian is rewritten in terms of the Holstein-Primakoff generators Y and its
// expectation value is taken in SL(2) coherent states exp(-xi Y+ + xi* Y-)|v>, xi = r e^{i theta}.
// theta is fixed by e^{i theta} = g/|g|; r is fixed through alpha = -tan r by the stationarity
// condition of the v = 0 functional. One stationary point serves the whole block.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "slpd/block.hpp"
#include "slpd/errors.hpp"
#include "slpd/exact_solver.hpp"
#include "slpd/hypergeometric.hpp"
#include "slpd/structure_function.hpp"

namespace slpd {

struct StationaryRoot {
    double alpha{0.0};
    double residual{0.0}; // normalized stationarity residual at alpha
    double scale{0.0};    // normalized sum of |terms| at alpha
};

struct VariationalSolution {
    double theta{0.0};
    std::vector<StationaryRoot> roots; // sorted by alpha
    double alpha_selected{0.0};
    double r_selected{0.0};
    std::vector<double> energies;                    // E_v at the selected root
    std::vector<std::vector<double>> candidate_energies; // E_v for every root, same order as roots
    bool levels_ordered{true};                       // E_0 <= E_1 <= ... at the selected root

    // Alternative reading: each level takes the stationary root where |dE_v/dr| is smallest.
    std::vector<double> per_level_energies;
    std::vector<double> per_level_alpha;
};

struct VariationalOptions {
    int grid_points{4001};
    double alpha_max{50.0};
    double alpha_tol{1e-14};
    // Also scan |alpha| > alpha_max through u = 1/alpha, so that roots pushed outside the
    // bracket (small |g|, large |a|) are not silently lost.
    bool scan_tails{true};
};

namespace detail {

inline double structure_ratio(const Block& block, const StructureFunction& psi, int f) {
    const double two_j = block.two_j();
    const double value = std::max(psi(block.l0 + 1.0 + f), 0.0);
    return std::sqrt(value / ((two_j - f) * (f + 1.0)));
}

} // namespace detail

// E([l_i]; v; xi) = C + a(l0 + j) + a(-j + v) cos 2r
//                   - 2|g| (cos^2 r)^{2(j-v)} (2j-v)!/v! sum_{f=0}^{2j-1} E^psi_v(l0, j; f),
// E^psi_v = tan^{2(f-v)+1} r (f+1)!/(2j-f-1)! sqrt(psi(l0+1+f)/((2j-f)(f+1)))
//           F~(-v, 2j+1-v; f-v+1; sin^2 r) F~(-v, 2j+1-v; f-v+2; sin^2 r).
inline double energy_functional(const Block& block, const StructureFunction& psi,
                                const HamiltonianParams& params, int v, double r) {
    const int d = block.dim;
    if (v < 0 || v >= d) throw DomainError("energy_functional: level index out of range");
    const double j = block.j();
    const long two_j = block.two_j();
    const double cos_r = std::cos(r);
    if (std::abs(cos_r) < 1e-15) throw DomainError("energy_functional: r = +-pi/2 is singular");

    const double base = params.C + params.a * (block.l0 + j) + params.a * (v - j) * std::cos(2.0 * r);
    const double tan_r = std::tan(r);
    if (tan_r == 0.0 || params.g_mod == 0.0 || d == 1) {
        return tan_r == 0.0 ? params.C + params.a * (block.l0 + v) : base;
    }

    const double x = std::sin(r) * std::sin(r);
    const double b = static_cast<double>(two_j + 1 - v);
    const double log_cos2 = std::log(cos_r * cos_r);
    const double log_tan = std::log(std::abs(tan_r));
    const int tan_sign = tan_r > 0.0 ? 1 : -1;
    const double log_prefactor = (two_j - 2.0 * v) * log_cos2 + log_factorial(two_j - v) - log_factorial(v);

    std::vector<SignedLog> terms;
    terms.reserve(static_cast<std::size_t>(two_j));
    for (long f = 0; f < two_j; ++f) {
        const double ratio = detail::structure_ratio(block, psi, static_cast<int>(f));
        if (ratio == 0.0) continue;
        const SignedLog hyp1 = reg_hyp_2F1_log(v, b, f - v + 1, x);
        const SignedLog hyp2 = reg_hyp_2F1_log(v, b, f - v + 2, x);
        if (hyp1.sign == 0 || hyp2.sign == 0) continue;
        SignedLog term{tan_sign * hyp1.sign * hyp2.sign,
                       log_prefactor + (2.0 * (f - v) + 1.0) * log_tan + log_factorial(f + 1) -
                           log_factorial(two_j - f - 1) + std::log(ratio) + hyp1.log_abs + hyp2.log_abs};
        terms.push_back(term);
    }
    return base - 2.0 * params.g_mod * signed_log_sum(terms).value();
}

namespace detail {

// Terms of the stationarity sum divided by the positive weight (1 + alpha^2)^{2j-1}/(2j-1)!,
// so each weight is a binomial probability. Returns {residual, sum of |terms|}.
inline std::pair<double, double> normalized_stationarity(const Block& block, const StructureFunction& psi,
                                                         const HamiltonianParams& params, double alpha) {
    const long two_j = block.two_j();
    const double j = block.j();
    const double lead = params.a * alpha / params.g_mod;
    const double alpha2 = alpha * alpha;
    const double log_norm = (two_j - 1.0) * std::log1p(alpha2) - log_factorial(two_j - 1);
    double sum = 0.0, scale = 0.0;
    for (long f = 0; f < two_j; ++f) {
        double log_w = -log_factorial(two_j - 1 - f) - log_factorial(f) - log_norm;
        if (f > 0) {
            if (alpha == 0.0) break;
            log_w += 2.0 * f * std::log(std::abs(alpha));
        }
        const double weight = std::exp(log_w);
        const double bracket = 4.0 * alpha2 * j - (1.0 + alpha2) * (2.0 * f + 1.0);
        const double term = weight * (lead - bracket * structure_ratio(block, psi, static_cast<int>(f)));
        sum += term;
        scale += weight * (std::abs(lead) + std::abs(bracket * structure_ratio(block, psi, static_cast<int>(f))));
    }
    return {sum, scale};
}

inline void require_coupling(const HamiltonianParams& params) {
    if (!(params.g_mod > 0.0)) throw DomainError("variational: |g| = 0 leaves the coherent-state phase undefined");
}

} // namespace detail

// sum_{f=0}^{2j-1} alpha^{2f} / ((2j-1-f)! f!) { a alpha/|g| - [4 alpha^2 j - (1 + alpha^2)(2f+1)]
//                                                 sqrt(psi(l0+1+f)/((2j-f)(f+1))) }
inline double stationarity_residual(const Block& block, const StructureFunction& psi,
                                    const HamiltonianParams& params, double alpha) {
    detail::require_coupling(params);
    const long two_j = block.two_j();
    const double j = block.j();
    double sum = 0.0;
    for (long f = 0; f < two_j; ++f) {
        double weight = std::exp(-log_factorial(two_j - 1 - f) - log_factorial(f));
        if (f > 0) weight *= std::pow(alpha, 2.0 * f);
        const double bracket = 4.0 * alpha * alpha * j - (1.0 + alpha * alpha) * (2.0 * f + 1.0);
        sum += weight * (params.a * alpha / params.g_mod - bracket * detail::structure_ratio(block, psi, static_cast<int>(f)));
    }
    return sum;
}

// All sign changes of the stationarity residual on a uniform alpha grid, refined by bisection.
inline std::vector<StationaryRoot> solve_alpha(const Block& block, const StructureFunction& psi,
                                               const HamiltonianParams& params,
                                               const VariationalOptions& opt = {}) {
    if (block.dim < 2) return {StationaryRoot{0.0, 0.0, 0.0}};
    detail::require_coupling(params);

    auto residual = [&](double alpha) { return detail::normalized_stationarity(block, psi, params, alpha).first; };
    auto record = [&](double alpha) {
        const auto [res, scale] = detail::normalized_stationarity(block, psi, params, alpha);
        return StationaryRoot{alpha, res, scale};
    };
    // bisection in a parameter s with alpha = map(s)
    auto refine = [&](double s_lo, double s_hi, double f_lo, const std::function<double(double)>& map) {
        for (int iter = 0; iter < 400; ++iter) {
            const double s_mid = 0.5 * (s_lo + s_hi);
            if (s_mid <= std::min(s_lo, s_hi) || s_mid >= std::max(s_lo, s_hi)) break;
            if (std::abs(map(s_hi) - map(s_lo)) <= opt.alpha_tol) break;
            const double f_mid = residual(map(s_mid));
            if (f_mid == 0.0) return map(s_mid);
            if ((f_mid > 0.0) == (f_lo > 0.0)) {
                s_lo = s_mid;
                f_lo = f_mid;
            } else {
                s_hi = s_mid;
            }
        }
        return map(0.5 * (s_lo + s_hi));
    };

    std::vector<StationaryRoot> roots;
    auto scan = [&](double s0, double s1, int points, const std::function<double(double)>& map) {
        double s_prev = s0;
        double f_prev = residual(map(s0));
        if (f_prev == 0.0) roots.push_back(record(map(s0)));
        for (int i = 1; i < points; ++i) {
            const double s = s0 + (s1 - s0) * i / (points - 1);
            const double f = residual(map(s));
            if (f == 0.0) {
                roots.push_back(record(map(s)));
            } else if (f_prev != 0.0 && (f > 0.0) != (f_prev > 0.0)) {
                roots.push_back(record(refine(s_prev, s, f_prev, map)));
            }
            s_prev = s;
            f_prev = f;
        }
    };

    const auto identity = [](double s) { return s; };
    scan(-opt.alpha_max, opt.alpha_max, opt.grid_points, identity);
    if (opt.scan_tails) {
        // u in [1/alpha_max, tiny] maps to alpha in [alpha_max, huge]; same on the negative side
        const auto inverse = [](double u) { return 1.0 / u; };
        const double u_max = 1.0 / opt.alpha_max;
        const double u_min = u_max / 1e6;
        std::vector<StationaryRoot> tail;
        std::swap(roots, tail);
        scan(u_max, u_min, opt.grid_points, inverse);
        scan(-u_max, -u_min, opt.grid_points, inverse);
        std::swap(roots, tail);
        for (const auto& t : tail)
            if (std::abs(t.alpha) > opt.alpha_max) roots.push_back(t);
    }
    std::sort(roots.begin(), roots.end(), [](const auto& x, const auto& y) { return x.alpha < y.alpha; });
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [&](const auto& x, const auto& y) { return std::abs(x.alpha - y.alpha) <= 1e3 * opt.alpha_tol; }),
                roots.end());
    if (roots.empty()) {
        std::ostringstream msg;
        msg << "no stationary point in bracket: residual(" << -opt.alpha_max << ") = " << residual(-opt.alpha_max)
            << ", residual(" << opt.alpha_max << ") = " << residual(opt.alpha_max);
        throw NumericError(msg.str());
    }
    return roots;
}

inline double alpha_to_r(double alpha) noexcept { return -std::atan(alpha); }

inline VariationalSolution variational_spectrum(const Block& block, const StructureFunction& psi,
                                                const HamiltonianParams& params,
                                                const VariationalOptions& opt = {}) {
    const int d = block.dim;
    VariationalSolution sol;
    sol.theta = params.g_phase;
    sol.roots = solve_alpha(block, psi, params, opt);

    for (const auto& root : sol.roots) {
        std::vector<double> levels(d);
        const double r = alpha_to_r(root.alpha);
        for (int v = 0; v < d; ++v) levels[v] = energy_functional(block, psi, params, v, r);
        sol.candidate_energies.push_back(std::move(levels));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < sol.roots.size(); ++i)
        if (sol.candidate_energies[i][0] < sol.candidate_energies[best][0]) best = i;
    sol.alpha_selected = sol.roots[best].alpha;
    sol.r_selected = alpha_to_r(sol.alpha_selected);
    sol.energies = sol.candidate_energies[best];
    sol.levels_ordered = std::is_sorted(sol.energies.begin(), sol.energies.end());

    sol.per_level_energies.resize(d);
    sol.per_level_alpha.resize(d);
    for (int v = 0; v < d; ++v) {
        double best_slope = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < sol.roots.size(); ++i) {
            const double r = alpha_to_r(sol.roots[i].alpha);
            const double h = 1e-6;
            const double slope = std::abs(energy_functional(block, psi, params, v, r + h) -
                                          energy_functional(block, psi, params, v, r - h)) / (2.0 * h);
            if (slope < best_slope) {
                best_slope = slope;
                sol.per_level_energies[v] = sol.candidate_energies[i][v];
                sol.per_level_alpha[v] = sol.roots[i].alpha;
            }
        }
    }
    return sol;
}

} // namespace slpd
