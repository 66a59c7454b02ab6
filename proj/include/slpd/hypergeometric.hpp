// terminating, regularized Gauss series F~(-v, b; c; x) = F(-v, b; c; x) / Gamma(c)

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace slpd {

// sign * exp(log_abs); sign == 0 encodes an exact zero.
struct SignedLog {
    int sign{0};
    double log_abs{-std::numeric_limits<double>::infinity()};

    static SignedLog zero() noexcept { return {}; }
    static SignedLog from(double x) noexcept {
        if (x == 0.0) return {};
        return {x > 0.0 ? 1 : -1, std::log(std::abs(x))};
    }
    double value() const noexcept { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }

    SignedLog operator*(const SignedLog& o) const noexcept {
        if (sign == 0 || o.sign == 0) return {};
        return {sign * o.sign, log_abs + o.log_abs};
    }
    SignedLog operator/(const SignedLog& o) const noexcept {
        return {sign * o.sign, log_abs - o.log_abs};
    }
};

// Sum of signed-log terms, scaled by the largest magnitude before exponentiating.
inline SignedLog signed_log_sum(const std::vector<SignedLog>& terms) {
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms)
        if (t.sign != 0) top = std::max(top, t.log_abs);
    if (!std::isfinite(top)) return SignedLog::zero();
    double acc = 0.0;
    for (const auto& t : terms)
        if (t.sign != 0) acc += t.sign * std::exp(t.log_abs - top);
    if (acc == 0.0) return SignedLog::zero();
    return {acc > 0.0 ? 1 : -1, top + std::log(std::abs(acc))};
}

// log(n!) for integer n >= 0.
inline double log_factorial(long n) noexcept { return std::lgamma(static_cast<double>(n) + 1.0); }

// F~(-v, b; c; x) = sum_{k=0}^{v} (-v)_k (b)_k x^k / (k! Gamma(c + k)), with 1/Gamma(n) = 0 for
// integer n <= 0. For c >= 1 this is F(-v, b; c; x) / (c-1)!. The first surviving term is taken
// in log space; the rest follow from exact term ratios summed in 113-bit floating point, since
// the alternating series cancels heavily for x near 1.
inline SignedLog reg_hyp_2F1_log(long v, double b, long c, double x) {
    const long k0 = std::max(0L, 1 - c);
    if (k0 > v || (x == 0.0 && k0 > 0)) return SignedLog::zero();
    // (-v)_k (b)_k x^k / (k! (c+k-1)!) at k = k0
    SignedLog first{1, 0.0};
    for (long k = 0; k < k0; ++k)
        first = first * SignedLog::from(static_cast<double>(k - v)) * SignedLog::from(b + static_cast<double>(k)) *
                SignedLog::from(x);
    if (first.sign == 0) return SignedLog::zero();
    first.log_abs -= log_factorial(k0) + log_factorial(c + k0 - 1);

    __float128 term = 1, sum = 1;
    for (long k = k0 + 1; k <= v; ++k) {
        term *= static_cast<__float128>(k - 1 - v) * (static_cast<__float128>(b) + (k - 1)) * static_cast<__float128>(x);
        term /= static_cast<__float128>(k) * static_cast<__float128>(c + k - 1);
        if (term == 0) break;
        sum += term;
    }
    const double acc = static_cast<double>(sum);
    if (acc == 0.0) return SignedLog::zero();
    return {first.sign * (acc > 0.0 ? 1 : -1), first.log_abs + std::log(std::abs(acc))};
}

inline double reg_hyp_2F1(long v, double b, long c, double x) {
    return reg_hyp_2F1_log(v, b, c, x).value();
}

} // namespace slpd
