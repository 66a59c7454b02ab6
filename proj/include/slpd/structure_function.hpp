// polynomial structure functions psi(x) = A * prod_i (x - lambda_i)

#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace slpd {

// Structure function of a polynomial deformation of sl(2), stored in factored form.
// The ladder relations on a block are V+V- = psi(V0) and [V-,V+] = psi(V0+1) - psi(V0).
class StructureFunction {
public:
    StructureFunction() = default;
    StructureFunction(double leading_coeff, std::vector<double> roots)
        : leading_coeff_(leading_coeff), roots_(std::move(roots)) {}

    double leading_coeff() const noexcept { return leading_coeff_; }
    const std::vector<double>& roots() const noexcept { return roots_; }
    std::size_t degree() const noexcept { return roots_.size(); }

    // A * (x - lambda_1) * ... * (x - lambda_n), multiplied in ascending root order.
    double operator()(double x) const noexcept {
        double value = leading_coeff_;
        for (double root : roots_) value *= (x - root);
        return value;
    }

    // Copy with one root shifted; used to build deliberately mismatched checks.
    StructureFunction with_root_shift(std::size_t index, double shift) const {
        StructureFunction out = *this;
        out.roots_.at(index) += shift;
        return out;
    }

    // psi_2(x) = (j + x)(j + 1 - x), the undeformed su(2) structure function with l0 = -j.
    static StructureFunction su2(double j) { return StructureFunction(-1.0, {-j, j + 1.0}); }

private:
    double leading_coeff_{1.0};
    std::vector<double> roots_;
};

inline double eval_psi(const StructureFunction& psi, double x) noexcept { return psi(x); }

// (psi(x))^{(v)} = prod_{r=0}^{v-1} psi(x - r); the empty product is 1.
inline double falling_product(const StructureFunction& psi, double x, unsigned v) noexcept {
    double value = 1.0;
    for (unsigned r = 0; r < v; ++r) value *= psi(x - static_cast<double>(r));
    return value;
}

} // namespace slpd
