// irreducible blocks L([l_i]) and their ladder-operator matrices

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <sstream>
#include <string>

#include "slpd/errors.hpp"
#include "slpd/structure_function.hpp"

namespace slpd {

// Relative tolerance for psi(l0) = 0 and for block termination.
inline constexpr double kRootTolerance = 1e-12;

// One irreducible subspace with ordered basis |[l_i]; v>, v = 0..dim-1.
struct Block {
    double l0{0.0};                       // lowest V0 eigenvalue
    int dim{1};                           // d
    std::map<std::string, double> labels; // integrals of motion R_i -> l_i
    double constant{0.0};                 // C
    bool truncated{false};                // dim was capped at dmax before psi vanished
    double psi_scale{0.0};                // max |psi(l0+v)| over v = 0..dmax

    double j() const noexcept { return 0.5 * static_cast<double>(dim - 1); }
    int two_j() const noexcept { return dim - 1; }
};

using OperatorMatrix = Eigen::MatrixXcd;

struct LadderOperators {
    OperatorMatrix zero;  // V0 or Y0
    OperatorMatrix plus;  // V+ or Y+
    OperatorMatrix minus; // V- or Y-
};

inline double block_tolerance(const Block& block) noexcept {
    return kRootTolerance * std::max(block.psi_scale, 1.0);
}

// Builds the block generated from the lowest vector with V0 eigenvalue l0.
// The dimension is the first v >= 1 where psi(l0+v) vanishes, capped at dmax.
inline Block build_block(const StructureFunction& psi, double l0,
                         std::map<std::string, double> labels, double constant, int dmax) {
    if (dmax < 1) throw DomainError("build_block: dmax must be positive");

    double scale = 0.0;
    for (int v = 0; v <= dmax; ++v) scale = std::max(scale, std::abs(psi(l0 + v)));
    const double tol = kRootTolerance * std::max(scale, 1.0);

    if (std::abs(psi(l0)) > tol) {
        std::ostringstream msg;
        msg << "build_block: l0 = " << l0 << " is not a root of psi (psi(l0) = " << psi(l0) << ")";
        throw DomainError(msg.str());
    }

    Block block;
    block.l0 = l0;
    block.labels = std::move(labels);
    block.constant = constant;
    block.psi_scale = scale;
    block.dim = dmax;
    block.truncated = true;
    for (int v = 1; v <= dmax; ++v) {
        const double value = psi(l0 + v);
        if (value < -tol) {
            std::ostringstream msg;
            msg << "non-unitary block: psi(l0+" << v << ") = " << value << " < 0";
            throw DomainError(msg.str());
        }
        if (value <= tol) {
            block.dim = v;
            block.truncated = false;
            break;
        }
    }
    return block;
}

// Matrix realization of V0, V+, V- in the orthonormal block basis:
// (V0)_{vv} = l0 + v, (V+)_{v+1,v} = sqrt(psi(l0+v+1)), V- = (V+)^dagger.
inline LadderOperators block_operators(const Block& block, const StructureFunction& psi) {
    const int d = block.dim;
    LadderOperators ops{OperatorMatrix::Zero(d, d), OperatorMatrix::Zero(d, d), OperatorMatrix::Zero(d, d)};
    for (int v = 0; v < d; ++v) ops.zero(v, v) = block.l0 + v;
    for (int v = 0; v + 1 < d; ++v) {
        const double value = psi(block.l0 + v + 1);
        if (value < 0.0) {
            if (value < -block_tolerance(block)) throw DomainError("block_operators: negative psi inside block");
        }
        ops.plus(v + 1, v) = std::sqrt(std::max(value, 0.0));
    }
    ops.minus = ops.plus.adjoint();
    return ops;
}

// Generalized Holstein-Primakoff map (su(2) sign): Y0 = V0 - l0 - j, and Y+ is V+ with
// every matrix element rescaled by sqrt((j - Y0)(j + 1 + Y0) / psi(V0 + 1)).
inline LadderOperators holstein_primakoff(const Block& block, const StructureFunction& psi) {
    LadderOperators ops = block_operators(block, psi);
    const int d = block.dim;
    const double j = block.j();
    ops.zero -= OperatorMatrix::Identity(d, d) * (block.l0 + j);
    for (int v = 0; v + 1 < d; ++v) {
        const double su2 = (v + 1.0) * (2.0 * j - v);
        const double deformed = psi(block.l0 + v + 1);
        ops.plus(v + 1, v) *= std::sqrt(su2 / deformed);
    }
    ops.minus = ops.plus.adjoint();
    return ops;
}

inline double max_abs(const OperatorMatrix& m) noexcept {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

} // namespace slpd
