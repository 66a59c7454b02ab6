// time-dependent variational (mean-field) dynamics in su(2) coherent states.
//
// The trial state is exp(xi Y+ - xi* Y-)|top>, xi = (theta/2) exp(-i phi), built on the highest
// vector of the block, so that p = j cos(theta) equals <Y0> and (p, q = phi) is a canonical pair:
//   dq/dt = dH/dp,  dp/dt = -dH/dq,  H(p, q) = <z|H|z>.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "slpd/block.hpp"
#include "slpd/errors.hpp"
#include "slpd/exact_solver.hpp"
#include "slpd/structure_function.hpp"

namespace slpd {

struct MeanFieldState {
    double p{0.0};
    double q{0.0};
};

struct MeanFieldSample {
    double t{0.0};
    MeanFieldState state;
    double energy{0.0};
};

struct MeanFieldTrajectory {
    std::vector<MeanFieldSample> samples;
    int clamp_events{0}; // steps where |p| left [-j, j] and was clamped
};

// Coherent-state energy surface H(p, q) of one block.
class CoherentEnergy {
public:
    CoherentEnergy(const Block& block, const StructureFunction& psi, const HamiltonianParams& params)
        : j_(block.j()) {
        if (block.dim < 2) throw DomainError("meanfield: block dimension must be at least 2");
        const LadderOperators v = block_operators(block, psi);
        const LadderOperators y = holstein_primakoff(block, psi);
        const int d = block.dim;
        hamiltonian_ = params.a * v.zero + params.g() * v.plus + std::conj(params.g()) * v.minus +
                       params.C * OperatorMatrix::Identity(d, d);
        y_plus_ = y.plus;
        top_ = Eigen::VectorXcd::Zero(d);
        top_[d - 1] = 1.0;
    }

    double j() const noexcept { return j_; }

    Eigen::VectorXcd state(double p, double q) const {
        const double theta = std::acos(std::clamp(p / j_, -1.0, 1.0));
        const std::complex<double> xi = std::polar(0.5 * theta, -q);
        // exp(K) with K = xi Y+ - xi* Y- anti-Hermitian: K = i G, G Hermitian
        const OperatorMatrix k = xi * y_plus_ - std::conj(xi) * y_plus_.adjoint();
        const OperatorMatrix g = std::complex<double>(0.0, -1.0) * k;
        Eigen::SelfAdjointEigenSolver<OperatorMatrix> es(g);
        Eigen::VectorXcd w = es.eigenvectors().adjoint() * top_;
        for (Eigen::Index i = 0; i < w.size(); ++i) w[i] *= std::polar(1.0, es.eigenvalues()[i]);
        return es.eigenvectors() * w;
    }

    double operator()(double p, double q) const {
        const Eigen::VectorXcd z = state(p, q);
        return std::real(z.dot(hamiltonian_ * z));
    }

    // Central differences with step 1e-6 max(1, |p|, |q|).
    std::pair<double, double> gradient(double p, double q) const {
        const double h = 1e-6 * std::max({1.0, std::abs(p), std::abs(q)});
        const double dp = ((*this)(p + h, q) - (*this)(p - h, q)) / (2.0 * h);
        const double dq = ((*this)(p, q + h) - (*this)(p, q - h)) / (2.0 * h);
        return {dp, dq};
    }

private:
    double j_;
    OperatorMatrix hamiltonian_;
    OperatorMatrix y_plus_;
    Eigen::VectorXcd top_;
};

// Classic fourth-order Runge-Kutta on (q, p); `steps` steps of size dt (dt may be negative).
inline MeanFieldTrajectory meanfield_trajectory(const Block& block, const StructureFunction& psi,
                                                const HamiltonianParams& params, MeanFieldState start,
                                                double dt, int steps) {
    const CoherentEnergy energy(block, psi, params);
    const double j = energy.j();
    if (std::abs(start.p) > j) throw DomainError("meanfield_trajectory: |p0| exceeds j");

    auto flow = [&](const MeanFieldState& s) {
        const auto [dh_dp, dh_dq] = energy.gradient(s.p, s.q);
        return MeanFieldState{-dh_dq, dh_dp}; // (dp/dt, dq/dt)
    };
    auto shifted = [](const MeanFieldState& s, const MeanFieldState& k, double h) {
        return MeanFieldState{s.p + h * k.p, s.q + h * k.q};
    };

    MeanFieldTrajectory out;
    out.samples.reserve(static_cast<std::size_t>(steps) + 1);
    MeanFieldState s = start;
    out.samples.push_back({0.0, s, energy(s.p, s.q)});
    for (int n = 1; n <= steps; ++n) {
        const MeanFieldState k1 = flow(s);
        const MeanFieldState k2 = flow(shifted(s, k1, 0.5 * dt));
        const MeanFieldState k3 = flow(shifted(s, k2, 0.5 * dt));
        const MeanFieldState k4 = flow(shifted(s, k3, dt));
        s.p += dt / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
        s.q += dt / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q);
        if (std::abs(s.p) > j) {
            s.p = std::clamp(s.p, -j, j);
            ++out.clamp_events;
        }
        out.samples.push_back({n * dt, s, energy(s.p, s.q)});
    }
    return out;
}

} // namespace slpd
