#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "slpd/exact_solver.hpp"
#include "slpd/three_boson.hpp"
#include "slpd/variational.hpp"

using namespace slpd;
using Catch::Approx;

TEST_CASE("energy_functional at r = 0 is the diagonal") {
    const auto psi = oracle::two_level_psi(0.3, 2.0);
    const Block b = build_block(psi, 0.3, {}, 0.7, 5);
    const HamiltonianParams p{1.5, 1.0, 0.2, 0.7};
    CHECK(energy_functional(b, psi, p, 0, 0.0) == Approx(0.7 + 1.5 * 0.3));
    CHECK(energy_functional(b, psi, p, 1, 0.0) == Approx(0.7 + 1.5 * 1.3));
    CHECK_THROWS_AS(energy_functional(b, psi, p, 0, M_PI / 2.0), DomainError);
}

TEST_CASE("energy_functional, two levels by hand") {
    const double w = 2.7;
    const auto psi = oracle::two_level_psi(0.0, w);
    const Block b = build_block(psi, 0.0, {}, 0.0, 5);
    const HamiltonianParams p{0.0, 1.0, 0.0, 0.0};
    for (double r : {0.2, 0.785, -0.4, 1.3}) {
        CHECK(energy_functional(b, psi, p, 0, r) == Approx(-std::sqrt(w) * std::sin(2 * r)));
        // the v = 1 level only exists through the regularized f < v term
        CHECK(energy_functional(b, psi, p, 1, r) == Approx(std::sqrt(w) * std::sin(2 * r)));
    }
}

TEST_CASE("energy_functional equals the coherent-state expectation value") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int d : {2, 3, 4, 6, 9}) {
        const auto psi = oracle::random_compact_psi(rng, d);
        const Block b = build_block(psi, 0.0, {}, 0.3, d + 2);
        const HamiltonianParams p{u(rng) * 2.0, 0.5 + std::abs(u(rng)), 3.0 * u(rng), 0.3};
        for (int v = 0; v < d; ++v) {
            for (double r : {0.3, -0.7, 1.1}) {
                const double formula = energy_functional(b, psi, p, v, r);
                const double matrix = oracle::gcs_energy(b, psi, p, v, r);
                CHECK(formula == Approx(matrix).epsilon(1e-10).margin(1e-10));
            }
        }
    }
}

TEST_CASE("stationarity_residual") {
    const auto mb = three_boson::make_block(three_boson::make_label(0, three_boson::Sign::plus, 4), {1, 1, 2, 1, 0});
    const double j = mb.block.j();
    // alpha = 0: only f = 0 survives
    CHECK(stationarity_residual(mb.block, mb.psi, mb.hamiltonian, 0.0) ==
          Approx(std::sqrt(mb.psi(mb.block.l0 + 1) / (2 * j)) / std::tgamma(2 * j)));

    const double w = 1.7;
    const auto psi = oracle::two_level_psi(0.0, w);
    const Block b = build_block(psi, 0.0, {}, 0.0, 4);
    const HamiltonianParams p{0.8, 1.3, 0.0, 0.0};
    for (double alpha : {-2.0, 0.3, 1.1})
        CHECK(stationarity_residual(b, psi, p, alpha) == Approx(0.8 * alpha / 1.3 - (alpha * alpha - 1) * std::sqrt(w)));

    CHECK_THROWS_AS(stationarity_residual(b, psi, {0.8, 0.0, 0.0, 0.0}, 0.1), DomainError);
}

TEST_CASE("sl(2) limit: residual is (1 + alpha^2)^{2j-1} (a alpha/|g| + 1 - alpha^2) / (2j-1)!") {
    for (double j = 0.5; j <= 10.0; j += 0.5) {
        const auto psi = StructureFunction::su2(j);
        const Block b = build_block(psi, -j, {}, 0.0, 100);
        const HamiltonianParams p{1.7, 0.6, 0.0, 0.0};
        for (double alpha : {-1.3, 0.2, 0.9}) {
            const double closed = std::pow(1 + alpha * alpha, 2 * j - 1) * (1.7 * alpha / 0.6 + 1 - alpha * alpha) /
                                  std::tgamma(2 * j);
            CHECK(stationarity_residual(b, psi, p, alpha) == Approx(closed).epsilon(1e-10));
        }
    }
}

TEST_CASE("solve_alpha roots") {
    const auto psi = oracle::two_level_psi(0.0, 2.0);
    const Block b = build_block(psi, 0.0, {}, 0.0, 4);
    const auto roots = solve_alpha(b, psi, {0.0, 1.0, 0.0, 0.0});
    REQUIRE(roots.size() == 2);
    CHECK(roots[0].alpha == Approx(-1.0).margin(1e-13));
    CHECK(roots[1].alpha == Approx(1.0).margin(1e-13));

    // tan 2r = 2|g|/a in the sl(2) limit
    const auto su2 = StructureFunction::su2(1.5);
    const Block s = build_block(su2, -1.5, {}, 0.0, 10);
    for (const auto& root : solve_alpha(s, su2, {3.0, 1.0, 0.0, 0.0})) {
        const double r = alpha_to_r(root.alpha);
        CHECK(std::tan(2 * r) == Approx(2.0 / 3.0).epsilon(1e-10));
        CHECK(std::abs(root.residual) <= 1e-10 * root.scale);
    }

    // a = 0: roots come in +- pairs
    const auto mb = three_boson::make_block(three_boson::make_label(1, three_boson::Sign::plus, 6), {1, 1, 2, 0.7, 0});
    const auto pairs = solve_alpha(mb.block, mb.psi, mb.hamiltonian);
    REQUIRE(pairs.size() % 2 == 0);
    for (std::size_t i = 0; i < pairs.size(); ++i)
        CHECK(pairs[i].alpha == Approx(-pairs[pairs.size() - 1 - i].alpha).margin(1e-12));
}

TEST_CASE("roots beyond the alpha grid are found through the tail scan") {
    // j = 1/2 with a/|g| = 500, w = 0.01: roots at about -0.02 and 2500
    const auto psi = oracle::two_level_psi(0.0, 0.01);
    const Block b = build_block(psi, 0.0, {}, 0.0, 4);
    const HamiltonianParams p{5.0, 0.01, 0.0, 0.0};
    const auto roots = solve_alpha(b, psi, p);
    REQUIRE(roots.size() == 2);
    const double s = 5.0 / 0.01, sw = std::sqrt(0.01);
    CHECK(roots[1].alpha == Approx((s + std::sqrt(s * s + 4 * 0.01)) / (2 * sw)).epsilon(1e-9));

    VariationalOptions narrow;
    narrow.scan_tails = false;
    CHECK(solve_alpha(b, psi, p, narrow).size() == 1);
}

TEST_CASE("variational_spectrum, two-level block") {
    const auto psi = oracle::two_level_psi(0.0, 2.0);
    const Block b = build_block(psi, 0.0, {}, 0.0, 4);
    const auto sol = variational_spectrum(b, psi, {0.0, 1.0, 0.0, 0.0});
    CHECK(sol.alpha_selected == Approx(-1.0));
    CHECK(sol.r_selected == Approx(M_PI / 4));
    CHECK(sol.energies[0] == Approx(-std::sqrt(2.0)));
    CHECK(sol.energies[1] == Approx(std::sqrt(2.0)));
    CHECK(sol.levels_ordered);
}

TEST_CASE("variational_spectrum reduces to the equidistant sl(2) spectrum") {
    for (double j : {0.5, 1.0, 2.0, 4.5, 10.0}) {
        const auto psi = StructureFunction::su2(j);
        const Block b = build_block(psi, -j, {}, 0.25, 100);
        const HamiltonianParams p{1.0, 2.0, 0.6, 0.25};
        const auto sol = variational_spectrum(b, psi, p);
        const double omega = std::hypot(1.0, 4.0);
        for (int v = 0; v < b.dim; ++v) CHECK(sol.energies[v] == Approx(0.25 + (v - j) * omega).margin(1e-8));
    }
}

TEST_CASE("variational properties on three-boson blocks") {
    for (int m : {2, 3, 5, 8}) {
        for (double phase : {0.0, 1.2}) {
            const auto mb = three_boson::make_block(three_boson::make_label(1, three_boson::Sign::minus, m),
                                                    {1.0, 1.1, 1.6, 0.9, phase});
            const auto sol = variational_spectrum(mb.block, mb.psi, mb.hamiltonian);
            const auto tri = build_hamiltonian(mb.block, mb.psi, mb.hamiltonian);
            const auto exact = eigensolve(tri);
            CHECK(sol.levels_ordered);
            CHECK(static_cast<int>(sol.energies.size()) == mb.block.dim);
            for (const auto& cand : sol.candidate_energies) CHECK(cand[0] >= exact.energies[0] - 1e-10 * tri.norm());
            for (const auto& root : sol.roots) CHECK(std::abs(root.residual) <= 1e-10 * root.scale);

            // dE_0/dr vanishes at the selected root
            const double h = 1e-5;
            const double slope = (energy_functional(mb.block, mb.psi, mb.hamiltonian, 0, sol.r_selected + h) -
                                  energy_functional(mb.block, mb.psi, mb.hamiltonian, 0, sol.r_selected - h)) / (2 * h);
            CHECK(mb.block.dim * std::abs(slope) <= 1e-6 * mb.hamiltonian.g_mod);

            if (phase != 0.0) {
                auto h0 = mb.hamiltonian;
                h0.g_phase = 0.0;
                const auto ref = variational_spectrum(mb.block, mb.psi, h0);
                for (int v = 0; v < mb.block.dim; ++v) CHECK(sol.energies[v] == Approx(ref.energies[v]).margin(1e-12));
            }
            if (mb.block.dim > 3) {
                bool equal_spacing = true;
                for (int v = 1; v + 1 < mb.block.dim; ++v)
                    if (std::abs((sol.energies[v + 1] - sol.energies[v]) - (sol.energies[v] - sol.energies[v - 1])) > 1e-6)
                        equal_spacing = false;
                CHECK_FALSE(equal_spacing);
            }
            CHECK(sol.per_level_energies.size() == sol.energies.size());
        }
    }
}

TEST_CASE("d = 3 cubic block is approximate, not exact") {
    const auto mb = three_boson::make_block(three_boson::make_label(0, three_boson::Sign::plus, 2), {1, 1, 2, 1, 0});
    const auto sol = variational_spectrum(mb.block, mb.psi, mb.hamiltonian);
    const double c = mb.hamiltonian.C; // free-field energy of the block, 4 at unit frequencies
    CHECK(c == Approx(4.0));
    CHECK(sol.energies[0] - c == Approx(-std::sqrt(6.0)).epsilon(1e-3));
    CHECK(std::abs(sol.energies[2] - c - std::sqrt(6.0)) > 1e-3);
}

TEST_CASE("a one-dimensional block is its own diagonal") {
    const auto mb = three_boson::make_block(three_boson::make_label(2, three_boson::Sign::plus, 0), {1, 1, 2, 1, 0});
    const auto sol = variational_spectrum(mb.block, mb.psi, mb.hamiltonian);
    REQUIRE(sol.energies.size() == 1);
    CHECK(sol.energies[0] == Approx(mb.hamiltonian.C + mb.hamiltonian.a * mb.block.l0));
}
