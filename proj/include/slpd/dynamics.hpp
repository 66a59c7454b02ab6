// block-wise unitary evolution, Rabi signals, collapse/revival and
// incommensurability diagnostics

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "slpd/errors.hpp"
#include "slpd/exact_solver.hpp"
#include "slpd/parallel.hpp"
#include "slpd/three_boson.hpp"

namespace slpd {

struct Signal {
    std::vector<double> times;
    std::vector<double> values;
};

inline std::vector<double> uniform_times(double tmax, int samples) {
    if (samples < 2) throw DomainError("uniform_times: need at least two samples");
    std::vector<double> t(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) t[i] = tmax * i / (samples - 1);
    return t;
}

// Spectral propagator exp(-iHt) on one block, amplitudes in the original gauge.
class BlockPropagator {
public:
    BlockPropagator(const Spectrum& spectrum, const Eigen::VectorXcd& c0)
        : energies_(spectrum.energies),
          vectors_(spectrum.amplitudes_original_gauge()),
          weights_(vectors_.adjoint() * c0) {}

    Eigen::VectorXcd at(double t) const {
        Eigen::VectorXcd phased(weights_.size());
        for (Eigen::Index f = 0; f < weights_.size(); ++f)
            phased[f] = std::polar(1.0, -energies_[f] * t) * weights_[f];
        return vectors_ * phased;
    }

    int dim() const noexcept { return static_cast<int>(energies_.size()); }

private:
    Eigen::VectorXd energies_;
    Eigen::MatrixXcd vectors_;
    Eigen::VectorXcd weights_;
};

// c(t) = Q diag(exp(-i E_f t)) Q^dagger c0
inline Eigen::VectorXcd evolve_block(const Spectrum& spectrum, const Eigen::VectorXcd& c0, double t) {
    return BlockPropagator(spectrum, c0).at(t);
}

// One block's contribution to a diagonal observable: sum_v weight_v |c_v(t)|^2.
struct BlockObservable {
    BlockPropagator propagator;
    Eigen::VectorXd diagonal;
};

// Sum of block contributions on a time grid. Blocks are processed in fixed batches and
// reduced in input order, so the result does not depend on `jobs`.
inline std::vector<double> observable_signal(const std::vector<BlockObservable>& blocks,
                                             const std::vector<double>& times, int jobs = 1) {
    constexpr std::size_t batch = 64;
    std::vector<double> total(times.size(), 0.0);
    std::vector<std::vector<double>> partial;
    for (std::size_t start = 0; start < blocks.size(); start += batch) {
        const std::size_t count = std::min(batch, blocks.size() - start);
        partial.assign(count, std::vector<double>(times.size(), 0.0));
        parallel_for(count, jobs, [&](std::size_t i) {
            const auto& b = blocks[start + i];
            for (std::size_t s = 0; s < times.size(); ++s)
                partial[i][s] = b.propagator.at(times[s]).cwiseAbs2().dot(b.diagonal);
        });
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t s = 0; s < times.size(); ++s) total[s] += partial[i][s];
    }
    return total;
}

struct RabiResult {
    Signal signal;
    double tail_deficit{0.0};
    bool tail_warning{false};
    std::vector<three_boson::BlockLabel> blocks; // blocks with nonzero initial weight
    std::vector<double> block_weights;
};

// <N3(t)> for an initial product coherent state, every block evolved with its own spectrum.
inline RabiResult rabi_signal(const three_boson::CoherentInput& input, const three_boson::Params& params,
                              const std::vector<double>& times, int jobs = 1, double tail_bound = 1e-8) {
    RabiResult out;
    out.signal.times = times;
    out.tail_deficit = three_boson::tail_deficit(input);
    out.tail_warning = out.tail_deficit > tail_bound;

    const auto labels = three_boson::enumerate_blocks(input.ncut);
    std::vector<Eigen::VectorXcd> projections(labels.size());
    parallel_for(labels.size(), jobs, [&](std::size_t i) { projections[i] = three_boson::project_coherent(input, labels[i]); });

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (projections[i].squaredNorm() > 0.0) active.push_back(i);

    std::vector<std::optional<BlockObservable>> solved(active.size());
    parallel_for(active.size(), jobs, [&](std::size_t n) {
        const auto& label = labels[active[n]];
        const auto mb = three_boson::make_block(label, params);
        const Spectrum s = eigensolve(build_hamiltonian(mb.block, mb.psi, mb.hamiltonian));
        Eigen::VectorXd n3(label.dim());
        for (int v = 0; v < label.dim(); ++v) n3[v] = label.m - v;
        solved[n].emplace(BlockObservable{BlockPropagator(s, projections[active[n]]), n3});
    });

    std::vector<BlockObservable> blocks;
    blocks.reserve(active.size());
    for (std::size_t n = 0; n < active.size(); ++n) {
        blocks.push_back(std::move(*solved[n]));
        out.blocks.push_back(labels[active[n]]);
        out.block_weights.push_back(projections[active[n]].squaredNorm());
    }
    out.signal.values = observable_signal(blocks, times, jobs);
    return out;
}

struct CollapseRevivalOptions {
    double window_periods{2.0};    // RMS window, in carrier periods
    double collapse_fraction{0.1}; // collapse: envelope below this fraction of the initial envelope
    int sustain_windows{5};        // ... for this many window lengths
    double revival_fraction{0.5};  // revival: envelope maximum above this fraction
    std::size_t min_samples{1000};
};

struct CollapseRevivalReport {
    bool oscillation{false};
    double carrier_frequency{0.0}; // cycles per unit time
    double carrier_period{0.0};
    std::size_t window_samples{0};
    double initial_envelope{0.0};
    std::optional<double> collapse_time;
    std::vector<double> revival_times;
    std::vector<double> envelope; // one value per signal sample
};

// Frequency (cycles per unit time) of the largest nonzero-frequency peak of x.
inline double dominant_frequency(const std::vector<double>& x, double dt) {
    std::size_t padded = 1;
    while (padded < 4 * x.size()) padded <<= 1;
    std::vector<double> in(padded, 0.0);
    std::copy(x.begin(), x.end(), in.begin());
    std::vector<std::complex<double>> spectrum;
    Eigen::FFT<double> fft;
    fft.fwd(spectrum, in);
    std::size_t best = 1;
    for (std::size_t k = 2; k <= padded / 2; ++k)
        if (std::abs(spectrum[k]) > std::abs(spectrum[best])) best = k;
    return static_cast<double>(best) / (static_cast<double>(padded) * dt);
}

// Sliding-window RMS envelope of the mean-subtracted signal. The envelope at sample i is the
// RMS over the window starting at i (clamped at the end of the record).
inline CollapseRevivalReport detect_collapse_revival(const Signal& signal, const CollapseRevivalOptions& opt = {}) {
    const std::size_t n = signal.values.size();
    if (signal.times.size() != n) throw DomainError("detect_collapse_revival: times and values differ in length");
    if (n < opt.min_samples) throw DomainError("detect_collapse_revival: too few samples");
    const double dt = signal.times[1] - signal.times[0];

    CollapseRevivalReport rep;
    const double mean = std::accumulate(signal.values.begin(), signal.values.end(), 0.0) / n;
    std::vector<double> x(n);
    double power = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = signal.values[i] - mean;
        power += x[i] * x[i];
    }
    const double rms = std::sqrt(power / n);
    if (rms <= 1e-12 * std::max(1.0, std::abs(mean))) {
        rep.envelope.assign(n, 0.0);
        return rep;
    }
    rep.oscillation = true;
    rep.carrier_frequency = dominant_frequency(x, dt);
    rep.carrier_period = 1.0 / rep.carrier_frequency;
    const auto window = static_cast<std::size_t>(std::llround(opt.window_periods * rep.carrier_period / dt));
    rep.window_samples = std::clamp<std::size_t>(window, 2, n);
    const std::size_t w = rep.window_samples;

    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i] * x[i];
    const std::size_t last_start = n - w;
    rep.envelope.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t s = std::min(i, last_start);
        rep.envelope[i] = std::sqrt(std::max(prefix[s + w] - prefix[s], 0.0) / w);
    }
    rep.initial_envelope = rep.envelope[0];

    const double low = opt.collapse_fraction * rep.initial_envelope;
    const std::size_t sustain = static_cast<std::size_t>(opt.sustain_windows) * w;
    // next_high[i]: first index >= i where the envelope is back at or above `low`
    std::vector<std::size_t> next_high(n + 1, n);
    for (std::size_t i = n; i-- > 0;) next_high[i] = rep.envelope[i] >= low ? i : next_high[i + 1];
    std::optional<std::size_t> collapse;
    for (std::size_t i = 0; i + sustain <= last_start; ++i) {
        if (next_high[i] > i + sustain) {
            collapse = i;
            break;
        }
    }
    if (!collapse) return rep;
    rep.collapse_time = signal.times[*collapse];

    const double high = opt.revival_fraction * rep.initial_envelope;
    std::size_t i = *collapse;
    while (i <= last_start) {
        if (rep.envelope[i] <= high) { ++i; continue; }
        std::size_t peak = i;
        while (i <= last_start && rep.envelope[i] > high) {
            if (rep.envelope[i] > rep.envelope[peak]) peak = i;
            ++i;
        }
        rep.revival_times.push_back(signal.times[peak]);
    }
    return rep;
}

struct IncommensurabilityReport {
    double min_distance{std::numeric_limits<double>::infinity()};
    std::size_t pair_index{0}; // spacings (pair_index, pair_index + 1)
    double ratio{0.0};         // spacing[pair_index + 1] / spacing[pair_index]
    long p{0};
    long q{1};
    std::vector<double> spacings;
};

// For consecutive level spacings s_i, s_{i+1}: distance from s_{i+1}/s_i to the nearest p/q
// with q <= qmax. Reports the smallest such distance.
inline IncommensurabilityReport incommensurability_measure(std::vector<double> energies, int qmax) {
    if (qmax < 1) throw DomainError("incommensurability_measure: qmax must be positive");
    std::sort(energies.begin(), energies.end());
    double scale = 0.0;
    for (double e : energies) scale = std::max(scale, std::abs(e));
    std::vector<double> distinct;
    for (double e : energies)
        if (distinct.empty() || e - distinct.back() > 1e-12 * std::max(scale, 1.0)) distinct.push_back(e);
    if (distinct.size() < 3) throw DomainError("incommensurability_measure: need at least three distinct energies");

    IncommensurabilityReport rep;
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) rep.spacings.push_back(distinct[i + 1] - distinct[i]);
    for (std::size_t i = 0; i + 1 < rep.spacings.size(); ++i) {
        const double ratio = rep.spacings[i + 1] / rep.spacings[i];
        for (long q = 1; q <= qmax; ++q) {
            const long p = std::lround(ratio * q);
            const double dist = std::abs(ratio - static_cast<double>(p) / q);
            if (dist < rep.min_distance) {
                rep.min_distance = dist;
                rep.pair_index = i;
                rep.ratio = ratio;
                rep.p = p;
                rep.q = q;
            }
        }
    }
    return rep;
}

} // namespace slpd
