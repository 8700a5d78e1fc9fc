// Gated Monte Carlo photon counting.
//
// One gate = one pump pulse seen by both gated detectors.  Per gate the
// engine samples a Poisson pair number, draws a joint analyzer outcome per
// pair, adds Poisson background photons per channel, thins everything by the
// detection efficiencies, and ORs in dark counts.  A detector registers at
// most one click per gate; a coincidence is both detectors clicking in the
// same gate.  Accidentals are estimated by the delayed-gate method: the
// channel-2 click stream is shifted by exactly one gate.
//
// Gates are processed in fixed-size blocks of kBlockGates.  Each block runs
// on its own rng substream derived from (seed, block index), so the merged
// record is bit-identical for any worker count.  Block boundaries exchange
// one bit of click history so the delayed-gate estimate is exact across the
// whole run.

#pragma once

#include "pairsim/polarization.hpp"
#include "pairsim/rng.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

namespace pairsim {

struct DetectorConfig {
    double eta_signal = 0.007;   // total detection efficiency, channel 2
    double eta_idler = 0.008;    // total detection efficiency, channel 1
    double dark_prob = 5e-6;     // dark click probability per gate per detector
    double gate_rate_khz = 780.0;  // 50.3 MHz pulses downcounted ~1/64 (786 kHz nominal)
};

// Detection angles in radians; channel 1 analyzes the idler arm, channel 2
// the signal arm.  compensation_offset is added to both when the analyzer
// compensation mode is on (it is 0 otherwise).
struct AnalyzerSetting {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double compensation_offset = 0.0;

    double effective1() const { return theta1 + compensation_offset; }
    double effective2() const { return theta2 + compensation_offset; }
};

enum class ExperimentKind { SignalIdler, SignalSplit, IdlerSplit, DegeneratePostselected };
enum class SplitChannel { Signal, Idler };

struct CountRecord {
    std::uint64_t gates = 0;
    std::uint64_t singles_1 = 0;
    std::uint64_t singles_2 = 0;
    std::uint64_t coincidences = 0;
    std::uint64_t accidentals_estimate = 0;
};

struct McOptions {
    std::uint64_t seed = 1;
    int workers = 1;
    bool classical_surrogate = false;
    double noise_polarized_fraction = 0.0;
};

namespace detail {

inline constexpr std::uint64_t kBlockGates = 1u << 16;

// Pass probability of a background photon at an analyzer.  The polarized
// fraction is horizontal (the waveguide mode axis mapped onto the analyzer
// frame); the rest passes with probability 1/2.
inline double noise_pass_prob(double theta_eff, double polarized_fraction) {
    const double c = std::cos(theta_eff);
    return polarized_fraction * c * c + (1.0 - polarized_fraction) * 0.5;
}

// Click from `photons` passing candidates with per-photon efficiency eta,
// then a dark draw if nothing fired.
inline bool detect_click(int photons, double eta, double dark, Rng& rng) {
    for (int i = 0; i < photons; ++i)
        if (rng.bernoulli(eta)) return true;
    return dark > 0.0 && rng.bernoulli(dark);
}

// Route photons through a 50/50 splitter and detect on both outputs.
// A single photon can never produce two clicks.
inline std::pair<bool, bool> route_and_detect(int photons, double eta1, double eta2,
                                              double dark1, double dark2, Rng& rng) {
    int side1 = 0, side2 = 0;
    for (int i = 0; i < photons; ++i) {
        if (rng.uniform() < 0.5)
            ++side1;
        else
            ++side2;
    }
    return {detect_click(side1, eta1, dark1, rng), detect_click(side2, eta2, dark2, rng)};
}

struct PairGateKernel {
    double mu = 0.0, exp_neg_mu = 1.0;
    double nu = 0.0, exp_neg_nu = 1.0;
    // Cumulative joint-outcome thresholds: (pass,pass), (pass,fail), (fail,pass).
    double thr_pp = 0.0, thr_pf = 0.0, thr_fp = 0.0;
    double w1 = 0.5, w2 = 0.5;
    double eta1 = 0.0, eta2 = 0.0, dark1 = 0.0, dark2 = 0.0;

    std::pair<bool, bool> gate(Rng& rng) const {
        int pass1 = 0, pass2 = 0;
        const int pairs = rng.poisson_expneg(mu, exp_neg_mu);
        for (int i = 0; i < pairs; ++i) {
            const double u = rng.uniform();
            if (u < thr_pp) {
                ++pass1;
                ++pass2;
            } else if (u < thr_pf) {
                ++pass1;
            } else if (u < thr_fp) {
                ++pass2;
            }
        }
        if (nu > 0.0) {
            const int c1 = rng.poisson_expneg(nu, exp_neg_nu);
            for (int i = 0; i < c1; ++i) pass1 += rng.bernoulli(w1);
            const int c2 = rng.poisson_expneg(nu, exp_neg_nu);
            for (int i = 0; i < c2; ++i) pass2 += rng.bernoulli(w2);
        }
        return {detect_click(pass1, eta1, dark1, rng),
                detect_click(pass2, eta2, dark2, rng)};
    }
};

// Classical stand-in: two independent Poisson photon streams whose mean
// detected intensity matches the quantum run's singles, with no joint term.
struct SurrogateGateKernel {
    double p_photon1 = 0.0, p_photon2 = 0.0;  // 1 - exp(-lambda * eta)
    double dark1 = 0.0, dark2 = 0.0;

    std::pair<bool, bool> gate(Rng& rng) const {
        bool c1 = rng.bernoulli(p_photon1);
        if (!c1 && dark1 > 0.0) c1 = rng.bernoulli(dark1);
        bool c2 = rng.bernoulli(p_photon2);
        if (!c2 && dark2 > 0.0) c2 = rng.bernoulli(dark2);
        return {c1, c2};
    }
};

struct SelfSplitGateKernel {
    double lambda = 0.0, exp_neg_lambda = 1.0;  // pairs' channel photons + noise
    double eta1 = 0.0, eta2 = 0.0, dark1 = 0.0, dark2 = 0.0;

    std::pair<bool, bool> gate(Rng& rng) const {
        const int photons = rng.poisson_expneg(lambda, exp_neg_lambda);
        return route_and_detect(photons, eta1, eta2, dark1, dark2, rng);
    }
};

struct DegenerateGateKernel {
    double mu = 0.0, exp_neg_mu = 1.0;
    double nu = 0.0, exp_neg_nu = 1.0;
    // Split pairs (weight 1/2): photon 1 exits to side 1, photon 2 to side 2.
    double split_pp = 0.0, split_p1 = 0.0, split_p2 = 0.0;  // cumulative
    // Unsplit pairs (weight 1/4 each side): both photons meet one analyzer.
    double side1_two = 0.0, side1_one = 0.0;  // cumulative
    double side2_two = 0.0, side2_one = 0.0;  // cumulative
    double w1 = 0.5, w2 = 0.5;
    double eta1 = 0.0, eta2 = 0.0, dark1 = 0.0, dark2 = 0.0;

    std::pair<bool, bool> gate(Rng& rng) const {
        int pass1 = 0, pass2 = 0;
        const int pairs = rng.poisson_expneg(mu, exp_neg_mu);
        for (int i = 0; i < pairs; ++i) {
            const double u = rng.uniform();
            const double v = rng.uniform();
            if (u < 0.5) {
                if (v < split_pp) {
                    ++pass1;
                    ++pass2;
                } else if (v < split_p1) {
                    ++pass1;
                } else if (v < split_p2) {
                    ++pass2;
                }
            } else if (u < 0.75) {
                if (v < side1_two)
                    pass1 += 2;
                else if (v < side1_one)
                    pass1 += 1;
            } else {
                if (v < side2_two)
                    pass2 += 2;
                else if (v < side2_one)
                    pass2 += 1;
            }
        }
        if (nu > 0.0) {
            const int c = rng.poisson_expneg(nu, exp_neg_nu);
            for (int i = 0; i < c; ++i) {
                if (rng.uniform() < 0.5)
                    pass1 += rng.bernoulli(w1);
                else
                    pass2 += rng.bernoulli(w2);
            }
        }
        return {detect_click(pass1, eta1, dark1, rng),
                detect_click(pass2, eta2, dark2, rng)};
    }
};

struct BlockResult {
    std::uint64_t singles1 = 0, singles2 = 0, coinc = 0, acc_internal = 0;
    bool first_click1 = false, last_click2 = false;
};

template <class Kernel>
BlockResult run_block(const Kernel& kernel, std::uint64_t gate_count, Rng rng) {
    BlockResult out;
    bool prev_click2 = false;
    for (std::uint64_t g = 0; g < gate_count; ++g) {
        const auto [c1, c2] = kernel.gate(rng);
        out.singles1 += c1;
        out.singles2 += c2;
        out.coinc += (c1 && c2);
        if (g == 0)
            out.first_click1 = c1;
        else
            out.acc_internal += (c1 && prev_click2);
        prev_click2 = c2;
    }
    out.last_click2 = prev_click2;
    return out;
}

template <class Kernel>
CountRecord simulate(const Kernel& kernel, std::uint64_t n_gates, std::uint64_t seed,
                     int workers) {
    if (n_gates == 0) throw std::invalid_argument("empty run: n_gates must be >= 1");

    const std::uint64_t n_blocks = (n_gates + kBlockGates - 1) / kBlockGates;
    std::vector<BlockResult> blocks(n_blocks);

    const auto run_one = [&](std::uint64_t b) {
        const std::uint64_t lo = b * kBlockGates;
        const std::uint64_t count = std::min<std::uint64_t>(kBlockGates, n_gates - lo);
        blocks[b] = run_block(kernel, count, Rng::seeded(derive_seed(seed, b)));
    };

    const int usable = static_cast<int>(std::min<std::uint64_t>(
        n_blocks, static_cast<std::uint64_t>(std::max(workers, 1))));
    if (usable <= 1) {
        for (std::uint64_t b = 0; b < n_blocks; ++b) run_one(b);
    } else {
        std::atomic<std::uint64_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(usable));
        for (int t = 0; t < usable; ++t)
            pool.emplace_back([&] {
                for (std::uint64_t b = next.fetch_add(1); b < n_blocks;
                     b = next.fetch_add(1))
                    run_one(b);
            });
        for (auto& th : pool) th.join();
    }

    CountRecord rec;
    rec.gates = n_gates;
    for (std::uint64_t b = 0; b < n_blocks; ++b) {
        rec.singles_1 += blocks[b].singles1;
        rec.singles_2 += blocks[b].singles2;
        rec.coincidences += blocks[b].coinc;
        rec.accidentals_estimate += blocks[b].acc_internal;
        if (b > 0 && blocks[b].first_click1 && blocks[b - 1].last_click2)
            ++rec.accidentals_estimate;
    }
    return rec;
}

inline void validate_detector(const DetectorConfig& det) {
    const auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(det.eta_signal) || !prob(det.eta_idler) || !prob(det.dark_prob))
        throw std::invalid_argument("detector probabilities must lie in [0, 1]");
    if (!(det.gate_rate_khz > 0.0))
        throw std::invalid_argument("gate rate must be positive");
}

} // namespace detail

// HBT arm: all photons of one spectral channel (one per pair, plus that
// channel's background) through a 50/50 splitter onto both detectors.  No
// analyzers are involved.
inline CountRecord run_self_split(std::uint64_t n_gates, SplitChannel channel, double mu,
                                  double noise_mu, const DetectorConfig& det,
                                  const McOptions& opts = {}) {
    detail::validate_detector(det);
    if (mu < 0.0 || noise_mu < 0.0)
        throw std::invalid_argument("rates must be nonnegative");
    (void)channel;  // both detectors serve either channel's splitter output
    detail::SelfSplitGateKernel k;
    k.lambda = mu + noise_mu;
    k.exp_neg_lambda = std::exp(-k.lambda);
    k.eta1 = det.eta_idler;
    k.eta2 = det.eta_signal;
    k.dark1 = det.dark_prob;
    k.dark2 = det.dark_prob;
    return detail::simulate(k, n_gates, opts.seed, opts.workers);
}

// Degenerate scheme: both photons of a pair share one spectral channel and a
// 50/50 splitter; the pair splits with probability 1/2 ((a+)^2 mode algebra),
// split pairs are projected with the two-photon joint law, unsplit pairs can
// contribute at most one click on their side.
inline CountRecord run_degenerate(std::uint64_t n_gates, const TwoPhotonState& state,
                                  double mu, double noise_mu,
                                  const AnalyzerSetting& analyzers,
                                  const DetectorConfig& det, const McOptions& opts = {}) {
    detail::validate_detector(det);
    if (mu < 0.0 || noise_mu < 0.0)
        throw std::invalid_argument("rates must be nonnegative");

    const double t1 = analyzers.effective1();
    const double t2 = analyzers.effective2();
    const double q1t1 = single_pass_prob(state, 1, t1);
    const double q2t1 = single_pass_prob(state, 2, t1);
    const double q1t2 = single_pass_prob(state, 1, t2);
    const double q2t2 = single_pass_prob(state, 2, t2);
    const double j12 = coincidence_prob(state, t1, t2);
    const double j11 = coincidence_prob(state, t1, t1);
    const double j22 = coincidence_prob(state, t2, t2);

    const double w1 = detail::noise_pass_prob(t1, opts.noise_polarized_fraction);
    const double w2 = detail::noise_pass_prob(t2, opts.noise_polarized_fraction);

    if (opts.classical_surrogate) {
        detail::SurrogateGateKernel k;
        const double lam1 = mu * (0.5 * q1t1 + 0.25 * (q1t1 + q2t1)) + 0.5 * noise_mu * w1;
        const double lam2 = mu * (0.5 * q2t2 + 0.25 * (q1t2 + q2t2)) + 0.5 * noise_mu * w2;
        k.p_photon1 = 1.0 - std::exp(-lam1 * det.eta_idler);
        k.p_photon2 = 1.0 - std::exp(-lam2 * det.eta_signal);
        k.dark1 = det.dark_prob;
        k.dark2 = det.dark_prob;
        return detail::simulate(k, n_gates, opts.seed, opts.workers);
    }

    detail::DegenerateGateKernel k;
    k.mu = mu;
    k.exp_neg_mu = std::exp(-mu);
    k.nu = noise_mu;
    k.exp_neg_nu = std::exp(-noise_mu);
    k.split_pp = j12;
    k.split_p1 = j12 + (q1t1 - j12);
    k.split_p2 = k.split_p1 + (q2t2 - j12);
    k.side1_two = j11;
    k.side1_one = j11 + (q1t1 + q2t1 - 2.0 * j11);
    k.side2_two = j22;
    k.side2_one = j22 + (q1t2 + q2t2 - 2.0 * j22);
    k.w1 = w1;
    k.w2 = w2;
    k.eta1 = det.eta_idler;
    k.eta2 = det.eta_signal;
    k.dark1 = det.dark_prob;
    k.dark2 = det.dark_prob;
    return detail::simulate(k, n_gates, opts.seed, opts.workers);
}

// Main entry point; dispatches on the experiment kind.
inline CountRecord run_gates(std::uint64_t n_gates, const TwoPhotonState& state, double mu,
                             double noise_mu, const AnalyzerSetting& analyzers,
                             const DetectorConfig& det, ExperimentKind kind,
                             const McOptions& opts = {}) {
    switch (kind) {
        case ExperimentKind::SignalSplit:
            return run_self_split(n_gates, SplitChannel::Signal, mu, noise_mu, det, opts);
        case ExperimentKind::IdlerSplit:
            return run_self_split(n_gates, SplitChannel::Idler, mu, noise_mu, det, opts);
        case ExperimentKind::DegeneratePostselected:
            return run_degenerate(n_gates, state, mu, noise_mu, analyzers, det, opts);
        case ExperimentKind::SignalIdler:
            break;
        default:
            throw std::invalid_argument("invalid experiment kind");
    }

    detail::validate_detector(det);
    if (mu < 0.0 || noise_mu < 0.0)
        throw std::invalid_argument("rates must be nonnegative");

    const double t1 = analyzers.effective1();
    const double t2 = analyzers.effective2();
    const double q1 = single_pass_prob(state, 1, t1);
    const double q2 = single_pass_prob(state, 2, t2);
    const double joint = coincidence_prob(state, t1, t2);
    const double w1 = detail::noise_pass_prob(t1, opts.noise_polarized_fraction);
    const double w2 = detail::noise_pass_prob(t2, opts.noise_polarized_fraction);

    if (opts.classical_surrogate) {
        detail::SurrogateGateKernel k;
        const double lam1 = mu * q1 + noise_mu * w1;
        const double lam2 = mu * q2 + noise_mu * w2;
        k.p_photon1 = 1.0 - std::exp(-lam1 * det.eta_idler);
        k.p_photon2 = 1.0 - std::exp(-lam2 * det.eta_signal);
        k.dark1 = det.dark_prob;
        k.dark2 = det.dark_prob;
        return detail::simulate(k, n_gates, opts.seed, opts.workers);
    }

    detail::PairGateKernel k;
    k.mu = mu;
    k.exp_neg_mu = std::exp(-mu);
    k.nu = noise_mu;
    k.exp_neg_nu = std::exp(-noise_mu);
    k.thr_pp = joint;
    k.thr_pf = joint + (q1 - joint);
    k.thr_fp = k.thr_pf + (q2 - joint);
    k.w1 = w1;
    k.w2 = w2;
    k.eta1 = det.eta_idler;
    k.eta2 = det.eta_signal;
    k.dark1 = det.dark_prob;
    k.dark2 = det.dark_prob;
    return detail::simulate(k, n_gates, opts.seed, opts.workers);
}

} // namespace pairsim
