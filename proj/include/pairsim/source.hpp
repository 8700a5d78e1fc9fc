// Pump, pair-generation and noise-photon statistics for four-photon
// scattering in the waveguide.
//
// Pair numbers are Poissonian: pulsed multimode scattering behind broadband
// filters is well approximated that way, and per-pulse rates here stay small
// (<~ 0.8 pairs/pulse at the top of the power sweeps).  Raman noise scales
// linearly with in-waveguide power; amplifier noise enters as a constant
// per-pulse floor set by the amplifier, not by waveguide power.

#pragma once

#include "pairsim/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace pairsim {

struct PumpConfig {
    double center_wavelength_nm = 1555.9;
    double pulse_duration_ps = 5.0;
    double rep_rate_mhz = 50.3;
    double avg_power_uw = 96.0;  // per pump, in the waveguide
};

enum class ChannelKind { NonDegenerate, Degenerate };

struct ChannelPlan {
    ChannelKind kind = ChannelKind::NonDegenerate;
    std::vector<double> pump_wavelengths_nm{1555.9};  // 1 entry, or 2 when degenerate
    double signal_nm = 1550.95;
    double idler_nm = 1561.0;
    double signal_filter_fwhm_nm = 1.0;
    double idler_filter_fwhm_nm = 1.0;
};

struct SourceParams {
    double kappa_pairs_per_uw2 = 0.08 / (96.0 * 96.0);  // pairs/pulse/uW^2
    double raman_per_uw = 5e-6;    // noise photons/pulse/uW, per channel
    double ase_floor = 0.0;        // noise photons/pulse, per channel
    double noise_polarized_fraction = 0.0;  // 0 = unpolarized background
};

struct DetuningResult {
    double detuning = 0.0;   // |sum(pump freq) - nu_s - nu_i| / (nu_s + nu_i)
    double tolerance = 0.0;  // summed fractional filter half-widths
    bool pass = false;
};

// Frequency bookkeeping in vacuum-wavelength reciprocals (1/nm).  The
// normalization by the summed output frequencies keeps the result symmetric
// under a signal/idler swap.
inline DetuningResult check_energy_conservation(const ChannelPlan& plan) {
    const std::size_t want_pumps = plan.kind == ChannelKind::NonDegenerate ? 1u : 2u;
    if (plan.pump_wavelengths_nm.size() != want_pumps)
        throw std::invalid_argument("channel plan has the wrong pump count");
    for (double wl : plan.pump_wavelengths_nm)
        if (!(wl > 0.0)) throw std::invalid_argument("pump wavelength must be positive");
    if (!(plan.signal_nm > 0.0) || !(plan.idler_nm > 0.0))
        throw std::invalid_argument("output wavelengths must be positive");

    double pump_sum = 0.0;
    if (plan.kind == ChannelKind::NonDegenerate) {
        pump_sum = 2.0 / plan.pump_wavelengths_nm[0];
    } else {
        pump_sum = 1.0 / plan.pump_wavelengths_nm[0] + 1.0 / plan.pump_wavelengths_nm[1];
    }
    const double nu_out = 1.0 / plan.signal_nm + 1.0 / plan.idler_nm;

    DetuningResult r;
    r.detuning = std::abs(pump_sum - nu_out) / nu_out;
    r.tolerance = 0.5 * plan.signal_filter_fwhm_nm / plan.signal_nm +
                  0.5 * plan.idler_filter_fwhm_nm / plan.idler_nm;
    r.pass = r.detuning <= r.tolerance;
    return r;
}

// Mean pairs per pulse at the given power per pump.  Non-degenerate pumping
// consumes two photons from the one pump (kappa * P^2); degenerate pumping
// consumes one photon from each pump, which at equal powers reduces to the
// same quadratic law with kappa read as a product-of-powers coefficient.
inline double mean_pairs(const SourceParams& params, const ChannelPlan& plan,
                         double power_per_pump_uw) {
    (void)plan;  // both kinds share the quadratic law at equal pump powers
    if (power_per_pump_uw < 0.0)
        throw std::invalid_argument("pump power must be nonnegative");
    return params.kappa_pairs_per_uw2 * power_per_pump_uw * power_per_pump_uw;
}

// Degenerate pumping with unequal powers: kappa * P1 * P2.
inline double mean_pairs_product(const SourceParams& params, double p1_uw, double p2_uw) {
    if (p1_uw < 0.0 || p2_uw < 0.0)
        throw std::invalid_argument("pump power must be nonnegative");
    return params.kappa_pairs_per_uw2 * p1_uw * p2_uw;
}

// Mean background photons per pulse per channel.
inline double mean_noise(const SourceParams& params, double power_per_pump_uw) {
    return params.raman_per_uw * power_per_pump_uw + params.ase_floor;
}

// Poisson pair count for one pulse; mutates only the caller's rng.
inline int sample_pair_count(double mu, Rng& rng) {
    if (mu < 0.0) throw std::invalid_argument("mean pair rate must be nonnegative");
    return rng.poisson(mu);
}

} // namespace pairsim
