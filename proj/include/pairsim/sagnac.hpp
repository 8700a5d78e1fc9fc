// Counter-propagating Sagnac source: pump splitting at the loop PBS, pair
// generation in both directions, coherent recombination into
// p_h|HH> + e^{i phi} p_v|VV>, and the backward pass through the loop
// half-wave plate on the way out.
//
// The pair amplitude in each direction scales with the pump *power* in that
// direction (two pump photons are consumed per pair), so the recombined
// two-photon amplitudes are proportional to the power fractions, not to the
// field amplitudes.

#pragma once

#include "pairsim/polarization.hpp"

#include <cmath>
#include <numbers>

namespace pairsim {

struct LoopConfig {
    double hwp1_angle = std::numbers::pi / 8.0;  // radians; 22.5 deg splits evenly
    double qwp1_angle = 0.0;
    double loop_phase = 0.0;  // relative phase between the HH and VV amplitudes
    // Residual mis-compensation of the fiber controllers, one unitary per
    // output photon.  Identity when alignment is perfect.
    PolUnitary residual1 = PolUnitary::identity();
    PolUnitary residual2 = PolUnitary::identity();
};

struct PumpSplit {
    double p_h = 0.0;  // clockwise fraction (horizontal at the PBS)
    double p_v = 0.0;  // counter-clockwise fraction (vertical at the PBS)
};

// Power fractions behind the loop PBS for a vertically polarized input pump.
// The alignment procedure fixes "all vertical" at hwp1 = 0.
inline PumpSplit pump_split(double hwp1_angle) {
    const double s = std::sin(2.0 * hwp1_angle);
    const double c = std::cos(2.0 * hwp1_angle);
    return {s * s, c * c};
}

// Two-photon state leaving the loop, before the backward half-wave-plate
// pass.  The quarter-wave plate participates through the full Jones chain;
// at qwp1 = 0 the fractions reduce exactly to pump_split().
inline TwoPhotonState generated_state(const LoopConfig& cfg) {
    const JonesVector vertical{Complex{0, 0}, Complex{1, 0}};
    const JonesVector pump = hwp(cfg.hwp1_angle).apply(qwp(cfg.qwp1_angle).apply(vertical));
    const double p_h = std::norm(pump.h);
    const double p_v = std::norm(pump.v);

    TwoPhotonState s;
    s.amps[0] = Complex{p_h, 0.0};
    s.amps[3] = std::polar(p_v, cfg.loop_phase);
    s = s.normalized();
    return apply_both(cfg.residual1, cfg.residual2, s);
}

// The outgoing state traverses HWP1 once more; both photons see the same
// plate.  For the maximally entangled state this is an exact invariance.
inline TwoPhotonState backward_hwp1(const TwoPhotonState& s, double hwp1_angle) {
    const PolUnitary h = hwp(hwp1_angle);
    return apply_both(h, h, s);
}

// Analyzer offset that compensates the backward pass when compensation mode
// is on: the same angle the loop plate is set to.
inline double compensation_offsets(double hwp1_angle) { return hwp1_angle; }

} // namespace pairsim
