// Assembles domain objects from a validated ExperimentPlan and runs one
// counting experiment.  This is the one place where the on-disk degree
// convention turns into radians.
//
// Seed discipline: every Monte Carlo run executes on
//   derive_seed(derive_seed(master, point_index), kind_tag)
// so sweep points and experiment kinds get independent substreams that do
// not depend on worker count or scheduling.

#pragma once

#include "pairsim/config.hpp"
#include "pairsim/detection.hpp"
#include "pairsim/sagnac.hpp"
#include "pairsim/source.hpp"

#include <numbers>

namespace pairsim {

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

inline std::uint64_t kind_tag(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::SignalIdler: return 11;
        case ExperimentKind::SignalSplit: return 12;
        case ExperimentKind::IdlerSplit: return 13;
        case ExperimentKind::DegeneratePostselected: return 14;
    }
    return 10;
}

inline LoopConfig loop_config(const ExperimentPlan& plan) {
    LoopConfig cfg;
    cfg.hwp1_angle = deg2rad(plan.loop.hwp1_deg);
    cfg.qwp1_angle = deg2rad(plan.loop.qwp1_deg);
    cfg.loop_phase = deg2rad(plan.loop.loop_phase_deg);
    cfg.residual1 = PolUnitary::rotation(deg2rad(plan.loop.residual_rot1_deg));
    cfg.residual2 = PolUnitary::rotation(deg2rad(plan.loop.residual_rot2_deg));
    return cfg;
}

// Analyzer angles in radians.  Compensation mode adds the loop-plate angle
// to both detection angles; the default pipeline leaves it off because the
// backward pass is an exact invariance on the maximally entangled state.
inline AnalyzerSetting analyzer_setting(const ExperimentPlan& plan) {
    AnalyzerSetting a;
    a.theta1 = deg2rad(plan.analyzers.theta1_deg);
    a.theta2 = deg2rad(plan.analyzers.theta2_deg);
    a.compensation_offset =
        plan.analyzers.compensation ? compensation_offsets(deg2rad(plan.loop.hwp1_deg)) : 0.0;
    return a;
}

// State arriving at the analyzers: loop output, then the backward pass
// through the loop half-wave plate.
inline TwoPhotonState state_for(const ExperimentPlan& plan) {
    const LoopConfig cfg = loop_config(plan);
    return backward_hwp1(generated_state(cfg), cfg.hwp1_angle);
}

// Mean pairs per pulse at a per-pump power.  The second degenerate pump may
// carry its own power; a sweep override drives both pumps together.
inline double mu_for(const ExperimentPlan& plan, double power_per_pump_uw) {
    if (plan.channels.kind == ChannelKind::Degenerate && plan.pump_power2_uw &&
        power_per_pump_uw == plan.pump.avg_power_uw) {
        return mean_pairs_product(plan.source, plan.pump.avg_power_uw, *plan.pump_power2_uw);
    }
    return mean_pairs(plan.source, plan.channels, power_per_pump_uw);
}

inline McOptions mc_options(const ExperimentPlan& plan, std::uint64_t seed, int workers) {
    McOptions o;
    o.seed = seed;
    o.workers = workers;
    o.classical_surrogate = plan.classical_surrogate;
    o.noise_polarized_fraction = plan.source.noise_polarized_fraction;
    return o;
}

// One counting run of the given kind at the given per-pump power.
inline CountRecord run_plan_kind(const ExperimentPlan& plan, ExperimentKind kind,
                                 double power_per_pump_uw, std::uint64_t gates,
                                 std::uint64_t point_seed, int workers,
                                 const AnalyzerSetting* analyzers_override = nullptr) {
    const double mu = mu_for(plan, power_per_pump_uw);
    const double nu = mean_noise(plan.source, power_per_pump_uw);
    const TwoPhotonState state = state_for(plan);
    const AnalyzerSetting analyzers =
        analyzers_override ? *analyzers_override : analyzer_setting(plan);
    const McOptions opts =
        mc_options(plan, derive_seed(point_seed, kind_tag(kind)), workers);
    return run_gates(gates, state, mu, nu, analyzers, plan.detectors, kind, opts);
}

} // namespace pairsim
