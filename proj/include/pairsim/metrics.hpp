// Figures of merit derived from CountRecords: the coincidence-to-accidental
// ratio, the classical-inequality statistic with its uncertainty, visibility
// fits of interference fringes, and the CAR-vs-power sweep.
//
// Error bars treat every count as an independent Poisson variable.  The
// correlation between a coincidence count and its delayed-gate accidental
// estimate is second order at these rates and is neglected.

#pragma once

#include "pairsim/detection.hpp"
#include "pairsim/driver.hpp"

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pairsim {

struct CarResult {
    double value = 0.0;
    double sigma = 0.0;
    bool defined = false;  // false when the accidental estimate is zero
};

// coincidences / accidentals with independent-Poisson error propagation.
inline CarResult car(const CountRecord& rec) {
    CarResult r;
    if (rec.accidentals_estimate == 0) return r;  // flagged, not a crash
    const double c = static_cast<double>(rec.coincidences);
    const double a = static_cast<double>(rec.accidentals_estimate);
    r.value = c / a;
    r.sigma = std::sqrt(c / (a * a) + c * c / (a * a * a));
    r.defined = true;
    return r;
}

struct InequalityResult {
    double lhs = 0.0;      // per-gate rate
    double sigma = 0.0;    // standard error of lhs
    double n_sigma = 0.0;  // lhs / sigma; positive means nonclassical
};

// Classical bound on coincidence excesses: the signal-idler excess minus
// twice the two split-channel excesses, as per-gate rates.  Positive values
// cannot be produced by two classical light sources.
inline InequalityResult zou_mandel_lhs(const CountRecord& si, const CountRecord& s_split,
                                       const CountRecord& i_split) {
    if (si.gates == 0 || si.gates != s_split.gates || si.gates != i_split.gates)
        throw std::invalid_argument("inequality records must share one gate count");
    const double g = static_cast<double>(si.gates);
    const auto excess = [](const CountRecord& r) {
        return static_cast<double>(r.coincidences) -
               static_cast<double>(r.accidentals_estimate);
    };
    const auto variance = [](const CountRecord& r) {
        return static_cast<double>(r.coincidences) +
               static_cast<double>(r.accidentals_estimate);
    };
    InequalityResult out;
    out.lhs = (excess(si) - 2.0 * (excess(s_split) + excess(i_split))) / g;
    const double var = variance(si) + 4.0 * (variance(s_split) + variance(i_split));
    out.sigma = std::sqrt(var) / g;
    out.n_sigma = out.sigma > 0.0 ? out.lhs / out.sigma : 0.0;
    return out;
}

struct FringePoint {
    double theta2 = 0.0;  // radians
    CountRecord rec;
};

struct FringeDataset {
    double theta1 = 0.0;  // radians, fixed analyzer
    std::vector<FringePoint> points;
};

struct FringeFit {
    double amplitude = 0.0;         // A in A cos^2(theta1 - theta2 - phase) + B
    double offset = 0.0;            // B
    double phase = 0.0;             // radians, normalized to [0, pi)
    double visibility = 0.0;        // A / (A + 2B)
    double visibility_sigma = 0.0;  // statistical error of the fit
    double chi2_per_dof = 0.0;
};

class IllPosedFitError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Weighted least squares of C(theta2) = A cos^2(theta1 - theta2 - phase) + B
// with Poisson weights 1/max(count, 1).  The model is linear on the basis
// {1, cos 2t, sin 2t}, so the fit is a single 3x3 solve with an exact global
// optimum; no accidental subtraction is applied.
inline FringeFit visibility_fit(const FringeDataset& ds) {
    const std::size_t n = ds.points.size();
    std::vector<double> distinct;
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = ds.points[i].theta2;
        if (i == 0) lo = hi = t;
        lo = std::min(lo, t);
        hi = std::max(hi, t);
        bool seen = false;
        for (double d : distinct) seen = seen || d == t;
        if (!seen) distinct.push_back(t);
    }
    if (distinct.size() < 6)
        throw IllPosedFitError("fringe fit needs at least 6 distinct analyzer angles");
    if (hi - lo < std::numbers::pi - 1e-9)
        throw IllPosedFitError("fringe fit needs theta2 coverage of at least pi");

    // Normal equations for beta = (c0, cc, cs).
    double m[3][3] = {};
    double b[3] = {};
    for (const auto& p : ds.points) {
        const double y = static_cast<double>(p.rec.coincidences);
        const double w = 1.0 / std::max(y, 1.0);
        const double x[3] = {1.0, std::cos(2.0 * p.theta2), std::sin(2.0 * p.theta2)};
        for (int r = 0; r < 3; ++r) {
            b[r] += w * x[r] * y;
            for (int c = 0; c < 3; ++c) m[r][c] += w * x[r] * x[c];
        }
    }

    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if (!(std::abs(det) > 1e-30))
        throw IllPosedFitError("fringe fit design matrix is singular");

    // Inverse of the symmetric normal matrix doubles as the fit covariance.
    double inv[3][3];
    inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;

    double beta[3];
    for (int r = 0; r < 3; ++r)
        beta[r] = inv[r][0] * b[0] + inv[r][1] * b[1] + inv[r][2] * b[2];

    const double c0 = beta[0], cc = beta[1], cs = beta[2];
    if (!(c0 > 0.0)) throw IllPosedFitError("fringe has no counts to fit");
    const double rmod = std::sqrt(cc * cc + cs * cs);

    FringeFit fit;
    fit.amplitude = 2.0 * rmod;
    fit.offset = std::max(0.0, c0 - rmod);
    const double psi = std::atan2(cs, cc);  // = 2 (theta1 - phase)
    double phase = ds.theta1 - 0.5 * psi;
    phase = std::fmod(phase, std::numbers::pi);
    if (phase < 0.0) phase += std::numbers::pi;
    fit.phase = phase;
    fit.visibility = std::min(1.0, rmod / c0);

    if (rmod > 0.0) {
        const double g0 = -rmod / (c0 * c0);
        const double g1 = cc / (rmod * c0);
        const double g2 = cs / (rmod * c0);
        const double grad[3] = {g0, g1, g2};
        double var = 0.0;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) var += grad[r] * inv[r][c] * grad[c];
        fit.visibility_sigma = std::sqrt(std::max(0.0, var));
    } else {
        fit.visibility_sigma = std::sqrt(std::max(0.0, inv[1][1] + inv[2][2])) / c0;
    }

    double chi2 = 0.0;
    for (const auto& p : ds.points) {
        const double y = static_cast<double>(p.rec.coincidences);
        const double w = 1.0 / std::max(y, 1.0);
        const double model = c0 + cc * std::cos(2.0 * p.theta2) + cs * std::sin(2.0 * p.theta2);
        chi2 += w * (y - model) * (y - model);
    }
    fit.chi2_per_dof = chi2 / static_cast<double>(n - 3);
    return fit;
}

struct SweepPoint {
    double power_uw = 0.0;
    CarResult car;
    InequalityResult inequality;
};

// For each power: one signal-idler run plus the two split-channel runs, all
// on substreams derived from (plan seed, point index, kind).
inline std::vector<SweepPoint> car_power_sweep(const ExperimentPlan& plan,
                                               std::span<const double> powers,
                                               std::uint64_t gates_per_point, int workers) {
    for (std::size_t i = 0; i < powers.size(); ++i) {
        if (!(powers[i] > 0.0))
            throw std::invalid_argument("sweep powers must be positive");
        if (i > 0 && !(powers[i] > powers[i - 1]))
            throw std::invalid_argument("sweep powers must be ascending");
    }
    std::vector<SweepPoint> out;
    out.reserve(powers.size());
    for (std::size_t i = 0; i < powers.size(); ++i) {
        const std::uint64_t point_seed = derive_seed(plan.seed, i);
        const CountRecord si = run_plan_kind(plan, ExperimentKind::SignalIdler, powers[i],
                                             gates_per_point, point_seed, workers);
        const CountRecord ss = run_plan_kind(plan, ExperimentKind::SignalSplit, powers[i],
                                             gates_per_point, point_seed, workers);
        const CountRecord is = run_plan_kind(plan, ExperimentKind::IdlerSplit, powers[i],
                                             gates_per_point, point_seed, workers);
        SweepPoint pt;
        pt.power_uw = powers[i];
        pt.car = car(si);
        pt.inequality = zou_mandel_lhs(si, ss, is);
        out.push_back(pt);
    }
    return out;
}

} // namespace pairsim
