// Exact complex linear algebra for one- and two-photon polarization states.
//
// Conventions used throughout the library:
//   * Jones vectors live on the {|H>, |V>} basis.
//   * A half-wave plate with fast axis at theta is the real reflection
//     [[cos 2t, sin 2t], [sin 2t, -cos 2t]] (global phase dropped).
//   * A quarter-wave plate retards the slow axis by pi/2; the phase is fixed
//     so that qwp(0) = diag(1, i).  Two identical quarter waves compose to
//     the matching half wave with no leftover phase.
//   * Two-photon amplitudes are ordered (HH, HV, VH, VV); photon 1 is the
//     idler channel, photon 2 the signal channel.
//   * Analyzer angles are detection angles.  A physical half-wave-plate
//     analyzer set to phi measures the detection angle theta = 2*phi; the
//     mapping is documented here and applied by callers, never enforced.
//   * States equal "up to global phase" are compared by fidelity
//     |<a|b>|^2, never amplitude-wise.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace pairsim {

using Complex = std::complex<double>;

struct JonesVector {
    Complex h{0.0, 0.0};
    Complex v{0.0, 0.0};

    double norm2() const { return std::norm(h) + std::norm(v); }
};

// Analyzer state for a linear polarizer at detection angle theta.
inline JonesVector linear_projector(double theta) {
    return {Complex{std::cos(theta), 0.0}, Complex{std::sin(theta), 0.0}};
}

// 2x2 unitary acting on one photon's polarization.
class PolUnitary {
  public:
    PolUnitary() : m_{Complex{1, 0}, Complex{0, 0}, Complex{0, 0}, Complex{1, 0}} {}
    PolUnitary(Complex a, Complex b, Complex c, Complex d) : m_{a, b, c, d} {}

    static PolUnitary identity() { return {}; }

    // Real rotation by angle (counterclockwise in the H/V plane).
    static PolUnitary rotation(double angle) {
        const double c = std::cos(angle), s = std::sin(angle);
        return {Complex{c, 0}, Complex{-s, 0}, Complex{s, 0}, Complex{c, 0}};
    }

    Complex at(int row, int col) const { return m_[row * 2 + col]; }

    JonesVector apply(const JonesVector& j) const {
        return {m_[0] * j.h + m_[1] * j.v, m_[2] * j.h + m_[3] * j.v};
    }

    PolUnitary compose(const PolUnitary& rhs) const {  // (*this) * rhs
        return {m_[0] * rhs.m_[0] + m_[1] * rhs.m_[2],
                m_[0] * rhs.m_[1] + m_[1] * rhs.m_[3],
                m_[2] * rhs.m_[0] + m_[3] * rhs.m_[2],
                m_[2] * rhs.m_[1] + m_[3] * rhs.m_[3]};
    }

    PolUnitary adjoint() const {
        return {std::conj(m_[0]), std::conj(m_[2]),
                std::conj(m_[1]), std::conj(m_[3])};
    }

    // Max elementwise deviation of U U^dagger from the identity.
    double unitarity_defect() const {
        const PolUnitary p = compose(adjoint());
        double worst = 0.0;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) {
                const Complex want = (r == c) ? Complex{1, 0} : Complex{0, 0};
                worst = std::max(worst, std::abs(p.at(r, c) - want));
            }
        return worst;
    }

    bool is_unitary(double tol = 1e-12) const { return unitarity_defect() <= tol; }

  private:
    std::array<Complex, 4> m_;
};

// Half-wave plate, fast axis at theta.
inline PolUnitary hwp(double theta) {
    const double c = std::cos(2.0 * theta), s = std::sin(2.0 * theta);
    return {Complex{c, 0}, Complex{s, 0}, Complex{s, 0}, Complex{-c, 0}};
}

// Quarter-wave plate, fast axis at theta: R(theta) diag(1, i) R(-theta).
inline PolUnitary qwp(double theta) {
    const PolUnitary r = PolUnitary::rotation(theta);
    const PolUnitary d{Complex{1, 0}, Complex{0, 0}, Complex{0, 0}, Complex{0, 1}};
    return r.compose(d).compose(r.adjoint());
}

// Two-photon polarization state; amplitudes over (HH, HV, VH, VV).
struct TwoPhotonState {
    std::array<Complex, 4> amps{};

    double norm2() const {
        double n = 0.0;
        for (const auto& a : amps) n += std::norm(a);
        return n;
    }

    TwoPhotonState normalized() const {
        const double n = std::sqrt(norm2());
        if (n <= 0.0) throw std::invalid_argument("cannot normalize null state");
        TwoPhotonState out;
        for (int i = 0; i < 4; ++i) out.amps[i] = amps[i] / n;
        return out;
    }
};

inline Complex inner(const TwoPhotonState& a, const TwoPhotonState& b) {
    Complex acc{0.0, 0.0};
    for (int i = 0; i < 4; ++i) acc += std::conj(a.amps[i]) * b.amps[i];
    return acc;
}

// |<a|b>|^2 — the phase-insensitive state comparison.
inline double fidelity(const TwoPhotonState& a, const TwoPhotonState& b) {
    return std::norm(inner(a, b));
}

inline TwoPhotonState bell_phi_plus() {
    const double r = 1.0 / std::sqrt(2.0);
    TwoPhotonState s;
    s.amps = {Complex{r, 0}, Complex{0, 0}, Complex{0, 0}, Complex{r, 0}};
    return s;
}

// Product state |j1>|j2> (photon 1 first).
inline TwoPhotonState two_photon_product(const JonesVector& j1, const JonesVector& j2) {
    TwoPhotonState s;
    s.amps = {j1.h * j2.h, j1.h * j2.v, j1.v * j2.h, j1.v * j2.v};
    return s;
}

// Apply u to photon `which` (1 = idler slot, 2 = signal slot).
inline TwoPhotonState apply_single(const PolUnitary& u, int which, const TwoPhotonState& s) {
    TwoPhotonState out;
    if (which == 1) {
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                out.amps[a * 2 + b] =
                    u.at(a, 0) * s.amps[b] + u.at(a, 1) * s.amps[2 + b];
    } else if (which == 2) {
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                out.amps[a * 2 + b] =
                    u.at(b, 0) * s.amps[a * 2] + u.at(b, 1) * s.amps[a * 2 + 1];
    } else {
        throw std::invalid_argument("photon index must be 1 or 2");
    }
    return out;
}

inline TwoPhotonState apply_both(const PolUnitary& u1, const PolUnitary& u2,
                                 const TwoPhotonState& s) {
    return apply_single(u2, 2, apply_single(u1, 1, s));
}

// Joint probability that photon 1 passes an analyzer at theta1 and photon 2
// one at theta2: |<theta1|<theta2| s>|^2.  For the Phi+ Bell state this is
// cos^2(theta1 - theta2) / 2.
inline double coincidence_prob(const TwoPhotonState& s, double theta1, double theta2) {
    const double c1 = std::cos(theta1), s1 = std::sin(theta1);
    const double c2 = std::cos(theta2), s2 = std::sin(theta2);
    const Complex amp = c1 * c2 * s.amps[0] + c1 * s2 * s.amps[1] +
                        s1 * c2 * s.amps[2] + s1 * s2 * s.amps[3];
    return std::norm(amp);
}

// Marginal probability that photon `which` alone passes an analyzer at theta.
inline double single_pass_prob(const TwoPhotonState& s, int which, double theta) {
    const double c = std::cos(theta), sn = std::sin(theta);
    if (which == 1) {
        const Complex b0 = c * s.amps[0] + sn * s.amps[2];
        const Complex b1 = c * s.amps[1] + sn * s.amps[3];
        return std::norm(b0) + std::norm(b1);
    }
    if (which == 2) {
        const Complex a0 = c * s.amps[0] + sn * s.amps[1];
        const Complex a1 = c * s.amps[2] + sn * s.amps[3];
        return std::norm(a0) + std::norm(a1);
    }
    throw std::invalid_argument("photon index must be 1 or 2");
}

} // namespace pairsim
