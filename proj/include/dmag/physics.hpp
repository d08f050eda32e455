#pragma once
// Closed-form relations of the two-ion sensor: Zeeman phase rates, ac
// Zeeman shift, dc/ac separation algebra and the ideal parity
// probabilities. Everything here is a pure function of its arguments;
// all frequencies are angular (rad/s). CLI boundaries convert to Hz.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dmag {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// wrap to (-pi, pi]
inline double wrap_phase(double x) {
    double r = std::remainder(x, two_pi); // [-pi, pi]
    if (r <= -std::numbers::pi) r += two_pi;
    return r;
}

// wrap to [-pi, pi)
inline double wrap_phase_lower(double x) {
    double r = std::remainder(x, two_pi);
    if (r >= std::numbers::pi) r -= two_pi;
    return r;
}

struct PhysicsConstants {
    double g_S = 2.00225664;              // Lande factor, S_1/2
    double g_D = 1.2003340;               // Lande factor, D_5/2
    double mu_B_over_hbar = two_pi * 13.996245e9; // rad s^-1 T^-1
    double tau_D = 1.17;                  // D-state lifetime per ion (s)
    double Omega_rf = two_pi * 33.0e6;    // trap drive (rad/s)

    // relative tolerance guards; documented defaults, overridable
    double resonance_rel_tol = 1e-9;
    double denominator_rel_tol = 1e-12;

    void validate() const {
        if (!(g_S > 0 && g_D > 0 && mu_B_over_hbar > 0 && tau_D > 0 && Omega_rf > 0))
            throw std::invalid_argument("PhysicsConstants: all fields must be strictly positive");
    }
};

// Relative phase and parity contrast of the sensor state. phi is kept
// unwrapped; wrapped() reduces to (-pi, pi].
struct SensorPhaseState {
    double phi = 0.0;      // rad, unbounded
    double contrast = 1.0; // C in [0, 1]

    double wrapped() const { return wrap_phase(phi); }

    void validate() const {
        if (!(contrast >= 0.0 && contrast <= 1.0))
            throw std::invalid_argument("SensorPhaseState: contrast outside [0, 1]");
    }
};

enum class Manifold { S, D };

inline const char* to_string(Manifold m) { return m == Manifold::S ? "S" : "D"; }

// Sensor-state encoding within one electronic manifold: sublevel
// difference of the entangled pair, Lande factor, and the splitting nu
// between neighboring Zeeman sublevels that enters the ac shift.
struct ManifoldSpec {
    Manifold manifold = Manifold::S;
    int delta_mj = 1;          // 1 for S (m=+-1/2), 5 for D (m=+-5/2)
    double lande = 2.00225664;
    double splitting_nu = two_pi * 10.4e6; // rad/s

    static ManifoldSpec ground_state(const PhysicsConstants& c,
                                     double nu_s = two_pi * 10.4e6) {
        return ManifoldSpec{Manifold::S, 1, c.g_S, nu_s};
    }

    // nu_D defaults to (g_D/g_S) * nu_S: both splittings come from the
    // same quantizing field.
    static ManifoldSpec metastable(const PhysicsConstants& c,
                                   double nu_s = two_pi * 10.4e6) {
        return ManifoldSpec{Manifold::D, 5, c.g_D, (c.g_D / c.g_S) * nu_s};
    }

    void validate(const PhysicsConstants& c) const {
        const bool consistent = (manifold == Manifold::S && delta_mj == 1 && lande == c.g_S) ||
                                (manifold == Manifold::D && delta_mj == 5 && lande == c.g_D);
        if (!consistent)
            throw std::invalid_argument("ManifoldSpec: delta_mj/lande inconsistent with manifold");
        if (!(splitting_nu > 0))
            throw std::invalid_argument("ManifoldSpec: splitting_nu must be positive");
        if (std::abs(splitting_nu - c.Omega_rf) < c.resonance_rel_tol * c.Omega_rf)
            throw std::domain_error("ManifoldSpec: splitting_nu degenerate with trap drive");
    }
};

// Linear Zeeman phase accumulation rate for a field difference delta_B.
inline double dc_phase_rate(double delta_B, double lande, const PhysicsConstants& c) {
    return lande * c.mu_B_over_hbar * delta_B;
}

// Quadratic shift from the rf trap drive field component perpendicular
// to the quantizing field; negative when nu < Omega_rf.
inline double ac_zeeman_shift(double b_rf_perp, const ManifoldSpec& spec,
                              const PhysicsConstants& c) {
    const double nu = spec.splitting_nu;
    if (std::abs(nu - c.Omega_rf) < c.resonance_rel_tol * c.Omega_rf)
        throw std::domain_error("ac_zeeman_shift: splitting degenerate with trap drive");
    const double rabi = spec.lande * c.mu_B_over_hbar * 0.5 * b_rf_perp;
    return spec.delta_mj * rabi * rabi * nu / (nu * nu - c.Omega_rf * c.Omega_rf);
}

// Ratio of the differential ac Zeeman shifts of the D and S sensor
// states, valid when the splittings are constant along the trap axis.
inline double chi_ratio(double nu_S, double nu_D, const PhysicsConstants& c) {
    if (!(nu_S > 0 && nu_D > 0))
        throw std::invalid_argument("chi_ratio: splittings must be positive");
    const double W = c.Omega_rf;
    if (std::abs(nu_S - W) < c.resonance_rel_tol * W ||
        std::abs(nu_D - W) < c.resonance_rel_tol * W)
        throw std::domain_error("chi_ratio: splitting degenerate with trap drive");
    const double r = c.g_D / c.g_S;
    return 5.0 * r * r * (nu_D / nu_S) * (nu_S * nu_S - W * W) / (nu_D * nu_D - W * W);
}

inline double separation_denominator(double chi, const PhysicsConstants& c) {
    const double den = 5.0 * c.g_D - chi * c.g_S;
    if (std::abs(den) < c.denominator_rel_tol * (5.0 * c.g_D))
        throw std::domain_error("dc/ac separation: denominator 5 g_D - chi g_S is singular");
    return den;
}

// Magnetic field difference from the dual-manifold phase rates.
inline double separate_dc(double delta_omega_S, double delta_omega_D, double chi,
                          const PhysicsConstants& c) {
    const double den = separation_denominator(chi, c);
    return (delta_omega_D - chi * delta_omega_S) / (c.mu_B_over_hbar * den);
}

// Differential ac Zeeman shift of the S sensor state.
inline double separate_ac(double delta_omega_S, double delta_omega_D, double chi,
                          const PhysicsConstants& c) {
    const double den = separation_denominator(chi, c);
    return delta_omega_S - c.g_S * (delta_omega_D - chi * delta_omega_S) / den;
}

enum class ParityBasis { XX, XY };

// Even-parity probability of the sensor state under the two analysis
// settings: XX -> (1 - C cos phi)/2, XY -> (1 + C sin phi)/2.
inline double parity_even_prob(ParityBasis basis, const SensorPhaseState& state) {
    state.validate();
    const double p = basis == ParityBasis::XX
                         ? 0.5 * (1.0 - state.contrast * std::cos(state.phi))
                         : 0.5 * (1.0 + state.contrast * std::sin(state.phi));
    // clamp rounding spill at C = 1 extrema
    return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

// Even-parity counts out of the accepted repetitions per basis.
struct ParityOutcome {
    std::uint64_t n = 0; // even events, XX
    std::uint64_t N = 0; // accepted XX repetitions
    std::uint64_t m = 0; // even events, XY
    std::uint64_t M = 0; // accepted XY repetitions

    void validate() const {
        if (n > N || m > M)
            throw std::invalid_argument("ParityOutcome: counts exceed repetitions");
    }
};

} // namespace dmag
