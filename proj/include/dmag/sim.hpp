#pragma once
// Stochastic simulator of one experimental cycle: true phase from the
// field model, projection-noise parity sampling, contrast decay,
// D-state decay postselection, and wall-clock accounting.

#include <cstdint>

#include "dmag/field_model.hpp"
#include "dmag/physics.hpp"
#include "dmag/rng.hpp"

namespace dmag {

// C(T) = C0 * exp(-(T / T_coh)^p). Defaults give C(3 s) ~ 0.94.
struct ContrastModel {
    double c0 = 1.0;
    double t_coh = 48.5; // s
    double p = 1.0;

    double at(double T) const;

    void validate() const {
        if (!(c0 >= 0.0 && c0 <= 1.0))
            throw std::invalid_argument("ContrastModel: c0 outside [0, 1]");
        if (!(t_coh > 0.0))
            throw std::invalid_argument("ContrastModel: t_coh must be positive");
        if (!(p > 0.0))
            throw std::invalid_argument("ContrastModel: exponent must be positive");
    }
};

struct CycleConfig {
    double x1 = 0.2e-3; // m
    double x2 = 1.0e-3; // m
    ManifoldSpec manifold;
    double T = 0.0;              // interrogation time (s)
    std::uint64_t N = 50;        // XX repetitions
    std::uint64_t M = 50;        // XY repetitions
    double analysis_offset = 0.0; // rad, added to the second analysis pulse
    ContrastModel contrast;
    double overhead = 0.3;       // dead time per repetition (s)
    double phi0 = 0.0;           // shuttling phase offset, drawn once per campaign

    void validate() const;
};

struct MeasurementRecord {
    CycleConfig cycle;
    ParityOutcome outcome;
    double wall_time = 0.0;      // s
    std::uint64_t attempts = 0;  // repetitions including postselection rejections
    double timestamp = 0.0;      // s since campaign start
    bool broadened = false;      // memory-loss broadening applied before the update
};

// True phase accumulation rate Delta omega(x1, x2) for the configured
// manifold: dc (linear Zeeman, including drift) plus differential ac shift.
double true_delta_omega(const CycleConfig& config, const FieldModel& field,
                        const PhysicsConstants& constants);

// Draws one cycle. For the D manifold each repetition survives with
// probability exp(-2T/tau_D) and is redrawn until N (resp. M) accepted.
MeasurementRecord simulate_cycle(const CycleConfig& config, const FieldModel& field,
                                 const PhysicsConstants& constants, RandomStream& rng);

// Expected duration of one cycle: (N+M)(overhead+T), times the
// postselection factor exp(+2T/tau_D) for the D manifold.
double duration(const CycleConfig& config, const PhysicsConstants& constants);

} // namespace dmag
