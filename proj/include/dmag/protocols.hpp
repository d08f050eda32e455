#pragma once
// Campaign-level measurement protocols: incremental unwrapping with a
// running weighted fit, the adaptive Bayesian loop with memory loss, the
// alternating dual-manifold campaign with dc/ac separation, and the
// sensitivity accounting.

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dmag/bayes.hpp"
#include "dmag/design.hpp"
#include "dmag/sim.hpp"

namespace dmag {

// S_omega = omega_err * sqrt(total measurement time)
inline double sensitivity(double omega_err, double total_time) {
    if (!(total_time > 0.0))
        throw std::invalid_argument("sensitivity: total_time must be positive");
    return omega_err * std::sqrt(total_time);
}

struct CampaignStatus {
    bool ok = true;
    bool unwrap_failed = false;   // some residual >= pi after the final fit
    bool underdetermined = false; // fewer than two distinct interrogation times
    std::string message;
};

struct CampaignResult {
    std::vector<MeasurementRecord> records;
    std::vector<FrequencyEstimate> estimate_history; // one per record
    FrequencyEstimate final;
    double sensitivity = 0.0;     // final.omega_err * sqrt(total_wall_time)
    double total_wall_time = 0.0; // s, every cycle counted

    // per-cycle S_omega with only phi0 prior knowledge; NaN for T = 0
    // cycles (they carry no frequency information)
    std::vector<double> cycle_sensitivity;
    std::ptrdiff_t capture_cycle = -1; // first cycle with selected T = T_max
    double capture_wall_time = std::numeric_limits<double>::quiet_NaN();
    CampaignStatus status;
};

struct SeparationResult {
    double delta_B = 0.0;     // T
    double delta_B_err = 0.0;
    double delta_omega_ac_S = 0.0; // rad/s
    double delta_omega_ac_S_err = 0.0;
    double chi_used = 0.0;
};

// One phase measurement for the unwrapping fit: interrogation time,
// MLE phase in (-pi, pi], and its variance (CI half-width squared).
struct PhasePoint {
    double T = 0.0;
    double phi_wrapped = 0.0;
    double variance = 1.0;
};

struct UnwrapFitResult {
    std::vector<double> unwrapped;            // branch-shifted phases
    std::vector<FrequencyEstimate> history;   // running fit after each point
    FrequencyEstimate final;
    double max_abs_residual = 0.0;
    bool unwrap_failed = false;    // some |residual| >= pi under the final fit
    bool underdetermined = false;  // fewer than two distinct T
};

// Incremental unwrapping: points are processed in order, each shifted by
// multiples of 2pi to lie within +-pi of the running weighted fit's
// prediction, then Delta omega * T + phi0 is refit. The final residual
// check flags unwrap slips; it cannot detect a self-consistent aliased
// branch (no residual test can).
UnwrapFitResult unwrap_and_fit(const std::vector<PhasePoint>& points);

// Predefined-schedule campaign: simulate + MLE-fit each scheduled point,
// then unwrap_and_fit. Failures surface as status flags, not exceptions.
// With draw_phi0 (and config.phi0 == 0), the shuttling offset is drawn
// once per campaign from the seed; pass false to keep an explicit zero.
CampaignResult incremental_campaign(const std::vector<double>& schedule,
                                    const CycleConfig& config, const FieldModel& field,
                                    const PhysicsConstants& constants, std::uint64_t seed,
                                    bool draw_phi0 = true);

struct AdaptiveOptions {
    double omega_lo = -two_pi * 50.0; // prior range (rad/s)
    double omega_hi = two_pi * 50.0;
    std::size_t n_omega = 2048;
    std::size_t n_phi0 = 128;
    int ladder_depth = 10;            // candidates {0, T_max/2^depth, ..., T_max}
    double broaden_fraction = 0.05;   // memory loss at T_max selections
    double c_assumed_fallback = 0.9;  // until MLE contrast estimates exist
    std::size_t sensitivity_n_omega = 512; // window grid for per-cycle S_omega
    bool draw_phi0 = true;            // draw the shuttling offset once per campaign
};

using CycleObserver = std::function<void(std::size_t cycle, const PosteriorGrid&,
                                         const UtilityProfile&)>;

CampaignResult adaptive_campaign(std::size_t n_cycles, double t_max, const CycleConfig& config,
                                 const FieldModel& field, const PhysicsConstants& constants,
                                 std::uint64_t seed, const AdaptiveOptions& options = {},
                                 const CycleObserver& observer = nullptr);

struct DualCampaignResult {
    CampaignResult s_campaign;
    CampaignResult d_campaign;
    SeparationResult separation;
};

// Alternating S/D adaptive cycles with independent posteriors sharing one
// drifting field and clock; n_cycles per manifold. Each config's T field
// carries that manifold's maximum interrogation time.
DualCampaignResult dual_manifold_campaign(std::size_t n_cycles, const CycleConfig& config_S,
                                          const CycleConfig& config_D, const FieldModel& field,
                                          const PhysicsConstants& constants, std::uint64_t seed,
                                          const AdaptiveOptions& options_S = {},
                                          const AdaptiveOptions& options_D = {});

// First-order error propagation through the separation algebra; exposed
// for the Jacobian cross-check in tests.
SeparationResult separate_with_errors(double omega_S, double omega_S_err, double omega_D,
                                      double omega_D_err, double chi,
                                      const PhysicsConstants& constants);

} // namespace dmag
