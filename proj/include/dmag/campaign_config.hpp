#pragma once
// CLI-facing campaign configuration: one JSON document per campaign,
// strictly parsed (unknown keys rejected, seed mandatory for simulation
// modes). All frequencies cross this boundary in Hz; the library works in
// rad/s throughout.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dmag/field_model.hpp"
#include "dmag/physics.hpp"
#include "dmag/sim.hpp"

namespace dmag {

enum class CampaignMode { Incremental, Adaptive, Dual, UtilityProfile, Separate };

const char* to_string(CampaignMode mode);

struct AdaptiveSection {
    std::size_t n_cycles = 50;
    double t_max = 3.0;            // s
    double prior_lo = -two_pi * 50.0; // rad/s
    double prior_hi = two_pi * 50.0;
    std::size_t n_omega = 2048;
    std::size_t n_phi0 = 128;
    int ladder_depth = 10;
    double broaden_fraction = 0.05;
    std::size_t snapshot_every = 0; // 0 = no posterior snapshots
};

struct DualSection {
    std::size_t n_cycles = 30; // per manifold
    double t_max_S = 1.5;      // s
    double t_max_D = 0.48;
    double prior_lo_S = -two_pi * 20.0, prior_hi_S = two_pi * 20.0;
    double prior_lo_D = -two_pi * 60.0, prior_hi_D = two_pi * 60.0;
    std::size_t n_omega = 1024;
    std::size_t n_phi0 = 128;
    int ladder_depth = 10;
    double broaden_fraction = 0.05;
};

struct UtilitySection {
    std::vector<double> candidates; // s; empty = geometric ladder of t_max
    double t_max = 3.0;
    int ladder_depth = 10;
    double c_assumed = 0.9;
    double prior_lo = -two_pi * 50.0, prior_hi = two_pi * 50.0;
    std::size_t n_omega = 1024;
    std::size_t n_phi0 = 128;
};

struct SeparateSection {
    double omega_S = 0.0; // rad/s
    double omega_S_err = 0.0;
    double omega_D = 0.0;
    double omega_D_err = 0.0;
    std::optional<double> nu_D; // rad/s; defaults to (g_D/g_S) nu_S
};

struct CampaignConfig {
    CampaignMode mode = CampaignMode::Adaptive;
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::string out; // output path prefix

    PhysicsConstants constants;
    FieldModel field;
    double x1 = 0.2e-3, x2 = 1.0e-3; // m
    Manifold manifold = Manifold::S;
    double nu_S = two_pi * 10.4e6; // rad/s

    std::uint64_t reps_N = 50, reps_M = 50;
    double overhead = 0.3; // s
    ContrastModel contrast;
    std::optional<double> phi0; // fixed shuttling offset; absent = drawn from seed

    AdaptiveSection adaptive;
    DualSection dual;
    UtilitySection utility;
    SeparateSection separate;

    std::vector<double> schedule; // incremental mode

    static CampaignConfig from_json(const std::string& text);
    static CampaignConfig load(const std::string& path);
    std::string to_json() const;

    CycleConfig cycle_config() const; // for the configured manifold
    ManifoldSpec manifold_spec(Manifold which) const;
};

// Executes the configured campaign, writing trace/summary/snapshot files
// under `out_prefix` (config.out combined with the DMAG_OUT_DIR override
// and a --out flag). `replicas` > 1 runs seeded replicas in parallel and
// aggregates their statistics. Returns the summary JSON text.
std::string run_campaign(const CampaignConfig& config, const std::string& out_prefix,
                         int replicas = 1);

// Re-runs the Bayesian estimator over a recorded trace (no simulation, no
// RNG): prior and memory-loss settings come from the config's adaptive
// section. Writes <prefix>_replay_trace.csv with recomputed estimates.
std::string replay_trace(const CampaignConfig& config, const std::string& trace_path,
                         const std::string& out_prefix);

} // namespace dmag
