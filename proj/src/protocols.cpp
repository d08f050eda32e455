#include "dmag/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dmag/mle.hpp"

namespace dmag {

namespace {

enum StreamPurpose : std::uint64_t { PHI0 = 1, CYCLE = 2, DRIFT = 3 };

struct WlsFit {
    double slope = 0.0, intercept = 0.0;
    double slope_err = 0.0, intercept_err = 0.0;
    bool valid = false;
};

WlsFit wls_line(const std::vector<double>& t, const std::vector<double>& y,
                const std::vector<double>& var) {
    double s0 = 0, s1 = 0, s2 = 0, sy = 0, sty = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double w = 1.0 / var[i];
        s0 += w;
        s1 += w * t[i];
        s2 += w * t[i] * t[i];
        sy += w * y[i];
        sty += w * t[i] * y[i];
    }
    const double det = s0 * s2 - s1 * s1;
    WlsFit fit;
    if (!(det > 0.0) || !std::isfinite(det)) return fit;
    fit.slope = (s0 * sty - s1 * sy) / det;
    fit.intercept = (s2 * sy - s1 * sty) / det;
    fit.slope_err = std::sqrt(s0 / det);
    fit.intercept_err = std::sqrt(s2 / det);
    fit.valid = true;
    return fit;
}

double phase_variance(const PhaseEstimate& est) {
    if (est.phi_full_width)
        return std::numbers::pi * std::numbers::pi / 3.0; // uniform on the circle
    return std::max(est.phi_var(), 1e-12);
}

} // namespace

UnwrapFitResult unwrap_and_fit(const std::vector<PhasePoint>& points) {
    UnwrapFitResult out;
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<double> times, phases, variances;
    WlsFit fit;
    for (const PhasePoint& p : points) {
        double predicted;
        if (times.empty())
            predicted = p.phi_wrapped;
        else if (!fit.valid)
            predicted = phases.back();
        else
            predicted = fit.slope * p.T + fit.intercept;
        const double turns = std::round((predicted - p.phi_wrapped) / two_pi);
        const double unwrapped = p.phi_wrapped + two_pi * turns;

        times.push_back(p.T);
        phases.push_back(unwrapped);
        variances.push_back(std::max(p.variance, 1e-12));
        if (times.size() >= 2) fit = wls_line(times, phases, variances);

        out.unwrapped.push_back(unwrapped);
        FrequencyEstimate fe;
        if (fit.valid) {
            fe.omega_mean = fit.slope;
            fe.omega_err = fit.slope_err;
            fe.phi0_mean = wrap_phase_lower(fit.intercept);
            fe.phi0_err = fit.intercept_err;
        } else {
            fe.phi0_mean = wrap_phase_lower(unwrapped);
            fe.omega_err = inf;
            fe.phi0_err = inf;
        }
        out.history.push_back(fe);
    }

    if (!fit.valid) {
        out.underdetermined = true;
        return out;
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double residual = phases[k] - (fit.slope * times[k] + fit.intercept);
        out.max_abs_residual = std::max(out.max_abs_residual, std::abs(residual));
    }
    out.unwrap_failed = out.max_abs_residual >= std::numbers::pi;
    out.final = out.history.back();
    return out;
}

CampaignResult incremental_campaign(const std::vector<double>& schedule,
                                    const CycleConfig& config, const FieldModel& field,
                                    const PhysicsConstants& constants, std::uint64_t seed,
                                    bool draw_phi0) {
    CampaignResult result;
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i] < schedule[i - 1])
            throw std::invalid_argument("incremental_campaign: schedule must be nondecreasing");

    std::size_t distinct = schedule.empty() ? 0 : 1;
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i] != schedule[i - 1]) ++distinct;
    if (distinct < 2) {
        result.status.ok = false;
        result.status.underdetermined = true;
        result.status.message = "schedule has fewer than two distinct interrogation times";
        return result;
    }

    FieldModel field_state = field;
    CycleConfig base = config;
    if (draw_phi0 && base.phi0 == 0.0) {
        RandomStream phi0_rng = derive_stream(seed, 0, PHI0);
        base.phi0 = phi0_rng.uniform(-std::numbers::pi, std::numbers::pi);
    }

    std::vector<PhasePoint> points;
    double clock = 0.0;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        CycleConfig cfg = base;
        cfg.T = schedule[k];
        RandomStream rng = derive_stream(seed, k + 1, CYCLE);
        MeasurementRecord rec = simulate_cycle(cfg, field_state, constants, rng);
        rec.timestamp = clock;
        clock += rec.wall_time;
        RandomStream drift_rng = derive_stream(seed, k + 1, DRIFT);
        field_state = advance_drift(field_state, rec.wall_time, drift_rng);

        const PhaseEstimate est = mle_fit(rec.outcome);
        points.push_back({cfg.T, est.phi_hat, phase_variance(est)});
        result.records.push_back(rec);
        result.cycle_sensitivity.push_back(std::numeric_limits<double>::quiet_NaN());
    }

    const UnwrapFitResult fit = unwrap_and_fit(points);
    result.estimate_history = fit.history;
    result.total_wall_time = clock;
    if (fit.underdetermined) {
        result.status.ok = false;
        result.status.underdetermined = true;
        result.status.message = "weighted fit is singular";
        return result;
    }
    if (fit.unwrap_failed) {
        result.status.ok = false;
        result.status.unwrap_failed = true;
        result.status.message =
            "unwrap residual >= pi (max " + std::to_string(fit.max_abs_residual) + " rad)";
    }
    result.final = fit.final;
    result.sensitivity = sensitivity(result.final.omega_err, result.total_wall_time);
    return result;
}

namespace {

// One adaptive estimator: posterior, contrast tracker, design loop body.
// dual_manifold_campaign runs two of these against a shared field/clock.
class AdaptiveEngine {
  public:
    AdaptiveEngine(const CycleConfig& config, double t_max, const PhysicsConstants& constants,
                   std::uint64_t seed, const AdaptiveOptions& options)
        : base_(config), t_max_(t_max), constants_(constants), seed_(seed), options_(options),
          posterior_(uniform_prior(options.omega_lo, options.omega_hi, options.n_omega,
                                   options.n_phi0)),
          candidates_(geometric_ladder(t_max, options.ladder_depth)) {
        if (!(t_max > 0.0))
            throw std::invalid_argument("adaptive_campaign: t_max must be positive");
        if (!(config.overhead > 0.0))
            throw std::invalid_argument("adaptive_campaign: overhead must be positive "
                                        "(duration penalty needs D(0) > 0)");
        if (options.draw_phi0 && base_.phi0 == 0.0) {
            RandomStream phi0_rng = derive_stream(seed, 0, PHI0);
            base_.phi0 = phi0_rng.uniform(-std::numbers::pi, std::numbers::pi);
        }
        duration_fn_ = [this](double T) {
            CycleConfig c = base_;
            c.T = T;
            return duration(c, constants_);
        };
    }

    // Runs one cycle against the shared field/clock; appends to `out`.
    void step(std::size_t cycle_index, FieldModel& field, double& clock, CampaignResult& out,
              const CycleObserver& observer) {
        const double c_assumed =
            std::clamp(contrast_track_ > 0.0 ? contrast_track_ : options_.c_assumed_fallback,
                       0.05, 1.0);
        const UtilityProfile profile =
            utility_profile(posterior_, candidates_, c_assumed, duration_fn_, true);
        const double T = profile.candidates[profile.chosen];
        const double offset = analysis_phase_offset(posterior_, T);

        bool broadened = false;
        if (T == t_max_ && options_.broaden_fraction > 0.0) {
            posterior_ = broaden(posterior_, options_.broaden_fraction);
            broadened = true;
        }

        CycleConfig cfg = base_;
        cfg.T = T;
        cfg.analysis_offset = offset;
        RandomStream rng = derive_stream(seed_, cycle_index + 1, CYCLE);
        MeasurementRecord rec = simulate_cycle(cfg, field, constants_, rng);
        rec.timestamp = clock;
        rec.broadened = broadened;

        out.cycle_sensitivity.push_back(cycle_sensitivity(rec));

        try {
            posterior_ = update(posterior_, rec.outcome, T, offset);
        } catch (const std::runtime_error& err) {
            throw std::runtime_error("adaptive cycle " + std::to_string(cycle_index) + ": " +
                                     err.what());
        }

        clock += rec.wall_time;
        RandomStream drift_rng = derive_stream(seed_, cycle_index + 1, DRIFT);
        field = advance_drift(field, rec.wall_time, drift_rng);

        track_contrast(rec.outcome);

        out.records.push_back(rec);
        out.estimate_history.push_back(moments(posterior_));
        if (T == t_max_ && out.capture_cycle < 0) {
            out.capture_cycle = std::ptrdiff_t(out.records.size()) - 1;
            out.capture_wall_time = rec.timestamp;
        }
        if (observer) observer(cycle_index, posterior_, profile);
    }

    const PosteriorGrid& posterior() const { return posterior_; }

  private:
    // S_omega of this single measurement, taking only the phi0 marginal as
    // prior knowledge: fresh uniform omega prior over one update-function
    // period (mean +- pi/T) so the fringe the tracker sits on is the only
    // one in support.
    double cycle_sensitivity(const MeasurementRecord& rec) const {
        if (!(rec.cycle.T > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        const FrequencyEstimate pre = moments(posterior_);
        const double half = std::numbers::pi / rec.cycle.T;
        const double lo = std::max(pre.omega_mean - half, options_.omega_lo);
        const double hi = std::min(pre.omega_mean + half, options_.omega_hi);
        if (!(lo < hi)) return std::numeric_limits<double>::quiet_NaN();
        PosteriorGrid window =
            uniform_omega_prior(lo, hi, options_.sensitivity_n_omega, posterior_.phi0_axis(),
                                posterior_.phi0_marginal());
        try {
            window = update(window, rec.outcome, rec.cycle.T, rec.cycle.analysis_offset);
        } catch (const std::runtime_error&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        return sensitivity(moments(window).omega_err, rec.wall_time);
    }

    void track_contrast(const ParityOutcome& outcome) {
        const PhaseEstimate fit = mle_fit(outcome);
        if (contrast_track_ <= 0.0)
            contrast_track_ = fit.c_hat;
        else
            contrast_track_ = 0.7 * contrast_track_ + 0.3 * fit.c_hat;
    }

    CycleConfig base_;
    double t_max_;
    PhysicsConstants constants_;
    std::uint64_t seed_;
    AdaptiveOptions options_;
    PosteriorGrid posterior_;
    std::vector<double> candidates_;
    DurationFn duration_fn_;
    double contrast_track_ = -1.0;
};

void finalize_adaptive(CampaignResult& result, double clock) {
    result.total_wall_time = clock;
    if (!result.estimate_history.empty()) {
        result.final = result.estimate_history.back();
        result.sensitivity = sensitivity(result.final.omega_err, result.total_wall_time);
    }
}

} // namespace

CampaignResult adaptive_campaign(std::size_t n_cycles, double t_max, const CycleConfig& config,
                                 const FieldModel& field, const PhysicsConstants& constants,
                                 std::uint64_t seed, const AdaptiveOptions& options,
                                 const CycleObserver& observer) {
    if (n_cycles < 1)
        throw std::invalid_argument("adaptive_campaign: need at least one cycle");
    AdaptiveEngine engine(config, t_max, constants, seed, options);
    CampaignResult result;
    FieldModel field_state = field;
    double clock = 0.0;
    for (std::size_t k = 0; k < n_cycles; ++k)
        engine.step(k, field_state, clock, result, observer);
    finalize_adaptive(result, clock);
    return result;
}

SeparationResult separate_with_errors(double omega_S, double omega_S_err, double omega_D,
                                      double omega_D_err, double chi,
                                      const PhysicsConstants& constants) {
    SeparationResult out;
    out.chi_used = chi;
    out.delta_B = separate_dc(omega_S, omega_D, chi, constants);
    out.delta_omega_ac_S = separate_ac(omega_S, omega_D, chi, constants);

    const double den = 5.0 * constants.g_D - chi * constants.g_S;
    const double dB_dS = -chi / (constants.mu_B_over_hbar * den);
    const double dB_dD = 1.0 / (constants.mu_B_over_hbar * den);
    const double dac_dS = 1.0 + constants.g_S * chi / den;
    const double dac_dD = -constants.g_S / den;

    out.delta_B_err = std::hypot(dB_dS * omega_S_err, dB_dD * omega_D_err);
    out.delta_omega_ac_S_err = std::hypot(dac_dS * omega_S_err, dac_dD * omega_D_err);
    return out;
}

DualCampaignResult dual_manifold_campaign(std::size_t n_cycles, const CycleConfig& config_S,
                                          const CycleConfig& config_D, const FieldModel& field,
                                          const PhysicsConstants& constants, std::uint64_t seed,
                                          const AdaptiveOptions& options_S,
                                          const AdaptiveOptions& options_D) {
    if (config_S.x1 != config_D.x1 || config_S.x2 != config_D.x2)
        throw std::invalid_argument("dual_manifold_campaign: configs must share positions");
    if (config_S.manifold.manifold != Manifold::S || config_D.manifold.manifold != Manifold::D)
        throw std::invalid_argument("dual_manifold_campaign: expected one S and one D config");

    // both sensor states see the same shuttling offset
    CycleConfig cfg_S = config_S, cfg_D = config_D;
    if (options_S.draw_phi0 && options_D.draw_phi0 && cfg_S.phi0 == 0.0 && cfg_D.phi0 == 0.0) {
        RandomStream phi0_rng = derive_stream(seed, 0, PHI0);
        const double phi0 = phi0_rng.uniform(-std::numbers::pi, std::numbers::pi);
        cfg_S.phi0 = phi0;
        cfg_D.phi0 = phi0;
    }
    AdaptiveOptions opt_S = options_S, opt_D = options_D;
    opt_S.draw_phi0 = false;
    opt_D.draw_phi0 = false;

    // config.T carries the per-manifold maximum interrogation time; the
    // Bayesian loop chooses each cycle's T below it
    if (!(config_S.T > 0.0) || !(config_D.T > 0.0))
        throw std::invalid_argument("dual_manifold_campaign: config.T must hold a positive T_max");
    const double t_max_S = config_S.T;
    const double t_max_D = config_D.T;

    AdaptiveEngine engine_S(cfg_S, t_max_S, constants, seed ^ 0x5111, opt_S);
    AdaptiveEngine engine_D(cfg_D, t_max_D, constants, seed ^ 0xd222, opt_D);

    DualCampaignResult out;
    FieldModel field_state = field;
    double clock = 0.0;
    for (std::size_t k = 0; k < n_cycles; ++k) {
        engine_S.step(k, field_state, clock, out.s_campaign, nullptr);
        engine_D.step(k, field_state, clock, out.d_campaign, nullptr);
    }
    finalize_adaptive(out.s_campaign, clock);
    finalize_adaptive(out.d_campaign, clock);

    const double chi = chi_ratio(config_S.manifold.splitting_nu, config_D.manifold.splitting_nu,
                                 constants);
    out.separation = separate_with_errors(
        out.s_campaign.final.omega_mean, out.s_campaign.final.omega_err,
        out.d_campaign.final.omega_mean, out.d_campaign.final.omega_err, chi, constants);
    return out;
}

} // namespace dmag
