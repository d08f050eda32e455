#include "doctest.h"

#include <cmath>

#include "dmag/protocols.hpp"

using namespace dmag;

namespace {

FieldModel field_for_rate(double delta_omega, double x1, double x2,
                          const PhysicsConstants& c) {
    const double delta_B = delta_omega / (c.g_S * c.mu_B_over_hbar);
    return FieldModel::linear_gradient(1.0e-6, delta_B / (x1 - x2));
}

CycleConfig basic_config(const PhysicsConstants& c) {
    CycleConfig cfg;
    cfg.manifold = ManifoldSpec::ground_state(c);
    cfg.x1 = 0.2e-3;
    cfg.x2 = 1.0e-3;
    return cfg;
}

std::vector<double> geometric_schedule(double first, double ratio, double t_max) {
    std::vector<double> s{0.0};
    for (double t = first; t < t_max; t *= ratio) s.push_back(t);
    s.push_back(t_max);
    return s;
}

} // namespace

TEST_CASE("sensitivity arithmetic") {
    CHECK(sensitivity(1.0, 4.0) == 2.0);
    CHECK(sensitivity(0.5, 4.0) == 0.5 * sensitivity(1.0, 4.0));
    CHECK_THROWS_AS(sensitivity(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("separation error propagation matches finite differences") {
    PhysicsConstants c;
    const double chi = 1.006;
    const double wS = two_pi * 3.0, wD = two_pi * 11.0;
    const double sS = two_pi * 0.05, sD = two_pi * 0.08;
    const SeparationResult r = separate_with_errors(wS, sS, wD, sD, chi, c);

    const double h = 1e-6;
    const double dB_dS =
        (separate_dc(wS + h, wD, chi, c) - separate_dc(wS - h, wD, chi, c)) / (2.0 * h);
    const double dB_dD =
        (separate_dc(wS, wD + h, chi, c) - separate_dc(wS, wD - h, chi, c)) / (2.0 * h);
    const double dac_dS =
        (separate_ac(wS + h, wD, chi, c) - separate_ac(wS - h, wD, chi, c)) / (2.0 * h);
    const double dac_dD =
        (separate_ac(wS, wD + h, chi, c) - separate_ac(wS, wD - h, chi, c)) / (2.0 * h);

    CHECK(r.delta_B_err ==
          doctest::Approx(std::hypot(dB_dS * sS, dB_dD * sD)).epsilon(1e-6));
    CHECK(r.delta_omega_ac_S_err ==
          doctest::Approx(std::hypot(dac_dS * sS, dac_dD * sD)).epsilon(1e-6));
}

TEST_CASE("incremental campaign recovers a 2pi*10 Hz rate nearly noiselessly") {
    PhysicsConstants c;
    CycleConfig cfg = basic_config(c);
    cfg.N = 10000;
    cfg.M = 10000;
    const double truth = two_pi * 10.0;
    const FieldModel field = field_for_rate(truth, cfg.x1, cfg.x2, c);

    std::vector<double> schedule = geometric_schedule(0.01, 2.0, 1.5);
    // dense tail sharpens the slope to well under the 1e-4 target
    for (double t : {0.9, 1.1, 1.3, 1.45}) schedule.push_back(t);
    std::sort(schedule.begin(), schedule.end());
    const CampaignResult r = incremental_campaign(schedule, cfg, field, c, 2024);
    REQUIRE(r.status.ok);
    CHECK(!r.status.unwrap_failed);
    CHECK(std::abs(r.final.omega_mean - truth) / truth < 1e-4);
    CHECK(r.estimate_history.size() == r.records.size());
    CHECK(r.sensitivity == r.final.omega_err * std::sqrt(r.total_wall_time));
    // wall time: every cycle is (N+M)(T + overhead)
    double expect_wall = 0.0;
    for (double T : schedule) expect_wall += 20000.0 * (T + 0.3);
    CHECK(r.total_wall_time == doctest::Approx(expect_wall).epsilon(1e-12));
}

TEST_CASE("incremental campaign flags an underdetermined schedule") {
    PhysicsConstants c;
    CycleConfig cfg = basic_config(c);
    const FieldModel field = field_for_rate(two_pi * 5.0, cfg.x1, cfg.x2, c);
    const CampaignResult r = incremental_campaign({0.5}, cfg, field, c, 7);
    CHECK(!r.status.ok);
    CHECK(r.status.underdetermined);
}

TEST_CASE("unwrap fit: clean data, slip detection, underdetermined input") {
    // noiseless line: exact recovery, no flag
    std::vector<PhasePoint> clean;
    for (double t = 0.0; t <= 1.0; t += 0.05) clean.push_back({t, wrap_phase(3.0 * t), 1e-4});
    const UnwrapFitResult ok = unwrap_and_fit(clean);
    CHECK(!ok.unwrap_failed);
    CHECK(!ok.underdetermined);
    CHECK(ok.final.omega_mean == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(ok.max_abs_residual < 1e-9);

    // a noisy near-pi outlier spawns a phantom branch that the later tight
    // points contradict: the final residual check must trip
    std::vector<PhasePoint> slipped;
    slipped.push_back({0.0, 0.0, 1e-4});
    slipped.push_back({0.5, 0.95 * std::numbers::pi, 2.0});
    for (double t = 0.55; t <= 2.01; t += 0.05) slipped.push_back({t, 0.0, 1e-4});
    const UnwrapFitResult bad = unwrap_and_fit(slipped);
    CHECK(bad.unwrap_failed);
    CHECK(bad.max_abs_residual >= std::numbers::pi);

    // single point cannot determine two parameters
    const UnwrapFitResult single = unwrap_and_fit({{0.5, 0.2, 1e-4}});
    CHECK(single.underdetermined);
}

TEST_CASE("adaptive campaign: audit trail and invariants") {
    PhysicsConstants c;
    CycleConfig cfg = basic_config(c);
    cfg.N = 30;
    cfg.M = 30;
    const double truth = two_pi * 3.0;
    const FieldModel field = field_for_rate(truth, cfg.x1, cfg.x2, c);

    AdaptiveOptions opt;
    opt.omega_lo = -two_pi * 10.0;
    opt.omega_hi = two_pi * 10.0;
    opt.n_omega = 256;
    opt.n_phi0 = 64;
    opt.ladder_depth = 8;
    const double t_max = 1.0;

    const CampaignResult r = adaptive_campaign(16, t_max, cfg, field, c, 99, opt);
    REQUIRE(r.records.size() == 16);
    CHECK(r.estimate_history.size() == 16);
    CHECK(r.cycle_sensitivity.size() == 16);

    double wall = 0.0;
    for (std::size_t k = 0; k < r.records.size(); ++k) {
        const MeasurementRecord& rec = r.records[k];
        CHECK(rec.timestamp == doctest::Approx(wall));
        wall += rec.wall_time;
        // memory loss applied iff the cycle ran at T_max
        CHECK(rec.broadened == (rec.cycle.T == t_max));
        // T = 0 cycles have no per-cycle sensitivity
        CHECK(std::isfinite(r.cycle_sensitivity[k]) == (rec.cycle.T > 0.0));
    }
    CHECK(r.total_wall_time == doctest::Approx(wall));
    CHECK(r.sensitivity == r.final.omega_err * std::sqrt(r.total_wall_time));

    // capture happened and the final estimate brackets the truth
    CHECK(r.capture_cycle >= 0);
    CHECK(std::abs(r.final.omega_mean - truth) <= 5.0 * r.final.omega_err + 0.05);
}

TEST_CASE("adaptive campaign with one cycle equals a single update") {
    PhysicsConstants c;
    CycleConfig cfg = basic_config(c);
    cfg.N = 20;
    cfg.M = 20;
    const FieldModel field = field_for_rate(two_pi * 2.0, cfg.x1, cfg.x2, c);

    AdaptiveOptions opt;
    opt.omega_lo = -two_pi * 5.0;
    opt.omega_hi = two_pi * 5.0;
    opt.n_omega = 128;
    opt.n_phi0 = 32;

    const CampaignResult r = adaptive_campaign(1, 1.0, cfg, field, c, 5, opt);
    REQUIRE(r.records.size() == 1);
    const MeasurementRecord& rec = r.records[0];

    PosteriorGrid manual = uniform_prior(opt.omega_lo, opt.omega_hi, opt.n_omega, opt.n_phi0);
    if (rec.broadened) manual = broaden(manual, opt.broaden_fraction);
    manual = update(manual, rec.outcome, rec.cycle.T, rec.cycle.analysis_offset);
    const FrequencyEstimate expect = moments(manual);
    CHECK(r.final.omega_mean == doctest::Approx(expect.omega_mean).epsilon(1e-12));
    CHECK(r.final.omega_err == doctest::Approx(expect.omega_err).epsilon(1e-12));
}

TEST_CASE("capture-phase errors are non-increasing, tracking follows truth") {
    PhysicsConstants c;
    CycleConfig cfg = basic_config(c);
    cfg.N = 50;
    cfg.M = 50;
    const double truth = two_pi * 3.0;
    const FieldModel field = field_for_rate(truth, cfg.x1, cfg.x2, c);

    AdaptiveOptions opt;
    opt.omega_lo = -two_pi * 10.0;
    opt.omega_hi = two_pi * 10.0;
    opt.n_omega = 256;
    opt.n_phi0 = 64;
    opt.ladder_depth = 8;

    int violations = 0, steps = 0;
    for (std::uint64_t seed : {101, 102, 103}) {
        const CampaignResult r = adaptive_campaign(14, 1.0, cfg, field, c, seed, opt);
        const std::ptrdiff_t capture =
            r.capture_cycle >= 0 ? r.capture_cycle : std::ptrdiff_t(r.records.size());
        for (std::ptrdiff_t k = 1; k < capture; ++k) {
            ++steps;
            if (r.estimate_history[k].omega_err >
                r.estimate_history[k - 1].omega_err * 1.0001)
                ++violations;
        }
    }
    CHECK(steps > 0);
    CHECK(double(violations) <= 0.05 * double(steps) + 1.0);
}

TEST_CASE("incremental and adaptive campaigns agree on a static truth") {
    PhysicsConstants c;
    CycleConfig cfg = basic_config(c);
    cfg.N = 2000;
    cfg.M = 2000;
    const double truth = two_pi * 4.0;
    const FieldModel field = field_for_rate(truth, cfg.x1, cfg.x2, c);

    const CampaignResult inc =
        incremental_campaign(geometric_schedule(0.02, 2.0, 1.0), cfg, field, c, 31);
    REQUIRE(inc.status.ok);

    AdaptiveOptions opt;
    opt.omega_lo = -two_pi * 8.0;
    opt.omega_hi = two_pi * 8.0;
    opt.n_omega = 512;
    opt.n_phi0 = 64;
    CycleConfig acfg = cfg;
    acfg.N = 50;
    acfg.M = 50;
    const CampaignResult ada = adaptive_campaign(20, 1.0, acfg, field, c, 32, opt);

    const double sigma = std::hypot(inc.final.omega_err, ada.final.omega_err);
    CHECK(std::abs(inc.final.omega_mean - ada.final.omega_mean) <= 2.0 * sigma + 1e-3);
}

TEST_CASE("dual campaign separates dc and ac on a pure-dc field") {
    PhysicsConstants c;
    CycleConfig cfg_S = basic_config(c);
    cfg_S.N = 50;
    cfg_S.M = 50;
    cfg_S.T = 1.0; // T_max for the S loop
    CycleConfig cfg_D = cfg_S;
    cfg_D.manifold = ManifoldSpec::metastable(c);
    cfg_D.T = 0.4;

    const double truth_S = two_pi * 2.0; // S-state rate; D sees 3x
    const FieldModel field = field_for_rate(truth_S, cfg_S.x1, cfg_S.x2, c);

    AdaptiveOptions opt_S;
    opt_S.omega_lo = -two_pi * 8.0;
    opt_S.omega_hi = two_pi * 8.0;
    opt_S.n_omega = 384;
    opt_S.n_phi0 = 64;
    AdaptiveOptions opt_D = opt_S;
    opt_D.omega_lo = -two_pi * 24.0;
    opt_D.omega_hi = two_pi * 24.0;
    opt_D.n_omega = 1152;

    const DualCampaignResult r =
        dual_manifold_campaign(25, cfg_S, cfg_D, field, c, 77, opt_S, opt_D);

    const double ratio = r.d_campaign.final.omega_mean / r.s_campaign.final.omega_mean;
    const double ratio_err =
        std::abs(ratio) * std::hypot(r.d_campaign.final.omega_err /
                                         r.d_campaign.final.omega_mean,
                                     r.s_campaign.final.omega_err /
                                         r.s_campaign.final.omega_mean);
    CHECK(std::abs(ratio - 5.0 * c.g_D / c.g_S) <= 3.0 * ratio_err + 0.01);

    // no rf field: the ac shift must be consistent with zero
    CHECK(std::abs(r.separation.delta_omega_ac_S) <=
          3.0 * r.separation.delta_omega_ac_S_err + 1e-3);

    // recovered delta B against the ground truth
    const double truth_B = truth_S / (c.g_S * c.mu_B_over_hbar);
    CHECK(std::abs(r.separation.delta_B - truth_B) <=
          3.0 * r.separation.delta_B_err + 1e-15);
}

TEST_CASE("dual campaign separates 3 pT from a 2pi*1 Hz ac shift (noiseless limit)") {
    PhysicsConstants c;
    const double x1 = 0.2e-3, x2 = 1.0e-3;
    const double truth_B = 3e-12;     // T
    const double truth_ac = two_pi;   // rad/s, S-state differential ac shift

    // dc gradient for 3 pT plus an rf ramp giving the requested ac shift
    FieldModel field = FieldModel::linear_gradient(1.0e-6, truth_B / (x1 - x2));
    const ManifoldSpec spec_S = ManifoldSpec::ground_state(c);
    const double k_shift = ac_zeeman_shift(1.0, spec_S, c); // < 0 below the drive
    const double b1 = 3e-7;
    const double b2 = std::sqrt(b1 * b1 - truth_ac / k_shift);
    const double slope = (b2 - b1) / (x2 - x1);
    field.b_rf_perp = PiecewisePolynomial::linear(b1 - slope * x1, slope, 0.0, 6.4e-3);
    field.validate();

    CycleConfig cfg_S;
    cfg_S.manifold = spec_S;
    cfg_S.x1 = x1;
    cfg_S.x2 = x2;
    cfg_S.N = 100000;
    cfg_S.M = 100000;
    cfg_S.T = 1.5;
    cfg_S.contrast.t_coh = 1e9; // effectively no decoherence
    // phi0 on a grid node: at these statistics the phi0 marginal is
    // sub-cell sharp, and an off-node offset would snap to the nearest
    // node and leak a (delta phi0)/T bias into omega. Pinning it isolates
    // the separation pipeline, which is what this limit probes.
    cfg_S.phi0 = 0.0;
    CycleConfig cfg_D = cfg_S;
    cfg_D.manifold = ManifoldSpec::metastable(c);

    const double w_S = true_delta_omega(cfg_S, field, c);
    const double w_D = true_delta_omega(cfg_D, field, c);
    const double chi = chi_ratio(cfg_S.manifold.splitting_nu, cfg_D.manifold.splitting_nu, c);
    // the simulated field satisfies the separation algebra exactly
    CHECK(separate_dc(w_S, w_D, chi, c) == doctest::Approx(truth_B).epsilon(1e-9));
    CHECK(separate_ac(w_S, w_D, chi, c) == doctest::Approx(truth_ac).epsilon(1e-9));

    // tight priors around the known coarse rates (a coarse capture pass
    // would provide these); the cell floor then sits well under 1e-3
    AdaptiveOptions opt_S;
    opt_S.omega_lo = w_S - two_pi * 0.2;
    opt_S.omega_hi = w_S + two_pi * 0.2;
    opt_S.n_omega = 2048;
    opt_S.n_phi0 = 128;
    opt_S.ladder_depth = 6;
    opt_S.draw_phi0 = false;
    AdaptiveOptions opt_D = opt_S;
    opt_D.omega_lo = w_D - two_pi * 0.2;
    opt_D.omega_hi = w_D + two_pi * 0.2;

    const DualCampaignResult r =
        dual_manifold_campaign(35, cfg_S, cfg_D, field, c, 4, opt_S, opt_D);

    CHECK(std::abs(r.separation.delta_B - truth_B) / truth_B < 1e-3);
    CHECK(std::abs(r.separation.delta_omega_ac_S - truth_ac) / truth_ac < 1e-3);
    // and the propagated errors are consistent with the realized deviations
    CHECK(std::abs(r.separation.delta_B - truth_B) <= 4.0 * r.separation.delta_B_err);
}

TEST_CASE("dual campaign requires matching positions") {
    PhysicsConstants c;
    CycleConfig cfg_S = basic_config(c);
    cfg_S.T = 1.0;
    CycleConfig cfg_D = cfg_S;
    cfg_D.manifold = ManifoldSpec::metastable(c);
    cfg_D.T = 0.4;
    cfg_D.x2 = 2.0e-3;
    const FieldModel field = FieldModel::linear_gradient(1e-6, 0.0);
    CHECK_THROWS_AS(dual_manifold_campaign(2, cfg_S, cfg_D, field, c, 1),
                    std::invalid_argument);
}
