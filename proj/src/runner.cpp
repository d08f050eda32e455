#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "dmag/campaign_config.hpp"
#include "dmag/io.hpp"
#include "dmag/protocols.hpp"

namespace dmag {

namespace {

using nlohmann::json;

void put_finite(json& j, const char* key, double v) {
    if (std::isfinite(v)) j[key] = v;
}

json estimate_json(const FrequencyEstimate& est) {
    json j;
    put_finite(j, "omega_mean_hz", est.omega_mean / two_pi);
    put_finite(j, "omega_err_hz", est.omega_err / two_pi);
    put_finite(j, "phi0_mean_rad", est.phi0_mean);
    put_finite(j, "phi0_err_rad", est.phi0_err);
    return j;
}

json status_json(const CampaignStatus& st) {
    json j = {{"ok", st.ok},
              {"unwrap_failed", st.unwrap_failed},
              {"underdetermined", st.underdetermined}};
    if (!st.message.empty()) j["message"] = st.message;
    return j;
}

std::vector<TraceRow> trace_rows(const CampaignResult& result) {
    std::vector<TraceRow> rows;
    rows.reserve(result.records.size());
    for (std::size_t k = 0; k < result.records.size(); ++k) {
        const MeasurementRecord& rec = result.records[k];
        const FrequencyEstimate& est = result.estimate_history[k];
        TraceRow r;
        r.timestamp = rec.timestamp;
        r.T = rec.cycle.T;
        r.offset = rec.cycle.analysis_offset;
        r.n = rec.outcome.n;
        r.N = rec.outcome.N;
        r.m = rec.outcome.m;
        r.M = rec.outcome.M;
        r.omega_mean = est.omega_mean;
        r.omega_err = est.omega_err;
        r.wall_time = rec.wall_time;
        rows.push_back(r);
    }
    return rows;
}

double best_cycle_sensitivity(const CampaignResult& result) {
    double best = std::numeric_limits<double>::quiet_NaN();
    for (double s : result.cycle_sensitivity)
        if (std::isfinite(s) && (!std::isfinite(best) || s < best)) best = s;
    return best;
}

json campaign_summary(const CampaignResult& result) {
    json j;
    j["n_cycles"] = result.records.size();
    j["total_wall_time_s"] = result.total_wall_time;
    j["final"] = estimate_json(result.final);
    put_finite(j, "sensitivity_hz_per_sqrt_hz", result.sensitivity / two_pi);
    put_finite(j, "best_cycle_sensitivity_hz_per_sqrt_hz",
               best_cycle_sensitivity(result) / two_pi);
    if (result.capture_cycle >= 0) {
        j["capture_cycle"] = result.capture_cycle;
        put_finite(j, "capture_wall_time_s", result.capture_wall_time);
    }
    j["status"] = status_json(result.status);
    return j;
}

std::string snapshot_path(const std::string& prefix, std::size_t cycle) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_posterior_%04zu.json", cycle);
    return prefix + buf;
}

std::string utility_csv(const std::vector<std::pair<std::size_t, UtilityProfile>>& profiles) {
    std::ostringstream out;
    out << "cycle,candidate_t_s,utility_nats,chosen\r\n";
    for (const auto& [cycle, profile] : profiles) {
        for (std::size_t k = 0; k < profile.candidates.size(); ++k) {
            out << cycle << ',' << format_double(profile.candidates[k]) << ','
                << format_double(profile.utility[k]) << ',' << (k == profile.chosen ? 1 : 0)
                << "\r\n";
        }
    }
    return out.str();
}

AdaptiveOptions adaptive_options(const AdaptiveSection& a, const CampaignConfig& cfg) {
    AdaptiveOptions opt;
    opt.omega_lo = a.prior_lo;
    opt.omega_hi = a.prior_hi;
    opt.n_omega = a.n_omega;
    opt.n_phi0 = a.n_phi0;
    opt.ladder_depth = a.ladder_depth;
    opt.broaden_fraction = a.broaden_fraction;
    opt.draw_phi0 = !cfg.phi0.has_value();
    return opt;
}

json run_incremental(const CampaignConfig& cfg, const std::string& prefix, std::uint64_t seed) {
    const CampaignResult result = incremental_campaign(
        cfg.schedule, cfg.cycle_config(), cfg.field, cfg.constants, seed, !cfg.phi0.has_value());
    write_file_atomic(prefix + "_trace.csv", trace_to_csv(trace_rows(result)));
    json j = campaign_summary(result);
    j["truth_omega_hz"] = true_delta_omega(cfg.cycle_config(), cfg.field, cfg.constants) / two_pi;
    return j;
}

json run_adaptive(const CampaignConfig& cfg, const std::string& prefix, std::uint64_t seed) {
    const AdaptiveSection& a = cfg.adaptive;
    std::vector<std::pair<std::size_t, UtilityProfile>> profiles;
    CycleObserver observer = [&](std::size_t cycle, const PosteriorGrid& grid,
                                 const UtilityProfile& profile) {
        profiles.emplace_back(cycle, profile);
        if (a.snapshot_every > 0 && cycle % a.snapshot_every == 0)
            write_file_atomic(snapshot_path(prefix, cycle), grid.to_json());
    };
    const CampaignResult result =
        adaptive_campaign(a.n_cycles, a.t_max, cfg.cycle_config(), cfg.field, cfg.constants, seed,
                          adaptive_options(a, cfg), observer);
    write_file_atomic(prefix + "_trace.csv", trace_to_csv(trace_rows(result)));
    write_file_atomic(prefix + "_utility.csv", utility_csv(profiles));
    json j = campaign_summary(result);
    j["truth_omega_hz"] = true_delta_omega(cfg.cycle_config(), cfg.field, cfg.constants) / two_pi;
    return j;
}

json run_dual(const CampaignConfig& cfg, const std::string& prefix, std::uint64_t seed) {
    const DualSection& d = cfg.dual;
    CycleConfig cfg_S = cfg.cycle_config();
    cfg_S.manifold = cfg.manifold_spec(Manifold::S);
    cfg_S.T = d.t_max_S;
    CycleConfig cfg_D = cfg_S;
    cfg_D.manifold = cfg.manifold_spec(Manifold::D);
    cfg_D.T = d.t_max_D;

    AdaptiveOptions opt_S;
    opt_S.omega_lo = d.prior_lo_S;
    opt_S.omega_hi = d.prior_hi_S;
    opt_S.n_omega = d.n_omega;
    opt_S.n_phi0 = d.n_phi0;
    opt_S.ladder_depth = d.ladder_depth;
    opt_S.broaden_fraction = d.broaden_fraction;
    opt_S.draw_phi0 = !cfg.phi0.has_value();
    AdaptiveOptions opt_D = opt_S;
    opt_D.omega_lo = d.prior_lo_D;
    opt_D.omega_hi = d.prior_hi_D;

    const DualCampaignResult result = dual_manifold_campaign(
        d.n_cycles, cfg_S, cfg_D, cfg.field, cfg.constants, seed, opt_S, opt_D);

    write_file_atomic(prefix + "_trace_S.csv", trace_to_csv(trace_rows(result.s_campaign)));
    write_file_atomic(prefix + "_trace_D.csv", trace_to_csv(trace_rows(result.d_campaign)));

    json j;
    j["s_campaign"] = campaign_summary(result.s_campaign);
    j["d_campaign"] = campaign_summary(result.d_campaign);
    j["separation"] = {{"delta_b_t", result.separation.delta_B},
                       {"delta_b_err_t", result.separation.delta_B_err},
                       {"delta_omega_ac_s_hz", result.separation.delta_omega_ac_S / two_pi},
                       {"delta_omega_ac_s_err_hz", result.separation.delta_omega_ac_S_err / two_pi},
                       {"chi", result.separation.chi_used}};
    return j;
}

json run_utility_profile(const CampaignConfig& cfg, const std::string& prefix) {
    const UtilitySection& u = cfg.utility;
    const PosteriorGrid prior = uniform_prior(u.prior_lo, u.prior_hi, u.n_omega, u.n_phi0);
    CycleConfig cycle = cfg.cycle_config();
    const PhysicsConstants constants = cfg.constants;
    DurationFn dur = [&cycle, &constants](double T) {
        CycleConfig c = cycle;
        c.T = T;
        return duration(c, constants);
    };
    const std::vector<double> candidates =
        u.candidates.empty() ? geometric_ladder(u.t_max, u.ladder_depth) : u.candidates;
    const UtilityProfile profile = utility_profile(prior, candidates, u.c_assumed, dur, true);
    write_file_atomic(prefix + "_utility.csv", utility_csv({{0, profile}}));
    json j;
    j["chosen_t_s"] = profile.candidates[profile.chosen];
    j["candidates_s"] = profile.candidates;
    j["utility_nats"] = profile.utility;
    return j;
}

json run_separate(const CampaignConfig& cfg) {
    const SeparateSection& s = cfg.separate;
    const double nu_D = s.nu_D ? *s.nu_D : (cfg.constants.g_D / cfg.constants.g_S) * cfg.nu_S;
    const double chi = chi_ratio(cfg.nu_S, nu_D, cfg.constants);
    const SeparationResult r = separate_with_errors(s.omega_S, s.omega_S_err, s.omega_D,
                                                    s.omega_D_err, chi, cfg.constants);
    return json{{"delta_b_t", r.delta_B},
                {"delta_b_err_t", r.delta_B_err},
                {"delta_omega_ac_s_hz", r.delta_omega_ac_S / two_pi},
                {"delta_omega_ac_s_err_hz", r.delta_omega_ac_S_err / two_pi},
                {"chi", r.chi_used},
                {"nu_s_hz", cfg.nu_S / two_pi},
                {"nu_d_hz", nu_D / two_pi}};
}

json run_one(const CampaignConfig& cfg, const std::string& prefix, std::uint64_t seed) {
    json j;
    switch (cfg.mode) {
        case CampaignMode::Incremental: j = run_incremental(cfg, prefix, seed); break;
        case CampaignMode::Adaptive: j = run_adaptive(cfg, prefix, seed); break;
        case CampaignMode::Dual: j = run_dual(cfg, prefix, seed); break;
        case CampaignMode::UtilityProfile: j = run_utility_profile(cfg, prefix); break;
        case CampaignMode::Separate: j = run_separate(cfg); break;
    }
    j["mode"] = to_string(cfg.mode);
    j["units"] = "Hz";
    if (cfg.has_seed) j["seed"] = seed;
    return j;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

} // namespace

std::string run_campaign(const CampaignConfig& config, const std::string& out_prefix,
                         int replicas) {
    if (replicas < 1)
        throw std::invalid_argument("run_campaign: replicas must be >= 1");
    const bool simulates = config.mode == CampaignMode::Incremental ||
                           config.mode == CampaignMode::Adaptive ||
                           config.mode == CampaignMode::Dual;
    if (replicas > 1 && !simulates)
        throw std::invalid_argument("run_campaign: --replicas applies to simulation modes only");

    if (replicas == 1) {
        const json j = run_one(config, out_prefix, config.seed);
        const std::string text = j.dump(2);
        write_file_atomic(out_prefix + "_summary.json", text);
        return text;
    }

    std::vector<json> results(static_cast<std::size_t>(replicas));
    std::vector<std::string> errors(static_cast<std::size_t>(replicas));
    std::atomic<std::size_t> next{0};
    const unsigned workers =
        std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                           unsigned(replicas));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (std::size_t r = next.fetch_add(1); r < std::size_t(replicas);
                 r = next.fetch_add(1)) {
                char suffix[24];
                std::snprintf(suffix, sizeof suffix, "_r%03zu", r);
                try {
                    results[r] = run_one(config, out_prefix + suffix, config.seed + r);
                } catch (const std::exception& e) {
                    errors[r] = e.what();
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    for (std::size_t r = 0; r < errors.size(); ++r)
        if (!errors[r].empty())
            throw std::runtime_error("replica " + std::to_string(r) + ": " + errors[r]);

    json agg;
    agg["mode"] = to_string(config.mode);
    agg["units"] = "Hz";
    agg["replicas"] = replicas;
    agg["base_seed"] = config.seed;
    agg["per_replica"] = results;

    auto collect = [&](const char* outer, const char* key) {
        std::vector<double> v;
        for (const json& j : results) {
            const json& src = outer ? j.value(outer, json::object()) : j;
            if (src.contains(key) && src[key].is_number()) v.push_back(src[key].get<double>());
        }
        return v;
    };
    if (config.mode != CampaignMode::Dual) {
        agg["median_sensitivity_hz_per_sqrt_hz"] =
            median(collect(nullptr, "sensitivity_hz_per_sqrt_hz"));
        agg["median_best_cycle_sensitivity_hz_per_sqrt_hz"] =
            median(collect(nullptr, "best_cycle_sensitivity_hz_per_sqrt_hz"));
    }

    const std::string text = agg.dump(2);
    write_file_atomic(out_prefix + "_summary.json", text);
    return text;
}

std::string replay_trace(const CampaignConfig& config, const std::string& trace_path,
                         const std::string& out_prefix) {
    std::ifstream in(trace_path);
    if (!in) throw std::runtime_error("replay: cannot open '" + trace_path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    std::vector<TraceRow> rows = trace_from_csv(ss.str());
    if (rows.empty()) throw std::runtime_error("replay: trace has no cycles");

    const AdaptiveSection& a = config.adaptive;
    PosteriorGrid post = uniform_prior(a.prior_lo, a.prior_hi, a.n_omega, a.n_phi0);

    FrequencyEstimate est;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        TraceRow& r = rows[k];
        // reapply the campaign's memory-loss rule at T_max cycles
        if (config.mode == CampaignMode::Adaptive && r.T == a.t_max && a.broaden_fraction > 0.0)
            post = broaden(post, a.broaden_fraction);
        const ParityOutcome outcome{r.n, r.N, r.m, r.M};
        try {
            post = update(post, outcome, r.T, r.offset);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("replay cycle " + std::to_string(k) + ": " + e.what());
        }
        est = moments(post);
        r.omega_mean = est.omega_mean;
        r.omega_err = est.omega_err;
    }

    write_file_atomic(out_prefix + "_replay_trace.csv", trace_to_csv(rows));
    json j;
    j["mode"] = "replay";
    j["units"] = "Hz";
    j["source_trace"] = trace_path;
    j["n_cycles"] = rows.size();
    j["final"] = estimate_json(est);
    const std::string text = j.dump(2);
    write_file_atomic(out_prefix + "_replay_summary.json", text);
    return text;
}

} // namespace dmag
