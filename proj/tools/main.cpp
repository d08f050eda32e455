// dmag: differential magnetometry campaign simulator and estimator CLI.
//
// Subcommands:
//   simulate  run the campaign configured in a JSON file (incremental,
//             adaptive, or dual mode); writes trace CSV + summary JSON
//   estimate  maximum-likelihood (phi, C) fit of one parity outcome
//   utility   expected-information profile over candidate interrogation
//             times for a fresh prior
//   separate  closed-form dc/ac Zeeman separation from two phase rates
//   replay    re-run the Bayesian estimator over a recorded trace CSV
//
// Frequencies in configs, flags, and outputs are in Hz.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dmag/campaign_config.hpp"
#include "dmag/io.hpp"
#include "dmag/mle.hpp"
#include "dmag/protocols.hpp"

namespace {

// --out beats config.out; DMAG_OUT_DIR prefixes relative outputs
std::string resolve_prefix(const dmag::CampaignConfig& config, const std::string& out_flag) {
    std::string prefix = !out_flag.empty() ? out_flag
                         : !config.out.empty() ? config.out
                                               : std::string("dmag_run");
    if (const char* dir = std::getenv("DMAG_OUT_DIR"); dir && *dir && prefix.front() != '/')
        prefix = std::string(dir) + "/" + prefix;
    return prefix;
}

dmag::CampaignConfig load_config(const std::string& path, std::uint64_t seed_flag,
                                 bool seed_given) {
    dmag::CampaignConfig config = dmag::CampaignConfig::load(path);
    if (seed_given) {
        config.seed = seed_flag;
        config.has_seed = true;
    }
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"entanglement-based differential magnetometry toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_flag, trace_path;
    std::uint64_t seed_flag = 0;
    int replicas = 1;

    auto* simulate = app.add_subcommand("simulate", "run a configured campaign");
    simulate->add_option("--config", config_path, "campaign config JSON")->required();
    auto* sim_seed = simulate->add_option("--seed", seed_flag, "override the config seed");
    simulate->add_option("--out", out_flag, "output path prefix");
    simulate->add_option("--replicas", replicas, "independent seeded campaigns to run")
        ->check(CLI::PositiveNumber);

    std::uint64_t est_n = 0, est_N = 50, est_m = 0, est_M = 50;
    auto* estimate = app.add_subcommand("estimate", "MLE fit of one parity outcome");
    estimate->add_option("--n", est_n, "even-parity count, XX basis")->required();
    estimate->add_option("--N", est_N, "repetitions, XX basis")->required();
    estimate->add_option("--m", est_m, "even-parity count, XY basis")->required();
    estimate->add_option("--M", est_M, "repetitions, XY basis")->required();

    auto* utility = app.add_subcommand("utility", "utility profile over candidate T");
    utility->add_option("--config", config_path, "campaign config JSON")->required();
    utility->add_option("--out", out_flag, "output path prefix");

    double sep_ws = 0, sep_ws_err = 0, sep_wd = 0, sep_wd_err = 0;
    double sep_nu_s = 10.4e6, sep_nu_d = 0;
    auto* separate = app.add_subcommand("separate", "dc/ac Zeeman separation");
    separate->add_option("--omega-s-hz", sep_ws, "Delta omega_S (Hz)")->required();
    separate->add_option("--omega-d-hz", sep_wd, "Delta omega_D (Hz)")->required();
    separate->add_option("--omega-s-err-hz", sep_ws_err, "standard error of Delta omega_S (Hz)");
    separate->add_option("--omega-d-err-hz", sep_wd_err, "standard error of Delta omega_D (Hz)");
    separate->add_option("--nu-s-hz", sep_nu_s, "S-state Zeeman splitting (Hz)");
    separate->add_option("--nu-d-hz", sep_nu_d, "D-state splitting (Hz); default (g_D/g_S) nu_S");

    auto* replay = app.add_subcommand("replay", "re-run estimators on a recorded trace");
    replay->add_option("--config", config_path, "campaign config JSON")->required();
    replay->add_option("--trace", trace_path, "trace CSV to replay")->required();
    replay->add_option("--out", out_flag, "output path prefix");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            const dmag::CampaignConfig config =
                load_config(config_path, seed_flag, sim_seed->count() > 0);
            std::cout << dmag::run_campaign(config, resolve_prefix(config, out_flag), replicas)
                      << "\n";
        } else if (estimate->parsed()) {
            const dmag::PhaseEstimate est = dmag::mle_fit({est_n, est_N, est_m, est_M});
            nlohmann::json j = {{"phi_rad", est.phi_hat},
                                {"phi_ci_rad", {est.phi_ci_lo, est.phi_ci_hi}},
                                {"contrast", est.c_hat},
                                {"contrast_ci", {est.c_ci_lo, est.c_ci_hi}},
                                {"degenerate", est.degenerate},
                                {"phi_full_width", est.phi_full_width}};
            std::cout << j.dump(2) << "\n";
        } else if (utility->parsed()) {
            dmag::CampaignConfig config = dmag::CampaignConfig::load(config_path);
            config.mode = dmag::CampaignMode::UtilityProfile;
            std::cout << dmag::run_campaign(config, resolve_prefix(config, out_flag)) << "\n";
        } else if (separate->parsed()) {
            dmag::PhysicsConstants constants;
            const double nu_S = dmag::two_pi * sep_nu_s;
            const double nu_D = sep_nu_d > 0 ? dmag::two_pi * sep_nu_d
                                             : (constants.g_D / constants.g_S) * nu_S;
            const double chi = dmag::chi_ratio(nu_S, nu_D, constants);
            const dmag::SeparationResult r = dmag::separate_with_errors(
                dmag::two_pi * sep_ws, dmag::two_pi * sep_ws_err, dmag::two_pi * sep_wd,
                dmag::two_pi * sep_wd_err, chi, constants);
            nlohmann::json j = {{"delta_b_t", r.delta_B},
                                {"delta_b_err_t", r.delta_B_err},
                                {"delta_omega_ac_s_hz", r.delta_omega_ac_S / dmag::two_pi},
                                {"delta_omega_ac_s_err_hz",
                                 r.delta_omega_ac_S_err / dmag::two_pi},
                                {"chi", chi}};
            std::cout << j.dump(2) << "\n";
        } else if (replay->parsed()) {
            const dmag::CampaignConfig config = dmag::CampaignConfig::load(config_path);
            std::cout << dmag::replay_trace(config, trace_path, resolve_prefix(config, out_flag))
                      << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "dmag: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
