#include "dmag/campaign_config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dmag {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    if (!j.is_object())
        throw std::invalid_argument("config: expected an object for " + where);
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok)
            throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
    }
}

double hz(const json& j) { return j.get<double>() * two_pi; }

CampaignMode mode_from(const std::string& s) {
    if (s == "incremental") return CampaignMode::Incremental;
    if (s == "adaptive") return CampaignMode::Adaptive;
    if (s == "dual") return CampaignMode::Dual;
    if (s == "utility-profile") return CampaignMode::UtilityProfile;
    if (s == "separate") return CampaignMode::Separate;
    throw std::invalid_argument("config: unknown mode '" + s + "'");
}

Manifold manifold_from(const std::string& s) {
    if (s == "S") return Manifold::S;
    if (s == "D") return Manifold::D;
    throw std::invalid_argument("config: manifold must be \"S\" or \"D\"");
}

void parse_constants(const json& j, PhysicsConstants& c) {
    reject_unknown(j, {"g_s", "g_d", "mu_b_over_hbar_hz_per_t", "tau_d_s", "omega_rf_hz"},
                   "constants");
    if (j.contains("g_s")) c.g_S = j["g_s"].get<double>();
    if (j.contains("g_d")) c.g_D = j["g_d"].get<double>();
    if (j.contains("mu_b_over_hbar_hz_per_t")) c.mu_B_over_hbar = hz(j["mu_b_over_hbar_hz_per_t"]);
    if (j.contains("tau_d_s")) c.tau_D = j["tau_d_s"].get<double>();
    if (j.contains("omega_rf_hz")) c.Omega_rf = hz(j["omega_rf_hz"]);
    c.validate();
}

void parse_cycle(const json& j, CampaignConfig& cfg) {
    reject_unknown(j, {"n", "m", "overhead_s", "contrast", "phi0_rad"}, "cycle");
    if (j.contains("n")) cfg.reps_N = j["n"].get<std::uint64_t>();
    if (j.contains("m")) cfg.reps_M = j["m"].get<std::uint64_t>();
    if (j.contains("overhead_s")) cfg.overhead = j["overhead_s"].get<double>();
    if (j.contains("contrast")) {
        const json& c = j["contrast"];
        reject_unknown(c, {"c0", "t_coh_s", "exponent"}, "cycle.contrast");
        if (c.contains("c0")) cfg.contrast.c0 = c["c0"].get<double>();
        if (c.contains("t_coh_s")) cfg.contrast.t_coh = c["t_coh_s"].get<double>();
        if (c.contains("exponent")) cfg.contrast.p = c["exponent"].get<double>();
    }
    if (j.contains("phi0_rad")) cfg.phi0 = j["phi0_rad"].get<double>();
}

void parse_adaptive(const json& j, AdaptiveSection& a) {
    reject_unknown(j,
                   {"n_cycles", "t_max_s", "prior_range_hz", "n_omega", "n_phi0", "ladder_depth",
                    "broaden_fraction", "snapshot_every"},
                   "adaptive");
    if (j.contains("n_cycles")) a.n_cycles = j["n_cycles"].get<std::size_t>();
    if (j.contains("t_max_s")) a.t_max = j["t_max_s"].get<double>();
    if (j.contains("prior_range_hz")) {
        a.prior_lo = hz(j["prior_range_hz"].at(0));
        a.prior_hi = hz(j["prior_range_hz"].at(1));
    }
    if (j.contains("n_omega")) a.n_omega = j["n_omega"].get<std::size_t>();
    if (j.contains("n_phi0")) a.n_phi0 = j["n_phi0"].get<std::size_t>();
    if (j.contains("ladder_depth")) a.ladder_depth = j["ladder_depth"].get<int>();
    if (j.contains("broaden_fraction")) a.broaden_fraction = j["broaden_fraction"].get<double>();
    if (j.contains("snapshot_every")) a.snapshot_every = j["snapshot_every"].get<std::size_t>();
}

void parse_dual(const json& j, DualSection& d) {
    reject_unknown(j,
                   {"n_cycles", "t_max_s_s", "t_max_d_s", "prior_range_s_hz", "prior_range_d_hz",
                    "n_omega", "n_phi0", "ladder_depth", "broaden_fraction"},
                   "dual");
    if (j.contains("n_cycles")) d.n_cycles = j["n_cycles"].get<std::size_t>();
    if (j.contains("t_max_s_s")) d.t_max_S = j["t_max_s_s"].get<double>();
    if (j.contains("t_max_d_s")) d.t_max_D = j["t_max_d_s"].get<double>();
    if (j.contains("prior_range_s_hz")) {
        d.prior_lo_S = hz(j["prior_range_s_hz"].at(0));
        d.prior_hi_S = hz(j["prior_range_s_hz"].at(1));
    }
    if (j.contains("prior_range_d_hz")) {
        d.prior_lo_D = hz(j["prior_range_d_hz"].at(0));
        d.prior_hi_D = hz(j["prior_range_d_hz"].at(1));
    }
    if (j.contains("n_omega")) d.n_omega = j["n_omega"].get<std::size_t>();
    if (j.contains("n_phi0")) d.n_phi0 = j["n_phi0"].get<std::size_t>();
    if (j.contains("ladder_depth")) d.ladder_depth = j["ladder_depth"].get<int>();
    if (j.contains("broaden_fraction")) d.broaden_fraction = j["broaden_fraction"].get<double>();
}

void parse_utility(const json& j, UtilitySection& u) {
    reject_unknown(j,
                   {"t_candidates_s", "t_max_s", "ladder_depth", "c_assumed", "prior_range_hz",
                    "n_omega", "n_phi0"},
                   "utility");
    if (j.contains("t_candidates_s")) u.candidates = j["t_candidates_s"].get<std::vector<double>>();
    if (j.contains("t_max_s")) u.t_max = j["t_max_s"].get<double>();
    if (j.contains("ladder_depth")) u.ladder_depth = j["ladder_depth"].get<int>();
    if (j.contains("c_assumed")) u.c_assumed = j["c_assumed"].get<double>();
    if (j.contains("prior_range_hz")) {
        u.prior_lo = hz(j["prior_range_hz"].at(0));
        u.prior_hi = hz(j["prior_range_hz"].at(1));
    }
    if (j.contains("n_omega")) u.n_omega = j["n_omega"].get<std::size_t>();
    if (j.contains("n_phi0")) u.n_phi0 = j["n_phi0"].get<std::size_t>();
}

void parse_separate(const json& j, SeparateSection& s) {
    reject_unknown(j,
                   {"delta_omega_s_hz", "delta_omega_s_err_hz", "delta_omega_d_hz",
                    "delta_omega_d_err_hz", "nu_d_hz"},
                   "separate");
    s.omega_S = hz(j.at("delta_omega_s_hz"));
    s.omega_D = hz(j.at("delta_omega_d_hz"));
    if (j.contains("delta_omega_s_err_hz")) s.omega_S_err = hz(j["delta_omega_s_err_hz"]);
    if (j.contains("delta_omega_d_err_hz")) s.omega_D_err = hz(j["delta_omega_d_err_hz"]);
    if (j.contains("nu_d_hz")) s.nu_D = hz(j["nu_d_hz"]);
}

} // namespace

const char* to_string(CampaignMode mode) {
    switch (mode) {
        case CampaignMode::Incremental: return "incremental";
        case CampaignMode::Adaptive: return "adaptive";
        case CampaignMode::Dual: return "dual";
        case CampaignMode::UtilityProfile: return "utility-profile";
        case CampaignMode::Separate: return "separate";
    }
    return "adaptive";
}

CampaignConfig CampaignConfig::from_json(const std::string& text) {
    const json j = json::parse(text);
    reject_unknown(j,
                   {"mode", "seed", "units", "out", "constants", "field", "field_path",
                    "positions_m", "manifold", "nu_s_hz", "cycle", "adaptive", "dual", "utility",
                    "incremental", "separate"},
                   "campaign config");

    CampaignConfig cfg;
    cfg.mode = mode_from(j.at("mode").get<std::string>());

    if (j.at("units").get<std::string>() != "Hz")
        throw std::invalid_argument("config: units must be \"Hz\"");

    if (j.contains("seed")) {
        cfg.seed = j["seed"].get<std::uint64_t>();
        cfg.has_seed = true;
    }
    const bool simulates = cfg.mode == CampaignMode::Incremental ||
                           cfg.mode == CampaignMode::Adaptive || cfg.mode == CampaignMode::Dual;
    if (simulates && !cfg.has_seed)
        throw std::invalid_argument("config: seed is mandatory for simulation modes");

    if (j.contains("out")) cfg.out = j["out"].get<std::string>();
    if (j.contains("constants")) parse_constants(j["constants"], cfg.constants);

    if (j.contains("field") && j.contains("field_path"))
        throw std::invalid_argument("config: give either field or field_path, not both");
    if (j.contains("field"))
        cfg.field = FieldModel::from_json(j["field"].dump());
    else if (j.contains("field_path"))
        cfg.field = FieldModel::load(j["field_path"].get<std::string>());
    else if (simulates)
        throw std::invalid_argument("config: simulation modes need field or field_path");

    if (j.contains("positions_m")) {
        cfg.x1 = j["positions_m"].at(0).get<double>();
        cfg.x2 = j["positions_m"].at(1).get<double>();
    }
    if (j.contains("manifold")) cfg.manifold = manifold_from(j["manifold"].get<std::string>());
    if (j.contains("nu_s_hz")) cfg.nu_S = hz(j["nu_s_hz"]);

    if (j.contains("cycle")) parse_cycle(j["cycle"], cfg);
    if (j.contains("adaptive")) parse_adaptive(j["adaptive"], cfg.adaptive);
    if (j.contains("dual")) parse_dual(j["dual"], cfg.dual);
    if (j.contains("utility")) parse_utility(j["utility"], cfg.utility);
    if (j.contains("incremental")) {
        reject_unknown(j["incremental"], {"schedule_s"}, "incremental");
        cfg.schedule = j["incremental"].at("schedule_s").get<std::vector<double>>();
    }
    if (cfg.mode == CampaignMode::Separate) {
        if (!j.contains("separate"))
            throw std::invalid_argument("config: separate mode needs a separate section");
        parse_separate(j["separate"], cfg.separate);
    }
    return cfg;
}

CampaignConfig CampaignConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string CampaignConfig::to_json() const {
    json j;
    j["mode"] = to_string(mode);
    j["units"] = "Hz";
    if (has_seed) j["seed"] = seed;
    if (!out.empty()) j["out"] = out;

    j["constants"] = {{"g_s", constants.g_S},
                      {"g_d", constants.g_D},
                      {"mu_b_over_hbar_hz_per_t", constants.mu_B_over_hbar / two_pi},
                      {"tau_d_s", constants.tau_D},
                      {"omega_rf_hz", constants.Omega_rf / two_pi}};
    const bool simulates = mode == CampaignMode::Incremental || mode == CampaignMode::Adaptive ||
                           mode == CampaignMode::Dual;
    if (simulates) j["field"] = json::parse(field.to_json());
    j["positions_m"] = {x1, x2};
    j["manifold"] = manifold == Manifold::S ? "S" : "D";
    j["nu_s_hz"] = nu_S / two_pi;

    json cyc = {{"n", reps_N},
                {"m", reps_M},
                {"overhead_s", overhead},
                {"contrast",
                 {{"c0", contrast.c0}, {"t_coh_s", contrast.t_coh}, {"exponent", contrast.p}}}};
    if (phi0) cyc["phi0_rad"] = *phi0;
    j["cycle"] = cyc;

    switch (mode) {
        case CampaignMode::Adaptive:
            j["adaptive"] = {{"n_cycles", adaptive.n_cycles},
                             {"t_max_s", adaptive.t_max},
                             {"prior_range_hz",
                              {adaptive.prior_lo / two_pi, adaptive.prior_hi / two_pi}},
                             {"n_omega", adaptive.n_omega},
                             {"n_phi0", adaptive.n_phi0},
                             {"ladder_depth", adaptive.ladder_depth},
                             {"broaden_fraction", adaptive.broaden_fraction},
                             {"snapshot_every", adaptive.snapshot_every}};
            break;
        case CampaignMode::Dual:
            j["dual"] = {{"n_cycles", dual.n_cycles},
                         {"t_max_s_s", dual.t_max_S},
                         {"t_max_d_s", dual.t_max_D},
                         {"prior_range_s_hz", {dual.prior_lo_S / two_pi, dual.prior_hi_S / two_pi}},
                         {"prior_range_d_hz", {dual.prior_lo_D / two_pi, dual.prior_hi_D / two_pi}},
                         {"n_omega", dual.n_omega},
                         {"n_phi0", dual.n_phi0},
                         {"ladder_depth", dual.ladder_depth},
                         {"broaden_fraction", dual.broaden_fraction}};
            break;
        case CampaignMode::UtilityProfile: {
            json u = {{"t_max_s", utility.t_max},
                      {"ladder_depth", utility.ladder_depth},
                      {"c_assumed", utility.c_assumed},
                      {"prior_range_hz", {utility.prior_lo / two_pi, utility.prior_hi / two_pi}},
                      {"n_omega", utility.n_omega},
                      {"n_phi0", utility.n_phi0}};
            if (!utility.candidates.empty()) u["t_candidates_s"] = utility.candidates;
            j["utility"] = u;
            break;
        }
        case CampaignMode::Incremental:
            j["incremental"] = {{"schedule_s", schedule}};
            break;
        case CampaignMode::Separate:
            j["separate"] = {{"delta_omega_s_hz", separate.omega_S / two_pi},
                             {"delta_omega_s_err_hz", separate.omega_S_err / two_pi},
                             {"delta_omega_d_hz", separate.omega_D / two_pi},
                             {"delta_omega_d_err_hz", separate.omega_D_err / two_pi}};
            if (separate.nu_D) j["separate"]["nu_d_hz"] = *separate.nu_D / two_pi;
            break;
    }
    return j.dump(2);
}

CycleConfig CampaignConfig::cycle_config() const {
    CycleConfig c;
    c.x1 = x1;
    c.x2 = x2;
    c.manifold = manifold_spec(manifold);
    c.N = reps_N;
    c.M = reps_M;
    c.overhead = overhead;
    c.contrast = contrast;
    if (phi0) c.phi0 = *phi0;
    return c;
}

ManifoldSpec CampaignConfig::manifold_spec(Manifold which) const {
    return which == Manifold::S ? ManifoldSpec::ground_state(constants, nu_S)
                                : ManifoldSpec::metastable(constants, nu_S);
}

} // namespace dmag
