#include "dmag/design.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dmag {

double analysis_phase_offset(const PosteriorGrid& prior, double T) {
    const FrequencyEstimate est = moments(prior);
    const double expected = est.omega_mean * T + est.phi0_mean;
    return wrap_phase_lower(std::numbers::pi / 4.0 - expected);
}

double expected_utility(const PosteriorGrid& prior, double T, double c_assumed,
                        const DurationFn& duration_fn, double analysis_offset) {
    if (!(c_assumed > 0.0 && c_assumed <= 1.0))
        throw std::invalid_argument("expected_utility: c_assumed must be in (0, 1]");
    const double d0 = duration_fn(0.0);
    if (!(d0 > 0.0))
        throw std::invalid_argument("expected_utility: duration_fn(0) must be positive");

    const std::size_t nw = prior.n_omega(), np = prior.n_phi0();
    const double area = prior.cell_area();

    std::vector<double> ca(nw), sa(nw), cp(np), sp(np);
    for (std::size_t i = 0; i < nw; ++i) {
        const double a = prior.omega(i) * T + analysis_offset;
        ca[i] = std::cos(a);
        sa[i] = std::sin(a);
    }
    for (std::size_t j = 0; j < np; ++j) {
        cp[j] = std::cos(prior.phi0(j));
        sp[j] = std::sin(prior.phi0(j));
    }

    // one pass accumulates, for each of the four outcomes, the evidence and
    // the unnormalized omega marginal of the hypothetical posterior
    std::vector<double> marg[4];
    for (auto& v : marg) v.assign(nw, 0.0);
    double ev[4] = {0, 0, 0, 0};

    for (std::size_t i = 0; i < nw; ++i) {
        const double cai = ca[i], sai = sa[i];
        double acc[4] = {0, 0, 0, 0};
        for (std::size_t j = 0; j < np; ++j) {
            const double w = prior.at(i, j);
            if (w <= 0.0) continue;
            const double cphi = cai * cp[j] - sai * sp[j];
            const double sphi = sai * cp[j] + cai * sp[j];
            const double p_xx = 0.5 * (1.0 - c_assumed * cphi);
            const double p_xy = 0.5 * (1.0 + c_assumed * sphi);
            acc[0] += w * (1.0 - p_xx) * (1.0 - p_xy); // (n, m) = (0, 0)
            acc[1] += w * (1.0 - p_xx) * p_xy;         // (0, 1)
            acc[2] += w * p_xx * (1.0 - p_xy);         // (1, 0)
            acc[3] += w * p_xx * p_xy;                 // (1, 1)
        }
        for (int o = 0; o < 4; ++o) {
            marg[o][i] = acc[o] * prior.cell_phi0();
            ev[o] += acc[o] * area;
        }
    }

    // U0: integral p log p of the prior omega marginal
    double u0 = 0.0;
    {
        const std::vector<double> pm = prior.omega_marginal();
        for (double p : pm)
            if (p > 0.0) u0 += p * std::log(p);
        u0 *= prior.cell_omega();
    }

    double gain = 0.0;
    for (int o = 0; o < 4; ++o) {
        if (ev[o] <= 0.0) continue; // impossible outcome contributes nothing
        double u = 0.0;
        for (std::size_t i = 0; i < nw; ++i) {
            const double p = marg[o][i] / ev[o];
            if (p > 0.0) u += p * std::log(p);
        }
        u *= prior.cell_omega();
        gain += (u - u0) * ev[o];
    }

    return (d0 / duration_fn(T)) * gain;
}

UtilityProfile utility_profile(const PosteriorGrid& prior, const std::vector<double>& candidates,
                               double c_assumed, const DurationFn& duration_fn,
                               bool steer_offset) {
    if (candidates.empty())
        throw std::invalid_argument("utility_profile: need at least one candidate T");
    UtilityProfile profile;
    profile.candidates = candidates;
    profile.utility.reserve(candidates.size());
    for (double T : candidates) {
        const double offset = steer_offset ? analysis_phase_offset(prior, T) : 0.0;
        profile.utility.push_back(expected_utility(prior, T, c_assumed, duration_fn, offset));
    }
    // argmax with ties toward smaller T; utilities within numerical noise
    // of the maximum count as tied (a fresh product prior makes every T
    // equally uninformative, and the capture regime must start at T = 0)
    double best = profile.utility[0];
    for (double u : profile.utility) best = std::max(best, u);
    const double tie_tol = 1e-12 + 1e-9 * std::abs(best);
    profile.chosen = 0;
    double chosen_t = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        if (profile.utility[k] >= best - tie_tol && candidates[k] < chosen_t) {
            profile.chosen = k;
            chosen_t = candidates[k];
        }
    }
    return profile;
}

double select_interrogation_time(const PosteriorGrid& prior, const std::vector<double>& candidates,
                                 double c_assumed, const DurationFn& duration_fn) {
    const UtilityProfile p = utility_profile(prior, candidates, c_assumed, duration_fn, true);
    return p.candidates[p.chosen];
}

std::vector<double> geometric_ladder(double t_max, int depth) {
    if (!(t_max > 0.0))
        throw std::invalid_argument("geometric_ladder: t_max must be positive");
    std::vector<double> out{0.0};
    for (int k = depth; k >= 0; --k)
        out.push_back(t_max / double(1ULL << k));
    return out;
}

} // namespace dmag
