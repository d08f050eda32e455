#pragma once
// Bayesian experimental design: expected Shannon-information gain in the
// Delta omega marginal for a hypothetical N = M = 1 measurement at fixed
// contrast, weighted by the duration penalty w(T) = D(0)/D(T).

#include <functional>
#include <vector>

#include "dmag/bayes.hpp"

namespace dmag {

using DurationFn = std::function<double(double)>; // T -> expected cycle duration (s)

struct UtilityProfile {
    std::vector<double> candidates; // s
    std::vector<double> utility;    // nats, duration-weighted
    std::size_t chosen = 0;         // argmax; ties toward smaller T
};

// Offset applied to the second analysis pulse so the expected measured
// phase <omega>*T + <phi0> + delta is pi/4 (mod 2pi); delta in [-pi, pi).
double analysis_phase_offset(const PosteriorGrid& prior, double T);

// Expected utility of measuring at T: enumerate the four (n, m) outcomes,
// form each hypothetical posterior at fixed contrast, and average the
// gain in integral p log p of the omega marginal, weighted by the outcome
// probabilities and the duration penalty. The analysis offset is the one
// that would be applied for this T (0 for an unsteered measurement).
double expected_utility(const PosteriorGrid& prior, double T, double c_assumed,
                        const DurationFn& duration_fn, double analysis_offset = 0.0);

UtilityProfile utility_profile(const PosteriorGrid& prior, const std::vector<double>& candidates,
                               double c_assumed, const DurationFn& duration_fn,
                               bool steer_offset = true);

// argmax of expected_utility over the candidates, each evaluated with its
// own pi/4 steering offset.
double select_interrogation_time(const PosteriorGrid& prior, const std::vector<double>& candidates,
                                 double c_assumed, const DurationFn& duration_fn);

// {0, T_max/2^depth, ..., T_max/2, T_max}
std::vector<double> geometric_ladder(double t_max, int depth = 10);

} // namespace dmag
