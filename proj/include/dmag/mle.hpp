#pragma once
// Maximum-likelihood estimation of (phi, C) from one parity outcome.
//
// The likelihood is the product of the two binomial probability masses at
// p_XX = (1 - C cos phi)/2 and p_XY = (1 + C sin phi)/2. The maximizer is
// found by a coarse 256x64 grid over (-pi, pi] x [0, 1] followed by local
// refinement (guards against the multimodality a pure gradient ascent
// would miss at low contrast). 68.3% confidence bounds are the extreme
// parameter values with likelihood ratio R = 2 log(L_max / L) <= 1.

#include "dmag/physics.hpp"

namespace dmag {

struct PhaseEstimate {
    double phi_hat = 0.0;   // rad, in (-pi, pi]
    double c_hat = 0.0;     // [0, 1]
    double phi_ci_lo = 0.0; // unwrapped bounds around phi_hat: lo <= phi_hat <= hi
    double phi_ci_hi = 0.0;
    double c_ci_lo = 0.0;
    double c_ci_hi = 0.0;
    bool degenerate = false; // maximizer on the c = 1 boundary; c CI one-sided
    bool phi_full_width = false; // CI spans the whole circle (phi unidentified)

    double phi_var() const {
        const double hw = 0.5 * (phi_ci_hi - phi_ci_lo);
        return hw * hw;
    }
};

// log of the joint binomial likelihood; -inf where the outcome is
// impossible (e.g. n > 0 with p_XX = 0).
double log_likelihood(const ParityOutcome& outcome, double phi, double c);

double likelihood(const ParityOutcome& outcome, double phi, double c);

PhaseEstimate mle_fit(const ParityOutcome& outcome);

} // namespace dmag
