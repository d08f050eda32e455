#include "dmag/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dmag {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

double log_choose(std::uint64_t n, std::uint64_t k) {
    return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
           std::lgamma(double(n - k) + 1.0);
}

// k * log((1+s)/2) with the k == 0 convention 0 * log 0 = 0
inline double count_term(double k, double s) {
    if (k == 0.0) return 0.0;
    if (s <= -1.0) return neg_inf;
    return k * (std::log1p(s) - 0.6931471805599453094); // ln 2
}

struct Workspace {
    double n, Nn, m, Mm; // n, N-n, m, M-m
    double log_binom;    // log C(N,n) + log C(M,m)

    explicit Workspace(const ParityOutcome& o)
        : n(double(o.n)), Nn(double(o.N - o.n)), m(double(o.m)), Mm(double(o.M - o.m)),
          log_binom(log_choose(o.N, o.n) + log_choose(o.M, o.m)) {}

    // log L without the binomial prefactor
    double shape(double phi, double c) const {
        const double u = c * std::cos(phi); // p_XX = (1-u)/2
        const double v = c * std::sin(phi); // p_XY = (1+v)/2
        return count_term(n, -u) + count_term(Nn, u) + count_term(m, v) + count_term(Mm, -v);
    }
};

struct Best {
    double value = neg_inf;
    double phi = 0.0;
    double c = 0.0;

    void offer(double val, double phi_cand, double c_cand) {
        if (val > value) {
            value = val;
            phi = phi_cand;
            c = c_cand;
            return;
        }
        if (val == value) {
            // ties toward smaller |phi|, then smaller c
            const bool better =
                std::abs(phi_cand) < std::abs(phi) ||
                (std::abs(phi_cand) == std::abs(phi) &&
                 (c_cand < c || (c_cand == c && phi_cand < phi)));
            if (better) {
                phi = phi_cand;
                c = c_cand;
            }
        }
    }
};

// outermost point with R <= 1 on one side of the maximizer, by coarse
// scan plus bisection of the bounding crossing
double ci_edge_phi(const Workspace& ws, double log_lmax, double phi_hat, double c_hat,
                   double direction, bool* full_side) {
    const int scan = 720;
    const double step = std::numbers::pi / scan;
    auto excess = [&](double phi) { return 2.0 * (log_lmax - ws.shape(phi, c_hat)) - 1.0; };

    int outer = 0; // last scan index with R <= 1
    for (int k = 1; k <= scan; ++k) {
        if (excess(phi_hat + direction * k * step) <= 0.0) outer = k;
    }
    if (outer == scan) {
        *full_side = true;
        return phi_hat + direction * std::numbers::pi;
    }
    double lo = phi_hat + direction * outer * step;        // inside
    double hi = phi_hat + direction * (outer + 1) * step;  // outside
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (excess(mid) <= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double ci_edge_c(const Workspace& ws, double log_lmax, double phi_hat, double c_hat,
                 double direction) {
    const int scan = 512;
    const double limit = direction > 0 ? 1.0 - c_hat : c_hat;
    if (limit <= 0.0) return c_hat;
    const double step = limit / scan;
    auto excess = [&](double c) { return 2.0 * (log_lmax - ws.shape(phi_hat, c)) - 1.0; };

    int outer = 0;
    for (int k = 1; k <= scan; ++k) {
        if (excess(c_hat + direction * k * step) <= 0.0) outer = k;
    }
    if (outer == scan) return c_hat + direction * limit; // hits the domain boundary
    double lo = c_hat + direction * outer * step;
    double hi = c_hat + direction * (outer + 1) * step;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (excess(mid) <= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

double log_likelihood(const ParityOutcome& outcome, double phi, double c) {
    outcome.validate();
    if (!(c >= 0.0 && c <= 1.0))
        throw std::invalid_argument("log_likelihood: contrast outside [0, 1]");
    const Workspace ws(outcome);
    return ws.log_binom + ws.shape(phi, c);
}

double likelihood(const ParityOutcome& outcome, double phi, double c) {
    const double ll = log_likelihood(outcome, phi, c);
    return ll == neg_inf ? 0.0 : std::exp(ll);
}

PhaseEstimate mle_fit(const ParityOutcome& outcome) {
    outcome.validate();
    if (outcome.N < 1 && outcome.M < 1)
        throw std::invalid_argument("mle_fit: need at least one repetition");

    const Workspace ws(outcome);

    // coarse grid over (-pi, pi] x [0, 1]
    const int n_phi = 256, n_c = 64;
    Best best;
    for (int i = 0; i < n_phi; ++i) {
        const double phi = -std::numbers::pi + (i + 0.5) * two_pi / n_phi;
        for (int j = 0; j < n_c; ++j) {
            const double c = double(j) / (n_c - 1);
            best.offer(ws.shape(phi, c), phi, c);
        }
    }

    // local refinement: shrink a 17x17 window around the maximizer until
    // the cell is below 1e-6 in both parameters
    double half_phi = two_pi / n_phi;
    double half_c = 1.0 / (n_c - 1);
    while (half_phi > 0.5e-6 || half_c > 0.5e-6) {
        const Best center = best;
        for (int i = -8; i <= 8; ++i) {
            const double phi = center.phi + i * half_phi / 8.0;
            for (int j = -8; j <= 8; ++j) {
                const double c = std::clamp(center.c + j * half_c / 8.0, 0.0, 1.0);
                best.offer(ws.shape(phi, c), phi, c);
            }
        }
        half_phi /= 8.0;
        half_c /= 8.0;
    }

    PhaseEstimate est;
    est.phi_hat = wrap_phase(best.phi);
    est.c_hat = std::clamp(best.c, 0.0, 1.0);
    est.degenerate = est.c_hat >= 1.0 - 1e-9;

    const double log_lmax = best.value;
    bool full_lo = false, full_hi = false;
    est.phi_ci_hi = ci_edge_phi(ws, log_lmax, est.phi_hat, est.c_hat, +1.0, &full_hi);
    est.phi_ci_lo = ci_edge_phi(ws, log_lmax, est.phi_hat, est.c_hat, -1.0, &full_lo);
    est.phi_full_width = full_lo && full_hi;

    est.c_ci_hi = ci_edge_c(ws, log_lmax, est.phi_hat, est.c_hat, +1.0);
    est.c_ci_lo = ci_edge_c(ws, log_lmax, est.phi_hat, est.c_hat, -1.0);
    return est;
}

} // namespace dmag
