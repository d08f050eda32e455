#include "doctest.h"

#include <cmath>

#include "dmag/mle.hpp"
#include "dmag/rng.hpp"

using namespace dmag;

namespace {

struct GridMax {
    double phi = 0.0, c = 0.0, log_l = -1e308;
};

// brute-force maximization oracle, independent of mle_fit's search
GridMax grid_search(const ParityOutcome& o, int n_phi, int n_c) {
    GridMax best;
    for (int i = 0; i < n_phi; ++i) {
        const double phi = -std::numbers::pi + (i + 0.5) * two_pi / n_phi;
        for (int j = 0; j <= n_c; ++j) {
            const double c = double(j) / n_c;
            const double ll = log_likelihood(o, phi, c);
            if (ll > best.log_l) {
                best.log_l = ll;
                best.phi = phi;
                best.c = c;
            }
        }
    }
    return best;
}

} // namespace

TEST_CASE("likelihood: pinned single-shot value") {
    // phi = pi/2, C = 1: p_XX = 1/2, p_XY = 1 -> L(n=0, m=1) = 1/2
    const ParityOutcome o{0, 1, 1, 1};
    CHECK(likelihood(o, std::numbers::pi / 2.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("likelihood at zero contrast is phase independent") {
    const ParityOutcome o{3, 10, 7, 12};
    const double l0 = log_likelihood(o, 0.3, 0.0);
    CHECK(log_likelihood(o, -2.9, 0.0) == l0);
    CHECK(log_likelihood(o, 1.7, 0.0) == l0);
}

TEST_CASE("likelihood sums to one over all outcomes") {
    const std::uint64_t N = 5, M = 7;
    for (double phi : {0.3, -1.2}) {
        for (double c : {0.0, 0.6, 1.0}) {
            double total = 0.0;
            for (std::uint64_t n = 0; n <= N; ++n)
                for (std::uint64_t m = 0; m <= M; ++m)
                    total += likelihood({n, N, m, M}, phi, c);
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("likelihood is finite and nonnegative on the closed domain") {
    RandomStream rng(51);
    for (int k = 0; k < 500; ++k) {
        const std::uint64_t N = 1 + rng.raw() % 40, M = 1 + rng.raw() % 40;
        const ParityOutcome o{rng.raw() % (N + 1), N, rng.raw() % (M + 1), M};
        const double phi = rng.uniform(-std::numbers::pi, std::numbers::pi);
        const double c = rng.uniform(0.0, 1.0);
        const double l = likelihood(o, phi, c);
        CHECK(std::isfinite(l));
        CHECK(l >= 0.0);
        // boundary contrast included
        CHECK(likelihood(o, phi, 1.0) >= 0.0);
        CHECK(std::isfinite(likelihood(o, phi, 1.0)));
    }
}

TEST_CASE("likelihood is 2pi-periodic in phi") {
    const ParityOutcome o{12, 50, 40, 50};
    RandomStream rng(52);
    for (int k = 0; k < 100; ++k) {
        const double phi = rng.uniform(-3.0, 3.0);
        const double c = rng.uniform(0.0, 1.0);
        CHECK(log_likelihood(o, phi + two_pi, c) ==
              doctest::Approx(log_likelihood(o, phi, c)).epsilon(1e-12));
    }
}

TEST_CASE("balanced outcome: zero contrast, full-width phase CI") {
    const ParityOutcome o{25, 50, 25, 50};
    const PhaseEstimate est = mle_fit(o);
    CHECK(est.c_hat == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(est.phi_full_width);
    CHECK(est.phi_ci_hi - est.phi_ci_lo == doctest::Approx(two_pi));
}

TEST_CASE("fit matches the exhaustive grid oracle on a pinned outcome") {
    const ParityOutcome o{5, 50, 45, 50};
    const GridMax oracle = grid_search(o, 2000, 1000);
    const PhaseEstimate est = mle_fit(o);
    CHECK(std::abs(wrap_phase(est.phi_hat - oracle.phi)) <= two_pi / 2000.0);
    CHECK(std::abs(est.c_hat - oracle.c) <= 1.0 / 1000.0);
    // and the refined maximum is at least as good
    CHECK(log_likelihood(o, est.phi_hat, est.c_hat) >= oracle.log_l - 1e-9);
}

TEST_CASE("fit agrees with the grid oracle over random outcomes") {
    RandomStream rng(53);
    for (int k = 0; k < 500; ++k) {
        const std::uint64_t N = 5 + rng.raw() % 96, M = 5 + rng.raw() % 96;
        const ParityOutcome o{rng.raw() % (N + 1), N, rng.raw() % (M + 1), M};
        const GridMax oracle = grid_search(o, 400, 100);
        const PhaseEstimate est = mle_fit(o);
        CHECK(log_likelihood(o, est.phi_hat, est.c_hat) >= oracle.log_l - 1e-9);
        // location comparison needs a ridge that is actually peaked; flat
        // low-contrast tops displace the argmax by more than a grid cell
        if (oracle.c > 0.2 && N >= 20 && M >= 20) {
            CHECK(std::abs(wrap_phase(est.phi_hat - oracle.phi)) <= 1.5 * two_pi / 400.0);
            CHECK(std::abs(est.c_hat - oracle.c) <= 1.5 / 100.0);
        }
    }
}

TEST_CASE("reflection symmetry of the estimate under n -> N - n") {
    const ParityOutcome o{8, 40, 31, 40};
    const ParityOutcome mirrored{32, 40, 31, 40};
    const PhaseEstimate a = mle_fit(o);
    const PhaseEstimate b = mle_fit(mirrored);
    CHECK(std::cos(b.phi_hat) == doctest::Approx(-std::cos(a.phi_hat)).epsilon(1e-4));
    CHECK(std::sin(b.phi_hat) == doctest::Approx(std::sin(a.phi_hat)).epsilon(1e-4));
    CHECK(b.c_hat == doctest::Approx(a.c_hat).epsilon(1e-4));
}

TEST_CASE("confidence intervals bracket the estimate and touch R = 1") {
    const ParityOutcome o{10, 50, 42, 50};
    const PhaseEstimate est = mle_fit(o);
    CHECK(est.phi_ci_lo <= est.phi_hat);
    CHECK(est.phi_ci_hi >= est.phi_hat);
    CHECK(est.c_ci_lo >= 0.0);
    CHECK(est.c_ci_hi <= 1.0);
    CHECK(est.c_ci_lo <= est.c_hat);
    CHECK(est.c_ci_hi >= est.c_hat);

    const double ll_max = log_likelihood(o, est.phi_hat, est.c_hat);
    if (!est.phi_full_width) {
        CHECK(2.0 * (ll_max - log_likelihood(o, est.phi_ci_hi, est.c_hat)) ==
              doctest::Approx(1.0).epsilon(1e-4));
        CHECK(2.0 * (ll_max - log_likelihood(o, est.phi_ci_lo, est.c_hat)) ==
              doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("CI coverage is near 68.3% (quick check)") {
    const double phi_true = 0.7, c_true = 0.9;
    const std::uint64_t N = 50, M = 50;
    const double p_xx = 0.5 * (1.0 - c_true * std::cos(phi_true));
    const double p_xy = 0.5 * (1.0 + c_true * std::sin(phi_true));

    int covered = 0;
    const int trials = 600;
    for (int k = 0; k < trials; ++k) {
        RandomStream rng = derive_stream(54, std::uint64_t(k), 0);
        const ParityOutcome o{rng.binomial(N, p_xx), N, rng.binomial(M, p_xy), M};
        const PhaseEstimate est = mle_fit(o);
        // wrap-aware membership
        const double lo = est.phi_ci_lo - est.phi_hat;
        const double hi = est.phi_ci_hi - est.phi_hat;
        const double d = wrap_phase(phi_true - est.phi_hat);
        if (d >= lo && d <= hi) ++covered;
    }
    CHECK(double(covered) / trials == doctest::Approx(0.683).epsilon(0.09));
}

TEST_CASE("degenerate flag on the contrast boundary") {
    // heavily polarized single-shot outcomes push c to 1
    const ParityOutcome o{0, 20, 20, 20}; // phi = pi/2, c = 1 is a perfect fit
    const PhaseEstimate est = mle_fit(o);
    CHECK(est.degenerate);
    CHECK(est.c_ci_hi == doctest::Approx(1.0));
}
