#include "doctest.h"

#include <cmath>

#include "dmag/sim.hpp"

using namespace dmag;

namespace {

// linear dc field producing a chosen S-state Delta omega between x1, x2
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

} // namespace

TEST_CASE("contrast decay law") {
    ContrastModel cm; // defaults: c0 = 1, t_coh = 48.5 s, p = 1
    CHECK(cm.at(0.0) == 1.0);
    CHECK(cm.at(3.0) == doctest::Approx(0.94).epsilon(1e-3));
    cm.p = 2.0;
    CHECK(cm.at(48.5) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("true rate composes dc and differential ac terms") {
    PhysicsConstants c;
    CycleConfig cfg = basic_config(c);
    FieldModel field = field_for_rate(two_pi * 10.0, cfg.x1, cfg.x2, c);
    CHECK(true_delta_omega(cfg, field, c) == doctest::Approx(two_pi * 10.0).epsilon(1e-12));

    // D manifold picks up the factor 5 g_D / g_S on the same field
    CycleConfig cfg_d = cfg;
    cfg_d.manifold = ManifoldSpec::metastable(c);
    CHECK(true_delta_omega(cfg_d, field, c) ==
          doctest::Approx(two_pi * 10.0 * 5.0 * c.g_D / c.g_S).epsilon(1e-12));
}

TEST_CASE("deterministic parity at phi = 0 with full contrast") {
    PhysicsConstants c;
    CycleConfig cfg = basic_config(c);
    cfg.T = 0.0;
    cfg.N = 1000000;
    cfg.M = 0;
    FieldModel field = FieldModel::linear_gradient(1.0e-6, 0.0);
    RandomStream rng(7);
    const MeasurementRecord rec = simulate_cycle(cfg, field, c, rng);
    CHECK(rec.outcome.n == 0); // p_XX(phi=0, C=1) = 0 exactly
    CHECK(rec.attempts == cfg.N);
}

TEST_CASE("simulate_cycle is bit-reproducible under a fixed stream") {
    PhysicsConstants c;
    CycleConfig cfg = basic_config(c);
    cfg.T = 0.25;
    cfg.phi0 = 0.3;
    FieldModel field = field_for_rate(two_pi * 4.0, cfg.x1, cfg.x2, c);
    RandomStream a = derive_stream(99, 5, 2);
    RandomStream b = derive_stream(99, 5, 2);
    const MeasurementRecord ra = simulate_cycle(cfg, field, c, a);
    const MeasurementRecord rb = simulate_cycle(cfg, field, c, b);
    CHECK(ra.outcome.n == rb.outcome.n);
    CHECK(ra.outcome.m == rb.outcome.m);
    CHECK(ra.attempts == rb.attempts);
    CHECK(ra.wall_time == rb.wall_time);
}

TEST_CASE("empirical parity frequency converges to parity_even_prob") {
    PhysicsConstants c;
    CycleConfig cfg = basic_config(c);
    cfg.T = 0.1;
    cfg.phi0 = 0.4;
    cfg.N = 100000;
    cfg.M = 100000;
    FieldModel field = field_for_rate(two_pi * 2.0, cfg.x1, cfg.x2, c);
    RandomStream rng(21);
    const MeasurementRecord rec = simulate_cycle(cfg, field, c, rng);

    SensorPhaseState state;
    state.phi = true_delta_omega(cfg, field, c) * cfg.T + cfg.phi0;
    state.contrast = cfg.contrast.at(cfg.T);
    for (ParityBasis basis : {ParityBasis::XX, ParityBasis::XY}) {
        const double p = parity_even_prob(basis, state);
        const double freq = basis == ParityBasis::XX ? double(rec.outcome.n) / double(cfg.N)
                                                     : double(rec.outcome.m) / double(cfg.M);
        const double bound = 4.0 * std::sqrt(p * (1.0 - p) / double(cfg.N));
        CHECK(std::abs(freq - p) <= bound);
    }
}

TEST_CASE("D-manifold postselection keeps the attempt ratio at e^(2T/tau)") {
    PhysicsConstants c;
    CycleConfig cfg = basic_config(c);
    cfg.manifold = ManifoldSpec::metastable(c);
    cfg.T = c.tau_D / 2.0; // survival e^-1 per repetition
    cfg.N = 25;
    cfg.M = 25;
    FieldModel field = FieldModel::linear_gradient(1.0e-6, 0.0);

    double attempts = 0.0, accepted = 0.0;
    for (int k = 0; k < 10000; ++k) {
        RandomStream rng = derive_stream(31, std::uint64_t(k), 2);
        const MeasurementRecord rec = simulate_cycle(cfg, field, c, rng);
        attempts += double(rec.attempts);
        accepted += double(cfg.N + cfg.M);
        CHECK(rec.attempts >= cfg.N + cfg.M);
    }
    CHECK(attempts / accepted == doctest::Approx(std::exp(1.0)).epsilon(0.05));
}

TEST_CASE("wall time accounting") {
    PhysicsConstants c;
    CycleConfig cfg = basic_config(c);
    FieldModel field = FieldModel::linear_gradient(1.0e-6, 0.0);

    cfg.T = 3.0;
    cfg.N = 1;
    cfg.M = 0;
    RandomStream rng(3);
    const MeasurementRecord rec = simulate_cycle(cfg, field, c, rng);
    CHECK(rec.wall_time == doctest::Approx(3.3)); // 3.0 s interrogation + 0.3 s overhead
    // 91% of the cycle is interrogation
    CHECK(cfg.T / (cfg.T + cfg.overhead) == doctest::Approx(0.909).epsilon(1e-3));
}

TEST_CASE("expected duration") {
    PhysicsConstants c;
    CycleConfig cfg = basic_config(c);
    cfg.N = 1;
    cfg.M = 1;

    cfg.T = 0.0;
    CHECK(duration(cfg, c) == doctest::Approx(0.6));
    cfg.T = 3.0;
    CHECK(duration(cfg, c) == doctest::Approx(6.6));
    cfg.T = 0.0;

    CycleConfig cfg_d = cfg;
    cfg_d.manifold = ManifoldSpec::metastable(c);
    CHECK(duration(cfg_d, c) == duration(cfg, c)); // survival = 1 at T = 0
    cfg_d.T = 1.0;
    CHECK(duration(cfg_d, c) ==
          doctest::Approx(2.0 * 1.3 * std::exp(2.0 / c.tau_D)).epsilon(1e-12));
}

TEST_CASE("positions outside the field domain are rejected") {
    PhysicsConstants c;
    CycleConfig cfg = basic_config(c);
    cfg.x1 = 7.0e-3; // beyond the default 6.4 mm axis
    FieldModel field = FieldModel::linear_gradient(1.0e-6, 0.0);
    RandomStream rng(5);
    CHECK_THROWS_AS(simulate_cycle(cfg, field, c, rng), std::out_of_range);
}

TEST_CASE("drift: identity cases") {
    PhysicsConstants c;
    FieldModel field = FieldModel::linear_gradient(1.0e-6, 1e-7);
    RandomStream rng(17);

    FieldModel same = advance_drift(field, 0.0, rng);
    CHECK(same.gradient_offset == field.gradient_offset);

    field.drift.type = DriftType::RandomWalk; // zero diffusion stays put
    same = advance_drift(field, 100.0, rng);
    CHECK(same.gradient_offset == field.gradient_offset);
}

TEST_CASE("random-walk drift accumulates the configured variance") {
    PhysicsConstants c;
    FieldModel field = FieldModel::linear_gradient(1.0e-6, 0.0);
    field.drift.type = DriftType::RandomWalk;
    field.drift.rw_diffusion = 3e-9; // T/m per sqrt(s)

    CycleConfig cfg = basic_config(c);
    const double dx = cfg.x1 - cfg.x2;
    const double scale = c.g_S * c.mu_B_over_hbar * dx; // gamma -> Delta omega
    const double t_total = 50.0;

    double sum = 0.0, sum_sq = 0.0;
    const int trials = 10000;
    for (int k = 0; k < trials; ++k) {
        RandomStream rng = derive_stream(41, std::uint64_t(k), 3);
        FieldModel f = field;
        for (int step = 0; step < 5; ++step) f = advance_drift(f, t_total / 5.0, rng);
        const double offset = scale * f.gradient_offset;
        sum += offset;
        sum_sq += offset * offset;
    }
    const double mean = sum / trials;
    const double var = sum_sq / trials - mean * mean;
    const double expected = scale * scale * field.drift.rw_diffusion *
                            field.drift.rw_diffusion * t_total;
    CHECK(var == doctest::Approx(expected).epsilon(0.10));
}

TEST_CASE("OU drift relaxes to its stationary spread") {
    FieldModel field = FieldModel::linear_gradient(1.0e-6, 0.0);
    field.drift.type = DriftType::OrnsteinUhlenbeck;
    field.drift.ou_rate = 0.1;
    field.drift.ou_sigma = 2e-9;

    double sum_sq = 0.0;
    const int trials = 4000;
    for (int k = 0; k < trials; ++k) {
        RandomStream rng = derive_stream(43, std::uint64_t(k), 3);
        FieldModel f = advance_drift(field, 200.0, rng); // >> 1/rate
        sum_sq += f.gradient_offset * f.gradient_offset;
    }
    CHECK(std::sqrt(sum_sq / trials) ==
          doctest::Approx(field.drift.ou_sigma).epsilon(0.05));
}

TEST_CASE("field model JSON round trip") {
    FieldModel field = FieldModel::linear_gradient(2.0e-6, 5e-7);
    field.drift.type = DriftType::OrnsteinUhlenbeck;
    field.drift.ou_rate = 0.01;
    field.drift.ou_sigma = 1e-9;
    const FieldModel back = FieldModel::from_json(field.to_json());
    CHECK(back.dc(1.1e-3) == doctest::Approx(field.dc(1.1e-3)).epsilon(1e-15));
    CHECK(back.drift.ou_sigma == field.drift.ou_sigma);
    CHECK(back.axis_hi() == field.axis_hi());
}

TEST_CASE("negative rf map is rejected") {
    FieldModel field = FieldModel::linear_gradient(1.0e-6, 0.0);
    field.b_rf_perp = PiecewisePolynomial::linear(-1e-7, 0.0, 0.0, 6.4e-3);
    CHECK_THROWS_AS(field.validate(), std::invalid_argument);
}
