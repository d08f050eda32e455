#include "dmag/sim.hpp"

#include <cmath>
#include <stdexcept>

namespace dmag {

double ContrastModel::at(double T) const {
    if (T == 0.0) return c0;
    return c0 * std::exp(-std::pow(T / t_coh, p));
}

void CycleConfig::validate() const {
    if (!(T >= 0.0))
        throw std::invalid_argument("CycleConfig: T must be nonnegative");
    if (!(overhead >= 0.0))
        throw std::invalid_argument("CycleConfig: overhead must be nonnegative");
    contrast.validate();
}

double true_delta_omega(const CycleConfig& config, const FieldModel& field,
                        const PhysicsConstants& constants) {
    const ManifoldSpec& spec = config.manifold;
    const double delta_B = field.dc(config.x1) - field.dc(config.x2);
    const double dc = spec.delta_mj * dc_phase_rate(delta_B, spec.lande, constants);
    const double ac = ac_zeeman_shift(field.rf_perp(config.x1), spec, constants) -
                      ac_zeeman_shift(field.rf_perp(config.x2), spec, constants);
    return dc + ac;
}

namespace {

// Repetitions until `wanted` survive postselection; even-parity hits among
// the survivors are binomial with probability p_even.
struct BasisDraw {
    std::uint64_t hits = 0;
    std::uint64_t attempts = 0;
};

BasisDraw draw_basis(std::uint64_t wanted, double p_even, double p_survive,
                     RandomStream& rng) {
    BasisDraw out;
    if (p_survive >= 1.0) {
        out.attempts = wanted;
        out.hits = rng.binomial(wanted, p_even);
        return out;
    }
    std::uint64_t accepted = 0;
    while (accepted < wanted) {
        ++out.attempts;
        if (!rng.bernoulli(p_survive)) continue;
        ++accepted;
        if (rng.bernoulli(p_even)) ++out.hits;
    }
    return out;
}

} // namespace

MeasurementRecord simulate_cycle(const CycleConfig& config, const FieldModel& field,
                                 const PhysicsConstants& constants, RandomStream& rng) {
    config.validate();
    const double delta_omega = true_delta_omega(config, field, constants);

    SensorPhaseState state;
    state.phi = delta_omega * config.T + config.phi0 + config.analysis_offset;
    state.contrast = config.contrast.at(config.T);

    const double p_xx = parity_even_prob(ParityBasis::XX, state);
    const double p_xy = parity_even_prob(ParityBasis::XY, state);
    const double p_survive = config.manifold.manifold == Manifold::D
                                 ? std::exp(-2.0 * config.T / constants.tau_D)
                                 : 1.0;

    const BasisDraw xx = draw_basis(config.N, p_xx, p_survive, rng);
    const BasisDraw xy = draw_basis(config.M, p_xy, p_survive, rng);

    MeasurementRecord rec;
    rec.cycle = config;
    rec.outcome = ParityOutcome{xx.hits, config.N, xy.hits, config.M};
    rec.attempts = xx.attempts + xy.attempts;
    rec.wall_time = static_cast<double>(rec.attempts) * (config.overhead + config.T);
    return rec;
}

double duration(const CycleConfig& config, const PhysicsConstants& constants) {
    const double reps = static_cast<double>(config.N + config.M);
    double d = reps * (config.overhead + config.T);
    if (config.manifold.manifold == Manifold::D)
        d *= std::exp(2.0 * config.T / constants.tau_D);
    return d;
}

} // namespace dmag
