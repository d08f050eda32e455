#include "dmag/field_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dmag {

PiecewisePolynomial::PiecewisePolynomial(std::vector<double> knots,
                                         std::vector<std::vector<double>> coeffs)
    : knots_(std::move(knots)), coeffs_(std::move(coeffs)) {
    if (knots_.size() < 2 || coeffs_.size() != knots_.size() - 1)
        throw std::invalid_argument("PiecewisePolynomial: need n+1 knots for n pieces");
    for (std::size_t i = 1; i < knots_.size(); ++i)
        if (!(knots_[i] > knots_[i - 1]))
            throw std::invalid_argument("PiecewisePolynomial: knots must be strictly increasing");
    for (const auto& c : coeffs_)
        if (c.empty())
            throw std::invalid_argument("PiecewisePolynomial: empty coefficient set");
}

namespace {

// canonical segmented axis: 32 electrode pitches of 200 um by default
std::vector<double> segment_knots(double lo, double hi, std::size_t segments = 32) {
    std::vector<double> knots(segments + 1);
    for (std::size_t k = 0; k <= segments; ++k)
        knots[k] = lo + (hi - lo) * double(k) / double(segments);
    return knots;
}

} // namespace

PiecewisePolynomial PiecewisePolynomial::constant(double value, double lo, double hi) {
    const std::vector<double> knots = segment_knots(lo, hi);
    return PiecewisePolynomial(knots,
                               std::vector<std::vector<double>>(knots.size() - 1, {value}));
}

PiecewisePolynomial PiecewisePolynomial::linear(double offset, double slope, double lo, double hi) {
    // local coordinates per segment: value at knot k is offset + slope * knot_k
    const std::vector<double> knots = segment_knots(lo, hi);
    std::vector<std::vector<double>> coeffs;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k)
        coeffs.push_back({offset + slope * knots[k], slope});
    return PiecewisePolynomial(knots, std::move(coeffs));
}

double PiecewisePolynomial::operator()(double x) const {
    if (!contains(x))
        throw std::out_of_range("PiecewisePolynomial: position outside field domain");
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    std::size_t idx = static_cast<std::size_t>(it - knots_.begin());
    idx = idx == 0 ? 0 : idx - 1;
    if (idx >= coeffs_.size()) idx = coeffs_.size() - 1; // x == hi
    const double t = x - knots_[idx];
    const auto& c = coeffs_[idx];
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 0;)
        v = v * t + c[k];
    return v;
}

double FieldModel::dc(double x) const {
    const double mid = 0.5 * (axis_lo() + axis_hi());
    return b_dc(x) + gradient_offset * (x - mid);
}

double FieldModel::rf_perp(double x) const { return b_rf_perp(x); }

void FieldModel::validate() const {
    if (b_dc.lo() != b_rf_perp.lo() || b_dc.hi() != b_rf_perp.hi())
        throw std::invalid_argument("FieldModel: dc and rf maps cover different axis ranges");
    // sampled nonnegativity check, 16 points per piece
    const auto& knots = b_rf_perp.knots();
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        for (int k = 0; k <= 16; ++k) {
            const double x = knots[i] + (knots[i + 1] - knots[i]) * k / 16.0;
            if (b_rf_perp(x) < 0.0)
                throw std::invalid_argument("FieldModel: b_rf_perp negative at x=" + std::to_string(x));
        }
    }
}

FieldModel FieldModel::linear_gradient(double b0, double gradient, double lo, double hi) {
    FieldModel f;
    f.b_dc = PiecewisePolynomial::linear(b0, gradient, lo, hi);
    f.b_rf_perp = PiecewisePolynomial::constant(0.0, lo, hi);
    return f;
}

FieldModel advance_drift(const FieldModel& field, double dt, RandomStream& rng) {
    if (dt < 0.0)
        throw std::invalid_argument("advance_drift: dt must be nonnegative");
    FieldModel out = field;
    if (dt == 0.0) return out;
    const DriftSpec& d = field.drift;
    switch (d.type) {
        case DriftType::None:
            break;
        case DriftType::RandomWalk:
            if (d.rw_diffusion != 0.0)
                out.gradient_offset += d.rw_diffusion * std::sqrt(dt) * rng.normal();
            break;
        case DriftType::OrnsteinUhlenbeck: {
            if (d.ou_rate == 0.0 || d.ou_sigma == 0.0) break;
            // exact OU transition over dt
            const double decay = std::exp(-d.ou_rate * dt);
            const double sd = d.ou_sigma * std::sqrt(1.0 - decay * decay);
            out.gradient_offset = field.gradient_offset * decay + sd * rng.normal();
            break;
        }
        case DriftType::Linear:
            out.gradient_offset += d.linear_rate * dt;
            break;
    }
    return out;
}

namespace {

using nlohmann::json;

const char* drift_name(DriftType t) {
    switch (t) {
        case DriftType::None: return "none";
        case DriftType::RandomWalk: return "random_walk";
        case DriftType::OrnsteinUhlenbeck: return "ou";
        case DriftType::Linear: return "linear";
    }
    return "none";
}

DriftType drift_from_name(const std::string& s) {
    if (s == "none") return DriftType::None;
    if (s == "random_walk") return DriftType::RandomWalk;
    if (s == "ou") return DriftType::OrnsteinUhlenbeck;
    if (s == "linear") return DriftType::Linear;
    throw std::invalid_argument("FieldModel: unknown drift type '" + s + "'");
}

json poly_to_json(const PiecewisePolynomial& p) {
    return json{{"knots_m", p.knots()}, {"coeffs", p.coeffs()}};
}

PiecewisePolynomial poly_from_json(const json& j) {
    return PiecewisePolynomial(j.at("knots_m").get<std::vector<double>>(),
                               j.at("coeffs").get<std::vector<std::vector<double>>>());
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok)
            throw std::invalid_argument("unknown key '" + it.key() + "' in " + where);
    }
}

} // namespace

std::string FieldModel::to_json() const {
    json j;
    j["b_dc"] = poly_to_json(b_dc);
    j["b_rf_perp"] = poly_to_json(b_rf_perp);
    json d;
    d["type"] = drift_name(drift.type);
    switch (drift.type) {
        case DriftType::RandomWalk: d["diffusion"] = drift.rw_diffusion; break;
        case DriftType::OrnsteinUhlenbeck:
            d["rate_per_s"] = drift.ou_rate;
            d["sigma"] = drift.ou_sigma;
            break;
        case DriftType::Linear: d["rate"] = drift.linear_rate; break;
        case DriftType::None: break;
    }
    j["drift"] = d;
    if (gradient_offset != 0.0) j["gradient_offset"] = gradient_offset;
    return j.dump(2);
}

FieldModel FieldModel::from_json(const std::string& text) {
    json j = json::parse(text);
    reject_unknown_keys(j, {"b_dc", "b_rf_perp", "drift", "gradient_offset"}, "field model");
    FieldModel f;
    f.b_dc = poly_from_json(j.at("b_dc"));
    f.b_rf_perp = poly_from_json(j.at("b_rf_perp"));
    if (j.contains("drift")) {
        const json& d = j.at("drift");
        reject_unknown_keys(d, {"type", "diffusion", "rate_per_s", "sigma", "rate"},
                            "field model drift");
        f.drift.type = drift_from_name(d.at("type").get<std::string>());
        switch (f.drift.type) {
            case DriftType::RandomWalk:
                f.drift.rw_diffusion = d.at("diffusion").get<double>();
                break;
            case DriftType::OrnsteinUhlenbeck:
                f.drift.ou_rate = d.at("rate_per_s").get<double>();
                f.drift.ou_sigma = d.at("sigma").get<double>();
                break;
            case DriftType::Linear:
                f.drift.linear_rate = d.at("rate").get<double>();
                break;
            case DriftType::None:
                break;
        }
    }
    if (j.contains("gradient_offset")) f.gradient_offset = j.at("gradient_offset").get<double>();
    f.validate();
    return f;
}

FieldModel FieldModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("FieldModel: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

} // namespace dmag
