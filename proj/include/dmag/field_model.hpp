#pragma once
// Ground-truth field along the trap axis: dc field map, rf field
// magnitude map, and a slow drift of the dc gradient. Maps are piecewise
// polynomials over a segmented axis (default 32 electrode segments at
// 200 um pitch). Serializable to JSON for the CLI.

#include <cstdint>
#include <string>
#include <vector>

#include "dmag/rng.hpp"

namespace dmag {

// Polynomial pieces evaluated in local coordinates (x - knot[i]).
class PiecewisePolynomial {
  public:
    PiecewisePolynomial() = default;
    PiecewisePolynomial(std::vector<double> knots, std::vector<std::vector<double>> coeffs);

    static PiecewisePolynomial constant(double value, double lo, double hi);
    // value(x) = offset + slope * x over [lo, hi]
    static PiecewisePolynomial linear(double offset, double slope, double lo, double hi);

    double operator()(double x) const;
    double lo() const { return knots_.front(); }
    double hi() const { return knots_.back(); }
    bool contains(double x) const { return x >= lo() && x <= hi(); }

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<std::vector<double>>& coeffs() const { return coeffs_; }

  private:
    std::vector<double> knots_;               // size n+1, strictly increasing
    std::vector<std::vector<double>> coeffs_; // n pieces, local Horner coefficients
};

enum class DriftType { None, RandomWalk, OrnsteinUhlenbeck, Linear };

// Drift of the dc gradient term. The state variable is a gradient offset
// gamma(t) in T/m added to the static map around the axis midpoint.
struct DriftSpec {
    DriftType type = DriftType::None;
    double rw_diffusion = 0.0;    // random walk: Var[gamma] grows as rw_diffusion^2 * t (T/m/sqrt(s))
    double ou_rate = 0.0;         // OU relaxation rate (1/s)
    double ou_sigma = 0.0;        // OU stationary std (T/m)
    double linear_rate = 0.0;     // deterministic ramp (T/m/s)
};

struct FieldModel {
    PiecewisePolynomial b_dc;      // T
    PiecewisePolynomial b_rf_perp; // T, >= 0
    DriftSpec drift;
    double gradient_offset = 0.0;  // gamma(t), evolves with advance_drift

    // dc field including the drifted gradient term
    double dc(double x) const;
    double rf_perp(double x) const;
    double axis_lo() const { return b_dc.lo(); }
    double axis_hi() const { return b_dc.hi(); }

    void validate() const;

    // Uniform-gradient field over the default axis (0 .. 6.4 mm), zero rf.
    static FieldModel linear_gradient(double b0, double gradient,
                                      double lo = 0.0, double hi = 6.4e-3);

    std::string to_json() const;
    static FieldModel from_json(const std::string& text);
    static FieldModel load(const std::string& path);
};

// Returns the field after dt seconds of drift; dt = 0 or a null process
// leaves it unchanged. The static maps never change, only gamma.
FieldModel advance_drift(const FieldModel& field, double dt, RandomStream& rng);

} // namespace dmag
