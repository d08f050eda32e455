#include "dmag/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dmag {

namespace {

inline double powi(double x, std::uint64_t n) {
    double r = 1.0;
    while (n) {
        if (n & 1u) r *= x;
        x *= x;
        n >>= 1;
    }
    return r;
}

double log_choose(std::uint64_t n, std::uint64_t k) {
    return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
           std::lgamma(double(n - k) + 1.0);
}

} // namespace

Quadrature gauss_legendre_01(std::size_t order) {
    if (order < 1)
        throw std::invalid_argument("gauss_legendre_01: order must be >= 1");
    Quadrature q;
    q.nodes.resize(order);
    q.weights.resize(order);
    const std::size_t half = (order + 1) / 2;
    for (std::size_t k = 0; k < half; ++k) {
        // Newton iteration on P_order, starting from the Chebyshev guess
        double x = std::cos(std::numbers::pi * (k + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t j = 2; j <= order; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        q.nodes[k] = 0.5 * (1.0 - x);
        q.weights[k] = 0.5 * w;
        q.nodes[order - 1 - k] = 0.5 * (1.0 + x);
        q.weights[order - 1 - k] = 0.5 * w;
    }
    return q;
}

const Quadrature& contrast_quadrature(std::uint64_t total_counts) {
    const std::size_t capped = static_cast<std::size_t>(std::min<std::uint64_t>(total_counts, 64));
    const std::size_t order = std::clamp<std::size_t>(capped / 2 + 1, 2, 33);
    static std::map<std::size_t, Quadrature> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(order);
    if (it == cache.end())
        it = cache.emplace(order, gauss_legendre_01(order)).first;
    return it->second;
}

PosteriorGrid::PosteriorGrid(std::vector<double> omega_axis, std::vector<double> phi0_axis,
                             std::vector<double> weights)
    : omega_(std::move(omega_axis)), phi0_(std::move(phi0_axis)), w_(std::move(weights)) {
    if (omega_.size() < 2 || phi0_.size() < 2)
        throw std::invalid_argument("PosteriorGrid: need at least 2 cells per axis");
    if (w_.size() != omega_.size() * phi0_.size())
        throw std::invalid_argument("PosteriorGrid: weight count mismatch");
    cell_omega_ = (omega_.back() - omega_.front()) / double(omega_.size() - 1);
    cell_phi0_ = two_pi / double(phi0_.size());
    if (!(cell_omega_ > 0.0))
        throw std::invalid_argument("PosteriorGrid: omega axis must be increasing");
}

double PosteriorGrid::mass() const {
    double s = 0.0;
    for (double v : w_) s += v;
    return s * cell_area();
}

void PosteriorGrid::normalize() {
    // scale by the max first so the sum cannot underflow while any cell
    // is representable
    double mx = 0.0;
    for (double v : w_) mx = std::max(mx, v);
    if (!(mx > 0.0) || mx < 1e-300)
        throw std::runtime_error("PosteriorGrid: total mass underflow (outcome "
                                 "inconsistent with prior support)");
    double s = 0.0;
    for (double& v : w_) {
        v /= mx;
        s += v;
    }
    const double norm = 1.0 / (s * cell_area());
    for (double& v : w_) v *= norm;
}

std::vector<double> PosteriorGrid::omega_marginal() const {
    std::vector<double> m(n_omega(), 0.0);
    for (std::size_t i = 0; i < n_omega(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n_phi0(); ++j) s += at(i, j);
        m[i] = s * cell_phi0_;
    }
    return m;
}

std::vector<double> PosteriorGrid::phi0_marginal() const {
    std::vector<double> m(n_phi0(), 0.0);
    for (std::size_t i = 0; i < n_omega(); ++i)
        for (std::size_t j = 0; j < n_phi0(); ++j) m[j] += at(i, j);
    for (double& v : m) v *= cell_omega_;
    return m;
}

std::string PosteriorGrid::to_json() const {
    nlohmann::json j;
    j["omega_axis_hz"] = nlohmann::json::array();
    for (double w : omega_) j["omega_axis_hz"].push_back(w / two_pi);
    j["phi0_axis_rad"] = phi0_;
    j["weights"] = w_;
    return j.dump();
}

PosteriorGrid uniform_prior(double omega_lo, double omega_hi, std::size_t n_omega,
                            std::size_t n_phi0) {
    if (!(omega_lo < omega_hi))
        throw std::invalid_argument("uniform_prior: need omega_lo < omega_hi");
    if (n_omega < 2 || n_phi0 < 2)
        throw std::invalid_argument("uniform_prior: need at least 2 cells per axis");
    std::vector<double> omega(n_omega), phi0(n_phi0);
    for (std::size_t i = 0; i < n_omega; ++i)
        omega[i] = omega_lo + (omega_hi - omega_lo) * double(i) / double(n_omega - 1);
    for (std::size_t j = 0; j < n_phi0; ++j)
        phi0[j] = -std::numbers::pi + two_pi * double(j) / double(n_phi0);
    std::vector<double> w(n_omega * n_phi0, 1.0);
    PosteriorGrid grid(std::move(omega), std::move(phi0), std::move(w));
    grid.normalize();
    return grid;
}

PosteriorGrid uniform_omega_prior(double omega_lo, double omega_hi, std::size_t n_omega,
                                  const std::vector<double>& phi0_axis,
                                  const std::vector<double>& phi0_marginal) {
    if (phi0_axis.size() != phi0_marginal.size())
        throw std::invalid_argument("uniform_omega_prior: marginal size mismatch");
    std::vector<double> omega(n_omega);
    for (std::size_t i = 0; i < n_omega; ++i)
        omega[i] = omega_lo + (omega_hi - omega_lo) * double(i) / double(n_omega - 1);
    std::vector<double> w(n_omega * phi0_axis.size());
    for (std::size_t i = 0; i < n_omega; ++i)
        for (std::size_t j = 0; j < phi0_axis.size(); ++j)
            w[i * phi0_axis.size() + j] = std::max(0.0, phi0_marginal[j]);
    PosteriorGrid grid(std::move(omega), phi0_axis, std::move(w));
    grid.normalize();
    return grid;
}

PosteriorGrid update(const PosteriorGrid& prior, const ParityOutcome& outcome, double T,
                     double analysis_offset, double* evidence) {
    outcome.validate();
    if (T < 0.0)
        throw std::invalid_argument("update: T must be nonnegative");
    if (outcome.N == 0 && outcome.M == 0) {
        if (evidence) *evidence = 1.0;
        return prior;
    }

    const Quadrature& quad = contrast_quadrature(outcome.N + outcome.M);
    const std::size_t nw = prior.n_omega(), np = prior.n_phi0();
    const std::uint64_t n = outcome.n, Nn = outcome.N - outcome.n;
    const std::uint64_t m = outcome.m, Mm = outcome.M - outcome.m;

    // phi = omega*T + phi0 + offset; build cos/sin by angle addition so the
    // inner loop is trig-free
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

    // The binomial prefactor and 2^-(N+M) are constant across cells and
    // dropped from the per-cell factor; they reenter only in the evidence.
    const double log_pref = log_choose(outcome.N, outcome.n) + log_choose(outcome.M, outcome.m) -
                            double(outcome.N + outcome.M) * std::numbers::ln2;

    PosteriorGrid post = prior;
    double log_evidence;

    if (outcome.N + outcome.M <= 500) {
        // linear path: (1+|u|)^(N+M) stays well inside double range
        double raw_sum = 0.0;
        for (std::size_t i = 0; i < nw; ++i) {
            double* row = &post.weights()[i * np];
            const double cai = ca[i], sai = sa[i];
            for (std::size_t j = 0; j < np; ++j) {
                const double cphi = cai * cp[j] - sai * sp[j];
                const double sphi = sai * cp[j] + cai * sp[j];
                double g = 0.0;
                for (std::size_t q = 0; q < quad.nodes.size(); ++q) {
                    const double u = quad.nodes[q] * cphi;
                    const double v = quad.nodes[q] * sphi;
                    g += quad.weights[q] * powi(1.0 - u, n) * powi(1.0 + u, Nn) *
                         powi(1.0 + v, m) * powi(1.0 - v, Mm);
                }
                row[j] *= g;
                raw_sum += row[j];
            }
        }
        log_evidence = raw_sum > 0.0
                           ? log_pref + std::log(raw_sum * prior.cell_area())
                           : -std::numeric_limits<double>::infinity();
    } else {
        // log path: two passes with a global shift so huge N never
        // overflows or flushes the whole grid to zero
        std::vector<double> log_post(nw * np, -std::numeric_limits<double>::infinity());
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < nw; ++i) {
            const double cai = ca[i], sai = sa[i];
            for (std::size_t j = 0; j < np; ++j) {
                const double pw = prior.at(i, j);
                if (pw <= 0.0) continue;
                const double cphi = cai * cp[j] - sai * sp[j];
                const double sphi = sai * cp[j] + cai * sp[j];
                double shift = -std::numeric_limits<double>::infinity();
                double le[64];
                for (std::size_t q = 0; q < quad.nodes.size(); ++q) {
                    const double u = quad.nodes[q] * cphi;
                    const double v = quad.nodes[q] * sphi;
                    le[q] = double(n) * std::log1p(-u) + double(Nn) * std::log1p(u) +
                            double(m) * std::log1p(v) + double(Mm) * std::log1p(-v);
                    shift = std::max(shift, le[q]);
                }
                if (!std::isfinite(shift)) continue;
                double g = 0.0;
                for (std::size_t q = 0; q < quad.nodes.size(); ++q)
                    g += quad.weights[q] * std::exp(le[q] - shift);
                const double lp = std::log(pw) + shift + std::log(g);
                log_post[i * np + j] = lp;
                top = std::max(top, lp);
            }
        }
        if (!std::isfinite(top))
            throw std::runtime_error("PosteriorGrid: total mass underflow (outcome "
                                     "inconsistent with prior support)");
        double raw_sum = 0.0;
        for (std::size_t k = 0; k < nw * np; ++k) {
            post.weights()[k] = std::exp(log_post[k] - top);
            raw_sum += post.weights()[k];
        }
        log_evidence = log_pref + top + std::log(raw_sum * prior.cell_area());
    }

    if (evidence) *evidence = std::exp(log_evidence);
    post.normalize();
    return post;
}

FrequencyEstimate moments(const PosteriorGrid& pdf) {
    FrequencyEstimate est;

    // each axis carries a quantization variance of cell^2/12: a posterior
    // concentrated on one node is known to within that node, not exactly
    const double qvar_w = pdf.cell_omega() * pdf.cell_omega() / 12.0;
    const double qvar_p = pdf.cell_phi0() * pdf.cell_phi0() / 12.0;

    const std::vector<double> mw = pdf.omega_marginal();
    double mean = 0.0, total = 0.0;
    for (std::size_t i = 0; i < mw.size(); ++i) {
        mean += mw[i] * pdf.omega(i);
        total += mw[i];
    }
    mean /= total;
    double var = 0.0;
    for (std::size_t i = 0; i < mw.size(); ++i) {
        const double d = pdf.omega(i) - mean;
        var += mw[i] * d * d;
    }
    est.omega_mean = mean;
    est.omega_err = std::sqrt(std::max(0.0, var / total) + qvar_w);

    const std::vector<double> mp = pdf.phi0_marginal();
    double cr = 0.0, sr = 0.0, tp = 0.0;
    for (std::size_t j = 0; j < mp.size(); ++j) {
        cr += mp[j] * std::cos(pdf.phi0(j));
        sr += mp[j] * std::sin(pdf.phi0(j));
        tp += mp[j];
    }
    const double rbar = std::sqrt(cr * cr + sr * sr) / tp;
    est.phi0_mean = wrap_phase_lower(std::atan2(sr, cr));
    const double circ =
        rbar >= 1.0 ? 0.0 : std::sqrt(-2.0 * std::log(std::max(rbar, 1e-300)));
    est.phi0_err = std::min(std::sqrt(circ * circ + qvar_p), std::numbers::pi);
    return est;
}

PosteriorGrid broaden(const PosteriorGrid& pdf, double fraction) {
    if (fraction < 0.0)
        throw std::invalid_argument("broaden: fraction must be nonnegative");
    if (fraction == 0.0) return pdf;

    const double sigma = fraction * moments(pdf).omega_err;
    if (sigma <= 0.0) return pdf;

    const double h = pdf.cell_omega();
    const int radius = std::max(1, int(std::ceil(5.0 * sigma / h)));
    std::vector<double> kernel(2 * radius + 1);
    double ks = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        kernel[k + radius] = std::exp(-0.5 * (k * h) * (k * h) / (sigma * sigma));
        ks += kernel[k + radius];
    }
    for (double& v : kernel) v /= ks;

    const std::size_t nw = pdf.n_omega(), np = pdf.n_phi0();
    PosteriorGrid out = pdf;
    for (std::size_t i = 0; i < nw; ++i) {
        for (std::size_t j = 0; j < np; ++j) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const std::ptrdiff_t src = std::ptrdiff_t(i) + k;
                if (src < 0 || src >= std::ptrdiff_t(nw)) continue; // truncate at edges
                acc += kernel[k + radius] * pdf.at(std::size_t(src), j);
            }
            out.at(i, j) = acc;
        }
    }
    out.normalize();
    return out;
}

double shannon_information(const PosteriorGrid& pdf, GridAxis axis) {
    const std::vector<double> marg =
        axis == GridAxis::Omega ? pdf.omega_marginal() : pdf.phi0_marginal();
    const double h = axis == GridAxis::Omega ? pdf.cell_omega() : pdf.cell_phi0();
    double s = 0.0;
    for (double p : marg)
        if (p > 0.0) s += p * std::log(p);
    return s * h;
}

} // namespace dmag
