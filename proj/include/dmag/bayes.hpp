#pragma once
// Grid-based joint posterior over (Delta omega, phi0).
//
// The grid stores probability *density* values; normalization means
// sum(w) * cell_omega * cell_phi0 = 1. The phi0 axis is periodic over
// [-pi, pi). Operations are value-returning: a PosteriorGrid is never
// mutated in place, so grids can move freely between threads.
//
// update() multiplies each cell by the contrast-marginalized likelihood
//     g(phi) = integral_0^1 L(n, m; phi, C) dC,   phi = w*T + phi0 + offset
// and renormalizes. The integrand is a polynomial of degree N+M in C, so
// the Gauss-Legendre order scales with min(N+M, 64) (<= 33 nodes) and the
// integral is exact up to that cap.

#include <cstdint>
#include <string>
#include <vector>

#include "dmag/physics.hpp"

namespace dmag {

struct FrequencyEstimate {
    double omega_mean = 0.0; // rad/s
    double omega_err = 0.0;  // rad/s, posterior standard deviation
    double phi0_mean = 0.0;  // rad, in [-pi, pi)
    double phi0_err = 0.0;   // rad, circular std capped at pi
};

class PosteriorGrid {
  public:
    PosteriorGrid() = default;
    PosteriorGrid(std::vector<double> omega_axis, std::vector<double> phi0_axis,
                  std::vector<double> weights);

    std::size_t n_omega() const { return omega_.size(); }
    std::size_t n_phi0() const { return phi0_.size(); }
    double omega(std::size_t i) const { return omega_[i]; }
    double phi0(std::size_t j) const { return phi0_[j]; }
    const std::vector<double>& omega_axis() const { return omega_; }
    const std::vector<double>& phi0_axis() const { return phi0_; }

    double cell_omega() const { return cell_omega_; }
    double cell_phi0() const { return cell_phi0_; }
    double cell_area() const { return cell_omega_ * cell_phi0_; }

    double at(std::size_t i, std::size_t j) const { return w_[i * phi0_.size() + j]; }
    double& at(std::size_t i, std::size_t j) { return w_[i * phi0_.size() + j]; }
    const std::vector<double>& weights() const { return w_; }
    std::vector<double>& weights() { return w_; }

    double mass() const;
    void normalize(); // throws on total-mass underflow

    std::vector<double> omega_marginal() const; // density over omega
    std::vector<double> phi0_marginal() const;  // density over phi0

    std::string to_json() const;

  private:
    std::vector<double> omega_;
    std::vector<double> phi0_;
    std::vector<double> w_;
    double cell_omega_ = 0.0;
    double cell_phi0_ = 0.0;
};

// Uniformly distributed prior over [omega_lo, omega_hi] x [-pi, pi).
PosteriorGrid uniform_prior(double omega_lo, double omega_hi, std::size_t n_omega = 2048,
                            std::size_t n_phi0 = 128);

// Prior with a given phi0 marginal and a uniform omega axis; used for the
// per-measurement sensitivity accounting.
PosteriorGrid uniform_omega_prior(double omega_lo, double omega_hi, std::size_t n_omega,
                                  const std::vector<double>& phi0_axis,
                                  const std::vector<double>& phi0_marginal);

// Bayes update with the contrast-marginalized likelihood. If `evidence`
// is non-null it receives the marginal probability p(n, m | T).
// N = M = 0 returns the prior unchanged (with evidence 1).
PosteriorGrid update(const PosteriorGrid& prior, const ParityOutcome& outcome, double T,
                     double analysis_offset, double* evidence = nullptr);

// Means and standard deviations of the marginals; phi0 moments are
// circular (mean = arg sum p e^{i phi}, err = min(sqrt(-2 ln R), pi)).
// Errors include the cell^2/12 quantization variance, so a posterior
// concentrated on a single node still reports ~0.29 cells, never 0.
FrequencyEstimate moments(const PosteriorGrid& pdf);

// Memory loss: convolve along omega with a Gaussian kernel of
// sigma = fraction * current omega standard deviation. fraction = 0 is
// the identity.
PosteriorGrid broaden(const PosteriorGrid& pdf, double fraction);

enum class GridAxis { Omega, Phi0 };

// integral of p log p over the marginalized axis (nats; zero cells
// contribute zero). This is the negative differential entropy.
double shannon_information(const PosteriorGrid& pdf, GridAxis axis);

// Gauss-Legendre nodes/weights on [0, 1]; order chosen for the contrast
// integral of an (N+M)-degree polynomial. Exposed for the design module
// and for test oracles.
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const Quadrature& contrast_quadrature(std::uint64_t total_counts);
Quadrature gauss_legendre_01(std::size_t order);

} // namespace dmag
