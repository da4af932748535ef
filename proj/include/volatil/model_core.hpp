#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "volatil/rng.hpp"

namespace volatil {

// Parameters of the latent log-variance process: level mu, persistence
// phi in (-1,1), innovation standard deviation sigma_eta > 0.
struct SvParameters {
    double mu;
    double phi;
    double sigma_eta;

    SvParameters(double mu_, double phi_, double sigma_eta_);
};

// Mean-zero returns plus optional date labels. Construction rejects
// missing/non-finite values and records whether exact zeros occur.
class ReturnsSeries {
public:
    explicit ReturnsSeries(std::vector<double> values,
                           std::vector<std::string> labels = {});

    const std::vector<double>& values() const { return values_; }
    const std::vector<std::string>& labels() const { return labels_; }
    std::size_t size() const { return values_.size(); }
    bool had_zeros() const { return had_zeros_; }

private:
    std::vector<double> values_;
    std::vector<std::string> labels_;
    bool had_zeros_;
};

// Latent log-variance path h_0..h_n (one entry more than the data).
struct LatentPath {
    std::vector<double> h;

    LatentPath() = default;
    explicit LatentPath(std::vector<double> values) : h(std::move(values)) {}
    std::size_t size() const { return h.size(); }
    bool all_finite() const;
};

// Hyperparameters of the three independent parameter priors:
//   mu        ~ Normal(b_mu, B_mu)           (B_mu is a variance)
//   (phi+1)/2 ~ Beta(a0, b0)
//   sigma^2   ~ B_sigma * ChiSq(1)  ==  Gamma(1/2, rate 1/(2 B_sigma))
struct PriorSpec {
    double b_mu = 0.0;
    double B_mu = 10000.0;
    double a0 = 5.0;
    double b0 = 1.5;
    double B_sigma = 1.0;

    PriorSpec() = default;
    PriorSpec(double b_mu_, double B_mu_, double a0_, double b0_, double B_sigma_);
};

struct SimOutput {
    ReturnsSeries returns;
    LatentPath latent;
    SvParameters parameters;
    std::uint64_t seed;
};

// Log returns of a positive price series, optionally demeaned with the
// arithmetic mean. Labels, when given, must align with prices; the first
// one is dropped along with the first price.
ReturnsSeries logret(const std::vector<double>& prices, bool demean,
                     std::vector<std::string> labels = {});

// Simulate n observations of the SV process. Draw order is fixed as
// h_0, then (h_t, y_t) for t = 1..n, one normal each, so a seed pins the
// whole output.
SimOutput svsim(std::size_t n, const SvParameters& params, std::uint64_t seed);

// Density of the transformed-Beta prior for phi on (-1, 1); zero outside.
double prior_phi_density(double phi, double a0, double b0);

// Mean and standard deviation of that prior.
std::pair<double, double> prior_phi_moments(double a0, double b0);

// The three prior log-density components and their sum. The sigma_eta
// component is the Gamma(1/2, 1/(2 B_sigma)) density of sigma^2 with the
// Jacobian 2*sigma for the sigma_eta parameterization.
double log_prior_mu(double mu, const PriorSpec& prior);
double log_prior_phi(double phi, const PriorSpec& prior);
double log_prior_sigma(double sigma_eta, const PriorSpec& prior);
double prior_log_density_theta(const SvParameters& params, const PriorSpec& prior);

}  // namespace volatil
