#include "volatil/model_core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "volatil/errors.hpp"

namespace volatil {

SvParameters::SvParameters(double mu_, double phi_, double sigma_eta_)
    : mu(mu_), phi(phi_), sigma_eta(sigma_eta_) {
    if (!std::isfinite(mu)) throw validation_error("SvParameters: mu must be finite");
    if (!(std::fabs(phi) < 1.0))
        throw validation_error("SvParameters: |phi| must be < 1");
    if (!(sigma_eta > 0.0) || !std::isfinite(sigma_eta))
        throw validation_error("SvParameters: sigma_eta must be > 0");
}

ReturnsSeries::ReturnsSeries(std::vector<double> values, std::vector<std::string> labels)
    : values_(std::move(values)), labels_(std::move(labels)), had_zeros_(false) {
    if (values_.size() < 2)
        throw validation_error("ReturnsSeries: need at least 2 observations");
    if (!labels_.empty() && labels_.size() != values_.size())
        throw validation_error("ReturnsSeries: labels must align with values");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            std::ostringstream msg;
            msg << "ReturnsSeries: missing or non-finite value at position " << i;
            throw validation_error(msg.str());
        }
        if (values_[i] == 0.0) had_zeros_ = true;
    }
}

bool LatentPath::all_finite() const {
    for (double v : h)
        if (!std::isfinite(v)) return false;
    return true;
}

PriorSpec::PriorSpec(double b_mu_, double B_mu_, double a0_, double b0_, double B_sigma_)
    : b_mu(b_mu_), B_mu(B_mu_), a0(a0_), b0(b0_), B_sigma(B_sigma_) {
    if (!std::isfinite(b_mu)) throw validation_error("PriorSpec: b_mu must be finite");
    if (!(B_mu > 0.0)) throw validation_error("PriorSpec: B_mu must be > 0");
    if (!(a0 > 0.0) || !(b0 > 0.0))
        throw validation_error("PriorSpec: a0 and b0 must be > 0");
    if (!(B_sigma > 0.0)) throw validation_error("PriorSpec: B_sigma must be > 0");
}

ReturnsSeries logret(const std::vector<double>& prices, bool demean,
                     std::vector<std::string> labels) {
    if (prices.size() < 2)
        throw validation_error("logret: need at least 2 prices");
    if (!labels.empty() && labels.size() != prices.size())
        throw validation_error("logret: labels must align with prices");
    std::vector<double> r(prices.size() - 1);
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!(prices[i] > 0.0) || !std::isfinite(prices[i])) {
            std::ostringstream msg;
            msg << "logret: price at position " << i << " is not strictly positive";
            throw validation_error(msg.str());
        }
    }
    for (std::size_t i = 0; i + 1 < prices.size(); ++i)
        r[i] = std::log(prices[i + 1]) - std::log(prices[i]);
    if (demean) {
        double m = 0.0;
        for (double v : r) m += v;
        m /= static_cast<double>(r.size());
        for (double& v : r) v -= m;
    }
    if (!labels.empty()) labels.erase(labels.begin());
    return ReturnsSeries(std::move(r), std::move(labels));
}

SimOutput svsim(std::size_t n, const SvParameters& params, std::uint64_t seed) {
    // A returns series carries at least 2 observations, so n = 1 cannot be
    // represented in the output type.
    if (n < 2) throw validation_error("svsim: n must be >= 2");
    RngStream rng(seed);
    const double mu = params.mu;
    const double phi = params.phi;
    const double sigma = params.sigma_eta;

    std::vector<double> h(n + 1);
    std::vector<double> y(n);
    h[0] = mu + sigma / std::sqrt(1.0 - phi * phi) * rng.normal();
    for (std::size_t t = 1; t <= n; ++t) {
        h[t] = mu + phi * (h[t - 1] - mu) + sigma * rng.normal();
        y[t - 1] = std::exp(h[t] / 2.0) * rng.normal();
    }
    return SimOutput{ReturnsSeries(std::move(y)), LatentPath(std::move(h)), params, seed};
}

double prior_phi_density(double phi, double a0, double b0) {
    if (!(a0 > 0.0) || !(b0 > 0.0))
        throw validation_error("prior_phi_density: hyperparameters must be > 0");
    if (!(phi > -1.0 && phi < 1.0)) return 0.0;
    const double log_beta = std::lgamma(a0) + std::lgamma(b0) - std::lgamma(a0 + b0);
    const double lp = -log_beta - std::log(2.0) + (a0 - 1.0) * std::log((1.0 + phi) / 2.0) +
                      (b0 - 1.0) * std::log((1.0 - phi) / 2.0);
    return std::exp(lp);
}

std::pair<double, double> prior_phi_moments(double a0, double b0) {
    if (!(a0 > 0.0) || !(b0 > 0.0))
        throw validation_error("prior_phi_moments: hyperparameters must be > 0");
    const double mean = 2.0 * a0 / (a0 + b0) - 1.0;
    const double var =
        4.0 * a0 * b0 / ((a0 + b0) * (a0 + b0) * (a0 + b0 + 1.0));
    return {mean, std::sqrt(var)};
}

double log_prior_mu(double mu, const PriorSpec& prior) {
    const double d = mu - prior.b_mu;
    return -0.5 * std::log(2.0 * M_PI * prior.B_mu) - 0.5 * d * d / prior.B_mu;
}

double log_prior_phi(double phi, const PriorSpec& prior) {
    if (!(phi > -1.0 && phi < 1.0))
        return -std::numeric_limits<double>::infinity();
    const double log_beta =
        std::lgamma(prior.a0) + std::lgamma(prior.b0) - std::lgamma(prior.a0 + prior.b0);
    return -log_beta - std::log(2.0) + (prior.a0 - 1.0) * std::log((1.0 + phi) / 2.0) +
           (prior.b0 - 1.0) * std::log((1.0 - phi) / 2.0);
}

double log_prior_sigma(double sigma_eta, const PriorSpec& prior) {
    if (!(sigma_eta > 0.0)) return -std::numeric_limits<double>::infinity();
    // Gamma(1/2, rate beta) density of sigma^2, times d(sigma^2)/d(sigma) = 2 sigma.
    const double beta = 1.0 / (2.0 * prior.B_sigma);
    const double s2 = sigma_eta * sigma_eta;
    const double log_gamma_pdf =
        0.5 * std::log(beta) - std::lgamma(0.5) - 0.5 * std::log(s2) - beta * s2;
    return log_gamma_pdf + std::log(2.0 * sigma_eta);
}

double prior_log_density_theta(const SvParameters& params, const PriorSpec& prior) {
    return log_prior_mu(params.mu, prior) + log_prior_phi(params.phi, prior) +
           log_prior_sigma(params.sigma_eta, prior);
}

}  // namespace volatil
