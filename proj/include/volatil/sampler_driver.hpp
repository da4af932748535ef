#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "volatil/latent_sampler.hpp"
#include "volatil/mixture.hpp"
#include "volatil/model_core.hpp"
#include "volatil/rng.hpp"
#include "volatil/theta_sampler.hpp"

namespace volatil {

struct Thinning {
    std::size_t para = 1;
    std::size_t latent = 1;
    std::size_t time = 1;
};

struct SamplerConfig {
    std::size_t burnin = 1000;
    std::size_t draws = 10000;
    std::size_t thinpara = 1;
    std::size_t thinlatent = 1;
    std::size_t thintime = 1;
    bool quiet = false;
    std::optional<SvParameters> startpara;
    std::optional<LatentPath> startlatent;
    std::uint64_t seed = 1;
    ThetaUpdateConfig theta;
    std::vector<double> quantiles{0.05, 0.5, 0.95};

    void validate() const;
};

// Summary of one scalar quantity over its stored draws.
struct QuantitySummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double ess = 0.0;
    std::vector<std::pair<double, double>> quantiles;  // (prob, value)
};

struct SummaryTable {
    // mu, phi, sigma, exp(mu/2), sigma^2
    std::vector<QuantitySummary> parameters;
    // 100 exp(h_t/2) for t = 0 and the stored time points.
    std::vector<QuantitySummary> volatility;
    std::vector<int> volatility_times;
};

// Posterior sample store: parameter draws, latent draws (time-thinned),
// initial-state draws, the input data, runtime, priors, thinning values,
// and the summary table.
struct SvDraws {
    Eigen::MatrixXd para;          // stored iterations x (mu, phi, sigma)
    Eigen::MatrixXd latent;        // stored iterations x kept time points
    Eigen::VectorXd latent0;       // stored iterations of h_0
    std::vector<int> latent_times; // 1-based t of each latent column
    ReturnsSeries y;
    double runtime_seconds = 0.0;
    PriorSpec priors;
    Thinning thinning;
    SummaryTable summary;
};

SvParameters default_start_para(const ReturnsSeries& y);
LatentPath default_start_latent(const ReturnsSeries& y);

// Time indices kept for a given series length and thintime: 1, 1+thintime,
// 1+2*thintime, ... (h_0 is stored separately, always).
std::vector<int> kept_time_indices(std::size_t n, std::size_t thintime);

// One full MCMC sweep: indicators, latent path (jointly), then the
// interweaved theta update. Deterministic given the stream state; no
// input re-validation beyond the type invariants.
std::pair<SvParameters, LatentPath> sv_update_step(
    const ReturnsSeries& ytilde, const SvParameters& startpara,
    const LatentPath& startlatent, const PriorSpec& prior, RngStream& rng,
    const ThetaUpdateConfig& theta_cfg = {},
    const MixtureTable& table = MixtureTable::log_chisq1());

// Run burnin + draws sweeps, store per the thinning rules, and summarize.
SvDraws svsample(const ReturnsSeries& y, const PriorSpec& prior, const SamplerConfig& cfg,
                 const MixtureTable& table = MixtureTable::log_chisq1());

// Recompute the summary table (transformed quantities are summarized
// draw-wise). ESS uses the batch-means estimator.
SvDraws& updatesummary(SvDraws& d, const std::vector<double>& quantiles);

enum class ResidualType { mean, median };

// Per-time summary over draws of y_t / exp(h_t/2); requires thintime = 1.
std::vector<double> residuals(const SvDraws& d, ResidualType type);

// Iterate the state recursion forward `horizon` steps from h_n for each
// stored draw; returns draws of h (callers apply 100 exp(h/2) for the
// percent-volatility scale).
Eigen::MatrixXd predict_volatility(const SvDraws& d, std::size_t horizon, RngStream& rng);

}  // namespace volatil
