#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "volatil/garch.hpp"
#include "volatil/linreg.hpp"
#include "volatil/model_core.hpp"

namespace volatil {

enum class ModelTag { homoskedastic, garch, sv };

std::string to_string(ModelTag tag);
ModelTag model_tag_from_string(const std::string& s);

// One-step-ahead predictive likelihood at time t (the index of the
// predicted observation) plus quantiles of the simulated predictive draws.
struct PredictiveRecord {
    int t = 0;
    double log_pl = 0.0;
    std::vector<std::pair<double, double>> pred_quantiles;  // (prob, value)
    ModelTag model = ModelTag::homoskedastic;
};

struct BayesFactorSeries {
    int s = 0;                      // training cutoff; path starts at u = s+1
    std::vector<int> times;
    std::vector<double> cumulative;
};

// Posterior draws of a fitted model, reduced to what the one-step-ahead
// predictive needs.
struct HomoskedasticFit {
    Eigen::MatrixXd beta;
    Eigen::VectorXd sigma_eps;
};
struct SvErrorFit {
    Eigen::MatrixXd beta;
    Eigen::MatrixXd theta;   // (mu, phi, sigma)
    Eigen::VectorXd h_term;  // h_n per draw
};
struct GarchErrorFit {
    Eigen::MatrixXd beta;
    Eigen::MatrixXd alpha;
    Eigen::VectorXd sigma2_term;
    Eigen::VectorXd ytilde_term;
};
using FittedModel = std::variant<HomoskedasticFit, SvErrorFit, GarchErrorFit>;

// Predictive mean/sd per draw m at design row x_next:
//   mean = x_next' beta_m,
//   sd   = sigma_m (homoskedastic), exp(h_{next,m}/2) with h propagated one
//          step (SV), or the one-step variance recursion (GARCH).
// The log predictive likelihood averages the per-draw normal densities of
// y_next in the log domain; predictive quantiles come from one simulated
// y per draw. Uses the first min(M, stored) draws.
PredictiveRecord predictive_step(const FittedModel& fit, const Eigen::VectorXd& x_next,
                                 double y_next, std::size_t M, RngStream& rng,
                                 const std::vector<double>& probs, int t,
                                 ModelTag tag);

// Convenience form for the AR(1)-in-levels design x_next = (1, y_obs_t).
PredictiveRecord predictive_step(ModelTag tag, const FittedModel& fit, double y_obs_next,
                                 double y_obs_t, std::size_t M, RngStream& rng,
                                 const std::vector<double>& probs = {0.01, 0.5, 0.99},
                                 int t = 0);

// Per-refit sampler settings shared by the three models.
struct FitConfig {
    std::size_t burnin = 1000;
    std::size_t draws = 10000;
    RegressionPrior reg_prior;
    PriorSpec sv_prior;
    std::array<double, 3> garch_scales{0.1, 0.1, 0.1};
    double garch_beta_scale = 1.0;

    explicit FitConfig(Eigen::Index p = 2)
        : reg_prior(RegressionPrior::vague(p)), sv_prior() {}
};

// Regression pairs for the rolling evaluation: row j of X predicts y(j).
struct RegressionPairs {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;

    Eigen::Index size() const { return y.size(); }
};

// AR(1)-in-levels pairs built from a raw series: response y_u regressed on
// (1, y_{u-1}) for u = 2..n. Records keep the raw 1-based index.
RegressionPairs ar1_pairs(const std::vector<double>& series);

struct EvalFailure {
    ModelTag model;
    int t = 0;
    std::string message;
};

struct EvalResult {
    std::map<ModelTag, std::vector<PredictiveRecord>> records;
    std::vector<EvalFailure> failures;
};

// For each pair index j = s..m-1 and each model: fit on pairs [0, j),
// then evaluate the predictive for pair j. Tasks run on up to
// `parallelism` workers; every task derives its own seed from
// seed ^ hash(model, t), so results do not depend on scheduling. A fit
// failure is recorded and evaluation continues.
EvalResult rolling_evaluation(const RegressionPairs& pairs, Eigen::Index s,
                              const std::vector<ModelTag>& models, const FitConfig& fit,
                              std::size_t M, int parallelism, std::uint64_t seed,
                              const std::vector<double>& probs = {0.01, 0.5, 0.99},
                              int record_offset = 0);

// Running sum of log PL_u(A) - log PL_u(B) over the aligned records.
BayesFactorSeries cumulative_bayes_factor(const std::vector<PredictiveRecord>& a,
                                          const std::vector<PredictiveRecord>& b);

// Sum of log PL_t over a full history t = 1..n (gaps are rejected).
double log_marginal_likelihood(const std::vector<PredictiveRecord>& records);

// Seed for the (model, t) refit task.
std::uint64_t task_seed(std::uint64_t seed, ModelTag tag, int t);

}  // namespace volatil
