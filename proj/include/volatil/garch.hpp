#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

#include "volatil/linreg.hpp"
#include "volatil/rng.hpp"

namespace volatil {

// GARCH(1,1) coefficients: sigma2_t = alpha0 + alpha1 ytilde_{t-1}^2
// + alpha2 sigma2_{t-1}. alpha0 must be positive, the others nonnegative;
// stationarity (alpha1 + alpha2 < 1) is recorded but not enforced.
struct GarchParams {
    double alpha0;
    double alpha1;
    double alpha2;

    GarchParams(double a0, double a1, double a2);
    bool stationary() const { return alpha1 + alpha2 < 1.0; }
};

// Variance recursion for t = 1..n given the initial variance and ytilde_0.
std::vector<double> garch_recursion(std::span<const double> ytilde,
                                    const GarchParams& params, double sigma2_0,
                                    double ytilde0);

// Sum of N(ytilde_t; 0, sigma2_t) log densities under the recursion.
double garch_log_lik(std::span<const double> ytilde, const GarchParams& params,
                     double sigma2_0, double ytilde0);

struct GarchDraws {
    Eigen::MatrixXd beta;         // stored draws x p
    Eigen::MatrixXd alpha;        // stored draws x 3
    Eigen::VectorXd sigma2_term;  // terminal variance per stored draw
    Eigen::VectorXd ytilde_term;  // terminal residual per stored draw
    double accept_alpha = 0.0;
    double accept_beta = 0.0;
};

// Random-walk MH chain for the regression model with GARCH(1,1) errors:
// alpha moves on the log scale (flat prior on the positive axis,
// Jacobian-corrected), beta moves with a precomputed weighted-least-squares
// proposal covariance. Exposed as a class so acceptance bookkeeping and
// the cached likelihood are testable.
class GarchChain {
public:
    GarchChain(const RegressionData& data, const RegressionPrior& prior,
               std::array<double, 3> alpha_scales, double beta_scale);

    void step_alpha(RngStream& rng);
    void step_beta(RngStream& rng);

    const Eigen::VectorXd& beta() const { return beta_; }
    const GarchParams& alpha() const { return alpha_; }
    double cached_log_lik() const { return loglik_; }
    double recompute_log_lik() const;
    double sigma2_term() const;
    double ytilde_term() const { return ytilde_.back(); }
    double sigma2_0() const { return sigma2_0_; }
    std::size_t alpha_proposals() const { return alpha_prop_; }
    std::size_t alpha_accepts() const { return alpha_acc_; }
    std::size_t beta_proposals() const { return beta_prop_; }
    std::size_t beta_accepts() const { return beta_acc_; }

private:
    void refresh_residuals();
    double log_prior_beta(const Eigen::VectorXd& b) const;

    const RegressionData& data_;
    RegressionPrior prior_;
    std::array<double, 3> alpha_scales_;
    double beta_scale_;
    Eigen::VectorXd beta_;
    GarchParams alpha_;
    double sigma2_0_;
    std::vector<double> ytilde_;
    double loglik_;
    Eigen::MatrixXd beta_prop_chol_;
    std::size_t alpha_prop_ = 0, alpha_acc_ = 0, beta_prop_ = 0, beta_acc_ = 0;
};

GarchDraws garch_rwmh(const RegressionData& data, const RegressionPrior& prior,
                      std::size_t burnin, std::size_t draws, RngStream& rng,
                      std::size_t thin = 1,
                      std::array<double, 3> alpha_scales = {0.1, 0.1, 0.1},
                      double beta_scale = 1.0, bool quiet = false);

}  // namespace volatil
