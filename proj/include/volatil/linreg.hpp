#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "volatil/model_core.hpp"
#include "volatil/rng.hpp"
#include "volatil/sampler_driver.hpp"

namespace volatil {

// Response vector and design matrix (first column ones, full column rank).
struct RegressionData {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;

    RegressionData(Eigen::VectorXd y_, Eigen::MatrixXd X_);
    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
};

// Conjugate prior beta | sigma2 ~ N(b0, sigma2 B0), sigma2 ~ InvGamma(c0, C0);
// the precision B0^{-1} is stored directly and may be zero (flat).
struct RegressionPrior {
    Eigen::VectorXd b0;
    Eigen::MatrixXd B0inv;
    double c0 = 0.001;
    double C0 = 0.001;

    RegressionPrior(Eigen::VectorXd b0_, Eigen::MatrixXd B0inv_, double c0_, double C0_);
    static RegressionPrior vague(Eigen::Index p);
};

struct HomoskedasticDraws {
    Eigen::MatrixXd beta;       // stored draws x p
    Eigen::VectorXd sigma_eps;  // stored draws
};

// One Gibbs scan of the homoskedastic model; the expensive pieces
// ((X'X + B0inv)^{-1} and its Cholesky) are prepared once.
class HomoskedasticKernel {
public:
    HomoskedasticKernel(Eigen::MatrixXd X, const RegressionPrior& prior);

    // beta | y, sigma2 then sigma2 | y, beta.
    void step(const Eigen::VectorXd& y, Eigen::VectorXd& beta, double& sigma2,
              RngStream& rng) const;

    const Eigen::MatrixXd& posterior_cov_base() const { return pre_cov_; }
    double c_n() const { return c_n_; }

private:
    Eigen::MatrixXd X_;
    Eigen::VectorXd b0_;
    Eigen::MatrixXd B0inv_;
    double c0_, C0_, c_n_;
    Eigen::MatrixXd pre_cov_;     // (X'X + B0inv)^{-1}
    Eigen::MatrixXd pre_cov_chol_;  // lower Cholesky of pre_cov_
};

HomoskedasticDraws gibbs_homoskedastic(const RegressionData& data,
                                       const RegressionPrior& prior, std::size_t burnin,
                                       std::size_t draws, RngStream& rng,
                                       std::size_t thin = 1);

struct SvRegressionDraws {
    Eigen::MatrixXd theta;   // stored draws x (mu, phi, sigma)
    Eigen::MatrixXd beta;    // stored draws x p
    Eigen::MatrixXd latent;  // stored draws x n (empty unless store_latent)
    Eigen::VectorXd h_term;  // stored draws of h_n
};

// Linear regression with SV errors: alternates one SV sweep on the
// residuals ytilde = y - X beta with a Gaussian beta draw on rows scaled
// by exp(-h/2). The beta mean includes the B0inv b0 prior term, which
// reduces to the plain weighted cross product when b0 = 0.
SvRegressionDraws gibbs_sv_errors(const RegressionData& data, const RegressionPrior& prior,
                                  const PriorSpec& sv_prior, const SamplerConfig& cfg,
                                  RngStream& rng, bool store_latent = false);

}  // namespace volatil
