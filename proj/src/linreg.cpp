#include "volatil/linreg.hpp"

#include <cmath>

#include "volatil/errors.hpp"
#include "volatil/stats.hpp"

namespace volatil {

RegressionData::RegressionData(Eigen::VectorXd y_, Eigen::MatrixXd X_)
    : y(std::move(y_)), X(std::move(X_)) {
    if (X.rows() != y.size())
        throw validation_error("RegressionData: X and y row counts differ");
    if (X.cols() < 1 || X.rows() < X.cols())
        throw validation_error("RegressionData: need n >= p >= 1");
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        if (X(i, 0) != 1.0)
            throw validation_error("RegressionData: first design column must be ones");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < X.cols())
        throw validation_error("RegressionData: design matrix is rank deficient");
}

RegressionPrior::RegressionPrior(Eigen::VectorXd b0_, Eigen::MatrixXd B0inv_, double c0_,
                                 double C0_)
    : b0(std::move(b0_)), B0inv(std::move(B0inv_)), c0(c0_), C0(C0_) {
    if (B0inv.rows() != B0inv.cols() || B0inv.rows() != b0.size())
        throw validation_error("RegressionPrior: dimension mismatch");
    if (!B0inv.isApprox(B0inv.transpose(), 1e-12))
        throw validation_error("RegressionPrior: B0inv must be symmetric");
    if (!(c0 > 0.0) || !(C0 > 0.0))
        throw validation_error("RegressionPrior: c0 and C0 must be > 0");
}

RegressionPrior RegressionPrior::vague(Eigen::Index p) {
    return RegressionPrior(Eigen::VectorXd::Zero(p),
                           Eigen::MatrixXd::Identity(p, p) * 1e-10, 0.001, 0.001);
}

HomoskedasticKernel::HomoskedasticKernel(Eigen::MatrixXd X, const RegressionPrior& prior)
    : X_(std::move(X)),
      b0_(prior.b0),
      B0inv_(prior.B0inv),
      c0_(prior.c0),
      C0_(prior.C0) {
    const auto p = X_.cols();
    if (b0_.size() != p) throw validation_error("HomoskedasticKernel: prior dimension");
    c_n_ = c0_ + static_cast<double>(X_.rows()) / 2.0 + static_cast<double>(p) / 2.0;
    const Eigen::MatrixXd precision = X_.transpose() * X_ + B0inv_;
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success)
        throw validation_error(
            "HomoskedasticKernel: X'X + B0inv is not positive definite (rank-deficient "
            "design with zero prior precision?)");
    pre_cov_ = llt.solve(Eigen::MatrixXd::Identity(p, p));
    Eigen::LLT<Eigen::MatrixXd> cov_llt(pre_cov_);
    if (cov_llt.info() != Eigen::Success)
        throw internal_error("HomoskedasticKernel: covariance factorization failed");
    pre_cov_chol_ = cov_llt.matrixL();
}

void HomoskedasticKernel::step(const Eigen::VectorXd& y, Eigen::VectorXd& beta,
                               double& sigma2, RngStream& rng) const {
    const auto p = X_.cols();
    const Eigen::VectorXd b_t = pre_cov_ * (X_.transpose() * y + B0inv_ * b0_);
    Eigen::VectorXd z(p);
    for (Eigen::Index j = 0; j < p; ++j) z(j) = rng.normal();
    beta = b_t + std::sqrt(sigma2) * (pre_cov_chol_ * z);

    const Eigen::VectorXd resid = y - X_ * beta;
    const Eigen::VectorXd bdev = beta - b0_;
    const double C_n =
        C0_ + 0.5 * (resid.squaredNorm() + bdev.dot(B0inv_ * bdev));
    sigma2 = rng.inverse_gamma(c_n_, C_n);
}

HomoskedasticDraws gibbs_homoskedastic(const RegressionData& data,
                                       const RegressionPrior& prior, std::size_t burnin,
                                       std::size_t draws, RngStream& rng,
                                       std::size_t thin) {
    if (draws < 1) throw validation_error("gibbs_homoskedastic: draws must be >= 1");
    if (thin < 1) throw validation_error("gibbs_homoskedastic: thin must be >= 1");
    const HomoskedasticKernel kernel(data.X, prior);

    const std::size_t rows = draws / thin;
    HomoskedasticDraws out{Eigen::MatrixXd(rows, data.p()), Eigen::VectorXd(rows)};

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(data.p());
    double sigma2 = 1.0;
    for (std::size_t i = 1; i <= burnin + draws; ++i) {
        kernel.step(data.y, beta, sigma2, rng);
        if (i > burnin && (i - burnin) % thin == 0) {
            const std::size_t row = (i - burnin) / thin - 1;
            if (row < rows) {
                out.beta.row(row) = beta.transpose();
                out.sigma_eps(row) = std::sqrt(sigma2);
            }
        }
    }
    return out;
}

SvRegressionDraws gibbs_sv_errors(const RegressionData& data, const RegressionPrior& prior,
                                  const PriorSpec& sv_prior, const SamplerConfig& cfg,
                                  RngStream& rng, bool store_latent) {
    cfg.validate();
    const auto n = data.n();
    const auto p = data.p();
    const std::size_t thin = cfg.thinpara;
    const std::size_t rows = cfg.draws / thin;

    SvRegressionDraws out;
    out.theta.resize(rows, 3);
    out.beta.resize(rows, p);
    out.h_term.resize(rows);
    if (store_latent) out.latent.resize(rows, n);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    std::vector<double> ytilde(static_cast<std::size_t>(n));
    for (Eigen::Index t = 0; t < n; ++t) ytilde[static_cast<std::size_t>(t)] = data.y(t);
    ReturnsSeries resid_series(ytilde);
    SvParameters theta = cfg.startpara ? *cfg.startpara : default_start_para(resid_series);
    LatentPath h = cfg.startlatent ? *cfg.startlatent : default_start_latent(resid_series);
    if (h.size() != static_cast<std::size_t>(n) + 1)
        throw validation_error("gibbs_sv_errors: startlatent must have length n+1");

    Eigen::VectorXd w(n);
    for (std::size_t i = 1; i <= cfg.burnin + cfg.draws; ++i) {
        const Eigen::VectorXd fitted = data.X * beta;
        for (Eigen::Index t = 0; t < n; ++t)
            ytilde[static_cast<std::size_t>(t)] = data.y(t) - fitted(t);
        std::tie(theta, h) =
            sv_update_step(ReturnsSeries(ytilde), theta, h, sv_prior, rng, cfg.theta);

        // Rescale rows by exp(-h_t/2) and draw beta from the resulting
        // homoskedastic (unit variance) conditional.
        for (Eigen::Index t = 0; t < n; ++t)
            w(t) = std::exp(-0.5 * h.h[static_cast<std::size_t>(t) + 1]);
        const Eigen::MatrixXd Xw = w.asDiagonal() * data.X;
        const Eigen::VectorXd yw = w.cwiseProduct(data.y);
        const Eigen::MatrixXd precision = Xw.transpose() * Xw + prior.B0inv;
        Eigen::LLT<Eigen::MatrixXd> llt(precision);
        if (llt.info() != Eigen::Success)
            throw validation_error("gibbs_sv_errors: singular weighted precision");
        const Eigen::VectorXd mean =
            llt.solve(Xw.transpose() * yw + prior.B0inv * prior.b0);
        Eigen::VectorXd z(p);
        for (Eigen::Index j = 0; j < p; ++j) z(j) = rng.normal();
        // beta = mean + L^{-T} z draws from N(mean, precision^{-1})
        beta = mean + llt.matrixU().solve(z);

        if (i > cfg.burnin && (i - cfg.burnin) % thin == 0) {
            const std::size_t row = (i - cfg.burnin) / thin - 1;
            if (row < rows) {
                out.theta(row, 0) = theta.mu;
                out.theta(row, 1) = theta.phi;
                out.theta(row, 2) = theta.sigma_eta;
                out.beta.row(row) = beta.transpose();
                out.h_term(row) = h.h[static_cast<std::size_t>(n)];
                if (store_latent)
                    for (Eigen::Index t = 0; t < n; ++t)
                        out.latent(row, t) = h.h[static_cast<std::size_t>(t) + 1];
            }
        }
    }
    return out;
}

}  // namespace volatil
