#include "volatil/garch.hpp"

#include <cmath>
#include <cstdio>

#include "volatil/errors.hpp"
#include "volatil/stats.hpp"

namespace volatil {

GarchParams::GarchParams(double a0, double a1, double a2)
    : alpha0(a0), alpha1(a1), alpha2(a2) {
    if (!(alpha0 > 0.0)) throw validation_error("GarchParams: alpha0 must be > 0");
    if (alpha1 < 0.0 || alpha2 < 0.0)
        throw validation_error("GarchParams: alpha1 and alpha2 must be >= 0");
    if (!std::isfinite(alpha0) || !std::isfinite(alpha1) || !std::isfinite(alpha2))
        throw validation_error("GarchParams: non-finite parameter");
}

std::vector<double> garch_recursion(std::span<const double> ytilde,
                                    const GarchParams& params, double sigma2_0,
                                    double ytilde0) {
    if (!(sigma2_0 > 0.0)) throw validation_error("garch_recursion: sigma2_0 must be > 0");
    std::vector<double> s2(ytilde.size());
    double prev_s2 = sigma2_0;
    double prev_y = ytilde0;
    for (std::size_t t = 0; t < ytilde.size(); ++t) {
        s2[t] = params.alpha0 + params.alpha1 * prev_y * prev_y + params.alpha2 * prev_s2;
        prev_s2 = s2[t];
        prev_y = ytilde[t];
    }
    return s2;
}

double garch_log_lik(std::span<const double> ytilde, const GarchParams& params,
                     double sigma2_0, double ytilde0) {
    const auto s2 = garch_recursion(ytilde, params, sigma2_0, ytilde0);
    double ll = 0.0;
    for (std::size_t t = 0; t < ytilde.size(); ++t)
        ll += stats::log_normal_pdf(ytilde[t], 0.0, s2[t]);
    return ll;
}

GarchChain::GarchChain(const RegressionData& data, const RegressionPrior& prior,
                       std::array<double, 3> alpha_scales, double beta_scale)
    : data_(data),
      prior_(prior),
      alpha_scales_(alpha_scales),
      beta_scale_(beta_scale),
      beta_(Eigen::VectorXd::Zero(data.p())),
      alpha_(1e-6, 0.05, 0.9),
      sigma2_0_(1.0),
      ytilde_(static_cast<std::size_t>(data.n())),
      loglik_(0.0) {
    for (double s : alpha_scales_)
        if (!(s > 0.0)) throw validation_error("GarchChain: alpha scales must be > 0");
    if (!(beta_scale_ > 0.0)) throw validation_error("GarchChain: beta scale must be > 0");

    // Starting values: OLS for beta, method of moments for alpha, and the
    // empirical residual variance for sigma2_0 (held fixed afterwards).
    beta_ = data_.X.colPivHouseholderQr().solve(data_.y);
    refresh_residuals();
    double ss = 0.0;
    for (double v : ytilde_) ss += v * v;
    sigma2_0_ = std::max(ss / std::max<double>(1.0, static_cast<double>(ytilde_.size()) - 1.0), 1e-12);
    const double a1 = 0.05, a2 = 0.9;
    alpha_ = GarchParams(std::max(sigma2_0_ * (1.0 - a1 - a2), 1e-12), a1, a2);

    // WLS proposal covariance for beta under the starting variance path.
    const auto s2 = garch_recursion(ytilde_, alpha_, sigma2_0_, 0.0);
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(data_.p(), data_.p());
    for (Eigen::Index t = 0; t < data_.n(); ++t)
        info += data_.X.row(t).transpose() * data_.X.row(t) /
                s2[static_cast<std::size_t>(t)];
    info += prior_.B0inv;
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success)
        throw validation_error("GarchChain: singular information matrix for beta proposal");
    const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(data_.p(), data_.p()));
    beta_prop_chol_ = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();

    loglik_ = recompute_log_lik();
}

void GarchChain::refresh_residuals() {
    const Eigen::VectorXd fitted = data_.X * beta_;
    for (Eigen::Index t = 0; t < data_.n(); ++t)
        ytilde_[static_cast<std::size_t>(t)] = data_.y(t) - fitted(t);
}

double GarchChain::recompute_log_lik() const {
    return garch_log_lik(ytilde_, alpha_, sigma2_0_, 0.0);
}

double GarchChain::sigma2_term() const {
    return garch_recursion(ytilde_, alpha_, sigma2_0_, 0.0).back();
}

double GarchChain::log_prior_beta(const Eigen::VectorXd& b) const {
    const Eigen::VectorXd d = b - prior_.b0;
    return -0.5 * d.dot(prior_.B0inv * d);
}

void GarchChain::step_alpha(RngStream& rng) {
    ++alpha_prop_;
    const double l0 = std::log(alpha_.alpha0) + alpha_scales_[0] * rng.normal();
    const double l1 = std::log(std::max(alpha_.alpha1, 1e-300)) +
                      alpha_scales_[1] * rng.normal();
    const double l2 = std::log(std::max(alpha_.alpha2, 1e-300)) +
                      alpha_scales_[2] * rng.normal();
    const GarchParams prop(std::exp(l0), std::exp(l1), std::exp(l2));
    const double ll_prop = garch_log_lik(ytilde_, prop, sigma2_0_, 0.0);
    // Flat prior on the positive axis; the log-scale walk needs the
    // Jacobian prod(alpha_i).
    const double lr = ll_prop - loglik_ +
                      (l0 - std::log(alpha_.alpha0)) +
                      (l1 - std::log(std::max(alpha_.alpha1, 1e-300))) +
                      (l2 - std::log(std::max(alpha_.alpha2, 1e-300)));
    const double u = rng.uniform();
    if (std::isfinite(lr) && std::log(u) < lr) {
        alpha_ = prop;
        loglik_ = ll_prop;
        ++alpha_acc_;
    }
}

void GarchChain::step_beta(RngStream& rng) {
    ++beta_prop_;
    Eigen::VectorXd z(data_.p());
    for (Eigen::Index j = 0; j < data_.p(); ++j) z(j) = rng.normal();
    const Eigen::VectorXd prop = beta_ + beta_scale_ * (beta_prop_chol_ * z);

    const Eigen::VectorXd fitted = data_.X * prop;
    std::vector<double> resid(static_cast<std::size_t>(data_.n()));
    for (Eigen::Index t = 0; t < data_.n(); ++t)
        resid[static_cast<std::size_t>(t)] = data_.y(t) - fitted(t);
    const double ll_prop = garch_log_lik(resid, alpha_, sigma2_0_, 0.0);
    const double lr = ll_prop + log_prior_beta(prop) - loglik_ - log_prior_beta(beta_);
    const double u = rng.uniform();
    if (std::isfinite(lr) && std::log(u) < lr) {
        beta_ = prop;
        ytilde_ = std::move(resid);
        loglik_ = ll_prop;
        ++beta_acc_;
    }
}

GarchDraws garch_rwmh(const RegressionData& data, const RegressionPrior& prior,
                      std::size_t burnin, std::size_t draws, RngStream& rng,
                      std::size_t thin, std::array<double, 3> alpha_scales,
                      double beta_scale, bool quiet) {
    if (draws < 1) throw validation_error("garch_rwmh: draws must be >= 1");
    if (thin < 1) throw validation_error("garch_rwmh: thin must be >= 1");

    GarchChain chain(data, prior, alpha_scales, beta_scale);
    const std::size_t rows = draws / thin;
    GarchDraws out;
    out.beta.resize(rows, data.p());
    out.alpha.resize(rows, 3);
    out.sigma2_term.resize(rows);
    out.ytilde_term.resize(rows);

    for (std::size_t i = 1; i <= burnin + draws; ++i) {
        chain.step_alpha(rng);
        chain.step_beta(rng);
        if (i > burnin && (i - burnin) % thin == 0) {
            const std::size_t row = (i - burnin) / thin - 1;
            if (row < rows) {
                out.beta.row(row) = chain.beta().transpose();
                out.alpha(row, 0) = chain.alpha().alpha0;
                out.alpha(row, 1) = chain.alpha().alpha1;
                out.alpha(row, 2) = chain.alpha().alpha2;
                out.sigma2_term(row) = chain.sigma2_term();
                out.ytilde_term(row) = chain.ytilde_term();
            }
        }
    }
    const auto rate = [](std::size_t acc, std::size_t prop) {
        return prop == 0 ? 0.0 : static_cast<double>(acc) / static_cast<double>(prop);
    };
    out.accept_alpha = rate(chain.alpha_accepts(), chain.alpha_proposals());
    out.accept_beta = rate(chain.beta_accepts(), chain.beta_proposals());
    if (!quiet && (out.accept_alpha < 0.005 || out.accept_beta < 0.005))
        std::fprintf(stderr,
                     "warning: GARCH RW-MH acceptance nearly zero (alpha %.4f, beta %.4f; "
                     "scales %.3g/%.3g/%.3g, beta scale %.3g)\n",
                     out.accept_alpha, out.accept_beta, alpha_scales[0], alpha_scales[1],
                     alpha_scales[2], beta_scale);
    return out;
}

}  // namespace volatil
