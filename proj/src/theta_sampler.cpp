#include "volatil/theta_sampler.hpp"

#include <cmath>

#include "volatil/errors.hpp"

namespace volatil {

namespace {
constexpr double kVarFloor = 1e-12;
}

void ThetaUpdateConfig::validate() const {
    for (double s : rw_scales)
        if (!(s > 0.0)) throw validation_error("ThetaUpdateConfig: rw_scales must be > 0");
}

namespace detail {

double ar1_log_lik(const LatentPath& h, double mu, double phi, double sigma2) {
    const std::size_t n = h.size() - 1;
    const double one_minus_phi2 = 1.0 - phi * phi;
    double sse = one_minus_phi2 * (h.h[0] - mu) * (h.h[0] - mu);
    for (std::size_t t = 1; t <= n; ++t) {
        const double resid = h.h[t] - mu - phi * (h.h[t - 1] - mu);
        sse += resid * resid;
    }
    return 0.5 * std::log(one_minus_phi2) -
           0.5 * static_cast<double>(n + 1) * std::log(sigma2) - 0.5 * sse / sigma2;
}

Ar1Stats ar1_stats(const LatentPath& h) {
    Ar1Stats s;
    const std::size_t n = h.size() - 1;
    s.n = static_cast<double>(n);
    for (std::size_t t = 1; t <= n; ++t) {
        const double x = h.h[t - 1];
        const double z = h.h[t];
        s.sx += x;
        s.sz += z;
        s.sxx += x * x;
        s.sxz += x * z;
        s.szz += z * z;
    }
    return s;
}

CenteredFit centered_fit(const Ar1Stats& s) {
    CenteredFit fit;
    fit.a11 = s.n;
    fit.a12 = s.sx;
    fit.a22 = s.sxx;
    double det = fit.a11 * fit.a22 - fit.a12 * fit.a12;
    if (!(det > kVarFloor)) {
        // Degenerate path (constant h); regularize so the fit stays usable.
        fit.a22 += kVarFloor + kVarFloor * std::fabs(fit.a22);
        det = fit.a11 * fit.a22 - fit.a12 * fit.a12;
    }
    fit.gamma_hat = (fit.a22 * s.sz - fit.a12 * s.sxz) / det;
    fit.phi_hat = (fit.a11 * s.sxz - fit.a12 * s.sz) / det;
    fit.rss = s.szz - fit.gamma_hat * s.sz - fit.phi_hat * s.sxz;
    if (!(fit.rss > kVarFloor)) fit.rss = kVarFloor;
    return fit;
}

bool mh_accept(double log_ratio, bool valid, RngStream& rng) {
    if (!valid) {
        // Burn a uniform so the accept/reject stream stays aligned.
        (void)rng.uniform();
        return false;
    }
    if (log_ratio >= 0.0) {
        (void)rng.uniform();
        return true;
    }
    return std::log(rng.uniform()) < log_ratio;
}

double log_bivariate_proposal(const CenteredFit& fit, double sigma2, double gamma,
                              double phi) {
    const double dg = gamma - fit.gamma_hat;
    const double dp = phi - fit.phi_hat;
    // quadratic form (xi - b)' A (xi - b) / sigma2
    const double quad =
        (fit.a11 * dg * dg + 2.0 * fit.a12 * dg * dp + fit.a22 * dp * dp) / sigma2;
    const double det_a = fit.a11 * fit.a22 - fit.a12 * fit.a12;
    // det of covariance sigma2^2 / det(A)
    return -std::log(2.0 * M_PI) - 0.5 * (2.0 * std::log(sigma2) - std::log(det_a)) -
           0.5 * quad;
}

namespace {

// Log target of the centered (gamma, phi) substep expressed in (gamma,
// phi) coordinates: AR(1) likelihood at fixed sigma2, priors on mu and
// phi, and the Jacobian 1/|1-phi| of mu = gamma/(1-phi).
double centered_muphi_log_target(const LatentPath& h, double gamma, double phi,
                                 double sigma2, const PriorSpec& prior) {
    const double mu = gamma / (1.0 - phi);
    return ar1_log_lik(h, mu, phi, sigma2) + log_prior_mu(mu, prior) +
           log_prior_phi(phi, prior) - std::log(std::fabs(1.0 - phi));
}

}  // namespace

bool centered_muphi_accept(const LatentPath& h, const SvParameters& current,
                           double gamma_prop, double phi_prop, const PriorSpec& prior,
                           const CenteredFit& fit, RngStream& rng) {
    if (!(std::fabs(phi_prop) < 1.0)) return mh_accept(0.0, false, rng);
    const double sigma2 = current.sigma_eta * current.sigma_eta;
    const double gamma_cur = current.mu * (1.0 - current.phi);
    const double lr =
        centered_muphi_log_target(h, gamma_prop, phi_prop, sigma2, prior) -
        centered_muphi_log_target(h, gamma_cur, current.phi, sigma2, prior) +
        log_bivariate_proposal(fit, sigma2, gamma_cur, current.phi) -
        log_bivariate_proposal(fit, sigma2, gamma_prop, phi_prop);
    return mh_accept(lr, true, rng);
}

}  // namespace detail

namespace {

using detail::CenteredFit;

double log_inverse_gamma_pdf(double x, double shape, double scale) {
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) -
           scale / x;
}

// Gamma(1/2, rate 1/(2 B_sigma)) log density of sigma2 (the prior in the
// sigma^2 parameterization; both sides of the ratio use it, so the
// Jacobian to sigma_eta cancels).
double log_prior_sigma2(double sigma2, const PriorSpec& prior) {
    const double beta = 1.0 / (2.0 * prior.B_sigma);
    return 0.5 * std::log(beta) - std::lgamma(0.5) - 0.5 * std::log(sigma2) -
           beta * sigma2;
}

double sse_full(const LatentPath& h, double mu, double phi) {
    const std::size_t n = h.size() - 1;
    double sse = (1.0 - phi * phi) * (h.h[0] - mu) * (h.h[0] - mu);
    for (std::size_t t = 1; t <= n; ++t) {
        const double resid = h.h[t] - mu - phi * (h.h[t - 1] - mu);
        sse += resid * resid;
    }
    return sse;
}

// Centered sigma substep: independence proposal from the inverse gamma
// whose shape/scale match the likelihood factor, so the log ratio reduces
// to the prior ratio (computed in full below regardless).
bool centered_sigma_step(const LatentPath& h, double mu, double phi, double& sigma_eta,
                         const PriorSpec& prior, RngStream& rng) {
    const std::size_t n = h.size() - 1;
    const double sse = std::max(sse_full(h, mu, phi), kVarFloor);
    const double shape = std::max(0.5 * (static_cast<double>(n) - 1.0), 0.5);
    const double scale = 0.5 * sse;
    const double prop = rng.inverse_gamma(shape, scale);
    const double cur = sigma_eta * sigma_eta;

    const auto log_lik = [&](double s2) {
        return -0.5 * static_cast<double>(n + 1) * std::log(s2) - 0.5 * sse / s2;
    };
    const double lr = log_lik(prop) + log_prior_sigma2(prop, prior) -
                      log_lik(cur) - log_prior_sigma2(cur, prior) +
                      log_inverse_gamma_pdf(cur, shape, scale) -
                      log_inverse_gamma_pdf(prop, shape, scale);
    if (detail::mh_accept(lr, prop > 0.0 && std::isfinite(prop), rng)) {
        sigma_eta = std::sqrt(prop);
        return true;
    }
    return false;
}

ThetaDrawResult centered_random_walk(const LatentPath& h, const SvParameters& params,
                                     const PriorSpec& prior, const ThetaUpdateConfig& cfg,
                                     RngStream& rng) {
    const double mu_p = params.mu + cfg.rw_scales[0] * rng.normal();
    const double phi_p = params.phi + cfg.rw_scales[1] * rng.normal();
    const double sig_p = params.sigma_eta + cfg.rw_scales[2] * rng.normal();
    const bool valid = std::fabs(phi_p) < 1.0 && sig_p > 0.0;
    double lr = 0.0;
    if (valid) {
        lr = detail::ar1_log_lik(h, mu_p, phi_p, sig_p * sig_p) +
             log_prior_mu(mu_p, prior) + log_prior_phi(phi_p, prior) +
             log_prior_sigma(sig_p, prior) -
             detail::ar1_log_lik(h, params.mu, params.phi,
                                 params.sigma_eta * params.sigma_eta) -
             log_prior_mu(params.mu, prior) - log_prior_phi(params.phi, prior) -
             log_prior_sigma(params.sigma_eta, prior);
    }
    if (detail::mh_accept(lr, valid, rng))
        return {SvParameters(mu_p, phi_p, sig_p), true,
                ThetaUpdateConfig::Baseline::centered};
    return {params, false, ThetaUpdateConfig::Baseline::centered};
}

}  // namespace

ThetaDrawResult update_theta_centered(const LatentPath& h, const SvParameters& params,
                                      const PriorSpec& prior, const ThetaUpdateConfig& cfg,
                                      RngStream& rng) {
    if (h.size() < 3) throw validation_error("update_theta_centered: path too short");
    if (!h.all_finite())
        throw validation_error("update_theta_centered: non-finite latent path");
    cfg.validate();

    if (cfg.proposal == ThetaUpdateConfig::Proposal::random_walk)
        return centered_random_walk(h, params, prior, cfg, rng);

    const auto stats = detail::ar1_stats(h);
    const auto fit = detail::centered_fit(stats);

    // (gamma, phi) | sigma2 from N(fit, sigma2 A^{-1}) via the 2x2
    // Cholesky of A^{-1}.
    const double sigma2 = params.sigma_eta * params.sigma_eta;
    const double det_a = fit.a11 * fit.a22 - fit.a12 * fit.a12;
    const double c11 = fit.a22 / det_a, c12 = -fit.a12 / det_a, c22 = fit.a11 / det_a;
    const double l11 = std::sqrt(sigma2 * c11);
    const double l21 = sigma2 * c12 / l11;
    const double l22 = std::sqrt(std::max(sigma2 * c22 - l21 * l21, kVarFloor));
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double gamma_p = fit.gamma_hat + l11 * z1;
    const double phi_p = fit.phi_hat + l21 * z1 + l22 * z2;

    SvParameters next = params;
    bool acc1 = detail::centered_muphi_accept(h, params, gamma_p, phi_p, prior, fit, rng);
    if (acc1) {
        next = SvParameters(gamma_p / (1.0 - phi_p), phi_p, params.sigma_eta);
    }
    double sigma = next.sigma_eta;
    const bool acc2 = centered_sigma_step(h, next.mu, next.phi, sigma, prior, rng);
    next = SvParameters(next.mu, next.phi, sigma);
    return {next, acc1 && acc2, ThetaUpdateConfig::Baseline::centered};
}

namespace {

struct NoncenteredObs {
    // d_t = ystar_t - m_{r_t} regressed on (1, htilde_t) with variances v_{r_t}.
    double w11 = 0.0, w1h = 0.0, whh = 0.0;  // weighted X'X
    double w1d = 0.0, whd = 0.0;             // weighted X'd
};

NoncenteredObs noncentered_obs_stats(const LinearizedData& lin, const IndicatorPath& r,
                                     const std::vector<double>& htilde,
                                     const MixtureTable& table) {
    NoncenteredObs o;
    const std::size_t n = lin.size();
    for (std::size_t t = 1; t <= n; ++t) {
        const auto& comp = table[static_cast<std::size_t>(r.r[t - 1])];
        const double iv = 1.0 / comp.variance;
        const double d = lin.ystar[t - 1] - comp.mean;
        const double ht = htilde[t];
        o.w11 += iv;
        o.w1h += ht * iv;
        o.whh += ht * ht * iv;
        o.w1d += d * iv;
        o.whd += d * ht * iv;
    }
    return o;
}

double noncentered_obs_log_lik(const LinearizedData& lin, const IndicatorPath& r,
                               const std::vector<double>& htilde, const MixtureTable& table,
                               double mu, double a) {
    double ll = 0.0;
    const std::size_t n = lin.size();
    for (std::size_t t = 1; t <= n; ++t) {
        const auto& comp = table[static_cast<std::size_t>(r.r[t - 1])];
        const double resid = lin.ystar[t - 1] - comp.mean - mu - a * htilde[t];
        ll += -0.5 * resid * resid / comp.variance;
    }
    return ll;
}

// phi target given htilde: stationary initial term, unit-variance AR(1)
// transitions, and the phi prior.
double noncentered_phi_log_target(double phi, double h0, double sxx, double sxz,
                                  const PriorSpec& prior) {
    return 0.5 * std::log(1.0 - phi * phi) - 0.5 * (1.0 - phi * phi) * h0 * h0 -
           0.5 * (phi * phi * sxx - 2.0 * phi * sxz) + log_prior_phi(phi, prior);
}

}  // namespace

ThetaDrawResult update_theta_noncentered(const LatentPath& h, const LinearizedData& lin,
                                         const IndicatorPath& r, const SvParameters& params,
                                         const PriorSpec& prior, const MixtureTable& table,
                                         const ThetaUpdateConfig& cfg, RngStream& rng,
                                         LatentPath* h_out) {
    const std::size_t n = lin.size();
    if (h.size() != n + 1)
        throw validation_error("update_theta_noncentered: path/data length mismatch");
    if (r.size() != n)
        throw validation_error("update_theta_noncentered: indicator length mismatch");
    cfg.validate();

    std::vector<double> htilde(n + 1);
    for (std::size_t t = 0; t <= n; ++t)
        htilde[t] = (h.h[t] - params.mu) / params.sigma_eta;

    double mu_new = params.mu;
    double a_new = params.sigma_eta;
    bool acc_musig;

    if (cfg.proposal == ThetaUpdateConfig::Proposal::independence) {
        // Conjugate draw: both priors are normal in (mu, a), so this is an
        // exact Gibbs update (no rejection).
        const auto o = noncentered_obs_stats(lin, r, htilde, table);
        const double p11 = o.w11 + 1.0 / prior.B_mu;
        const double p12 = o.w1h;
        const double p22 = std::max(o.whh + 1.0 / prior.B_sigma, kVarFloor);
        const double l1 = o.w1d + prior.b_mu / prior.B_mu;
        const double l2 = o.whd;
        double det = p11 * p22 - p12 * p12;
        if (!(det > kVarFloor)) det = kVarFloor;
        const double mean_mu = (p22 * l1 - p12 * l2) / det;
        const double mean_a = (p11 * l2 - p12 * l1) / det;
        // Draw from N(mean, P^{-1}) via the Cholesky of P: x = mean + L^{-T} z.
        const double lp11 = std::sqrt(p11);
        const double lp21 = p12 / lp11;
        const double lp22 = std::sqrt(std::max(p22 - lp21 * lp21, kVarFloor));
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        const double xa = z2 / lp22;
        const double xmu = (z1 - lp21 * xa) / lp11;
        mu_new = mean_mu + xmu;
        a_new = mean_a + xa;
        acc_musig = true;
    } else {
        const double mu_p = params.mu + cfg.rw_scales[0] * rng.normal();
        const double a_p = params.sigma_eta + cfg.rw_scales[2] * rng.normal();
        const double lr =
            noncentered_obs_log_lik(lin, r, htilde, table, mu_p, a_p) +
            log_prior_mu(mu_p, prior) - 0.5 * a_p * a_p / prior.B_sigma -
            noncentered_obs_log_lik(lin, r, htilde, table, params.mu, params.sigma_eta) -
            log_prior_mu(params.mu, prior) +
            0.5 * params.sigma_eta * params.sigma_eta / prior.B_sigma;
        acc_musig = detail::mh_accept(lr, std::isfinite(lr), rng);
        if (acc_musig) {
            mu_new = mu_p;
            a_new = a_p;
        }
    }

    // Joint sign flip: the model is invariant under (a, htilde) -> (-a, -htilde).
    if (a_new < 0.0) {
        a_new = -a_new;
        for (double& v : htilde) v = -v;
    }
    if (!(a_new > 0.0)) a_new = std::sqrt(kVarFloor);

    double sxx = 0.0, sxz = 0.0;
    for (std::size_t t = 1; t <= n; ++t) {
        sxx += htilde[t - 1] * htilde[t - 1];
        sxz += htilde[t - 1] * htilde[t];
    }
    sxx = std::max(sxx, kVarFloor);

    double phi_new = params.phi;
    bool acc_phi = false;
    if (cfg.proposal == ThetaUpdateConfig::Proposal::independence) {
        const double phi_hat = sxz / sxx;
        const double sd = 1.0 / std::sqrt(sxx);
        const double phi_p = phi_hat + sd * rng.normal();
        const bool valid = std::fabs(phi_p) < 1.0;
        double lr = 0.0;
        if (valid) {
            const auto logq = [&](double v) {
                const double dv = v - phi_hat;
                return -0.5 * dv * dv * sxx;
            };
            lr = noncentered_phi_log_target(phi_p, htilde[0], sxx, sxz, prior) -
                 noncentered_phi_log_target(params.phi, htilde[0], sxx, sxz, prior) +
                 logq(params.phi) - logq(phi_p);
        }
        acc_phi = detail::mh_accept(lr, valid, rng);
        if (acc_phi) phi_new = phi_p;
    } else {
        const double phi_p = params.phi + cfg.rw_scales[1] * rng.normal();
        const bool valid = std::fabs(phi_p) < 1.0;
        double lr = 0.0;
        if (valid) {
            lr = noncentered_phi_log_target(phi_p, htilde[0], sxx, sxz, prior) -
                 noncentered_phi_log_target(params.phi, htilde[0], sxx, sxz, prior);
        }
        acc_phi = detail::mh_accept(lr, valid, rng);
        if (acc_phi) phi_new = phi_p;
    }

    const SvParameters next(mu_new, phi_new, a_new);
    if (h_out) {
        std::vector<double> mapped(n + 1);
        for (std::size_t t = 0; t <= n; ++t) mapped[t] = next.mu + next.sigma_eta * htilde[t];
        *h_out = LatentPath(std::move(mapped));
    }
    return {next, acc_musig && acc_phi, ThetaUpdateConfig::Baseline::noncentered};
}

AsisResult asis_step(SvState& state, const LinearizedData& lin, const MixtureTable& table,
                     const PriorSpec& prior, const ThetaUpdateConfig& cfg, RngStream& rng) {
    if (cfg.baseline == ThetaUpdateConfig::Baseline::centered) {
        auto first = update_theta_centered(state.h, state.params, prior, cfg, rng);
        state.params = first.params;
        if (!cfg.interweave) return {first, std::nullopt};
        auto second = update_theta_noncentered(state.h, lin, state.r, state.params, prior,
                                               table, cfg, rng, &state.h);
        state.params = second.params;
        return {first, second};
    }
    auto first = update_theta_noncentered(state.h, lin, state.r, state.params, prior, table,
                                          cfg, rng, &state.h);
    state.params = first.params;
    if (!cfg.interweave) return {first, std::nullopt};
    auto second = update_theta_centered(state.h, state.params, prior, cfg, rng);
    state.params = second.params;
    return {first, second};
}

}  // namespace volatil
