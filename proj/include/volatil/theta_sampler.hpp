#pragma once

#include <array>
#include <optional>

#include "volatil/mixture.hpp"
#include "volatil/model_core.hpp"
#include "volatil/rng.hpp"

namespace volatil {

struct ThetaUpdateConfig {
    enum class Baseline { centered, noncentered };
    enum class Proposal { independence, random_walk };

    Baseline baseline = Baseline::centered;
    bool interweave = true;
    Proposal proposal = Proposal::independence;
    // Random-walk increments for (mu, phi, sigma_eta); used only when
    // proposal == random_walk.
    std::array<double, 3> rw_scales{0.1, 0.05, 0.05};

    void validate() const;
};

struct ThetaDrawResult {
    SvParameters params;
    bool accepted;
    ThetaUpdateConfig::Baseline stage;
};

// One Metropolis-Hastings update of theta holding the centered path h
// fixed; the invariant distribution is p(theta | h), the AR(1) likelihood
// of h (including the stationary h_0 term) times the prior. The default
// independence proposal fits the regression of h_t on (1, h_{t-1}):
// (mu, phi) come from the Gaussian fit given the current sigma, sigma^2
// from the inverse-gamma shape matching the residual sum of squares.
// Proposals with |phi| >= 1 or sigma <= 0 are rejected outright.
ThetaDrawResult update_theta_centered(const LatentPath& h, const SvParameters& params,
                                      const PriorSpec& prior, const ThetaUpdateConfig& cfg,
                                      RngStream& rng);

// One update of theta holding htilde = (h - mu)/sigma fixed. In this
// parameterization the linearized observations read
//   ystar_t = mu + a htilde_t + m_{r_t} + eps_t,  eps_t ~ N(0, v_{r_t}),
// where the coefficient a carries a two-sided N(0, B_sigma) prior, so
// (mu, a) is a conjugate Gaussian draw; a negative a is resolved by
// flipping the signs of both a and htilde, which leaves the centered path
// unchanged. phi is updated by MH on its conditional given htilde. When
// h_out is non-null it receives the re-expressed centered path
// mu' + sigma' htilde (with the flip applied).
ThetaDrawResult update_theta_noncentered(const LatentPath& h, const LinearizedData& lin,
                                         const IndicatorPath& r, const SvParameters& params,
                                         const PriorSpec& prior, const MixtureTable& table,
                                         const ThetaUpdateConfig& cfg, RngStream& rng,
                                         LatentPath* h_out = nullptr);

// Composite sampler state for one chain.
struct SvState {
    LatentPath h;
    IndicatorPath r;
    SvParameters params;
};

struct AsisResult {
    ThetaDrawResult first;
    std::optional<ThetaDrawResult> second;
};

// Interweaving sweep over theta: update in the baseline parameterization,
// re-express h in the other one with the new theta, update there, and map
// back. With interweave = false only the baseline stage runs.
AsisResult asis_step(SvState& state, const LinearizedData& lin, const MixtureTable& table,
                     const PriorSpec& prior, const ThetaUpdateConfig& cfg, RngStream& rng);

namespace detail {

// AR(1) log-likelihood of the path h under (mu, phi, sigma2), stationary
// initial state included, up to an additive constant.
double ar1_log_lik(const LatentPath& h, double mu, double phi, double sigma2);

// Sufficient statistics of the regression of h_t on (1, h_{t-1}), t>=1.
struct Ar1Stats {
    double n = 0.0;
    double sx = 0.0, sz = 0.0;
    double sxx = 0.0, sxz = 0.0, szz = 0.0;
};
Ar1Stats ar1_stats(const LatentPath& h);

// Gaussian fit of (gamma, phi) with gamma = mu (1 - phi): least-squares
// solution and the 2x2 normal-equation matrix A = X'X.
struct CenteredFit {
    double gamma_hat = 0.0;
    double phi_hat = 0.0;
    double a11 = 0.0, a12 = 0.0, a22 = 0.0;  // A entries
    double rss = 0.0;
};
CenteredFit centered_fit(const Ar1Stats& s);

// Accept/reject with log acceptance ratio; `valid` short-circuits to a
// rejection (used for proposals outside the support).
bool mh_accept(double log_ratio, bool valid, RngStream& rng);

// log density of the bivariate normal proposal N(b, sigma2 * A^{-1})
// evaluated at (gamma, phi).
double log_bivariate_proposal(const CenteredFit& fit, double sigma2, double gamma,
                              double phi);

// Acceptance decision of the centered (mu, phi) substep for an explicit
// proposal; exposed so support auto-rejection is directly testable.
bool centered_muphi_accept(const LatentPath& h, const SvParameters& current,
                           double gamma_prop, double phi_prop, const PriorSpec& prior,
                           const CenteredFit& fit, RngStream& rng);

}  // namespace detail

}  // namespace volatil
