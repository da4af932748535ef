#include "volatil/sampler_driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "volatil/errors.hpp"
#include "volatil/stats.hpp"

namespace volatil {

void SamplerConfig::validate() const {
    if (draws < 1) throw validation_error("SamplerConfig: draws must be >= 1");
    if (thinpara < 1 || thinlatent < 1 || thintime < 1)
        throw validation_error("SamplerConfig: thinning values must be >= 1");
    if (quantiles.empty())
        throw validation_error("SamplerConfig: quantile list must not be empty");
    for (double q : quantiles)
        if (!(q > 0.0 && q < 1.0))
            throw validation_error("SamplerConfig: quantiles must lie in (0,1)");
    theta.validate();
}

SvParameters default_start_para(const ReturnsSeries& y) {
    const double v = stats::sample_variance(y.values());
    const double mu0 = (v > 0.0 && std::isfinite(std::log(v))) ? std::log(v) : -10.0;
    return SvParameters(mu0, 0.9, 0.1);
}

LatentPath default_start_latent(const ReturnsSeries& y) {
    const double v = stats::sample_variance(y.values());
    const double level = (v > 0.0 && std::isfinite(std::log(v))) ? std::log(v) : -10.0;
    return LatentPath(std::vector<double>(y.size() + 1, level));
}

std::vector<int> kept_time_indices(std::size_t n, std::size_t thintime) {
    std::vector<int> idx;
    for (std::size_t t = 1; t <= n; t += thintime) idx.push_back(static_cast<int>(t));
    return idx;
}

std::pair<SvParameters, LatentPath> sv_update_step(const ReturnsSeries& ytilde,
                                                   const SvParameters& startpara,
                                                   const LatentPath& startlatent,
                                                   const PriorSpec& prior, RngStream& rng,
                                                   const ThetaUpdateConfig& theta_cfg,
                                                   const MixtureTable& table) {
    const std::size_t n = ytilde.size();
    if (startlatent.size() != n + 1) {
        std::ostringstream msg;
        msg << "sv_update_step: startlatent has length " << startlatent.size()
            << ", expected " << n + 1 << " (h_0..h_n)";
        throw validation_error(msg.str());
    }
    if (!startlatent.all_finite())
        throw validation_error("sv_update_step: startlatent contains non-finite values");

    const LinearizedData lin = linearize(ytilde);
    SvState state{startlatent, {}, startpara};
    state.r = sample_indicators(lin, state.h, table, rng);
    const TridiagonalSystem sys = build_system(lin, state.r, state.params, table);
    state.h = sample_latent(sys, rng);
    asis_step(state, lin, table, prior, theta_cfg, rng);
    return {state.params, state.h};
}

namespace {

QuantitySummary summarize_column(const std::string& name, std::span<const double> draws,
                                 const std::vector<double>& probs) {
    QuantitySummary s;
    s.name = name;
    s.mean = stats::mean(draws);
    s.sd = draws.size() > 1 ? stats::sample_sd(draws) : 0.0;
    s.ess = stats::ess_batch_means(draws);
    const auto qs = stats::quantiles(draws, probs);
    for (std::size_t i = 0; i < probs.size(); ++i) s.quantiles.emplace_back(probs[i], qs[i]);
    return s;
}

std::vector<double> transformed(std::span<const double> x, double (*f)(double)) {
    std::vector<double> out(x.begin(), x.end());
    for (double& v : out) v = f(v);
    return out;
}

}  // namespace

SvDraws svsample(const ReturnsSeries& y, const PriorSpec& prior, const SamplerConfig& cfg,
                 const MixtureTable& table) {
    cfg.validate();
    const std::size_t n = y.size();
    {
        // Fail fast on degenerate input before any sampling.
        const LinearizedData lin = linearize(y);
        if (lin.has_offset() && !cfg.quiet)
            std::fprintf(stderr,
                         "warning: series contains zero returns; adding offset %.6g to "
                         "squared returns\n",
                         lin.offset);
    }
    if (cfg.startlatent && cfg.startlatent->size() != n + 1)
        throw validation_error("svsample: startlatent must have length n+1");

    RngStream rng(cfg.seed);
    SvParameters theta = cfg.startpara ? *cfg.startpara : default_start_para(y);
    LatentPath h = cfg.startlatent ? *cfg.startlatent : default_start_latent(y);

    const std::size_t total = cfg.burnin + cfg.draws;
    if (!cfg.quiet) {
        const bool centered =
            cfg.theta.baseline == ThetaUpdateConfig::Baseline::centered;
        const char* kernel = cfg.theta.interweave ? (centered ? "GIS_C" : "GIS_NC")
                                                  : (centered ? "C" : "NC");
        std::fprintf(stderr, "Running %s MCMC sampler with %zu iterations. Series length is %zu.\n",
                     kernel, total, n);
    }

    const std::vector<int> kept = kept_time_indices(n, cfg.thintime);
    const std::size_t rows_para = cfg.draws / cfg.thinpara;
    const std::size_t rows_latent = cfg.draws / cfg.thinlatent;

    SvDraws out{Eigen::MatrixXd(rows_para, 3),
                Eigen::MatrixXd(rows_latent, kept.size()),
                Eigen::VectorXd(rows_latent),
                kept,
                y,
                0.0,
                prior,
                Thinning{cfg.thinpara, cfg.thinlatent, cfg.thintime},
                SummaryTable{}};

    const auto t0 = std::chrono::steady_clock::now();
    std::size_t next_progress = 1;
    for (std::size_t i = 1; i <= total; ++i) {
        std::tie(theta, h) = sv_update_step(y, theta, h, prior, rng, cfg.theta, table);
        if (i > cfg.burnin) {
            const std::size_t j = i - cfg.burnin;
            if (j % cfg.thinpara == 0) {
                const std::size_t row = j / cfg.thinpara - 1;
                if (row < rows_para) {
                    out.para(row, 0) = theta.mu;
                    out.para(row, 1) = theta.phi;
                    out.para(row, 2) = theta.sigma_eta;
                }
            }
            if (j % cfg.thinlatent == 0) {
                const std::size_t row = j / cfg.thinlatent - 1;
                if (row < rows_latent) {
                    out.latent0(row) = h.h[0];
                    for (std::size_t c = 0; c < kept.size(); ++c)
                        out.latent(row, c) = h.h[static_cast<std::size_t>(kept[c])];
                }
            }
        }
        while (!cfg.quiet && next_progress <= 10 && i * 10 >= next_progress * total) {
            std::fprintf(stderr, "  %zu%%", next_progress * 10);
            std::fflush(stderr);
            ++next_progress;
        }
    }
    if (!cfg.quiet) std::fprintf(stderr, "\n");
    out.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    updatesummary(out, cfg.quantiles);
    if (!cfg.quiet)
        std::fprintf(stderr, "Timing (elapsed): %.2f seconds (%.0f iterations per second).\n",
                     out.runtime_seconds,
                     static_cast<double>(total) / std::max(out.runtime_seconds, 1e-9));
    return out;
}

SvDraws& updatesummary(SvDraws& d, const std::vector<double>& quantiles) {
    if (quantiles.empty()) throw validation_error("updatesummary: empty quantile list");
    for (double q : quantiles)
        if (!(q > 0.0 && q < 1.0))
            throw validation_error("updatesummary: quantiles must lie in (0,1)");

    SummaryTable table;
    const auto col = [&](int c) {
        return std::span<const double>(d.para.col(c).data(),
                                       static_cast<std::size_t>(d.para.rows()));
    };
    if (d.para.rows() > 0) {
        table.parameters.push_back(summarize_column("mu", col(0), quantiles));
        table.parameters.push_back(summarize_column("phi", col(1), quantiles));
        table.parameters.push_back(summarize_column("sigma", col(2), quantiles));
        const auto exp_half = transformed(col(0), +[](double v) { return std::exp(v / 2.0); });
        table.parameters.push_back(summarize_column("exp(mu/2)", exp_half, quantiles));
        const auto sigma2 = transformed(col(2), +[](double v) { return v * v; });
        table.parameters.push_back(summarize_column("sigma^2", sigma2, quantiles));
    }
    if (d.latent0.size() > 0) {
        const auto vol = [](double h) { return 100.0 * std::exp(h / 2.0); };
        {
            std::vector<double> v0(d.latent0.data(), d.latent0.data() + d.latent0.size());
            for (double& x : v0) x = vol(x);
            table.volatility.push_back(summarize_column("vol_0", v0, quantiles));
            table.volatility_times.push_back(0);
        }
        for (std::size_t c = 0; c < static_cast<std::size_t>(d.latent.cols()); ++c) {
            std::vector<double> v(d.latent.col(c).data(),
                                  d.latent.col(c).data() + d.latent.rows());
            for (double& x : v) x = vol(x);
            std::ostringstream name;
            name << "vol_" << d.latent_times[c];
            table.volatility.push_back(summarize_column(name.str(), v, quantiles));
            table.volatility_times.push_back(d.latent_times[c]);
        }
    }
    d.summary = std::move(table);
    return d;
}

std::vector<double> residuals(const SvDraws& d, ResidualType type) {
    const std::size_t n = d.y.size();
    if (d.thinning.time != 1 || d.latent_times.size() != n)
        throw validation_error(
            "residuals: latent draws for every time point are required (run with "
            "thintime = 1)");
    const std::size_t m = static_cast<std::size_t>(d.latent.rows());
    if (m == 0) throw validation_error("residuals: no stored latent draws");

    std::vector<double> out(n);
    std::vector<double> work(m);
    for (std::size_t t = 0; t < n; ++t) {
        const double yt = d.y.values()[t];
        for (std::size_t i = 0; i < m; ++i)
            work[i] = yt * std::exp(-0.5 * d.latent(i, t));
        out[t] = (type == ResidualType::mean) ? stats::mean(work)
                                              : stats::quantile(work, 0.5);
    }
    return out;
}

Eigen::MatrixXd predict_volatility(const SvDraws& d, std::size_t horizon, RngStream& rng) {
    if (horizon < 1) throw validation_error("predict_volatility: horizon must be >= 1");
    if (d.latent_times.empty() ||
        d.latent_times.back() != static_cast<int>(d.y.size()))
        throw validation_error(
            "predict_volatility: the final state h_n is not stored (run with thintime = 1)");
    const auto m = static_cast<std::size_t>(
        std::min<Eigen::Index>(d.para.rows(), d.latent.rows()));
    if (m == 0) throw validation_error("predict_volatility: no stored draws");

    Eigen::MatrixXd out(m, horizon);
    const Eigen::Index last = d.latent.cols() - 1;
    for (std::size_t i = 0; i < m; ++i) {
        const double mu = d.para(i, 0);
        const double phi = d.para(i, 1);
        const double sigma = d.para(i, 2);
        double h = d.latent(i, last);
        for (std::size_t k = 0; k < horizon; ++k) {
            h = mu + phi * (h - mu) + sigma * rng.normal();
            out(i, k) = h;
        }
    }
    return out;
}

}  // namespace volatil
