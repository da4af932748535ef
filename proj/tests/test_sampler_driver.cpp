#include <doctest.h>

#include <cmath>
#include <vector>

#include "volatil/errors.hpp"
#include "volatil/sampler_driver.hpp"
#include "volatil/stats.hpp"

using namespace volatil;

namespace {

SamplerConfig quick_cfg(std::size_t burnin, std::size_t draws, std::uint64_t seed) {
    SamplerConfig cfg;
    cfg.burnin = burnin;
    cfg.draws = draws;
    cfg.quiet = true;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("stored draw counts follow the thinning rules") {
    const auto sim = svsim(25, SvParameters(-9.0, 0.9, 0.3), 3);
    SamplerConfig cfg = quick_cfg(20, 100, 7);
    cfg.thinpara = 10;
    cfg.thinlatent = 25;
    cfg.thintime = 10;
    const auto d = svsample(sim.returns, PriorSpec(), cfg);
    CHECK(d.para.rows() == 10);
    CHECK(d.latent.rows() == 4);
    CHECK(d.latent0.size() == 4);
    CHECK(d.latent_times == std::vector<int>{1, 11, 21});
    CHECK(d.thinning.para == 10);
    CHECK(d.thinning.latent == 25);
    CHECK(d.thinning.time == 10);
}

TEST_CASE("svsample equals chained single-step updates at equal seeds") {
    const auto sim = svsim(120, SvParameters(-9.0, 0.95, 0.25), 5);
    SamplerConfig cfg = quick_cfg(30, 60, 11);
    cfg.thinpara = 3;
    cfg.thinlatent = 5;
    cfg.thintime = 4;
    const auto d = svsample(sim.returns, PriorSpec(), cfg);

    RngStream rng(11);
    SvParameters theta = default_start_para(sim.returns);
    LatentPath h = default_start_latent(sim.returns);
    std::size_t row_p = 0, row_l = 0;
    for (std::size_t i = 1; i <= cfg.burnin + cfg.draws; ++i) {
        std::tie(theta, h) = sv_update_step(sim.returns, theta, h, PriorSpec(), rng);
        if (i <= cfg.burnin) continue;
        const std::size_t j = i - cfg.burnin;
        if (j % cfg.thinpara == 0) {
            CHECK(d.para(static_cast<Eigen::Index>(row_p), 0) == theta.mu);
            CHECK(d.para(static_cast<Eigen::Index>(row_p), 1) == theta.phi);
            CHECK(d.para(static_cast<Eigen::Index>(row_p), 2) == theta.sigma_eta);
            ++row_p;
        }
        if (j % cfg.thinlatent == 0) {
            CHECK(d.latent0(static_cast<Eigen::Index>(row_l)) == h.h[0]);
            for (std::size_t c = 0; c < d.latent_times.size(); ++c)
                CHECK(d.latent(static_cast<Eigen::Index>(row_l),
                               static_cast<Eigen::Index>(c)) ==
                      h.h[static_cast<std::size_t>(d.latent_times[c])]);
            ++row_l;
        }
    }
    CHECK(row_p == static_cast<std::size_t>(d.para.rows()));
    CHECK(row_l == static_cast<std::size_t>(d.latent.rows()));
}

TEST_CASE("sv_update_step is deterministic and handles the smallest input") {
    const ReturnsSeries tiny({0.01, -0.02});
    const SvParameters start(-9.0, 0.5, 0.2);
    const LatentPath h0(std::vector<double>(3, -9.0));
    RngStream a(4), b(4);
    const auto ra = sv_update_step(tiny, start, h0, PriorSpec(), a);
    const auto rb = sv_update_step(tiny, start, h0, PriorSpec(), b);
    CHECK(ra.first.mu == rb.first.mu);
    CHECK(ra.first.phi == rb.first.phi);
    CHECK(ra.first.sigma_eta == rb.first.sigma_eta);
    CHECK(ra.second.h == rb.second.h);
    CHECK(ra.second.all_finite());
}

TEST_CASE("sv_update_step validates the latent length") {
    const ReturnsSeries y({0.01, -0.02, 0.03});
    RngStream rng(1);
    CHECK_THROWS_AS(sv_update_step(y, SvParameters(-9, 0.5, 0.2),
                                   LatentPath(std::vector<double>(3, -9.0)), PriorSpec(),
                                   rng),
                    validation_error);
}

TEST_CASE("eight-part draw container is fully populated") {
    const auto sim = svsim(40, SvParameters(-9.0, 0.9, 0.3), 6);
    const auto d = svsample(sim.returns, PriorSpec(), quick_cfg(10, 50, 2));
    CHECK(d.para.rows() == 50);
    CHECK(d.latent.rows() == 50);
    CHECK(d.latent0.size() == 50);
    CHECK(d.y.size() == 40);
    CHECK(d.runtime_seconds > 0.0);
    CHECK(d.priors.a0 == 5.0);
    CHECK(d.thinning.para == 1);
    CHECK(d.summary.parameters.size() == 5);  // mu, phi, sigma, exp(mu/2), sigma^2
    CHECK(d.summary.volatility.size() == 41);  // h_0 plus 40 time points
}

TEST_CASE("updatesummary quantiles and transforms") {
    const auto sim = svsim(30, SvParameters(-9.0, 0.9, 0.3), 8);
    auto d = svsample(sim.returns, PriorSpec(), quick_cfg(10, 200, 3));

    CHECK_THROWS_AS(updatesummary(d, {}), validation_error);
    CHECK_THROWS_AS(updatesummary(d, {1.5}), validation_error);

    updatesummary(d, {0.01, 0.1, 0.5, 0.9, 0.99});
    const auto& mu = d.summary.parameters[0];
    CHECK(mu.quantiles.size() == 5);
    // quantiles are monotone in the probability
    for (std::size_t i = 1; i < mu.quantiles.size(); ++i)
        CHECK(mu.quantiles[i].second >= mu.quantiles[i - 1].second);

    // exp(mu/2) is summarized draw-wise, not as a transform of the summary
    const auto& expmu = d.summary.parameters[3];
    std::vector<double> manual(static_cast<std::size_t>(d.para.rows()));
    for (std::size_t i = 0; i < manual.size(); ++i)
        manual[i] = std::exp(0.5 * d.para(static_cast<Eigen::Index>(i), 0));
    CHECK(expmu.mean == doctest::Approx(stats::mean(manual)).epsilon(1e-12));
    CHECK(expmu.mean != doctest::Approx(std::exp(0.5 * mu.mean)).epsilon(1e-12));
    const auto q50 = stats::quantile(manual, 0.5);
    CHECK(expmu.quantiles[2].second == doctest::Approx(q50).epsilon(1e-12));

    // ESS lands in (0, M]
    for (const auto& q : d.summary.parameters) {
        CHECK(q.ess > 0.0);
        CHECK(q.ess <= static_cast<double>(d.para.rows()));
    }
}

TEST_CASE("constant fake draws summarize to zero sd") {
    const auto sim = svsim(20, SvParameters(-9.0, 0.9, 0.3), 12);
    auto d = svsample(sim.returns, PriorSpec(), quick_cfg(5, 10, 4));
    d.para.col(0).setConstant(-9.0);
    d.para.col(1).setConstant(0.5);
    d.para.col(2).setConstant(0.2);
    updatesummary(d, {0.05, 0.5, 0.95});
    const auto& mu = d.summary.parameters[0];
    CHECK(mu.sd == 0.0);
    for (const auto& [p, v] : mu.quantiles) CHECK(v == -9.0);
}

TEST_CASE("residuals require full latent storage and average correctly") {
    const auto sim = svsim(25, SvParameters(-9.0, 0.9, 0.3), 9);
    {
        SamplerConfig cfg = quick_cfg(5, 30, 5);
        cfg.thintime = 5;
        const auto d = svsample(sim.returns, PriorSpec(), cfg);
        CHECK_THROWS_AS(residuals(d, ResidualType::mean), validation_error);
    }
    SamplerConfig cfg = quick_cfg(5, 30, 5);
    auto d = svsample(sim.returns, PriorSpec(), cfg);

    // single stored draw: mean and median coincide; zero return -> zero residual
    auto single = d;
    single.latent = d.latent.topRows(1);
    single.latent0 = d.latent0.head(1);
    const auto rm = residuals(single, ResidualType::mean);
    const auto rmed = residuals(single, ResidualType::median);
    for (std::size_t t = 0; t < rm.size(); ++t)
        CHECK(rm[t] == doctest::Approx(rmed[t]).epsilon(1e-12));

    const auto r = residuals(d, ResidualType::mean);
    CHECK(r.size() == 25);
    // manual check at t = 0
    std::vector<double> work(static_cast<std::size_t>(d.latent.rows()));
    for (std::size_t i = 0; i < work.size(); ++i)
        work[i] = sim.returns.values()[0] *
                  std::exp(-0.5 * d.latent(static_cast<Eigen::Index>(i), 0));
    CHECK(r[0] == doctest::Approx(stats::mean(work)).epsilon(1e-12));
}

TEST_CASE("a zero return has a zero residual under both summaries") {
    std::vector<double> y = svsim(20, SvParameters(-9.0, 0.9, 0.3), 33).returns.values();
    y[7] = 0.0;
    const ReturnsSeries series(y);  // triggers the offset path
    const auto d = svsample(series, PriorSpec(), quick_cfg(5, 20, 3));
    CHECK(residuals(d, ResidualType::mean)[7] == 0.0);
    CHECK(residuals(d, ResidualType::median)[7] == 0.0);
}

TEST_CASE("standardized residual variance is near one on well-specified data") {
    const auto sim = svsim(1500, SvParameters(-9.0, 0.95, 0.25), 77);
    SamplerConfig cfg = quick_cfg(200, 800, 13);
    const auto d = svsample(sim.returns, PriorSpec(), cfg);
    const auto r = residuals(d, ResidualType::mean);
    CHECK(stats::sample_variance(r) > 0.8);
    CHECK(stats::sample_variance(r) < 1.2);
}

TEST_CASE("volatility forecast follows the state recursion") {
    const auto sim = svsim(30, SvParameters(-9.0, 0.9, 0.3), 14);
    auto d = svsample(sim.returns, PriorSpec(), quick_cfg(5, 40, 6));

    SUBCASE("near-deterministic when sigma is tiny") {
        d.para.col(0).setConstant(-9.0);
        d.para.col(1).setConstant(0.9);
        d.para.col(2).setConstant(1e-10);
        RngStream rng(2);
        const auto f = predict_volatility(d, 5, rng);
        for (Eigen::Index i = 0; i < f.rows(); ++i) {
            const double hn = d.latent(i, d.latent.cols() - 1);
            for (int k = 0; k < 5; ++k) {
                const double expected =
                    -9.0 + std::pow(0.9, k + 1) * (hn - -9.0);
                CHECK(f(i, k) == doctest::Approx(expected).epsilon(1e-6));
            }
        }
    }

    SUBCASE("single draw, one step, forced innovation") {
        d.para = d.para.topRows(1).eval();
        d.latent = d.latent.topRows(1).eval();
        d.latent0 = d.latent0.head(1).eval();
        RngStream probe(123);
        const double z = probe.normal();
        RngStream rng(123);
        const auto f = predict_volatility(d, 1, rng);
        const double mu = d.para(0, 0), phi = d.para(0, 1), sig = d.para(0, 2);
        const double hn = d.latent(0, d.latent.cols() - 1);
        CHECK(f(0, 0) == doctest::Approx(mu + phi * (hn - mu) + sig * z).epsilon(1e-14));
    }

    SUBCASE("long-horizon draws reach the stationary law") {
        d.para.col(0).setConstant(-9.0);
        d.para.col(1).setConstant(0.8);
        d.para.col(2).setConstant(0.5);
        // replicate rows so the ensemble at the last horizon is informative
        const Eigen::MatrixXd para0 = d.para.row(0).replicate(4000, 1);
        const Eigen::MatrixXd lat0 = d.latent.row(0).replicate(4000, 1);
        d.para = para0;
        d.latent = lat0;
        d.latent0 = Eigen::VectorXd::Constant(4000, d.latent0(0));
        RngStream rng(3);
        const auto f = predict_volatility(d, 120, rng);
        std::vector<double> last(static_cast<std::size_t>(f.rows()));
        for (Eigen::Index i = 0; i < f.rows(); ++i)
            last[static_cast<std::size_t>(i)] = f(i, 119);
        const double target_var = 0.25 / (1.0 - 0.64);
        CHECK(stats::mean(last) == doctest::Approx(-9.0).epsilon(0.01));
        CHECK(stats::sample_variance(last) ==
              doctest::Approx(target_var).epsilon(0.1));
    }
}

TEST_CASE("forecasting needs the terminal state stored") {
    const auto sim = svsim(30, SvParameters(-9.0, 0.9, 0.3), 15);
    SamplerConfig cfg = quick_cfg(5, 20, 8);
    cfg.thintime = 7;  // kept times 1, 8, 15, 22, 29 -- no h_30
    const auto d = svsample(sim.returns, PriorSpec(), cfg);
    RngStream rng(1);
    CHECK_THROWS_AS(predict_volatility(d, 3, rng), validation_error);
}

TEST_CASE("interweaving keeps sigma mixing at least as healthy as the worse base") {
    const auto sim = svsim(600, SvParameters(-9.0, 0.99, 0.05), 101);
    const PriorSpec prior;
    const auto ess_sigma = [&](ThetaUpdateConfig::Baseline base, bool interweave,
                               std::uint64_t seed) {
        SamplerConfig cfg = quick_cfg(400, 2500, seed);
        cfg.theta.baseline = base;
        cfg.theta.interweave = interweave;
        const auto d = svsample(sim.returns, prior, cfg);
        return d.summary.parameters[2].ess;
    };
    for (std::uint64_t seed : {1ULL, 2ULL}) {
        const double ess_c = ess_sigma(ThetaUpdateConfig::Baseline::centered, false, seed);
        const double ess_nc =
            ess_sigma(ThetaUpdateConfig::Baseline::noncentered, false, seed);
        const double ess_asis =
            ess_sigma(ThetaUpdateConfig::Baseline::centered, true, seed);
        CHECK(ess_asis >= std::min(ess_c, ess_nc));
    }
}

TEST_CASE("degenerate two-point input runs to completion") {
    const ReturnsSeries tiny({0.01, -0.02});
    const auto d = svsample(tiny, PriorSpec(), quick_cfg(10, 20, 1));
    CHECK(d.para.rows() == 20);
    CHECK(std::isfinite(d.para(19, 0)));
}
