#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "support/oracles.hpp"
#include "volatil/errors.hpp"
#include "volatil/predictive.hpp"
#include "volatil/stats.hpp"

using namespace volatil;

namespace {

// Analytic log marginal likelihood of the conjugate normal model, two
// routes: the direct determinant formula and the sequential Student-t
// predictive decomposition.
double nig_log_ml_direct(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const RegressionPrior& prior) {
    const auto n = static_cast<double>(X.rows());
    const Eigen::MatrixXd Pn = X.transpose() * X + prior.B0inv;
    const Eigen::VectorXd bn = Pn.ldlt().solve(X.transpose() * y + prior.B0inv * prior.b0);
    const double c_star = prior.c0 + n / 2.0;
    const double C_star =
        prior.C0 +
        0.5 * (y.squaredNorm() + prior.b0.dot(prior.B0inv * prior.b0) - bn.dot(Pn * bn));
    const double logdet_B0inv = std::log(prior.B0inv.determinant());
    const double logdet_Pn = std::log(Pn.determinant());
    return -0.5 * n * std::log(2.0 * M_PI) + 0.5 * (logdet_B0inv - logdet_Pn) +
           prior.c0 * std::log(prior.C0) - c_star * std::log(C_star) +
           std::lgamma(c_star) - std::lgamma(prior.c0);
}

double nig_log_ml_sequential(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const RegressionPrior& prior) {
    Eigen::MatrixXd Pinv = prior.B0inv.inverse();
    Eigen::VectorXd b = prior.b0;
    double c = prior.c0, C = prior.C0;
    double total = 0.0;
    for (Eigen::Index t = 0; t < X.rows(); ++t) {
        const Eigen::VectorXd x = X.row(t).transpose();
        const double scale2 = (C / c) * (1.0 + x.dot(Pinv * x));
        total += oracles::log_student_t_pdf(y(t), 2.0 * c, x.dot(b), scale2);
        // rank-one posterior update
        const Eigen::VectorXd Px = Pinv * x;
        const double denom = 1.0 + x.dot(Px);
        const double resid = y(t) - x.dot(b);
        b += Px * (resid / denom);
        Pinv -= (Px * Px.transpose()) / denom;
        c += 0.5;
        C += 0.5 * resid * resid / denom;
    }
    return total;
}

}  // namespace

TEST_CASE("the two analytic marginal-likelihood routes agree") {
    RngStream rng(3);
    Eigen::MatrixXd X(12, 2);
    X.col(0).setOnes();
    for (Eigen::Index i = 0; i < 12; ++i) X(i, 1) = rng.normal();
    Eigen::VectorXd y(12);
    for (Eigen::Index i = 0; i < 12; ++i) y(i) = 0.3 + 0.5 * X(i, 1) + 0.2 * rng.normal();
    Eigen::VectorXd b0(2);
    b0 << 0.0, 0.0;
    const RegressionPrior prior(b0, Eigen::MatrixXd::Identity(2, 2), 2.0, 0.1);
    CHECK(nig_log_ml_direct(X, y, prior) ==
          doctest::Approx(nig_log_ml_sequential(X, y, prior)).epsilon(1e-10));
}

TEST_CASE("degenerate posterior: log PL equals the single normal density") {
    HomoskedasticFit fit;
    fit.beta = Eigen::MatrixXd::Zero(500, 2);
    fit.beta.col(0).setConstant(0.2);
    fit.beta.col(1).setConstant(0.9);
    fit.sigma_eps = Eigen::VectorXd::Constant(500, 0.3);
    RngStream rng(1);
    const auto rec = predictive_step(ModelTag::homoskedastic, fit, 0.8, 0.5, 500, rng);
    const double expected = stats::log_normal_pdf(0.8, 0.2 + 0.9 * 0.5, 0.09);
    CHECK(rec.log_pl == doctest::Approx(expected).epsilon(1e-12));
    CHECK(rec.pred_quantiles.size() == 3);
    CHECK(rec.pred_quantiles[0].second <= rec.pred_quantiles[1].second);
    CHECK(rec.pred_quantiles[1].second <= rec.pred_quantiles[2].second);
}

TEST_CASE("sv predictive with tiny sigma_eta propagates h deterministically") {
    SvErrorFit fit;
    fit.beta = Eigen::MatrixXd::Zero(200, 2);
    fit.theta.resize(200, 3);
    fit.theta.col(0).setConstant(-9.0);
    fit.theta.col(1).setConstant(0.9);
    fit.theta.col(2).setConstant(1e-12);
    fit.h_term = Eigen::VectorXd::Constant(200, -8.0);
    RngStream rng(2);
    const auto rec = predictive_step(ModelTag::sv, fit, 0.001, 0.0, 200, rng);
    const double h_next = -9.0 + 0.9 * (-8.0 + 9.0);
    const double expected = stats::log_normal_pdf(0.001, 0.0, std::exp(h_next));
    CHECK(rec.log_pl == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("garch predictive applies the one-step recursion") {
    GarchErrorFit fit;
    fit.beta = Eigen::MatrixXd::Zero(100, 2);
    fit.alpha.resize(100, 3);
    fit.alpha.col(0).setConstant(1e-5);
    fit.alpha.col(1).setConstant(0.2);
    fit.alpha.col(2).setConstant(0.7);
    fit.sigma2_term = Eigen::VectorXd::Constant(100, 4e-5);
    fit.ytilde_term = Eigen::VectorXd::Constant(100, 0.01);
    RngStream rng(3);
    const auto rec = predictive_step(ModelTag::garch, fit, 0.002, 0.0, 100, rng);
    const double s2 = 1e-5 + 0.2 * 0.01 * 0.01 + 0.7 * 4e-5;
    CHECK(rec.log_pl ==
          doctest::Approx(stats::log_normal_pdf(0.002, 0.0, s2)).epsilon(1e-10));
}

TEST_CASE("predictive_step validates M") {
    HomoskedasticFit fit;
    fit.beta = Eigen::MatrixXd::Zero(10, 2);
    fit.sigma_eps = Eigen::VectorXd::Constant(10, 0.1);
    RngStream rng(4);
    CHECK_THROWS_AS(predictive_step(ModelTag::homoskedastic, fit, 0.0, 0.0, 0, rng),
                    validation_error);
}

TEST_CASE("Algorithm-1 sum of log PL matches the analytic log ML") {
    // conjugate model, moderately informative prior, MC error via seeds
    const Eigen::Index n = 25;
    RngStream gen(6);
    std::vector<double> series(static_cast<std::size_t>(n) + 1);
    series[0] = 0.1;
    for (std::size_t t = 1; t < series.size(); ++t)
        series[t] = 0.05 + 0.6 * series[t - 1] + 0.15 * gen.normal();
    const RegressionPairs pairs = ar1_pairs(series);

    FitConfig fit(2);
    fit.burnin = 200;
    fit.draws = 4000;
    Eigen::VectorXd b0(2);
    b0 << 0.0, 0.0;
    fit.reg_prior = RegressionPrior(b0, Eigen::MatrixXd::Identity(2, 2), 2.0, 0.05);

    const double analytic = nig_log_ml_direct(pairs.X, pairs.y, fit.reg_prior);

    std::vector<double> estimates;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto result = rolling_evaluation(pairs, 0, {ModelTag::homoskedastic}, fit,
                                               4000, 1, seed);
        REQUIRE(result.failures.empty());
        estimates.push_back(
            log_marginal_likelihood(result.records.at(ModelTag::homoskedastic)));
    }
    const double mean_est = stats::mean(estimates);
    const double se = stats::sample_sd(estimates) / std::sqrt(5.0);
    CHECK(std::fabs(mean_est - analytic) < 3.0 * se + 0.05);
}

TEST_CASE("parallel evaluation is bit-identical to serial") {
    RngStream gen(8);
    std::vector<double> series(60);
    for (auto& v : series) v = gen.normal(0.0, 0.1);
    const RegressionPairs pairs = ar1_pairs(series);
    FitConfig fit(2);
    fit.burnin = 50;
    fit.draws = 300;
    Eigen::VectorXd b0(2);
    b0 << 0.0, 0.0;
    fit.reg_prior = RegressionPrior(b0, Eigen::MatrixXd::Identity(2, 2) * 0.5, 2.0, 0.01);

    const auto serial = rolling_evaluation(pairs, 30, {ModelTag::homoskedastic}, fit, 300,
                                           1, 42);
    const auto parallel = rolling_evaluation(pairs, 30, {ModelTag::homoskedastic}, fit,
                                             300, 4, 42);
    const auto& a = serial.records.at(ModelTag::homoskedastic);
    const auto& b = parallel.records.at(ModelTag::homoskedastic);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].t == b[i].t);
        CHECK(a[i].log_pl == b[i].log_pl);  // exact
        for (std::size_t q = 0; q < a[i].pred_quantiles.size(); ++q)
            CHECK(a[i].pred_quantiles[q].second == b[i].pred_quantiles[q].second);
    }
}

TEST_CASE("failures are recorded and evaluation continues") {
    RngStream gen(9);
    std::vector<double> series(20);
    for (auto& v : series) v = gen.normal(0.0, 0.1);
    const RegressionPairs pairs = ar1_pairs(series);
    FitConfig fit(2);
    fit.burnin = 20;
    fit.draws = 100;
    // sv refits on 0 and 1 training pairs must fail; later ones succeed
    const auto result = rolling_evaluation(pairs, 0, {ModelTag::sv}, fit, 100, 1, 7);
    CHECK(result.failures.size() == 2);
    CHECK(result.records.at(ModelTag::sv).size() == pairs.size() - 2);
}

TEST_CASE("cumulative Bayes factor bookkeeping") {
    const auto mk = [](std::vector<double> pls, int t0) {
        std::vector<PredictiveRecord> out;
        int t = t0;
        for (double pl : pls) {
            PredictiveRecord r;
            r.t = t++;
            r.log_pl = pl;
            out.push_back(r);
        }
        return out;
    };
    // identical records: identically zero path
    const auto a = mk({0.5, -0.2, 0.1}, 11);
    const auto zero = cumulative_bayes_factor(a, a);
    for (double v : zero.cumulative) CHECK(v == 0.0);
    CHECK(zero.s == 10);
    CHECK(zero.times == std::vector<int>{11, 12, 13});

    // single step arithmetic
    const auto one = cumulative_bayes_factor(mk({1.0}, 5), mk({0.3}, 5));
    CHECK(one.cumulative.size() == 1);
    CHECK(one.cumulative[0] == doctest::Approx(0.7).epsilon(1e-15));

    // path additivity on random inputs
    RngStream rng(10);
    std::vector<double> pa(30), pb(30);
    for (auto& v : pa) v = rng.normal();
    for (auto& v : pb) v = rng.normal();
    const auto bf = cumulative_bayes_factor(mk(pa, 1), mk(pb, 1));
    for (std::size_t u = 1; u < bf.cumulative.size(); ++u)
        CHECK(bf.cumulative[u] == doctest::Approx(bf.cumulative[u - 1] + pa[u] - pb[u])
                                      .epsilon(1e-12));

    // misaligned indices rejected
    CHECK_THROWS_AS(cumulative_bayes_factor(mk({1.0, 2.0}, 1), mk({1.0, 2.0}, 2)),
                    validation_error);
}

TEST_CASE("log marginal likelihood requires a gap-free history") {
    std::vector<PredictiveRecord> recs(3);
    recs[0].t = 1;
    recs[1].t = 2;
    recs[2].t = 3;
    recs[0].log_pl = recs[1].log_pl = recs[2].log_pl = 0.0;
    CHECK(log_marginal_likelihood(recs) == 0.0);
    recs[2].t = 4;
    CHECK_THROWS_AS(log_marginal_likelihood(recs), validation_error);
}

TEST_CASE("doubling M shrinks the seed-to-seed spread by about sqrt(2)") {
    // synthetic sv fit with i.i.d. draws; the only randomness in log PL is
    // the per-draw state propagation
    RngStream gen(11);
    const std::size_t big = 4000;
    SvErrorFit fit;
    fit.beta.resize(big, 2);
    fit.theta.resize(big, 3);
    fit.h_term.resize(big);
    for (std::size_t m = 0; m < big; ++m) {
        const auto i = static_cast<Eigen::Index>(m);
        fit.beta(i, 0) = gen.normal(0.0, 0.01);
        fit.beta(i, 1) = gen.normal(0.0, 0.05);
        fit.theta(i, 0) = gen.normal(-9.0, 0.2);
        fit.theta(i, 1) = 0.9 + 0.05 * gen.uniform();
        fit.theta(i, 2) = 0.2 + 0.1 * gen.uniform();
        fit.h_term(i) = gen.normal(-9.0, 0.8);
    }
    const auto spread = [&](std::size_t m_use) {
        std::vector<double> vals;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            RngStream rng(seed);
            vals.push_back(
                predictive_step(ModelTag::sv, fit, 0.004, 0.0, m_use, rng).log_pl);
        }
        return stats::sample_sd(vals);
    };
    const double ratio = spread(2000) / spread(4000);
    CHECK(ratio > 1.2);
    CHECK(ratio < 1.7);
}

TEST_CASE("ar1_pairs lags the series") {
    const auto pairs = ar1_pairs({1.0, 2.0, 3.0, 5.0});
    REQUIRE(pairs.size() == 3);
    CHECK(pairs.X(0, 1) == 1.0);
    CHECK(pairs.y(0) == 2.0);
    CHECK(pairs.X(2, 1) == 3.0);
    CHECK(pairs.y(2) == 5.0);
}

TEST_CASE("task seeds separate models and time points") {
    CHECK(task_seed(1, ModelTag::sv, 3) != task_seed(1, ModelTag::garch, 3));
    CHECK(task_seed(1, ModelTag::sv, 3) != task_seed(1, ModelTag::sv, 4));
    CHECK(task_seed(1, ModelTag::sv, 3) == task_seed(1, ModelTag::sv, 3));
}
