#include <doctest.h>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <vector>

#include "support/oracles.hpp"
#include "volatil/errors.hpp"
#include "volatil/latent_sampler.hpp"
#include "volatil/stats.hpp"

using namespace volatil;

namespace {

// Joint log density of (h, ystar) written directly from the model, used
// only to probe the quadratic form.
double joint_log_density(const std::vector<double>& h, const LinearizedData& lin,
                         const IndicatorPath& r, const SvParameters& p,
                         const MixtureTable& table) {
    const std::size_t n = lin.size();
    const double s2 = p.sigma_eta * p.sigma_eta;
    double lp = stats::log_normal_pdf(h[0], p.mu, s2 / (1.0 - p.phi * p.phi));
    for (std::size_t t = 1; t <= n; ++t) {
        lp += stats::log_normal_pdf(h[t], p.mu + p.phi * (h[t - 1] - p.mu), s2);
        const auto& comp = table[static_cast<std::size_t>(r.r[t - 1])];
        lp += stats::log_normal_pdf(lin.ystar[t - 1], h[t] + comp.mean, comp.variance);
    }
    return lp;
}

struct RandomInstance {
    LinearizedData lin;
    IndicatorPath r;
    SvParameters params;
};

RandomInstance random_instance(std::size_t n, RngStream& rng, double phi, double sigma) {
    RandomInstance inst{{}, {}, SvParameters(rng.normal(-9.0, 1.0), phi, sigma)};
    inst.lin.ystar.resize(n);
    inst.r.r.resize(n);
    const auto& table = MixtureTable::log_chisq1();
    for (std::size_t t = 0; t < n; ++t) {
        inst.lin.ystar[t] = rng.normal(-9.0, 2.0);
        inst.r.r[t] = static_cast<int>(rng.uniform() * static_cast<double>(table.size()));
    }
    return inst;
}

}  // namespace

TEST_CASE("build_system: independent states when phi = 0") {
    const auto& table = MixtureTable::log_chisq1();
    LinearizedData lin{{-8.5}, 0.0};
    IndicatorPath r{{3}};
    const SvParameters p(-9.0, 0.0, 0.4);
    const auto sys = build_system(lin, r, p, table);
    REQUIRE(sys.dim() == 2);
    CHECK(sys.offdiag[0] == 0.0);
    const double s2 = 0.16;
    const double v = table[3].variance, m = table[3].mean;
    const auto mean = conditional_mean(sys);
    const double expected =
        ((lin.ystar[0] - m) / v + p.mu / s2) / (1.0 / v + 1.0 / s2);
    CHECK(mean[1] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(mean[0] == doctest::Approx(p.mu).epsilon(1e-12));
}

TEST_CASE("build_system matches the dense differentiation oracle") {
    RngStream rng(17);
    const auto& table = MixtureTable::log_chisq1();
    for (int rep = 0; rep < 4; ++rep) {
        const std::size_t n = 10;
        const auto inst = random_instance(n, rng, -0.3 + 0.4 * rep, 0.3 + 0.2 * rep);
        const auto sys = build_system(inst.lin, inst.r, inst.params, table);

        const auto logf = [&](const std::vector<double>& h) {
            return joint_log_density(h, inst.lin, inst.r, inst.params, table);
        };
        const auto omega = oracles::precision_from_logdensity(logf, n + 1);
        const auto cov = oracles::covector_from_logdensity(logf, n + 1);
        const auto dense = oracles::dense_precision(sys);
        for (Eigen::Index i = 0; i < dense.rows(); ++i) {
            for (Eigen::Index j = 0; j < dense.cols(); ++j)
                CHECK(dense(i, j) == doctest::Approx(omega(i, j)).epsilon(1e-10));
            CHECK(sys.covector[static_cast<std::size_t>(i)] ==
                  doctest::Approx(cov(i)).epsilon(1e-10));
        }
    }
}

TEST_CASE("near-unit-root system stays positive definite") {
    RngStream rng(23);
    const auto& table = MixtureTable::log_chisq1();
    auto inst = random_instance(200, rng, 0.99, 0.01);
    const auto sys = build_system(inst.lin, inst.r, inst.params, table);
    const auto chol = TridiagonalCholesky::factor(sys);  // must not throw
    for (double d : chol.d) CHECK(d > 0.0);
}

TEST_CASE("conditional mean matches a dense solve") {
    RngStream rng(29);
    const auto& table = MixtureTable::log_chisq1();
    const auto inst = random_instance(10, rng, 0.8, 0.5);
    const auto sys = build_system(inst.lin, inst.r, inst.params, table);
    const auto mean = conditional_mean(sys);
    const Eigen::MatrixXd omega = oracles::dense_precision(sys);
    const Eigen::VectorXd c =
        Eigen::Map<const Eigen::VectorXd>(sys.covector.data(), omega.rows());
    const Eigen::VectorXd dense_mean = omega.ldlt().solve(c);
    for (Eigen::Index i = 0; i < dense_mean.size(); ++i)
        CHECK(mean[static_cast<std::size_t>(i)] ==
              doctest::Approx(dense_mean(i)).epsilon(1e-10));
}

TEST_CASE("sample_latent draws from the dense Gaussian") {
    RngStream rng(31);
    const auto& table = MixtureTable::log_chisq1();
    const auto inst = random_instance(10, rng, 0.9, 0.4);
    const auto sys = build_system(inst.lin, inst.r, inst.params, table);

    const Eigen::MatrixXd omega = oracles::dense_precision(sys);
    const Eigen::VectorXd c =
        Eigen::Map<const Eigen::VectorXd>(sys.covector.data(), omega.rows());
    const Eigen::MatrixXd cov = omega.inverse();
    const Eigen::VectorXd mean = omega.ldlt().solve(c);

    const std::size_t m = 40000;
    const auto dim = static_cast<std::size_t>(omega.rows());
    Eigen::MatrixXd draws(m, omega.rows());
    for (std::size_t i = 0; i < m; ++i) {
        const auto h = sample_latent(sys, rng);
        for (std::size_t j = 0; j < dim; ++j)
            draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = h.h[j];
    }
    const Eigen::VectorXd emp_mean = draws.colwise().mean();
    for (Eigen::Index j = 0; j < omega.rows(); ++j) {
        const double se = std::sqrt(cov(j, j) / static_cast<double>(m));
        CHECK(std::fabs(emp_mean(j) - mean(j)) < 4.0 * se);
    }
    const Eigen::MatrixXd centered = draws.rowwise() - emp_mean.transpose();
    const Eigen::MatrixXd emp_cov =
        centered.transpose() * centered / static_cast<double>(m - 1);
    for (Eigen::Index i = 0; i < omega.rows(); ++i)
        for (Eigen::Index j = 0; j < omega.rows(); ++j) {
            const double se = std::sqrt(
                (cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / static_cast<double>(m));
            CHECK(std::fabs(emp_cov(i, j) - cov(i, j)) < 4.0 * se);
        }

    // single-coordinate KS check against the analytic marginal
    std::vector<double> coord(m);
    for (std::size_t i = 0; i < m; ++i) coord[i] = draws(static_cast<Eigen::Index>(i), 4);
    const double sd4 = std::sqrt(cov(4, 4));
    const double d = oracles::ks_statistic(
        coord, [&](double x) { return stats::normal_cdf((x - mean(4)) / sd4); });
    CHECK(d < oracles::ks_critical(0.01, m));
}

TEST_CASE("diagonal system gives uncorrelated draws") {
    const MixtureTable t({{1.0, 0.0, 1.0}});
    const std::size_t n = 4;
    LinearizedData lin{std::vector<double>(n, 0.0), 0.0};
    IndicatorPath r{std::vector<int>(n, 0)};
    const SvParameters p(0.0, 0.0, 1.0);
    const auto sys = build_system(lin, r, p, t);
    RngStream rng(37);
    const std::size_t m = 100000;
    std::vector<double> a(m), b(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto h = sample_latent(sys, rng);
        a[i] = h.h[1];
        b[i] = h.h[3];
    }
    const double ma = stats::mean(a), mb = stats::mean(b);
    double num = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    CHECK(std::fabs(num / std::sqrt(va * vb)) < 0.02);
}

TEST_CASE("latent draw cost scales linearly") {
    RngStream rng(41);
    const auto& table = MixtureTable::log_chisq1();
    const auto time_for = [&](std::size_t n) {
        auto inst = random_instance(n, rng, 0.95, 0.2);
        const auto sys = build_system(inst.lin, inst.r, inst.params, table);
        const auto t0 = std::chrono::steady_clock::now();
        double sink = 0.0;
        for (int rep = 0; rep < 60; ++rep) {
            const auto h = sample_latent(sys, rng);
            sink += h.h[n / 2];
        }
        (void)sink;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    };
    (void)time_for(1 << 14);  // warm-up
    const double t1 = time_for(1 << 15);
    const double t2 = time_for(1 << 16);
    CHECK(t2 / t1 < 2.5 * 1.6);  // linear-with-noise; quadratic would be ~4x
}

TEST_CASE("Cholesky reports the failing pivot") {
    TridiagonalSystem sys;
    sys.diag = {1.0, 0.1};
    sys.offdiag = {1.0};  // 0.1 - 1.0 < 0 at index 1
    sys.covector = {0.0, 0.0};
    CHECK_THROWS_WITH_AS(TridiagonalCholesky::factor(sys),
                         doctest::Contains("index 1"), internal_error);
}
