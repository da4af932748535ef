#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "volatil/errors.hpp"
#include "volatil/mixture.hpp"
#include "volatil/rng.hpp"
#include "volatil/stats.hpp"

using namespace volatil;

TEST_CASE("shipped table matches the log chi^2(1) moments") {
    const auto f = MixtureTable::log_chisq1().fidelity();
    CHECK(f.mean_err < 1e-2);
    CHECK(f.var_err < 1e-2);
    CHECK(MixtureTable::log_chisq1().size() == 10);
}

TEST_CASE("single-component moment-matched table has tiny fidelity error") {
    const MixtureTable t({{1.0, kLogChiSq1Mean, kLogChiSq1Var}});
    const auto f = t.fidelity();
    CHECK(f.mean_err < 1e-4);
    CHECK(f.var_err < 1e-4);
}

TEST_CASE("mixture mean is the weighted component mean") {
    const MixtureTable t({{0.25, -1.0, 1.0}, {0.75, 3.0, 2.0}});
    CHECK(t.mean() == doctest::Approx(0.25 * -1.0 + 0.75 * 3.0).epsilon(1e-15));
}

TEST_CASE("table validation") {
    CHECK_THROWS_AS(MixtureTable({{0.5, 0.0, 1.0}}), validation_error);          // weights
    CHECK_THROWS_AS(MixtureTable({{1.0, 0.0, 0.0}}), validation_error);          // variance
    CHECK_THROWS_AS(MixtureTable(std::vector<MixtureComponent>{}), validation_error);
}

TEST_CASE("table file round trip and checksum") {
    const auto path = std::filesystem::path(VOLATIL_DATA_DIR) / "mixture_omori10.txt";
    const auto loaded = MixtureTable::load(path.string());
    CHECK(loaded.size() == MixtureTable::log_chisq1().size());
    CHECK(loaded.checksum() == MixtureTable::log_chisq1().checksum());
    for (std::size_t j = 0; j < loaded.size(); ++j) {
        CHECK(loaded[j].weight == MixtureTable::log_chisq1()[j].weight);
        CHECK(loaded[j].mean == MixtureTable::log_chisq1()[j].mean);
        CHECK(loaded[j].variance == MixtureTable::log_chisq1()[j].variance);
    }
}

TEST_CASE("linearize handles zeros with the sd/10000 offset") {
    {
        const auto lin = linearize(ReturnsSeries({1.0, -1.0}));
        CHECK(lin.offset == 0.0);
        CHECK(lin.ystar == std::vector<double>{0.0, 0.0});
    }
    {
        const double e = std::exp(1.0);
        const auto lin = linearize(ReturnsSeries({e, e}));
        CHECK(lin.ystar[0] == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(lin.ystar[1] == doctest::Approx(2.0).epsilon(1e-14));
    }
    {
        const auto lin = linearize(ReturnsSeries({0.0, 2.0}));
        const double c = std::sqrt(2.0) / 10000.0;
        CHECK(lin.offset == doctest::Approx(c).epsilon(1e-15));
        CHECK(lin.ystar[0] == doctest::Approx(std::log(c)).epsilon(1e-14));
        CHECK(lin.ystar[1] == doctest::Approx(std::log(4.0 + c)).epsilon(1e-14));
        CHECK(lin.has_offset());
    }
    // all-zero series cannot be linearized
    CHECK_THROWS_AS(linearize(ReturnsSeries({0.0, 0.0, 0.0})), validation_error);
}

TEST_CASE("linearize is monotone in |y| for fixed offset") {
    RngStream rng(9);
    std::vector<double> y(64);
    for (auto& v : y) v = rng.normal(0.0, 0.01);
    const auto lin = linearize(ReturnsSeries(y));
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j)
            if (std::fabs(y[i]) < std::fabs(y[j])) CHECK(lin.ystar[i] <= lin.ystar[j]);
}

TEST_CASE("sample_indicators: degenerate single-component table") {
    const MixtureTable t({{1.0, -1.27, 4.93}});
    RngStream rng(1);
    LinearizedData lin{{-9.0, -8.0, -10.0}, 0.0};
    LatentPath h(std::vector<double>(4, -9.0));
    const auto idx = sample_indicators(lin, h, t, rng);
    for (int r : idx.r) CHECK(r == 0);
}

TEST_CASE("sample_indicators picks the overwhelming component") {
    const MixtureTable t({{0.5, -10.0, 1.0}, {0.5, 10.0, 1.0}});
    RngStream rng(2);
    // ystar_t - h_t = 10 for every t
    LinearizedData lin{std::vector<double>(2000, 10.0), 0.0};
    LatentPath h(std::vector<double>(2001, 0.0));
    const auto idx = sample_indicators(lin, h, t, rng);
    for (int r : idx.r) CHECK(r == 1);
}

TEST_CASE("indicator frequencies recover the table weights") {
    // With h = 0 and ystar drawn from the mixture itself, the marginal
    // indicator law equals the weights exactly.
    const auto& table = MixtureTable::log_chisq1();
    RngStream rng(31);
    const std::size_t n = 100000;
    std::vector<double> ystar(n);
    for (auto& v : ystar) {
        const double u = rng.uniform();
        double cum = 0.0;
        std::size_t j = 0;
        for (; j < table.size(); ++j) {
            cum += table[j].weight;
            if (u <= cum) break;
        }
        j = std::min(j, table.size() - 1);
        v = table[j].mean + std::sqrt(table[j].variance) * rng.normal();
    }
    LinearizedData lin{std::move(ystar), 0.0};
    LatentPath h(std::vector<double>(n + 1, 0.0));
    const auto idx = sample_indicators(lin, h, table, rng);

    std::vector<double> freq(table.size(), 0.0);
    for (int r : idx.r) freq[static_cast<std::size_t>(r)] += 1.0;
    for (auto& f : freq) f /= static_cast<double>(n);
    for (std::size_t j = 0; j < table.size(); ++j) {
        const double w = table[j].weight;
        const double se = std::sqrt(w * (1.0 - w) / static_cast<double>(n));
        CHECK(std::fabs(freq[j] - w) < 3.0 * se);
    }
}

TEST_CASE("indicator probabilities normalize to one") {
    const auto& table = MixtureTable::log_chisq1();
    RngStream rng(4);
    for (int rep = 0; rep < 100; ++rep) {
        const double e = rng.normal(0.0, 8.0);
        double total = 0.0;
        std::vector<double> logq(table.size());
        double mx = -1e300;
        for (std::size_t j = 0; j < table.size(); ++j) {
            const double d = e - table[j].mean;
            logq[j] = table.log_weight()[j] - 0.5 * table.log_var()[j] -
                      0.5 * d * d * table.inv_var()[j];
            mx = std::max(mx, logq[j]);
        }
        for (double lq : logq) total += std::exp(lq - mx);
        double check = 0.0;
        for (double lq : logq) check += std::exp(lq - mx) / total;
        CHECK(check == doctest::Approx(1.0).epsilon(1e-12));
    }
}
