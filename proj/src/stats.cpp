#include "volatil/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "volatil/errors.hpp"

namespace volatil::stats {

double mean(std::span<const double> x) {
    if (x.empty()) throw validation_error("mean: empty input");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
    if (x.size() < 2) throw validation_error("sample_variance: need at least 2 values");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

double sample_sd(std::span<const double> x) { return std::sqrt(sample_variance(x)); }

namespace {

double quantile_sorted(const std::vector<double>& s, double p) {
    const std::size_t n = s.size();
    if (n == 1) return s[0];
    const double pos = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= n) return s[n - 1];
    const double frac = pos - static_cast<double>(lo);
    return s[lo] * (1.0 - frac) + s[lo + 1] * frac;
}

}  // namespace

double quantile(std::span<const double> x, double p) {
    if (x.empty()) throw validation_error("quantile: empty input");
    if (!(p >= 0.0 && p <= 1.0)) throw validation_error("quantile: p outside [0,1]");
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    return quantile_sorted(s, p);
}

std::vector<double> quantiles(std::span<const double> x, std::span<const double> probs) {
    if (x.empty()) throw validation_error("quantiles: empty input");
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    std::vector<double> out;
    out.reserve(probs.size());
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw validation_error("quantiles: p outside [0,1]");
        out.push_back(quantile_sorted(s, p));
    }
    return out;
}

double ess_batch_means(std::span<const double> x) {
    const std::size_t m = x.size();
    if (m < 4) return static_cast<double>(m);
    const auto nb = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))));
    const std::size_t bs = m / nb;
    if (bs < 1) return static_cast<double>(m);
    const std::size_t used = nb * bs;

    double grand = 0.0;
    for (std::size_t i = 0; i < used; ++i) grand += x[i];
    grand /= static_cast<double>(used);

    double s2 = 0.0;
    for (std::size_t i = 0; i < used; ++i) s2 += (x[i] - grand) * (x[i] - grand);
    s2 /= static_cast<double>(used - 1);
    if (s2 <= 0.0) return static_cast<double>(m);  // constant draws

    double vb = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
        double bm = 0.0;
        for (std::size_t i = k * bs; i < (k + 1) * bs; ++i) bm += x[i];
        bm /= static_cast<double>(bs);
        vb += (bm - grand) * (bm - grand);
    }
    vb /= static_cast<double>(nb - 1);
    if (vb <= 0.0) return static_cast<double>(m);

    // asymptotic variance estimate: bs * vb; ess = used * s2 / (bs * vb)
    double ess = static_cast<double>(nb) * s2 / vb;
    ess = std::min(ess, static_cast<double>(m));
    return std::max(ess, 1e-12);
}

double mcse_mean(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    return std::sqrt(sample_variance(x) / ess_batch_means(x));
}

double log_normal_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * d * d / var;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

double log_sum_exp(std::span<const double> v) {
    if (v.empty()) throw validation_error("log_sum_exp: empty input");
    double mx = v[0];
    for (double t : v) mx = std::max(mx, t);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double t : v) s += std::exp(t - mx);
    return mx + std::log(s);
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= static_cast<std::uint64_t>(p[i]);
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a_mix(std::uint64_t h, std::uint64_t value) {
    unsigned char bytes[8];
    std::memcpy(bytes, &value, 8);
    return fnv1a(bytes, 8, h);
}

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

}  // namespace volatil::stats
