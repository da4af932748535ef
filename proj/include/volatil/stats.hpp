#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace volatil::stats {

double mean(std::span<const double> x);

// Sample variance with denominator n-1.
double sample_variance(std::span<const double> x);

double sample_sd(std::span<const double> x);

// Empirical quantile with linear interpolation between order statistics
// (the common "type 7" definition). p must lie in [0, 1].
double quantile(std::span<const double> x, double p);

// Quantiles for several probabilities; sorts the input once.
std::vector<double> quantiles(std::span<const double> x, std::span<const double> probs);

// Effective sample size via non-overlapping batch means with ceil(sqrt(M))
// batches. Returns M for constant input; always in (0, M].
double ess_batch_means(std::span<const double> x);

// Monte Carlo standard error of the mean of a correlated sequence,
// sqrt(sample_variance / ess).
double mcse_mean(std::span<const double> x);

double log_normal_pdf(double x, double mean, double var);

// Standard normal CDF.
double normal_cdf(double z);

// log(sum(exp(v))) with max subtraction.
double log_sum_exp(std::span<const double> v);

// FNV-1a 64-bit over a byte range, chainable through `h`.
std::uint64_t fnv1a(const void* data, std::size_t len,
                    std::uint64_t h = 1469598103934665603ULL);

std::uint64_t fnv1a_mix(std::uint64_t h, std::uint64_t value);

std::string hex64(std::uint64_t v);

}  // namespace volatil::stats
