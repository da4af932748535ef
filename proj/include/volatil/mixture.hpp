#pragma once

#include <string>
#include <vector>

#include "volatil/model_core.hpp"
#include "volatil/rng.hpp"

namespace volatil {

struct MixtureComponent {
    double weight;
    double mean;
    double variance;
};

struct MixtureFidelity {
    double mean_err;
    double var_err;
};

// Analytic moments of log chi^2(1): E = psi(1/2) + log 2, V = psi'(1/2).
inline constexpr double kLogChiSq1Mean = -1.2703628454614782;
inline constexpr double kLogChiSq1Var = 4.934802200544679;

// Finite Gaussian mixture approximating the log chi^2(1) distribution of
// log(eps^2) for standard normal eps. Weights must sum to 1 and variances
// must be positive; the table used for sampling needs at least 7
// components (smaller tables are allowed only as test fixtures).
class MixtureTable {
public:
    explicit MixtureTable(std::vector<MixtureComponent> components);

    // The built-in 10-component table (see data/mixture_omori10.txt).
    static const MixtureTable& log_chisq1();

    // Parse a whitespace-separated "weight mean variance" file; '#' starts
    // a comment. Requires at least 7 components.
    static MixtureTable load(const std::string& path);

    std::size_t size() const { return comps_.size(); }
    const MixtureComponent& operator[](std::size_t j) const { return comps_[j]; }
    const std::vector<MixtureComponent>& components() const { return comps_; }

    double mean() const;
    double variance() const;
    MixtureFidelity fidelity() const;

    // FNV-1a over the canonical text serialization, for output metadata.
    std::string checksum() const;

    // Precomputed per-component terms used by the indicator sampler.
    const std::vector<double>& log_weight() const { return log_weight_; }
    const std::vector<double>& inv_var() const { return inv_var_; }
    const std::vector<double>& log_var() const { return log_var_; }

private:
    std::vector<MixtureComponent> comps_;
    std::vector<double> log_weight_;
    std::vector<double> inv_var_;
    std::vector<double> log_var_;
};

// Per-observation mixture component indicators, values in [0, K).
struct IndicatorPath {
    std::vector<int> r;

    std::size_t size() const { return r.size(); }
};

// log(y_t^2 + offset); the offset is sd(y)/10000 when the series contains
// exact zeros and 0 otherwise.
struct LinearizedData {
    std::vector<double> ystar;
    double offset = 0.0;

    std::size_t size() const { return ystar.size(); }
    bool has_offset() const { return offset > 0.0; }
};

LinearizedData linearize(const ReturnsSeries& y);

// Draw each indicator from its exact conditional given ystar_t - h_t,
// P(r_t = j) proportional to w_j N(ystar_t - h_t; m_j, v_j), via inverse
// CDF over the K normalized probabilities (one uniform per t). Densities
// are formed in the log domain with max subtraction.
IndicatorPath sample_indicators(const LinearizedData& lin, const LatentPath& h,
                                const MixtureTable& table, RngStream& rng);

}  // namespace volatil
