#include "volatil/mixture.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "volatil/errors.hpp"
#include "volatil/stats.hpp"

namespace volatil {

MixtureTable::MixtureTable(std::vector<MixtureComponent> components)
    : comps_(std::move(components)) {
    if (comps_.empty()) throw validation_error("MixtureTable: empty table");
    double wsum = 0.0;
    for (const auto& c : comps_) {
        if (!(c.weight > 0.0)) throw validation_error("MixtureTable: weights must be > 0");
        if (!(c.variance > 0.0))
            throw validation_error("MixtureTable: variances must be > 0");
        if (!std::isfinite(c.mean)) throw validation_error("MixtureTable: non-finite mean");
        wsum += c.weight;
    }
    if (std::fabs(wsum - 1.0) > 1e-12)
        throw validation_error("MixtureTable: weights must sum to 1");
    log_weight_.reserve(comps_.size());
    inv_var_.reserve(comps_.size());
    log_var_.reserve(comps_.size());
    for (const auto& c : comps_) {
        log_weight_.push_back(std::log(c.weight));
        inv_var_.push_back(1.0 / c.variance);
        log_var_.push_back(std::log(c.variance));
    }
}

const MixtureTable& MixtureTable::log_chisq1() {
    // 10-component Gaussian mixture approximation to the log chi^2(1)
    // density, from Omori, Chib, Shephard & Nakajima (2007), Table 1.
    static const MixtureTable table(std::vector<MixtureComponent>{
        {0.00609, 1.92677, 0.11265},
        {0.04775, 1.34744, 0.17788},
        {0.13057, 0.73504, 0.26768},
        {0.20674, 0.02266, 0.40611},
        {0.22715, -0.85173, 0.62699},
        {0.18842, -1.97278, 0.98583},
        {0.12047, -3.46788, 1.57469},
        {0.05591, -5.55246, 2.54498},
        {0.01575, -8.68384, 4.16591},
        {0.00115, -14.65000, 7.33342},
    });
    return table;
}

MixtureTable MixtureTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("MixtureTable: cannot open " + path);
    std::vector<MixtureComponent> comps;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        MixtureComponent c;
        if (!(row >> c.weight)) continue;  // blank line
        if (!(row >> c.mean >> c.variance)) {
            std::ostringstream msg;
            msg << "MixtureTable: malformed row at line " << lineno << " of " << path;
            throw validation_error(msg.str());
        }
        comps.push_back(c);
    }
    if (comps.size() < 7)
        throw validation_error("MixtureTable: sampling table needs at least 7 components");
    return MixtureTable(std::move(comps));
}

double MixtureTable::mean() const {
    double m = 0.0;
    for (const auto& c : comps_) m += c.weight * c.mean;
    return m;
}

double MixtureTable::variance() const {
    const double m = mean();
    double s = 0.0;
    for (const auto& c : comps_) s += c.weight * (c.variance + c.mean * c.mean);
    return s - m * m;
}

MixtureFidelity MixtureTable::fidelity() const {
    return {std::fabs(mean() - kLogChiSq1Mean), std::fabs(variance() - kLogChiSq1Var)};
}

std::string MixtureTable::checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    char buf[128];
    for (const auto& c : comps_) {
        const int len = std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", c.weight,
                                      c.mean, c.variance);
        h = stats::fnv1a(buf, static_cast<std::size_t>(len), h);
    }
    return stats::hex64(h);
}

LinearizedData linearize(const ReturnsSeries& y) {
    LinearizedData out;
    const auto& v = y.values();
    out.offset = 0.0;
    if (y.had_zeros()) out.offset = stats::sample_sd(v) / 10000.0;
    out.ystar.resize(v.size());
    for (std::size_t t = 0; t < v.size(); ++t) {
        out.ystar[t] = std::log(v[t] * v[t] + out.offset);
        if (!std::isfinite(out.ystar[t]))
            throw validation_error(
                "linearize: log(y^2 + offset) is not finite; the series is degenerate "
                "(all-zero or otherwise ill-conditioned)");
    }
    return out;
}

IndicatorPath sample_indicators(const LinearizedData& lin, const LatentPath& h,
                                const MixtureTable& table, RngStream& rng) {
    const std::size_t n = lin.size();
    if (h.size() != n + 1)
        throw validation_error("sample_indicators: latent path must have length n+1");
    const std::size_t k = table.size();
    const auto& lw = table.log_weight();
    const auto& iv = table.inv_var();
    const auto& lv = table.log_var();

    IndicatorPath out;
    out.r.resize(n);
    std::vector<double> logq(k);
    std::vector<double> q(k);
    for (std::size_t t = 0; t < n; ++t) {
        const double e = lin.ystar[t] - h.h[t + 1];
        double mx = -std::numeric_limits<double>::infinity();
        std::size_t best = 0;
        double bestdist = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j) {
            const double d = e - table[j].mean;
            const double quad = d * d * iv[j];
            logq[j] = lw[j] - 0.5 * lv[j] - 0.5 * quad;
            if (logq[j] > mx) mx = logq[j];
            if (quad < bestdist) {
                bestdist = quad;
                best = j;
            }
        }
        double total = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            q[j] = std::exp(logq[j] - mx);
            total += q[j];
        }
        if (!(total > 0.0) || !std::isfinite(total)) {
            // Unreachable with finite inputs; fall back to the closest
            // component in the scaled-distance sense.
            out.r[t] = static_cast<int>(best);
            continue;
        }
        const double u = rng.uniform() * total;
        double cum = 0.0;
        std::size_t pick = k - 1;
        for (std::size_t j = 0; j < k; ++j) {
            cum += q[j];
            if (u <= cum) {
                pick = j;
                break;
            }
        }
        out.r[t] = static_cast<int>(pick);
    }
    return out;
}

}  // namespace volatil
