#include "volatil/latent_sampler.hpp"

#include <cmath>
#include <sstream>

#include "volatil/errors.hpp"

namespace volatil {

TridiagonalSystem build_system(const LinearizedData& lin, const IndicatorPath& r,
                               const SvParameters& params, const MixtureTable& table) {
    const std::size_t n = lin.size();
    if (r.size() != n)
        throw validation_error("build_system: indicators must align with data");

    const double phi = params.phi;
    const double s2inv = 1.0 / (params.sigma_eta * params.sigma_eta);
    const double gamma = params.mu * (1.0 - phi);

    TridiagonalSystem sys;
    sys.diag.resize(n + 1);
    sys.offdiag.resize(n);
    sys.covector.resize(n + 1);

    // State h_0 carries the stationary prior (1-phi^2)/s2 plus phi^2/s2
    // from the first transition.
    sys.diag[0] = s2inv;
    sys.covector[0] = gamma * s2inv;
    for (std::size_t t = 1; t <= n; ++t) {
        const auto& comp = table[static_cast<std::size_t>(r.r[t - 1])];
        const double vinv = 1.0 / comp.variance;
        const double resid = (lin.ystar[t - 1] - comp.mean) * vinv;
        if (t < n) {
            sys.diag[t] = vinv + (1.0 + phi * phi) * s2inv;
            sys.covector[t] = resid + gamma * (1.0 - phi) * s2inv;
        } else {
            sys.diag[t] = vinv + s2inv;
            sys.covector[t] = resid + gamma * s2inv;
        }
        sys.offdiag[t - 1] = -phi * s2inv;
    }

    for (std::size_t i = 0; i <= n; ++i) {
        if (!std::isfinite(sys.diag[i]) || !std::isfinite(sys.covector[i]) ||
            (i < n && !std::isfinite(sys.offdiag[i]))) {
            std::ostringstream msg;
            msg << "build_system: non-finite entry at index " << i << " (diag=" << sys.diag[i]
                << ", covector=" << sys.covector[i] << ", mu=" << params.mu
                << ", phi=" << phi << ", sigma_eta=" << params.sigma_eta << ")";
            throw internal_error(msg.str());
        }
    }
    return sys;
}

TridiagonalCholesky TridiagonalCholesky::factor(const TridiagonalSystem& sys) {
    const std::size_t m = sys.dim();
    TridiagonalCholesky chol;
    chol.d.resize(m);
    chol.sub.resize(m > 0 ? m - 1 : 0);
    if (!(sys.diag[0] > 0.0))
        throw internal_error("tridiagonal Cholesky: nonpositive pivot at index 0");
    chol.d[0] = std::sqrt(sys.diag[0]);
    for (std::size_t i = 1; i < m; ++i) {
        chol.sub[i - 1] = sys.offdiag[i - 1] / chol.d[i - 1];
        const double q = sys.diag[i] - chol.sub[i - 1] * chol.sub[i - 1];
        if (!(q > 0.0)) {
            std::ostringstream msg;
            msg << "tridiagonal Cholesky: nonpositive pivot at index " << i;
            throw internal_error(msg.str());
        }
        chol.d[i] = std::sqrt(q);
    }
    return chol;
}

std::vector<double> TridiagonalCholesky::solve_lower(const std::vector<double>& b) const {
    const std::size_t m = d.size();
    std::vector<double> x(m);
    x[0] = b[0] / d[0];
    for (std::size_t i = 1; i < m; ++i) x[i] = (b[i] - sub[i - 1] * x[i - 1]) / d[i];
    return x;
}

std::vector<double> TridiagonalCholesky::solve_upper(const std::vector<double>& b) const {
    const std::size_t m = d.size();
    std::vector<double> x(m);
    x[m - 1] = b[m - 1] / d[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) x[i] = (b[i] - sub[i] * x[i + 1]) / d[i];
    return x;
}

std::vector<double> conditional_mean(const TridiagonalSystem& sys) {
    const auto chol = TridiagonalCholesky::factor(sys);
    return chol.solve_upper(chol.solve_lower(sys.covector));
}

LatentPath sample_latent(const TridiagonalSystem& sys, RngStream& rng) {
    const auto chol = TridiagonalCholesky::factor(sys);
    const auto mean = chol.solve_upper(chol.solve_lower(sys.covector));
    std::vector<double> z(sys.dim());
    for (double& v : z) v = rng.normal();
    const auto dev = chol.solve_upper(z);
    std::vector<double> h(sys.dim());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = mean[i] + dev[i];
    return LatentPath(std::move(h));
}

}  // namespace volatil
