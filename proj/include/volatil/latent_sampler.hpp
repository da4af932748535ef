#pragma once

#include <vector>

#include "volatil/mixture.hpp"
#include "volatil/model_core.hpp"
#include "volatil/rng.hpp"

namespace volatil {

// Symmetric tridiagonal precision system for the Gaussian full
// conditional of the whole latent path h_0..h_n: the conditional is
// N(Omega^{-1} covector, Omega^{-1}) with Omega given by diag/offdiag.
struct TridiagonalSystem {
    std::vector<double> diag;      // n+1 entries
    std::vector<double> offdiag;   // n entries, (t, t+1) couplings
    std::vector<double> covector;  // n+1 entries

    std::size_t dim() const { return diag.size(); }
};

// Assemble the precision and covector of h | ystar, indicators, theta.
// With s2 = sigma_eta^2, v_t and m_t the indicated component moments:
//   diag_0 = 1/s2,  diag_t = 1/v_t + (1+phi^2)/s2,  diag_n = 1/v_n + 1/s2,
//   offdiag = -phi/s2,
//   covector_0 = mu (1-phi)/s2,
//   covector_t = (ystar_t - m_t)/v_t + mu (1-phi)^2/s2,
//   covector_n = (ystar_n - m_n)/v_n + mu (1-phi)/s2.
TridiagonalSystem build_system(const LinearizedData& lin, const IndicatorPath& r,
                               const SvParameters& params, const MixtureTable& table);

// Cholesky factor of a tridiagonal SPD matrix: L lower bidiagonal with
// diagonal d and subdiagonal sub. Factorization is pivot-free; a
// nonpositive pivot raises internal_error naming its index.
struct TridiagonalCholesky {
    std::vector<double> d;
    std::vector<double> sub;

    static TridiagonalCholesky factor(const TridiagonalSystem& sys);

    // Solve L x = b, then L^T x = b, both in O(n).
    std::vector<double> solve_lower(const std::vector<double>& b) const;
    std::vector<double> solve_upper(const std::vector<double>& b) const;
};

// Conditional mean Omega^{-1} covector.
std::vector<double> conditional_mean(const TridiagonalSystem& sys);

// Exact draw from N(Omega^{-1} covector, Omega^{-1}): mean + L^{-T} z with
// z standard normal, drawn in index order 0..n.
LatentPath sample_latent(const TridiagonalSystem& sys, RngStream& rng);

}  // namespace volatil
