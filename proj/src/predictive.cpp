#include "volatil/predictive.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <sstream>
#include <thread>

#include "volatil/errors.hpp"
#include "volatil/stats.hpp"

namespace volatil {

std::string to_string(ModelTag tag) {
    switch (tag) {
        case ModelTag::homoskedastic: return "homoskedastic";
        case ModelTag::garch: return "garch";
        case ModelTag::sv: return "sv";
    }
    throw internal_error("to_string: unknown model tag");
}

ModelTag model_tag_from_string(const std::string& s) {
    if (s == "homoskedastic") return ModelTag::homoskedastic;
    if (s == "garch") return ModelTag::garch;
    if (s == "sv") return ModelTag::sv;
    throw validation_error("unknown model tag: " + s);
}

std::uint64_t task_seed(std::uint64_t seed, ModelTag tag, int t) {
    const std::string name = to_string(tag);
    std::uint64_t h = stats::fnv1a(name.data(), name.size());
    h = stats::fnv1a_mix(h, static_cast<std::uint64_t>(t));
    return seed ^ h;
}

namespace {

std::size_t fit_rows(const FittedModel& fit) {
    return std::visit(
        [](const auto& f) { return static_cast<std::size_t>(f.beta.rows()); }, fit);
}

}  // namespace

PredictiveRecord predictive_step(const FittedModel& fit, const Eigen::VectorXd& x_next,
                                 double y_next, std::size_t M, RngStream& rng,
                                 const std::vector<double>& probs, int t, ModelTag tag) {
    if (M < 1) throw validation_error("predictive_step: M must be >= 1");
    const std::size_t rows = fit_rows(fit);
    if (rows == 0) throw validation_error("predictive_step: no posterior draws");
    const std::size_t m_use = std::min(M, rows);

    std::vector<double> logd(m_use);
    std::vector<double> ysim(m_use);
    for (std::size_t m = 0; m < m_use; ++m) {
        const auto idx = static_cast<Eigen::Index>(m);
        double mean = 0.0, sd = 0.0;
        if (const auto* homo = std::get_if<HomoskedasticFit>(&fit)) {
            mean = homo->beta.row(idx).dot(x_next);
            sd = homo->sigma_eps(idx);
        } else if (const auto* sv = std::get_if<SvErrorFit>(&fit)) {
            mean = sv->beta.row(idx).dot(x_next);
            const double mu = sv->theta(idx, 0), phi = sv->theta(idx, 1),
                         sig = sv->theta(idx, 2);
            const double h_next = mu + phi * (sv->h_term(idx) - mu) + sig * rng.normal();
            sd = std::exp(0.5 * h_next);
        } else {
            const auto& g = std::get<GarchErrorFit>(fit);
            mean = g.beta.row(idx).dot(x_next);
            const double s2 = g.alpha(idx, 0) +
                              g.alpha(idx, 1) * g.ytilde_term(idx) * g.ytilde_term(idx) +
                              g.alpha(idx, 2) * g.sigma2_term(idx);
            sd = std::sqrt(s2);
        }
        logd[m] = stats::log_normal_pdf(y_next, mean, sd * sd);
        ysim[m] = mean + sd * rng.normal();
        if (!std::isfinite(logd[m])) {
            std::ostringstream msg;
            msg << "predictive_step: non-finite predictive density (draw " << m
                << ", mean " << mean << ", sd " << sd << ")";
            throw internal_error(msg.str());
        }
    }

    PredictiveRecord rec;
    rec.t = t;
    rec.model = tag;
    rec.log_pl = stats::log_sum_exp(logd) - std::log(static_cast<double>(m_use));
    const auto qs = stats::quantiles(ysim, probs);
    for (std::size_t i = 0; i < probs.size(); ++i)
        rec.pred_quantiles.emplace_back(probs[i], qs[i]);
    return rec;
}

PredictiveRecord predictive_step(ModelTag tag, const FittedModel& fit, double y_obs_next,
                                 double y_obs_t, std::size_t M, RngStream& rng,
                                 const std::vector<double>& probs, int t) {
    Eigen::VectorXd x(2);
    x << 1.0, y_obs_t;
    return predictive_step(fit, x, y_obs_next, M, rng, probs, t, tag);
}

RegressionPairs ar1_pairs(const std::vector<double>& series) {
    if (series.size() < 2) throw validation_error("ar1_pairs: need at least 2 values");
    const auto m = static_cast<Eigen::Index>(series.size()) - 1;
    RegressionPairs pairs;
    pairs.X.resize(m, 2);
    pairs.y.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        pairs.X(j, 0) = 1.0;
        pairs.X(j, 1) = series[static_cast<std::size_t>(j)];
        pairs.y(j) = series[static_cast<std::size_t>(j) + 1];
    }
    return pairs;
}

namespace {

// Exact draws from the conjugate prior, used when a model is fit on an
// empty training set.
HomoskedasticFit prior_fit(const RegressionPrior& prior, std::size_t draws,
                           RngStream& rng) {
    const auto p = prior.b0.size();
    Eigen::MatrixXd B0 = prior.B0inv;
    // B0inv may be (numerically) zero; an improper prior cannot be sampled.
    Eigen::LLT<Eigen::MatrixXd> llt(B0);
    if (llt.info() != Eigen::Success)
        throw validation_error("prior fit: B0inv must be positive definite for s = 0");
    HomoskedasticFit fit;
    fit.beta.resize(draws, p);
    fit.sigma_eps.resize(draws);
    for (std::size_t m = 0; m < static_cast<std::size_t>(draws); ++m) {
        const double sigma2 = rng.inverse_gamma(prior.c0, prior.C0);
        Eigen::VectorXd z(p);
        for (Eigen::Index j = 0; j < p; ++j) z(j) = rng.normal();
        // beta | sigma2 ~ N(b0, sigma2 B0inv^{-1})
        const Eigen::VectorXd beta =
            prior.b0 + std::sqrt(sigma2) * llt.matrixU().solve(z);
        fit.beta.row(static_cast<Eigen::Index>(m)) = beta.transpose();
        fit.sigma_eps(static_cast<Eigen::Index>(m)) = std::sqrt(sigma2);
    }
    return fit;
}

FittedModel fit_model(ModelTag tag, const RegressionPairs& pairs, Eigen::Index count,
                      const FitConfig& cfg, RngStream& rng) {
    const Eigen::MatrixXd X = pairs.X.topRows(count);
    const Eigen::VectorXd y = pairs.y.head(count);
    switch (tag) {
        case ModelTag::homoskedastic: {
            if (count == 0) return prior_fit(cfg.reg_prior, cfg.draws, rng);
            // Tolerate count < p: the prior precision regularizes the draw.
            HomoskedasticKernel kernel(X, cfg.reg_prior);
            HomoskedasticFit fit;
            fit.beta.resize(cfg.draws, X.cols());
            fit.sigma_eps.resize(cfg.draws);
            Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
            double sigma2 = 1.0;
            for (std::size_t i = 1; i <= cfg.burnin + cfg.draws; ++i) {
                kernel.step(y, beta, sigma2, rng);
                if (i > cfg.burnin) {
                    const auto row = static_cast<Eigen::Index>(i - cfg.burnin - 1);
                    fit.beta.row(row) = beta.transpose();
                    fit.sigma_eps(row) = std::sqrt(sigma2);
                }
            }
            return fit;
        }
        case ModelTag::sv: {
            if (count < 2)
                throw validation_error("sv refit needs at least 2 training pairs");
            RegressionData data(y, X);
            SamplerConfig cfg_sv;
            cfg_sv.burnin = cfg.burnin;
            cfg_sv.draws = cfg.draws;
            cfg_sv.quiet = true;
            const auto draws = gibbs_sv_errors(data, cfg.reg_prior, cfg.sv_prior, cfg_sv,
                                               rng, /*store_latent=*/false);
            return SvErrorFit{draws.beta, draws.theta, draws.h_term};
        }
        case ModelTag::garch: {
            if (count < X.cols() + 1)
                throw validation_error("garch refit needs more training pairs than "
                                       "regression coefficients");
            RegressionData data(y, X);
            const auto draws =
                garch_rwmh(data, cfg.reg_prior, cfg.burnin, cfg.draws, rng, 1,
                           cfg.garch_scales, cfg.garch_beta_scale, /*quiet=*/true);
            return GarchErrorFit{draws.beta, draws.alpha, draws.sigma2_term,
                                 draws.ytilde_term};
        }
    }
    throw internal_error("fit_model: unknown tag");
}

}  // namespace

EvalResult rolling_evaluation(const RegressionPairs& pairs, Eigen::Index s,
                              const std::vector<ModelTag>& models, const FitConfig& fit,
                              std::size_t M, int parallelism, std::uint64_t seed,
                              const std::vector<double>& probs, int record_offset) {
    const Eigen::Index m = pairs.size();
    if (s < 0 || s >= m)
        throw validation_error("rolling_evaluation: training cutoff out of range");
    if (models.empty()) throw validation_error("rolling_evaluation: no models given");
    if (parallelism < 1)
        throw validation_error("rolling_evaluation: parallelism must be >= 1");

    struct Task {
        ModelTag tag;
        Eigen::Index j;  // predicted pair index
    };
    std::vector<Task> tasks;
    for (ModelTag tag : models)
        for (Eigen::Index j = s; j < m; ++j) tasks.push_back({tag, j});

    std::vector<std::optional<PredictiveRecord>> slots(tasks.size());
    std::vector<std::optional<EvalFailure>> fails(tasks.size());

    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= tasks.size()) return;
            const Task& task = tasks[k];
            const int t = static_cast<int>(task.j) + 1 + record_offset;
            try {
                RngStream rng(task_seed(seed, task.tag, t));
                const FittedModel fitted = fit_model(task.tag, pairs, task.j, fit, rng);
                const Eigen::VectorXd x_next = pairs.X.row(task.j).transpose();
                slots[k] = predictive_step(fitted, x_next, pairs.y(task.j), M, rng, probs,
                                           t, task.tag);
            } catch (const std::exception& e) {
                fails[k] = EvalFailure{task.tag, t, e.what()};
            }
        }
    };

    if (parallelism == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(parallelism));
        for (int i = 0; i < parallelism; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    EvalResult result;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        if (slots[k]) result.records[tasks[k].tag].push_back(*slots[k]);
        if (fails[k]) result.failures.push_back(*fails[k]);
    }
    return result;
}

BayesFactorSeries cumulative_bayes_factor(const std::vector<PredictiveRecord>& a,
                                          const std::vector<PredictiveRecord>& b) {
    if (a.size() != b.size() || a.empty())
        throw validation_error("cumulative_bayes_factor: record sets differ in length");
    BayesFactorSeries out;
    out.s = a.front().t - 1;
    double cum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].t != b[i].t)
            throw validation_error("cumulative_bayes_factor: misaligned time indices");
        cum += a[i].log_pl - b[i].log_pl;
        out.times.push_back(a[i].t);
        out.cumulative.push_back(cum);
    }
    return out;
}

double log_marginal_likelihood(const std::vector<PredictiveRecord>& records) {
    if (records.empty()) throw validation_error("log_marginal_likelihood: no records");
    double sum = 0.0;
    int expected = 1;
    for (const auto& r : records) {
        if (r.t != expected)
            throw validation_error(
                "log_marginal_likelihood: records must cover t = 1..n without gaps");
        sum += r.log_pl;
        ++expected;
    }
    return sum;
}

}  // namespace volatil
