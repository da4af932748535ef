#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include "volatil/csv_io.hpp"
#include "volatil/errors.hpp"
#include "volatil/garch.hpp"
#include "volatil/linreg.hpp"
#include "volatil/mixture.hpp"
#include "volatil/model_core.hpp"
#include "volatil/predictive.hpp"
#include "volatil/sampler_driver.hpp"
#include "volatil/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace volatil;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitInternal = 3;

std::uint64_t resolve_seed(bool seed_given, std::uint64_t seed) {
    if (seed_given) return seed;
    if (const char* env = std::getenv("VOLATIL_SEED")) {
        char* end = nullptr;
        const auto v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0')
            throw validation_error("VOLATIL_SEED is not a valid integer");
        return v;
    }
    return 1;
}

struct PriorFlags {
    std::vector<double> priormu{0.0, 100.0};  // mean, sd
    std::vector<double> priorphi{5.0, 1.5};
    double priorsigma = 1.0;
};

PriorSpec make_prior(const PriorFlags& f) {
    if (f.priormu.size() != 2 || f.priorphi.size() != 2)
        throw validation_error("--priormu and --priorphi take exactly 2 values");
    if (!(f.priormu[1] > 0.0))
        throw validation_error("--priormu standard deviation must be > 0");
    return PriorSpec(f.priormu[0], f.priormu[1] * f.priormu[1], f.priorphi[0],
                     f.priorphi[1], f.priorsigma);
}

struct SamplerFlags {
    std::size_t burnin = 1000;
    std::size_t draws = 10000;
    std::size_t thinpara = 1;
    std::size_t thinlatent = 1;
    std::size_t thintime = 1;
    bool quiet = false;
    std::string baseline = "centered";
    bool no_interweave = false;
    std::string proposal = "independence";
    std::vector<double> rw_scales{0.1, 0.05, 0.05};
    std::vector<double> quantiles{0.05, 0.5, 0.95};
};

ThetaUpdateConfig make_theta_cfg(const SamplerFlags& f) {
    ThetaUpdateConfig cfg;
    if (f.baseline == "centered")
        cfg.baseline = ThetaUpdateConfig::Baseline::centered;
    else if (f.baseline == "noncentered")
        cfg.baseline = ThetaUpdateConfig::Baseline::noncentered;
    else
        throw validation_error("--baseline must be centered or noncentered");
    cfg.interweave = !f.no_interweave;
    if (f.proposal == "independence")
        cfg.proposal = ThetaUpdateConfig::Proposal::independence;
    else if (f.proposal == "random_walk")
        cfg.proposal = ThetaUpdateConfig::Proposal::random_walk;
    else
        throw validation_error("--proposal must be independence or random_walk");
    if (f.rw_scales.size() != 3)
        throw validation_error("--rw-scales takes exactly 3 values");
    cfg.rw_scales = {f.rw_scales[0], f.rw_scales[1], f.rw_scales[2]};
    return cfg;
}

SamplerConfig make_sampler_cfg(const SamplerFlags& f, std::uint64_t seed) {
    SamplerConfig cfg;
    cfg.burnin = f.burnin;
    cfg.draws = f.draws;
    cfg.thinpara = f.thinpara;
    cfg.thinlatent = f.thinlatent;
    cfg.thintime = f.thintime;
    cfg.quiet = f.quiet;
    cfg.seed = seed;
    cfg.theta = make_theta_cfg(f);
    cfg.quantiles = f.quantiles;
    cfg.validate();
    return cfg;
}

json summary_to_json(const SummaryTable& table) {
    json params = json::object();
    for (const auto& q : table.parameters) {
        json entry{{"mean", q.mean}, {"sd", q.sd}, {"ess", q.ess}};
        json quant = json::object();
        for (const auto& [p, v] : q.quantiles) quant[fmt17(p)] = v;
        entry["quantiles"] = quant;
        params[q.name] = entry;
    }
    json vols = json::array();
    for (std::size_t i = 0; i < table.volatility.size(); ++i) {
        const auto& q = table.volatility[i];
        json entry{{"t", table.volatility_times[i]},
                   {"mean", q.mean},
                   {"sd", q.sd},
                   {"ess", q.ess}};
        json quant = json::object();
        for (const auto& [p, v] : q.quantiles) quant[fmt17(p)] = v;
        entry["quantiles"] = quant;
        vols.push_back(entry);
    }
    return json{{"parameters", params}, {"volatility", vols}};
}

void write_json(const fs::path& path, const json& j) {
    write_text_atomic(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
    std::size_t n = 0;
    double mu = -10.0, phi = 0.98, sigma = 0.2;
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::string out = ".";
};

int cmd_simulate(const SimulateOpts& o) {
    const auto seed = resolve_seed(o.seed_given, o.seed);
    const auto sim = svsim(o.n, SvParameters(o.mu, o.phi, o.sigma), seed);
    fs::create_directories(o.out);

    AtomicFileWriter y(fs::path(o.out) / "y.csv");
    for (double v : sim.returns.values()) y.write(fmt17(v) + "\n");
    y.commit();

    AtomicFileWriter latent(fs::path(o.out) / "latent.csv");
    latent.write_row({"t", "h"});
    for (std::size_t t = 0; t < sim.latent.size(); ++t)
        latent.write_row({std::to_string(t), fmt17(sim.latent.h[t])});
    latent.commit();

    write_json(fs::path(o.out) / "manifest.json",
               json{{"command", "simulate"},
                    {"n", o.n},
                    {"mu", o.mu},
                    {"phi", o.phi},
                    {"sigma", o.sigma},
                    {"seed", seed},
                    {"outputs", {"y.csv", "latent.csv"}}});
    return 0;
}

// --------------------------------------------------------------------- fit

struct FitOpts {
    std::string input;
    std::string out = ".";
    bool do_logret = false;
    bool demean = false;
    PriorFlags prior;
    SamplerFlags sampler;
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::size_t forecast = 0;
    std::size_t chains = 1;
    std::string mixture_path;
};

ReturnsSeries load_series(const std::string& input, bool do_logret, bool demean) {
    const SeriesInput raw = read_series_csv(input);
    if (do_logret) return logret(raw.values, demean, raw.dates);
    std::vector<double> values = raw.values;
    if (demean) {
        const double m = stats::mean(values);
        for (double& v : values) v -= m;
    }
    return ReturnsSeries(std::move(values), raw.dates);
}

void export_para_csv(const fs::path& path, const std::vector<SvDraws>& chains,
                     std::size_t thinpara) {
    AtomicFileWriter w(path);
    const bool labeled = chains.size() > 1;
    if (labeled)
        w.write_row({"chain", "iter", "mu", "phi", "sigma"});
    else
        w.write_row({"iter", "mu", "phi", "sigma"});
    for (std::size_t c = 0; c < chains.size(); ++c) {
        const auto& para = chains[c].para;
        for (Eigen::Index i = 0; i < para.rows(); ++i) {
            std::vector<std::string> row;
            if (labeled) row.push_back(std::to_string(c + 1));
            row.push_back(std::to_string((static_cast<std::size_t>(i) + 1) * thinpara));
            for (int j = 0; j < 3; ++j) row.push_back(fmt17(para(i, j)));
            w.write_row(row);
        }
    }
    w.commit();
}

void export_latent_csv(const fs::path& dir, const std::vector<SvDraws>& chains,
                       std::size_t thinlatent) {
    const bool labeled = chains.size() > 1;
    {
        AtomicFileWriter w(dir / "latent.csv");
        std::vector<std::string> header;
        if (labeled) header.push_back("chain");
        header.push_back("iter");
        for (int t : chains[0].latent_times) header.push_back("h_" + std::to_string(t));
        w.write_row(header);
        for (std::size_t c = 0; c < chains.size(); ++c) {
            const auto& latent = chains[c].latent;
            for (Eigen::Index i = 0; i < latent.rows(); ++i) {
                std::vector<std::string> row;
                if (labeled) row.push_back(std::to_string(c + 1));
                row.push_back(
                    std::to_string((static_cast<std::size_t>(i) + 1) * thinlatent));
                for (Eigen::Index j = 0; j < latent.cols(); ++j)
                    row.push_back(fmt17(latent(i, j)));
                w.write_row(row);
            }
        }
        w.commit();
    }
    {
        AtomicFileWriter w(dir / "latent0.csv");
        if (labeled)
            w.write_row({"chain", "iter", "h_0"});
        else
            w.write_row({"iter", "h_0"});
        for (std::size_t c = 0; c < chains.size(); ++c) {
            const auto& l0 = chains[c].latent0;
            for (Eigen::Index i = 0; i < l0.size(); ++i) {
                std::vector<std::string> row;
                if (labeled) row.push_back(std::to_string(c + 1));
                row.push_back(
                    std::to_string((static_cast<std::size_t>(i) + 1) * thinlatent));
                row.push_back(fmt17(l0(i)));
                w.write_row(row);
            }
        }
        w.commit();
    }
}

void export_vol_quantiles(const fs::path& path, const SvDraws& merged) {
    AtomicFileWriter w(path);
    std::vector<std::string> header{"t", "date", "mean"};
    if (!merged.summary.volatility.empty())
        for (const auto& [p, v] : merged.summary.volatility[0].quantiles)
            header.push_back("q" + fmt17(p));
    w.write_row(header);
    const auto& labels = merged.y.labels();
    for (std::size_t i = 0; i < merged.summary.volatility.size(); ++i) {
        const auto& q = merged.summary.volatility[i];
        const int t = merged.summary.volatility_times[i];
        std::vector<std::string> row{std::to_string(t)};
        row.push_back((t >= 1 && static_cast<std::size_t>(t) <= labels.size())
                          ? labels[static_cast<std::size_t>(t) - 1]
                          : "");
        row.push_back(fmt17(q.mean));
        for (const auto& [p, v] : q.quantiles) row.push_back(fmt17(v));
        w.write_row(row);
    }
    w.commit();
}

SvDraws merge_chains(std::vector<SvDraws>&& chains) {
    if (chains.size() == 1) return std::move(chains[0]);
    SvDraws merged = std::move(chains[0]);
    Eigen::Index rows_para = merged.para.rows(), rows_lat = merged.latent.rows();
    for (std::size_t c = 1; c < chains.size(); ++c) {
        rows_para += chains[c].para.rows();
        rows_lat += chains[c].latent.rows();
    }
    Eigen::MatrixXd para(rows_para, 3);
    Eigen::MatrixXd latent(rows_lat, merged.latent.cols());
    Eigen::VectorXd latent0(rows_lat);
    Eigen::Index rp = 0, rl = 0;
    const auto append = [&](const SvDraws& d) {
        para.middleRows(rp, d.para.rows()) = d.para;
        latent.middleRows(rl, d.latent.rows()) = d.latent;
        latent0.segment(rl, d.latent0.size()) = d.latent0;
        rp += d.para.rows();
        rl += d.latent.rows();
        merged.runtime_seconds += d.runtime_seconds;
    };
    merged.runtime_seconds = 0.0;
    append(merged);
    for (std::size_t c = 1; c < chains.size(); ++c) append(chains[c]);
    merged.para = std::move(para);
    merged.latent = std::move(latent);
    merged.latent0 = std::move(latent0);
    return merged;
}

int cmd_fit(const FitOpts& o) {
    const auto seed = resolve_seed(o.seed_given, o.seed);
    const ReturnsSeries y = load_series(o.input, o.do_logret, o.demean);
    const PriorSpec prior = make_prior(o.prior);
    const MixtureTable table =
        o.mixture_path.empty() ? MixtureTable::log_chisq1()
                               : MixtureTable::load(o.mixture_path);
    if (o.chains < 1) throw validation_error("--chains must be >= 1");

    std::vector<SvDraws> chains;
    chains.reserve(o.chains);
    std::vector<std::optional<SvDraws>> slots(o.chains);
    std::vector<std::exception_ptr> errors(o.chains);
    const auto run_chain = [&](std::size_t c) {
        try {
            SamplerConfig cfg = make_sampler_cfg(o.sampler, seed);
            if (o.chains > 1) {
                cfg.seed = stats::fnv1a_mix(seed, c + 1);
                cfg.quiet = true;
            }
            slots[c] = svsample(y, prior, cfg, table);
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };
    if (o.chains == 1) {
        run_chain(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t c = 0; c < o.chains; ++c) pool.emplace_back(run_chain, c);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    for (auto& s : slots) chains.push_back(std::move(*s));

    fs::create_directories(o.out);
    export_para_csv(fs::path(o.out) / "para.csv", chains, o.sampler.thinpara);
    export_latent_csv(o.out, chains, o.sampler.thinlatent);

    SvDraws merged = merge_chains(std::move(chains));
    updatesummary(merged, o.sampler.quantiles);
    write_json(fs::path(o.out) / "summary.json", summary_to_json(merged.summary));
    export_vol_quantiles(fs::path(o.out) / "vol_quantiles.csv", merged);

    if (o.forecast > 0) {
        RngStream rng(stats::fnv1a_mix(seed, 0xF0C45ULL));
        const Eigen::MatrixXd h_fore = predict_volatility(merged, o.forecast, rng);
        AtomicFileWriter w(fs::path(o.out) / "forecast.csv");
        std::vector<std::string> header{"step", "mean"};
        for (double p : o.sampler.quantiles) header.push_back("q" + fmt17(p));
        w.write_row(header);
        for (std::size_t k = 0; k < o.forecast; ++k) {
            std::vector<double> vol(static_cast<std::size_t>(h_fore.rows()));
            for (Eigen::Index i = 0; i < h_fore.rows(); ++i)
                vol[static_cast<std::size_t>(i)] =
                    100.0 * std::exp(0.5 * h_fore(i, static_cast<Eigen::Index>(k)));
            std::vector<std::string> row{std::to_string(k + 1), fmt17(stats::mean(vol))};
            for (double p : o.sampler.quantiles)
                row.push_back(fmt17(stats::quantile(vol, p)));
            w.write_row(row);
        }
        w.commit();
    }

    const LinearizedData lin = linearize(y);
    json manifest{{"command", "fit"},
                  {"input", o.input},
                  {"seed", seed},
                  {"chains", o.chains},
                  {"logret", o.do_logret},
                  {"demean", o.demean},
                  {"prior",
                   {{"priormu", o.prior.priormu},
                    {"priorphi", o.prior.priorphi},
                    {"priorsigma", o.prior.priorsigma}}},
                  {"sampler",
                   {{"burnin", o.sampler.burnin},
                    {"draws", o.sampler.draws},
                    {"thinpara", o.sampler.thinpara},
                    {"thinlatent", o.sampler.thinlatent},
                    {"thintime", o.sampler.thintime},
                    {"baseline", o.sampler.baseline},
                    {"interweave", !o.sampler.no_interweave},
                    {"proposal", o.sampler.proposal}}},
                  {"mixture_checksum", table.checksum()},
                  {"had_zeros", y.had_zeros()},
                  {"offset", lin.offset},
                  {"runtime_seconds", merged.runtime_seconds},
                  {"forecast", o.forecast}};
    write_json(fs::path(o.out) / "manifest.json", manifest);
    return 0;
}

// ----------------------------------------------------------------- regress

struct RegressOpts {
    std::string input;
    std::string out = ".";
    std::string model = "homoskedastic";
    std::vector<double> b0;
    std::vector<double> B0inv_diag{1e-10};
    double c0 = 0.001, C0 = 0.001;
    PriorFlags sv_prior;
    std::vector<double> garch_scales{0.1, 0.1, 0.1};
    double garch_beta_scale = 1.0;
    std::size_t burnin = 1000, draws = 10000, thin = 1;
    std::uint64_t seed = 1;
    bool seed_given = false;
    bool quiet = false;
};

RegressionPrior make_reg_prior(const RegressOpts& o, Eigen::Index p) {
    Eigen::VectorXd b0 = Eigen::VectorXd::Zero(p);
    if (!o.b0.empty()) {
        if (static_cast<Eigen::Index>(o.b0.size()) != p)
            throw validation_error("--b0 must match the number of coefficients");
        for (Eigen::Index j = 0; j < p; ++j)
            b0(j) = o.b0[static_cast<std::size_t>(j)];
    }
    Eigen::MatrixXd B0inv = Eigen::MatrixXd::Zero(p, p);
    if (o.B0inv_diag.size() == 1) {
        B0inv.diagonal().setConstant(o.B0inv_diag[0]);
    } else if (static_cast<Eigen::Index>(o.B0inv_diag.size()) == p) {
        for (Eigen::Index j = 0; j < p; ++j)
            B0inv(j, j) = o.B0inv_diag[static_cast<std::size_t>(j)];
    } else {
        throw validation_error("--B0inv-diag takes 1 value or one per coefficient");
    }
    return RegressionPrior(b0, B0inv, o.c0, o.C0);
}

int cmd_regress(const RegressOpts& o) {
    const auto seed = resolve_seed(o.seed_given, o.seed);
    const TableInput tbl = read_table_csv(o.input);
    if (tbl.columns.size() < 1) throw validation_error("regress: empty table");
    const Eigen::Index n = tbl.values.rows();
    const auto p = tbl.values.cols();  // response + (p-1) predictors -> p coefs
    Eigen::MatrixXd X(n, p);
    X.col(0).setOnes();
    for (Eigen::Index j = 1; j < p; ++j) X.col(j) = tbl.values.col(j);
    RegressionData data(tbl.values.col(0), X);
    const RegressionPrior prior = make_reg_prior(o, p);
    RngStream rng(seed);

    fs::create_directories(o.out);
    AtomicFileWriter w(fs::path(o.out) / "draws.csv");
    json extra = json::object();

    if (o.model == "homoskedastic") {
        const auto d = gibbs_homoskedastic(data, prior, o.burnin, o.draws, rng, o.thin);
        std::vector<std::string> header{"iter"};
        for (Eigen::Index j = 0; j < p; ++j)
            header.push_back("beta_" + std::to_string(j));
        header.push_back("sigma");
        w.write_row(header);
        for (Eigen::Index i = 0; i < d.beta.rows(); ++i) {
            std::vector<std::string> row{
                std::to_string((static_cast<std::size_t>(i) + 1) * o.thin)};
            for (Eigen::Index j = 0; j < p; ++j) row.push_back(fmt17(d.beta(i, j)));
            row.push_back(fmt17(d.sigma_eps(i)));
            w.write_row(row);
        }
    } else if (o.model == "sv") {
        SamplerConfig cfg;
        cfg.burnin = o.burnin;
        cfg.draws = o.draws;
        cfg.thinpara = o.thin;
        cfg.quiet = o.quiet;
        cfg.seed = seed;
        const auto d = gibbs_sv_errors(data, prior, make_prior(o.sv_prior), cfg, rng,
                                       /*store_latent=*/true);
        std::vector<std::string> header{"iter", "mu", "phi", "sigma"};
        for (Eigen::Index j = 0; j < p; ++j)
            header.push_back("beta_" + std::to_string(j));
        for (Eigen::Index t = 1; t <= n; ++t) header.push_back("h_" + std::to_string(t));
        w.write_row(header);
        for (Eigen::Index i = 0; i < d.theta.rows(); ++i) {
            std::vector<std::string> row{
                std::to_string((static_cast<std::size_t>(i) + 1) * o.thin)};
            for (int j = 0; j < 3; ++j) row.push_back(fmt17(d.theta(i, j)));
            for (Eigen::Index j = 0; j < p; ++j) row.push_back(fmt17(d.beta(i, j)));
            for (Eigen::Index t = 0; t < n; ++t) row.push_back(fmt17(d.latent(i, t)));
            w.write_row(row);
        }
        extra["mixture_checksum"] = MixtureTable::log_chisq1().checksum();
    } else if (o.model == "garch") {
        if (o.garch_scales.size() != 3)
            throw validation_error("--garch-scales takes exactly 3 values");
        const auto d = garch_rwmh(data, prior, o.burnin, o.draws, rng, o.thin,
                                  {o.garch_scales[0], o.garch_scales[1], o.garch_scales[2]},
                                  o.garch_beta_scale, o.quiet);
        std::vector<std::string> header{"iter"};
        for (Eigen::Index j = 0; j < p; ++j)
            header.push_back("beta_" + std::to_string(j));
        header.insert(header.end(), {"alpha_0", "alpha_1", "alpha_2"});
        w.write_row(header);
        for (Eigen::Index i = 0; i < d.beta.rows(); ++i) {
            std::vector<std::string> row{
                std::to_string((static_cast<std::size_t>(i) + 1) * o.thin)};
            for (Eigen::Index j = 0; j < p; ++j) row.push_back(fmt17(d.beta(i, j)));
            for (int j = 0; j < 3; ++j) row.push_back(fmt17(d.alpha(i, j)));
            w.write_row(row);
        }
        extra["accept_alpha"] = d.accept_alpha;
        extra["accept_beta"] = d.accept_beta;
    } else {
        throw validation_error("unknown model tag: " + o.model);
    }
    w.commit();

    json manifest{{"command", "regress"}, {"input", o.input},   {"model", o.model},
                  {"seed", seed},         {"burnin", o.burnin}, {"draws", o.draws},
                  {"thin", o.thin}};
    manifest.update(extra);
    write_json(fs::path(o.out) / "manifest.json", manifest);
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOpts {
    std::string input;
    std::string out = ".";
    std::vector<std::string> models{"sv", "homoskedastic"};
    Eigen::Index cutoff = 0;  // raw-series index; 0 = n/2
    std::size_t pl_draws = 0;  // 0 = stored draw count
    int threads = 1;
    std::size_t burnin = 1000, draws = 10000;
    PriorFlags sv_prior;
    std::uint64_t seed = 1;
    bool seed_given = false;
};

int cmd_evaluate(const EvaluateOpts& o) {
    const auto seed = resolve_seed(o.seed_given, o.seed);
    const SeriesInput raw = read_series_csv(o.input);
    const auto n = static_cast<Eigen::Index>(raw.values.size());
    if (n < 4) throw validation_error("evaluate: series too short");
    const Eigen::Index cutoff = o.cutoff > 0 ? o.cutoff : n / 2;
    if (cutoff < 1 || cutoff >= n)
        throw validation_error("evaluate: --training-cutoff must lie in [1, n)");

    std::vector<ModelTag> models;
    for (const auto& name : o.models) models.push_back(model_tag_from_string(name));

    FitConfig fit(2);
    fit.burnin = o.burnin;
    fit.draws = o.draws;
    fit.sv_prior = make_prior(o.sv_prior);
    const std::size_t M = o.pl_draws > 0 ? o.pl_draws : o.draws;

    const RegressionPairs pairs = ar1_pairs(raw.values);
    // Pair j predicts raw observation j+2; training on y[1:cutoff] means the
    // first predicted pair is cutoff-1.
    const EvalResult result = rolling_evaluation(pairs, cutoff - 1, models, fit, M,
                                                 o.threads, seed, {0.01, 0.5, 0.99},
                                                 /*record_offset=*/1);

    fs::create_directories(o.out);
    for (const auto& [tag, records] : result.records) {
        AtomicFileWriter w(fs::path(o.out) / ("pl_" + to_string(tag) + ".csv"));
        std::vector<std::string> header{"model", "t", "log_pl"};
        if (!records.empty())
            for (const auto& [p, v] : records[0].pred_quantiles)
                header.push_back("q" + fmt17(p));
        w.write_row(header);
        for (const auto& r : records) {
            std::vector<std::string> row{to_string(tag), std::to_string(r.t),
                                         fmt17(r.log_pl)};
            for (const auto& [p, v] : r.pred_quantiles) row.push_back(fmt17(v));
            w.write_row(row);
        }
        w.commit();
    }

    json bf_summary = json::object();
    for (std::size_t i = 0; i < models.size(); ++i) {
        for (std::size_t j = i + 1; j < models.size(); ++j) {
            const auto a = result.records.find(models[i]);
            const auto b = result.records.find(models[j]);
            if (a == result.records.end() || b == result.records.end()) continue;
            if (a->second.size() != b->second.size()) continue;
            const auto bf = cumulative_bayes_factor(a->second, b->second);
            const std::string name =
                "bf_" + to_string(models[i]) + "_over_" + to_string(models[j]);
            AtomicFileWriter w(fs::path(o.out) / (name + ".csv"));
            w.write_row({"t", "cum_log_bf"});
            for (std::size_t k = 0; k < bf.times.size(); ++k)
                w.write_row({std::to_string(bf.times[k]), fmt17(bf.cumulative[k])});
            w.commit();
            bf_summary[name] = bf.cumulative.back();
        }
    }

    json failures = json::array();
    for (const auto& f : result.failures)
        failures.push_back(
            json{{"model", to_string(f.model)}, {"t", f.t}, {"message", f.message}});

    write_json(fs::path(o.out) / "manifest.json",
               json{{"command", "evaluate"},
                    {"input", o.input},
                    {"seed", seed},
                    {"models", o.models},
                    {"training_cutoff", cutoff},
                    {"pl_draws", M},
                    {"threads", o.threads},
                    {"burnin", o.burnin},
                    {"draws", o.draws},
                    {"mixture_checksum", MixtureTable::log_chisq1().checksum()},
                    {"final_bf", bf_summary},
                    {"failures", failures}});
    if (!result.failures.empty())
        std::cerr << "warning: " << result.failures.size()
                  << " refit task(s) failed; see manifest.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian stochastic volatility toolkit"};
    app.require_subcommand(1);

    SimulateOpts sim;
    auto* csim = app.add_subcommand("simulate", "Generate a series from the SV process");
    csim->add_option("--n", sim.n, "Series length")->required();
    csim->add_option("--mu", sim.mu, "Level of log-variance");
    csim->add_option("--phi", sim.phi, "Persistence of log-variance");
    csim->add_option("--sigma", sim.sigma, "Volatility of log-variance");
    auto* sim_seed = csim->add_option("--seed", sim.seed, "RNG seed");
    csim->add_option("--out", sim.out, "Output directory");

    FitOpts fit;
    auto* cfit = app.add_subcommand("fit", "Fit the SV model to a return series");
    cfit->add_option("--input", fit.input, "Input CSV")->required();
    cfit->add_option("--out", fit.out, "Output directory");
    cfit->add_flag("--logret", fit.do_logret, "Input is a price series; take log returns");
    cfit->add_flag("--demean", fit.demean, "Subtract the sample mean");
    cfit->add_option("--priormu", fit.prior.priormu, "Normal prior mean and sd for mu")
        ->expected(2);
    cfit->add_option("--priorphi", fit.prior.priorphi, "Beta prior a0 and b0 for phi")
        ->expected(2);
    cfit->add_option("--priorsigma", fit.prior.priorsigma, "Prior scale for sigma^2");
    cfit->add_option("--burnin", fit.sampler.burnin, "Burn-in iterations");
    cfit->add_option("--draws", fit.sampler.draws, "Post burn-in iterations");
    cfit->add_option("--thinpara", fit.sampler.thinpara, "Parameter thinning");
    cfit->add_option("--thinlatent", fit.sampler.thinlatent, "Latent thinning");
    cfit->add_option("--thintime", fit.sampler.thintime, "Latent time thinning");
    cfit->add_flag("--quiet", fit.sampler.quiet, "Suppress progress output");
    auto* fit_seed = cfit->add_option("--seed", fit.seed, "RNG seed");
    cfit->add_option("--forecast", fit.forecast, "Volatility forecast horizon");
    cfit->add_option("--chains", fit.chains, "Number of independent chains");
    cfit->add_option("--quantiles", fit.sampler.quantiles, "Summary quantiles")
        ->expected(-1);
    cfit->add_option("--baseline", fit.sampler.baseline,
                     "Baseline parameterization (centered|noncentered)");
    cfit->add_flag("--no-interweave", fit.sampler.no_interweave,
                   "Disable the interweaving stage");
    cfit->add_option("--proposal", fit.sampler.proposal,
                     "Theta proposal (independence|random_walk)");
    cfit->add_option("--rw-scales", fit.sampler.rw_scales,
                     "Random-walk scales for (mu, phi, sigma)")
        ->expected(3);
    cfit->add_option("--mixture-table", fit.mixture_path,
                     "Mixture table file (weight mean variance rows)");

    RegressOpts reg;
    auto* creg = app.add_subcommand("regress", "Bayesian linear regression");
    creg->add_option("--input", reg.input, "CSV with response then predictors")
        ->required();
    creg->add_option("--out", reg.out, "Output directory");
    creg->add_option("--model", reg.model,
                     "Error model (homoskedastic|sv|garch)");
    creg->add_option("--b0", reg.b0, "Prior mean of beta")->expected(-1);
    creg->add_option("--B0inv-diag", reg.B0inv_diag,
                     "Diagonal of the prior precision of beta")
        ->expected(-1);
    creg->add_option("--c0", reg.c0, "Inverse-gamma prior shape");
    creg->add_option("--C0", reg.C0, "Inverse-gamma prior scale");
    creg->add_option("--priormu", reg.sv_prior.priormu, "SV prior mean and sd for mu")
        ->expected(2);
    creg->add_option("--priorphi", reg.sv_prior.priorphi, "SV prior a0 and b0 for phi")
        ->expected(2);
    creg->add_option("--priorsigma", reg.sv_prior.priorsigma, "SV prior scale for sigma^2");
    creg->add_option("--garch-scales", reg.garch_scales,
                     "Random-walk scales for log alpha")
        ->expected(3);
    creg->add_option("--garch-beta-scale", reg.garch_beta_scale,
                     "Scale on the beta proposal covariance");
    creg->add_option("--burnin", reg.burnin, "Burn-in iterations");
    creg->add_option("--draws", reg.draws, "Post burn-in iterations");
    creg->add_option("--thin", reg.thin, "Draw thinning");
    creg->add_flag("--quiet", reg.quiet, "Suppress warnings/progress");
    auto* reg_seed = creg->add_option("--seed", reg.seed, "RNG seed");

    EvaluateOpts ev;
    auto* cev = app.add_subcommand(
        "evaluate", "Rolling one-step-ahead predictive likelihood comparison");
    cev->add_option("--input", ev.input, "Input series CSV")->required();
    cev->add_option("--out", ev.out, "Output directory");
    cev->add_option("--models,--model", ev.models, "Models to compare")->expected(-1);
    cev->add_option("--training-cutoff", ev.cutoff,
                    "Observations reserved as pure training data (default n/2)");
    cev->add_option("--pl-draws", ev.pl_draws,
                    "Posterior draws per predictive evaluation (default: all)");
    cev->add_option("--threads", ev.threads, "Worker threads");
    cev->add_option("--burnin", ev.burnin, "Burn-in per refit");
    cev->add_option("--draws", ev.draws, "Draws per refit");
    cev->add_option("--priormu", ev.sv_prior.priormu, "SV prior mean and sd for mu")
        ->expected(2);
    cev->add_option("--priorphi", ev.sv_prior.priorphi, "SV prior a0 and b0 for phi")
        ->expected(2);
    cev->add_option("--priorsigma", ev.sv_prior.priorsigma, "SV prior scale for sigma^2");
    auto* ev_seed = cev->add_option("--seed", ev.seed, "RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        sim.seed_given = sim_seed->count() > 0;
        fit.seed_given = fit_seed->count() > 0;
        reg.seed_given = reg_seed->count() > 0;
        ev.seed_given = ev_seed->count() > 0;
        if (csim->parsed()) return cmd_simulate(sim);
        if (cfit->parsed()) return cmd_fit(fit);
        if (creg->parsed()) return cmd_regress(reg);
        if (cev->parsed()) return cmd_evaluate(ev);
        throw validation_error("no subcommand given");
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
