#include "dch/evaluation.hpp"
#include "dch/experiment.hpp"
#include "dch/io.hpp"
#include "dch/kernels.hpp"
#include "dch/pipeline.hpp"
#include "dch/rng.hpp"
#include "dch/simulate.hpp"
#include "dch/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using nlohmann::json;

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    json j;
    in >> j;
    return j;
}

std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

template <typename T>
T config_or(const json& j, const std::string& key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

dch::DatasetSpec dataset_from_config(const json& j) {
    dch::DatasetSpec spec;
    spec.path = j.at("events").get<std::string>();
    spec.sender_col = config_or(j, "sender_col", 0);
    spec.receiver_col = config_or(j, "receiver_col", 1);
    spec.time_col = config_or(j, "time_col", 2);
    spec.scale_to_1000 = config_or(j, "scale_to_1000", false);
    if (j.contains("test_event_count")) spec.test_event_count = j.at("test_event_count").get<int>();
    if (j.contains("test_fraction")) spec.test_fraction = j.at("test_fraction").get<double>();
    spec.drop_self_edges = config_or(j, "drop_self_edges", true);
    return spec;
}

dch::FitOptions fit_options_from_config(const json& j) {
    dch::FitOptions opt;
    opt.variant = dch::sr_variant_from_string(
        config_or<std::string>(j, "variant", "restricted_r"));
    opt.refine = config_or(j, "refine", false);
    opt.refine_sweeps = config_or(j, "refine_sweeps", 1);
    opt.estimate_beta = config_or(j, "estimate_beta", true);
    opt.init_beta = config_or(j, "init_beta", 1.0);
    opt.seed = config_or<std::uint64_t>(j, "seed", 1);
    opt.spectral.kmeans_restarts = config_or(j, "kmeans_restarts", 10);
    return opt;
}

int do_simulate(const std::string& config_path, std::uint64_t seed_override, int replicates_cli) {
    const json cfg = load_config(config_path);
    const dch::ParamFile pf = dch::read_params(cfg.at("params").get<std::string>());
    const int n = cfg.at("n").get<int>();
    const double T = cfg.at("T").get<double>();
    const std::string out_prefix = config_or<std::string>(cfg, "output", "sim");

    dch::SimConfig sim;
    sim.seed = seed_override ? seed_override : config_or<std::uint64_t>(cfg, "seed", 1);
    sim.replicates = replicates_cli > 0 ? replicates_cli : config_or(cfg, "replicates", 1);
    sim.allow_self_edges = config_or(cfg, "allow_self_edges", false);
    sim.burn_in = config_or(cfg, "burn_in", 0.0);

    dch::Membership z =
        cfg.contains("membership")
            ? dch::read_membership(cfg.at("membership").get<std::string>())
            : dch::Membership::balanced(n, pf.family == dch::ModelFamily::mulch ? pf.mulch().K()
                                                                                : pf.sr().K());

    for (int rep = 0; rep < sim.replicates; ++rep) {
        dch::SimConfig rep_cfg = sim;
        rep_cfg.seed = dch::derive_seed(sim.seed, {static_cast<std::uint64_t>(rep)});
        dch::EventLog log;
        if (pf.family == dch::ModelFamily::mulch)
            log = dch::simulate_mulch(pf.mulch(), z, T, rep_cfg);
        else
            log = dch::simulate(pf.family, pf.sr(), z, T, rep_cfg);
        const std::string stem =
            sim.replicates == 1 ? out_prefix : out_prefix + "_r" + std::to_string(rep);
        dch::write_events_csv(log, stem + ".csv", true);
        const std::string counts = config_or<std::string>(cfg, "count_matrix", "");
        if (counts == "dense" || counts == "both")
            dch::write_count_matrix_dense(dch::count_matrix(log), stem + ".counts.csv");
        if (counts == "coo" || counts == "both")
            dch::write_count_matrix_coo(dch::count_matrix(log), stem + ".counts_coo.csv");
        json meta;
        meta["model"] = dch::to_string(pf.family);
        meta["params"] = cfg.at("params");
        meta["n"] = n;
        meta["T"] = T;
        meta["seed"] = rep_cfg.seed;
        meta["master_seed"] = sim.seed;
        meta["replicate"] = rep;
        meta["events"] = log.size();
        meta["allow_self_edges"] = sim.allow_self_edges;
        meta["burn_in"] = sim.burn_in;
        meta["rng"] = dch::kRngName;
        meta["version"] = dch::kVersion;
        std::ofstream(stem + ".meta.json") << meta.dump(2) << '\n';
        std::cout << stem << ".csv: " << log.size() << " events\n";
    }
    return 0;
}

int do_fit(const std::string& config_path) {
    const json cfg = load_config(config_path);
    const dch::IngestResult data = dch::ingest(dataset_from_config(cfg));
    const int K = cfg.at("K").get<int>();
    const dch::FitOptions opt = fit_options_from_config(cfg);
    const dch::FitResult fit = dch::fit_pipeline(data.train, K, opt);

    const std::string out_prefix = config_or<std::string>(cfg, "output", "fit");
    dch::ParamFile pf;
    pf.family = dch::ModelFamily::sr;
    pf.params = fit.params;
    std::vector<std::string> notes = {
        std::string("fitted by dch ") + dch::kVersion,
        "train_loglik = " + std::to_string(fit.train_loglik),
        "seconds = " + std::to_string(fit.seconds_cluster + fit.seconds_estimate +
                                      fit.seconds_refine)};
    dch::write_params(pf, out_prefix + ".params", notes);
    dch::write_membership(fit.membership, out_prefix + ".membership");

    json report;
    report["K"] = K;
    report["train_loglik"] = fit.train_loglik;
    report["sigma_star"] = fit.diag.sigma_star;
    report["gamma_max"] = fit.diag.gamma_max;
    report["lambda_K"] = fit.diag.lambda_K;
    report["seconds_cluster"] = fit.seconds_cluster;
    report["seconds_estimate"] = fit.seconds_estimate;
    report["seconds_refine"] = fit.seconds_refine;
    report["refine_changed"] = fit.refine_changed;
    report["pooled_fallbacks"] = fit.pooled_fallbacks;
    json gmm = json::array();
    for (const auto& g : fit.gmm) {
        gmm.push_back({{"a", g.theta.a},
                       {"b", g.theta.b},
                       {"objective", g.objective},
                       {"converged", g.converged},
                       {"evaluations", g.evaluations}});
    }
    report["gmm"] = gmm;
    std::ofstream(out_prefix + ".report.json") << report.dump(2) << '\n';
    std::cout << "train loglik " << fit.train_loglik << ", wrote " << out_prefix << ".params\n";
    return 0;
}

int do_eval(const std::string& config_path) {
    const json cfg = load_config(config_path);
    const dch::IngestResult data = dch::ingest(dataset_from_config(cfg));
    if (data.test.empty()) throw std::runtime_error("eval: dataset config defines no test split");
    const dch::ParamFile pf = dch::read_params(cfg.at("params").get<std::string>());
    if (pf.family == dch::ModelFamily::mulch)
        throw std::runtime_error("eval: held-out evaluation supports the SR family");
    dch::Membership z = dch::read_membership(cfg.at("membership").get<std::string>());
    z = dch::assign_inactive_to_largest_block(z, data.train);

    json out;
    out["dataset"] = cfg.at("events").get<std::string>();
    out["model"] = dch::to_string(pf.family) + "/" + dch::to_string(pf.sr().variant);
    out["K"] = z.K;
    out["config_hash"] = file_hash(config_path);
    out["test_loglik_per_event"] =
        dch::test_loglik_per_event(data.train, data.test, pf.sr(), z);
    if (cfg.contains("delta")) {
        dch::EvalConfig ecfg;
        ecfg.delta = cfg.at("delta").get<double>();
        ecfg.n_intervals = config_or(cfg, "n_intervals", 100);
        ecfg.seed = config_or<std::uint64_t>(cfg, "seed", 1);
        ecfg.test_start = data.train.horizon_T;
        dch::EventLog all = data.train;
        all.events.insert(all.events.end(), data.test.events.begin(), data.test.events.end());
        all.horizon_T = data.test.horizon_T;
        const dch::AucResult auc = dch::dynamic_link_auc(all, pf.sr(), z, ecfg);
        out["auc_mean"] = auc.mean;
        out["auc_std"] = auc.stddev;
        out["auc_intervals"] = auc.used_intervals;
        out["auc_skipped"] = auc.skipped_intervals;
    }
    out["test_events"] = data.test.size();
    out["version"] = dch::kVersion;
    const std::string out_path = config_or<std::string>(cfg, "output", "eval.json");
    std::ofstream(out_path) << out.dump(2) << '\n';
    std::cout << out.dump(2) << '\n';
    return 0;
}

int do_select_k(const std::string& config_path) {
    const json cfg = load_config(config_path);
    const dch::IngestResult data = dch::ingest(dataset_from_config(cfg));
    const std::vector<int> K_list = cfg.at("K_list").get<std::vector<int>>();
    const dch::FitOptions opt = fit_options_from_config(cfg);
    const dch::SelectKResult sel = dch::select_K(data.train, data.test, K_list, opt);
    std::cout << "K,test_loglik_per_event\n";
    for (const auto& [K, ll] : sel.table) std::cout << K << ',' << ll << '\n';
    std::cout << "best_K," << sel.best_K << '\n';
    if (cfg.contains("output")) {
        std::ofstream outf(cfg.at("output").get<std::string>());
        outf << "K,test_loglik_per_event\n";
        for (const auto& [K, ll] : sel.table) outf << K << ',' << ll << '\n';
    }
    return 0;
}

int do_experiment(const std::string& config_path, const std::string& preset_name, int threads,
                  const std::string& outdir) {
    dch::ExperimentSpec spec;
    if (!preset_name.empty()) {
        spec = dch::experiment_preset(preset_name);
    } else {
        const json cfg = load_config(config_path);
        if (cfg.contains("preset")) {
            spec = dch::experiment_preset(cfg.at("preset").get<std::string>());
        } else {
            spec.name = config_or<std::string>(cfg, "name", "custom");
            spec.model = config_or<std::string>(cfg, "model", "sr");
            spec.params_path = config_or<std::string>(cfg, "params", "");
        }
        const json cfg2 = load_config(config_path);
        if (cfg2.contains("n_grid")) spec.n_grid = cfg2.at("n_grid").get<std::vector<int>>();
        if (cfg2.contains("K_grid")) spec.K_grid = cfg2.at("K_grid").get<std::vector<int>>();
        if (cfg2.contains("T_grid")) spec.T_grid = cfg2.at("T_grid").get<std::vector<double>>();
        if (cfg2.contains("s_grid")) spec.s_grid = cfg2.at("s_grid").get<std::vector<double>>();
        if (cfg2.contains("replicates")) spec.replicates = cfg2.at("replicates").get<int>();
        if (cfg2.contains("seed")) spec.seed = cfg2.at("seed").get<std::uint64_t>();
    }
    if (!outdir.empty()) spec.output_dir = outdir;
    if (threads > 0) spec.threads = threads;

    const dch::ExperimentOutcome out = dch::run_experiment(spec);
    std::cout << "cells: " << out.total_cells << ", failed: " << out.failed_cells << '\n'
              << "results: " << out.results_csv << '\n'
              << "summary: " << out.summary_csv << '\n'
              << "manifest: " << out.manifest_path << '\n';
    return out.failed_cells == out.total_cells ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dch: simulation and inference for dependent community Hawkes models"};
    app.set_version_flag("--version", std::string(dch::kVersion));
    app.require_subcommand(1);

    std::string config, preset, outdir;
    std::uint64_t seed = 0;
    int threads = 0, replicates = 0;

    auto* sim = app.add_subcommand("simulate", "sample event logs from a model");
    sim->add_option("--config", config, "JSON config")->required();
    sim->add_option("--seed", seed, "override the master seed");
    sim->add_option("--replicates", replicates, "override the replicate count");

    auto* fit = app.add_subcommand("fit", "spectral clustering + GMM + beta MLE");
    fit->add_option("--config", config, "JSON config")->required();

    auto* ev = app.add_subcommand("eval", "held-out log-likelihood and link prediction");
    ev->add_option("--config", config, "JSON config")->required();

    auto* sk = app.add_subcommand("select-k", "pick K by held-out log-likelihood");
    sk->add_option("--config", config, "JSON config")->required();

    auto* ex = app.add_subcommand("experiment", "run a simulation-study grid");
    ex->add_option("--config", config, "JSON config");
    ex->add_option("--preset", preset, "fig2 | fig3 | fig4 | fig5");
    ex->add_option("--threads", threads, "concurrency cap");
    ex->add_option("--outdir", outdir, "output directory");

    auto* info = app.add_subcommand("info", "print build info");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return do_simulate(config, seed, replicates);
        if (fit->parsed()) return do_fit(config);
        if (ev->parsed()) return do_eval(config);
        if (sk->parsed()) return do_select_k(config);
        if (ex->parsed()) return do_experiment(config, preset, threads, outdir);
        if (info->parsed()) {
            std::cout << "dch " << dch::kVersion << ", kernels: " << dch::kernels::isa_name()
                      << ", rng: " << dch::kRngName << '\n';
            return 0;
        }
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
