// End-to-end exercise of the command-line surface: simulate -> fit -> eval
// -> select-k -> experiment, all through the installed binary.

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& cmd) {
    std::printf("$ %s\n", cmd.c_str());
    std::fflush(stdout);
    return std::system(cmd.c_str());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

int fail(const char* what) {
    std::fprintf(stderr, "cli test failed: %s\n", what);
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) return fail("usage: test_cli <path-to-dch-binary>");
    const std::string cli = argv[1];
    const fs::path dir = fs::temp_directory_path() / "dch_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto p = [&](const char* name) { return (dir / name).string(); };

    if (run(cli + " info") != 0) return fail("info");
    if (run(cli + " --version") != 0) return fail("version");

    // parameter file for a strong two-block SR model
    write_text(p("model.params"),
               "model = sr\n"
               "variant = restricted_r\n"
               "K = 2\n"
               "M = 0.02 0.004 0.004 0.02\n"
               "alpha_n = 0.2 0.05 0.05 0.2\n"
               "alpha_r = 0.2 0.05 0.05 0.2\n"
               "beta_n = 1 1 1 1\n"
               "beta_r = 1 1 1 1\n");

    nlohmann::json sim_cfg;
    sim_cfg["params"] = p("model.params");
    sim_cfg["n"] = 30;
    sim_cfg["T"] = 400.0;
    sim_cfg["seed"] = 42;
    sim_cfg["output"] = p("sim");
    write_text(p("sim.json"), sim_cfg.dump());
    if (run(cli + " simulate --config " + p("sim.json")) != 0) return fail("simulate");
    if (!fs::exists(p("sim.csv")) || !fs::exists(p("sim.meta.json"))) return fail("simulate outputs");

    if (run(cli + " simulate --config " + p("sim.json") + " --replicates 2 --seed 9") != 0)
        return fail("simulate replicates");
    if (!fs::exists(p("sim_r0.csv")) || !fs::exists(p("sim_r1.meta.json")))
        return fail("replicate outputs");

    nlohmann::json fit_cfg;
    fit_cfg["events"] = p("sim.csv");
    fit_cfg["K"] = 2;
    fit_cfg["test_event_count"] = 200;
    fit_cfg["seed"] = 7;
    fit_cfg["output"] = p("fit");
    write_text(p("fit.json"), fit_cfg.dump());
    if (run(cli + " fit --config " + p("fit.json")) != 0) return fail("fit");
    if (!fs::exists(p("fit.params")) || !fs::exists(p("fit.membership")) ||
        !fs::exists(p("fit.report.json")))
        return fail("fit outputs");

    nlohmann::json eval_cfg;
    eval_cfg["events"] = p("sim.csv");
    eval_cfg["params"] = p("fit.params");
    eval_cfg["membership"] = p("fit.membership");
    eval_cfg["test_event_count"] = 200;
    eval_cfg["delta"] = 10.0;
    eval_cfg["n_intervals"] = 20;
    eval_cfg["output"] = p("eval.json");
    write_text(p("eval_cfg.json"), eval_cfg.dump());
    if (run(cli + " eval --config " + p("eval_cfg.json")) != 0) return fail("eval");
    {
        std::ifstream in(p("eval.json"));
        nlohmann::json out;
        in >> out;
        if (!out.contains("test_loglik_per_event") || !out.contains("auc_mean"))
            return fail("eval output fields");
        if (!(out["auc_mean"].get<double>() > 0.5)) return fail("eval AUC should beat chance");
    }

    nlohmann::json sk_cfg;
    sk_cfg["events"] = p("sim.csv");
    sk_cfg["K_list"] = {1, 2};
    sk_cfg["test_event_count"] = 200;
    sk_cfg["output"] = p("selectk.csv");
    write_text(p("sk.json"), sk_cfg.dump());
    if (run(cli + " select-k --config " + p("sk.json")) != 0) return fail("select-k");
    if (!fs::exists(p("selectk.csv"))) return fail("select-k output");

    nlohmann::json exp_cfg;
    exp_cfg["preset"] = "fig3";
    exp_cfg["n_grid"] = {16};
    exp_cfg["T_grid"] = {60.0};
    exp_cfg["s_grid"] = {0.0, 0.4};
    exp_cfg["K_grid"] = {2};
    exp_cfg["replicates"] = 2;
    write_text(p("exp.json"), exp_cfg.dump());
    if (run(cli + " experiment --config " + p("exp.json") + " --outdir " + p("exp")) != 0)
        return fail("experiment");
    if (!fs::exists(dir / "exp" / "fig3_results.csv")) return fail("experiment outputs");

    if (run(cli + " fit --config " + p("missing.json") + " 2>/dev/null") == 0)
        return fail("missing config should not exit 0");

    std::printf("cli end-to-end: ok\n");
    fs::remove_all(dir);
    return 0;
}
