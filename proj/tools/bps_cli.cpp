// Command-line front end: run experiments (by preset or config file),
// validate configs, list presets, and diagnose traces against a reference.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bps/harness/config.hpp"
#include "bps/harness/runner.hpp"
#include "bps/version.hpp"

namespace {

bps::json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw bps::DataError("cannot open config file: " + path);
    bps::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw bps::DataError(std::string("config is not valid JSON: ") + e.what());
    }
    return j;
}

bps::RunConfig resolve_config(const std::string& config_path, const std::string& preset_name) {
    if (config_path.empty() == preset_name.empty())
        throw bps::ConfigError("pass exactly one of --config or --preset");
    if (!config_path.empty()) return bps::parse_run_config(load_json(config_path));
    return bps::find_preset(preset_name).config;
}

int run_cmd(const std::string& config_path, const std::string& preset_name, bool desk,
            std::uint64_t seed, bool seed_set, int chains, int samples,
            const std::string& out_dir, int workers) {
    bps::RunConfig cfg = resolve_config(config_path, preset_name);
    if (desk) cfg = bps::desk_scale(cfg);
    if (seed_set) cfg.seed = seed;
    if (chains > 0) cfg.num_chains = chains;
    if (samples > 0) cfg.num_samples = samples;
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    bps::RunResult res = bps::run_experiment(cfg, workers);
    bps::EventCounts ev;
    for (const auto& c : res.chains) ev += c.events;
    std::printf("sampler %s on %s: %d chains x %d samples in %.1fs\n", cfg.sampler.c_str(),
                cfg.target.c_str(), cfg.num_chains, cfg.num_samples, res.wall_seconds);
    std::printf("events: %llu bounces, %llu jumps, %llu refreshes, %llu proposals\n",
                (unsigned long long)ev.bounces, (unsigned long long)ev.jumps,
                (unsigned long long)ev.refreshes, (unsigned long long)ev.proposals);
    std::printf("wrote %s\n", res.summary_path.c_str());
    return 0;
}

int validate_cmd(const std::string& config_path) {
    bps::parse_run_config(load_json(config_path));
    std::printf("config ok\n");
    return 0;
}

int list_cmd() {
    for (const auto& p : bps::presets()) {
        const auto& c = p.config;
        std::printf("%-14s %s\n", p.name.c_str(), p.summary.c_str());
        std::printf("%-14s   target=%s sampler=%s samples=%d chains=%d alpha_b=%g alpha_j=%g "
                    "lambda_ref=%g\n",
                    "", c.target.c_str(), c.sampler.c_str(), c.num_samples, c.num_chains,
                    c.rates.alpha_b, c.rates.alpha_j, c.rates.lambda_ref);
    }
    return 0;
}

int diagnose_cmd(const bps::DiagnoseOptions& opt) {
    bps::DiagnosticsReport rep = bps::diagnose(opt);
    std::printf("chains: %zu, samples per chain: %zu\n", rep.traces.size(),
                rep.samples_per_chain);
    std::printf("max KS vs reference: %.4f\n", rep.ks_max);
    std::printf("min ESS: %.1f (%.4g per sample)\n", rep.ess_min, rep.ess_min_per_sample);
    if (!rep.discrete_est.empty()) {
        if (std::isfinite(rep.kld)) std::printf("discrete KLD: %.4g\n", rep.kld);
        if (std::isfinite(rep.mse)) std::printf("discrete MSE: %.4g\n", rep.mse);
    }
    if (!opt.out_dir.empty()) std::printf("wrote %s/diagnostics.json\n", opt.out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-driven piecewise-deterministic sampler with parallel tempering"};
    app.set_version_flag("--version", bps::kVersion);
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run an experiment");
    std::string config_path, preset_name, out_dir;
    bool desk = false;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int chains = 0, samples = 0, workers = 0;
    run->add_option("--config", config_path, "JSON run configuration");
    run->add_option("--preset", preset_name, "built-in configuration name");
    run->add_flag("--desk-scale", desk, "shrink to a tenth of the samples");
    run->add_option("--seed", seed, "override the run seed")->each([&](const std::string&) {
        seed_set = true;
    });
    run->add_option("--chains", chains, "override the chain count");
    run->add_option("--samples", samples, "override samples per chain");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--workers", workers, "worker threads (default: hardware, or BPS_WORKERS)");

    // validate-config
    auto* val = app.add_subcommand("validate-config", "check a config file and report problems");
    std::string val_path;
    val->add_option("--config", val_path, "JSON run configuration")->required();

    // list-presets
    auto* list = app.add_subcommand("list-presets", "show built-in configurations");

    // diagnose
    auto* diag = app.add_subcommand("diagnose", "compare traces against a reference sample");
    bps::DiagnoseOptions opt;
    std::string params_json;
    diag->add_option("--trace", opt.trace_files, "trace CSV (repeatable)");
    diag->add_option("--dir", opt.trace_dir, "directory of chain*.csv traces");
    diag->add_option("--target", opt.target, "reference target (exact sampler)");
    diag->add_option("--target-params", params_json, "JSON object of family parameters");
    diag->add_option("--reference", opt.reference_file, "reference sample CSV");
    diag->add_option("--ref-samples", opt.ref_samples,
                     "reference draw count (0: match the trace length)");
    diag->add_option("--ref-seed", opt.ref_seed, "reference sampler seed");
    diag->add_option("--out", opt.out_dir, "where to write diagnostics.json and ks_curve.csv");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return run_cmd(config_path, preset_name, desk, seed, seed_set, chains, samples,
                           out_dir, workers);
        if (val->parsed()) return validate_cmd(val_path);
        if (list->parsed()) return list_cmd();
        if (diag->parsed()) {
            if (!params_json.empty()) opt.target_params = bps::json::parse(params_json);
            return diagnose_cmd(opt);
        }
    } catch (const bps::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const bps::DataError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
