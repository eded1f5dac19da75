#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "bps/diagnostics.hpp"
#include "bps/harness/config.hpp"
#include "bps/trace.hpp"
#include "bps/version.hpp"

namespace bps {

struct ChainResult {
    std::uint64_t seed = 0;
    std::vector<SampleTrace> traces;  // one entry, or one per tempering slot
    LadderReport report;              // tempering only
    EventCounts events;
    double wall_seconds = 0.0;
    std::vector<std::string> files;
};

struct RunResult {
    RunConfig config;
    std::vector<ChainResult> chains;
    double wall_seconds = 0.0;
    std::string summary_path;
};

namespace detail {

inline int worker_count(int chains) {
    if (const char* env = std::getenv("BPS_WORKERS")) {
        int n = std::atoi(env);
        if (n >= 1) return std::min(n, chains);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return std::min(chains, hw == 0 ? 1 : static_cast<int>(hw));
}

inline ChainResult run_one_chain(const RunConfig& cfg, const TargetModel& model, int chain) {
    ChainResult res;
    res.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(chain));
    BpsConfig bc = cfg.chain_config(res.seed);
    std::unique_ptr<DiscreteKernel> kernel;
    if (cfg.uses_kernel()) kernel = make_kernel(cfg.kernel);

    auto t0 = std::chrono::steady_clock::now();
    if (cfg.sampler == "bps") {
        res.traces.push_back(run_bps_continuous(model, bc));
        res.events = res.traces[0].events;
    } else if (cfg.sampler == "bps-mixed") {
        res.traces.push_back(run_bps_mixed(model, *kernel, bc));
        res.events = res.traces[0].events;
    } else if (cfg.sampler == "bpspt-finite") {
        PtResult pt = run_bpspt_finite(model, kernel.get(), cfg.ladder, cfg.alpha_s, bc);
        res.traces = std::move(pt.traces);
        res.report = pt.report;
        res.events = pt.events;
    } else {  // bpspt-infinite
        PtResult pt = run_bpspt_infinite(model, kernel.get(), cfg.ladder, cfg.partitions, bc);
        res.traces = std::move(pt.traces);
        res.report = pt.report;
        res.events = pt.events;
    }
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

inline std::string chain_file_name(int chain, int slot, bool tempering) {
    char buf[64];
    if (tempering)
        std::snprintf(buf, sizeof buf, "chain%02d_slot%02d.csv", chain, slot);
    else
        std::snprintf(buf, sizeof buf, "chain%02d.csv", chain);
    return buf;
}

inline json events_to_json(const EventCounts& e) {
    return {{"bounces", e.bounces},
            {"jumps", e.jumps},
            {"refreshes", e.refreshes},
            {"proposals", e.proposals},
            {"rejections", e.rejections},
            {"exchanges_proposed", e.exchanges_proposed},
            {"exchanges_accepted", e.exchanges_accepted},
            {"permutation_draws", e.permutation_draws}};
}

}  // namespace detail

// Runs every chain of `cfg` (worker pool sized by hardware or BPS_WORKERS),
// writes one CSV per chain (per slot for tempering runs) plus summary.json
// into the output directory.  Results do not depend on the worker count:
// each chain is seeded independently from the run seed.
inline RunResult run_experiment(const RunConfig& cfg, int workers_override = 0) {
    auto model = make_model(cfg);
    auto t0 = std::chrono::steady_clock::now();

    std::vector<ChainResult> chains(cfg.num_chains);
    std::vector<std::string> errors(cfg.num_chains);
    std::atomic<int> next{0};
    int workers = workers_override >= 1 ? std::min(workers_override, cfg.num_chains)
                                        : detail::worker_count(cfg.num_chains);
    auto body = [&] {
        for (;;) {
            int c = next.fetch_add(1);
            if (c >= cfg.num_chains) return;
            try {
                chains[c] = detail::run_one_chain(cfg, *model, c);
            } catch (const std::exception& e) {
                errors[c] = e.what();
            }
        }
    };
    if (workers <= 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& th : pool) th.join();
    }
    for (int c = 0; c < cfg.num_chains; ++c)
        if (!errors[c].empty())
            throw std::runtime_error("chain " + std::to_string(c) + " failed: " + errors[c]);

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    // A failed create_directories on an existing dir is fine; write errors
    // below are what actually signal an unusable output directory.

    const bool tempering = cfg.is_tempering();
    for (int c = 0; c < cfg.num_chains; ++c) {
        for (std::size_t slot = 0; slot < chains[c].traces.size(); ++slot) {
            std::string name = detail::chain_file_name(c, static_cast<int>(slot), tempering);
            std::string path = (fs::path(cfg.out_dir) / name).string();
            write_trace_csv(chains[c].traces[slot], path);
            chains[c].files.push_back(name);
        }
    }

    RunResult out;
    out.config = cfg;
    out.chains = std::move(chains);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json summary;
    summary["version"] = kVersion;
    summary["config"] = config_to_json(cfg);
    summary["sampling_interval"] = cfg.sampling_interval();
    summary["wall_seconds"] = out.wall_seconds;
    summary["workers"] = workers;
    json jchains = json::array();
    EventCounts total;
    for (int c = 0; c < cfg.num_chains; ++c) {
        const ChainResult& r = out.chains[c];
        json jc;
        jc["chain"] = c;
        jc["seed"] = r.seed;
        jc["wall_seconds"] = r.wall_seconds;
        jc["files"] = r.files;
        jc["events"] = detail::events_to_json(r.events);
        if (tempering) {
            json lad;
            lad["betas"] = r.report.betas;
            lad["mean_effective_beta"] = r.report.mean_effective_beta;
            lad["epochs"] = r.report.epochs;
            lad["sigma_draws"] = r.report.sigma_draws;
            lad["sigma_nonidentity"] = r.report.sigma_nonidentity;
            lad["exchanges_proposed"] = r.report.exchanges_proposed;
            lad["exchanges_accepted"] = r.report.exchanges_accepted;
            jc["ladder"] = lad;
        }
        jchains.push_back(jc);
        total += r.events;
    }
    summary["chains"] = jchains;
    summary["events_total"] = detail::events_to_json(total);

    std::string spath = (fs::path(cfg.out_dir) / "summary.json").string();
    std::ofstream sf(spath, std::ios::binary);
    if (!sf) throw DataError("cannot write summary: " + spath);
    sf << summary.dump(2) << "\n";
    out.summary_path = spath;

    // Per-chain event and timing table, one row per chain.
    std::string rpath = (fs::path(cfg.out_dir) / "run_stats.csv").string();
    std::ofstream rf(rpath, std::ios::binary);
    if (!rf) throw DataError("cannot write " + rpath);
    rf << "chain,seed,wall_seconds,bounces,jumps,refreshes,proposals,rejections,"
          "exchanges_proposed,exchanges_accepted,permutation_draws\n";
    for (int c = 0; c < cfg.num_chains; ++c) {
        const ChainResult& r = out.chains[c];
        std::string w;
        detail::append_double(w, r.wall_seconds);
        rf << c << ',' << r.seed << ',' << w << ',' << r.events.bounces << ','
           << r.events.jumps << ',' << r.events.refreshes << ',' << r.events.proposals << ','
           << r.events.rejections << ',' << r.events.exchanges_proposed << ','
           << r.events.exchanges_accepted << ',' << r.events.permutation_draws << '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Post-hoc diagnostics against a reference sample
// ---------------------------------------------------------------------------

struct DiagnoseOptions {
    std::vector<std::string> trace_files;  // explicit traces (target-temperature)
    std::string trace_dir;                 // or scan: prefers chain*_slot00.csv
    std::string target;                    // reference via the model's exact sampler
    json target_params;
    std::string reference_file;  // or an explicit reference trace CSV
    int ref_samples = 0;         // 0: match the per-chain trace length
    std::uint64_t ref_seed = 99991;
    std::string out_dir;  // optional report destination
};

struct DiagnosticsReport {
    std::vector<std::string> traces;
    std::size_t samples_per_chain = 0;
    std::vector<double> ks_per_dim;  // chain-averaged, final sample count
    double ks_max = 0.0;
    double ess_min = 0.0;
    double ess_min_per_sample = 0.0;
    std::vector<std::pair<std::size_t, double>> ks_curve;  // (prefix n, max-dim KS)
    // Discrete-marginal diagnostics, when the target defines them.
    std::vector<double> discrete_est, discrete_ref;
    double kld = std::numeric_limits<double>::quiet_NaN();
    double mse = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline std::vector<std::string> find_trace_files(const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<std::string> slot0, plain;
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string n = e.path().filename().string();
        if (n.size() < 5 || n.substr(n.size() - 4) != ".csv" || n.rfind("chain", 0) != 0)
            continue;
        if (n.find("_slot") != std::string::npos) {
            if (n.find("_slot00") != std::string::npos) slot0.push_back(e.path().string());
        } else {
            plain.push_back(e.path().string());
        }
    }
    auto& chosen = slot0.empty() ? plain : slot0;
    std::sort(chosen.begin(), chosen.end());
    if (chosen.empty()) throw DataError("no chain*.csv traces found in " + dir);
    return chosen;
}

// Per-bit occupancy for bitmask-coded discrete states.
inline std::vector<double> bit_marginals(const std::vector<int>& ys, int bits) {
    std::vector<double> p(bits, 0.0);
    for (int y : ys)
        for (int i = 0; i < bits; ++i)
            if (y & (1 << i)) p[i] += 1.0;
    for (double& v : p) v /= static_cast<double>(ys.size());
    return p;
}

}  // namespace detail

inline DiagnosticsReport diagnose(const DiagnoseOptions& opt) {
    DiagnosticsReport rep;
    rep.traces = opt.trace_files;
    if (rep.traces.empty() && !opt.trace_dir.empty())
        rep.traces = detail::find_trace_files(opt.trace_dir);
    if (rep.traces.empty()) throw ConfigError("diagnose needs trace files or a trace dir");

    std::vector<SampleTrace> chains;
    for (const auto& f : rep.traces) chains.push_back(read_trace_csv(f));
    const int dim = chains[0].dim;
    const std::size_t n = chains[0].size();
    for (const auto& c : chains)
        if (c.dim != dim || c.size() != n)
            throw DataError("diagnose: traces disagree in shape");
    if (n < 10) throw DataError("diagnose: traces too short");
    rep.samples_per_chain = n;

    // Reference sample: explicit file, or the named target's exact sampler.
    std::unique_ptr<TargetModel> model;
    SampleTrace ref;
    if (!opt.reference_file.empty()) {
        ref = read_trace_csv(opt.reference_file);
        if (ref.dim != dim) throw DataError("reference dimension mismatch");
    } else if (!opt.target.empty()) {
        RunConfig mc;
        mc.target = opt.target;
        mc.target_params = opt.target_params;
        model = make_model(mc);
        if (!model->has_exact_sampler())
            throw ConfigError("target has no exact sampler; pass a reference file");
        if (model->dim() != dim) throw DataError("reference dimension mismatch");
        RngStream rng(opt.ref_seed);
        // Two-sample KS bands assume comparable sizes, so the reference set
        // defaults to the trace length.
        int m = opt.ref_samples > 0 ? opt.ref_samples : static_cast<int>(n);
        ref.dim = dim;
        ref.reserve(m);
        Vec none;
        for (int i = 0; i < m; ++i) {
            MixedState s = model->exact_draw(rng);
            ref.push_row(i + 1.0, s.x, s.y, none);
        }
    } else {
        throw ConfigError("diagnose needs --target or --reference");
    }

    // KS curve over prefixes (log-spaced), chain-averaged, max over dims.
    std::vector<std::size_t> grid;
    for (std::size_t g = 10; g < n; g = g * 3 / 2 + 1) grid.push_back(g);
    grid.push_back(n);
    std::vector<std::vector<double>> ref_cols(dim);
    for (int d = 0; d < dim; ++d) ref_cols[d] = ref.x_column(d);

    rep.ks_per_dim.assign(dim, 0.0);
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        std::size_t g = grid[gi];
        double ksmax = 0.0;
        for (int d = 0; d < dim; ++d) {
            double acc = 0.0;
            for (const auto& c : chains) {
                std::vector<double> prefix(c.xs.begin(),
                                           c.xs.begin() + static_cast<std::ptrdiff_t>(g) * dim);
                std::vector<double> col(g);
                for (std::size_t i = 0; i < g; ++i) col[i] = prefix[i * dim + d];
                acc += ks_two_sample(col, ref_cols[d]);
            }
            acc /= static_cast<double>(chains.size());
            if (g == n) rep.ks_per_dim[d] = acc;
            ksmax = std::max(ksmax, acc);
        }
        rep.ks_curve.emplace_back(g, ksmax);
    }
    rep.ks_max = rep.ks_curve.back().second;

    // Minimum per-chain per-component ESS.
    double ess_min = std::numeric_limits<double>::infinity();
    for (const auto& c : chains)
        for (int d = 0; d < dim; ++d)
            ess_min = std::min(ess_min, ess(c.x_column(d)).ess);
    rep.ess_min = ess_min;
    rep.ess_min_per_sample = ess_min / static_cast<double>(n);

    // Discrete-state diagnostics where the model defines exact marginals.
    if (model) {
        std::vector<int> pooled;
        for (const auto& c : chains) pooled.insert(pooled.end(), c.ys.begin(), c.ys.end());
        if (model->has_state_marginals()) {
            rep.discrete_ref = model->state_marginals();
            rep.discrete_est = cluster_probabilities(pooled, model->num_states());
            rep.kld = kld_discrete(rep.discrete_ref, rep.discrete_est);
            rep.mse = mse_discrete(rep.discrete_est, rep.discrete_ref);
        } else if (model->name() == "neal") {
            // Bits are exchangeable with marginal exactly 1/2.
            rep.discrete_est = detail::bit_marginals(pooled, NealFunnelModel::kBits);
            rep.discrete_ref.assign(NealFunnelModel::kBits, 0.5);
            rep.mse = mse_discrete(rep.discrete_est, rep.discrete_ref);
        }
    }

    if (!opt.out_dir.empty()) {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(opt.out_dir, ec);
        json j;
        j["version"] = kVersion;
        j["traces"] = rep.traces;
        j["samples_per_chain"] = rep.samples_per_chain;
        j["ks_per_dim"] = rep.ks_per_dim;
        j["ks_max"] = rep.ks_max;
        j["ess_min"] = rep.ess_min;
        j["ess_min_per_sample"] = rep.ess_min_per_sample;
        if (!rep.discrete_est.empty()) {
            j["discrete_est"] = rep.discrete_est;
            j["discrete_ref"] = rep.discrete_ref;
            if (std::isfinite(rep.kld)) j["kld"] = rep.kld;
            if (std::isfinite(rep.mse)) j["mse"] = rep.mse;
        }
        std::string jpath = (fs::path(opt.out_dir) / "diagnostics.json").string();
        std::ofstream jf(jpath, std::ios::binary);
        if (!jf) throw DataError("cannot write " + jpath);
        jf << j.dump(2) << "\n";

        std::string cpath = (fs::path(opt.out_dir) / "ks_curve.csv").string();
        std::ofstream cf(cpath, std::ios::binary);
        if (!cf) throw DataError("cannot write " + cpath);
        cf << "n,ks_max\n";
        for (auto [g, v] : rep.ks_curve) {
            cf << g << ',';
            std::string s;
            detail::append_double(s, v);
            cf << s << '\n';
        }
    }
    return rep;
}

}  // namespace bps
