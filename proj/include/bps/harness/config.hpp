#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bps/errors.hpp"
#include "bps/kernels.hpp"
#include "bps/model.hpp"
#include "bps/models/gmm.hpp"
#include "bps/models/neal.hpp"
#include "bps/models/toy.hpp"
#include "bps/sim.hpp"
#include "bps/tempering.hpp"

namespace bps {

using json = nlohmann::json;

// A fully specified multi-chain run.  Slot indices in partition/ladder
// fields are 0-based internally; config files use 1-based slots (slot 1 =
// the target temperature), matching how ladders are usually written down.
struct RunConfig {
    std::string target;       // gmm24 | neal | bimodal1d | gauss | wells
    json target_params;       // family parameters (may be empty)
    std::string sampler;      // bps | bps-mixed | bpspt-finite | bpspt-infinite
    std::string kernel;       // mh-uniform | suwa-todo (jump samplers only)
    RateParams rates;
    int num_samples = 0;
    int num_chains = 1;
    double sample_dt = 1.0;   // not used by bpspt-infinite (n_s * t_beta rules)
    std::uint64_t seed = 0;
    double init_scale = 1.0;
    bool init_from_target = false;
    bool record_velocities = false;
    Ladder ladder;            // tempering samplers only
    double alpha_s = 0.0;     // bpspt-finite only
    PartitionPair partitions; // bpspt-infinite only
    std::string out_dir = "out";

    bool is_tempering() const {
        return sampler == "bpspt-finite" || sampler == "bpspt-infinite";
    }
    bool uses_kernel() const { return sampler != "bps"; }

    double sampling_interval() const {
        return sampler == "bpspt-infinite" ? partitions.n_s * partitions.t_beta : sample_dt;
    }

    BpsConfig chain_config(std::uint64_t chain_seed) const {
        BpsConfig c;
        c.num_samples = num_samples;
        c.sample_dt = sampling_interval();
        c.rates = rates;
        c.seed = chain_seed;
        c.init_scale = init_scale;
        c.init_from_target = init_from_target;
        c.record_velocities = record_velocities;
        return c;
    }
};

inline std::unique_ptr<TargetModel> make_model(const RunConfig& cfg) {
    const json& p = cfg.target_params;
    auto num = [&](const char* key, double dflt) {
        return p.contains(key) ? p.at(key).get<double>() : dflt;
    };
    if (cfg.target == "gmm24") return std::make_unique<Gmm24Model>();
    if (cfg.target == "neal") return std::make_unique<NealFunnelModel>();
    if (cfg.target == "bimodal1d")
        return std::make_unique<Bimodal1DModel>(num("a", 1.5), num("s", 0.5));
    if (cfg.target == "gauss")
        return std::make_unique<StdGaussianModel>(
            p.contains("dim") ? p.at("dim").get<int>() : 1);
    if (cfg.target == "wells") {
        if (!p.contains("means") || !p.contains("offsets"))
            throw ConfigError("wells target needs means and offsets arrays");
        return std::make_unique<WellsModel>(p.at("means").get<std::vector<double>>(),
                                            p.at("offsets").get<std::vector<double>>());
    }
    throw ConfigError("unknown target: " + cfg.target);
}

namespace detail {

inline std::vector<std::vector<int>> blocks_from_json(const json& j, std::vector<std::string>& bad,
                                                      const char* what) {
    std::vector<std::vector<int>> out;
    if (!j.is_array()) {
        bad.push_back(std::string(what) + " must be an array of slot arrays");
        return out;
    }
    for (const auto& blk : j) {
        if (!blk.is_array()) {
            bad.push_back(std::string(what) + " blocks must be arrays");
            return out;
        }
        std::vector<int> b;
        for (const auto& v : blk) {
            if (!v.is_number_integer() || v.get<int>() < 1) {
                bad.push_back(std::string(what) + " slots are 1-based integers");
                return out;
            }
            b.push_back(v.get<int>() - 1);  // to 0-based
        }
        out.push_back(std::move(b));
    }
    return out;
}

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where, std::vector<std::string>& bad) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) bad.push_back("unknown key '" + it.key() + "' in " + where);
    }
}

}  // namespace detail

// Parses and cross-validates a run configuration; throws ConfigError
// listing every violation found, not just the first.
inline RunConfig parse_run_config(const json& j) {
    std::vector<std::string> bad;
    RunConfig cfg;

    detail::check_keys(j,
                       {"target", "sampler", "kernel", "rates", "num_samples", "num_chains",
                        "sample_dt", "seed", "init_scale", "init_from_target",
                        "record_velocities", "ladder", "alpha_s", "partitions", "out_dir"},
                       "run config", bad);

    auto want = [&](const char* key) {
        if (!j.contains(key)) {
            bad.push_back(std::string("missing required key '") + key + "'");
            return false;
        }
        return true;
    };

    if (want("target")) {
        const json& t = j.at("target");
        if (t.is_string()) {
            cfg.target = t.get<std::string>();
        } else if (t.is_object() && t.contains("family") && t.at("family").is_string()) {
            cfg.target = t.at("family").get<std::string>();
            cfg.target_params = t;
            cfg.target_params.erase("family");
        } else {
            bad.push_back("target must be a name or an object with a 'family'");
        }
    }
    if (want("sampler")) {
        cfg.sampler = j.at("sampler").get<std::string>();
        if (cfg.sampler != "bps" && cfg.sampler != "bps-mixed" &&
            cfg.sampler != "bpspt-finite" && cfg.sampler != "bpspt-infinite")
            bad.push_back("sampler must be one of bps, bps-mixed, bpspt-finite, bpspt-infinite");
    }
    if (want("num_samples")) {
        cfg.num_samples = j.at("num_samples").get<int>();
        if (cfg.num_samples < 1) bad.push_back("num_samples must be >= 1");
    }
    if (want("num_chains")) {
        cfg.num_chains = j.at("num_chains").get<int>();
        if (cfg.num_chains < 1) bad.push_back("num_chains must be >= 1");
    }
    if (want("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();

    if (want("rates")) {
        const json& r = j.at("rates");
        detail::check_keys(r, {"alpha_b", "alpha_j", "lambda_ref"}, "rates", bad);
        if (r.contains("alpha_b")) cfg.rates.alpha_b = r.at("alpha_b").get<double>();
        if (r.contains("alpha_j")) cfg.rates.alpha_j = r.at("alpha_j").get<double>();
        if (r.contains("lambda_ref")) cfg.rates.lambda_ref = r.at("lambda_ref").get<double>();
        try {
            cfg.rates.validate();
        } catch (const ConfigError& e) {
            bad.push_back(e.what());
        }
    }

    if (j.contains("init_scale")) cfg.init_scale = j.at("init_scale").get<double>();
    if (!(cfg.init_scale > 0.0)) bad.push_back("init_scale must be positive");
    if (j.contains("init_from_target")) cfg.init_from_target = j.at("init_from_target").get<bool>();
    if (j.contains("record_velocities"))
        cfg.record_velocities = j.at("record_velocities").get<bool>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();

    const bool tempering = cfg.sampler == "bpspt-finite" || cfg.sampler == "bpspt-infinite";
    const bool infinite = cfg.sampler == "bpspt-infinite";

    if (j.contains("kernel")) {
        cfg.kernel = j.at("kernel").get<std::string>();
        if (cfg.kernel != "mh-uniform" && cfg.kernel != "suwa-todo")
            bad.push_back("kernel must be mh-uniform or suwa-todo");
        if (cfg.sampler == "bps")
            bad.push_back("sampler 'bps' takes no jump kernel");
    } else if (!cfg.sampler.empty() && cfg.sampler != "bps") {
        bad.push_back("samplers with a jump channel need a 'kernel'");
    }

    if (j.contains("ladder")) {
        if (!tempering) bad.push_back("'ladder' only applies to tempering samplers");
        cfg.ladder.betas = j.at("ladder").get<std::vector<double>>();
        try {
            cfg.ladder.validate();
        } catch (const ConfigError& e) {
            bad.push_back(e.what());
        }
    } else if (tempering) {
        bad.push_back("tempering samplers need a 'ladder'");
    }

    if (j.contains("alpha_s")) {
        if (cfg.sampler != "bpspt-finite") bad.push_back("'alpha_s' only applies to bpspt-finite");
        cfg.alpha_s = j.at("alpha_s").get<double>();
        if (!(cfg.alpha_s >= 0.0)) bad.push_back("alpha_s must be nonnegative");
    } else if (cfg.sampler == "bpspt-finite") {
        bad.push_back("bpspt-finite needs 'alpha_s'");
    }

    if (j.contains("partitions")) {
        if (!infinite) bad.push_back("'partitions' only applies to bpspt-infinite");
        const json& p = j.at("partitions");
        detail::check_keys(p, {"a", "b", "t_beta", "n_s"}, "partitions", bad);
        if (p.contains("a")) cfg.partitions.a = detail::blocks_from_json(p.at("a"), bad, "partitions.a");
        else bad.push_back("partitions needs 'a'");
        if (p.contains("b")) cfg.partitions.b = detail::blocks_from_json(p.at("b"), bad, "partitions.b");
        else bad.push_back("partitions needs 'b'");
        if (p.contains("t_beta")) cfg.partitions.t_beta = p.at("t_beta").get<double>();
        else bad.push_back("partitions needs 't_beta'");
        if (p.contains("n_s")) cfg.partitions.n_s = p.at("n_s").get<int>();
        if (infinite && bad.empty()) {
            try {
                cfg.partitions.validate(cfg.ladder.size());
            } catch (const ConfigError& e) {
                bad.push_back(e.what());
            }
        }
    } else if (infinite) {
        bad.push_back("bpspt-infinite needs 'partitions'");
    }

    if (j.contains("sample_dt")) {
        if (infinite)
            bad.push_back("bpspt-infinite derives its sampling interval from n_s * t_beta");
        cfg.sample_dt = j.at("sample_dt").get<double>();
        if (!(cfg.sample_dt > 0.0)) bad.push_back("sample_dt must be positive");
    } else if (!cfg.sampler.empty() && !infinite) {
        bad.push_back("missing required key 'sample_dt'");
    }

    // Target/sampler compatibility needs a constructed model.
    if (bad.empty()) {
        try {
            auto model = make_model(cfg);
            if (cfg.sampler == "bps" && model->num_states() != 1)
                bad.push_back("sampler 'bps' needs a purely continuous target; use bps-mixed");
            if (cfg.kernel == "suwa-todo" && model->num_states() > SuwaTodoKernel::kMaxStates)
                bad.push_back("suwa-todo kernel cannot enumerate this target's state set");
            if (cfg.init_from_target && !model->has_exact_sampler())
                bad.push_back("init_from_target needs a target with an exact sampler");
        } catch (const std::exception& e) {
            bad.push_back(e.what());
        }
    }

    if (!bad.empty()) {
        std::string msg = "invalid run config:";
        for (const auto& b : bad) msg += "\n  - " + b;
        throw ConfigError(msg);
    }
    return cfg;
}

inline json config_to_json(const RunConfig& cfg) {
    json j;
    if (cfg.target_params.empty()) {
        j["target"] = cfg.target;
    } else {
        json t = cfg.target_params;
        t["family"] = cfg.target;
        j["target"] = t;
    }
    j["sampler"] = cfg.sampler;
    if (cfg.uses_kernel()) j["kernel"] = cfg.kernel;
    j["rates"] = {{"alpha_b", cfg.rates.alpha_b},
                  {"alpha_j", cfg.rates.alpha_j},
                  {"lambda_ref", cfg.rates.lambda_ref}};
    j["num_samples"] = cfg.num_samples;
    j["num_chains"] = cfg.num_chains;
    j["seed"] = cfg.seed;
    if (cfg.sampler != "bpspt-infinite") j["sample_dt"] = cfg.sample_dt;
    if (cfg.init_scale != 1.0) j["init_scale"] = cfg.init_scale;
    if (cfg.init_from_target) j["init_from_target"] = true;
    if (cfg.record_velocities) j["record_velocities"] = true;
    if (cfg.is_tempering()) j["ladder"] = cfg.ladder.betas;
    if (cfg.sampler == "bpspt-finite") j["alpha_s"] = cfg.alpha_s;
    if (cfg.sampler == "bpspt-infinite") {
        auto blocks = [](const std::vector<std::vector<int>>& bs) {
            json out = json::array();
            for (const auto& blk : bs) {
                json b = json::array();
                for (int s : blk) b.push_back(s + 1);  // back to 1-based
                out.push_back(b);
            }
            return out;
        };
        j["partitions"] = {{"a", blocks(cfg.partitions.a)},
                           {"b", blocks(cfg.partitions.b)},
                           {"t_beta", cfg.partitions.t_beta},
                           {"n_s", cfg.partitions.n_s}};
    }
    j["out_dir"] = cfg.out_dir;
    return j;
}

struct Preset {
    std::string name;
    std::string summary;
    RunConfig config;
};

// Built-in experiment configurations.  The two -paper presets reproduce the
// benchmark settings the library is calibrated against; -bps are the plain
// single-temperature baselines on the same targets.
inline const std::vector<Preset>& presets() {
    static const std::vector<Preset> table = [] {
        std::vector<Preset> t;

        auto ladder_of = [](int L, double step) {
            Ladder l;
            for (int i = 0; i < L; ++i) l.betas.push_back(1.0 - step * i);
            return l;
        };

        {
            RunConfig c;
            c.target = "gmm24";
            c.sampler = "bpspt-infinite";
            c.kernel = "suwa-todo";
            c.rates = {1.0, 4.0, 1.0};
            c.num_samples = 100000;
            c.num_chains = 10;
            c.seed = 314159;
            c.ladder = ladder_of(10, 0.1);
            c.partitions.a = {{0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9}};
            c.partitions.b = {{0, 1}, {2, 3, 4, 5}, {6, 7, 8, 9}};
            c.partitions.t_beta = 0.1;
            c.partitions.n_s = 10;
            t.push_back({"gmm24-paper",
                         "24-d 4-cluster Gaussian mixture, tempered (10 betas, infinite "
                         "exchange)",
                         c});
        }
        {
            RunConfig c;
            c.target = "gmm24";
            c.sampler = "bps-mixed";
            c.kernel = "suwa-todo";
            c.rates = {1.0, 4.0, 1.0};
            c.num_samples = 100000;
            c.num_chains = 10;
            c.sample_dt = 1.0;
            c.seed = 314159;
            t.push_back({"gmm24-bps", "24-d 4-cluster Gaussian mixture, single temperature", c});
        }
        {
            RunConfig c;
            c.target = "neal";
            c.sampler = "bpspt-infinite";
            c.kernel = "mh-uniform";
            c.rates = {1.0, 20.0, 0.1};
            c.num_samples = 30000;
            c.num_chains = 10;
            c.seed = 271828;
            c.ladder = ladder_of(5, 0.2);
            c.partitions.a = {{0, 1, 2}, {3, 4}};
            c.partitions.b = {{0, 1}, {2, 3, 4}};
            c.partitions.t_beta = 0.1;
            c.partitions.n_s = 10;
            t.push_back({"neal-paper",
                         "two-level funnel with 20 Bernoulli bits, tempered (5 betas, "
                         "infinite exchange)",
                         c});
        }
        {
            RunConfig c;
            c.target = "neal";
            c.sampler = "bps-mixed";
            c.kernel = "mh-uniform";
            c.rates = {1.0, 20.0, 0.1};
            c.num_samples = 30000;
            c.num_chains = 10;
            c.sample_dt = 1.0;
            c.seed = 271828;
            t.push_back({"neal-bps", "two-level funnel with 20 Bernoulli bits, single "
                                     "temperature", c});
        }
        {
            RunConfig c;
            c.target = "bimodal1d";
            c.target_params = json{{"a", 1.5}, {"s", 0.5}};
            c.sampler = "bpspt-finite";
            c.kernel = "mh-uniform";
            c.rates = {1.0, 0.0, 1.0};
            c.num_samples = 10000;
            c.num_chains = 4;
            c.sample_dt = 1.0;
            c.seed = 161803;
            c.ladder.betas = {1.0, 0.5, 0.1};
            c.alpha_s = 1.0;
            t.push_back({"bimodal1d-pt",
                         "1-d double well, tempered with finite-rate adjacent swaps", c});
        }
        return t;
    }();
    return table;
}

inline const Preset& find_preset(const std::string& name) {
    for (const auto& p : presets())
        if (p.name == name) return p;
    throw ConfigError("unknown preset: " + name + " (see list-presets)");
}

// Shrink a configuration to desk scale: one tenth of the samples (at least
// ten), same chains, same dynamics.
inline RunConfig desk_scale(RunConfig cfg) {
    cfg.num_samples = std::max(10, cfg.num_samples / 10);
    return cfg;
}

}  // namespace bps
