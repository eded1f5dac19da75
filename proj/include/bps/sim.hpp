#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "bps/envelope.hpp"
#include "bps/kernels.hpp"
#include "bps/model.hpp"
#include "bps/rng.hpp"
#include "bps/state.hpp"
#include "bps/trace.hpp"

namespace bps {

struct BpsConfig {
    int num_samples = 0;     // rows to emit
    double sample_dt = 1.0;  // process time between samples
    RateParams rates;
    std::uint64_t seed = 0;
    double init_scale = 1.0;       // x0 ~ init_scale * N(0, I)
    bool init_from_target = false; // draw (x0,y0) from the model's exact sampler
    bool record_velocities = false;
    bool debug_validate_envelopes = false;  // grid-check every envelope (slow)

    void validate() const {
        if (num_samples < 1) throw ConfigError("num_samples must be >= 1");
        if (!(sample_dt > 0.0)) throw ConfigError("sample_dt must be positive");
        if (!(init_scale > 0.0)) throw ConfigError("init_scale must be positive");
        rates.validate();
    }
};

namespace detail {

struct EvolveCtx {
    const TargetModel& model;
    const DiscreteKernel* kernel;  // null disables the jump channel
    double beta = 1.0;
    RateParams rates;
    bool debug_validate = false;

    bool jumps_active() const {
        return kernel != nullptr && rates.alpha_j > 0.0 && model.num_states() > 1;
    }
};

// Advance one particle's piecewise-linear dynamics by `deadline` time units:
// straight flight interrupted by bounce/jump events (joint thinning of the
// total rate) and velocity refreshes (homogeneous rate lambda_ref).
//
// Uniform draw order per flight segment: one exponential for the refresh
// clock; then thinning rounds (proposal u, acceptance u); on acceptance one
// uniform for bounce-vs-jump and, for a jump, one more for the target state.
// A refresh costs dim normal draws.  Pending draws are discarded at the
// deadline: both the refresh clock and the thinned first-arrival laws are
// memoryless, so restarting them at segment boundaries leaves the process
// law unchanged.
inline void evolve_single(const EvolveCtx& ctx, MixedState& s, double deadline,
                          RngStream& rng, EventCounts& ev) {
    const TargetModel& m = ctx.model;
    const int dim = m.dim();
    const double scale = ctx.beta * ctx.rates.alpha_b;
    const bool jumps = ctx.jumps_active();
    const double jump_bound = jumps ? ctx.rates.alpha_j : 0.0;

    Vec xt(dim), grad(dim);
    std::vector<int> targets;
    std::vector<double> w;
    double last_bounce = 0.0, last_jump_total = 0.0;

    double t = 0.0;
    while (t < deadline) {
        double dt_ref = rng.exponential(ctx.rates.lambda_ref);
        double rem = deadline - t;
        double cap = std::min(dt_ref, rem);

        auto at = [&](double tau) {
            for (int d = 0; d < dim; ++d) xt[d] = s.x[d] + s.v[d] * tau;
        };
        auto rate = [&](double tau) {
            at(tau);
            m.gradient(xt, s.y, grad);
            double dd = dot(s.v, grad);
            last_bounce = dd > 0.0 ? scale * dd : 0.0;
            last_jump_total = 0.0;
            if (jumps) {
                ctx.kernel->row(m, xt, s.y, ctx.beta, targets, w);
                double sw = 0.0;
                for (double wi : w) sw += wi;
                last_jump_total = ctx.rates.alpha_j * sw;
            }
            return last_bounce + last_jump_total;
        };
        auto envelope = [&](double tau, double window) {
            at(tau);
            AffineEnvelope unit = m.bounce_envelope(xt, s.y, s.v, window);
            AffineEnvelope env;
            if (jumps) {
                // Clip the bounce part before adding the constant jump bound,
                // otherwise a negative intercept would eat into it.
                env = {scale * std::max(0.0, unit.a) + jump_bound,
                       scale * std::max(0.0, unit.b), unit.horizon};
            } else {
                env = {scale * unit.a, scale * unit.b, unit.horizon};
            }
            if (ctx.debug_validate) {
                double h = std::min(env.horizon, window);
                AffineEnvelope clamped{env.a, env.b, h};
                if (!validate_envelope([&](double u) { return rate(tau + u); }, clamped))
                    throw DominanceError("envelope fails dominance grid check");
            }
            return env;
        };

        ThinResult res = thin_next_event(rate, envelope, cap, rng);
        ev.proposals += res.proposals;
        ev.rejections += res.rejections;

        if (res.has_event) {
            for (int d = 0; d < dim; ++d) s.x[d] += s.v[d] * res.elapsed;
            t += res.elapsed;
            // rate() was last evaluated at the accepted point, so
            // last_bounce / targets / w describe exactly this event.
            double total = last_bounce + last_jump_total;
            if (rng.uniform() * total <= last_bounce) {
                m.gradient(s.x, s.y, grad);
                s.v = reflect(s.v, grad);
                ++ev.bounces;
            } else {
                double u = rng.uniform() * (last_jump_total / ctx.rates.alpha_j);
                double acc = 0.0;
                int pick = targets.empty() ? -1 : targets.back();
                for (std::size_t i = 0; i < targets.size(); ++i) {
                    acc += w[i];
                    if (u <= acc) {
                        pick = targets[i];
                        break;
                    }
                }
                if (pick < 0) throw ModelError("jump accepted with empty kernel row");
                s.y = pick;
                ++ev.jumps;
            }
        } else if (dt_ref < rem) {
            for (int d = 0; d < dim; ++d) s.x[d] += s.v[d] * dt_ref;
            t += dt_ref;
            s.v = refresh_velocity(dim, rng);
            ++ev.refreshes;
        } else {
            for (int d = 0; d < dim; ++d) s.x[d] += s.v[d] * rem;
            break;
        }
    }
}

// Initial state: x ~ init_scale * N(0,I), y uniform over states, v ~ N(0,I),
// in that draw order; or (x,y) from the model's exact sampler when requested.
inline MixedState init_state(const TargetModel& m, const BpsConfig& cfg, RngStream& rng) {
    MixedState s;
    if (cfg.init_from_target) {
        if (!m.has_exact_sampler())
            throw ConfigError("init_from_target requires a model with an exact sampler");
        s = m.exact_draw(rng);
    } else {
        s.x.resize(m.dim());
        for (int d = 0; d < m.dim(); ++d) s.x[d] = cfg.init_scale * rng.normal();
        s.y = m.num_states() > 1 ? static_cast<int>(rng.uniform_index(m.num_states())) : 0;
    }
    s.v = refresh_velocity(m.dim(), rng);
    return s;
}

inline void check_finite(const MixedState& s) {
    if (!all_finite(s.x) || !all_finite(s.v))
        throw DivergenceError("chain state became non-finite");
}

inline SampleTrace run_chain(const TargetModel& m, const DiscreteKernel* kernel, double beta,
                             const BpsConfig& cfg) {
    cfg.validate();
    RngStream rng(cfg.seed);
    MixedState s = init_state(m, cfg, rng);

    EvolveCtx ctx{m, kernel, beta, cfg.rates, cfg.debug_validate_envelopes};
    SampleTrace tr;
    tr.dim = m.dim();
    tr.has_velocities = cfg.record_velocities;
    tr.reserve(cfg.num_samples);
    for (int n = 1; n <= cfg.num_samples; ++n) {
        evolve_single(ctx, s, cfg.sample_dt, rng, tr.events);
        check_finite(s);
        tr.push_row(n * cfg.sample_dt, s.x, s.y, s.v);
    }
    return tr;
}

}  // namespace detail

// Plain sampler for purely continuous targets (bounce + refresh only).
inline SampleTrace run_bps_continuous(const TargetModel& m, const BpsConfig& cfg) {
    if (m.num_states() != 1)
        throw ConfigError("run_bps_continuous needs a purely continuous target; use run_bps_mixed");
    return detail::run_chain(m, nullptr, 1.0, cfg);
}

// Mixed continuous-discrete sampler: bounce + refresh + kernel-driven jumps.
inline SampleTrace run_bps_mixed(const TargetModel& m, const DiscreteKernel& kernel,
                                 const BpsConfig& cfg) {
    return detail::run_chain(m, &kernel, 1.0, cfg);
}

}  // namespace bps
