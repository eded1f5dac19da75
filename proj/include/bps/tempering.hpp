#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "bps/envelope.hpp"
#include "bps/kernels.hpp"
#include "bps/model.hpp"
#include "bps/rng.hpp"
#include "bps/sim.hpp"
#include "bps/state.hpp"
#include "bps/trace.hpp"

namespace bps {

// Inverse-temperature ladder; slot 0 is the target (beta exactly 1).
struct Ladder {
    std::vector<double> betas;

    int size() const { return static_cast<int>(betas.size()); }

    void validate() const {
        if (betas.empty()) throw ConfigError("ladder must be nonempty");
        if (betas.front() != 1.0) throw ConfigError("ladder must start at beta = 1");
        for (std::size_t i = 0; i < betas.size(); ++i) {
            if (!(betas[i] > 0.0)) throw ConfigError("ladder betas must be positive");
            if (i > 0 && !(betas[i] < betas[i - 1]))
                throw ConfigError("ladder betas must be strictly decreasing");
        }
    }
};

// ---------------------------------------------------------------------------
// Subset assignment algebra (infinite exchange rate)
// ---------------------------------------------------------------------------

// All permutations of {0..m-1} in lexicographic order.  Subset sizes are
// capped so the table stays tiny.
inline const std::vector<std::vector<int>>& permutation_table(int m) {
    constexpr int kMax = 6;  // 720 assignments
    if (m < 1 || m > kMax) throw ConfigError("subset size must be between 1 and 6");
    static const auto tables = [] {
        std::vector<std::vector<std::vector<int>>> t(kMax + 1);
        for (int n = 1; n <= kMax; ++n) {
            std::vector<int> p(n);
            std::iota(p.begin(), p.end(), 0);
            do t[n].push_back(p);
            while (std::next_permutation(p.begin(), p.end()));
        }
        return t;
    }();
    return tables[m];
}

// Posterior over temperature assignments within one subset: permutation
// sigma (particle position -> temperature position) has weight
// proportional to exp(-sum_p beta[sigma[p]] * U[p]).
struct SubsetWeights {
    std::vector<double> prob;  // aligned with permutation_table(m)
};

inline SubsetWeights subset_weights(const std::vector<double>& betas_sub,
                                    const std::vector<double>& potentials_sub) {
    const int m = static_cast<int>(betas_sub.size());
    if (static_cast<int>(potentials_sub.size()) != m)
        throw DomainError("subset betas/potentials size mismatch");
    const auto& perms = permutation_table(m);
    SubsetWeights sw;
    sw.prob.resize(perms.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < perms.size(); ++s) {
        double lw = 0.0;
        for (int p = 0; p < m; ++p) lw -= betas_sub[perms[s][p]] * potentials_sub[p];
        sw.prob[s] = lw;
        best = std::max(best, lw);
    }
    // Max-subtracted normalization: an additive shift of U changes every lw
    // by the same amount (sum of betas is permutation-invariant), so the
    // probabilities are exactly shift-invariant.
    double z = 0.0;
    for (double& p : sw.prob) z += p = std::exp(p - best);
    for (double& p : sw.prob) p /= z;
    return sw;
}

// Assignment posterior summaries used by the rate computations:
// mass[p][q] = P(particle at position p sits at temperature position q),
// beta_bar[p] = E[beta of position p].
struct SubsetMix {
    SubsetWeights sw;
    std::vector<std::vector<double>> mass;
    std::vector<double> beta_bar;
};

inline SubsetMix subset_mix(const std::vector<double>& betas_sub,
                            const std::vector<double>& potentials_sub) {
    const int m = static_cast<int>(betas_sub.size());
    const auto& perms = permutation_table(m);
    SubsetMix mix;
    mix.sw = subset_weights(betas_sub, potentials_sub);
    mix.mass.assign(m, std::vector<double>(m, 0.0));
    for (std::size_t s = 0; s < perms.size(); ++s)
        for (int p = 0; p < m; ++p) mix.mass[p][perms[s][p]] += mix.sw.prob[s];
    mix.beta_bar.assign(m, 0.0);
    for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) mix.beta_bar[p] += mix.mass[p][q] * betas_sub[q];
    return mix;
}

// One categorical draw from the assignment posterior (index into
// permutation_table).  Singleton subsets consume no randomness.
inline int resample_assignment(const SubsetWeights& sw, RngStream& rng) {
    if (sw.prob.size() <= 1) return 0;
    double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t s = 0; s + 1 < sw.prob.size(); ++s) {
        acc += sw.prob[s];
        if (u <= acc) return static_cast<int>(s);
    }
    return static_cast<int>(sw.prob.size() - 1);
}

// log weight(sigma') - log weight(sigma) for full-ensemble assignments;
// sigma maps slot -> temperature index.
inline double exchange_log_ratio(const Ladder& ladder, const std::vector<double>& potentials,
                                 const std::vector<int>& sigma,
                                 const std::vector<int>& sigma_prime) {
    double e = 0.0;
    for (std::size_t i = 0; i < potentials.size(); ++i)
        e += (ladder.betas[sigma[i]] - ladder.betas[sigma_prime[i]]) * potentials[i];
    return e;
}

inline double exchange_acceptance(const Ladder& ladder, const std::vector<double>& potentials,
                                  const std::vector<int>& sigma,
                                  const std::vector<int>& sigma_prime) {
    double e = exchange_log_ratio(ladder, potentials, sigma, sigma_prime);
    return e >= 0.0 ? 1.0 : std::exp(e);
}

// Joint envelope for a group of particles: per-term clipped sum of the unit
// bounce envelopes, scaled by beta_max * alpha_b, plus one alpha_j per
// particle when the jump channel is active.  A single particle with no jump
// channel keeps its raw coefficients (the envelope is then exact whenever
// the model's is).
inline AffineEnvelope total_event_envelope(const std::vector<AffineEnvelope>& units,
                                           double beta_max, double alpha_b, double alpha_j,
                                           bool jumps_active) {
    if (units.empty()) throw DomainError("total envelope of an empty particle set");
    const bool clip = jumps_active || units.size() > 1;
    double a = 0.0, b = 0.0;
    double h = std::numeric_limits<double>::infinity();
    for (const auto& u : units) {
        a += clip ? std::max(0.0, u.a) : u.a;
        b += clip ? std::max(0.0, u.b) : u.b;
        h = std::min(h, u.horizon);
    }
    const double s = beta_max * alpha_b;
    return {s * a + (jumps_active ? static_cast<double>(units.size()) * alpha_j : 0.0),
            s * b, h};
}

// ---------------------------------------------------------------------------
// Partition pair driving the subgroup alternation
// ---------------------------------------------------------------------------

// Two interleaving partitions of the slot set {0..L-1}.  Epochs of length
// t_beta alternate between the subgroups they induce; a sample is taken
// every n_s epochs.
struct PartitionPair {
    std::vector<std::vector<int>> a, b;
    double t_beta = 0.0;
    int n_s = 1;

    void validate(int L) const {
        if (!(t_beta > 0.0)) throw ConfigError("t_beta must be positive");
        if (n_s < 1) throw ConfigError("n_s must be >= 1");
        check_partition(a, L, "first");
        check_partition(b, L, "second");
        if (L == 1) return;  // single slot: both partitions are {{0}}
        if (!interleaves(a, b) && !interleaves(b, a))
            throw ConfigError("partitions do not interleave in either orientation");
        if (!connected(L))
            throw ConfigError("partition pair does not connect all ladder slots");
    }

  private:
    static void check_partition(const std::vector<std::vector<int>>& part, int L,
                                const char* which) {
        std::vector<bool> seen(L, false);
        if (part.empty()) throw ConfigError(std::string(which) + " partition is empty");
        for (const auto& block : part) {
            if (block.empty())
                throw ConfigError(std::string(which) + " partition has an empty subset");
            if (static_cast<int>(block.size()) > 6)
                throw ConfigError("partition subsets are capped at 6 slots");
            for (int s : block) {
                if (s < 0 || s >= L)
                    throw ConfigError(std::string(which) + " partition indexes a missing slot");
                if (seen[s])
                    throw ConfigError(std::string(which) + " partition repeats a slot");
                seen[s] = true;
            }
        }
        for (int s = 0; s < L; ++s)
            if (!seen[s]) throw ConfigError(std::string(which) + " partition misses a slot");
    }

    // Blocks ordered by smallest member; tests the laddered overlap pattern
    //   P1 strictly inside Q1, Q_{i-1} meets P_i, P_i meets Q_i,
    //   Q_last strictly inside P_last.
    static bool interleaves(const std::vector<std::vector<int>>& pa,
                            const std::vector<std::vector<int>>& pb) {
        auto ordered = [](const std::vector<std::vector<int>>& p) {
            auto q = p;
            for (auto& blk : q) std::sort(blk.begin(), blk.end());
            std::sort(q.begin(), q.end(),
                      [](const auto& x, const auto& y) { return x.front() < y.front(); });
            return q;
        };
        auto pas = ordered(pa), pbs = ordered(pb);
        if (pas.size() != pbs.size()) return false;
        const std::size_t n = pas.size();
        auto subset_strict = [](const std::vector<int>& s, const std::vector<int>& t) {
            return s.size() < t.size() && std::includes(t.begin(), t.end(), s.begin(), s.end());
        };
        auto meets = [](const std::vector<int>& s, const std::vector<int>& t) {
            std::vector<int> tmp;
            std::set_intersection(s.begin(), s.end(), t.begin(), t.end(),
                                  std::back_inserter(tmp));
            return !tmp.empty();
        };
        if (!subset_strict(pas.front(), pbs.front())) return false;
        if (!subset_strict(pbs.back(), pas.back())) return false;
        for (std::size_t i = 1; i < n; ++i)
            if (!meets(pbs[i - 1], pas[i])) return false;
        for (std::size_t i = 0; i < n; ++i)
            if (!meets(pas[i], pbs[i])) return false;
        return true;
    }

    // The two partitions generate the whole symmetric group iff the graph
    // "same block somewhere" is connected.
    bool connected(int L) const {
        std::vector<int> parent(L);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int v) {
            while (parent[v] != v) v = parent[v] = parent[parent[v]];
            return v;
        };
        auto unite_block = [&](const std::vector<int>& blk) {
            for (std::size_t i = 1; i < blk.size(); ++i) {
                int r1 = find(blk[0]), r2 = find(blk[i]);
                parent[r2] = r1;
            }
        };
        for (const auto& blk : a) unite_block(blk);
        for (const auto& blk : b) unite_block(blk);
        int root = find(0);
        for (int s = 1; s < L; ++s)
            if (find(s) != root) return false;
        return true;
    }
};

struct LadderReport {
    std::vector<double> betas;
    std::vector<double> mean_effective_beta;  // per slot, at epoch boundaries
    std::uint64_t epochs = 0;
    std::uint64_t sigma_draws = 0;        // infinite-rate assignment draws
    std::uint64_t sigma_nonidentity = 0;  // how many actually permuted
    std::uint64_t exchanges_proposed = 0;  // finite-rate swap proposals
    std::uint64_t exchanges_accepted = 0;
};

struct PtResult {
    std::vector<SampleTrace> traces;  // slot-ordered; slot 0 targets beta = 1
    LadderReport report;
    EventCounts events;  // whole-ensemble totals
};

// ---------------------------------------------------------------------------
// Infinite exchange rate: assignment-averaged rates, subgroup alternation
// ---------------------------------------------------------------------------

namespace detail {

struct SubsetRuntime {
    std::vector<int> slots;       // ascending ladder slots in this subset
    std::vector<double> betas;    // matching ladder betas
    double beta_max = 0.0;
};

// Joint evolution of one subset over an epoch window.  Event rates are the
// assignment-posterior averages: bounce at beta_bar[p], jumps mixed over the
// temperature masses.  Draw order per flight segment: one refresh
// exponential per particle (position order), thinning rounds, one uniform
// for (particle, bounce-vs-jump), one more for a jump target.
class SubsetEvolver {
  public:
    SubsetEvolver(const TargetModel& m, const DiscreteKernel* kernel, const RateParams& rates,
                  bool debug_validate, const SubsetRuntime& sub)
        : m_(m),
          kernel_(kernel),
          rates_(rates),
          debug_(debug_validate),
          sub_(sub),
          mcount_(static_cast<int>(sub.slots.size())),
          jumps_(kernel != nullptr && rates.alpha_j > 0.0 && m.num_states() > 1) {
        xt_.assign(mcount_, Vec(m.dim()));
        grad_.resize(m.dim());
        pots_.resize(mcount_);
        bounce_.resize(mcount_);
        jump_total_.resize(mcount_);
        units_.resize(mcount_);
        row_targets_.resize(mcount_);
        row_w_.resize(mcount_);
        kt_.reserve(16);
        kw_.reserve(16);
    }

    // Advances states[slots] through `window` time units; mutates them.
    void evolve(std::vector<MixedState>& states, double window, RngStream& rng,
                EventCounts& ev) {
        const int dim = m_.dim();
        double t = 0.0;
        while (t < window) {
            double dt_min = std::numeric_limits<double>::infinity();
            int ref_p = -1;
            for (int p = 0; p < mcount_; ++p) {
                double d = rng.exponential(rates_.lambda_ref);
                if (d < dt_min) {
                    dt_min = d;
                    ref_p = p;
                }
            }
            double rem = window - t;
            double cap = std::min(dt_min, rem);

            auto rate = [&](double tau) { return total_rate(states, tau); };
            auto envelope = [&](double tau, double rwin) {
                AffineEnvelope env = build_envelope(states, tau, rwin);
                if (debug_) {
                    AffineEnvelope clamped{env.a, env.b, std::min(env.horizon, rwin)};
                    if (!validate_envelope([&](double u) { return rate(tau + u); }, clamped))
                        throw DominanceError("subset envelope fails dominance grid check");
                }
                return env;
            };
            ThinResult res = thin_next_event(rate, envelope, cap, rng);
            ev.proposals += res.proposals;
            ev.rejections += res.rejections;

            if (res.has_event) {
                advance_all(states, res.elapsed);
                t += res.elapsed;
                apply_event(states, rng, ev);
            } else if (dt_min < rem) {
                advance_all(states, dt_min);
                t += dt_min;
                MixedState& s = states[sub_.slots[ref_p]];
                s.v = refresh_velocity(dim, rng);
                ++ev.refreshes;
            } else {
                advance_all(states, rem);
                break;
            }
        }
    }

    // Assignment posterior at the current positions (after evolve()).
    SubsetMix current_mix(const std::vector<MixedState>& states) const {
        std::vector<double> pots(mcount_);
        for (int p = 0; p < mcount_; ++p) {
            const MixedState& s = states[sub_.slots[p]];
            pots[p] = m_.checked_potential(s.x, s.y);
        }
        return subset_mix(sub_.betas, pots);
    }

  private:
    void advance_all(std::vector<MixedState>& states, double dt) const {
        for (int p = 0; p < mcount_; ++p) {
            MixedState& s = states[sub_.slots[p]];
            for (std::size_t d = 0; d < s.x.size(); ++d) s.x[d] += s.v[d] * dt;
        }
    }

    AffineEnvelope build_envelope(const std::vector<MixedState>& states, double tau,
                                  double window) {
        for (int p = 0; p < mcount_; ++p) {
            const MixedState& s = states[sub_.slots[p]];
            Vec& xp = xt_[p];
            for (std::size_t d = 0; d < s.x.size(); ++d) xp[d] = s.x[d] + s.v[d] * tau;
            units_[p] = m_.bounce_envelope(xp, s.y, s.v, window);
        }
        return total_event_envelope(units_, sub_.beta_max, rates_.alpha_b, rates_.alpha_j,
                                    jumps_);
    }

    // Total assignment-averaged event rate at elapsed tau; caches the
    // per-particle pieces for the classification draw.
    double total_rate(const std::vector<MixedState>& states, double tau) {
        for (int p = 0; p < mcount_; ++p) {
            const MixedState& s = states[sub_.slots[p]];
            Vec& xp = xt_[p];
            for (std::size_t d = 0; d < s.x.size(); ++d) xp[d] = s.x[d] + s.v[d] * tau;
            pots_[p] = m_.checked_potential(xp, s.y);
        }
        SubsetMix mix = subset_mix(sub_.betas, pots_);
        double total = 0.0;
        for (int p = 0; p < mcount_; ++p) {
            const MixedState& s = states[sub_.slots[p]];
            m_.gradient(xt_[p], s.y, grad_);
            double dd = dot(s.v, grad_);
            bounce_[p] = dd > 0.0 ? mix.beta_bar[p] * rates_.alpha_b * dd : 0.0;
            jump_total_[p] = 0.0;
            if (jumps_) mix_jump_row(p, s, mix);
            total += bounce_[p] + jump_total_[p];
        }
        return total;
    }

    // row_w_[p] accumulates sum_q mass[p][q] * w_{beta_q}(y'|y): the
    // assignment-averaged kernel row (jump rate = alpha_j times it).
    void mix_jump_row(int p, const MixedState& s, const SubsetMix& mix) {
        auto& targets = row_targets_[p];
        auto& wmix = row_w_[p];
        targets.clear();
        wmix.clear();
        for (int q = 0; q < mcount_; ++q) {
            double mass = mix.mass[p][q];
            if (mass <= 0.0) continue;
            kernel_->row(m_, xt_[p], s.y, sub_.betas[q], kt_, kw_);
            if (targets.empty()) {
                targets = kt_;
                wmix.assign(kt_.size(), 0.0);
                for (std::size_t i = 0; i < kw_.size(); ++i) wmix[i] = mass * kw_[i];
            } else if (kt_ == targets) {
                for (std::size_t i = 0; i < kw_.size(); ++i) wmix[i] += mass * kw_[i];
            } else {
                merge_row(targets, wmix, kt_, kw_, mass);
            }
        }
        double sw = 0.0;
        for (double wi : wmix) sw += wi;
        jump_total_[p] = rates_.alpha_j * sw;
    }

    // Kernel rows can have temperature-dependent support (flow-based
    // kernels); merge through a dense scratch over the state set.
    void merge_row(std::vector<int>& targets, std::vector<double>& wmix,
                   const std::vector<int>& kt, const std::vector<double>& kw, double mass) {
        const int n = m_.num_states();
        if (n > 4096)
            throw DomainError("kernel rows with varying support need an enumerable state set");
        std::vector<double> dense(n, 0.0);
        for (std::size_t i = 0; i < targets.size(); ++i) dense[targets[i]] += wmix[i];
        for (std::size_t i = 0; i < kt.size(); ++i) dense[kt[i]] += mass * kw[i];
        targets.clear();
        wmix.clear();
        for (int k = 0; k < n; ++k)
            if (dense[k] > 0.0) {
                targets.push_back(k);
                wmix.push_back(dense[k]);
            }
    }

    void apply_event(std::vector<MixedState>& states, RngStream& rng, EventCounts& ev) {
        double total = 0.0;
        for (int p = 0; p < mcount_; ++p) total += bounce_[p] + jump_total_[p];
        double u = rng.uniform() * total;
        for (int p = 0; p < mcount_; ++p) {
            MixedState& s = states[sub_.slots[p]];
            if (u <= bounce_[p]) {
                m_.gradient(s.x, s.y, grad_);
                s.v = reflect(s.v, grad_);
                ++ev.bounces;
                return;
            }
            u -= bounce_[p];
            if (u <= jump_total_[p]) {
                const auto& targets = row_targets_[p];
                const auto& wmix = row_w_[p];
                double uj = rng.uniform() * (jump_total_[p] / rates_.alpha_j);
                double acc = 0.0;
                int pick = targets.empty() ? -1 : targets.back();
                for (std::size_t i = 0; i < targets.size(); ++i) {
                    acc += wmix[i];
                    if (uj <= acc) {
                        pick = targets[i];
                        break;
                    }
                }
                if (pick < 0) throw ModelError("jump accepted with empty kernel row");
                s.y = pick;
                ++ev.jumps;
                return;
            }
            u -= jump_total_[p];
        }
        // Round-off on the cumulative walk: attribute to the last particle's
        // dominant channel.
        MixedState& s = states[sub_.slots[mcount_ - 1]];
        m_.gradient(s.x, s.y, grad_);
        s.v = reflect(s.v, grad_);
        ++ev.bounces;
    }

    const TargetModel& m_;
    const DiscreteKernel* kernel_;
    RateParams rates_;
    bool debug_;
    SubsetRuntime sub_;
    int mcount_;
    bool jumps_;

    std::vector<Vec> xt_;
    Vec grad_;
    std::vector<double> pots_, bounce_, jump_total_;
    std::vector<AffineEnvelope> units_;
    std::vector<std::vector<int>> row_targets_;
    std::vector<std::vector<double>> row_w_;
    std::vector<int> kt_;
    std::vector<double> kw_;
};

}  // namespace detail

// Parallel tempering in the infinite-exchange-rate limit: temperature
// assignments are averaged out of the event rates, epochs of length t_beta
// alternate between the two partitions' subgroups, and at each epoch end a
// fresh assignment is drawn and applied by permuting (x,y) across slots
// (velocities stay with their slots).  One RNG stream drives everything:
// per-slot init in ladder order, then subsets in partition order.
inline PtResult run_bpspt_infinite(const TargetModel& m, const DiscreteKernel* kernel,
                                   const Ladder& ladder, const PartitionPair& parts,
                                   const BpsConfig& cfg) {
    cfg.validate();
    ladder.validate();
    const int L = ladder.size();
    parts.validate(L);

    RngStream rng(cfg.seed);
    std::vector<MixedState> states(L);
    for (int k = 0; k < L; ++k) states[k] = detail::init_state(m, cfg, rng);

    // Pre-build evolvers for both subgroup families.
    auto build = [&](const std::vector<std::vector<int>>& blocks) {
        std::vector<detail::SubsetRuntime> subs;
        for (const auto& blk : blocks) {
            detail::SubsetRuntime sr;
            sr.slots = blk;
            std::sort(sr.slots.begin(), sr.slots.end());
            for (int s : sr.slots) sr.betas.push_back(ladder.betas[s]);
            sr.beta_max = *std::max_element(sr.betas.begin(), sr.betas.end());
            subs.push_back(std::move(sr));
        }
        // Fixed evolution order: by smallest slot.
        std::sort(subs.begin(), subs.end(),
                  [](const auto& a, const auto& b) { return a.slots.front() < b.slots.front(); });
        return subs;
    };
    std::vector<detail::SubsetRuntime> fam[2] = {build(parts.a), build(parts.b)};
    std::vector<std::vector<detail::SubsetEvolver>> evolvers(2);
    for (int f = 0; f < 2; ++f)
        for (const auto& sr : fam[f])
            evolvers[f].emplace_back(m, kernel, cfg.rates, cfg.debug_validate_envelopes, sr);

    PtResult out;
    out.report.betas = ladder.betas;
    out.report.mean_effective_beta.assign(L, 0.0);
    out.traces.resize(L);
    for (int k = 0; k < L; ++k) {
        out.traces[k].dim = m.dim();
        out.traces[k].has_velocities = cfg.record_velocities;
        out.traces[k].reserve(cfg.num_samples);
    }
    EventCounts ev;

    std::vector<MixedState> scratch;
    const double sample_dt = parts.n_s * parts.t_beta;
    int emitted = 0, epoch_in_cycle = 0;
    for (std::uint64_t epoch = 0; emitted < cfg.num_samples; ++epoch) {
        int f = static_cast<int>(epoch % 2);
        for (std::size_t bi = 0; bi < fam[f].size(); ++bi) {
            const auto& sr = fam[f][bi];
            evolvers[f][bi].evolve(states, parts.t_beta, rng, ev);

            // Epoch-boundary assignment draw, applied as (x,y) <- sigma^{-1}.
            SubsetMix mix = evolvers[f][bi].current_mix(states);
            const int mm = static_cast<int>(sr.slots.size());
            for (int p = 0; p < mm; ++p)
                out.report.mean_effective_beta[sr.slots[p]] += mix.beta_bar[p];
            if (mm > 1) {
                int si = resample_assignment(mix.sw, rng);
                ++out.report.sigma_draws;
                ++ev.permutation_draws;
                const auto& sigma = permutation_table(mm)[si];
                bool identity = true;
                for (int p = 0; p < mm; ++p)
                    if (sigma[p] != p) identity = false;
                if (!identity) {
                    ++out.report.sigma_nonidentity;
                    scratch.resize(mm);
                    for (int p = 0; p < mm; ++p) scratch[p] = states[sr.slots[p]];
                    for (int p = 0; p < mm; ++p) {
                        // Position sigma[p] receives particle p's (x,y).
                        MixedState& dst = states[sr.slots[sigma[p]]];
                        dst.x = scratch[p].x;
                        dst.y = scratch[p].y;
                    }
                }
            }
        }
        ++out.report.epochs;
        if (++epoch_in_cycle == parts.n_s) {
            epoch_in_cycle = 0;
            ++emitted;
            double t = emitted * sample_dt;
            for (int k = 0; k < L; ++k) {
                detail::check_finite(states[k]);
                out.traces[k].push_row(t, states[k].x, states[k].y, states[k].v);
            }
        }
    }
    double denom = static_cast<double>(out.report.epochs);
    for (double& mb : out.report.mean_effective_beta) mb /= denom;
    out.events = ev;
    return out;
}

// Parallel tempering at a finite exchange rate: each slot runs the tempered
// single-particle dynamics on its own derived RNG stream, and a separate
// exchange stream proposes adjacent swaps at total rate (L-1) * alpha_s,
// accepted with the tempered-weight ratio.  Swaps move whole (x,y,v)
// triples between slots.  alpha_s = 0 never touches the exchange stream, so
// each slot then reproduces a standalone run byte for byte.
inline PtResult run_bpspt_finite(const TargetModel& m, const DiscreteKernel* kernel,
                                 const Ladder& ladder, double alpha_s, const BpsConfig& cfg) {
    cfg.validate();
    ladder.validate();
    if (!(alpha_s >= 0.0)) throw ConfigError("alpha_s must be nonnegative");
    const int L = ladder.size();

    std::vector<RngStream> slot_rng;
    slot_rng.reserve(L);
    std::vector<MixedState> states(L);
    for (int k = 0; k < L; ++k) {
        slot_rng.emplace_back(derive_seed(cfg.seed, static_cast<std::uint64_t>(k)));
        states[k] = detail::init_state(m, cfg, slot_rng.back());
    }
    RngStream ex_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(L)));

    std::vector<detail::EvolveCtx> ctx;
    ctx.reserve(L);
    for (int k = 0; k < L; ++k)
        ctx.push_back({m, kernel, ladder.betas[k], cfg.rates, cfg.debug_validate_envelopes});

    PtResult out;
    out.report.betas = ladder.betas;
    out.report.mean_effective_beta = ladder.betas;  // assignments are hard here
    out.traces.resize(L);
    for (int k = 0; k < L; ++k) {
        out.traces[k].dim = m.dim();
        out.traces[k].has_velocities = cfg.record_velocities;
        out.traces[k].reserve(cfg.num_samples);
    }

    const bool exchanging = alpha_s > 0.0 && L > 1;
    const double ex_rate = exchanging ? alpha_s * (L - 1) : 0.0;
    double t = 0.0;
    double next_ex = exchanging ? ex_rng.exponential(ex_rate)
                                : std::numeric_limits<double>::infinity();
    int emitted = 0;
    double next_sample = cfg.sample_dt;
    while (emitted < cfg.num_samples) {
        double target = std::min(next_sample, next_ex);
        double window = target - t;
        for (int k = 0; k < L; ++k)
            evolve_single(ctx[k], states[k], window, slot_rng[k], out.traces[k].events);
        t = target;

        if (target == next_ex) {
            int k = static_cast<int>(ex_rng.uniform_index(L - 1));
            double uk = m.checked_potential(states[k].x, states[k].y);
            double uk1 = m.checked_potential(states[k + 1].x, states[k + 1].y);
            double lr = (ladder.betas[k] - ladder.betas[k + 1]) * (uk - uk1);
            ++out.report.exchanges_proposed;
            if (lr >= 0.0 || ex_rng.uniform() <= std::exp(lr)) {
                std::swap(states[k], states[k + 1]);
                ++out.report.exchanges_accepted;
            }
            next_ex = t + ex_rng.exponential(ex_rate);
        }
        if (target == next_sample) {
            ++emitted;
            for (int k = 0; k < L; ++k) {
                detail::check_finite(states[k]);
                out.traces[k].push_row(emitted * cfg.sample_dt, states[k].x, states[k].y,
                                       states[k].v);
            }
            next_sample = (emitted + 1) * cfg.sample_dt;
        }
    }
    for (int k = 0; k < L; ++k) out.events += out.traces[k].events;
    out.events.exchanges_proposed = out.report.exchanges_proposed;
    out.events.exchanges_accepted = out.report.exchanges_accepted;
    return out;
}

}  // namespace bps
