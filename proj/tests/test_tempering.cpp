#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bps/diagnostics.hpp"
#include "bps/kernels.hpp"
#include "bps/models/toy.hpp"
#include "bps/sim.hpp"
#include "bps/tempering.hpp"

using namespace bps;

namespace {

// Assignment posterior by direct enumeration, normalized without the
// max-subtraction trick used by the library.
std::vector<double> enumerate_weights(const std::vector<double>& betas,
                                      const std::vector<double>& pots) {
    const auto& perms = permutation_table(static_cast<int>(betas.size()));
    std::vector<double> w(perms.size());
    double z = 0.0;
    for (std::size_t s = 0; s < perms.size(); ++s) {
        double lw = 0.0;
        for (std::size_t p = 0; p < betas.size(); ++p) lw -= betas[perms[s][p]] * pots[p];
        z += w[s] = std::exp(lw);
    }
    for (double& v : w) v /= z;
    return w;
}

SampleTrace make_trace(int dim, const std::vector<double>& xs, const std::vector<int>& ys) {
    SampleTrace tr;
    tr.dim = dim;
    for (std::size_t i = 0; i < ys.size(); ++i)
        tr.push_row(static_cast<double>(i + 1), {xs.begin() + i * dim, xs.begin() + (i + 1) * dim},
                    ys[i], {});
    return tr;
}

}  // namespace

TEST_CASE("ladder validation") {
    Ladder ok{{1.0, 0.5, 0.1}};
    CHECK_NOTHROW(ok.validate());
    CHECK_THROWS_AS(Ladder{}.validate(), ConfigError);
    CHECK_THROWS_AS((Ladder{{0.9, 0.5}}.validate()), ConfigError);
    CHECK_THROWS_AS((Ladder{{1.0, 0.5, 0.5}}.validate()), ConfigError);
    CHECK_THROWS_AS((Ladder{{1.0, 0.5, -0.1}}.validate()), ConfigError);
}

TEST_CASE("permutation table is lexicographic and capped") {
    CHECK(permutation_table(1).size() == 1);
    CHECK(permutation_table(2).size() == 2);
    CHECK(permutation_table(3).size() == 6);
    CHECK(permutation_table(6).size() == 720);
    const auto& p3 = permutation_table(3);
    CHECK(p3[0] == std::vector<int>{0, 1, 2});
    CHECK(p3[1] == std::vector<int>{0, 2, 1});
    CHECK(p3[2] == std::vector<int>{1, 0, 2});
    CHECK(p3[5] == std::vector<int>{2, 1, 0});
    CHECK_THROWS_AS(permutation_table(0), ConfigError);
    CHECK_THROWS_AS(permutation_table(7), ConfigError);
}

TEST_CASE("assignment weights match direct enumeration") {
    std::vector<double> betas = {1.0, 0.9, 0.8};
    std::vector<double> pots = {1.0, 2.0, 3.0};
    SubsetWeights sw = subset_weights(betas, pots);
    std::vector<double> ref = enumerate_weights(betas, pots);
    REQUIRE(sw.prob.size() == ref.size());
    for (std::size_t s = 0; s < ref.size(); ++s)
        CHECK(std::abs(sw.prob[s] - ref[s]) <= 1e-12);

    RngStream rng(515);
    for (int m = 2; m <= 4; ++m)
        for (int trial = 0; trial < 25; ++trial) {
            std::vector<double> b(m), u(m);
            b[0] = 1.0;
            for (int i = 1; i < m; ++i) b[i] = b[i - 1] * (0.5 + 0.45 * rng.uniform());
            for (int i = 0; i < m; ++i) u[i] = 5.0 * rng.normal();
            SubsetWeights got = subset_weights(b, u);
            std::vector<double> want = enumerate_weights(b, u);
            double sum = 0.0;
            for (std::size_t s = 0; s < want.size(); ++s) {
                CHECK(std::abs(got.prob[s] - want[s]) <= 1e-12);
                sum += got.prob[s];
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }

    CHECK_THROWS_AS(subset_weights({1.0, 0.5}, {1.0}), DomainError);
    CHECK(subset_weights({1.0}, {3.7}).prob == std::vector<double>{1.0});
}

TEST_CASE("assignment weights are exactly invariant under potential shifts") {
    // Dyadic inputs: every product and sum below is exact in binary floating
    // point, so the two runs must agree bit for bit.
    std::vector<double> betas = {1.0, 0.5, 0.25};
    std::vector<double> pots = {1.0, 2.0, 4.0};
    std::vector<double> shifted = {9.0, 10.0, 12.0};
    CHECK(subset_weights(betas, pots).prob == subset_weights(betas, shifted).prob);

    RngStream rng(808);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> b = {1.0, 0.4 + 0.5 * rng.uniform(), 0.3 * rng.uniform() + 1e-3};
        std::sort(b.rbegin(), b.rend());
        b[0] = 1.0;
        std::vector<double> u = {3.0 * rng.normal(), 3.0 * rng.normal(), 3.0 * rng.normal()};
        double c = 10.0 * rng.normal();
        std::vector<double> us = u;
        for (double& v : us) v += c;
        SubsetWeights w1 = subset_weights(b, u), w2 = subset_weights(b, us);
        for (std::size_t s = 0; s < w1.prob.size(); ++s)
            CHECK(std::abs(w1.prob[s] - w2.prob[s]) <= 1e-13);
    }
}

TEST_CASE("assignment mixing masses are doubly stochastic and conserve the ladder") {
    RngStream rng(99);
    for (int m = 1; m <= 5; ++m)
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> b(m), u(m);
            b[0] = 1.0;
            for (int i = 1; i < m; ++i) b[i] = b[i - 1] * (0.4 + 0.55 * rng.uniform());
            for (int i = 0; i < m; ++i) u[i] = 4.0 * rng.normal();
            SubsetMix mix = subset_mix(b, u);

            double beta_sum = 0.0;
            for (int p = 0; p < m; ++p) {
                double rs = 0.0, cs = 0.0;
                for (int q = 0; q < m; ++q) {
                    rs += mix.mass[p][q];
                    cs += mix.mass[q][p];
                }
                CHECK(std::abs(rs - 1.0) <= 1e-12);
                CHECK(std::abs(cs - 1.0) <= 1e-12);
                CHECK(mix.beta_bar[p] >= b[m - 1] - 1e-12);
                CHECK(mix.beta_bar[p] <= b[0] + 1e-12);
                beta_sum += mix.beta_bar[p];
            }
            double want = 0.0;
            for (double bb : b) want += bb;
            CHECK(std::abs(beta_sum - want) <= 1e-12);
        }
}

TEST_CASE("effective temperatures interpolate and saturate") {
    // Equal potentials: the assignment is uniform, every position averages
    // the ladder.
    SubsetMix mix = subset_mix({1.0, 0.8}, {2.5, 2.5});
    CHECK(mix.beta_bar[0] == Catch::Approx(0.9).margin(1e-15));
    CHECK(mix.beta_bar[1] == Catch::Approx(0.9).margin(1e-15));

    // A huge potential gap pins the assignment: low energy takes high beta.
    mix = subset_mix({1.0, 0.5}, {0.0, 100.0});
    CHECK(mix.beta_bar[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(mix.beta_bar[1] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("assignment resampling consumes no randomness for singletons") {
    RngStream a(31), b(31);
    SubsetWeights sw = subset_weights({1.0}, {4.2});
    CHECK(resample_assignment(sw, a) == 0);
    CHECK(a.uniform() == b.uniform());  // stream untouched
}

TEST_CASE("assignment resampling matches its distribution") {
    SubsetWeights sw = subset_weights({1.0, 0.5}, {0.0, 4.0});
    RngStream rng(1212);
    const int n = 10000;
    double id = 0.0;
    for (int i = 0; i < n; ++i)
        if (resample_assignment(sw, rng) == 0) id += 1.0 / n;
    CHECK(std::abs(id - sw.prob[0]) < 0.02);

    SubsetWeights even = subset_weights({1.0, 0.5}, {1.0, 1.0});
    double id2 = 0.0;
    for (int i = 0; i < n; ++i)
        if (resample_assignment(even, rng) == 0) id2 += 1.0 / n;
    CHECK(std::abs(id2 - 0.5) < 0.02);
}

TEST_CASE("exchange ratios reproduce hand values and are antisymmetric") {
    Ladder ladder{{1.0, 0.5}};
    std::vector<double> pots = {0.0, 2.0};
    std::vector<int> id = {0, 1}, swp = {1, 0};

    CHECK(exchange_log_ratio(ladder, pots, id, swp) == Catch::Approx(-1.0).margin(1e-15));
    CHECK(exchange_acceptance(ladder, pots, id, swp) ==
          Catch::Approx(std::exp(-1.0)).margin(1e-15));
    CHECK(exchange_acceptance(ladder, pots, swp, id) == 1.0);
    CHECK(exchange_acceptance(ladder, pots, id, id) == 1.0);
    CHECK(exchange_acceptance(ladder, {3.0, 3.0}, id, swp) == 1.0);

    RngStream rng(66);
    Ladder l4{{1.0, 0.7, 0.4, 0.2}};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> u(4);
        for (double& v : u) v = 5.0 * rng.normal();
        auto& perms = permutation_table(4);
        const auto& s1 = perms[rng.uniform_index(perms.size())];
        const auto& s2 = perms[rng.uniform_index(perms.size())];
        double fwd = exchange_log_ratio(l4, u, s1, s2);
        double bwd = exchange_log_ratio(l4, u, s2, s1);
        CHECK(fwd == -bwd);
    }
}

TEST_CASE("joint envelopes clip per particle and bound the group rate") {
    // Lone particle, no jump channel: coefficients pass through unclipped.
    AffineEnvelope lone = total_event_envelope({{-2.0, 3.0, 5.0}}, 0.7, 2.0, 0.0, false);
    CHECK(lone.a == Catch::Approx(-2.8).margin(1e-15));
    CHECK(lone.b == Catch::Approx(4.2).margin(1e-15));
    CHECK(lone.horizon == 5.0);

    // Two particles whose bounce parts vanish: only the jump bound remains.
    AffineEnvelope jz =
        total_event_envelope({{-1.0, -2.0, 3.0}, {-0.5, 0.0, 4.0}}, 1.0, 1.0, 1.5, true);
    CHECK(jz.a == 3.0);
    CHECK(jz.b == 0.0);
    CHECK(jz.horizon == 3.0);

    CHECK_THROWS_AS(total_event_envelope({}, 1.0, 1.0, 0.0, false), DomainError);

    // Per-term clipping dominates the clipped sum of affine rates on a grid.
    RngStream rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        int m = 1 + static_cast<int>(rng.uniform_index(4));
        std::vector<AffineEnvelope> units;
        for (int i = 0; i < m; ++i)
            units.push_back({3.0 * rng.normal(), 3.0 * rng.normal(), 0.5 + 2.0 * rng.uniform()});
        double bmax = 0.2 + rng.uniform(), ab = 0.2 + rng.uniform(), aj = rng.uniform();
        bool jumps = rng.uniform() < 0.5;
        AffineEnvelope tot = total_event_envelope(units, bmax, ab, aj, jumps);
        for (int g = 0; g <= 16; ++g) {
            double t = tot.horizon * g / 16.0;
            double need = jumps ? m * aj : 0.0;
            for (const auto& u : units) need += bmax * ab * std::max(0.0, u.a + u.b * t);
            CHECK(envelope_value(tot, t) >= need - 1e-12 * (1.0 + need));
        }
    }
}

TEST_CASE("partition pairs accept the documented interleaving layouts") {
    PartitionPair gmm{{{0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9}},
                      {{0, 1}, {2, 3, 4, 5}, {6, 7, 8, 9}},
                      0.1,
                      10};
    CHECK_NOTHROW(gmm.validate(10));

    PartitionPair neal{{{0, 1, 2}, {3, 4}}, {{0, 1}, {2, 3, 4}}, 0.1, 10};
    CHECK_NOTHROW(neal.validate(5));

    PartitionPair small{{{0, 1}, {2}}, {{0}, {1, 2}}, 0.25, 4};
    CHECK_NOTHROW(small.validate(3));

    PartitionPair trivial{{{0}}, {{0}}, 0.5, 1};
    CHECK_NOTHROW(trivial.validate(1));
}

TEST_CASE("partition pairs reject malformed or non-interleaving layouts") {
    PartitionPair missing{{{0, 1}}, {{0}, {1, 2}}, 0.1, 1};
    CHECK_THROWS_AS(missing.validate(3), ConfigError);

    PartitionPair repeated{{{0, 1}, {1, 2}}, {{0}, {1, 2}}, 0.1, 1};
    CHECK_THROWS_AS(repeated.validate(3), ConfigError);

    PartitionPair empty_block{{{0, 1, 2}, {}}, {{0}, {1, 2}}, 0.1, 1};
    CHECK_THROWS_AS(empty_block.validate(3), ConfigError);

    PartitionPair out_of_range{{{0, 1}, {2, 3}}, {{0}, {1, 2, 3}}, 0.1, 1};
    CHECK_THROWS_AS(out_of_range.validate(3), ConfigError);

    PartitionPair same{{{0, 1}, {2, 3}}, {{0, 1}, {2, 3}}, 0.1, 1};
    CHECK_THROWS_AS(same.validate(4), ConfigError);

    PartitionPair bad_t{{{0, 1}, {2}}, {{0}, {1, 2}}, 0.0, 1};
    CHECK_THROWS_AS(bad_t.validate(3), ConfigError);

    PartitionPair bad_ns{{{0, 1}, {2}}, {{0}, {1, 2}}, 0.1, 0};
    CHECK_THROWS_AS(bad_ns.validate(3), ConfigError);

    PartitionPair too_big{{{0, 1, 2, 3, 4, 5, 6}}, {{0, 1, 2, 3, 4, 5, 6}}, 0.1, 1};
    CHECK_THROWS_AS(too_big.validate(7), ConfigError);
}

TEST_CASE("trace rearrangement applies per-sample assignments") {
    SampleTrace t0 = make_trace(1, {10.0, 11.0, 12.0}, {0, 0, 0});
    SampleTrace t1 = make_trace(1, {20.0, 21.0, 22.0}, {1, 1, 1});

    auto same = rearrange_trace({t0, t1}, {{0, 1}, {0, 1}, {0, 1}});
    CHECK(same[0].xs == t0.xs);
    CHECK(same[1].xs == t1.xs);

    auto swapped = rearrange_trace({t0, t1}, {{0, 1}, {1, 0}, {0, 1}});
    CHECK(swapped[0].xs == std::vector<double>{10.0, 21.0, 12.0});
    CHECK(swapped[1].xs == std::vector<double>{20.0, 11.0, 22.0});
    CHECK(swapped[0].ys == std::vector<int>{0, 1, 0});

    CHECK_THROWS_AS(rearrange_trace({t0, t1}, {{0, 1}, {1, 1}, {0, 1}}), DataError);
    CHECK_THROWS_AS(rearrange_trace({t0, t1}, {{0, 1}, {1, 0}}), DataError);
    SampleTrace shorter = make_trace(1, {1.0}, {0});
    CHECK_THROWS_AS(rearrange_trace({t0, shorter}, {{0, 1}, {0, 1}, {0, 1}}), DataError);
}

TEST_CASE("a single-slot ladder reduces to the plain mixed sampler exactly") {
    WellsModel m({-0.4, 0.6}, {0.0, 0.5});
    MhUniformKernel kernel;
    Ladder ladder{{1.0}};
    PartitionPair parts{{{0}}, {{0}}, 0.3, 1};

    for (double aj : {0.0, 1.5}) {
        BpsConfig cfg;
        cfg.num_samples = 60;
        cfg.sample_dt = 0.3;  // matches n_s * t_beta
        cfg.rates = {1.0, aj, 1.0};
        cfg.seed = 271828;
        cfg.record_velocities = true;

        PtResult pt = run_bpspt_infinite(m, &kernel, ladder, parts, cfg);
        SampleTrace ref = run_bps_mixed(m, kernel, cfg);

        REQUIRE(pt.traces.size() == 1);
        CHECK(pt.traces[0].xs == ref.xs);
        CHECK(pt.traces[0].ys == ref.ys);
        CHECK(pt.traces[0].vs == ref.vs);
        CHECK(pt.traces[0].times == ref.times);
        CHECK(pt.events.bounces == ref.events.bounces);
        CHECK(pt.events.jumps == ref.events.jumps);
        CHECK(pt.events.refreshes == ref.events.refreshes);
        CHECK(pt.report.sigma_draws == 0);
    }
}

TEST_CASE("finite tempering with silent exchanges reproduces standalone chains per slot") {
    WellsModel m({-0.4, 0.6}, {0.0, 0.5});
    MhUniformKernel kernel;
    Ladder ladder{{1.0, 0.6, 0.3}};

    BpsConfig cfg;
    cfg.num_samples = 50;
    cfg.sample_dt = 0.5;
    cfg.rates = {1.0, 0.8, 1.0};
    cfg.seed = 909;
    cfg.record_velocities = true;

    PtResult pt = run_bpspt_finite(m, &kernel, ladder, 0.0, cfg);
    REQUIRE(pt.traces.size() == 3);
    CHECK(pt.report.exchanges_proposed == 0);

    for (int k = 0; k < 3; ++k) {
        BpsConfig solo = cfg;
        solo.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k));
        SampleTrace ref = detail::run_chain(m, &kernel, ladder.betas[k], solo);
        CHECK(pt.traces[k].xs == ref.xs);
        CHECK(pt.traces[k].ys == ref.ys);
        CHECK(pt.traces[k].vs == ref.vs);
    }
}

TEST_CASE("finite tempering proposes and accepts exchanges") {
    WellsModel m({0.0, 2.0}, {0.0, 1.0});
    SuwaTodoKernel kernel;
    Ladder ladder{{1.0, 0.5, 0.2}};

    BpsConfig cfg;
    cfg.num_samples = 2000;
    cfg.sample_dt = 1.0;
    cfg.rates = {1.0, 1.0, 1.0};
    cfg.seed = 5555;

    PtResult pt = run_bpspt_finite(m, &kernel, ladder, 1.0, cfg);
    REQUIRE(pt.traces.size() == 3);
    // Proposal clock: Poisson((L-1) * alpha_s * T) = Poisson(4000).
    CHECK(std::abs(static_cast<double>(pt.report.exchanges_proposed) - 4000.0) < 300.0);
    CHECK(pt.report.exchanges_accepted > 0);
    CHECK(pt.report.exchanges_accepted <= pt.report.exchanges_proposed);
    CHECK(pt.events.exchanges_proposed == pt.report.exchanges_proposed);
    for (int k = 0; k < 3; ++k) {
        CHECK(pt.traces[k].size() == 2000);
        CHECK(pt.traces[k].times.back() == 2000.0);
    }
}

TEST_CASE("infinite tempering mixes a two-state target across a three-rung ladder") {
    WellsModel m({0.0, 0.5}, {0.0, std::log(2.0)});
    SuwaTodoKernel kernel;
    Ladder ladder{{1.0, 0.6, 0.3}};
    PartitionPair parts{{{0, 1}, {2}}, {{0}, {1, 2}}, 0.25, 4};

    BpsConfig cfg;
    cfg.num_samples = 4000;
    cfg.rates = {1.0, 1.0, 1.0};
    cfg.seed = 13579;

    PtResult pt = run_bpspt_infinite(m, &kernel, ladder, parts, cfg);
    REQUIRE(pt.traces.size() == 3);
    CHECK(pt.report.epochs == 16000);
    CHECK(pt.report.sigma_draws == pt.report.epochs);  // one pair per epoch
    CHECK(pt.report.sigma_nonidentity > 0);
    CHECK(pt.events.jumps > 0);
    CHECK(pt.events.refreshes > 0);

    double mb_sum = 0.0;
    for (int k = 0; k < 3; ++k) {
        double mb = pt.report.mean_effective_beta[k];
        CHECK(mb >= 0.3 - 1e-12);
        CHECK(mb <= 1.0 + 1e-12);
        mb_sum += mb;
    }
    CHECK(mb_sum == Catch::Approx(1.9).margin(1e-9));
    CHECK(pt.report.mean_effective_beta[0] > pt.report.mean_effective_beta[2]);

    for (int k = 0; k < 3; ++k) {
        REQUIRE(pt.traces[k].size() == 4000);
        CHECK(pt.traces[k].times[0] == Catch::Approx(1.0).margin(1e-12));  // n_s * t_beta
    }

    double f1 = 0.0;
    for (int y : pt.traces[0].ys) f1 += y;
    f1 /= 4000.0;
    CHECK(std::abs(f1 - 1.0 / 3.0) < 0.03);

    auto mix_cdf = [](double x) {
        return (2.0 / 3.0) * standard_normal_cdf(x) + (1.0 / 3.0) * standard_normal_cdf(x - 0.5);
    };
    CHECK(ks_one_sample(pt.traces[0].x_column(0), mix_cdf) < 0.04);
}

TEST_CASE("finite and infinite tempering agree on a double well's cold marginal") {
    Bimodal1DModel m(1.5, 0.5);
    Ladder ladder{{1.0, 0.5, 0.1}};

    BpsConfig cfg;
    cfg.num_samples = 3000;
    cfg.sample_dt = 1.0;
    cfg.rates = {1.0, 0.0, 1.0};
    cfg.seed = 24601;

    PtResult fin = run_bpspt_finite(m, nullptr, ladder, 1.0, cfg);

    PartitionPair parts{{{0, 1}, {2}}, {{0}, {1, 2}}, 0.5, 2};
    PtResult inf = run_bpspt_infinite(m, nullptr, ladder, parts, cfg);

    CHECK(ks_two_sample(fin.traces[0].x_column(0), inf.traces[0].x_column(0)) < 0.08);

    // Both runs must see actual temperature traffic for the test to mean
    // anything.
    CHECK(fin.report.exchanges_accepted > 100);
    CHECK(inf.report.sigma_nonidentity > 100);
}
