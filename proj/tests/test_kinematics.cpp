#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bps/model.hpp"
#include "bps/models/gmm.hpp"
#include "bps/models/toy.hpp"
#include "bps/rng.hpp"

using namespace bps;

namespace {

// Planar potential U(x) = <g,x> with a constant gradient; lets the rate and
// reflection formulas be checked against hand values.
class LinearModel final : public TargetModel {
  public:
    explicit LinearModel(Vec g) : g_(std::move(g)) {}
    std::string name() const override { return "linear"; }
    int dim() const override { return static_cast<int>(g_.size()); }
    double potential(const Vec& x, int) const override { return dot(g_, x); }
    void gradient(const Vec&, int, Vec& out) const override { out = g_; }
    AffineEnvelope bounce_envelope(const Vec&, int, const Vec& v,
                                   double max_horizon) const override {
        return {dot(v, g_), 0.0, max_horizon};
    }

  private:
    Vec g_;
};

Vec random_vec(RngStream& rng, int n, bool nonzero = false) {
    Vec v(n);
    for (;;) {
        for (int i = 0; i < n; ++i) v[i] = rng.normal();
        if (!nonzero || sqnorm(v) > 1e-8) return v;
    }
}

}  // namespace

TEST_CASE("reflection matches hand-computed cases") {
    CHECK(reflect({1.0, 1.0}, {1.0, 0.0}) == Vec{-1.0, 1.0});
    CHECK(reflect({2.0, 0.0}, {1.0, 0.0}) == Vec{-2.0, 0.0});
    CHECK(reflect({0.0, 1.0}, {1.0, 0.0}) == Vec{0.0, 1.0});
}

TEST_CASE("reflection is a norm-preserving involution that flips the directional derivative") {
    RngStream rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = 1 + static_cast<int>(rng.uniform_index(8));
        Vec v = random_vec(rng, n);
        Vec g = random_vec(rng, n, true);

        Vec r = reflect(v, g);
        Vec rr = reflect(r, g);
        double scale = std::sqrt(sqnorm(v)) + 1e-30;
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(rr[i] - v[i]) <= 1e-12 * scale);
        CHECK(std::abs(std::sqrt(sqnorm(r)) - std::sqrt(sqnorm(v))) <= 1e-12 * scale);
        CHECK(std::abs(dot(r, g) + dot(v, g)) <= 1e-12 * (std::abs(dot(v, g)) + scale));
    }
}

TEST_CASE("reflection ignores the gradient's scale") {
    RngStream rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        int n = 1 + static_cast<int>(rng.uniform_index(6));
        Vec v = random_vec(rng, n);
        Vec g = random_vec(rng, n, true);

        // Power-of-two scalings are exact in floating point.
        Vec g4(n);
        for (int i = 0; i < n; ++i) g4[i] = 4.0 * g[i];
        CHECK(reflect(v, g4) == reflect(v, g));

        double c = 0.1 + 3.0 * rng.uniform();
        Vec gc(n);
        for (int i = 0; i < n; ++i) gc[i] = c * g[i];
        Vec a = reflect(v, g), b = reflect(v, gc);
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(a[i] - b[i]) <= 1e-12 * (1.0 + std::abs(a[i])));
    }
}

TEST_CASE("reflection rejects a zero gradient") {
    CHECK_THROWS_AS(reflect({1.0, 2.0}, {0.0, 0.0}), DomainError);
}

TEST_CASE("bounce rate clips, scales with beta, and scales with alpha_b") {
    MixedState s;
    s.x = {0.0, 0.0};

    LinearModel down({-3.0, 5.0});
    s.v = {1.0, 0.0};
    CHECK(bounce_rate(down, s, 1.0, 1.0) == 0.0);

    LinearModel up({2.0, 1.0});
    s.v = {1.0, 1.0};
    CHECK(bounce_rate(up, s, 1.0, 1.0) == 3.0);
    CHECK(bounce_rate(up, s, 0.5, 1.0) == 1.5);
    CHECK(bounce_rate(up, s, 1.0, 2.5) == 7.5);

    RngStream rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        LinearModel m(random_vec(rng, 3, true));
        s.x = random_vec(rng, 3);
        s.v = random_vec(rng, 3);
        double beta = 0.05 + rng.uniform();
        double ab = 0.05 + 2.0 * rng.uniform();
        double base = bounce_rate(m, s, 1.0, 1.0);
        CHECK(bounce_rate(m, s, beta, ab) == Catch::Approx(beta * ab * base).margin(1e-14));
        CHECK(base >= 0.0);
    }
}

TEST_CASE("velocity refresh is seeded, reproducible, standard normal") {
    RngStream a(12345), b(12345), c(54321);
    Vec va = refresh_velocity(3, a);
    CHECK(va == refresh_velocity(3, b));
    CHECK(va != refresh_velocity(3, c));

    RngStream rng(31);
    const int n = 100000;
    double mean[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) {
        Vec v = refresh_velocity(3, rng);
        for (int d = 0; d < 3; ++d) {
            mean[d] += v[d];
            sq[d] += v[d] * v[d];
        }
    }
    for (int d = 0; d < 3; ++d) {
        mean[d] /= n;
        double var = sq[d] / n - mean[d] * mean[d];
        CHECK(std::abs(mean[d]) < 0.02);
        CHECK(std::abs(var - 1.0) < 0.03);
    }
}

TEST_CASE("potential differences") {
    StdGaussianModel gauss(1);
    CHECK(potential_difference(gauss, {1.0}, 0, {1.0}, 0) == 0.0);
    CHECK(potential_difference(gauss, {1.0}, 0, {0.0}, 0) == 0.5);

    // Shared offsets cancel exactly in the difference.
    WellsModel w({0.0, 2.0}, {0.3, 1.1});
    WellsModel ws({0.0, 2.0}, {0.3 + 7.0, 1.1 + 7.0});
    RngStream rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        Vec x1 = {3.0 * rng.normal()}, x2 = {3.0 * rng.normal()};
        int y1 = static_cast<int>(rng.uniform_index(2));
        int y2 = static_cast<int>(rng.uniform_index(2));
        double d = potential_difference(w, x1, y1, x2, y2);
        CHECK(potential_difference(ws, x1, y1, x2, y2) == Catch::Approx(d).margin(1e-12));
    }

    // Mixture states: difference equals the directly evaluated
    // -log unnormalized density gap.
    Gmm24Model gmm;
    for (int trial = 0; trial < 20; ++trial) {
        Vec x1 = random_vec(rng, gmm.dim()), x2 = random_vec(rng, gmm.dim());
        int y1 = static_cast<int>(rng.uniform_index(4));
        int y2 = static_cast<int>(rng.uniform_index(4));
        double direct = 0.0;
        for (int d = 0; d < gmm.dim(); ++d) {
            double r1 = x1[d] - gmm.center(y1)[d], r2 = x2[d] - gmm.center(y2)[d];
            direct += r1 * r1 / 6.0 - r2 * r2 / 6.0;
        }
        direct += std::log(gmm.cluster_weight(y2)) - std::log(gmm.cluster_weight(y1));
        CHECK(potential_difference(gmm, x1, y1, x2, y2) ==
              Catch::Approx(direct).margin(1e-9));
    }

    CHECK_THROWS_AS(potential_difference(gauss, {1.0, 2.0}, 0, {0.0}, 0), DomainError);
    CHECK_THROWS_AS(potential_difference(w, {0.0}, 2, {0.0}, 0), DomainError);
}
