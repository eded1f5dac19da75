#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bps/model.hpp"

namespace bps {

// Two-level funnel-like posterior with a Bernoulli observation block:
//
//   x1 ~ N(0,1),  x2 | x1 ~ N(x1, sd^2),  y_i | x1 ~ Bern(1/(1+e^{x1})),
//   i = 1..20, with sd = 0.04.
//
// y is one discrete coordinate holding all 20 bits (bit i = y_i), so
//   U(x,y) = x1^2/2 + (x2-x1)^2/(2 sd^2) + 20 softplus(x1) - n0(y) x1,
// where n0(y) counts zero bits.  Jumps flip single bits:
// Delta U = +x1 (0 -> 1) or -x1 (1 -> 0).
class NealFunnelModel final : public TargetModel {
  public:
    static constexpr int kBits = 20;
    static constexpr double kSd = 0.04;

    std::string name() const override { return "neal"; }
    int dim() const override { return 2; }
    int num_states() const override { return 1 << kBits; }

    static double softplus(double t) {
        return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
    }

    static int zero_bits(int y) {
        return kBits - std::popcount(static_cast<std::uint32_t>(y));
    }

    double potential(const Vec& x, int y) const override {
        double d = (x[1] - x[0]) / kSd;
        return 0.5 * x[0] * x[0] + 0.5 * d * d + kBits * softplus(x[0]) -
               static_cast<double>(zero_bits(y)) * x[0];
    }

    void gradient(const Vec& x, int y, Vec& out) const override {
        out.resize(2);
        double d = (x[1] - x[0]) / (kSd * kSd);
        double sig = 1.0 / (1.0 + std::exp(-x[0]));  // softplus'
        out[0] = x[0] - d + kBits * sig - static_cast<double>(zero_bits(y));
        out[1] = d;
    }

    void neighbors(int y, std::vector<int>& out) const override {
        out.resize(kBits);
        for (int i = 0; i < kBits; ++i) out[i] = y ^ (1 << i);
    }

    // The x-part of g(t) is exactly affine; the logistic part is bounded by
    // 20 max{0, v1} since sigma lies in (0,1).
    AffineEnvelope bounce_envelope(const Vec& x, int y, const Vec& v,
                                   double max_horizon) const override {
        double dv = (v[1] - v[0]) / kSd;
        double a = x[0] * v[0] + (x[1] - x[0]) * (v[1] - v[0]) / (kSd * kSd) -
                   static_cast<double>(zero_bits(y)) * v[0] +
                   kBits * std::max(0.0, v[0]);
        double b = v[0] * v[0] + dv * dv;
        return {a, b, std::min(max_horizon, 1.0)};
    }

    bool has_exact_sampler() const override { return true; }
    // Draw order: normal for x1, normal for x2, then 20 uniforms for the
    // bits in ascending bit order.
    MixedState exact_draw(RngStream& rng) const override {
        MixedState s;
        s.x.resize(2);
        s.x[0] = rng.normal();
        s.x[1] = s.x[0] + kSd * rng.normal();
        double p1 = 1.0 / (1.0 + std::exp(s.x[0]));
        int y = 0;
        for (int i = 0; i < kBits; ++i)
            if (rng.uniform() < p1) y |= 1 << i;
        s.y = y;
        return s;
    }
};

}  // namespace bps
