#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "bps/model.hpp"

namespace bps {

// Four-component Gaussian mixture in 24 dimensions with isotropic
// covariance 3 I and far-apart, equidistant centers:
//
//   coordinate d of center k is pi_d(k), where pi_0..pi_23 are the 24
//   permutations of (-2, 0, 2, 4) in lexicographic order.
//
// Every pair of centers is then 320 apart in squared distance.  The mixture
// weight lives in the discrete coordinate: U(x,y) = -ln w_y + |x-mu_y|^2/6.
class Gmm24Model final : public TargetModel {
  public:
    static constexpr int kDim = 24;
    static constexpr int kClusters = 4;

    Gmm24Model() : weights_{0.15, 0.30, 0.30, 0.25} {
        std::array<double, 4> base{-2.0, 0.0, 2.0, 4.0};
        int d = 0;
        do {
            for (int k = 0; k < kClusters; ++k) centers_[k][d] = base[k];
            ++d;
        } while (std::next_permutation(base.begin(), base.end()) && d < kDim);
        for (int k = 0; k < kClusters; ++k) log_w_[k] = std::log(weights_[k]);
    }

    std::string name() const override { return "gmm24"; }
    int dim() const override { return kDim; }
    int num_states() const override { return kClusters; }

    double cluster_weight(int k) const { return weights_[k]; }
    const std::array<double, kDim>& center(int k) const { return centers_[k]; }

    double potential(const Vec& x, int y) const override {
        double s = 0.0;
        for (int d = 0; d < kDim; ++d) {
            double r = x[d] - centers_[y][d];
            s += r * r;
        }
        return s / 6.0 - log_w_[y];
    }

    void gradient(const Vec& x, int y, Vec& out) const override {
        out.resize(kDim);
        for (int d = 0; d < kDim; ++d) out[d] = (x[d] - centers_[y][d]) / 3.0;
    }

    void neighbors(int y, std::vector<int>& out) const override {
        out.clear();
        for (int k = 0; k < kClusters; ++k)
            if (k != y) out.push_back(k);
    }

    // g(t) = <v, x + tv - mu_y>/3 is exactly affine.
    AffineEnvelope bounce_envelope(const Vec& x, int y, const Vec& v,
                                   double max_horizon) const override {
        double a = 0.0;
        for (int d = 0; d < kDim; ++d) a += v[d] * (x[d] - centers_[y][d]);
        return {a / 3.0, sqnorm(v) / 3.0, max_horizon};
    }

    bool has_state_marginals() const override { return true; }
    std::vector<double> state_marginals() const override {
        return {weights_.begin(), weights_.end()};
    }

    bool has_exact_sampler() const override { return true; }
    // Draw order: one uniform for the cluster, then 24 normals.
    MixedState exact_draw(RngStream& rng) const override {
        double u = rng.uniform();
        int k = 0;
        double acc = 0.0;
        for (; k < kClusters - 1; ++k) {
            acc += weights_[k];
            if (u <= acc) break;
        }
        MixedState s;
        s.y = k;
        s.x.resize(kDim);
        const double sd = std::sqrt(3.0);
        for (int d = 0; d < kDim; ++d) s.x[d] = centers_[k][d] + sd * rng.normal();
        return s;
    }

  private:
    std::array<std::array<double, kDim>, kClusters> centers_{};
    std::array<double, kClusters> weights_;
    std::array<double, kClusters> log_w_{};
};

}  // namespace bps
