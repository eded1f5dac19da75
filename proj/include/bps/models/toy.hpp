#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "bps/model.hpp"

namespace bps {

// Standard normal in `dim` dimensions: U = |x|^2 / 2.
class StdGaussianModel final : public TargetModel {
  public:
    explicit StdGaussianModel(int dim) : dim_(dim) {
        if (dim < 1) throw ConfigError("dimension must be >= 1");
    }

    std::string name() const override { return "gauss" + std::to_string(dim_) + "d"; }
    int dim() const override { return dim_; }

    double potential(const Vec& x, int) const override { return 0.5 * sqnorm(x); }

    void gradient(const Vec& x, int, Vec& out) const override { out = x; }

    AffineEnvelope bounce_envelope(const Vec& x, int, const Vec& v,
                                   double max_horizon) const override {
        return {dot(v, x), sqnorm(v), max_horizon};  // exact
    }

    bool has_exact_sampler() const override { return true; }
    MixedState exact_draw(RngStream& rng) const override {
        MixedState s;
        s.x.resize(dim_);
        for (int i = 0; i < dim_; ++i) s.x[i] = rng.normal();
        return s;
    }

  private:
    int dim_;
};

// Symmetric 1-D double well: U(x) = (x^2 - a^2)^2 / (4 s).
// Modes at +-a, barrier height a^4/(4s) above them.
class Bimodal1DModel final : public TargetModel {
  public:
    Bimodal1DModel(double a, double s) : a_(a), s_(s) {
        if (!(a > 0.0) || !(s > 0.0)) throw ConfigError("bimodal1d needs a > 0, s > 0");
        prop_sd_ = std::max(a_, std::pow(4.0 * s_, 0.25));
        // Rejection bound for proposal N(0, sd^2):
        //   sup_x [ -U(x) + x^2/(2 sd^2) ] = a^2/(2 sd^2) + s/(4 sd^4),
        // attained at x^2 = a^2 + s/sd^2.
        double s2 = prop_sd_ * prop_sd_;
        log_bound_ = 0.5 * a_ * a_ / s2 + 0.25 * s_ / (s2 * s2);
    }

    std::string name() const override { return "bimodal1d"; }
    int dim() const override { return 1; }

    double potential(const Vec& x, int) const override {
        double d = x[0] * x[0] - a_ * a_;
        return 0.25 * d * d / s_;
    }

    void gradient(const Vec& x, int, Vec& out) const override {
        out.resize(1);
        out[0] = x[0] * (x[0] * x[0] - a_ * a_) / s_;
    }

    // g(t) = v U'(x+tv) is cubic in t; bound its slope on [0,h] through
    // R^2 = max over the window of (x+tv)^2:
    //   g'(t) = v^2 (3 (x+tv)^2 - a^2) / s <= v^2 (3 R^2 - a^2) / s.
    AffineEnvelope bounce_envelope(const Vec& x, int, const Vec& v,
                                   double max_horizon) const override {
        double h = std::min(max_horizon, 1.0 / (1.0 + std::abs(v[0])));
        double e0 = x[0], e1 = x[0] + v[0] * h;
        double r2 = std::max(e0 * e0, e1 * e1);
        double a = v[0] * e0 * (e0 * e0 - a_ * a_) / s_;
        double b = v[0] * v[0] * (3.0 * r2 - a_ * a_) / s_;
        return {a, b, h};
    }

    bool has_exact_sampler() const override { return true; }
    // Rejection from N(0, prop_sd^2).  Per attempt: one normal, then one
    // uniform; accept when u <= exp(-U(x) + x^2/(2 sd^2) - log_bound).
    MixedState exact_draw(RngStream& rng) const override {
        double s2 = prop_sd_ * prop_sd_;
        for (int attempt = 0; attempt < 100000; ++attempt) {
            double x = prop_sd_ * rng.normal();
            double d = x * x - a_ * a_;
            double log_acc = -0.25 * d * d / s_ + 0.5 * x * x / s2 - log_bound_;
            if (rng.uniform() <= std::exp(log_acc)) return MixedState{{x}, 0, {}};
        }
        throw ConfigError("bimodal1d rejection sampler efficiency below floor");
    }

  private:
    double a_, s_;
    double prop_sd_ = 1.0, log_bound_ = 0.0;
};

// Mixture of 1-D unit-variance wells with per-state offsets:
//   U(x,y) = (x - m_y)^2 / 2 + c_y,   p(y) proportional to exp(-c_y).
// Every state neighbors every other state.  Small synthetic target for
// kernel-balance and mixed-sampler tests.
class WellsModel final : public TargetModel {
  public:
    WellsModel(std::vector<double> means, std::vector<double> offsets)
        : m_(std::move(means)), c_(std::move(offsets)) {
        if (m_.empty() || m_.size() != c_.size())
            throw ConfigError("wells model needs equal-length nonempty means/offsets");
    }

    std::string name() const override { return "wells" + std::to_string(m_.size()); }
    int dim() const override { return 1; }
    int num_states() const override { return static_cast<int>(m_.size()); }

    double potential(const Vec& x, int y) const override {
        double d = x[0] - m_[y];
        return 0.5 * d * d + c_[y];
    }

    void gradient(const Vec& x, int y, Vec& out) const override {
        out.resize(1);
        out[0] = x[0] - m_[y];
    }

    void neighbors(int y, std::vector<int>& out) const override {
        out.clear();
        for (int k = 0; k < num_states(); ++k)
            if (k != y) out.push_back(k);
    }

    AffineEnvelope bounce_envelope(const Vec& x, int y, const Vec& v,
                                   double max_horizon) const override {
        return {v[0] * (x[0] - m_[y]), v[0] * v[0], max_horizon};  // exact
    }

    bool has_state_marginals() const override { return true; }
    std::vector<double> state_marginals() const override {
        double zmin = *std::min_element(c_.begin(), c_.end());
        std::vector<double> p(c_.size());
        double z = 0.0;
        for (std::size_t k = 0; k < c_.size(); ++k) z += p[k] = std::exp(zmin - c_[k]);
        for (double& v : p) v /= z;
        return p;
    }

    bool has_exact_sampler() const override { return true; }
    // Draw order: one uniform for the state, one normal for x.
    MixedState exact_draw(RngStream& rng) const override {
        double zmax = *std::min_element(c_.begin(), c_.end());
        double total = 0.0;
        std::vector<double> w(c_.size());
        for (std::size_t k = 0; k < c_.size(); ++k) total += w[k] = std::exp(zmax - c_[k]);
        double u = rng.uniform() * total;
        int y = 0;
        for (std::size_t k = 0; k < w.size(); ++k) {
            if (u <= w[k] || k + 1 == w.size()) {
                y = static_cast<int>(k);
                break;
            }
            u -= w[k];
        }
        MixedState s;
        s.y = y;
        s.x = {m_[y] + rng.normal()};
        return s;
    }

  private:
    std::vector<double> m_, c_;
};

}  // namespace bps
