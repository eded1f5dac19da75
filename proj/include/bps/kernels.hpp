#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "bps/model.hpp"

namespace bps {

// Jump-weight generator w(y'|y) at inverse temperature beta.  Weights must
// satisfy the balance condition
//   sum_{y' != y} w(y'|y) p_beta(x,y) = sum_{y' != y} w(y|y') p_beta(x,y')
// and sum_{y' != y} w(y'|y) <= 1, so alpha_j bounds the total jump rate.
class DiscreteKernel {
  public:
    virtual ~DiscreteKernel() = default;
    virtual std::string name() const = 0;

    // Fills `targets` with the reachable states y' != y (fixed order) and
    // `w` with the matching weights.
    virtual void row(const TargetModel& m, const Vec& x, int y, double beta,
                     std::vector<int>& targets, std::vector<double>& w) const = 0;

    // Single weight w(y_to | y_from); mostly for tests.
    double weight(const TargetModel& m, const Vec& x, int y_from, int y_to,
                  double beta) const {
        std::vector<int> t;
        std::vector<double> w;
        row(m, x, y_from, beta, t, w);
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] == y_to) return w[i];
        return 0.0;
    }
};

// Uniform proposal over neighbors with a Metropolis correction:
//   w(y'|y) = min{1, exp(-beta (U(x,y') - U(x,y)))} / |nbr(y)|.
// Requires symmetric neighbor sets of equal size (checked implicitly by the
// balance tests, not at runtime).
class MhUniformKernel final : public DiscreteKernel {
  public:
    std::string name() const override { return "mh-uniform"; }

    void row(const TargetModel& m, const Vec& x, int y, double beta,
             std::vector<int>& targets, std::vector<double>& w) const override {
        m.neighbors(y, targets);
        if (targets.empty()) {
            w.clear();
            return;
        }
        double uy = m.checked_potential(x, y);
        double inv = 1.0 / static_cast<double>(targets.size());
        w.resize(targets.size());
        for (std::size_t i = 0; i < targets.size(); ++i) {
            double d = m.checked_potential(x, targets[i]) - uy;
            w[i] = inv * std::min(1.0, std::exp(-beta * d));
        }
    }
};

// Rejection-minimizing kernel via geometric weight allocation: stack the
// stationary weights (sorted descending, ties by state index) into boxes,
// shift the target boxes cyclically by the largest weight, and read flows
// off the interval overlaps.  Satisfies global (not detailed) balance:
// sum_y v(y -> y') = pi(y').  Needs the full state set enumerated.
class SuwaTodoKernel final : public DiscreteKernel {
  public:
    static constexpr int kMaxStates = 64;

    std::string name() const override { return "suwa-todo"; }

    void row(const TargetModel& m, const Vec& x, int y, double beta,
             std::vector<int>& targets, std::vector<double>& w) const override {
        const int n = m.num_states();
        if (n < 2) {
            targets.clear();
            w.clear();
            return;
        }
        if (n > kMaxStates)
            throw DomainError("suwa-todo kernel needs an enumerable state set (<= 64 states)");

        // Normalized stationary weights at this x.
        std::vector<double> logp(n), p(n);
        for (int k = 0; k < n; ++k) logp[k] = -beta * m.checked_potential(x, k);
        double mx = *std::max_element(logp.begin(), logp.end());
        double lambda = 0.0;
        for (int k = 0; k < n; ++k) lambda += p[k] = std::exp(logp[k] - mx);

        targets.clear();
        w.clear();
        targets.reserve(n - 1);
        w.reserve(n - 1);

        if (!(p[y] > 0.0)) {
            // Source state carries (numerically) zero mass: any stochastic
            // row preserves balance.  Spread uniformly.
            for (int k = 0; k < n; ++k)
                if (k != y) {
                    targets.push_back(k);
                    w.push_back(1.0 / (n - 1));
                }
            return;
        }

        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int i, int j) {
            if (p[i] != p[j]) return p[i] > p[j];
            return i < j;
        });
        std::vector<double> cum(n + 1, 0.0);  // box edges in sorted order
        for (int r = 0; r < n; ++r) cum[r + 1] = cum[r] + p[order[r]];
        std::vector<int> pos(n);  // state -> sorted position
        for (int r = 0; r < n; ++r) pos[order[r]] = r;

        const double shift = p[order[0]];
        const double s0 = cum[pos[y]], s1 = cum[pos[y] + 1];
        for (int k = 0; k < n; ++k) {
            if (k == y) continue;
            double t0 = cum[pos[k]] + shift, t1 = cum[pos[k] + 1] + shift;
            // Overlap of [s0,s1) with [t0,t1) mod lambda (target may wrap).
            double v = overlap(s0, s1, t0, t1, lambda);
            if (v > 0.0) {
                targets.push_back(k);
                w.push_back(v / p[y]);
            }
        }
        // Roundoff in the box edges can push the total a hair past 1 when
        // p[y] is a few ulps of lambda; rescale so alpha_j stays a true
        // bound on the jump rate.
        double sum = std::accumulate(w.begin(), w.end(), 0.0);
        if (sum > 1.0)
            for (double& v : w) v /= sum;
    }

  private:
    static double segment_overlap(double a0, double a1, double b0, double b1) {
        double lo = std::max(a0, b0), hi = std::min(a1, b1);
        return hi > lo ? hi - lo : 0.0;
    }

    static double overlap(double s0, double s1, double t0, double t1, double lambda) {
        if (t0 >= lambda) {  // shifted fully past the edge
            t0 -= lambda;
            t1 -= lambda;
        }
        if (t1 <= lambda) return segment_overlap(s0, s1, t0, t1);
        // Wrapped target: [t0, lambda) plus [0, t1 - lambda).
        return segment_overlap(s0, s1, t0, lambda) +
               segment_overlap(s0, s1, 0.0, t1 - lambda);
    }
};

inline std::unique_ptr<DiscreteKernel> make_kernel(const std::string& name) {
    if (name == "mh-uniform") return std::make_unique<MhUniformKernel>();
    if (name == "suwa-todo") return std::make_unique<SuwaTodoKernel>();
    throw ConfigError("unknown discrete kernel: " + name);
}

}  // namespace bps
