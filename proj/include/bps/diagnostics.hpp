#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bps/errors.hpp"

namespace bps {

// Two-sample Kolmogorov-Smirnov statistic: sup |F_a - F_b| via one merge
// sweep of the sorted samples; ties are consumed on both sides before the
// gap is measured.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw DataError("KS needs nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    // The step that exhausted one side already measured the tail gap; the
    // other side's remaining points only close in on 1.
    return d;
}

// One-sample KS against an analytic CDF.
template <class Cdf>
double ks_one_sample(std::vector<double> a, Cdf&& cdf) {
    if (a.empty()) throw DataError("KS needs a nonempty sample");
    std::sort(a.begin(), a.end());
    const double n = static_cast<double>(a.size());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double f = cdf(a[i]);
        d = std::max(d, std::max(f - i / n, (i + 1) / n - f));
    }
    return d;
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct EssResult {
    double ess = 0.0;
    double tau = 1.0;  // integrated autocorrelation time
};

// Effective sample size via the initial-positive-sequence truncation: sum
// autocorrelations while the even-odd lag pair sums stay positive,
// tau = 2 * sum(pairs) - 1, ESS = N / tau clamped to (0, N].
inline EssResult ess(const std::vector<double>& chain) {
    const std::size_t n = chain.size();
    if (n < 10) throw DataError("ESS needs a chain of at least 10 samples");
    double mean = 0.0;
    for (double v : chain) mean += v;
    mean /= static_cast<double>(n);

    auto gamma = [&](std::size_t k) {
        double s = 0.0;
        for (std::size_t t = 0; t + k < n; ++t)
            s += (chain[t] - mean) * (chain[t + k] - mean);
        return s / static_cast<double>(n);
    };
    double g0 = gamma(0);
    if (!(g0 > 0.0)) throw DataError("ESS undefined for a constant chain");

    double pair_sum = 0.0;
    for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
        double g = (gamma(2 * m) + gamma(2 * m + 1)) / g0;
        if (g <= 0.0) break;
        pair_sum += g;
    }
    EssResult r;
    r.tau = 2.0 * pair_sum - 1.0;
    if (r.tau > 1.0) {
        r.ess = static_cast<double>(n) / r.tau;
    } else {
        r.tau = 1.0;  // anti-correlated or degenerate truncation: clamp
        r.ess = static_cast<double>(n);
    }
    return r;
}

// Normalized occupancy of discrete states 0..K-1.
inline std::vector<double> cluster_probabilities(const std::vector<int>& ys, int k) {
    if (ys.empty()) throw DataError("empty discrete sample");
    std::vector<double> p(k, 0.0);
    for (int y : ys) {
        if (y < 0 || y >= k) throw DataError("discrete sample out of range");
        p[y] += 1.0;
    }
    for (double& v : p) v /= static_cast<double>(ys.size());
    return p;
}

// KL divergence sum_k p_k ln(p_k / q_k) from the target distribution p to
// the empirical distribution q formed by normalizing `counts` (raw counts or
// frequencies both work).  Returns +infinity where the target has mass but
// the sample has none.  `smoothing` > 0 adds that amount to every count
// before normalizing (additive smoothing; off by default).
inline double kld_discrete(const std::vector<double>& p, const std::vector<double>& counts,
                           double smoothing = 0.0) {
    if (p.size() != counts.size() || p.empty())
        throw DataError("KLD needs equal-length nonempty distributions");
    if (smoothing < 0.0) throw DataError("KLD smoothing must be nonnegative");
    double psum = 0.0;
    for (double v : p) {
        if (v < 0.0) throw DataError("KLD target probabilities must be nonnegative");
        psum += v;
    }
    if (std::abs(psum - 1.0) > 1e-9) throw DataError("KLD target probabilities must sum to 1");
    double total = 0.0;
    for (double c : counts) {
        if (c < 0.0) throw DataError("KLD counts must be nonnegative");
        total += c + smoothing;
    }
    if (!(total > 0.0)) throw DataError("KLD needs a nonempty sample");
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] == 0.0) continue;
        double q = (counts[k] + smoothing) / total;
        if (q <= 0.0) return std::numeric_limits<double>::infinity();
        s += p[k] * std::log(p[k] / q);
    }
    return s;
}

inline double mse_discrete(const std::vector<double>& est, const std::vector<double>& ref) {
    if (est.size() != ref.size() || est.empty())
        throw DataError("MSE needs equal-length nonempty vectors");
    double s = 0.0;
    for (std::size_t k = 0; k < est.size(); ++k) {
        double d = est[k] - ref[k];
        s += d * d;
    }
    return s / static_cast<double>(est.size());
}

}  // namespace bps
