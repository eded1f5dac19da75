#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "bps/errors.hpp"

namespace bps {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double sqnorm(const Vec& a) { return dot(a, a); }

inline bool all_finite(const Vec& a) {
    for (double x : a)
        if (!std::isfinite(x)) return false;
    return true;
}

// Continuous position x, discrete coordinate y (index into the model's
// state set; 0 and ignored for purely continuous targets), velocity v.
struct MixedState {
    Vec x;
    int y = 0;
    Vec v;
};

// Event-rate multipliers shared by all samplers.
struct RateParams {
    double alpha_b = 1.0;    // bounce rate scale, > 0
    double alpha_j = 0.0;    // jump rate scale, >= 0 (0 disables jumps)
    double lambda_ref = 1.0; // velocity refresh rate, > 0

    void validate() const {
        if (!(alpha_b > 0.0)) throw ConfigError("alpha_b must be positive");
        if (!(alpha_j >= 0.0)) throw ConfigError("alpha_j must be nonnegative");
        if (!(lambda_ref > 0.0)) throw ConfigError("lambda_ref must be positive");
    }
};

}  // namespace bps
