#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "bps/errors.hpp"
#include "bps/rng.hpp"

namespace bps {

// Envelope rate t -> max{0, a + b*t}, valid for t in [0, horizon].
struct AffineEnvelope {
    double a = 0.0;
    double b = 0.0;
    double horizon = 0.0;

    void validate() const {
        if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(horizon))
            throw DomainError("envelope coefficients must be finite");
        if (!(horizon > 0.0)) throw DomainError("envelope horizon must be positive");
    }
};

inline double envelope_value(const AffineEnvelope& e, double t) {
    double r = e.a + e.b * t;
    return r > 0.0 ? r : 0.0;
}

// Integral of max{0, a + b*s} over [0, t].
inline double envelope_integral(const AffineEnvelope& e, double t) {
    const double a = e.a, b = e.b;
    if (a <= 0.0 && b <= 0.0) return 0.0;
    if (a >= 0.0) {
        if (b >= 0.0) return (a + 0.5 * b * t) * t;
        double t0 = -a / b;  // rate hits zero here
        double tc = t < t0 ? t : t0;
        return (a + 0.5 * b * tc) * tc;
    }
    // a < 0, b > 0: rate is zero until t0, then grows linearly.
    double t0 = -a / b;
    if (t <= t0) return 0.0;
    double s = t - t0;
    return 0.5 * b * s * s;
}

// First-arrival draw through the envelope's inhomogeneous Poisson law.
struct EventDraw {
    bool arrived = false;
    double dt = 0.0;  // meaningful only when arrived

    static EventDraw arrival(double t) { return {true, t}; }
    static EventDraw horizon_exhausted() { return {false, 0.0}; }
};

// Smallest t in [0, horizon] with integral(t) = -ln(u), or HorizonExhausted
// when the envelope's total mass over the horizon is below -ln(u).
inline EventDraw invert_affine_envelope(const AffineEnvelope& e, double u) {
    e.validate();
    if (!(u > 0.0 && u < 1.0)) throw DomainError("thinning uniform must lie in (0,1)");
    const double E = -std::log(u);
    const double a = e.a, b = e.b, T = e.horizon;

    if (a <= 0.0 && b <= 0.0) return EventDraw::horizon_exhausted();

    if (a < 0.0) {  // b > 0 here; dead zone [0, t0]
        double t0 = -a / b;
        if (t0 >= T) return EventDraw::horizon_exhausted();
        double span = T - t0;
        if (E > 0.5 * b * span * span) return EventDraw::horizon_exhausted();
        return EventDraw::arrival(t0 + std::sqrt(2.0 * E / b));
    }

    // a >= 0: integral is (a + b/2 t) t until the rate (possibly) hits zero.
    if (b < 0.0) {
        double t0 = -a / b;
        double teff = t0 < T ? t0 : T;
        if (E > (a + 0.5 * b * teff) * teff) return EventDraw::horizon_exhausted();
    } else {
        if (E > (a + 0.5 * b * T) * T) return EventDraw::horizon_exhausted();
    }
    // Stable smaller root of (b/2) t^2 + a t - E = 0.  The discriminant is
    // nonnegative: for b < 0 the exhaustion check above guarantees it.
    double disc = a * a + 2.0 * b * E;
    if (disc < 0.0) disc = 0.0;
    double denom = a + std::sqrt(disc);
    if (denom <= 0.0) return EventDraw::horizon_exhausted();  // a = b = 0 guard
    double t = 2.0 * E / denom;
    if (t > T) t = T;  // round-off at the boundary
    return EventDraw::arrival(t);
}

// Grid check that `rate` never exceeds the envelope on [0, horizon].
// Debug/test aid; the thinning loop also checks dominance for free at every
// proposal point.
template <class RateFn>
bool validate_envelope(RateFn&& rate, const AffineEnvelope& e, int grid_points = 257,
                       double tol = 1e-9) {
    e.validate();
    for (int i = 0; i <= grid_points; ++i) {
        double t = e.horizon * static_cast<double>(i) / grid_points;
        if (rate(t) > envelope_value(e, t) + tol) return false;
    }
    return true;
}

struct ThinResult {
    bool has_event = false;
    double elapsed = 0.0;  // event time if has_event, else == deadline
    std::uint64_t proposals = 0;
    std::uint64_t rejections = 0;
};

// First accepted event of the process with intensity `rate` before
// `deadline`, by thinning against piecewise-affine envelopes.
//
//   rate(t)                  true intensity at elapsed time t, >= 0
//   envelope_provider(t, r)  AffineEnvelope dominating rate on [t, t+horizon],
//                            horizon clamped to the remaining time r
//
// Uniform consumption order per round: one draw for the proposal position;
// if it lands within the horizon, one draw for accept/reject.
template <class RateFn, class EnvProvider>
ThinResult thin_next_event(RateFn&& rate, EnvProvider&& envelope_provider, double deadline,
                           RngStream& rng) {
    if (!(deadline > 0.0)) throw DomainError("thinning deadline must be positive");
    ThinResult res;
    double t = 0.0;
    for (;;) {
        double remaining = deadline - t;
        if (remaining <= 0.0) break;
        AffineEnvelope env = envelope_provider(t, remaining);
        env.validate();
        if (env.horizon > remaining) env.horizon = remaining;
        EventDraw d = invert_affine_envelope(env, rng.uniform());
        if (!d.arrived) {  // exhausted: skip the whole envelope window
            t += env.horizon;
            continue;
        }
        t += d.dt;
        double cap = envelope_value(env, d.dt);
        double r = rate(t);
        if (!(r >= 0.0) || !std::isfinite(r)) throw ModelError("event rate must be finite and nonnegative");
        if (r > cap * (1.0 + 1e-9) + 1e-12)
            throw DominanceError("event rate exceeds its thinning envelope");
        ++res.proposals;
        if (cap > 0.0 && rng.uniform() * cap <= r) {
            res.has_event = true;
            res.elapsed = t;
            return res;
        }
        ++res.rejections;
    }
    res.elapsed = deadline;
    return res;
}

}  // namespace bps
