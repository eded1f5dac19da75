#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "bps/envelope.hpp"
#include "bps/errors.hpp"
#include "bps/rng.hpp"
#include "bps/state.hpp"

namespace bps {

// Target density on R^dim x {0..num_states-1}, represented by the potential
// U(x,y) = -log p(x,y) up to an additive constant.  Purely continuous
// targets use a singleton discrete set.
class TargetModel {
  public:
    virtual ~TargetModel() = default;

    virtual std::string name() const = 0;
    virtual int dim() const = 0;
    virtual int num_states() const { return 1; }

    virtual double potential(const Vec& x, int y) const = 0;
    virtual void gradient(const Vec& x, int y, Vec& out) const = 0;

    // States reachable by one jump from y, in a fixed enumeration order.
    // Neighbor sets must be symmetric (y' in nbr(y) iff y in nbr(y')) and of
    // equal size where the Metropolis kernel is used.
    virtual void neighbors(int y, std::vector<int>& out) const {
        (void)y;
        out.clear();
    }

    // Affine upper bound for the directional derivative
    //   g(t) = <v, grad U(x + t v, y)>,   t in [0, horizon],
    // i.e. a + b*t >= g(t) there, with horizon <= max_horizon.  Tight
    // (equality) for conditionally Gaussian targets.
    virtual AffineEnvelope bounce_envelope(const Vec& x, int y, const Vec& v,
                                           double max_horizon) const = 0;

    virtual bool has_exact_sampler() const { return false; }
    // Independent draw from the target; draw order is model-documented.
    virtual MixedState exact_draw(RngStream&) const {
        throw DomainError("model has no exact sampler");
    }

    // Exact marginal distribution of y, when the model can enumerate it.
    virtual bool has_state_marginals() const { return false; }
    virtual std::vector<double> state_marginals() const {
        throw DomainError("model has no closed-form state marginals");
    }

    void check_state(const Vec& x, int y) const {
        if (static_cast<int>(x.size()) != dim()) throw DomainError("state dimension mismatch");
        if (y < 0 || y >= num_states()) throw DomainError("discrete state out of range");
    }

    double checked_potential(const Vec& x, int y) const {
        check_state(x, y);
        double u = potential(x, y);
        if (!std::isfinite(u)) throw ModelError("potential evaluated to a non-finite value");
        return u;
    }
};

// U(x1,y1) - U(x2,y2); invariant under any constant shift of U.  All
// acceptance ratios go through differences, never absolute potentials.
inline double potential_difference(const TargetModel& m, const Vec& x1, int y1, const Vec& x2,
                                   int y2) {
    m.check_state(x1, y1);
    m.check_state(x2, y2);
    double d = m.potential(x1, y1) - m.potential(x2, y2);
    if (!std::isfinite(d)) throw ModelError("potential difference is non-finite");
    return d;
}

// Tempered bounce rate beta * alpha_b * max{0, <v, grad U(x,y)>}.
inline double bounce_rate(const TargetModel& m, const MixedState& s, double beta,
                          double alpha_b) {
    m.check_state(s.x, s.y);
    Vec g(s.x.size());
    m.gradient(s.x, s.y, g);
    double d = dot(s.v, g);
    return d > 0.0 ? beta * alpha_b * d : 0.0;
}

/// Reflection of v in the hyperplane orthogonal to grad:
//   v - 2 <v,grad>/<grad,grad> * grad.
// Norm-preserving involution; independent of any temperature scaling of
// the potential (the gradient direction is all that enters).
inline Vec reflect(const Vec& v, const Vec& grad) {
    double g2 = sqnorm(grad);
    if (!(g2 > 0.0) || !std::isfinite(g2))
        throw DomainError("reflection undefined for zero or non-finite gradient");
    double c = 2.0 * dot(v, grad) / g2;
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - c * grad[i];
    return out;
}

// Fresh velocity: dim iid standard normals (one Box-Muller pair each).
inline Vec refresh_velocity(int dim, RngStream& rng) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = rng.normal();
    return v;
}

}  // namespace bps
