#pragma once

#include <cstdint>
#include <vector>

#include "magkit/heatflow.hpp"
#include "magkit/kmap.hpp"
#include "magkit/rng.hpp"
#include "magkit/vec.hpp"

namespace magkit {

enum class Clock { S, T };

// Crossing of the tie locus during a limit-dynamics integration. pre_force
// is the force modulus against the incoming branch at the localized point;
// post_force uses the hull selection there.
struct ShockEvent {
    double time = 0.0;
    double pre_force = 0.0;
    double post_force = 0.0;
    int tie_size = 0;
};

struct Trajectory {
    Clock clock = Clock::T;
    std::vector<double> times;
    std::vector<Vec> positions;
    std::vector<Vec> velocities;  // may be empty for sampled paths
    std::vector<ShockEvent> events;
    // work-energy theorem residual of the integrator, max over steps
    double energy_residual = 0.0;

    bool has_velocities() const { return !velocities.empty(); }
};

// kappa_s curve. power: kappa_s = 2s; constant: kappa_s = c; table:
// piecewise linear through given nodes.
class KappaSchedule {
public:
    enum class Kind { Power, Constant, Table };

    static KappaSchedule power();
    static KappaSchedule constant(double c);
    static KappaSchedule table(std::vector<double> s, std::vector<double> kappa);

    double value(double s) const;
    double derivative(double s) const;
    Kind kind() const { return kind_; }

private:
    Kind kind_ = Kind::Power;
    double c_ = 1.0;
    std::vector<double> s_nodes_, k_nodes_;
};

// Newton dynamics of the mixture flow, integrated by velocity Verlet
// along characteristics: acceleration = m_velocity + force_field.
Trajectory integrate_eps_mag(const Vec& y0, const Vec& v0, double t0, double t1, double h,
                             const FlowParams& params);

// Classical RK4 on the (position, velocity) system; cross-check for the
// Verlet integrator.
Trajectory integrate_eps_mag_rk4(const Vec& y0, const Vec& v0, double t0, double t1, double h,
                                 const FlowParams& params);

// Limit dynamics: acceleration = y - proj_o(y). Tie-locus crossings are
// localized by step halving (8 levels) and logged as shock events.
Trajectory integrate_mag_limit(const Vec& y0, const Vec& v0, double t0, double t1, double h,
                               const PermutationOrbit& orbit, double rel_tol = 1e-9);

// Brownian cloud path: X_s = X_0 + sqrt(eps) B_s, X_0 uniform over the
// orbit, sampled exactly on the given s-grid.
Trajectory simulate_heat_path(std::uint64_t seed, const std::vector<double>& s_grid,
                              const FlowParams& params);

// Euler-Maruyama for dZ = r_velocity(Z) ds + sqrt(eta k^2 / kappa_s) dW.
// eta = 0 reduces to the deterministic characteristic flow.
Trajectory simulate_surfing_sde(const Vec& z0, double s0, double s1, double h,
                                const FlowParams& params, double eta,
                                const KappaSchedule& kappa, std::uint64_t seed);

enum class ActionVariant { EpsT, EpsS, MagLimit };

// Trapezoid quadrature of (1/2)|ydot - drift|_H^2 (weight), weight = 1 for
// the t-clock variants and kappa_s for the s-clock one. Velocities come
// from the trajectory or centered differences.
double eval_action(const Trajectory& traj, ActionVariant variant, const FlowParams& params,
                   const KappaSchedule& kappa = KappaSchedule::power(), double rel_tol = 1e-9);

// s = e^{2t} both ways; positions are reindexed, velocities rescaled by
// ds/dt, event times mapped.
Trajectory reparameterize(const Trajectory& traj);

// Centered-difference velocities on the trajectory grid, one-sided at the
// endpoints.
std::vector<Vec> fd_velocities(const std::vector<double>& times, const std::vector<Vec>& pos);

}  // namespace magkit
