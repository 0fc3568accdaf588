#include "magkit/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace magkit {

namespace {

int step_count(double t0, double t1, double h) {
    require(h > 0.0, "integrate: step must be positive");
    require(t1 > t0, "integrate: empty time interval");
    return std::max(1, static_cast<int>(std::llround((t1 - t0) / h)));
}

void check_finite(const Vec& y, double t) {
    for (double c : y)
        if (!std::isfinite(c))
            throw numeric_error("integrator produced a non-finite state at t=" + std::to_string(t));
}

template <typename Accel>
Trajectory verlet(const Vec& y0, const Vec& v0, double t0, double t1, double h, Accel&& accel) {
    const int n = step_count(t0, t1, h);
    const double dt = (t1 - t0) / n;

    Trajectory traj;
    traj.clock = Clock::T;
    traj.times.reserve(n + 1);
    traj.positions.reserve(n + 1);
    traj.velocities.reserve(n + 1);
    traj.times.push_back(t0);
    traj.positions.push_back(y0);
    traj.velocities.push_back(v0);

    Vec y = y0, v = v0;
    Vec a = accel(t0, y);
    double work = 0.0;
    const double e0 = 0.5 * norm2(v0);
    double max_resid = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = t0 + i * dt;
        Vec y_next = y;
        axpy(dt, v, y_next);
        axpy(0.5 * dt * dt, a, y_next);
        const Vec a_next = accel(t + dt, y_next);
        Vec v_next = v;
        axpy(0.5 * dt, a + a_next, v_next);
        // work-energy residual: d(kinetic) should equal the force's work
        const Vec dy = y_next - y;
        work += 0.5 * (dot(a, dy) + dot(a_next, dy));
        max_resid = std::max(max_resid, std::abs(0.5 * norm2(v_next) - e0 - work));
        y = std::move(y_next);
        v = std::move(v_next);
        a = a_next;
        check_finite(y, t + dt);
        traj.times.push_back(t + dt);
        traj.positions.push_back(y);
        traj.velocities.push_back(v);
    }
    traj.energy_residual = max_resid;
    return traj;
}

}  // namespace

KappaSchedule KappaSchedule::power() {
    KappaSchedule k;
    k.kind_ = Kind::Power;
    return k;
}

KappaSchedule KappaSchedule::constant(double c) {
    require(c > 0.0, "KappaSchedule: constant must be positive");
    KappaSchedule k;
    k.kind_ = Kind::Constant;
    k.c_ = c;
    return k;
}

KappaSchedule KappaSchedule::table(std::vector<double> s, std::vector<double> kappa) {
    require(s.size() >= 2 && s.size() == kappa.size(), "KappaSchedule: bad table");
    for (std::size_t i = 1; i < s.size(); ++i)
        require(s[i] > s[i - 1], "KappaSchedule: table abscissae must increase");
    for (double v : kappa) require(v > 0.0, "KappaSchedule: kappa must be positive");
    KappaSchedule k;
    k.kind_ = Kind::Table;
    k.s_nodes_ = std::move(s);
    k.k_nodes_ = std::move(kappa);
    return k;
}

double KappaSchedule::value(double s) const {
    switch (kind_) {
        case Kind::Power:
            return 2.0 * s;
        case Kind::Constant:
            return c_;
        case Kind::Table: {
            if (s <= s_nodes_.front()) return k_nodes_.front();
            if (s >= s_nodes_.back()) return k_nodes_.back();
            const auto it = std::upper_bound(s_nodes_.begin(), s_nodes_.end(), s);
            const std::size_t i = static_cast<std::size_t>(it - s_nodes_.begin());
            const double w = (s - s_nodes_[i - 1]) / (s_nodes_[i] - s_nodes_[i - 1]);
            return (1.0 - w) * k_nodes_[i - 1] + w * k_nodes_[i];
        }
    }
    return 0.0;
}

double KappaSchedule::derivative(double s) const {
    switch (kind_) {
        case Kind::Power:
            return 2.0;
        case Kind::Constant:
            return 0.0;
        case Kind::Table: {
            if (s < s_nodes_.front() || s > s_nodes_.back()) return 0.0;
            auto it = std::upper_bound(s_nodes_.begin(), s_nodes_.end(), s);
            std::size_t i = static_cast<std::size_t>(it - s_nodes_.begin());
            if (i == 0) i = 1;
            if (i >= s_nodes_.size()) i = s_nodes_.size() - 1;
            return (k_nodes_[i] - k_nodes_[i - 1]) / (s_nodes_[i] - s_nodes_[i - 1]);
        }
    }
    return 0.0;
}

Trajectory integrate_eps_mag(const Vec& y0, const Vec& v0, double t0, double t1, double h,
                             const FlowParams& params) {
    require(params.orbit != nullptr, "integrate_eps_mag: orbit not set");
    require(y0.size() == v0.size(), "integrate_eps_mag: state size mismatch");
    return verlet(y0, v0, t0, t1, h,
                  [&](double t, const Vec& y) { return acceleration(y, params, t); });
}

Trajectory integrate_eps_mag_rk4(const Vec& y0, const Vec& v0, double t0, double t1, double h,
                                 const FlowParams& params) {
    require(params.orbit != nullptr, "integrate_eps_mag_rk4: orbit not set");
    require(y0.size() == v0.size(), "integrate_eps_mag_rk4: state size mismatch");
    const int n = step_count(t0, t1, h);
    const double dt = (t1 - t0) / n;

    Trajectory traj;
    traj.clock = Clock::T;
    traj.times.push_back(t0);
    traj.positions.push_back(y0);
    traj.velocities.push_back(v0);

    Vec y = y0, v = v0;
    for (int i = 0; i < n; ++i) {
        const double t = t0 + i * dt;
        const Vec a1 = acceleration(y, params, t);
        Vec y2 = y, v2 = v;
        axpy(0.5 * dt, v, y2);
        axpy(0.5 * dt, a1, v2);
        const Vec a2 = acceleration(y2, params, t + 0.5 * dt);
        Vec y3 = y, v3 = v;
        axpy(0.5 * dt, v2, y3);
        axpy(0.5 * dt, a2, v3);
        const Vec a3 = acceleration(y3, params, t + 0.5 * dt);
        Vec y4 = y, v4 = v;
        axpy(dt, v3, y4);
        axpy(dt, a3, v4);
        const Vec a4 = acceleration(y4, params, t + dt);

        axpy(dt / 6.0, v, y);
        axpy(dt / 3.0, v2, y);
        axpy(dt / 3.0, v3, y);
        axpy(dt / 6.0, v4, y);
        axpy(dt / 6.0, a1, v);
        axpy(dt / 3.0, a2, v);
        axpy(dt / 3.0, a3, v);
        axpy(dt / 6.0, a4, v);
        check_finite(y, t + dt);
        traj.times.push_back(t + dt);
        traj.positions.push_back(y);
        traj.velocities.push_back(v);
    }
    return traj;
}

namespace {

struct Branch {
    std::vector<int> sigma;
    int tie_size = 0;
    bool operator==(const Branch& o) const { return sigma == o.sigma && tie_size == o.tie_size; }
};

Branch branch_of(const Vec& y, const PermutationOrbit& orbit, double rel_tol) {
    Branch b;
    b.sigma = nearest_permutation(y, orbit).sigma;
    b.tie_size = static_cast<int>(projection_set(y, orbit, rel_tol).members.size());
    return b;
}

struct VerletState {
    double t;
    Vec y, v, a;
};

VerletState verlet_step(const VerletState& st, double dt, const PermutationOrbit& orbit,
                        double rel_tol) {
    VerletState out;
    out.t = st.t + dt;
    out.y = st.y;
    axpy(dt, st.v, out.y);
    axpy(0.5 * dt * dt, st.a, out.y);
    out.a = mag_drift(out.y, orbit, rel_tol);
    out.v = st.v;
    axpy(0.5 * dt, st.a + out.a, out.v);
    return out;
}

}  // namespace

Trajectory integrate_mag_limit(const Vec& y0, const Vec& v0, double t0, double t1, double h,
                               const PermutationOrbit& orbit, double rel_tol) {
    require(static_cast<int>(y0.size()) == orbit.dim(), "integrate_mag_limit: dimension mismatch");
    require(y0.size() == v0.size(), "integrate_mag_limit: state size mismatch");
    const int n = step_count(t0, t1, h);
    const double dt = (t1 - t0) / n;

    Trajectory traj;
    traj.clock = Clock::T;
    traj.times.push_back(t0);
    traj.positions.push_back(y0);
    traj.velocities.push_back(v0);

    VerletState st{t0, y0, v0, mag_drift(y0, orbit, rel_tol)};
    Branch branch = branch_of(y0, orbit, rel_tol);
    double work = 0.0;
    const double e0 = 0.5 * norm2(v0);
    double max_resid = 0.0;

    for (int i = 0; i < n; ++i) {
        const VerletState next = verlet_step(st, dt, orbit, rel_tol);
        check_finite(next.y, next.t);
        const Branch nb = branch_of(next.y, orbit, rel_tol);
        if (!(nb == branch)) {
            // localize the crossing inside [st.t, next.t] by step halving
            VerletState lo = st;
            Branch lo_branch = branch;
            double span = dt;
            for (int depth = 0; depth < 8; ++depth) {
                span *= 0.5;
                const VerletState mid = verlet_step(lo, span, orbit, rel_tol);
                const Branch mb = branch_of(mid.y, orbit, rel_tol);
                if (mb == lo_branch) {
                    lo = mid;  // crossing is in the second half
                }
            }
            const VerletState hi = verlet_step(lo, span, orbit, rel_tol);
            Vec y_evt = 0.5 * (lo.y + hi.y);

            // widen the tie tolerance just enough to capture both branches
            const Vec pre_img = orbit.image_of(lo_branch.sigma);
            const Vec post_img = orbit.image_of(branch_of(hi.y, orbit, rel_tol).sigma);
            const double d_far = std::max(dist2(y_evt, pre_img), dist2(y_evt, post_img));
            const double d_min = nearest_permutation(y_evt, orbit).dist2;
            const double band =
                std::max(rel_tol, (d_far / d_min - 1.0) * (1.0 + 1e-6) + 1e-14);
            const TieSet tie = projection_set(y_evt, orbit, band);

            ShockEvent ev;
            ev.time = lo.t + 0.5 * span;
            ev.pre_force = std::sqrt(dist2(y_evt, pre_img));
            ev.post_force = norm(y_evt - min_norm_point(tie.members));
            ev.tie_size = static_cast<int>(tie.members.size());
            traj.events.push_back(ev);
        }
        const Vec dy = next.y - st.y;
        work += 0.5 * (dot(st.a, dy) + dot(next.a, dy));
        max_resid = std::max(max_resid, std::abs(0.5 * norm2(next.v) - e0 - work));
        st = next;
        branch = nb;
        traj.times.push_back(st.t);
        traj.positions.push_back(st.y);
        traj.velocities.push_back(st.v);
    }
    traj.energy_residual = max_resid;
    return traj;
}

Trajectory simulate_heat_path(std::uint64_t seed, const std::vector<double>& s_grid,
                              const FlowParams& params) {
    require(params.orbit != nullptr, "simulate_heat_path: orbit not set");
    require(params.epsilon >= 0.0, "simulate_heat_path: epsilon must be nonnegative");
    require(!s_grid.empty(), "simulate_heat_path: empty grid");
    require(s_grid.front() >= 0.0, "simulate_heat_path: s must be nonnegative");
    for (std::size_t i = 1; i < s_grid.size(); ++i)
        require(s_grid[i] > s_grid[i - 1], "simulate_heat_path: grid must increase");

    const PermutationOrbit& orbit = *params.orbit;
    const int k = orbit.k();
    Rng rng(seed);

    // uniform draw from the orbit = uniform random permutation
    std::vector<int> sigma(k);
    for (int i = 0; i < k; ++i) sigma[i] = i;
    for (int i = k - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(sigma[i], sigma[j]);
    }
    Vec x = orbit.image_of(sigma);

    Trajectory traj;
    traj.clock = Clock::S;
    traj.times = s_grid;
    traj.positions.reserve(s_grid.size());

    double prev_s = 0.0;
    for (double s : s_grid) {
        const double var = params.epsilon * (s - prev_s);
        if (var > 0.0) {
            const double sd = std::sqrt(var);
            for (double& c : x) c += sd * rng.normal();
        }
        prev_s = s;
        traj.positions.push_back(x);
    }
    return traj;
}

Trajectory simulate_surfing_sde(const Vec& z0, double s0, double s1, double h,
                                const FlowParams& params, double eta,
                                const KappaSchedule& kappa, std::uint64_t seed) {
    require(s0 > 0.0, "simulate_surfing_sde: s0 must be positive (drift is singular at s=0)");
    require(eta >= 0.0, "simulate_surfing_sde: eta must be nonnegative");
    const int n = step_count(s0, s1, h);
    const double ds = (s1 - s0) / n;
    const double k2 = static_cast<double>(params.orbit->k()) * params.orbit->k();
    Rng rng(seed);

    Trajectory traj;
    traj.clock = Clock::S;
    traj.times.push_back(s0);
    traj.positions.push_back(z0);

    Vec z = z0;
    for (int i = 0; i < n; ++i) {
        const double s = s0 + i * ds;
        const double ks = kappa.value(s);
        require(ks > 0.0, "simulate_surfing_sde: kappa must be positive on the horizon");
        const Vec drift = r_velocity(z, params, s);
        axpy(ds, drift, z);
        if (eta > 0.0) {
            const double sd = std::sqrt(eta * k2 / ks * ds);
            for (double& c : z) c += sd * rng.normal();
        }
        check_finite(z, s + ds);
        traj.times.push_back(s + ds);
        traj.positions.push_back(z);
    }
    return traj;
}

std::vector<Vec> fd_velocities(const std::vector<double>& times, const std::vector<Vec>& pos) {
    const std::size_t n = times.size();
    require(n >= 2, "fd_velocities: need at least two samples");
    std::vector<Vec> vel(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t a = (j == 0) ? 0 : j - 1;
        const std::size_t b = (j + 1 == n) ? j : j + 1;
        Vec v = pos[b] - pos[a];
        const double dt = times[b] - times[a];
        for (double& c : v) c /= dt;
        vel[j] = std::move(v);
    }
    return vel;
}

namespace {

void check_shape(const Trajectory& traj, const char* who) {
    require(traj.times.size() == traj.positions.size(), who);
    require(traj.velocities.empty() || traj.velocities.size() == traj.times.size(), who);
    for (std::size_t j = 1; j < traj.times.size(); ++j)
        require(traj.times[j] > traj.times[j - 1], who);
}

}  // namespace

double eval_action(const Trajectory& traj, ActionVariant variant, const FlowParams& params,
                   const KappaSchedule& kappa, double rel_tol) {
    require(traj.times.size() >= 2, "eval_action: trajectory too short");
    check_shape(traj, "eval_action: malformed trajectory");
    if (variant == ActionVariant::EpsS)
        require(traj.clock == Clock::S, "eval_action: eps_s needs an s-clock trajectory");
    else
        require(traj.clock == Clock::T, "eval_action: t-clock variant on an s-clock trajectory");

    std::vector<Vec> fd;
    const std::vector<Vec>* vel_ptr;
    if (traj.has_velocities()) {
        vel_ptr = &traj.velocities;
    } else {
        fd = fd_velocities(traj.times, traj.positions);
        vel_ptr = &fd;
    }

    const int k = params.orbit->k();
    const std::size_t n = traj.times.size();
    std::vector<double> integrand(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double time = traj.times[j];
        Vec dev = (*vel_ptr)[j];
        double weight = 1.0;
        switch (variant) {
            case ActionVariant::EpsT:
                dev -= m_velocity(traj.positions[j], params, time);
                break;
            case ActionVariant::EpsS:
                dev -= r_velocity(traj.positions[j], params, time);
                weight = kappa.value(time);
                break;
            case ActionVariant::MagLimit:
                dev -= mag_drift(traj.positions[j], *params.orbit, rel_tol);
                break;
        }
        integrand[j] = 0.5 * h_norm2(dev, k) * weight;
    }
    double action = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j)
        action += 0.5 * (integrand[j] + integrand[j + 1]) * (traj.times[j + 1] - traj.times[j]);
    return action;
}

Trajectory reparameterize(const Trajectory& traj) {
    check_shape(traj, "reparameterize: malformed trajectory");
    Trajectory out;
    out.positions = traj.positions;
    out.events = traj.events;
    out.energy_residual = traj.energy_residual;
    out.times.resize(traj.times.size());
    if (traj.clock == Clock::S) {
        for (double s : traj.times)
            require(s > 0.0, "reparameterize: s-values must be positive");
        out.clock = Clock::T;
        for (std::size_t j = 0; j < traj.times.size(); ++j)
            out.times[j] = 0.5 * std::log(traj.times[j]);
        if (traj.has_velocities()) {
            out.velocities.resize(traj.velocities.size());
            for (std::size_t j = 0; j < traj.velocities.size(); ++j)
                out.velocities[j] = (2.0 * traj.times[j]) * traj.velocities[j];
        }
        for (ShockEvent& ev : out.events) ev.time = 0.5 * std::log(ev.time);
    } else {
        out.clock = Clock::S;
        for (std::size_t j = 0; j < traj.times.size(); ++j)
            out.times[j] = std::exp(2.0 * traj.times[j]);
        if (traj.has_velocities()) {
            out.velocities.resize(traj.velocities.size());
            for (std::size_t j = 0; j < traj.velocities.size(); ++j)
                out.velocities[j] = (1.0 / (2.0 * out.times[j])) * traj.velocities[j];
        }
        for (ShockEvent& ev : out.events) ev.time = std::exp(2.0 * ev.time);
    }
    return out;
}

}  // namespace magkit
