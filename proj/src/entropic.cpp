#include "magkit/entropic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace magkit {

namespace {

constexpr double kFloor = 1e-300;        // division floor for density ratios
constexpr double kSupportScale = 1e-13;  // effective-support mask, relative to max

std::vector<double> d1(const Grid1D& g, const std::vector<double>& f) {
    const int n = g.n;
    const double dx = g.dx();
    std::vector<double> out(n);
    out[0] = (f[1] - f[0]) / dx;
    out[n - 1] = (f[n - 1] - f[n - 2]) / dx;
    for (int i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
    return out;
}

std::vector<double> d2(const Grid1D& g, const std::vector<double>& f) {
    const int n = g.n;
    const double dx2 = g.dx() * g.dx();
    std::vector<double> out(n, 0.0);
    for (int i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / dx2;
    out[0] = out[1];
    out[n - 1] = out[n - 2];
    return out;
}

void check_same_grid(const GridDensity& a, const GridDensity& b, const char* who) {
    require(a.grid == b.grid, who);
}

double support_floor(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, x);
    return kSupportScale * m;
}

}  // namespace

double trapezoid(const Grid1D& g, const std::vector<double>& f) {
    double s = 0.5 * (f.front() + f.back());
    for (int i = 1; i + 1 < g.n; ++i) s += f[i];
    return s * g.dx();
}

GridDensity GridDensity::normalized(Grid1D grid, std::vector<double> values) {
    require(grid.n >= 16, "GridDensity: need at least 16 nodes");
    require(grid.hi > grid.lo, "GridDensity: empty interval");
    require(static_cast<int>(values.size()) == grid.n, "GridDensity: value count mismatch");
    double vmax = 0.0;
    for (double v : values) {
        require(v >= 0.0, "GridDensity: values must be nonnegative");
        vmax = std::max(vmax, v);
    }
    GridDensity d;
    d.grid = grid;
    d.values = std::move(values);
    const double m = trapezoid(grid, d.values);
    require(m > 0.0, "GridDensity: zero mass");
    for (double& v : d.values) v /= m;
    vmax /= m;
    d.boundary_ok = d.values.front() <= 1e-12 * vmax && d.values.back() <= 1e-12 * vmax;
    return d;
}

GridDensity GridDensity::sample(Grid1D grid, const std::function<double(double)>& f) {
    std::vector<double> v(grid.n);
    for (int i = 0; i < grid.n; ++i) v[i] = f(grid.x(i));
    return normalized(grid, std::move(v));
}

GridDensity GridDensity::gaussian(Grid1D grid, double mean, double var) {
    require(var > 0.0, "GridDensity: variance must be positive");
    return sample(grid, [=](double x) { return std::exp(-(x - mean) * (x - mean) / (2.0 * var)); });
}

double GridDensity::mass() const { return trapezoid(grid, values); }

GridFlow GridFlow::make(std::vector<double> times, std::vector<GridDensity> slices) {
    require(times.size() == slices.size() && !times.empty(), "GridFlow: times/slices mismatch");
    for (std::size_t i = 1; i < times.size(); ++i) {
        require(times[i] > times[i - 1], "GridFlow: times must increase");
        require(slices[i].grid == slices[0].grid, "GridFlow: slices must share one grid");
    }
    GridFlow f;
    f.times = std::move(times);
    f.slices = std::move(slices);
    return f;
}

double relative_entropy(const GridDensity& p, const GridDensity& r) {
    check_same_grid(p, r, "relative_entropy: grids differ");
    std::vector<double> f(p.grid.n, 0.0);
    for (int i = 0; i < p.grid.n; ++i) {
        if (p.values[i] > kFloor) {
            if (r.values[i] < kFloor)
                throw validation_error("relative_entropy: reference vanishes on the support");
            f[i] = p.values[i] * std::log(p.values[i] / r.values[i]);
        }
    }
    return trapezoid(p.grid, f);
}

double fisher_information(const GridDensity& p, const GridDensity& r) {
    check_same_grid(p, r, "fisher_information: grids differ");
    const int n = p.grid.n;
    const double floor_p = support_floor(p.values);
    std::vector<double> lam(n, 0.0);
    std::vector<char> ok(n, 0);
    for (int i = 0; i < n; ++i) {
        if (p.values[i] > std::max(kFloor, floor_p)) {
            if (r.values[i] < kFloor)
                throw validation_error("fisher_information: reference vanishes on the support");
            lam[i] = 0.5 * std::log(p.values[i] / r.values[i]);
            ok[i] = 1;
        }
    }
    const double dx = p.grid.dx();
    std::vector<double> f(n, 0.0);
    for (int i = 1; i + 1 < n; ++i) {
        if (ok[i - 1] && ok[i] && ok[i + 1]) {
            const double g = (lam[i + 1] - lam[i - 1]) / (2.0 * dx);
            f[i] = 0.5 * g * g * p.values[i];
        }
    }
    return trapezoid(p.grid, f);
}

std::vector<double> quantum_potential_grid(const GridDensity& p, const GridDensity& m) {
    check_same_grid(p, m, "quantum_potential_grid: grids differ");
    const int n = p.grid.n;
    for (int i = 0; i < n; ++i)
        if (m.values[i] < kFloor)
            throw validation_error("quantum_potential_grid: equilibrium density vanishes");
    std::vector<double> sqrt_l(n), log_sqrt_m(n), log_sqrt_l(n);
    for (int i = 0; i < n; ++i) {
        const double l = std::max(p.values[i], kFloor) / m.values[i];
        sqrt_l[i] = std::sqrt(l);
        log_sqrt_l[i] = 0.5 * std::log(l);
        log_sqrt_m[i] = 0.5 * std::log(m.values[i]);
    }
    const auto dm = d1(p.grid, log_sqrt_m);
    const auto dl = d1(p.grid, log_sqrt_l);
    const auto lap = d2(p.grid, sqrt_l);
    std::vector<double> q(n);
    for (int i = 0; i < n; ++i) q[i] = -dm[i] * dl[i] - lap[i] / (2.0 * sqrt_l[i]);
    return q;
}

std::vector<double> quantum_potential_leb(const GridDensity& p) {
    const int n = p.grid.n;
    std::vector<double> s(n);
    for (int i = 0; i < n; ++i) s[i] = std::sqrt(std::max(p.values[i], kFloor));
    const auto lap = d2(p.grid, s);
    std::vector<double> q(n);
    for (int i = 0; i < n; ++i) q[i] = -lap[i] / (2.0 * s[i]);
    return q;
}

double potential_identity_residual(const Grid1D& grid, const std::vector<double>& U, double eps) {
    require(static_cast<int>(U.size()) == grid.n, "potential_identity: size mismatch");
    require(eps > 0.0, "potential_identity: eps must be positive");
    const int n = grid.n;
    std::vector<double> sqrt_m(n);
    for (int i = 0; i < n; ++i) sqrt_m[i] = std::exp(-U[i] / (2.0 * eps));
    const auto lap_m = d2(grid, sqrt_m);
    const auto du = d1(grid, U);
    const auto ddu = d2(grid, U);
    double res = 0.0;
    for (int i = 1; i + 1 < n; ++i) {
        const double lhs = -eps * eps * lap_m[i] / (2.0 * sqrt_m[i]);
        const double rhs = eps * ddu[i] / 4.0 - du[i] * du[i] / 8.0;
        res = std::max(res, std::abs(lhs - rhs));
    }
    return res;
}

std::vector<VelocityField1D> current_velocity_1d(const GridFlow& flow) {
    require(flow.times.size() >= 3, "current_velocity_1d: need at least 3 time slices");
    const Grid1D& g = flow.grid();
    const int n = g.n;
    const std::size_t nt = flow.times.size();

    std::vector<VelocityField1D> out(nt);
    for (std::size_t j = 0; j < nt; ++j) {
        const std::size_t a = (j == 0) ? 0 : j - 1;
        const std::size_t b = (j + 1 == nt) ? j : j + 1;
        const double dt = flow.times[b] - flow.times[a];
        std::vector<double> dpdt(n);
        for (int i = 0; i < n; ++i)
            dpdt[i] = (flow.slices[b].values[i] - flow.slices[a].values[i]) / dt;

        // cumulative trapezoid of dp/dt from the left edge
        std::vector<double> flux(n, 0.0);
        for (int i = 1; i < n; ++i)
            flux[i] = flux[i - 1] + 0.5 * (dpdt[i - 1] + dpdt[i]) * g.dx();

        const double floor_p = std::max(kFloor, support_floor(flow.slices[j].values));
        out[j].v.assign(n, 0.0);
        out[j].valid.assign(n, 0);
        for (int i = 0; i < n; ++i) {
            if (flow.slices[j].values[i] > floor_p) {
                out[j].v[i] = -flux[i] / flow.slices[j].values[i];
                out[j].valid[i] = 1;
            }
        }
    }
    return out;
}

double rate_J(const GridFlow& flow, const GridFlow& reference, double eps) {
    require(eps > 0.0, "rate_J: eps must be positive");
    require(flow.times.size() == reference.times.size(), "rate_J: time grids differ");
    require(flow.grid() == reference.grid(), "rate_J: spatial grids differ");
    for (std::size_t j = 0; j < flow.times.size(); ++j)
        require(flow.times[j] == reference.times[j], "rate_J: time grids differ");

    const std::size_t nt = flow.times.size();
    const Grid1D& g = flow.grid();
    const auto vp = current_velocity_1d(flow);
    const auto vr = current_velocity_1d(reference);

    std::vector<double> kinetic(nt), fisher(nt);
    for (std::size_t j = 0; j < nt; ++j) {
        std::vector<double> f(g.n, 0.0);
        for (int i = 0; i < g.n; ++i) {
            if (vp[j].valid[i] && vr[j].valid[i]) {
                const double dv = vp[j].v[i] - vr[j].v[i];
                f[i] = 0.5 * dv * dv * flow.slices[j].values[i];
            }
        }
        kinetic[j] = trapezoid(g, f);
        fisher[j] = fisher_information(flow.slices[j], reference.slices[j]);
    }
    double kin = 0.0, fis = 0.0;
    for (std::size_t j = 0; j + 1 < nt; ++j) {
        const double dt = flow.times[j + 1] - flow.times[j];
        kin += 0.5 * (kinetic[j] + kinetic[j + 1]) * dt;
        fis += 0.5 * (fisher[j] + fisher[j + 1]) * dt;
    }
    return 0.5 * relative_entropy(flow.slices.front(), reference.slices.front()) +
           0.5 * relative_entropy(flow.slices.back(), reference.slices.back()) + kin / eps +
           eps * fis;
}

std::pair<double, double> madelung_residual(const GridFlow& q,
                                            const std::vector<std::vector<double>>& theta,
                                            const std::vector<double>& V, double hbar2,
                                            const GridDensity* m) {
    require(q.times.size() >= 3, "madelung_residual: need at least 3 time slices");
    require(theta.size() == q.times.size(), "madelung_residual: theta/time mismatch");
    const Grid1D& g = q.grid();
    const int n = g.n;
    require(static_cast<int>(V.size()) == n, "madelung_residual: potential size mismatch");
    for (const auto& th : theta)
        require(static_cast<int>(th.size()) == n, "madelung_residual: theta size mismatch");

    std::vector<double> qm_m(n, 0.0);
    if (m) qm_m = quantum_potential_leb(*m);

    double r1 = 0.0, r2 = 0.0;
    const std::size_t nt = q.times.size();
    for (std::size_t j = 1; j + 1 < nt; ++j) {
        const double dt = q.times[j + 1] - q.times[j - 1];
        const auto& qj = q.slices[j].values;
        const double floor_q = std::max(kFloor, 1e-8 * *std::max_element(qj.begin(), qj.end()));
        const auto thx = d1(g, theta[j]);
        std::vector<double> flux(n);
        for (int i = 0; i < n; ++i) flux[i] = qj[i] * thx[i];
        const auto dflux = d1(g, flux);
        const auto qp = quantum_potential_leb(q.slices[j]);
        for (int i = 2; i + 2 < n; ++i) {
            if (qj[i] <= floor_q) continue;
            const double dqdt = (q.slices[j + 1].values[i] - q.slices[j - 1].values[i]) / dt;
            r1 = std::max(r1, std::abs(dqdt + dflux[i]));
            const double dthdt = (theta[j + 1][i] - theta[j - 1][i]) / dt;
            double hj = dthdt + 0.5 * thx[i] * thx[i] + V[i];
            if (m)
                hj -= hbar2 * (qp[i] - qm_m[i]);
            else
                hj += hbar2 * qp[i];
            r2 = std::max(r2, std::abs(hj));
        }
    }
    return {r1, r2};
}

}  // namespace magkit
