#include "magkit/heatflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace magkit {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_flow(const Vec& y, const FlowParams& p) {
    require(p.orbit != nullptr, "FlowParams: orbit not set");
    require(p.epsilon > 0.0, "FlowParams: epsilon must be positive");
    require(static_cast<int>(y.size()) == p.orbit->dim(), "flow field: dimension mismatch");
}
}  // namespace

SoftAssignment soft_weights_tau(const Vec& y, const PermutationOrbit& orbit, double tau) {
    require(tau > 0.0, "soft_weights: temperature must be positive");
    require(static_cast<int>(y.size()) == orbit.dim(), "soft_weights: dimension mismatch");
    if (!orbit.enumerable())
        throw capability_error("soft_weights: full enumeration needs k <= k_max");

    const auto& elems = orbit.elements();
    const std::size_t m = elems.size();
    const int d = orbit.d(), k = orbit.k();
    const std::size_t dim = static_cast<std::size_t>(d) * k;

    SoftAssignment sa;
    sa.d = d;
    sa.k = k;
    sa.log_weights.resize(m);
    double lmax = -kInf;
    for (std::size_t s = 0; s < m; ++s) {
        sa.log_weights[s] = -dist2(y, elems[s]) / (2.0 * tau);
        lmax = std::max(lmax, sa.log_weights[s]);
    }
    sa.weights.resize(m);
    double z = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
        sa.log_weights[s] -= lmax;
        sa.weights[s] = std::exp(sa.log_weights[s]);
        z += sa.weights[s];
    }
    for (double& w : sa.weights) w /= z;

    sa.soft_mean.assign(dim, 0.0);
    for (std::size_t s = 0; s < m; ++s)
        if (sa.weights[s] > 0.0) axpy(sa.weights[s], elems[s], sa.soft_mean);

    sa.soft_second.assign(static_cast<std::size_t>(k) * k * d * d, 0.0);
    Vec cent(dim);
    for (std::size_t s = 0; s < m; ++s) {
        const double w = sa.weights[s];
        if (w == 0.0) continue;
        for (std::size_t c = 0; c < dim; ++c) cent[c] = elems[s][c] - sa.soft_mean[c];
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                for (int l = 0; l < d; ++l)
                    for (int n = 0; n < d; ++n)
                        sa.soft_second[((static_cast<std::size_t>(i) * k + j) * d + l) * d + n] +=
                            w * cent[i * d + l] * cent[j * d + n];
    }
    sa.centered_sq = 0.0;
    for (int i = 0; i < k; ++i)
        for (int l = 0; l < d; ++l) sa.centered_sq += sa.second(i, i, l, l);
    return sa;
}

double log_density_s(const Vec& y, const FlowParams& p, double s) {
    check_flow(y, p);
    require(s > 0.0, "log_density: s must be positive");
    const PermutationOrbit& orbit = *p.orbit;
    if (!orbit.enumerable())
        throw capability_error("log_density: full enumeration needs k <= k_max");
    const double tau = p.temperature_s(s);
    const auto& elems = orbit.elements();
    double lmax = -kInf;
    std::vector<double> le(elems.size());
    for (std::size_t i = 0; i < elems.size(); ++i) {
        le[i] = -dist2(y, elems[i]) / (2.0 * tau);
        lmax = std::max(lmax, le[i]);
    }
    double acc = 0.0;
    for (double l : le) acc += std::exp(l - lmax);
    const double dk = static_cast<double>(orbit.dim());
    return lmax + std::log(acc) - std::log(static_cast<double>(elems.size())) -
           0.5 * dk * std::log(kTwoPi * tau);
}

Vec r_velocity(const Vec& y, const FlowParams& p, double s) {
    check_flow(y, p);
    require(s > 0.0, "r_velocity: s must be positive");
    const SoftAssignment sa = soft_weights_tau(y, *p.orbit, p.temperature_s(s));
    Vec v = y - sa.soft_mean;
    for (double& c : v) c /= 2.0 * s;
    return v;
}

Vec m_velocity(const Vec& y, const FlowParams& p, double t) {
    check_flow(y, p);
    const SoftAssignment sa = soft_weights_tau(y, *p.orbit, p.temperature_t(t));
    return y - sa.soft_mean;
}

std::vector<double> velocity_jacobian(const Vec& y, const FlowParams& p, double t) {
    check_flow(y, p);
    const double tau = p.temperature_t(t);
    const SoftAssignment sa = soft_weights_tau(y, *p.orbit, tau);
    const int d = sa.d, k = sa.k;
    const std::size_t dim = static_cast<std::size_t>(d) * k;
    std::vector<double> jac(dim * dim, 0.0);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (int l = 0; l < d; ++l)
                for (int n = 0; n < d; ++n) {
                    const std::size_t row = static_cast<std::size_t>(i) * d + l;
                    const std::size_t col = static_cast<std::size_t>(j) * d + n;
                    double v = -sa.second(i, j, l, n) / tau;
                    if (row == col) v += 1.0;
                    jac[row * dim + col] = v;
                }
    return jac;
}

double quantum_potential_mixture(const Vec& y, const FlowParams& p, double t) {
    check_flow(y, p);
    const double tau = p.temperature_t(t);
    const SoftAssignment sa = soft_weights_tau(y, *p.orbit, tau);
    const Vec mdot = y - sa.soft_mean;
    const double div_m = static_cast<double>(p.orbit->dim()) - sa.centered_sq / tau;
    return div_m / (4.0 * tau) - norm2(mdot) / (8.0 * tau * tau);
}

Vec force_field(const Vec& y, const FlowParams& p, double t) {
    check_flow(y, p);
    const double tau = p.temperature_t(t);
    const PermutationOrbit& orbit = *p.orbit;
    const SoftAssignment sa = soft_weights_tau(y, orbit, tau);
    const auto& elems = orbit.elements();
    const std::size_t dim = y.size();
    Vec f(dim, 0.0);
    Vec cent(dim);
    for (std::size_t s = 0; s < elems.size(); ++s) {
        const double w = sa.weights[s];
        if (w == 0.0) continue;
        double g = 0.0;  // (y - x) . x~
        for (std::size_t c = 0; c < dim; ++c) {
            cent[c] = elems[s][c] - sa.soft_mean[c];
            g += (y[c] - elems[s][c]) * cent[c];
        }
        axpy(w * g / tau, cent, f);
    }
    return f;
}

Vec acceleration(const Vec& y, const FlowParams& p, double t) {
    check_flow(y, p);
    const double tau = p.temperature_t(t);
    const PermutationOrbit& orbit = *p.orbit;
    const SoftAssignment sa = soft_weights_tau(y, orbit, tau);
    const auto& elems = orbit.elements();
    const std::size_t dim = y.size();
    Vec acc = y - sa.soft_mean;
    Vec cent(dim);
    for (std::size_t s = 0; s < elems.size(); ++s) {
        const double w = sa.weights[s];
        if (w == 0.0) continue;
        double g = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
            cent[c] = elems[s][c] - sa.soft_mean[c];
            g += (y[c] - elems[s][c]) * cent[c];
        }
        axpy(w * g / tau, cent, acc);
    }
    return acc;
}

Vec a_star_of(const std::vector<Vec>& members) {
    require(!members.empty(), "a_star_of: empty set");
    const std::size_t dim = members.front().size();
    const double n = static_cast<double>(members.size());
    Vec xbar(dim, 0.0);
    for (const Vec& x : members) axpy(1.0 / n, x, xbar);
    Vec a(dim, 0.0);
    Vec cent(dim);
    for (const Vec& x : members) {
        double g = 0.0;  // xbar . (x - xbar)
        for (std::size_t c = 0; c < dim; ++c) {
            cent[c] = x[c] - xbar[c];
            g += xbar[c] * cent[c];
        }
        axpy(g / n, cent, a);
    }
    return a;
}

ClosestDiagnostics closest_diagnostics(const Vec& y, const PermutationOrbit& orbit,
                                       double rel_tol) {
    ClosestDiagnostics diag;
    diag.tie_set = projection_set(y, orbit, rel_tol);
    diag.n_star = static_cast<int>(diag.tie_set.members.size());

    const std::size_t dim = y.size();
    diag.xbar_star.assign(dim, 0.0);
    for (const Vec& x : diag.tie_set.members)
        axpy(1.0 / diag.n_star, x, diag.xbar_star);
    diag.a_star = a_star_of(diag.tie_set.members);
    if (diag.n_star <= 2 && norm(diag.a_star) > 1e-12 * std::pow(orbit.radius(), 3))
        throw invariant_error("closest_diagnostics: covariance vector must vanish on ties of size <= 2");

    if (diag.tie_set.members.size() == orbit.size()) {
        diag.gap_c = kInf;
    } else {
        // least squared half-distance among elements outside the tie set
        std::vector<char> in_tie(orbit.size(), 0);
        for (std::size_t r : diag.tie_set.member_ranks) in_tie[r] = 1;
        double second_best = kInf;
        for (std::size_t s = 0; s < orbit.size(); ++s) {
            if (in_tie[s]) continue;
            second_best = std::min(second_best, dist2(y, orbit.element(s)));
        }
        diag.gap_c = 0.5 * (second_best - diag.tie_set.min_dist2);
    }
    return diag;
}

}  // namespace magkit
