#pragma once

#include <vector>

#include "magkit/kmap.hpp"
#include "magkit/vec.hpp"

namespace magkit {

// Shared parameters of the Gaussian-mixture flow. Times are passed per
// call, in the clock each operation names: s > 0 for the raw heat flow,
// t real for the rescaled flow (s = e^{2t}).
struct FlowParams {
    double epsilon = 0.1;
    const PermutationOrbit* orbit = nullptr;

    double temperature_s(double s) const { return epsilon * s; }
    double temperature_t(double t) const { return epsilon * std::exp(2.0 * t); }
};

// Boltzmann weights over the permutation orbit at a given temperature,
// with first and second soft moments cached. All mixture fields are
// assembled from one of these.
struct SoftAssignment {
    std::vector<double> weights;      // sum to 1
    std::vector<double> log_weights;  // unnormalized, max-shifted
    Vec soft_mean;                    // <x, pi> in R^{dk}
    // k x k blocks of d x d matrices <x~_i (x) x~_j, pi>, row-major in
    // block index then in (l,n); x~ = x - soft_mean.
    std::vector<double> soft_second;
    double centered_sq = 0.0;  // <|x~|^2, pi> = trace of soft_second
    int d = 0, k = 0;

    double second(int i, int j, int l, int n) const {
        const std::size_t kk = static_cast<std::size_t>(k);
        const std::size_t dd = static_cast<std::size_t>(d);
        return soft_second[((i * kk + j) * dd + l) * dd + n];
    }
};

// Weights exp(-|y - x^sigma|^2 / (2 tau)) normalized over the orbit,
// log-sum-exp stabilized. tau is the temperature, eps*s or eps*e^{2t}.
SoftAssignment soft_weights_tau(const Vec& y, const PermutationOrbit& orbit, double tau);

inline SoftAssignment soft_weights(const Vec& y, const FlowParams& p, double t) {
    return soft_weights_tau(y, *p.orbit, p.temperature_t(t));
}

// Log density of the Gaussian mixture with means x^sigma and covariance
// eps*s*I, averaged over the orbit.
double log_density_s(const Vec& y, const FlowParams& p, double s);
inline double log_density_t(const Vec& y, const FlowParams& p, double t) {
    return log_density_s(y, p, std::exp(2.0 * t));
}

// Current velocity of the heat flow in the s-clock: (2s)^{-1}(y - <x,pi>).
Vec r_velocity(const Vec& y, const FlowParams& p, double s);

// Velocity of the time-changed flow: y - <x,pi> at temperature eps*e^{2t}.
Vec m_velocity(const Vec& y, const FlowParams& p, double t);

// dk x dk Jacobian of m_velocity: block (i,j) is
// delta_ij I_d - tau^{-1} <x~_i (x) x~_j, pi>. Row-major dk x dk.
std::vector<double> velocity_jacobian(const Vec& y, const FlowParams& p, double t);

// Quantum potential of the mixture density against Lebesgue, evaluated in
// closed form: (4 tau)^{-1} div(m_vel) - (8 tau^2)^{-1} |m_vel|^2 with
// div(m_vel) = kd - tau^{-1} <|x~|^2, pi>.
double quantum_potential_mixture(const Vec& y, const FlowParams& p, double t);

// The concentration force field tau^{-1} <((y-x).x~) x~, pi>, Euclidean
// coordinates in R^{dk}.
Vec force_field(const Vec& y, const FlowParams& p, double t);

// Newton acceleration of the rescaled flow: m_velocity + force_field.
Vec acceleration(const Vec& y, const FlowParams& p, double t);

// Zero-temperature diagnostics on the tie set of nearest orbit elements.
struct ClosestDiagnostics {
    TieSet tie_set;
    int n_star = 0;
    Vec xbar_star;    // barycenter of the tie set
    Vec a_star;       // covariance-barycenter vector; zero when n_star <= 2
    double gap_c = 0.0;  // energy gap; +inf when the tie set is the whole orbit
};

ClosestDiagnostics closest_diagnostics(const Vec& y, const PermutationOrbit& orbit,
                                       double rel_tol = 1e-9);

// The covariance-barycenter vector of an arbitrary finite subset of a
// centered sphere: n^{-1} sum (xbar.(x^n - xbar)) (x^n - xbar).
Vec a_star_of(const std::vector<Vec>& members);

}  // namespace magkit
