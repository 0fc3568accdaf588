#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "magkit/vec.hpp"

namespace magkit {

struct Grid1D {
    double lo = 0.0;
    double hi = 1.0;
    int n = 16;  // node count

    double dx() const { return (hi - lo) / (n - 1); }
    double x(int i) const { return lo + i * dx(); }
    bool operator==(const Grid1D& o) const { return lo == o.lo && hi == o.hi && n == o.n; }
};

// Uniform-grid probability density. Construction normalizes the trapezoid
// mass to one; a soft support-margin check flags boundary leakage.
struct GridDensity {
    Grid1D grid;
    std::vector<double> values;
    bool boundary_ok = true;  // boundary values below 1e-12 * max

    static GridDensity normalized(Grid1D grid, std::vector<double> values);
    static GridDensity sample(Grid1D grid, const std::function<double(double)>& f);
    static GridDensity gaussian(Grid1D grid, double mean, double var);

    double mass() const;  // trapezoid integral
};

struct GridFlow {
    std::vector<double> times;
    std::vector<GridDensity> slices;  // shared grid, each mass-normalized

    static GridFlow make(std::vector<double> times, std::vector<GridDensity> slices);
    const Grid1D& grid() const { return slices.front().grid; }
};

double trapezoid(const Grid1D& g, const std::vector<double>& f);

// H(p|r) = int p log(p/r); validation error where r vanishes under p.
double relative_entropy(const GridDensity& p, const GridDensity& r);

// I(p|r) = (1/2) int |d/dx log sqrt(p/r)|^2 p, central differences.
double fisher_information(const GridDensity& p, const GridDensity& r);

// Q(p|m) = -(log sqrt m)' (log sqrt l)' - (sqrt l)'' / (2 sqrt l) with
// l = p/m, finite differences; one-sided at the boundary. Averaging Q
// against p recovers the Fisher information.
std::vector<double> quantum_potential_grid(const GridDensity& p, const GridDensity& m);

// Q(p|Leb) = -(sqrt p)'' / (2 sqrt p).
std::vector<double> quantum_potential_leb(const GridDensity& p);

// Max-norm residual of eps^2 Q(m|Leb) = eps U''/4 - (U')^2/8 for
// m = exp(-U/eps), both sides from finite differences of the U samples.
double potential_identity_residual(const Grid1D& grid, const std::vector<double>& U, double eps);

// Gradient velocity reconstructed from the continuity equation:
// v(x) = -p(x)^{-1} int_lo^x dp/dt dx'. Masked off the effective support.
struct VelocityField1D {
    std::vector<double> v;
    std::vector<char> valid;
};

std::vector<VelocityField1D> current_velocity_1d(const GridFlow& flow);

// (1/2) H(p_s0|r_s0) + (1/2) H(p_s1|r_s1)
//   + eps^{-1} int (1/2) |pdot - rdot|^2_p ds + eps int I(p_s|r_s) ds.
double rate_J(const GridFlow& flow, const GridFlow& reference, double eps);

// Madelung residuals of a flow (q, theta) under potential V:
//   r1 = max |dq/dt + d/dx(q dtheta/dx)|
//   r2 = max |dtheta/dt + (dtheta/dx)^2/2 + V - hbar2 (Q(q|Leb) - Q(m|Leb))|
// With no equilibrium density m, the sign convention flips to
// ... + V + hbar2 Q(q|Leb).
std::pair<double, double> madelung_residual(const GridFlow& q,
                                            const std::vector<std::vector<double>>& theta,
                                            const std::vector<double>& V, double hbar2,
                                            const GridDensity* m = nullptr);

}  // namespace magkit
