#pragma once

#include <functional>

#include "magkit/vec.hpp"

namespace magkit {

// Central-difference gradient with step h (callers scale h by 1 + |y|).
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& y, double h) {
    Vec g(y.size());
    Vec yp = y;
    for (std::size_t c = 0; c < y.size(); ++c) {
        const double saved = yp[c];
        yp[c] = saved + h;
        const double fp = f(yp);
        yp[c] = saved - h;
        const double fm = f(yp);
        yp[c] = saved;
        g[c] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Central-difference Jacobian of a vector field, row-major (rows index the
// field components).
inline std::vector<double> fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& y,
                                       double h) {
    const std::size_t n = y.size();
    const std::size_t m = f(y).size();
    std::vector<double> jac(m * n);
    Vec yp = y;
    for (std::size_t c = 0; c < n; ++c) {
        const double saved = yp[c];
        yp[c] = saved + h;
        const Vec fp = f(yp);
        yp[c] = saved - h;
        const Vec fm = f(yp);
        yp[c] = saved;
        for (std::size_t r = 0; r < m; ++r) jac[r * n + c] = (fp[r] - fm[r]) / (2.0 * h);
    }
    return jac;
}

inline double fd_scalar_derivative(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace magkit
