#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace magkit {

// A point of R^{dk}, read as k slots of R^d. Plain storage; the slot
// structure lives in the indexing helpers below.
using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Squared Euclidean norm on R^{dk}.
inline double norm2(const Vec& a) { return dot(a, a); }

inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }

inline double dist2(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Squared H-norm: k^{-1} times the Euclidean square. Actions and the
// potentials use this view; force fields stay Euclidean.
inline double h_norm2(const Vec& a, int k) { return norm2(a) / static_cast<double>(k); }

inline double h_dot(const Vec& a, const Vec& b, int k) { return dot(a, b) / static_cast<double>(k); }

inline Vec operator+(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline Vec operator-(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

inline Vec operator*(double c, Vec a) {
    for (double& x : a) x *= c;
    return a;
}

inline Vec& operator+=(Vec& a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline Vec& operator-=(Vec& a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

inline void axpy(double c, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

// Dot product of slot i of y with slot j of x, slots of width d.
inline double slot_dot(const Vec& a, int i, const Vec& b, int j, int d) {
    double s = 0.0;
    for (int l = 0; l < d; ++l) s += a[i * d + l] * b[j * d + l];
    return s;
}

struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct capability_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invariant_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const char* msg) {
    if (!ok) throw validation_error(msg);
}

}  // namespace magkit
