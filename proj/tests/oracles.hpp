#pragma once

// Test-only reference implementations, kept independent of the library
// code paths they check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "magkit/kmap.hpp"
#include "magkit/rng.hpp"
#include "magkit/vec.hpp"

namespace magkit::oracle {

inline Vec random_vec(Rng& rng, std::size_t n, double spread) {
    Vec v(n);
    for (double& c : v) c = (2.0 * rng.uniform() - 1.0) * spread;
    return v;
}

inline PermutationOrbit random_orbit(Rng& rng, int d, int k, double spread) {
    std::vector<Vec> pts;
    for (;;) {
        pts.clear();
        for (int i = 0; i < k; ++i) pts.push_back(random_vec(rng, d, spread));
        SourceSet cand{d, k, pts};
        if (k == 1 || cand.min_pairwise_dist() > 0.15 * spread) break;
    }
    return PermutationOrbit::make(SourceSet::make(d, k, std::move(pts)));
}

// Exhaustive nearest-orbit-point search, first minimum in lexicographic
// permutation order.
struct BruteNearest {
    std::vector<int> sigma;
    Vec image;
    double dist2 = 0.0;
};

inline BruteNearest brute_nearest(const Vec& y, const SourceSet& src) {
    std::vector<int> sigma(src.k);
    std::iota(sigma.begin(), sigma.end(), 0);
    BruteNearest best;
    best.dist2 = std::numeric_limits<double>::infinity();
    do {
        Vec img(static_cast<std::size_t>(src.d) * src.k);
        for (int i = 0; i < src.k; ++i)
            for (int l = 0; l < src.d; ++l) img[i * src.d + l] = src.points[sigma[i]][l];
        const double d = dist2(y, img);
        if (d < best.dist2) {
            best.dist2 = d;
            best.image = img;
            best.sigma = sigma;
        }
    } while (std::next_permutation(sigma.begin(), sigma.end()));
    return best;
}

// Dense quadratic program over the simplex: minimize |sum w_i p_i|^2 by a
// refining barycentric grid search. Exact up to the final grid scale;
// intended for point sets of size <= 4.
inline Vec simplex_grid_min_norm(const std::vector<Vec>& pts, int grid = 10) {
    const int n = static_cast<int>(pts.size());
    const std::size_t dim = pts.front().size();
    std::vector<double> center(n, 1.0 / n);
    double width = 1.0;

    // Compare candidates through the difference form
    //   f(w) - f(wb) = <z - zb, z + zb>,
    // assembling z - zb from the weight differences; a plain value
    // comparison cannot localize the argmin of a flat valley beyond the
    // square root of the value precision.
    auto improves = [&](const std::vector<double>& w, const std::vector<double>& wb) {
        long double diff = 0.0L;
        for (std::size_t c = 0; c < dim; ++c) {
            long double d = 0.0L, s = 0.0L;
            for (int i = 0; i < n; ++i) {
                const long double pc = pts[i][c];
                d += (static_cast<long double>(w[i]) - wb[i]) * pc;
                s += (static_cast<long double>(w[i]) + wb[i]) * pc;
            }
            diff += d * s;
        }
        return diff < 0.0L;
    };

    std::vector<double> best_w = center;
    // pattern search: rescan the patch around the incumbent and halve the
    // scale only when a whole sweep brings no improvement
    for (int sweeps = 0; width > 1e-14 && sweeps < 20000; ++sweeps) {
        bool moved = false;
        // enumerate compositions of `grid` into n parts, mapped into the
        // simplex patch around the current center
        std::vector<int> comp(n, 0);
        comp[0] = grid;
        for (;;) {
            std::vector<double> w(n);
            double tot = 0.0;
            for (int i = 0; i < n; ++i) {
                w[i] = std::max(0.0, center[i] + width * (static_cast<double>(comp[i]) / grid -
                                                          1.0 / n));
                tot += w[i];
            }
            for (int i = 0; i < n; ++i) w[i] /= tot;
            if (improves(w, best_w)) {
                best_w = w;
                moved = true;
            }
            // next composition
            int i = 0;
            while (i < n - 1 && comp[i] == 0) ++i;
            if (i == n - 1) break;
            const int take = comp[i];
            comp[i] = 0;
            comp[0] = take - 1;
            comp[i + 1] += 1;
        }
        center = best_w;
        if (!moved) width *= 0.5;
    }

    // pairwise exact-line-search polish: for a convex quadratic over the
    // simplex, stationarity along every (i,j) mass exchange is global
    // optimality, and exact 1D minimization walks anisotropic valleys that
    // the pattern sweep resolves only slowly
    std::vector<long double> w(best_w.begin(), best_w.end());
    std::vector<long double> z(dim, 0.0L);
    for (int i = 0; i < n; ++i)
        for (std::size_t c = 0; c < dim; ++c) z[c] += w[i] * pts[i][c];
    for (int sweep = 0; sweep < 100000; ++sweep) {
        long double largest = 0.0L;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                // move mass t from j to i along the chord p_i - p_j
                long double num = 0.0L, den = 0.0L;
                for (std::size_t c = 0; c < dim; ++c) {
                    const long double dir = static_cast<long double>(pts[i][c]) - pts[j][c];
                    num -= z[c] * dir;
                    den += dir * dir;
                }
                if (den == 0.0L) continue;
                long double t = num / den;
                t = std::min(t, w[j]);
                t = std::max(t, -w[i]);
                if (t == 0.0L) continue;
                w[i] += t;
                w[j] -= t;
                for (std::size_t c = 0; c < dim; ++c)
                    z[c] += t * (static_cast<long double>(pts[i][c]) - pts[j][c]);
                largest = std::max(largest, std::abs(t));
            }
        }
        if (largest < 1e-17L) break;
    }
    Vec out(dim);
    for (std::size_t c = 0; c < dim; ++c) out[c] = static_cast<double>(z[c]);
    return out;
}

// A query point with a genuine multi-element tie set: take a random y,
// then slide it onto the perpendicular bisector of its two nearest orbit
// elements.
inline Vec tie_query(Rng& rng, const PermutationOrbit& orbit, double spread) {
    Vec y = random_vec(rng, orbit.dim(), spread);
    std::size_t a = 0, b = 1;
    double da = std::numeric_limits<double>::infinity(), db = da;
    for (std::size_t s = 0; s < orbit.size(); ++s) {
        const double d = dist2(y, orbit.element(s));
        if (d < da) {
            db = da;
            b = a;
            da = d;
            a = s;
        } else if (d < db) {
            db = d;
            b = s;
        }
    }
    Vec u = orbit.element(a) - orbit.element(b);
    axpy(-dot(y, u) / norm2(u), u, y);
    return y;
}

// Brute-force minimal assignment cost between equal-size clouds.
inline double brute_wasserstein_p(const std::vector<Vec>& xs, const std::vector<Vec>& ys,
                                  double p) {
    const std::size_t n = xs.size();
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            c += std::pow(std::sqrt(dist2(xs[i], ys[perm[i]])), p);
        best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::pow(best / n, 1.0 / p);
}

}  // namespace magkit::oracle
