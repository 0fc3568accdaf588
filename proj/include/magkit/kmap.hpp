#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "magkit/vec.hpp"

namespace magkit {

// The k distinct source points x_1..x_k in R^d. Together they define the
// uniform counting measure on {x_1..x_k} and the permutation orbit below.
struct SourceSet {
    int d = 0;
    int k = 0;
    std::vector<Vec> points;  // k vectors of length d

    static SourceSet make(int d, int k, std::vector<Vec> points);
    double min_pairwise_dist() const;
};

// S = { x^sigma }: every reordering of the source points, flattened into
// R^{dk}. All elements share the Euclidean norm r, so S lies on a sphere.
// Fully materialized (in lexicographic permutation order) only for
// k <= k_max; nearest-point queries work at any k via linear assignment.
class PermutationOrbit {
public:
    static constexpr int kDefaultKMax = 8;

    static PermutationOrbit make(SourceSet source, int k_max = kDefaultKMax);

    const SourceSet& source() const { return source_; }
    int d() const { return source_.d; }
    int k() const { return source_.k; }
    int dim() const { return source_.d * source_.k; }
    int k_max() const { return k_max_; }
    bool enumerable() const { return !elements_.empty(); }

    // Orbit size k! (only when enumerable).
    std::size_t size() const;
    // Element for the permutation of lexicographic rank `idx`.
    const Vec& element(std::size_t idx) const;
    const std::vector<Vec>& elements() const;
    // slot i of x^sigma is x_{sigma(i)}
    Vec image_of(const std::vector<int>& sigma) const;

    double radius() const { return r_; }          // Euclidean
    double radius2() const { return r_ * r_; }    // Euclidean, squared
    double h_radius2() const { return r_ * r_ / source_.k; }

    Vec barycenter() const;  // mean of S; every slot carries the source mean

private:
    SourceSet source_;
    int k_max_ = kDefaultKMax;
    double r_ = 0.0;
    std::vector<Vec> elements_;  // lexicographic order of sigma; empty if k > k_max
};

// All orbit elements within a relative band of the least squared distance.
struct TieSet {
    std::vector<Vec> members;               // pairwise distinct orbit elements
    std::vector<std::size_t> member_ranks;  // lexicographic permutation ranks
    double min_dist2 = 0.0;                 // common squared distance to the query
    double tol_used = 0.0;
};

struct NearestResult {
    std::vector<int> sigma;  // slot i holds source index sigma[i]
    Vec image;
    double dist2 = 0.0;  // squared Euclidean distance
};

// Global minimizer of sigma -> |y - x^sigma|^2, solved as a linear
// assignment maximizing sum_i y_i . x_{sigma(i)}. Ties broken by the
// lexicographically smallest permutation. Works for any k.
NearestResult nearest_permutation(const Vec& y, const PermutationOrbit& orbit);

// Full tie set at relative tolerance rel_tol on squared distances;
// rel_tol = 0 keeps exact float ties only. Needs the enumerated orbit.
TieSet projection_set(const Vec& y, const PermutationOrbit& orbit, double rel_tol = 1e-9);

// Minimal-norm point of the convex hull of a finite point set, by the
// min-norm-point active-set iteration (finite termination on finite sets).
// The result z is certified against min_p <z, p - z> >= -1e-8 |z| diam.
Vec min_norm_point(const std::vector<Vec>& points);

// Minimal-norm element of the closed convex hull of the tie set: the
// single-valued extension of the orbit projection used at shocks. Equals
// the nearest image when the tie set is a singleton.
Vec proj_o(const Vec& y, const PermutationOrbit& orbit, double rel_tol = 1e-9);

// y - proj_o(y); the drift of the limit dynamics. Coincides with the
// H-gradient of Phi wherever the projection is unique.
Vec mag_drift(const Vec& y, const PermutationOrbit& orbit, double rel_tol = 1e-9);

struct Potentials {
    double phi = 0.0;   // inf_S |y-x|_H^2 / 2
    double pi_s = 0.0;  // sup_S <x,y>_H
};

// Both potentials in the H-norm view. Phi = |y|_H^2/2 - Pi_S + r_H^2/2.
Potentials potentials(const Vec& y, const PermutationOrbit& orbit);

// Lexicographic rank <-> permutation helpers (k small enough that k! fits
// in size_t).
std::vector<int> permutation_of_rank(std::size_t rank, int k);
std::size_t factorial(int k);

}  // namespace magkit
