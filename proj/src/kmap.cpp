#include "magkit/kmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace magkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest-augmenting-path assignment, O(k^3). Minimizes sum_i c[i][perm[i]].
std::vector<int> solve_assignment_min(const std::vector<std::vector<double>>& c) {
    const int n = static_cast<int>(c.size());
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = c[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> perm(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) perm[p[j] - 1] = j - 1;
    return perm;
}

// Gain matrix for nearest_permutation: g[i][j] = y_i . x_j; maximizing the
// total gain minimizes |y - x^sigma|^2.
std::vector<std::vector<double>> gain_matrix(const Vec& y, const SourceSet& src) {
    const int k = src.k, d = src.d;
    std::vector<std::vector<double>> g(k, std::vector<double>(k, 0.0));
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            double s = 0.0;
            for (int l = 0; l < d; ++l) s += y[i * d + l] * src.points[j][l];
            g[i][j] = s;
        }
    return g;
}

double gain_of(const std::vector<std::vector<double>>& g, const std::vector<int>& sigma) {
    double s = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) s += g[i][sigma[i]];
    return s;
}

// Best completion of a fixed prefix: slots [from, k) matched to the unused
// source indices, maximizing the remaining gain.
std::vector<int> complete_max(const std::vector<std::vector<double>>& g, std::vector<int> sigma,
                              int from, std::vector<char> used) {
    const int k = static_cast<int>(g.size());
    std::vector<int> free_cols;
    for (int j = 0; j < k; ++j)
        if (!used[j]) free_cols.push_back(j);
    const int m = static_cast<int>(free_cols.size());
    if (m == 0) return sigma;
    std::vector<std::vector<double>> sub(m, std::vector<double>(m, 0.0));
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) sub[a][b] = -g[from + a][free_cols[b]];
    const std::vector<int> perm = solve_assignment_min(sub);
    for (int a = 0; a < m; ++a) sigma[from + a] = free_cols[perm[a]];
    return sigma;
}

}  // namespace

std::size_t factorial(int k) {
    std::size_t f = 1;
    for (int i = 2; i <= k; ++i) f *= static_cast<std::size_t>(i);
    return f;
}

std::vector<int> permutation_of_rank(std::size_t rank, int k) {
    std::vector<int> pool(k);
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<int> sigma(k);
    std::size_t f = factorial(k);
    for (int i = 0; i < k; ++i) {
        f /= static_cast<std::size_t>(k - i);
        const std::size_t q = rank / f;
        rank %= f;
        sigma[i] = pool[q];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(q));
    }
    return sigma;
}

SourceSet SourceSet::make(int d, int k, std::vector<Vec> points) {
    require(d >= 1, "SourceSet: d must be positive");
    require(k >= 1, "SourceSet: k must be positive");
    require(static_cast<int>(points.size()) == k, "SourceSet: expected k points");
    for (const Vec& p : points)
        require(static_cast<int>(p.size()) == d, "SourceSet: point dimension mismatch");
    SourceSet s{d, k, std::move(points)};
    require(k == 1 || s.min_pairwise_dist() > 0.0, "SourceSet: source points must be pairwise distinct");
    return s;
}

double SourceSet::min_pairwise_dist() const {
    double m = kInf;
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) m = std::min(m, std::sqrt(dist2(points[i], points[j])));
    return m;
}

PermutationOrbit PermutationOrbit::make(SourceSet source, int k_max) {
    PermutationOrbit o;
    o.source_ = std::move(source);
    o.k_max_ = k_max;
    double r2 = 0.0;
    for (const Vec& p : o.source_.points) r2 += norm2(p);
    o.r_ = std::sqrt(r2);
    if (o.source_.k <= k_max) {
        const int k = o.source_.k;
        std::vector<int> sigma(k);
        std::iota(sigma.begin(), sigma.end(), 0);
        o.elements_.reserve(factorial(k));
        do {
            o.elements_.push_back(o.image_of(sigma));
        } while (std::next_permutation(sigma.begin(), sigma.end()));
    }
    return o;
}

std::size_t PermutationOrbit::size() const {
    require(enumerable(), "PermutationOrbit: not materialized (k > k_max)");
    return elements_.size();
}

const Vec& PermutationOrbit::element(std::size_t idx) const {
    require(enumerable(), "PermutationOrbit: not materialized (k > k_max)");
    return elements_[idx];
}

const std::vector<Vec>& PermutationOrbit::elements() const {
    require(enumerable(), "PermutationOrbit: not materialized (k > k_max)");
    return elements_;
}

Vec PermutationOrbit::image_of(const std::vector<int>& sigma) const {
    const int d = source_.d, k = source_.k;
    Vec img(static_cast<std::size_t>(d) * k);
    for (int i = 0; i < k; ++i)
        for (int l = 0; l < d; ++l) img[i * d + l] = source_.points[sigma[i]][l];
    return img;
}

Vec PermutationOrbit::barycenter() const {
    const int d = source_.d, k = source_.k;
    Vec mean_source(d, 0.0);
    for (const Vec& p : source_.points) axpy(1.0 / k, p, mean_source);
    Vec b(static_cast<std::size_t>(d) * k);
    for (int i = 0; i < k; ++i)
        for (int l = 0; l < d; ++l) b[i * d + l] = mean_source[l];
    return b;
}

NearestResult nearest_permutation(const Vec& y, const PermutationOrbit& orbit) {
    require(static_cast<int>(y.size()) == orbit.dim(), "nearest_permutation: dimension mismatch");
    const int k = orbit.k();
    const auto g = gain_matrix(y, orbit.source());

    std::vector<std::vector<double>> cost(k, std::vector<double>(k));
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) cost[i][j] = -g[i][j];
    std::vector<int> sigma = solve_assignment_min(cost);
    double best_gain = gain_of(g, sigma);

    // Lexicographic refinement: at each slot, probe smaller source indices
    // and keep any that still complete to the optimal gain.
    std::vector<char> used(k, 0);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < sigma[i]; ++j) {
            if (used[j]) continue;
            std::vector<int> cand(sigma.begin(), sigma.end());
            cand[i] = j;
            std::vector<char> cand_used = used;
            cand_used[j] = 1;
            cand = complete_max(g, cand, i + 1, cand_used);
            const double cand_gain = gain_of(g, cand);
            if (cand_gain >= best_gain) {
                sigma = cand;
                best_gain = cand_gain;
                break;
            }
        }
        used[sigma[i]] = 1;
    }

    NearestResult res;
    res.sigma = sigma;
    res.image = orbit.image_of(sigma);
    res.dist2 = dist2(y, res.image);
    return res;
}

TieSet projection_set(const Vec& y, const PermutationOrbit& orbit, double rel_tol) {
    require(static_cast<int>(y.size()) == orbit.dim(), "projection_set: dimension mismatch");
    require(rel_tol >= 0.0, "projection_set: rel_tol must be nonnegative");
    if (!orbit.enumerable())
        throw capability_error("projection_set: full enumeration needs k <= k_max");

    const auto& elems = orbit.elements();
    std::vector<double> d2(elems.size());
    double dmin = kInf;
    for (std::size_t s = 0; s < elems.size(); ++s) {
        d2[s] = dist2(y, elems[s]);
        dmin = std::min(dmin, d2[s]);
    }
    const double cut = (rel_tol == 0.0) ? dmin : dmin * (1.0 + rel_tol);
    TieSet tie;
    tie.min_dist2 = dmin;
    tie.tol_used = rel_tol;
    for (std::size_t s = 0; s < elems.size(); ++s) {
        const bool in = (rel_tol == 0.0) ? (d2[s] == dmin) : (d2[s] <= cut);
        if (in) {
            tie.members.push_back(elems[s]);
            tie.member_ranks.push_back(s);
        }
    }
    return tie;
}

namespace {

// min |sum_i w_i s_i|^2 subject to sum_i w_i = 1, via the bordered Gram
// system. The solve runs in long double: the returned point's accuracy
// goes with the square root of the value precision. Returns nullopt when
// the system is numerically singular (affinely dependent corral).
std::optional<std::vector<double>> affine_min_norm(const std::vector<const Vec*>& pts) {
    const int m = static_cast<int>(pts.size());
    const int n = m + 1;
    std::vector<std::vector<long double>> a(n, std::vector<long double>(n + 1, 0.0L));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            long double g = 0.0L;
            for (std::size_t c = 0; c < pts[i]->size(); ++c)
                g += static_cast<long double>((*pts[i])[c]) * (*pts[j])[c];
            a[i][j] = g;
        }
        a[i][m] = 1.0L;
        a[i][n] = 0.0L;
    }
    for (int j = 0; j < m; ++j) a[m][j] = 1.0L;
    a[m][m] = 0.0L;
    a[m][n] = 1.0L;

    long double scale = 1.0L;
    for (int i = 0; i < m; ++i) scale = std::max(scale, std::abs(a[i][i]));

    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-13L * scale) return std::nullopt;
        std::swap(a[col], a[piv]);
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const long double f = a[r][col] / a[col][col];
            if (f == 0.0L) continue;
            for (int c2 = col; c2 <= n; ++c2) a[r][c2] -= f * a[col][c2];
        }
    }
    std::vector<double> w(m);
    for (int i = 0; i < m; ++i) w[i] = static_cast<double>(a[i][n] / a[i][i]);
    return w;
}

}  // namespace

Vec min_norm_point(const std::vector<Vec>& points) {
    require(!points.empty(), "min_norm_point: empty point set");
    const std::size_t n = points.size();
    if (n == 1) return points[0];

    double max_n2 = 0.0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double n2 = norm2(points[i]);
        max_n2 = std::max(max_n2, n2);
        if (n2 < norm2(points[start])) start = i;
    }
    const double scale = std::max(1.0, max_n2);

    std::vector<std::size_t> corral{start};
    std::vector<double> lambda{1.0};
    Vec x = points[start];

    auto combo = [&]() {
        Vec z(x.size(), 0.0);
        for (std::size_t i = 0; i < corral.size(); ++i) axpy(lambda[i], points[corral[i]], z);
        return z;
    };

    const int max_iter = 64 + 8 * static_cast<int>(n + x.size());
    for (int iter = 0; iter < max_iter; ++iter) {
        // linear minimization oracle over the point set
        std::size_t j = 0;
        double best = kInf;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = dot(x, points[i]);
            if (v < best) {
                best = v;
                j = i;
            }
        }
        const double gap = norm2(x) - best;  // bounds f(x) - f*
        if (gap <= 1e-12 * scale) break;
        if (std::find(corral.begin(), corral.end(), j) != corral.end()) break;

        corral.push_back(j);
        lambda.push_back(0.0);

        // minor cycle: descend to the min-norm point of the corral's hull
        for (;;) {
            std::vector<const Vec*> pts;
            pts.reserve(corral.size());
            for (std::size_t idx : corral) pts.push_back(&points[idx]);
            const auto w_opt = affine_min_norm(pts);
            if (!w_opt) {
                // affinely dependent corral: drop the smallest-weight member
                std::size_t drop = 0;
                for (std::size_t i = 1; i < corral.size(); ++i)
                    if (lambda[i] < lambda[drop]) drop = i;
                corral.erase(corral.begin() + static_cast<std::ptrdiff_t>(drop));
                lambda.erase(lambda.begin() + static_cast<std::ptrdiff_t>(drop));
                double tot = 0.0;
                for (double l : lambda) tot += l;
                for (double& l : lambda) l /= tot;
                x = combo();
                break;
            }
            const std::vector<double>& w = *w_opt;
            const double wmin = *std::min_element(w.begin(), w.end());
            if (wmin > -1e-12) {
                lambda = w;
                for (double& l : lambda) l = std::max(l, 0.0);
                double tot = 0.0;
                for (double l : lambda) tot += l;
                for (double& l : lambda) l /= tot;
                x = combo();
                break;
            }
            // step toward w until the first coefficient vanishes
            double theta = 1.0;
            for (std::size_t i = 0; i < w.size(); ++i)
                if (w[i] < 0.0) theta = std::min(theta, lambda[i] / (lambda[i] - w[i]));
            for (std::size_t i = 0; i < w.size(); ++i)
                lambda[i] = (1.0 - theta) * lambda[i] + theta * w[i];
            // purge vanished members
            for (std::size_t i = corral.size(); i-- > 0;) {
                if (lambda[i] <= 1e-14) {
                    corral.erase(corral.begin() + static_cast<std::ptrdiff_t>(i));
                    lambda.erase(lambda.begin() + static_cast<std::ptrdiff_t>(i));
                }
            }
            double tot = 0.0;
            for (double l : lambda) tot += l;
            for (double& l : lambda) l /= tot;
            x = combo();
        }
    }

    // optimality certificate
    double diam = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) diam = std::max(diam, dist2(points[i], points[j]));
    diam = std::sqrt(diam);
    for (const Vec& p : points)
        if (dot(x, p - x) < -1e-8 * norm(x) * diam - 1e-14)
            throw numeric_error("min_norm_point: optimality certificate failed");
    return x;
}

Vec proj_o(const Vec& y, const PermutationOrbit& orbit, double rel_tol) {
    const TieSet tie = projection_set(y, orbit, rel_tol);
    if (tie.members.size() == 1) return tie.members.front();
    return min_norm_point(tie.members);
}

Vec mag_drift(const Vec& y, const PermutationOrbit& orbit, double rel_tol) {
    return y - proj_o(y, orbit, rel_tol);
}

Potentials potentials(const Vec& y, const PermutationOrbit& orbit) {
    require(static_cast<int>(y.size()) == orbit.dim(), "potentials: dimension mismatch");
    const int k = orbit.k();
    Potentials out;
    if (orbit.enumerable()) {
        double dmin = kInf, gmax = -kInf;
        for (const Vec& x : orbit.elements()) {
            dmin = std::min(dmin, dist2(y, x));
            gmax = std::max(gmax, dot(x, y));
        }
        out.phi = dmin / (2.0 * k);
        out.pi_s = gmax / k;
    } else {
        const NearestResult nr = nearest_permutation(y, orbit);
        out.phi = nr.dist2 / (2.0 * k);
        out.pi_s = dot(nr.image, y) / k;
    }
    return out;
}

}  // namespace magkit
