#include "magkit/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "magkit/branching.hpp"
#include "magkit/dynamics.hpp"
#include "magkit/entropic.hpp"
#include "magkit/fd.hpp"
#include "magkit/heatflow.hpp"
#include "magkit/io.hpp"
#include "magkit/kmap.hpp"
#include "magkit/rng.hpp"

namespace magkit {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kToolVersion = "magkit 0.1.0";

int thread_cap() {
    const char* env = std::getenv("MAGKIT_THREADS");
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (!env) return hw;
    const int v = std::atoi(env);
    return v >= 1 ? std::min(v, hw) : hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const int workers = std::min<std::size_t>(thread_cap(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

// ---- strict config reading ------------------------------------------------

void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw validation_error("unknown key: " + (path.empty() ? it.key() : path + "." + it.key()));
    }
}

const json& need(const json& obj, const std::string& path, const std::string& key) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw validation_error((path.empty() ? key : path + "." + key) + ": required");
    return *it;
}

double need_num(const json& obj, const std::string& path, const std::string& key) {
    const json& v = need(obj, path, key);
    if (!v.is_number())
        throw validation_error((path.empty() ? key : path + "." + key) + ": expected a number");
    return v.get<double>();
}

double num_or(const json& obj, const std::string& key, double def) {
    auto it = obj.find(key);
    return it == obj.end() ? def : it->get<double>();
}

struct ResolvedConfig {
    std::string kind;
    SourceSet source{1, 1, {Vec{0.0}}};
    double epsilon = 0.0;
    bool has_epsilon = false;
    double eta = 0.0;
    KappaSchedule kappa = KappaSchedule::power();
    std::string clock = "t";
    double time0 = 0.0, time1 = 1.0, h = 1e-2;
    int k_max = PermutationOrbit::kDefaultKMax;
    double rel_tol = 1e-9;
    double fd_step = 1e-5;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    std::set<std::string> formats{"csv", "json"};
    // kind-specific
    int paths = 1;
    Vec y0, v0;
    bool has_initial = false;
    long long branch_n = 1000;
    double branch_r0 = 0.0;  // 0: derive from the orbit radius
    double branch_m0 = 1.0;
    std::string branch_variant = "increasing";
    Grid1D grid{-8.0, 8.0, 1024};
    json resolved;  // config with defaults filled, recorded in the manifest
};

SourceSet parse_sources(const json& problem) {
    const int d = static_cast<int>(need_num(problem, "problem", "d"));
    const int k = static_cast<int>(need_num(problem, "problem", "k"));
    const json& src = need(problem, "problem", "sources");
    std::vector<Vec> pts;
    if (src.is_string()) {
        const std::string s = src.get<std::string>();
        if (s.rfind("random:", 0) != 0)
            throw validation_error("problem.sources: expected an array or \"random:seed,spread\"");
        const std::string rest = s.substr(7);
        const auto comma = rest.find(',');
        if (comma == std::string::npos)
            throw validation_error("problem.sources: expected \"random:seed,spread\"");
        const std::uint64_t rseed = std::strtoull(rest.substr(0, comma).c_str(), nullptr, 10);
        const double spread = std::strtod(rest.substr(comma + 1).c_str(), nullptr);
        require(spread > 0.0, "problem.sources: spread must be positive");
        Rng rng(rseed);
        for (int tries = 0; tries < 64; ++tries) {
            pts.clear();
            for (int i = 0; i < k; ++i) {
                Vec p(d);
                for (int l = 0; l < d; ++l) p[l] = (2.0 * rng.uniform() - 1.0) * spread;
                pts.push_back(std::move(p));
            }
            SourceSet cand{d, k, pts};
            if (k == 1 || cand.min_pairwise_dist() > 1e-6 * spread) break;
        }
    } else if (src.is_array()) {
        for (const auto& row : src) {
            Vec p;
            for (const auto& v : row) p.push_back(v.get<double>());
            pts.push_back(std::move(p));
        }
    } else {
        throw validation_error("problem.sources: expected an array or \"random:seed,spread\"");
    }
    return SourceSet::make(d, k, std::move(pts));
}

KappaSchedule parse_kappa(const json& spec) {
    if (spec.is_null()) return KappaSchedule::power();
    reject_unknown(spec, "physics.kappa", {"kind", "value", "s", "kappa"});
    const std::string kind = need(spec, "physics.kappa", "kind").get<std::string>();
    if (kind == "power") return KappaSchedule::power();
    if (kind == "constant") return KappaSchedule::constant(need_num(spec, "physics.kappa", "value"));
    if (kind == "table") {
        std::vector<double> s, kap;
        for (const auto& v : need(spec, "physics.kappa", "s")) s.push_back(v.get<double>());
        for (const auto& v : need(spec, "physics.kappa", "kappa")) kap.push_back(v.get<double>());
        return KappaSchedule::table(std::move(s), std::move(kap));
    }
    throw validation_error("physics.kappa.kind: expected power, constant or table");
}

json kappa_json(const KappaSchedule& k) {
    switch (k.kind()) {
        case KappaSchedule::Kind::Power:
            return json{{"kind", "power"}};
        case KappaSchedule::Kind::Constant:
            return json{{"kind", "constant"}, {"value", k.value(0.0)}};
        case KappaSchedule::Kind::Table:
            return json{{"kind", "table"}};
    }
    return json{};
}

ResolvedConfig parse_config(const json& cfg, const std::string& out_override) {
    static const std::set<std::string> kinds{"kmap-dynamics", "mag-limit",  "surfing-sde",
                                             "heat-paths",    "branching",  "entropic-checks",
                                             "identity-suite"};
    reject_unknown(cfg, "", {"kind", "problem", "physics", "time", "numerics", "seed", "output",
                             "paths", "initial", "branching", "grid"});
    ResolvedConfig rc;
    rc.kind = need(cfg, "", "kind").get<std::string>();
    if (!kinds.count(rc.kind)) throw validation_error("kind: unknown experiment kind " + rc.kind);

    const bool needs_problem = rc.kind != "entropic-checks" && rc.kind != "identity-suite";
    if (needs_problem) {
        const json& problem = need(cfg, "", "problem");
        reject_unknown(problem, "problem", {"d", "k", "sources"});
        rc.source = parse_sources(problem);
    }

    const bool needs_epsilon = needs_problem || rc.kind == "entropic-checks";
    if (cfg.contains("physics")) {
        const json& ph = cfg.at("physics");
        reject_unknown(ph, "physics", {"epsilon", "eta", "kappa"});
        if (ph.contains("epsilon")) {
            rc.epsilon = ph.at("epsilon").get<double>();
            rc.has_epsilon = true;
            require(rc.epsilon > 0.0, "physics.epsilon: must be positive");
        }
        rc.eta = num_or(ph, "eta", 0.0);
        rc.kappa = parse_kappa(ph.contains("kappa") ? ph.at("kappa") : json());
    }
    if (needs_epsilon && !rc.has_epsilon)
        throw validation_error("physics.epsilon: required");

    if (cfg.contains("time")) {
        const json& tm = cfg.at("time");
        reject_unknown(tm, "time", {"clock", "t0", "t1", "s0", "s1", "h"});
        rc.clock = tm.contains("clock") ? tm.at("clock").get<std::string>() : "t";
        if (rc.clock == "t") {
            rc.time0 = need_num(tm, "time", "t0");
            rc.time1 = need_num(tm, "time", "t1");
        } else if (rc.clock == "s") {
            rc.time0 = need_num(tm, "time", "s0");
            rc.time1 = need_num(tm, "time", "s1");
        } else {
            throw validation_error("time.clock: expected t or s");
        }
        rc.h = need_num(tm, "time", "h");
        require(rc.h > 0.0, "time.h: must be positive");
        require(rc.time1 > rc.time0, "time: empty interval");
    } else if (needs_problem) {
        throw validation_error("time: required");
    }

    if (cfg.contains("numerics")) {
        const json& nm = cfg.at("numerics");
        reject_unknown(nm, "numerics", {"k_max", "rel_tol", "fd_step"});
        rc.k_max = static_cast<int>(num_or(nm, "k_max", rc.k_max));
        rc.rel_tol = num_or(nm, "rel_tol", rc.rel_tol);
        rc.fd_step = num_or(nm, "fd_step", rc.fd_step);
        require(rc.rel_tol >= 0.0, "numerics.rel_tol: must be nonnegative");
    }
    if (cfg.contains("seed")) rc.seed = cfg.at("seed").get<std::uint64_t>();

    if (cfg.contains("output")) {
        const json& out = cfg.at("output");
        reject_unknown(out, "output", {"dir", "formats"});
        if (out.contains("dir")) rc.out_dir = out.at("dir").get<std::string>();
        if (out.contains("formats")) {
            rc.formats.clear();
            for (const auto& f : out.at("formats")) {
                const std::string s = f.get<std::string>();
                if (s != "csv" && s != "json" && s != "svg")
                    throw validation_error("output.formats: expected csv, json or svg");
                rc.formats.insert(s);
            }
        }
    }
    if (!out_override.empty()) rc.out_dir = out_override;

    if (cfg.contains("paths")) rc.paths = cfg.at("paths").get<int>();
    require(rc.paths >= 1, "paths: must be at least one");

    if (cfg.contains("initial")) {
        const json& ini = cfg.at("initial");
        reject_unknown(ini, "initial", {"y0", "v0"});
        for (const auto& v : need(ini, "initial", "y0")) rc.y0.push_back(v.get<double>());
        if (ini.contains("v0"))
            for (const auto& v : ini.at("v0")) rc.v0.push_back(v.get<double>());
        else
            rc.v0.assign(rc.y0.size(), 0.0);
        rc.has_initial = true;
    }

    if (cfg.contains("branching")) {
        const json& br = cfg.at("branching");
        reject_unknown(br, "branching", {"N", "R0", "m0", "variant"});
        rc.branch_n = static_cast<long long>(need_num(br, "branching", "N"));
        rc.branch_r0 = num_or(br, "R0", 0.0);
        rc.branch_m0 = num_or(br, "m0", 1.0);
        if (br.contains("variant")) rc.branch_variant = br.at("variant").get<std::string>();
        if (rc.branch_variant != "increasing" && rc.branch_variant != "general")
            throw validation_error("branching.variant: expected increasing or general");
    } else if (rc.kind == "branching") {
        throw validation_error("branching: required");
    }

    if (cfg.contains("grid")) {
        const json& gr = cfg.at("grid");
        reject_unknown(gr, "grid", {"lo", "hi", "n"});
        rc.grid.lo = need_num(gr, "grid", "lo");
        rc.grid.hi = need_num(gr, "grid", "hi");
        rc.grid.n = static_cast<int>(need_num(gr, "grid", "n"));
    }

    // resolved config for the manifest: every default spelled out
    json r;
    r["kind"] = rc.kind;
    if (needs_problem) {
        json pts = json::array();
        for (const Vec& p : rc.source.points) pts.push_back(p);
        r["problem"] = {{"d", rc.source.d}, {"k", rc.source.k}, {"sources", pts}};
    }
    r["physics"] = {{"eta", rc.eta}, {"kappa", kappa_json(rc.kappa)}};
    if (rc.has_epsilon) r["physics"]["epsilon"] = rc.epsilon;
    if (needs_problem)
        r["time"] = {{"clock", rc.clock},
                     {rc.clock == "t" ? "t0" : "s0", rc.time0},
                     {rc.clock == "t" ? "t1" : "s1", rc.time1},
                     {"h", rc.h}};
    r["numerics"] = {{"k_max", rc.k_max}, {"rel_tol", rc.rel_tol}, {"fd_step", rc.fd_step}};
    r["seed"] = rc.seed;
    r["output"] = {{"dir", rc.out_dir}, {"formats", std::vector<std::string>(rc.formats.begin(), rc.formats.end())}};
    if (rc.kind == "kmap-dynamics" || rc.kind == "mag-limit" || rc.kind == "surfing-sde") {
        if (rc.has_initial) r["initial"] = {{"y0", rc.y0}, {"v0", rc.v0}};
    }
    if (rc.kind == "heat-paths") r["paths"] = rc.paths;
    if (rc.kind == "branching")
        r["branching"] = {{"N", rc.branch_n},
                          {"R0", rc.branch_r0},
                          {"m0", rc.branch_m0},
                          {"variant", rc.branch_variant}};
    if (rc.kind == "entropic-checks")
        r["grid"] = {{"lo", rc.grid.lo}, {"hi", rc.grid.hi}, {"n", rc.grid.n}};
    rc.resolved = std::move(r);
    return rc;
}

// ---- shared helpers for suites and runs -----------------------------------

PermutationOrbit random_orbit(Rng& rng, int d, int k, double spread) {
    std::vector<Vec> pts;
    for (;;) {
        pts.clear();
        for (int i = 0; i < k; ++i) {
            Vec p(d);
            for (int l = 0; l < d; ++l) p[l] = (2.0 * rng.uniform() - 1.0) * spread;
            pts.push_back(p);
        }
        SourceSet cand{d, k, pts};
        if (k == 1 || cand.min_pairwise_dist() > 0.15 * spread) break;
    }
    return PermutationOrbit::make(SourceSet::make(d, k, std::move(pts)));
}

Vec random_vec(Rng& rng, std::size_t n, double spread) {
    Vec v(n);
    for (double& c : v) c = (2.0 * rng.uniform() - 1.0) * spread;
    return v;
}

// ---- identity suites -------------------------------------------------------

std::vector<CheckResult> suite_geometry() {
    std::vector<CheckResult> out;
    Rng rng(1001);

    {  // every orbit element sits on the sphere of radius r
        double worst = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            const auto orbit = random_orbit(rng, 2, 4, 1.5);
            for (const Vec& x : orbit.elements())
                worst = std::max(worst, std::abs(norm2(x) - orbit.radius2()) / orbit.radius2());
        }
        out.push_back({"orbit_sphere_radius", worst <= 1e-12, worst, 1e-12});
    }
    {  // assignment solver against direct enumeration
        bool all = true;
        for (int rep = 0; rep < 100; ++rep) {
            const int k = 2 + static_cast<int>(rng.below(4));
            const auto orbit = random_orbit(rng, 2, k, 1.0);
            const Vec y = random_vec(rng, orbit.dim(), 2.0);
            const auto nr = nearest_permutation(y, orbit);
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t s = 0; s < orbit.size(); ++s) {
                const double d = dist2(y, orbit.element(s));
                if (d < best) {
                    best = d;
                    arg = s;
                }
            }
            if (nr.image != orbit.element(arg)) all = false;
        }
        out.push_back({"assignment_matches_enumeration", all, all ? 0.0 : 1.0, 0.0});
    }
    {  // min-norm certificate on random hulls
        double worst = 0.0;
        for (int rep = 0; rep < 50; ++rep) {
            const std::size_t n = 2 + rng.below(9);
            const std::size_t dim = 1 + rng.below(5);
            std::vector<Vec> pts;
            for (std::size_t i = 0; i < n; ++i) pts.push_back(random_vec(rng, dim, 2.0));
            const Vec z = min_norm_point(pts);
            double diam = 0.0;
            for (const Vec& a : pts)
                for (const Vec& b : pts) diam = std::max(diam, std::sqrt(dist2(a, b)));
            double viol = 0.0;
            for (const Vec& pnt : pts) viol = std::min(viol, dot(z, pnt - z));
            const double floor_v = -1e-8 * norm(z) * diam - 1e-14;
            worst = std::max(worst, floor_v > viol ? floor_v - viol : 0.0);
        }
        out.push_back({"min_norm_certificate", worst == 0.0, worst, 0.0});
    }
    {  // hull min-norm point is also the hull point nearest to the query
        double worst = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            const auto orbit = random_orbit(rng, 2, 3, 1.2);
            const std::size_t ia = rng.below(orbit.size());
            std::size_t ib = rng.below(orbit.size());
            while (ib == ia) ib = rng.below(orbit.size());
            Vec u = orbit.element(ia) - orbit.element(ib);
            Vec y = random_vec(rng, orbit.dim(), 1.5);
            axpy(-dot(y, u) / norm2(u), u, y);  // equidistant from both picks
            const TieSet tie = projection_set(y, orbit, 1e-9);
            if (tie.members.size() < 2) continue;
            const Vec po = min_norm_point(tie.members);
            std::vector<Vec> shifted;
            for (const Vec& pnt : tie.members) shifted.push_back(pnt - y);
            const Vec nearest = y + min_norm_point(shifted);
            worst = std::max(worst, norm(po - nearest));
        }
        out.push_back({"hull_projection_coincidence", worst <= 1e-10, worst, 1e-10});
    }
    {  // tie membership is the same as support-function optimality
        bool all = true;
        for (int rep = 0; rep < 50; ++rep) {
            const auto orbit = random_orbit(rng, 2, 3, 1.0);
            const Vec y = random_vec(rng, orbit.dim(), 1.5);
            const TieSet tie = projection_set(y, orbit, 0.0);
            double gmax = -std::numeric_limits<double>::infinity();
            for (const Vec& x : orbit.elements()) gmax = std::max(gmax, dot(x, y));
            const double slack = 1e-12 * orbit.radius() * norm(y);
            std::set<std::size_t> by_gain;
            for (std::size_t s = 0; s < orbit.size(); ++s)
                if (dot(orbit.element(s), y) >= gmax - slack) by_gain.insert(s);
            for (std::size_t r : tie.member_ranks)
                if (!by_gain.count(r)) all = false;
        }
        out.push_back({"projection_support_optimality", all, all ? 0.0 : 1.0, 0.0});
    }
    return out;
}

std::vector<CheckResult> suite_fields() {
    std::vector<CheckResult> out;
    Rng rng(2002);

    {  // 4 eps^2 e^{4t} grad Q == -m_velocity + force_field
        double worst = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            const int d = 1 + static_cast<int>(rng.below(2));
            const int k = 2 + static_cast<int>(rng.below(2));
            const auto orbit = random_orbit(rng, d, k, 1.0);
            FlowParams fp{0.05 + 0.4 * rng.uniform(), &orbit};
            const double t = -0.4 + 0.8 * rng.uniform();
            const Vec y = random_vec(rng, orbit.dim(), 1.5);
            const double h = 1e-5 * (1.0 + norm(y));
            const Vec grad_q = fd_gradient(
                [&](const Vec& z) { return quantum_potential_mixture(z, fp, t); }, y, h);
            const double c = 4.0 * fp.epsilon * fp.epsilon * std::exp(4.0 * t);
            const Vec rhs = force_field(y, fp, t) - m_velocity(y, fp, t);
            Vec lhs = grad_q;
            for (double& v : lhs) v *= c;
            worst = std::max(worst, norm(lhs - rhs) / std::max(1e-12, norm(rhs)));
        }
        out.push_back({"force_matches_quantum_gradient", worst <= 1e-4, worst, 1e-4});
    }
    {  // analytic Jacobian of m_velocity against finite differences
        double worst = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            const auto orbit = random_orbit(rng, 2, 3, 1.0);
            FlowParams fp{0.1 + 0.4 * rng.uniform(), &orbit};
            const double t = -0.3 + 0.6 * rng.uniform();
            const Vec y = random_vec(rng, orbit.dim(), 1.5);
            const double h = 1e-5 * (1.0 + norm(y));
            const auto jac = velocity_jacobian(y, fp, t);
            const auto ref =
                fd_jacobian([&](const Vec& z) { return m_velocity(z, fp, t); }, y, h);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < jac.size(); ++i) {
                num += (jac[i] - ref[i]) * (jac[i] - ref[i]);
                den += ref[i] * ref[i];
            }
            worst = std::max(worst, std::sqrt(num / den));
        }
        out.push_back({"jacobian_matches_fd", worst <= 1e-5, worst, 1e-5});
    }
    {  // slot derivative of a weight: d_i pi^s = tau^{-1} pi^s x~_i^s
        double worst = 0.0;
        for (int rep = 0; rep < 10; ++rep) {
            const auto orbit = random_orbit(rng, 1, 3, 1.0);
            FlowParams fp{0.2 + 0.3 * rng.uniform(), &orbit};
            const double t = 0.1;
            const double tau = fp.temperature_t(t);
            const Vec y = random_vec(rng, orbit.dim(), 1.2);
            const double h = 1e-6 * (1.0 + norm(y));
            const SoftAssignment sa = soft_weights(y, fp, t);
            for (std::size_t s = 0; s < orbit.size(); ++s) {
                const Vec grad = fd_gradient(
                    [&](const Vec& z) { return soft_weights(z, fp, t).weights[s]; }, y, h);
                Vec pred(y.size());
                for (std::size_t c = 0; c < y.size(); ++c)
                    pred[c] = sa.weights[s] * (orbit.element(s)[c] - sa.soft_mean[c]) / tau;
                worst = std::max(worst, norm(grad - pred) / std::max(1.0, norm(pred)));
            }
        }
        out.push_back({"weight_gradient_identity", worst <= 1e-5, worst, 1e-5});
    }
    {  // centered first moment of the soft assignment vanishes
        double worst = 0.0;
        for (int rep = 0; rep < 25; ++rep) {
            const auto orbit = random_orbit(rng, 2, 3, 1.0);
            FlowParams fp{0.05 + rng.uniform(), &orbit};
            const Vec y = random_vec(rng, orbit.dim(), 2.0);
            const SoftAssignment sa = soft_weights(y, fp, 0.2 * rng.uniform());
            Vec first(y.size(), 0.0);
            for (std::size_t s = 0; s < orbit.size(); ++s) {
                Vec cent = orbit.element(s) - sa.soft_mean;
                axpy(sa.weights[s], cent, first);
            }
            worst = std::max(worst, norm(first) / orbit.radius());
        }
        out.push_back({"soft_moments_centered", worst <= 1e-10, worst, 1e-10});
    }
    {  // covariance vector: bound, small-tie exactness, unit-sphere triple
        double worst_bound = 0.0, worst_small = 0.0;
        for (int rep = 0; rep < 100; ++rep) {
            const auto orbit = random_orbit(rng, 2, 3, 1.0);
            const Vec y = random_vec(rng, orbit.dim(), 1.5);
            const auto diag = closest_diagnostics(y, orbit, 1e-9);
            const double r3 = std::pow(orbit.radius(), 3);
            worst_bound = std::max(worst_bound, norm(diag.a_star) / (2.0 * r3));
            if (diag.n_star <= 2) worst_small = std::max(worst_small, norm(diag.a_star) / r3);
        }
        Vec a{1, 0, 0, 0}, b{0, 1, 0, 0}, c{-1, 0, 0, 0};
        const Vec astar = a_star_of({a, b, c});
        Vec expect{0, 2.0 / 27.0, 0, 0};
        const double tri = norm(astar - expect);
        out.push_back({"covariance_vector_bound", worst_bound <= 1.0, worst_bound, 1.0});
        out.push_back({"covariance_vector_small_ties", worst_small <= 1e-12, worst_small, 1e-12});
        out.push_back({"covariance_vector_triple", tri <= 1e-12, tri, 1e-12});
    }
    {  // energy gap: positive and at most 2 r |y|
        bool all = true;
        double worst = 0.0;
        for (int rep = 0; rep < 100; ++rep) {
            const auto orbit = random_orbit(rng, 2, 3, 1.0);
            Vec y = random_vec(rng, orbit.dim(), 1.5);
            if (norm(y) < 1e-6) y[0] += 0.5;
            const auto diag = closest_diagnostics(y, orbit, 1e-9);
            if (!(diag.gap_c > 0.0)) all = false;
            if (std::isfinite(diag.gap_c))
                worst = std::max(worst, diag.gap_c / (2.0 * orbit.radius() * norm(y)));
        }
        out.push_back({"tie_gap_bounds", all && worst <= 1.0 + 1e-12, worst, 1.0});
    }
    {  // |eps e^{2t} F - A*| within the total-variation envelope
        bool all = true;
        for (int rep = 0; rep < 100; ++rep) {
            const auto orbit = random_orbit(rng, 2, 3, 1.0);
            FlowParams fp{0.02 + 0.3 * rng.uniform(), &orbit};
            const double t = -0.3 + 0.6 * rng.uniform();
            Vec y = random_vec(rng, orbit.dim(), 1.5);
            if (norm(y) < 1e-6) y[0] += 0.5;
            const auto diag = closest_diagnostics(y, orbit, 1e-9);
            const double r = orbit.radius();
            const Vec f = force_field(y, fp, t);
            Vec lhs = f;
            for (double& v : lhs) v *= fp.epsilon * std::exp(2.0 * t);
            const double envelope =
                8.0 * static_cast<double>(factorial(orbit.k())) * r * r * (norm(y) + r) *
                std::exp(-std::exp(-2.0 * t) * diag.gap_c / fp.epsilon);
            if (norm(lhs - diag.a_star) > envelope + 1e-12) all = false;
        }
        out.push_back({"concentration_force_envelope", all, all ? 0.0 : 1.0, 0.0});
    }
    {  // mixture density integrates to one (dk = 2 tensor-grid quadrature)
        const auto source = SourceSet::make(1, 2, {Vec{0.0}, Vec{1.0}});
        const auto orbit = PermutationOrbit::make(source);
        FlowParams fp{0.3, &orbit};
        const double s = 1.3;
        const int n = 400;
        const double lo = -6.0, hi = 7.0, dx = (hi - lo) / (n - 1);
        double mass = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
                const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
                mass += wi * wj * std::exp(log_density_s(Vec{lo + i * dx, lo + j * dx}, fp, s));
            }
        mass *= dx * dx;
        const double err = std::abs(mass - 1.0);
        out.push_back({"mixture_density_mass", err <= 1e-6, err, 1e-6});
    }
    return out;
}

std::vector<CheckResult> suite_dynamics() {
    std::vector<CheckResult> out;
    Rng rng(3003);

    const auto source = SourceSet::make(1, 2, {Vec{0.0}, Vec{1.0}});
    const auto orbit = PermutationOrbit::make(source);

    {  // s-action with kappa = 2s equals t-action after the clock change
        double worst = 0.0;
        FlowParams fp{0.2, &orbit};
        for (int rep = 0; rep < 5; ++rep) {
            const double a0 = rng.uniform(), a1 = rng.uniform(), w = 1.0 + rng.uniform();
            const int n = 3000;
            Trajectory zs;
            zs.clock = Clock::S;
            for (int i = 0; i <= n; ++i) {
                const double s = 1.0 + (std::exp(2.0) - 1.0) * i / n;
                zs.times.push_back(s);
                zs.positions.push_back(Vec{a0 + 0.3 * std::sin(w * s), a1 + 0.2 * std::cos(w * s)});
                zs.velocities.push_back(Vec{0.3 * w * std::cos(w * s), -0.2 * w * std::sin(w * s)});
            }
            const double as = eval_action(zs, ActionVariant::EpsS, fp, KappaSchedule::power());
            const double at = eval_action(reparameterize(zs), ActionVariant::EpsT, fp);
            worst = std::max(worst, std::abs(as - at) / std::max(1e-12, std::abs(at)));
        }
        out.push_back({"clock_change_action_invariance", worst <= 1e-6, worst, 1e-6});
    }
    {  // closed-form check: single source at zero gives cosh/sinh motion
        const auto src1 = SourceSet::make(1, 1, {Vec{0.0}});
        const auto orb1 = PermutationOrbit::make(src1);
        FlowParams fp{0.3, &orb1};
        const double y0 = 0.7, v0 = -0.2, h = 1e-3;
        const auto traj = integrate_eps_mag(Vec{y0}, Vec{v0}, 0.0, 1.0, h, fp);
        double worst = 0.0;
        for (std::size_t j = 0; j < traj.times.size(); ++j) {
            const double t = traj.times[j];
            const double exact = y0 * std::cosh(t) + v0 * std::sinh(t);
            worst = std::max(worst, std::abs(traj.positions[j][0] - exact));
        }
        out.push_back({"single_source_closed_form", worst <= 10.0 * h * h, worst, 10.0 * h * h});
    }
    {  // halving the step divides the endpoint error by about four
        FlowParams fp{0.25, &orbit};
        const Vec y0{0.8, 0.15}, v0{0.1, -0.2};
        auto endpoint = [&](double h) {
            return integrate_eps_mag(y0, v0, 0.0, 1.0, h, fp).positions.back();
        };
        const Vec fine = endpoint(1e-4);
        const double e1 = norm(endpoint(8e-3) - fine);
        const double e2 = norm(endpoint(4e-3) - fine);
        const double ratio = e1 / e2;
        out.push_back({"integrator_order_two", ratio > 3.0 && ratio < 5.0, ratio, 4.0});
    }
    {  // a path following the drift has (near) zero action
        FlowParams fp{0.25, &orbit};
        Vec y{0.6, 0.2};
        const int n = 2000;
        const double t0 = 0.0, t1 = 0.8, dt = (t1 - t0) / n;
        Trajectory traj;
        traj.clock = Clock::T;
        for (int i = 0; i <= n; ++i) {
            const double t = t0 + i * dt;
            traj.times.push_back(t);
            traj.positions.push_back(y);
            traj.velocities.push_back(m_velocity(y, fp, t));
            // RK4 step along the drift
            const Vec k1 = m_velocity(y, fp, t);
            Vec y2 = y;
            axpy(0.5 * dt, k1, y2);
            const Vec k2 = m_velocity(y2, fp, t + 0.5 * dt);
            Vec y3 = y;
            axpy(0.5 * dt, k2, y3);
            const Vec k3 = m_velocity(y3, fp, t + 0.5 * dt);
            Vec y4 = y;
            axpy(dt, k3, y4);
            const Vec k4 = m_velocity(y4, fp, t + dt);
            axpy(dt / 6.0, k1, y);
            axpy(dt / 3.0, k2, y);
            axpy(dt / 3.0, k3, y);
            axpy(dt / 6.0, k4, y);
        }
        const double act = eval_action(traj, ActionVariant::EpsT, fp);
        out.push_back({"action_zero_on_drift_path", act <= 1e-10, act, 1e-10});
    }
    {  // crossing the bisector dissipates the force modulus
        const auto traj =
            integrate_mag_limit(Vec{0.85, 0.35}, Vec{-0.25, 0.25}, 0.0, 1.2, 1e-3, orbit, 1e-9);
        bool ok = !traj.events.empty();
        double worst = 0.0;
        for (const ShockEvent& ev : traj.events) {
            worst = std::max(worst, ev.post_force - ev.pre_force);
            if (ev.post_force > ev.pre_force + 1e-8) ok = false;
        }
        out.push_back({"shock_dissipation", ok, worst, 1e-8});
    }
    return out;
}

std::vector<CheckResult> suite_entropic() {
    std::vector<CheckResult> out;
    const Grid1D grid{-10.0, 10.0, 2048};

    {
        const auto p = GridDensity::gaussian(grid, 0.4, 1.0);
        const auto r = GridDensity::gaussian(grid, -0.3, 1.0);
        const double expect = 0.7 * 0.7 / 8.0;
        const double err = std::abs(fisher_information(p, r) - expect) / expect;
        out.push_back({"fisher_gaussian_value", err <= 1e-5, err, 1e-5});
    }
    {  // Q(q|Leb) = Q(q|m) + Q(m|Leb), order-2 in the grid spacing
        auto resid = [&](int n) {
            const Grid1D g{-10.0, 10.0, n};
            const auto q = GridDensity::gaussian(g, 0.5, 1.3);
            const auto m = GridDensity::gaussian(g, -0.2, 2.0);
            const auto q_leb = quantum_potential_leb(q);
            const auto q_m = quantum_potential_grid(q, m);
            const auto m_leb = quantum_potential_leb(m);
            double worst = 0.0;
            for (int i = g.n / 4; i < 3 * g.n / 4; ++i)
                worst = std::max(worst, std::abs(q_leb[i] - q_m[i] - m_leb[i]));
            return worst;
        };
        const double r1 = resid(512), r2 = resid(1024);
        const double order = std::log2(r1 / r2);
        out.push_back({"quantum_decomposition_order", order >= 1.8, order, 1.8});
    }
    {  // eps^2 Q(m|Leb) residual against the log-density form, order 2
        auto resid = [&](int n) {
            const Grid1D g{-3.0, 3.0, n};
            std::vector<double> U(g.n);
            for (int i = 0; i < g.n; ++i) U[i] = std::cos(g.x(i));
            return potential_identity_residual(g, U, 0.7);
        };
        const double r1 = resid(512), r2 = resid(1024);
        const double order = std::log2(r1 / r2);
        out.push_back({"log_density_potential_order", order >= 1.8, order, 1.8});
    }
    {  // int Q(p|m) dp equals the Fisher information
        const auto p = GridDensity::gaussian(grid, 0.5, 1.1);
        const auto m = GridDensity::gaussian(grid, -0.4, 1.9);
        const auto q = quantum_potential_grid(p, m);
        std::vector<double> f(grid.n);
        for (int i = 0; i < grid.n; ++i) f[i] = q[i] * p.values[i];
        const double avg = trapezoid(grid, f);
        const double fi = fisher_information(p, m);
        const double err = std::abs(avg - fi) / std::max(1e-12, fi);
        out.push_back({"fisher_equals_average_potential", err <= 1e-4, err, 1e-4});
    }
    {  // rate functional vanishes on the reference itself
        std::vector<double> times;
        std::vector<GridDensity> slices;
        for (int j = 0; j <= 8; ++j) {
            const double s = 1.0 + 0.1 * j;
            times.push_back(s);
            slices.push_back(GridDensity::gaussian(grid, 0.0, 0.5 + 0.2 * s));
        }
        const auto flow = GridFlow::make(times, slices);
        const double v = rate_J(flow, flow, 0.2);
        out.push_back({"rate_zero_on_reference", v <= 1e-10, v, 1e-10});
    }
    {  // drifted heat flow: the rate equals the Girsanov drift cost
        const double eps = 0.25, tau0 = 0.8, u = 0.35, s0 = 0.0, s1 = 1.0;
        std::vector<double> times;
        std::vector<GridDensity> ps, rs;
        const int nt = 41;
        for (int j = 0; j < nt; ++j) {
            const double s = s0 + (s1 - s0) * j / (nt - 1);
            times.push_back(s);
            rs.push_back(GridDensity::gaussian(grid, 0.0, tau0 + eps * (s - s0)));
            ps.push_back(GridDensity::gaussian(grid, u * (s - s0), tau0 + eps * (s - s0)));
        }
        const auto flow = GridFlow::make(times, ps);
        const auto ref = GridFlow::make(times, rs);
        const double j_grid = rate_J(flow, ref, eps);
        const double j_drift = 0.5 * u * u * (s1 - s0) / eps;
        const double err = std::abs(j_grid - j_drift) / j_drift;
        out.push_back({"rate_matches_drift_form", err <= 1e-4, err, 1e-4});
    }
    return out;
}

std::vector<CheckResult> suite_branching() {
    std::vector<CheckResult> out;
    Rng rng(4004);

    {
        bool all = true;
        for (int d = 1; d <= 6; ++d) {
            const auto e = default_exponents(d);
            if (!(1.0 - e.a + e.b - e.c < 0.0)) all = false;
            if (!(1.0 - 2.0 * e.a + e.b + e.c * d < 0.0)) all = false;
        }
        out.push_back({"exponent_inequalities", all, all ? 0.0 : 1.0, 0.0});
    }
    {  // box selection satisfies the transport bound
        EmpiricalCloud cloud;
        const double R = 3.0;
        const int m = 8;
        for (int i = 0; i < 1000; ++i) cloud.points.push_back(random_vec(rng, 2, R * 0.99));
        const auto sel = pick_newcomers(cloud, 100, R, m);
        EmpiricalCloud picked;
        for (std::size_t idx : sel) picked.points.push_back(cloud.points[idx]);
        const double w = wasserstein_discrete(picked, cloud, 2.0);
        const double bound = 2.0 * std::sqrt(2.0) * R * (1.0 / m + std::pow(2.0 * m, 2.0) / 100.0);
        out.push_back({"newcomer_transport_bound", w <= bound, w / bound, 1.0});
    }
    {  // 1D equal clouds match the sorted-coupling value
        double worst = 0.0;
        for (int rep = 0; rep < 10; ++rep) {
            EmpiricalCloud mu, nu;
            const std::size_t n = 20 + rng.below(20);
            for (std::size_t i = 0; i < n; ++i) {
                mu.points.push_back(random_vec(rng, 1, 2.0));
                nu.points.push_back(random_vec(rng, 1, 2.0));
            }
            std::vector<double> xs, ys;
            for (const Vec& v : mu.points) xs.push_back(v[0]);
            for (const Vec& v : nu.points) ys.push_back(v[0]);
            std::sort(xs.begin(), xs.end());
            std::sort(ys.begin(), ys.end());
            double c = 0.0;
            for (std::size_t i = 0; i < n; ++i) c += (xs[i] - ys[i]) * (xs[i] - ys[i]);
            const double expect = std::sqrt(c / n);
            worst = std::max(worst, std::abs(wasserstein_discrete(mu, nu, 2.0) - expect));
        }
        out.push_back({"wasserstein_sorted_matching", worst <= 1e-10, worst, 1e-10});
    }
    {  // schedule spacing and head counts for kappa = 2s
        const long long N = 1000;
        const auto exps = default_exponents(2);
        const auto plan = branch_schedule(N, 0.5, 0.95, KappaSchedule::power(), exps, 4.0, 1.0);
        const double step = 1.0 / (2.0 * std::pow(static_cast<double>(N), 1.0 - exps.a));
        double worst = 0.0;
        for (std::size_t i = 1; i < plan.schedule.size(); ++i)
            worst = std::max(worst, std::abs(plan.schedule[i] - plan.schedule[i - 1] - step));
        bool counts_ok = true;
        for (std::size_t i = 0; i < plan.schedule.size(); ++i)
            if (plan.counts[i] != static_cast<long long>(std::floor(2.0 * plan.schedule[i] * N)))
                counts_ok = false;
        out.push_back({"schedule_uniform_steps", worst <= 1e-12 && counts_ok, worst, 1e-12});
    }
    {  // a small run keeps every event inside the bound, mass exactly one
        const auto source = SourceSet::make(2, 1, {Vec{0.2, -0.1}});
        const auto orbit = PermutationOrbit::make(source);
        FlowParams fp{0.4, &orbit};
        const auto exps = default_exponents(2);
        const auto plan = branch_schedule(200, 0.4, 0.9, KappaSchedule::power(), exps,
                                          4.0 * std::max(orbit.radius(), 1.0), 1.0);
        const auto run = simulate_branching(plan, fp, 99, 1e-3);
        bool ok = !run.events.empty();
        for (const auto& ev : run.events)
            if (!ev.within_bound) ok = false;
        out.push_back({"branch_events_within_bound", ok, ok ? 0.0 : 1.0, 0.0});
    }
    return out;
}

// ---- experiment runs -------------------------------------------------------

void emit_manifest(const ResolvedConfig& rc, const fs::path& dir, json extra = json()) {
    json manifest;
    manifest["tool"] = kToolVersion;
    manifest["seed"] = rc.seed;
    manifest["config"] = rc.resolved;
    if (!extra.is_null()) manifest["run"] = std::move(extra);
    write_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

void plot_trajectory_file(const fs::path& csv, const fs::path& svg);
void plot_cloud_film(const fs::path& csv, const fs::path& dir);
void plot_error_curves(const fs::path& csv, const fs::path& svg);

int run_trajectory_kind(const ResolvedConfig& rc) {
    const fs::path dir(rc.out_dir);
    fs::create_directories(dir);
    const auto orbit = PermutationOrbit::make(rc.source, rc.k_max);
    FlowParams fp{rc.epsilon, &orbit};

    Vec y0 = rc.y0, v0 = rc.v0;
    if (!rc.has_initial) {
        Rng rng(rc.seed);
        y0 = random_vec(rng, orbit.dim(), std::max(1.0, orbit.radius()));
        v0 = random_vec(rng, orbit.dim(), 0.5);
    }
    require(static_cast<int>(y0.size()) == orbit.dim(), "initial.y0: dimension mismatch");
    require(y0.size() == v0.size(), "initial.v0: dimension mismatch");

    Trajectory traj;
    if (rc.kind == "kmap-dynamics") {
        require(rc.clock == "t", "time.clock: kmap-dynamics runs on the t clock");
        traj = integrate_eps_mag(y0, v0, rc.time0, rc.time1, rc.h, fp);
    } else if (rc.kind == "mag-limit") {
        require(rc.clock == "t", "time.clock: mag-limit runs on the t clock");
        traj = integrate_mag_limit(y0, v0, rc.time0, rc.time1, rc.h, orbit, rc.rel_tol);
    } else {  // surfing-sde
        require(rc.clock == "s", "time.clock: surfing-sde runs on the s clock");
        traj = simulate_surfing_sde(y0, rc.time0, rc.time1, rc.h, fp, rc.eta, rc.kappa, rc.seed);
    }

    if (rc.formats.count("csv")) write_file((dir / "trajectory.csv").string(), trajectory_csv(traj));
    if (rc.formats.count("json") && rc.kind == "mag-limit")
        write_file((dir / "events.jsonl").string(), events_jsonl(traj.events));
    emit_manifest(rc, dir);
    if (rc.formats.count("svg") && rc.formats.count("csv"))
        plot_trajectory_file(dir / "trajectory.csv", dir / "trajectory.svg");
    return 0;
}

int run_heat_paths(const ResolvedConfig& rc) {
    const fs::path dir(rc.out_dir);
    fs::create_directories(dir);
    require(rc.clock == "s", "time.clock: heat-paths runs on the s clock");
    const auto orbit = PermutationOrbit::make(rc.source, rc.k_max);
    FlowParams fp{rc.epsilon, &orbit};

    const int n_steps = std::max(1, static_cast<int>(std::llround((rc.time1 - rc.time0) / rc.h)));
    std::vector<double> grid;
    for (int i = 0; i <= n_steps; ++i)
        grid.push_back(rc.time0 + (rc.time1 - rc.time0) * i / n_steps);

    std::vector<Trajectory> trajs(rc.paths);
    parallel_for(static_cast<std::size_t>(rc.paths), [&](std::size_t i) {
        trajs[i] = simulate_heat_path(rc.seed + 1000003ull * i, grid, fp);
    });
    if (rc.formats.count("csv")) {
        for (int i = 0; i < rc.paths; ++i) {
            char name[48];
            std::snprintf(name, sizeof(name), "trajectory_%03d.csv", i);
            write_file((dir / name).string(), trajectory_csv(trajs[i]));
        }
    }
    emit_manifest(rc, dir);
    if (rc.formats.count("svg") && rc.formats.count("csv"))
        plot_trajectory_file(dir / "trajectory_000.csv", dir / "trajectory.svg");
    return 0;
}

int run_branching(const ResolvedConfig& rc) {
    const fs::path dir(rc.out_dir);
    fs::create_directories(dir);
    require(rc.clock == "s", "time.clock: branching runs on the s clock");
    const auto orbit = PermutationOrbit::make(rc.source, rc.k_max);
    FlowParams fp{rc.epsilon, &orbit};
    const double r0 = rc.branch_r0 > 0.0 ? rc.branch_r0 : 4.0 * std::max(1.0, orbit.radius());
    const auto exps = default_exponents(orbit.dim());
    const auto variant = rc.branch_variant == "general" ? ScheduleVariant::General
                                                        : ScheduleVariant::Increasing;
    const auto plan =
        branch_schedule(rc.branch_n, rc.time0, rc.time1, rc.kappa, exps, r0, rc.branch_m0, variant);
    const auto run = simulate_branching(plan, fp, rc.seed, rc.h);

    json extra;
    extra["seed"] = rc.seed;
    extra["N"] = rc.branch_n;
    extra["exponents"] = {exps.a, exps.b, exps.c};
    extra["R0"] = r0;
    extra["m0"] = rc.branch_m0;
    extra["epsilon"] = rc.epsilon;
    extra["kappa"] = kappa_json(rc.kappa);
    extra["horizon"] = {rc.time0, rc.time1};
    emit_manifest(rc, dir, extra);
    if (rc.formats.count("csv")) write_file((dir / "snapshots.csv").string(), cloud_csv(run.snapshots));
    if (rc.formats.count("json"))
        write_file((dir / "events.jsonl").string(), branch_events_jsonl(run.events));
    if (rc.formats.count("svg") && rc.formats.count("csv"))
        plot_cloud_film(dir / "snapshots.csv", dir);

    return 0;
}

json results_json(const std::vector<CheckResult>& results) {
    json arr = json::array();
    for (const auto& r : results)
        arr.push_back({{"name", r.name},
                       {"pass", r.pass},
                       {"measured_error", r.measured},
                       {"tolerance", r.tolerance}});
    return arr;
}

int run_entropic_checks(const ResolvedConfig& rc) {
    const fs::path dir(rc.out_dir);
    fs::create_directories(dir);
    const auto results = suite_entropic();
    emit_manifest(rc, dir);
    if (rc.formats.count("json"))
        write_file((dir / "report.json").string(), results_json(results).dump(2) + "\n");
    if (rc.formats.count("csv")) {
        const auto p = GridDensity::gaussian(rc.grid, 0.4, 1.0);
        write_file((dir / "density.csv").string(), density_csv(p));
    }
    for (const auto& r : results)
        if (!r.pass) throw invariant_error("entropic check failed: " + r.name);
    return 0;
}

int run_identity_suite(const ResolvedConfig& rc) {
    const fs::path dir(rc.out_dir);
    fs::create_directories(dir);
    const auto results = identity_suite("all");
    emit_manifest(rc, dir);
    if (rc.formats.count("json"))
        write_file((dir / "report.json").string(), results_json(results).dump(2) + "\n");

    // zero-temperature sweep: deviation of the soft drift from the
    // projection drift as epsilon shrinks
    if (rc.formats.count("csv")) {
        const auto source = SourceSet::make(1, 2, {Vec{0.0}, Vec{1.0}});
        const auto orbit = PermutationOrbit::make(source);
        const Vec y{0.9, 0.2};
        const Vec limit = y - nearest_permutation(y, orbit).image;
        std::string csv = "epsilon,deviation\n";
        for (double eps = 0.1; eps >= 0.9e-4; eps *= 0.5) {
            FlowParams fp{eps, &orbit};
            const double dev = norm(m_velocity(y, fp, 0.0) - limit);
            if (dev <= 0.0) break;  // weights underflow; log-log data must stay positive
            csv += fmt(eps) + "," + fmt(dev) + "\n";
        }
        write_file((dir / "sweep.csv").string(), csv);
        if (rc.formats.count("svg")) plot_error_curves(dir / "sweep.csv", dir / "error_curves.svg");
    }
    for (const auto& r : results)
        if (!r.pass) throw invariant_error("identity check failed: " + r.name);
    return 0;
}

// ---- plotting ---------------------------------------------------------------

std::vector<std::vector<double>> read_csv_numeric(const fs::path& path,
                                                  std::vector<std::string>* header) {
    const std::string text = read_file(path.string());
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        if (first) {
            while (std::getline(ls, cell, ',')) header->push_back(cell);
            first = false;
            continue;
        }
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) {
            if (cell == "s")
                row.push_back(0.0);
            else if (cell == "t")
                row.push_back(1.0);
            else
                row.push_back(std::strtod(cell.c_str(), nullptr));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void plot_trajectory_file(const fs::path& csv, const fs::path& svg) {
    std::vector<std::string> header;
    const auto rows = read_csv_numeric(csv, &header);
    require(!rows.empty(), "plot: empty trajectory");
    std::size_t pos0 = 0, npos = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "pos_0") pos0 = c;
        if (header[c].rfind("pos_", 0) == 0) ++npos;
    }
    std::vector<double> xs, ys;
    if (npos >= 2) {
        for (const auto& r : rows) {
            xs.push_back(r[pos0]);
            ys.push_back(r[pos0 + 1]);
        }
    } else {
        for (const auto& r : rows) {
            xs.push_back(r[1]);  // time column
            ys.push_back(r[pos0]);
        }
    }
    const auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
    const auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
    SvgCanvas canvas(*xmin, *xmax, *ymin, *ymax);
    canvas.axes();
    canvas.polyline(xs, ys, "#1f77b4");
    write_file(svg.string(), canvas.finish());
}

void plot_cloud_film(const fs::path& csv, const fs::path& dir) {
    std::vector<std::string> header;
    const auto rows = read_csv_numeric(csv, &header);
    require(!rows.empty(), "plot: empty snapshots");
    const std::size_t ncoord = header.size() - 2;
    double lo = 0.0, hi = 1.0;
    bool init = false;
    for (const auto& r : rows)
        for (std::size_t c = 2; c < r.size(); ++c) {
            if (!init) {
                lo = hi = r[c];
                init = true;
            }
            lo = std::min(lo, r[c]);
            hi = std::max(hi, r[c]);
        }
    std::vector<double> times;
    for (const auto& r : rows)
        if (times.empty() || r[0] != times.back()) times.push_back(r[0]);
    int frame = 0;
    for (double t : times) {
        SvgCanvas canvas(lo, hi, lo, hi);
        canvas.axes();
        canvas.text(44.0, 16.0, "s=" + fmt(t));
        for (const auto& r : rows) {
            if (r[0] != t) continue;
            const double x = r[2];
            const double y = ncoord >= 2 ? r[3] : 0.0;
            canvas.circle(x, y, 1.6, "#1f77b4");
        }
        char name[32];
        std::snprintf(name, sizeof(name), "cloud_%03d.svg", frame++);
        write_file((dir / name).string(), canvas.finish());
    }
}

void plot_error_curves(const fs::path& csv, const fs::path& svg) {
    std::vector<std::string> header;
    const auto rows = read_csv_numeric(csv, &header);
    require(rows.size() >= 2, "plot: need at least two sweep points");
    std::vector<double> lx, ly;
    for (const auto& r : rows) {
        require(r[0] > 0.0 && r[1] > 0.0, "plot: log-log needs positive data");
        lx.push_back(std::log10(r[0]));
        ly.push_back(std::log10(r[1]));
    }
    // least-squares slope in log-log coordinates
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(lx.size());
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const auto [xmin, xmax] = std::minmax_element(lx.begin(), lx.end());
    const auto [ymin, ymax] = std::minmax_element(ly.begin(), ly.end());
    SvgCanvas canvas(*xmin, *xmax, *ymin, *ymax);
    canvas.axes();
    canvas.polyline(lx, ly, "#d62728");
    canvas.text(60.0, 40.0, "log-log slope: " + fmt(slope));
    write_file(svg.string(), canvas.finish());
}

}  // namespace

std::vector<CheckResult> identity_suite(const std::string& suite) {
    std::vector<CheckResult> out;
    const bool all = suite == "all" || suite == "identities";
    if (all || suite == "geometry") {
        auto r = suite_geometry();
        out.insert(out.end(), r.begin(), r.end());
    }
    if (all || suite == "fields") {
        auto r = suite_fields();
        out.insert(out.end(), r.begin(), r.end());
    }
    if (all || suite == "dynamics") {
        auto r = suite_dynamics();
        out.insert(out.end(), r.begin(), r.end());
    }
    if (all || suite == "entropic") {
        auto r = suite_entropic();
        out.insert(out.end(), r.begin(), r.end());
    }
    if (all || suite == "branching") {
        auto r = suite_branching();
        out.insert(out.end(), r.begin(), r.end());
    }
    if (out.empty()) throw validation_error("unknown suite: " + suite);
    return out;
}

int run_config(const std::string& config_path, const std::string& out_override) {
    try {
        json cfg;
        try {
            cfg = json::parse(read_file(config_path));
        } catch (const json::exception& e) {
            throw validation_error(std::string("config: ") + e.what());
        }
        const ResolvedConfig rc = parse_config(cfg, out_override);
        if (rc.kind == "heat-paths") return run_heat_paths(rc);
        if (rc.kind == "branching") return run_branching(rc);
        if (rc.kind == "entropic-checks") return run_entropic_checks(rc);
        if (rc.kind == "identity-suite") return run_identity_suite(rc);
        return run_trajectory_kind(rc);
    } catch (const validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const capability_error& e) {
        std::cerr << "capability error: " << e.what() << "\n";
        return 1;
    } catch (const numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const invariant_error& e) {
        std::cerr << "invariant failure: " << e.what() << "\n";
        return 3;
    }
}

int run_check(const std::string& suite) {
    try {
        const auto results = identity_suite(suite);
        bool all_pass = true;
        for (const auto& r : results) {
            std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name
                      << " (measured " << fmt(r.measured) << ", tolerance " << fmt(r.tolerance)
                      << ")\n";
            all_pass = all_pass && r.pass;
        }
        return all_pass ? 0 : 3;
    } catch (const validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    }
}

int run_plot(const std::string& run_dir, const std::string& what) {
    try {
        const fs::path dir(run_dir);
        if (what == "trajectory") {
            fs::path csv = dir / "trajectory.csv";
            if (!fs::exists(csv)) csv = dir / "trajectory_000.csv";
            if (!fs::exists(csv)) throw validation_error("plot: no trajectory csv in " + run_dir);
            plot_trajectory_file(csv, dir / "trajectory.svg");
        } else if (what == "cloud-film") {
            const fs::path csv = dir / "snapshots.csv";
            if (!fs::exists(csv)) throw validation_error("plot: no snapshots.csv in " + run_dir);
            plot_cloud_film(csv, dir);
        } else if (what == "error-curves") {
            const fs::path csv = dir / "sweep.csv";
            if (!fs::exists(csv)) throw validation_error("plot: no sweep.csv in " + run_dir);
            plot_error_curves(csv, dir / "error_curves.svg");
        } else {
            throw validation_error("plot: unknown kind " + what);
        }
        return 0;
    } catch (const validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace magkit
