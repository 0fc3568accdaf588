// Acceptance suite: every release criterion, one pass/fail line each.
// Exits nonzero when any criterion fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "magkit/branching.hpp"
#include "magkit/dynamics.hpp"
#include "magkit/entropic.hpp"
#include "magkit/fd.hpp"
#include "magkit/heatflow.hpp"
#include "magkit/io.hpp"
#include "magkit/kmap.hpp"
#include "magkit/rng.hpp"
#include "magkit/runner.hpp"
#include "oracles.hpp"

using namespace magkit;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& what, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, what.c_str(),
                detail.c_str());
    if (!pass) ++g_failures;
}

std::string fmt_err(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "measured %.3g", v);
    return buf;
}

// 1. gradient of the mixture quantum potential reproduces the force split
void criterion_1() {
    Rng rng(101);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const int d = 1 + static_cast<int>(rng.below(3));
        const int k = 2 + static_cast<int>(rng.below(3));
        const auto orbit = oracle::random_orbit(rng, d, k, 1.0);
        FlowParams fp{0.05 + 0.4 * rng.uniform(), &orbit};
        const double t = -0.4 + 0.8 * rng.uniform();
        const Vec y = oracle::random_vec(rng, orbit.dim(), 1.5);
        const double h = 1e-5 * (1.0 + norm(y));
        const Vec grad =
            fd_gradient([&](const Vec& z) { return quantum_potential_mixture(z, fp, t); }, y, h);
        const double c = 4.0 * fp.epsilon * fp.epsilon * std::exp(4.0 * t);
        const Vec rhs = force_field(y, fp, t) - m_velocity(y, fp, t);
        worst = std::max(worst, norm(c * grad - rhs) / std::max(1e-12, norm(rhs)));
    }
    report(1, "force equals the quantum-potential gradient (100 samples, rel 1e-4)", worst <= 1e-4,
           fmt_err(worst));
}

// 2. covariance vector: exact zero on small tie sets, and the sphere triple
void criterion_2() {
    Rng rng(102);
    double worst_small = 0.0;
    int small_ties = 0;
    for (int rep = 0; rep < 300; ++rep) {
        const auto orbit = oracle::random_orbit(rng, 2, 3, 1.0);
        const bool pair = rep % 2 == 0;
        const Vec y = pair ? oracle::tie_query(rng, orbit, 1.4)
                           : oracle::random_vec(rng, orbit.dim(), 1.4);
        const auto diag = closest_diagnostics(y, orbit, 1e-9);
        if (diag.n_star > 2) continue;
        ++small_ties;
        worst_small =
            std::max(worst_small, norm(diag.a_star) / std::pow(orbit.radius(), 3));
    }
    const Vec astar = a_star_of({Vec{1, 0, 0}, Vec{0, 1, 0}, Vec{-1, 0, 0}});
    const double tri_err = norm(astar - Vec{0.0, 2.0 / 27.0, 0.0});
    const bool pass = small_ties > 200 && worst_small <= 1e-12 && tri_err <= 1e-12;
    report(2, "covariance vector exact on small ties and the sphere triple", pass,
           fmt_err(std::max(worst_small, tri_err)));
}

// 3. gap and force bounds with zero violations on 1000 samples
void criterion_3() {
    Rng rng(103);
    int violations = 0;
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const int d = 1 + static_cast<int>(rng.below(3));
        const int k = 2 + static_cast<int>(rng.below(3));
        const auto orbit = oracle::random_orbit(rng, d, k, 1.0);
        Vec y = oracle::random_vec(rng, orbit.dim(), 1.5);
        if (norm(y) < 1e-9) y[0] = 0.3;
        const auto diag = closest_diagnostics(y, orbit, 1e-9);
        const double r = orbit.radius();
        if (!(diag.gap_c > 0.0)) ++violations;
        if (std::isfinite(diag.gap_c) && diag.gap_c > 2.0 * r * norm(y) + 1e-12) ++violations;
        if (norm(diag.a_star) > 2.0 * r * r * r + 1e-12) ++violations;

        FlowParams fp{0.02 + 0.3 * rng.uniform(), &orbit};
        const double t = -0.3 + 0.6 * rng.uniform();
        Vec lhs = force_field(y, fp, t);
        for (double& v : lhs) v *= fp.epsilon * std::exp(2.0 * t);
        const double envelope = 8.0 * static_cast<double>(factorial(k)) * r * r * (norm(y) + r) *
                                std::exp(-std::exp(-2.0 * t) * diag.gap_c / fp.epsilon);
        const double gap = norm(lhs - diag.a_star);
        worst = std::max(worst, gap - envelope);
        if (gap > envelope + 1e-12) ++violations;
    }
    report(3, "gap and concentration-force bounds, 1000 samples, zero violations", violations == 0,
           "violations " + std::to_string(violations) + ", " + fmt_err(worst));
}

// 4. zero-temperature limits: drift deviation and action convergence
void criterion_4() {
    const auto orbit = PermutationOrbit::make(SourceSet::make(1, 2, {Vec{0.0}, Vec{1.3}}));
    const Vec y{1.1, 0.05};
    const double t = 0.0;
    const auto diag = closest_diagnostics(y, orbit, 1e-9);
    bool pass = diag.n_star == 1 && diag.gap_c * std::exp(-2.0 * t) >= 1.0;
    const Vec limit = y - nearest_permutation(y, orbit).image;
    double prev = 1e300, final_dev = 1e300;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
        FlowParams fp{eps, &orbit};
        const double dev = norm(m_velocity(y, fp, t) - limit);
        if (dev > prev + 1e-18) pass = false;
        prev = dev;
        final_dev = dev;
    }
    if (final_dev > 1e-6) pass = false;

    // action of a fixed tie-avoiding path
    Trajectory traj;
    traj.clock = Clock::T;
    const int n = 1500;
    for (int i = 0; i <= n; ++i) {
        const double tt = 0.6 * i / n;
        traj.times.push_back(tt);
        traj.positions.push_back(Vec{1.35 + 0.2 * std::sin(tt), -0.2 + 0.1 * std::cos(tt)});
        traj.velocities.push_back(Vec{0.2 * std::cos(tt), -0.1 * std::sin(tt)});
    }
    const double limit_action = eval_action(traj, ActionVariant::MagLimit, FlowParams{1.0, &orbit});
    double final_gap = 1e300;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
        FlowParams fp{eps, &orbit};
        final_gap = std::abs(eval_action(traj, ActionVariant::EpsT, fp) - limit_action) /
                    limit_action;
    }
    if (final_gap > 1e-3) pass = false;
    report(4, "zero-temperature limits of the drift and the action", pass,
           fmt_err(std::max(final_dev, final_gap)));
}

// 5. analytic velocity Jacobian against finite differences
void criterion_5() {
    Rng rng(105);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const int d = 1 + static_cast<int>(rng.below(3));
        const int k = 2 + static_cast<int>(rng.below(3));
        const auto orbit = oracle::random_orbit(rng, d, k, 1.0);
        FlowParams fp{0.1 + 0.4 * rng.uniform(), &orbit};
        const double t = -0.3 + 0.6 * rng.uniform();
        const Vec y = oracle::random_vec(rng, orbit.dim(), 1.5);
        const double h = 1e-5 * (1.0 + norm(y));
        const auto jac = velocity_jacobian(y, fp, t);
        const auto ref = fd_jacobian([&](const Vec& z) { return m_velocity(z, fp, t); }, y, h);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < jac.size(); ++i) {
            num += (jac[i] - ref[i]) * (jac[i] - ref[i]);
            den += ref[i] * ref[i];
        }
        worst = std::max(worst, std::sqrt(num / den));
    }
    report(5, "velocity Jacobian matches finite differences (100 samples, rel 1e-5)",
           worst <= 1e-5, fmt_err(worst));
}

// 6. s-clock action with kappa = 2s equals the t-clock action
void criterion_6() {
    Rng rng(106);
    const auto orbit = PermutationOrbit::make(SourceSet::make(1, 2, {Vec{0.0}, Vec{1.0}}));
    FlowParams fp{0.2, &orbit};
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
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
        const double a_s = eval_action(zs, ActionVariant::EpsS, fp, KappaSchedule::power());
        const double a_t = eval_action(reparameterize(zs), ActionVariant::EpsT, fp);
        worst = std::max(worst, std::abs(a_s - a_t) / std::max(1e-12, std::abs(a_t)));
    }
    report(6, "clock-change action equivalence (20 paths, rel 1e-6)", worst <= 1e-6,
           fmt_err(worst));
}

// 7. branching: per-event transport bound, exact head counts, shrinking jumps
void criterion_7() {
    const auto orbit = PermutationOrbit::make(SourceSet::make(2, 1, {Vec{0.15, -0.2}}));
    FlowParams fp{0.4, &orbit};
    const auto exps = default_exponents(orbit.dim());
    const double r0 = 4.0 * std::max(1.0, orbit.radius());
    bool pass = true;
    std::string detail;
    {
        const auto plan = branch_schedule(1000, 0.2, 0.5, KappaSchedule::power(), exps, r0, 1.0);
        const auto run = simulate_branching(plan, fp, 701, 1e-3);
        if (run.events.empty()) pass = false;
        for (const auto& ev : run.events)
            if (!ev.within_bound) pass = false;
        // mass is exactly one by uniform construction; counts must track
        // floor(kappa N) on every inter-event segment
        for (const auto& snap : run.snapshots) {
            std::size_t seg = 0;
            while (seg + 1 < plan.schedule.size() && plan.schedule[seg + 1] <= snap.time + 1e-12)
                ++seg;
            const bool at_event = seg > 0 && std::abs(snap.time - plan.schedule[seg]) <= 1e-12;
            const long long got = static_cast<long long>(snap.size());
            if (got != plan.counts[seg] && !(at_event && got == plan.counts[seg - 1])) pass = false;
        }
        detail = "events " + std::to_string(run.events.size());
    }
    {
        std::vector<double> log_n, log_jump;
        for (long long n : {200, 400, 800, 1600}) {
            const auto plan = branch_schedule(n, 0.2, 0.42, KappaSchedule::power(), exps, r0, 1.0);
            const auto run = simulate_branching(plan, fp, 900 + n, 1e-3);
            double cum = 0.0;
            for (const auto& ev : run.events) cum += ev.wasserstein_jump;
            if (run.events.empty() || cum <= 0.0) {
                pass = false;
                continue;
            }
            log_n.push_back(std::log(static_cast<double>(n)));
            log_jump.push_back(std::log(cum));
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < log_n.size(); ++i) {
            sx += log_n[i];
            sy += log_jump[i];
            sxx += log_n[i] * log_n[i];
            sxy += log_n[i] * log_jump[i];
        }
        const double nn = static_cast<double>(log_n.size());
        const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
        if (!(slope < 0.0)) pass = false;
        char buf[64];
        std::snprintf(buf, sizeof(buf), ", jump slope %.3f", slope);
        detail += buf;
    }
    report(7, "branching bounds, exact counts, shrinking cumulative jumps", pass, detail);
}

// 8. schedule exponents satisfy both vanishing inequalities
void criterion_8() {
    bool pass = true;
    for (int d = 1; d <= 6; ++d) {
        const auto e = default_exponents(d);
        if (!(1.0 - e.a + e.b - e.c < 0.0)) pass = false;
        if (!(1.0 - 2.0 * e.a + e.b + e.c * d < 0.0)) pass = false;
    }
    report(8, "newcomer exponents satisfy the vanishing inequalities (d 1..6)", pass, "exact");
}

// 9. entropic identities on the 1D grid
void criterion_9() {
    bool pass = true;
    double worst = 0.0;
    {
        const Grid1D g{-10.0, 10.0, 2048};
        const auto p = GridDensity::gaussian(g, 0.35, 1.0);
        const auto r = GridDensity::gaussian(g, -0.35, 1.0);
        const double expect = 0.7 * 0.7 / 8.0;
        const double err = std::abs(fisher_information(p, r) - expect) / expect;
        worst = std::max(worst, err);
        if (err > 1e-5) pass = false;
    }
    {
        auto resid = [](int n) {
            const Grid1D g{-10.0, 10.0, n};
            const auto q = GridDensity::gaussian(g, 0.5, 1.3);
            const auto m = GridDensity::gaussian(g, -0.2, 2.0);
            const auto q_leb = quantum_potential_leb(q);
            const auto q_m = quantum_potential_grid(q, m);
            const auto m_leb = quantum_potential_leb(m);
            double w = 0.0;
            for (int i = n / 4; i < 3 * n / 4; ++i)
                w = std::max(w, std::abs(q_leb[i] - q_m[i] - m_leb[i]));
            return w;
        };
        if (std::log2(resid(512) / resid(1024)) < 1.8) pass = false;
    }
    {
        auto resid = [](int n) {
            const Grid1D g{-3.0, 3.0, n};
            std::vector<double> u(g.n);
            for (int i = 0; i < g.n; ++i) u[i] = std::cos(g.x(i));
            return potential_identity_residual(g, u, 0.7);
        };
        if (std::log2(resid(512) / resid(1024)) < 1.8) pass = false;
    }
    {
        const Grid1D g{-10.0, 10.0, 2048};
        std::vector<double> times;
        std::vector<GridDensity> slices;
        for (int j = 0; j <= 10; ++j) {
            times.push_back(1.0 + 0.05 * j);
            slices.push_back(GridDensity::gaussian(g, 0.0, 0.4 + 0.1 * j));
        }
        const auto flow = GridFlow::make(times, slices);
        if (rate_J(flow, flow, 0.3) > 1e-10) pass = false;
    }
    {
        const Grid1D g{-10.0, 10.0, 2048};
        const double eps = 0.25, tau0 = 0.8, u = 0.35;
        std::vector<double> times;
        std::vector<GridDensity> ps, rs;
        const int nt = 41;
        for (int j = 0; j < nt; ++j) {
            const double s = static_cast<double>(j) / (nt - 1);
            times.push_back(s);
            rs.push_back(GridDensity::gaussian(g, 0.0, tau0 + eps * s));
            ps.push_back(GridDensity::gaussian(g, u * s, tau0 + eps * s));
        }
        const double got = rate_J(GridFlow::make(times, ps), GridFlow::make(times, rs), eps);
        const double want = 0.5 * u * u / eps;
        const double err = std::abs(got - want) / want;
        worst = std::max(worst, err);
        if (err > 1e-4) pass = false;
    }
    report(9, "entropic identities: Fisher value, order-2 residuals, rate checks", pass,
           fmt_err(worst));
}

// 10. hull geometry: min-norm oracle agreement and hull coincidence
void criterion_10() {
    Rng rng(110);
    double worst_qp = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 2 + rng.below(3);
        const std::size_t dim = 1 + rng.below(4);
        std::vector<Vec> pts;
        for (std::size_t i = 0; i < n; ++i) pts.push_back(oracle::random_vec(rng, dim, 2.0));
        worst_qp = std::max(worst_qp,
                            norm(min_norm_point(pts) - oracle::simplex_grid_min_norm(pts)));
    }
    double worst_hull = 0.0;
    int built = 0;
    for (int rep = 0; rep < 500 && built < 100; ++rep) {
        const auto orbit = oracle::random_orbit(rng, 2, 3, 1.2);
        const Vec y = oracle::tie_query(rng, orbit, 1.5);
        const TieSet tie = projection_set(y, orbit, 1e-9);
        if (tie.members.size() < 2) continue;
        ++built;
        const Vec po = min_norm_point(tie.members);
        std::vector<Vec> shifted;
        for (const Vec& p : tie.members) shifted.push_back(p - y);
        worst_hull = std::max(worst_hull, norm(po - (y + min_norm_point(shifted))));
    }
    const bool pass = worst_qp <= 1e-8 && worst_hull <= 1e-10 && built >= 100;
    report(10, "min-norm point vs simplex-grid oracle and hull coincidence", pass,
           fmt_err(std::max(worst_qp, worst_hull)));
}

// 11. shock dissipation and distance continuity across the bisector
void criterion_11() {
    const auto orbit = PermutationOrbit::make(SourceSet::make(1, 2, {Vec{0.0}, Vec{1.0}}));
    const double h = 1e-3;
    const auto traj = integrate_mag_limit(Vec{0.85, 0.35}, Vec{-0.25, 0.25}, 0.0, 1.2, h, orbit);
    bool pass = !traj.events.empty();
    double worst = 0.0;
    for (const ShockEvent& ev : traj.events) {
        worst = std::max(worst, ev.post_force - ev.pre_force);
        if (ev.post_force > ev.pre_force + 1e-8) pass = false;
    }
    double max_jump = 0.0;
    for (std::size_t j = 1; j < traj.times.size(); ++j) {
        const double a = std::sqrt(nearest_permutation(traj.positions[j - 1], orbit).dist2);
        const double b = std::sqrt(nearest_permutation(traj.positions[j], orbit).dist2);
        max_jump = std::max(max_jump, std::abs(b - a));
    }
    if (max_jump > 5.0 * h) pass = false;
    report(11, "shock dissipates the force modulus; orbit distance stays continuous", pass,
           fmt_err(worst));
}

// 12. byte-identical artifacts for identical config and seed
void criterion_12() {
    const fs::path root = fs::temp_directory_path() / "magkit_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg_path = root / "cfg.json";
    {
        std::ofstream f(cfg_path);
        f << R"({
  "kind": "mag-limit",
  "problem": {"d": 1, "k": 2, "sources": [[0.0], [1.0]]},
  "physics": {"epsilon": 0.1},
  "time": {"clock": "t", "t0": 0.0, "t1": 1.2, "h": 1e-3},
  "initial": {"y0": [0.85, 0.35], "v0": [-0.25, 0.25]},
  "seed": 9,
  "output": {"formats": ["csv", "json", "svg"]}
})";
    }
    // run the identical config twice into the same directory and compare
    // every artifact byte for byte
    const fs::path out = root / "run";
    bool pass = run_config(cfg_path.string(), out.string()) == 0;
    std::vector<std::pair<fs::path, std::string>> first_pass;
    if (pass)
        for (const auto& entry : fs::directory_iterator(out))
            first_pass.emplace_back(entry.path(), read_file(entry.path().string()));
    pass = pass && run_config(cfg_path.string(), out.string()) == 0;
    if (pass) {
        const auto count = static_cast<std::size_t>(
            std::distance(fs::directory_iterator(out), fs::directory_iterator{}));
        if (count != first_pass.size()) pass = false;
        for (const auto& [path, bytes] : first_pass)
            if (!fs::exists(path) || read_file(path.string()) != bytes) pass = false;
    }
    report(12, "identical config and seed give byte-identical artifacts", pass,
           pass ? "exact" : "mismatch");
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all 12 criteria passed\n");
    return 0;
}
