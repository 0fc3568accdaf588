#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "magkit/branching.hpp"
#include "oracles.hpp"

using namespace magkit;

TEST_CASE("default exponents: table values and validity inequalities") {
    const auto e3 = default_exponents(3);
    CHECK(e3.a == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    CHECK(e3.b == doctest::Approx(1.0 / 54.0).epsilon(1e-15));
    CHECK(e3.c == doctest::Approx(7.0 / 36.0).epsilon(1e-15));
    const auto e1 = default_exponents(1);
    CHECK(e1.a == doctest::Approx(3.0 / 4.0).epsilon(1e-15));
    CHECK(e1.b == doctest::Approx(1.0 / 12.0).epsilon(1e-15));
    CHECK(e1.c == doctest::Approx(3.0 / 8.0).epsilon(1e-15));
    for (int d = 1; d <= 6; ++d) {
        const auto e = default_exponents(d);
        CHECK(1.0 - e.a + e.b - e.c < 0.0);
        CHECK(1.0 - 2.0 * e.a + e.b + e.c * d < 0.0);
    }
    CHECK_THROWS_AS(default_exponents(0), validation_error);
}

TEST_CASE("branch schedule: uniform steps for the doubling clock") {
    const long long n = 1000;
    const auto exps = default_exponents(2);
    const auto plan = branch_schedule(n, 0.5, 0.95, KappaSchedule::power(), exps, 4.0, 1.0);
    CHECK(plan.schedule.front() == 0.5);
    CHECK(plan.schedule.back() < 0.95);
    const double step = 1.0 / (2.0 * std::pow(static_cast<double>(n), 1.0 - exps.a));
    for (std::size_t i = 1; i < plan.schedule.size(); ++i)
        CHECK(plan.schedule[i] - plan.schedule[i - 1] == doctest::Approx(step).epsilon(1e-12));
    for (std::size_t i = 0; i < plan.schedule.size(); ++i)
        CHECK(plan.counts[i] == static_cast<long long>(std::floor(2.0 * plan.schedule[i] * n)));
    CHECK(plan.R == doctest::Approx(4.0 * std::pow(1000.0, exps.b)));
    CHECK(plan.m == static_cast<int>(std::floor(std::pow(1000.0, exps.c))));
}

TEST_CASE("branch schedule: constant clock in the general variant") {
    const long long n = 500;
    const auto plan = branch_schedule(n, 1.0, 1.02, KappaSchedule::constant(0.8),
                                      default_exponents(2), 4.0, 1.0, ScheduleVariant::General);
    for (std::size_t i = 1; i < plan.schedule.size(); ++i)
        CHECK(plan.schedule[i] - plan.schedule[i - 1] == doctest::Approx(1.0 / n).epsilon(1e-12));
    for (long long c : plan.counts) CHECK(c == 400);
    CHECK_THROWS_AS(branch_schedule(n, 1.0, 1.02, KappaSchedule::constant(0.8),
                                    default_exponents(2), 4.0, 1.0, ScheduleVariant::Increasing),
                    validation_error);
}

TEST_CASE("branch schedule: head-count increments scale like N^a") {
    const auto exps = default_exponents(2);
    auto mean_increment = [&](long long n) {
        const auto plan = branch_schedule(n, 0.5, 1.5, KappaSchedule::power(), exps, 4.0, 1.0);
        double acc = 0.0;
        for (std::size_t i = 1; i < plan.counts.size(); ++i)
            acc += static_cast<double>(plan.counts[i] - plan.counts[i - 1]);
        return acc / static_cast<double>(plan.counts.size() - 1);
    };
    const double slope = std::log(mean_increment(10000) / mean_increment(1000)) / std::log(10.0);
    CHECK(std::abs(slope - exps.a) <= 0.1);
}

TEST_CASE("branch schedule: validation") {
    const auto exps = default_exponents(2);
    CHECK_THROWS_AS(branch_schedule(0, 0.5, 1.0, KappaSchedule::power(), exps, 4.0, 1.0),
                    validation_error);
    CHECK_THROWS_AS(
        branch_schedule(10, 0.5, 1.0, KappaSchedule::power(), Exponents{1.5, 0.1, 0.1}, 4.0, 1.0),
        validation_error);
    // kappa N below one is refused
    CHECK_THROWS_AS(branch_schedule(10, 0.001, 1.0, KappaSchedule::power(), exps, 4.0, 1.0),
                    validation_error);
}

TEST_CASE("pick newcomers: full pick, single box, quotas and determinism") {
    Rng rng(5);
    SUBCASE("picking everything is the identity") {
        EmpiricalCloud cloud;
        for (int i = 0; i < 40; ++i) cloud.points.push_back(oracle::random_vec(rng, 2, 0.9));
        const auto sel = pick_newcomers(cloud, 40, 1.0, 4);
        CHECK(sel.size() == 40);
        for (std::size_t i = 0; i < 40; ++i) CHECK(sel[i] == i);
        EmpiricalCloud same = cloud;
        CHECK(wasserstein_discrete(cloud, same, 2.0) <= 1e-14);
    }
    SUBCASE("one occupied box bounds the jump by its diameter") {
        EmpiricalCloud cloud;
        const double r_box = 2.0;
        const int m = 5;
        for (int i = 0; i < 60; ++i) {
            Vec p = oracle::random_vec(rng, 2, r_box / (2.0 * m));
            p[0] += r_box / (2.0 * m);  // confined to the first positive box
            p[1] += r_box / (2.0 * m);
            cloud.points.push_back(p);
        }
        const auto sel = pick_newcomers(cloud, 12, r_box, m);
        EmpiricalCloud picked;
        for (std::size_t idx : sel) picked.points.push_back(cloud.points[idx]);
        const double w = wasserstein_discrete(picked, cloud, 2.0);
        CHECK(w <= 2.0 * std::sqrt(2.0) * r_box / m);
    }
    SUBCASE("selection is deterministic") {
        EmpiricalCloud cloud;
        for (int i = 0; i < 100; ++i) cloud.points.push_back(oracle::random_vec(rng, 2, 0.9));
        CHECK(pick_newcomers(cloud, 25, 1.0, 4) == pick_newcomers(cloud, 25, 1.0, 4));
    }
    SUBCASE("validation errors") {
        EmpiricalCloud cloud;
        cloud.points.push_back(Vec{2.0, 0.0});
        CHECK_THROWS_AS(pick_newcomers(cloud, 1, 1.0, 4), validation_error);
        cloud.points[0] = Vec{0.5, 0.5};
        CHECK_THROWS_AS(pick_newcomers(cloud, 2, 1.0, 4), validation_error);
    }
}

TEST_CASE("pick newcomers: transport bound on a random cloud") {
    Rng rng(7);
    EmpiricalCloud cloud;
    const double r_box = 3.0;
    const int m = 8;
    for (int i = 0; i < 1000; ++i) cloud.points.push_back(oracle::random_vec(rng, 2, 0.99 * r_box));
    const auto sel = pick_newcomers(cloud, 100, r_box, m);
    CHECK(sel.size() == 100);
    CHECK(std::set<std::size_t>(sel.begin(), sel.end()).size() == 100);
    EmpiricalCloud picked;
    for (std::size_t idx : sel) picked.points.push_back(cloud.points[idx]);
    const double w = wasserstein_discrete(picked, cloud, 2.0);
    const double bound = 2.0 * std::sqrt(2.0) * r_box * (1.0 / m + std::pow(2.0 * m, 2.0) / 100.0);
    CHECK(w <= bound);
}

TEST_CASE("wasserstein: identities, singletons, sorted matching in 1D") {
    Rng rng(9);
    SUBCASE("identical clouds") {
        EmpiricalCloud mu;
        for (int i = 0; i < 30; ++i) mu.points.push_back(oracle::random_vec(rng, 3, 1.0));
        CHECK(wasserstein_discrete(mu, mu, 2.0) == 0.0);
    }
    SUBCASE("two singletons") {
        EmpiricalCloud mu, nu;
        mu.points.push_back(Vec{0.0, 0.0});
        nu.points.push_back(Vec{3.0, 4.0});
        CHECK(wasserstein_discrete(mu, nu, 1.0) == doctest::Approx(5.0).epsilon(1e-14));
        CHECK(wasserstein_discrete(mu, nu, 2.0) == doctest::Approx(5.0).epsilon(1e-14));
    }
    SUBCASE("1D equal clouds match the sorted coupling") {
        for (int rep = 0; rep < 20; ++rep) {
            EmpiricalCloud mu, nu;
            const std::size_t n = 10 + rng.below(40);
            for (std::size_t i = 0; i < n; ++i) {
                mu.points.push_back(oracle::random_vec(rng, 1, 2.0));
                nu.points.push_back(oracle::random_vec(rng, 1, 2.0));
            }
            std::vector<double> xs, ys;
            for (const Vec& v : mu.points) xs.push_back(v[0]);
            for (const Vec& v : nu.points) ys.push_back(v[0]);
            std::sort(xs.begin(), xs.end());
            std::sort(ys.begin(), ys.end());
            double c2 = 0.0, c1 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                c2 += (xs[i] - ys[i]) * (xs[i] - ys[i]);
                c1 += std::abs(xs[i] - ys[i]);
            }
            CHECK(wasserstein_discrete(mu, nu, 2.0) ==
                  doctest::Approx(std::sqrt(c2 / n)).epsilon(1e-12));
            CHECK(wasserstein_discrete(mu, nu, 1.0) == doctest::Approx(c1 / n).epsilon(1e-12));
        }
    }
}

TEST_CASE("wasserstein agrees with brute-force assignment enumeration") {
    Rng rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 2 + rng.below(5);  // up to 6
        EmpiricalCloud mu, nu;
        for (std::size_t i = 0; i < n; ++i) {
            mu.points.push_back(oracle::random_vec(rng, 2, 1.5));
            nu.points.push_back(oracle::random_vec(rng, 2, 1.5));
        }
        for (double p : {1.0, 2.0}) {
            const double got = wasserstein_discrete(mu, nu, p);
            const double want = oracle::brute_wasserstein_p(mu.points, nu.points, p);
            CHECK(got == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("wasserstein: unequal sizes, symmetry, triangle inequality") {
    Rng rng(13);
    SUBCASE("one point against two") {
        EmpiricalCloud mu, nu;
        mu.points.push_back(Vec{0.0});
        nu.points.push_back(Vec{0.0});
        nu.points.push_back(Vec{1.0});
        CHECK(wasserstein_discrete(mu, nu, 2.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-13));
        CHECK(wasserstein_discrete(mu, nu, 1.0) == doctest::Approx(0.5).epsilon(1e-13));
    }
    SUBCASE("symmetry and triangle on random triples") {
        for (int rep = 0; rep < 10; ++rep) {
            EmpiricalCloud a, b, c;
            const std::size_t na = 5 + rng.below(10);
            const std::size_t nb = 5 + rng.below(10);
            const std::size_t nc = 5 + rng.below(10);
            for (std::size_t i = 0; i < na; ++i)
                a.points.push_back(oracle::random_vec(rng, 2, 1.0));
            for (std::size_t i = 0; i < nb; ++i)
                b.points.push_back(oracle::random_vec(rng, 2, 1.0));
            for (std::size_t i = 0; i < nc; ++i)
                c.points.push_back(oracle::random_vec(rng, 2, 1.0));
            const double ab = wasserstein_discrete(a, b, 2.0);
            const double ba = wasserstein_discrete(b, a, 2.0);
            const double bc = wasserstein_discrete(b, c, 2.0);
            const double ac = wasserstein_discrete(a, c, 2.0);
            CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
            CHECK(ac <= ab + bc + 1e-12);
        }
    }
    SUBCASE("capability limit") {
        EmpiricalCloud mu, nu;
        for (int i = 0; i < 1001; ++i) {
            mu.points.push_back(Vec{static_cast<double>(i)});
            nu.points.push_back(Vec{static_cast<double>(i) + 0.5});
        }
        CHECK_THROWS_AS(wasserstein_discrete(mu, nu, 2.0), capability_error);
    }
}

namespace {
PermutationOrbit branch_orbit() {
    return PermutationOrbit::make(SourceSet::make(2, 1, {Vec{0.15, -0.2}}));
}
}  // namespace

TEST_CASE("branching run: counts, bounds, box confinement") {
    const auto orbit = branch_orbit();
    FlowParams fp{0.4, &orbit};
    const auto exps = default_exponents(orbit.dim());
    const auto plan = branch_schedule(400, 0.4, 0.95, KappaSchedule::power(), exps,
                                      4.0 * std::max(1.0, orbit.radius()), 1.0);
    const auto run = simulate_branching(plan, fp, 31, 1e-3);
    REQUIRE(!run.events.empty());
    for (const auto& ev : run.events) {
        CHECK(ev.within_bound);
        CHECK(ev.wasserstein_jump <= ev.bound_rhs);
    }
    // counts follow floor(kappa_sigma N) on each inter-event segment
    for (const auto& snap : run.snapshots) {
        std::size_t seg = 0;
        while (seg + 1 < plan.schedule.size() && plan.schedule[seg + 1] <= snap.time + 1e-12) ++seg;
        const bool at_event = std::abs(snap.time - plan.schedule[seg]) <= 1e-12 && seg > 0;
        const long long expected = plan.counts[seg];
        const long long pre_expected = at_event ? plan.counts[seg - 1] : expected;
        const long long got = static_cast<long long>(snap.size());
        CHECK((got == expected || got == pre_expected));
        for (const Vec& p : snap.points)
            for (double coord : p) CHECK(std::abs(coord) <= plan.R);
    }
}

TEST_CASE("branching run: bit-reproducible from the seed") {
    const auto orbit = branch_orbit();
    FlowParams fp{0.4, &orbit};
    const auto exps = default_exponents(orbit.dim());
    const auto plan = branch_schedule(200, 0.4, 0.8, KappaSchedule::power(), exps,
                                      4.0 * std::max(1.0, orbit.radius()), 1.0);
    const auto run1 = simulate_branching(plan, fp, 123, 1e-3);
    const auto run2 = simulate_branching(plan, fp, 123, 1e-3);
    REQUIRE(run1.snapshots.size() == run2.snapshots.size());
    for (std::size_t i = 0; i < run1.snapshots.size(); ++i)
        CHECK(run1.snapshots[i].points == run2.snapshots[i].points);
    REQUIRE(run1.events.size() == run2.events.size());
    for (std::size_t i = 0; i < run1.events.size(); ++i)
        CHECK(run1.events[i].wasserstein_jump == run2.events[i].wasserstein_jump);
    const auto run3 = simulate_branching(plan, fp, 124, 1e-3);
    CHECK(run1.snapshots.front().points != run3.snapshots.front().points);
}

TEST_CASE("branching run: constant clock produces no events") {
    const auto orbit = branch_orbit();
    FlowParams fp{0.4, &orbit};
    const auto plan =
        branch_schedule(300, 0.5, 0.7, KappaSchedule::constant(0.9), default_exponents(orbit.dim()),
                        4.0, 1.0, ScheduleVariant::General);
    const auto run = simulate_branching(plan, fp, 7, 1e-3);
    CHECK(run.events.empty());
    for (const auto& snap : run.snapshots) CHECK(snap.size() == 270);
}

TEST_CASE("branching run: decreasing clock removes particles and keeps mass") {
    const auto orbit = branch_orbit();
    FlowParams fp{0.4, &orbit};
    const auto kappa = KappaSchedule::table({0.4, 1.0}, {1.0, 0.55});
    const auto plan = branch_schedule(300, 0.4, 0.95, kappa, default_exponents(orbit.dim()), 4.0,
                                      1.0, ScheduleVariant::General);
    const auto run = simulate_branching(plan, fp, 17, 1e-3);
    REQUIRE(!run.events.empty());
    for (const auto& ev : run.events) {
        CHECK(ev.added.empty());
        CHECK(!ev.removed.empty());
        CHECK(ev.within_bound);
    }
    CHECK(run.snapshots.back().size() < run.snapshots.front().size());
    CHECK(run.snapshots.back().size() >= 1);
}

TEST_CASE("kappa-weighted rate functional") {
    const Grid1D g{-10.0, 10.0, 1024};
    SUBCASE("vanishes on the reference and reduces to the flat version") {
        std::vector<double> times;
        std::vector<GridDensity> slices;
        for (int j = 0; j <= 10; ++j) {
            times.push_back(1.0 + 0.04 * j);
            slices.push_back(GridDensity::gaussian(g, 0.0, 0.5 + 0.1 * j));
        }
        const auto flow = GridFlow::make(times, slices);
        CHECK(rate_J_kappa(flow, flow, 0.3, KappaSchedule::power()) <= 1e-10);

        std::vector<GridDensity> ps;
        for (int j = 0; j <= 10; ++j) ps.push_back(GridDensity::gaussian(g, 0.05 * j, 0.5 + 0.1 * j));
        const auto pflow = GridFlow::make(times, ps);
        const double flat = rate_J_kappa(pflow, flow, 0.3, KappaSchedule::constant(1.0));
        CHECK(flat == doctest::Approx(rate_J(pflow, flow, 0.3)).epsilon(1e-12));
    }
    SUBCASE("shifted Gaussian flow against a high-resolution analytic quadrature") {
        const double eps = 0.25, tau0 = 0.8, u = 0.35, s0 = 0.5, s1 = 1.5;
        const int nt = 2001;
        std::vector<double> times;
        std::vector<GridDensity> ps, rs;
        const Grid1D gf{-10.0, 10.0, 2048};
        for (int j = 0; j < nt; ++j) {
            const double s = s0 + (s1 - s0) * j / (nt - 1);
            times.push_back(s);
            rs.push_back(GridDensity::gaussian(gf, 0.0, tau0 + eps * (s - s0)));
            ps.push_back(GridDensity::gaussian(gf, u * (s - s0), tau0 + eps * (s - s0)));
        }
        const double got = rate_J_kappa(GridFlow::make(times, ps), GridFlow::make(times, rs), eps,
                                        KappaSchedule::power());
        // closed forms: velocity gap u (1 - eps D/(2 sig2)), Fisher
        // (u D)^2/(8 sig2^2), endpoint entropy (u D)^2/(2 sig2)
        auto integrand = [&](double s) {
            const double delta = s - s0;
            const double sig2 = tau0 + eps * delta;
            const double dv = u * (1.0 - eps * delta / (2.0 * sig2));
            const double fisher = u * u * delta * delta / (8.0 * sig2 * sig2);
            return (0.5 * dv * dv / eps + eps * fisher) * (2.0 * s);
        };
        const int nq = 40001;
        double want = 0.0;
        for (int j = 0; j + 1 < nq; ++j) {
            const double sa = s0 + (s1 - s0) * j / (nq - 1);
            const double sb = s0 + (s1 - s0) * (j + 1) / (nq - 1);
            want += 0.5 * (integrand(sa) + integrand(sb)) * (sb - sa);
        }
        const double d1 = u * (s1 - s0);
        want += 0.5 * (2.0 * s1) * d1 * d1 / (2.0 * (tau0 + eps * (s1 - s0)));
        CHECK(std::abs(got - want) / want <= 1e-6);
    }
}
