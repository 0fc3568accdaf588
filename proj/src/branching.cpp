#include "magkit/branching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace magkit {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Exponents default_exponents(int d_total) {
    require(d_total >= 1, "default_exponents: dimension must be positive");
    const double d = d_total;
    return Exponents{(d + 2.0) / (d + 3.0), 1.0 / (3.0 * d * (d + 3.0)),
                     (2.0 * d + 1.0) / (2.0 * d * (d + 3.0))};
}

BranchPlan branch_schedule(long long N, double s0, double s1, const KappaSchedule& kappa,
                           const Exponents& exps, double R0, double m0,
                           ScheduleVariant variant) {
    require(N >= 1, "branch_schedule: N must be positive");
    require(s1 > s0, "branch_schedule: empty horizon");
    require(exps.a > 0.0 && exps.a < 1.0, "branch_schedule: a must lie in (0,1)");
    require(exps.b > 0.0 && exps.c > 0.0, "branch_schedule: b and c must be positive");
    require(R0 > 0.0 && m0 > 0.0, "branch_schedule: R0 and m0 must be positive");

    BranchPlan plan;
    plan.N = N;
    plan.s0 = s0;
    plan.s1 = s1;
    plan.exponents = exps;
    plan.kappa = kappa;
    plan.R = R0 * std::pow(static_cast<double>(N), exps.b);
    plan.m = std::max(1, static_cast<int>(std::floor(m0 * std::pow(static_cast<double>(N), exps.c))));

    const double n1ma = std::pow(static_cast<double>(N), 1.0 - exps.a);
    double sigma = s0;
    for (;;) {
        require(kappa.value(sigma) > 0.0, "branch_schedule: kappa must be positive on the horizon");
        const long long count = static_cast<long long>(std::floor(kappa.value(sigma) * N));
        require(count >= 1, "branch_schedule: kappa N must be at least one");
        plan.schedule.push_back(sigma);
        plan.counts.push_back(count);

        const double kp = kappa.derivative(sigma);
        double step;
        if (variant == ScheduleVariant::Increasing) {
            require(kp > 0.0, "branch_schedule: increasing variant needs kappa' > 0");
            step = 1.0 / (kp * n1ma);
        } else {
            step = (kp == 0.0 ? 0.0 : 1.0 / (std::abs(kp) * n1ma)) + 1.0 / N;
        }
        if (sigma + step >= s1) break;
        sigma += step;
    }
    // the almost-deterministic selection draws distinct particles, so a
    // newcomer batch can never exceed the standing population
    for (std::size_t i = 1; i < plan.counts.size(); ++i)
        require(std::llabs(plan.counts[i] - plan.counts[i - 1]) <= plan.counts[i - 1],
                "branch_schedule: newcomer batch exceeds the population (raise kappa N or shrink "
                "the horizon)");
    return plan;
}

std::vector<std::size_t> pick_newcomers(const EmpiricalCloud& cloud, std::size_t n_prime,
                                        double R, int m) {
    const std::size_t n = cloud.size();
    require(n >= 1, "pick_newcomers: empty cloud");
    require(n_prime <= n, "pick_newcomers: cannot pick more points than exist");
    require(R > 0.0 && m >= 1, "pick_newcomers: bad box parameters");
    const std::size_t dim = cloud.points.front().size();
    for (const Vec& x : cloud.points)
        for (double c : x)
            require(std::abs(c) <= R, "pick_newcomers: point outside the box (use stopped dynamics)");

    // group particle indices by box; insertion keeps each box sorted
    std::map<std::vector<int>, std::vector<std::size_t>> boxes;
    std::vector<int> key(dim);
    const double scale = static_cast<double>(m) / R;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < dim; ++c) {
            int kc = static_cast<int>(std::floor(cloud.points[i][c] * scale));
            kc = std::clamp(kc, -m, m - 1);
            key[c] = kc;
        }
        boxes[key].push_back(i);
    }

    std::vector<char> picked(n, 0);
    std::vector<std::size_t> sel;
    sel.reserve(n_prime);
    for (const auto& [box_key, members] : boxes) {
        (void)box_key;
        const std::size_t quota = (members.size() * n_prime) / n;  // floor(mass(B) n')
        for (std::size_t q = 0; q < quota; ++q) {
            sel.push_back(members[q]);
            picked[members[q]] = 1;
        }
    }
    // top up from the unpicked support, lowest index first
    for (std::size_t i = 0; i < n && sel.size() < n_prime; ++i) {
        if (!picked[i]) {
            sel.push_back(i);
            picked[i] = 1;
        }
    }
    std::sort(sel.begin(), sel.end());
    return sel;
}

namespace {

struct Support {
    std::vector<Vec> points;
    std::vector<long long> mults;
};

// Collapse coincident positions (branch events duplicate points exactly).
Support collapse(const std::vector<Vec>& pts) {
    std::map<std::vector<double>, long long> acc;
    for (const Vec& p : pts) ++acc[p];
    Support s;
    s.points.reserve(acc.size());
    for (auto& [p, c] : acc) {
        s.points.push_back(p);
        s.mults.push_back(c);
    }
    return s;
}

long long lcm_ll(long long a, long long b) { return a / std::gcd(a, b) * b; }

}  // namespace

double wasserstein_discrete(const EmpiricalCloud& mu, const EmpiricalCloud& nu, double p) {
    require(p >= 1.0, "wasserstein_discrete: order must be >= 1");
    require(mu.size() >= 1 && nu.size() >= 1, "wasserstein_discrete: empty cloud");
    require(mu.points.front().size() == nu.points.front().size(),
            "wasserstein_discrete: dimension mismatch");
    if (mu.size() + nu.size() > 2000)
        throw capability_error("wasserstein_discrete: combined size above 2000");

    const Support a = collapse(mu.points);
    const Support b = collapse(nu.points);
    const int ns = static_cast<int>(a.points.size());
    const int nt = static_cast<int>(b.points.size());

    const long long L = lcm_ll(static_cast<long long>(mu.size()), static_cast<long long>(nu.size()));
    std::vector<long long> supply(ns), demand(nt);
    for (int i = 0; i < ns; ++i) supply[i] = a.mults[i] * (L / static_cast<long long>(mu.size()));
    for (int j = 0; j < nt; ++j) demand[j] = b.mults[j] * (L / static_cast<long long>(nu.size()));

    // cost matrix |x_i - y_j|^p
    std::vector<double> cost(static_cast<std::size_t>(ns) * nt);
    for (int i = 0; i < ns; ++i)
        for (int j = 0; j < nt; ++j)
            cost[static_cast<std::size_t>(i) * nt + j] =
                std::pow(std::sqrt(dist2(a.points[i], b.points[j])), p);

    // successive shortest paths with potentials on the bipartite graph;
    // each augmentation saturates a source or a sink, so there are at most
    // ns + nt of them
    std::vector<double> pot_s(ns, 0.0), pot_t(nt, 0.0);
    std::vector<long long> flow(static_cast<std::size_t>(ns) * nt, 0);
    long long remaining = L;
    double total_cost = 0.0;

    std::vector<double> dist_s(ns), dist_t(nt);
    std::vector<int> par_t(nt), par_s(ns);
    std::vector<char> done_s(ns), done_t(nt);

    while (remaining > 0) {
        dist_s.assign(ns, kInf);
        dist_t.assign(nt, kInf);
        par_t.assign(nt, -1);  // source feeding each sink
        par_s.assign(ns, -1);  // -1: root with free supply; else the sink behind it
        done_s.assign(ns, 0);
        done_t.assign(nt, 0);
        for (int i = 0; i < ns; ++i)
            if (supply[i] > 0) dist_s[i] = 0.0;

        int sink_reached = -1;
        for (;;) {
            double best = kInf;
            int bi = -1;
            bool is_sink = false;
            for (int i = 0; i < ns; ++i)
                if (!done_s[i] && dist_s[i] < best) {
                    best = dist_s[i];
                    bi = i;
                    is_sink = false;
                }
            for (int j = 0; j < nt; ++j)
                if (!done_t[j] && dist_t[j] < best) {
                    best = dist_t[j];
                    bi = j;
                    is_sink = true;
                }
            if (bi < 0) break;
            if (is_sink) {
                done_t[bi] = 1;
                if (demand[bi] > 0) {
                    sink_reached = bi;
                    break;
                }
                // residual arcs sink -> source exist where flow is positive
                for (int i = 0; i < ns; ++i) {
                    if (done_s[i] || flow[static_cast<std::size_t>(i) * nt + bi] <= 0) continue;
                    const double rc =
                        -cost[static_cast<std::size_t>(i) * nt + bi] + pot_t[bi] - pot_s[i];
                    const double nd = dist_t[bi] + rc;
                    if (nd < dist_s[i]) {
                        dist_s[i] = nd;
                        par_s[i] = bi;
                    }
                }
            } else {
                done_s[bi] = 1;
                for (int j = 0; j < nt; ++j) {
                    if (done_t[j]) continue;
                    const double rc =
                        cost[static_cast<std::size_t>(bi) * nt + j] + pot_s[bi] - pot_t[j];
                    const double nd = dist_s[bi] + rc;
                    if (nd < dist_t[j]) {
                        dist_t[j] = nd;
                        par_t[j] = bi;
                    }
                }
            }
        }
        require(sink_reached >= 0, "wasserstein_discrete: infeasible transportation problem");

        // every node shifts by its exact distance, capped at the target's;
        // unlabeled nodes take the cap too, or arcs leaving them could drop
        // to negative reduced cost
        const double dstar = dist_t[sink_reached];
        for (int i = 0; i < ns; ++i) pot_s[i] += std::min(dist_s[i], dstar);
        for (int j = 0; j < nt; ++j) pot_t[j] += std::min(dist_t[j], dstar);

        // bottleneck along sink <- source <- sink <- ... <- root
        long long push = demand[sink_reached];
        for (int j = sink_reached;;) {
            const int i = par_t[j];
            if (par_s[i] < 0) {
                push = std::min(push, supply[i]);
                break;
            }
            push = std::min(push, flow[static_cast<std::size_t>(i) * nt + par_s[i]]);
            j = par_s[i];
        }
        demand[sink_reached] -= push;
        for (int j = sink_reached;;) {
            const int i = par_t[j];
            flow[static_cast<std::size_t>(i) * nt + j] += push;
            total_cost += push * cost[static_cast<std::size_t>(i) * nt + j];
            if (par_s[i] < 0) {
                supply[i] -= push;
                break;
            }
            flow[static_cast<std::size_t>(i) * nt + par_s[i]] -= push;
            total_cost -= push * cost[static_cast<std::size_t>(i) * nt + par_s[i]];
            j = par_s[i];
        }
        remaining -= push;
    }
    return std::pow(total_cost / static_cast<double>(L), 1.0 / p);
}

BranchRun simulate_branching(const BranchPlan& plan, const FlowParams& params,
                             std::uint64_t seed, double h) {
    require(params.orbit != nullptr, "simulate_branching: orbit not set");
    require(params.epsilon > 0.0, "simulate_branching: epsilon must be positive");
    require(h > 0.0, "simulate_branching: substep must be positive");
    require(!plan.schedule.empty(), "simulate_branching: empty plan");

    const PermutationOrbit& orbit = *params.orbit;
    const int k = orbit.k();
    const std::size_t dim = static_cast<std::size_t>(orbit.dim());
    const double R = plan.R;
    const Rng master(seed);
    std::uint64_t next_stream = 0;

    struct Particle {
        Vec x;
        Rng rng;
        bool frozen = false;
    };

    auto fresh_particle = [&](double s_init) {
        Particle p{Vec(dim, 0.0), master.fork(next_stream++), false};
        std::vector<int> sigma(k);
        std::iota(sigma.begin(), sigma.end(), 0);
        for (int i = k - 1; i > 0; --i) {
            const int j = static_cast<int>(p.rng.below(static_cast<std::uint64_t>(i) + 1));
            std::swap(sigma[i], sigma[j]);
        }
        p.x = orbit.image_of(sigma);
        if (s_init > 0.0) {
            const double sd = std::sqrt(params.epsilon * s_init);
            for (double& c : p.x) c += sd * p.rng.normal();
        }
        // box the sample so the selection grid covers every particle
        for (double& c : p.x) c = std::clamp(c, -R, R);
        return p;
    };

    auto propagate = [&](Particle& p, double from, double to) {
        if (p.frozen || to <= from) return;
        const int ns = std::max(1, static_cast<int>(std::ceil((to - from) / h)));
        const double dt = (to - from) / ns;
        const double sd = std::sqrt(params.epsilon * dt);
        for (int s = 0; s < ns && !p.frozen; ++s) {
            bool out = false;
            for (double& c : p.x) {
                c += sd * p.rng.normal();
                if (std::abs(c) > R) out = true;
            }
            if (out) {
                for (double& c : p.x) c = std::clamp(c, -R, R);
                p.frozen = true;
            }
        }
    };

    std::vector<Particle> cloud;
    cloud.reserve(plan.counts.front());
    for (long long i = 0; i < plan.counts.front(); ++i) cloud.push_back(fresh_particle(plan.s0));

    auto snapshot = [&](double time) {
        EmpiricalCloud c;
        c.time = time;
        c.points.reserve(cloud.size());
        for (const Particle& p : cloud) c.points.push_back(p.x);
        return c;
    };

    BranchRun run;
    run.snapshots.push_back(snapshot(plan.s0));

    for (std::size_t ev = 1; ev <= plan.schedule.size(); ++ev) {
        const double seg_end = (ev < plan.schedule.size()) ? plan.schedule[ev] : plan.s1;
        const double seg_start = plan.schedule[ev - 1];
        for (Particle& p : cloud) propagate(p, seg_start, seg_end);
        if (ev == plan.schedule.size()) {
            run.snapshots.push_back(snapshot(plan.s1));
            break;
        }

        const long long target = plan.counts[ev];
        const long long cur = static_cast<long long>(cloud.size());
        const EmpiricalCloud pre = snapshot(seg_end);

        BranchEvent event;
        event.time = seg_end;
        if (target != cur) {
            const std::size_t n_prime = static_cast<std::size_t>(std::llabs(target - cur));
            const auto sel = pick_newcomers(pre, n_prime, R, plan.m);
            if (target > cur) {
                for (std::size_t idx : sel) {
                    Particle child{cloud[idx].x, master.fork(next_stream++), cloud[idx].frozen};
                    event.added.push_back(cloud.size());
                    cloud.push_back(std::move(child));
                }
            } else {
                event.removed = sel;
                for (std::size_t i = sel.size(); i-- > 0;)
                    cloud.erase(cloud.begin() + static_cast<std::ptrdiff_t>(sel[i]));
            }
        }
        const EmpiricalCloud post = snapshot(seg_end);
        const std::size_t n_prime = event.added.size() + event.removed.size();
        if (n_prime > 0) {
            event.wasserstein_jump = wasserstein_discrete(pre, post, 2.0);
            const double d_r = 2.0 * std::sqrt(static_cast<double>(dim)) * R;
            event.bound_rhs = d_r * (1.0 / plan.m + std::pow(2.0 * plan.m, static_cast<double>(dim)) /
                                                        static_cast<double>(n_prime));
            event.within_bound = event.wasserstein_jump <= event.bound_rhs;
            if (!event.within_bound)
                throw invariant_error("simulate_branching: newcomer transport bound violated at s=" +
                                      std::to_string(seg_end));
            run.snapshots.push_back(pre);
            run.snapshots.push_back(post);
            run.events.push_back(std::move(event));
        }
    }
    return run;
}

double rate_J_kappa(const GridFlow& flow, const GridFlow& reference, double eps,
                    const KappaSchedule& kappa) {
    require(eps > 0.0, "rate_J_kappa: eps must be positive");
    require(flow.times.size() == reference.times.size(), "rate_J_kappa: time grids differ");
    require(flow.grid() == reference.grid(), "rate_J_kappa: spatial grids differ");
    for (std::size_t j = 0; j < flow.times.size(); ++j)
        require(flow.times[j] == reference.times[j], "rate_J_kappa: time grids differ");

    const std::size_t nt = flow.times.size();
    const Grid1D& g = flow.grid();
    const auto vp = current_velocity_1d(flow);
    const auto vr = current_velocity_1d(reference);

    std::vector<double> kinetic(nt), fisher(nt);
    for (std::size_t j = 0; j < nt; ++j) {
        const double ks = kappa.value(flow.times[j]);
        require(ks > 0.0, "rate_J_kappa: kappa must be positive on the horizon");
        std::vector<double> f(g.n, 0.0);
        for (int i = 0; i < g.n; ++i) {
            if (vp[j].valid[i] && vr[j].valid[i]) {
                const double dv = vp[j].v[i] - vr[j].v[i];
                f[i] = 0.5 * dv * dv * flow.slices[j].values[i];
            }
        }
        kinetic[j] = trapezoid(g, f) * ks;
        fisher[j] = fisher_information(flow.slices[j], reference.slices[j]) * ks;
    }
    double kin = 0.0, fis = 0.0;
    for (std::size_t j = 0; j + 1 < nt; ++j) {
        const double dt = flow.times[j + 1] - flow.times[j];
        kin += 0.5 * (kinetic[j] + kinetic[j + 1]) * dt;
        fis += 0.5 * (fisher[j] + fisher[j + 1]) * dt;
    }
    const double k0 = kappa.value(flow.times.front());
    const double k1 = kappa.value(flow.times.back());
    return 0.5 * k0 * relative_entropy(flow.slices.front(), reference.slices.front()) +
           0.5 * k1 * relative_entropy(flow.slices.back(), reference.slices.back()) + kin / eps +
           eps * fis;
}

}  // namespace magkit
