#pragma once

#include <cstdint>
#include <vector>

#include "magkit/dynamics.hpp"
#include "magkit/entropic.hpp"
#include "magkit/heatflow.hpp"
#include "magkit/vec.hpp"

namespace magkit {

// Uniform-weight particle cloud in R^{dk}; total mass is one by
// construction.
struct EmpiricalCloud {
    std::vector<Vec> points;
    double time = 0.0;

    std::size_t size() const { return points.size(); }
};

struct Exponents {
    double a = 0.0, b = 0.0, c = 0.0;
};

// a = (d+2)/(d+3), b = 1/(3d(d+3)), c = (2d+1)/(2d(d+3)) in the ambient
// dimension d = d_total; both schedule-error exponents are then negative.
Exponents default_exponents(int d_total);

struct BranchPlan {
    long long N = 0;
    double s0 = 0.0, s1 = 0.0;
    std::vector<double> schedule;     // sigma_0 = s0 < sigma_1 < ... <= s1
    std::vector<long long> counts;    // floor(kappa_{sigma_k} N)
    Exponents exponents;
    double R = 0.0;  // box radius, R0 N^b
    int m = 1;       // box subdivisions, max(1, floor(m0 N^c))
    KappaSchedule kappa = KappaSchedule::power();
};

enum class ScheduleVariant { Increasing, General };

// Event times sigma_{k+1} = sigma_k + (kappa' N^{1-a})^{-1}, truncated at
// s1; the general variant uses |kappa'| and adds N^{-1} so steps stay
// finite when kappa is flat.
BranchPlan branch_schedule(long long N, double s0, double s1, const KappaSchedule& kappa,
                           const Exponents& exps, double R0, double m0,
                           ScheduleVariant variant = ScheduleVariant::Increasing);

// Almost-deterministic selection of n_prime distinct particles whose
// empirical measure tracks the cloud: per-box quotas floor(mass(B) n'),
// lowest indices first, topped up from the unpicked support. Requires all
// points inside [-R, R]^D.
std::vector<std::size_t> pick_newcomers(const EmpiricalCloud& cloud, std::size_t n_prime,
                                        double R, int m);

// Exact p-Wasserstein distance between uniform clouds, via the
// transportation linear program on the complete bipartite graph with
// rational masses 1/n and 1/n'. Combined sizes above 2000 are refused.
double wasserstein_discrete(const EmpiricalCloud& mu, const EmpiricalCloud& nu, double p);

struct BranchEvent {
    double time = 0.0;
    std::vector<std::size_t> added;    // indices into the post cloud
    std::vector<std::size_t> removed;  // indices into the pre cloud
    double wasserstein_jump = 0.0;     // W_2(pre, post), exact
    double bound_rhs = 0.0;            // D_R (1/m + (2m)^D / n')
    bool within_bound = false;
};

struct BranchRun {
    std::vector<EmpiricalCloud> snapshots;  // s0, each event pre/post, s1
    std::vector<BranchEvent> events;
};

// The branching empirical process: between events every particle follows
// an independent Brownian increment stream stopped at the box boundary;
// at each sigma_k the head count jumps to floor(kappa N) by duplicating
// (or removing) the box-selected particles. Bit-reproducible from the
// seed.
BranchRun simulate_branching(const BranchPlan& plan, const FlowParams& params,
                             std::uint64_t seed, double h);

// kappa-weighted rate functional on 1D grid flows:
// (1/2) kappa_{s0} H(p|r)_{s0} + (1/2) kappa_{s1} H(p|r)_{s1}
//   + eps^{-1} int (1/2)|pdot - rdot|^2_p kappa ds + eps int I kappa ds.
double rate_J_kappa(const GridFlow& flow, const GridFlow& reference, double eps,
                    const KappaSchedule& kappa);

}  // namespace magkit
