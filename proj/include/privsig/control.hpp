#pragma once

#include <Eigen/Dense>
#include <array>
#include <random>
#include <stdexcept>
#include <vector>

#include "privsig/aggregation.hpp"
#include "privsig/arrival.hpp"
#include "privsig/dp.hpp"
#include "privsig/lp.hpp"

namespace privsig::ctrl {

struct InvalidConfig : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotOptimal : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Which phase pair leads the cycle being planned. Re-optimization happens
/// at every barrier, so the two cases alternate.
enum class PhaseCase { StartWith15, StartWith37 };

inline PhaseCase other(PhaseCase c) {
    return c == PhaseCase::StartWith15 ? PhaseCase::StartWith37 : PhaseCase::StartWith15;
}

/// Executed stream order per ring (ring 0 holds streams 1-4, ring 1 holds
/// 5-8; barriers sit after the second position).
std::array<std::array<int, 4>, 2> ring_orders(PhaseCase c);

/// Per-stream signal timing parameters of a dual-ring intersection.
struct ControllerConfig {
    int num_streams = 8;
    Eigen::ArrayXd yellow;        // y_k, s
    Eigen::ArrayXd clearance;     // a_k, s
    Eigen::ArrayXd startup_lost;  // l_k^s, s
    Eigen::ArrayXd yellow_lost;   // l_k^y, s
    Eigen::ArrayXd headway;       // h_k, s/veh (lane-aggregated)
    Eigen::ArrayXd g_min;         // s
    Eigen::ArrayXd g_max;         // s
    double c_min = 40.0;
    double c_max = 120.0;

    static ControllerConfig defaults();
    void validate() const;
};

/// Cycle length plus green windows per stream, relative to the plan start.
struct SignalTimingPlan {
    double cycle = 0.0;
    Eigen::ArrayXd green_start;
    Eigen::ArrayXd green_end;
    PhaseCase phase_case = PhaseCase::StartWith15;

    Eigen::ArrayXd durations() const { return green_end - green_start; }
};

/// Checks the ring-sum, barrier, precedence, anchor and bound identities.
bool verify_plan(const SignalTimingPlan& plan, const ControllerConfig& cfg, double tol = 1e-6);

/// Time from plan start to the end of the first phase group (the barrier
/// crossing at which the controller re-optimizes).
double first_group_end(const SignalTimingPlan& plan, const ControllerConfig& cfg);

/// Deterministic model P1: minimize sum_k eta_k * g_s_k + C_max * Q_k
/// subject to the NEMA ring-barrier constraints and soft queue-clearing
/// rows. Variable layout: [C, g_s(0..K-1), g_e(0..K-1), Q(0..K-1)].
lp::LinearProgram build_p1(const agg::AggregateResult& agg, const est::ArrivalEstimate& lambda,
                           const ControllerConfig& cfg, PhaseCase phase_case,
                           const Eigen::ArrayXd& red_start);

/// Monte Carlo scenarios for the sample-path model: Laplace posteriors
/// centered on the observed aggregates, resampled until nonnegative with
/// in-range arrival rates (at most 100 attempts, then the clamped point
/// values).
struct ScenarioSet {
    std::vector<Eigen::ArrayXd> pos;
    std::vector<Eigen::ArrayXd> time;

    int count() const { return static_cast<int>(pos.size()); }
};

ScenarioSet sample_scenarios(const agg::AggregateResult& agg, const dp::Sensitivity& sens,
                             const dp::PrivacyBudget& budget, int m_count, const Eigen::ArrayXd& gamma,
                             const est::EstimatorBounds& bounds, std::mt19937_64& rng);

/// Sample-path model P2: first-stage rows as in P1, one queue row per
/// (stream, scenario) with lambda from the estimator under the shared
/// gamma, and scenario queues averaged in the objective. Variable layout:
/// [C, g_s, g_e, Q(m=0 streams...), Q(m=1 streams...), ...].
lp::LinearProgram build_p2(const ScenarioSet& scenarios, const Eigen::ArrayXd& eta_hat,
                           const Eigen::ArrayXd& gamma, const ControllerConfig& cfg, PhaseCase phase_case,
                           const Eigen::ArrayXd& red_start, const est::EstimatorBounds& bounds);

/// Reads the timing plan out of an optimal solution, rounds to 0.1 s and
/// re-balances the last phase of each group so the ring-sum and barrier
/// identities hold exactly on the rounded grid.
SignalTimingPlan extract_plan(const lp::LpSolution& sol, const ControllerConfig& cfg, PhaseCase phase_case);

/// Equal-split fallback plan (bootstraps the rolling horizon before any
/// CV data exists).
SignalTimingPlan uniform_plan(const ControllerConfig& cfg, PhaseCase phase_case, double cycle);

} // namespace privsig::ctrl
