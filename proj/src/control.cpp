#include "privsig/control.hpp"

#include <algorithm>
#include <cmath>

namespace privsig::ctrl {

std::array<std::array<int, 4>, 2> ring_orders(PhaseCase c) {
    if (c == PhaseCase::StartWith15) return {{{0, 1, 2, 3}, {4, 5, 6, 7}}};
    return {{{2, 3, 0, 1}, {6, 7, 4, 5}}};
}

ControllerConfig ControllerConfig::defaults() {
    ControllerConfig cfg;
    const int n = cfg.num_streams;
    cfg.yellow = Eigen::ArrayXd::Constant(n, 3.0);
    cfg.clearance = Eigen::ArrayXd::Zero(n);
    cfg.startup_lost = Eigen::ArrayXd::Constant(n, 2.0);
    cfg.yellow_lost = Eigen::ArrayXd::Constant(n, 1.0);
    // odd streams are single-lane lefts, even streams dual-lane throughs
    cfg.headway = Eigen::ArrayXd::Constant(n, 1.0);
    for (int k = 0; k < n; k += 2) cfg.headway(k) = 2.0;
    cfg.g_min = Eigen::ArrayXd::Constant(n, 10.0);
    cfg.g_max = Eigen::ArrayXd::Constant(n, 60.0);
    return cfg;
}

void ControllerConfig::validate() const {
    if (num_streams != 8) throw InvalidConfig("ControllerConfig: dual-ring layout needs 8 streams");
    const auto check_dim = [&](const Eigen::ArrayXd& a, const char* what) {
        if (a.size() != num_streams) throw InvalidConfig(std::string("ControllerConfig: bad dimension for ") + what);
    };
    check_dim(yellow, "yellow");
    check_dim(clearance, "clearance");
    check_dim(startup_lost, "startup_lost");
    check_dim(yellow_lost, "yellow_lost");
    check_dim(headway, "headway");
    check_dim(g_min, "g_min");
    check_dim(g_max, "g_max");
    if ((yellow < 0).any() || (clearance < 0).any() || (startup_lost < 0).any() || (yellow_lost < 0).any())
        throw InvalidConfig("ControllerConfig: negative time");
    if ((headway <= 0).any()) throw InvalidConfig("ControllerConfig: headway must be positive");
    if ((g_min > g_max).any()) throw InvalidConfig("ControllerConfig: g_min above g_max");
    if (!(c_min <= c_max) || c_min < 0) throw InvalidConfig("ControllerConfig: bad cycle bounds");
    // both rings must reach each barrier simultaneously
    const Eigen::ArrayXd lost = yellow + clearance;
    if (std::fabs(lost(0) + lost(1) - lost(4) - lost(5)) > 1e-9 ||
        std::fabs(lost(2) + lost(3) - lost(6) - lost(7)) > 1e-9)
        throw InvalidConfig("ControllerConfig: ring inter-green totals must match per phase group");
    // plans execute on a 0.1 s grid
    for (int k = 0; k < num_streams; ++k) {
        const double v = lost(k) * 10.0;
        if (std::fabs(v - std::round(v)) > 1e-9)
            throw InvalidConfig("ControllerConfig: yellow + clearance must be a multiple of 0.1 s");
    }
    for (double v : {c_min * 10.0, c_max * 10.0}) {
        if (std::fabs(v - std::round(v)) > 1e-9)
            throw InvalidConfig("ControllerConfig: cycle bounds must be multiples of 0.1 s");
    }
}

bool verify_plan(const SignalTimingPlan& plan, const ControllerConfig& cfg, double tol) {
    const auto orders = ring_orders(plan.phase_case);
    const Eigen::ArrayXd dur = plan.durations();
    const Eigen::ArrayXd lost = cfg.yellow + cfg.clearance;

    for (const auto& order : orders) {
        // anchor and precedence chain
        if (std::fabs(plan.green_start(order[0])) > tol) return false;
        for (int p = 0; p + 1 < 4; ++p) {
            const int u = order[p], v = order[p + 1];
            if (std::fabs(plan.green_end(u) + lost(u) - plan.green_start(v)) > tol) return false;
        }
        // ring sum
        double total = 0.0;
        for (int p = 0; p < 4; ++p) total += dur(order[p]) + lost(order[p]);
        if (std::fabs(total - plan.cycle) > tol) return false;
    }
    // barrier
    if (std::fabs(dur(0) + dur(1) - dur(4) - dur(5)) > tol) return false;
    // bounds
    for (int k = 0; k < cfg.num_streams; ++k)
        if (dur(k) < cfg.g_min(k) - tol || dur(k) > cfg.g_max(k) + tol) return false;
    if (plan.cycle < cfg.c_min - tol || plan.cycle > cfg.c_max + tol) return false;
    return true;
}

double first_group_end(const SignalTimingPlan& plan, const ControllerConfig& cfg) {
    const auto orders = ring_orders(plan.phase_case);
    const int last = orders[0][1];
    return plan.green_end(last) + cfg.yellow(last) + cfg.clearance(last);
}

namespace {

constexpr int kVarCycle = 0;
inline int var_gs(int k) { return 1 + k; }
inline int var_ge(int num_streams, int k) { return 1 + num_streams + k; }

// Rows (14)-(20): ring sums, barrier, precedence, anchors, green bounds.
lp::LinearProgram first_stage(const ControllerConfig& cfg, PhaseCase phase_case, int num_q) {
    cfg.validate();
    const int n = cfg.num_streams;
    auto prog = lp::LinearProgram::minimize(1 + 2 * n + num_q);
    prog.lower(kVarCycle) = cfg.c_min;
    prog.upper(kVarCycle) = cfg.c_max;

    const Eigen::ArrayXd lost = cfg.yellow + cfg.clearance;
    const auto orders = ring_orders(phase_case);

    for (const auto& order : orders) {
        double lost_sum = 0.0;
        auto& ring = prog.add_row(lp::Sense::Equal, 0.0);
        for (int p = 0; p < 4; ++p) {
            const int k = order[p];
            ring.coeffs.emplace_back(var_ge(n, k), 1.0);
            ring.coeffs.emplace_back(var_gs(k), -1.0);
            lost_sum += lost(k);
        }
        ring.coeffs.emplace_back(kVarCycle, -1.0);
        ring.rhs = -lost_sum;

        auto& anchor = prog.add_row(lp::Sense::Equal, 0.0);
        anchor.coeffs.emplace_back(var_gs(order[0]), 1.0);

        for (int p = 0; p + 1 < 4; ++p) {
            const int u = order[p], v = order[p + 1];
            auto& prec = prog.add_row(lp::Sense::Equal, -lost(u));
            prec.coeffs.emplace_back(var_ge(n, u), 1.0);
            prec.coeffs.emplace_back(var_gs(v), -1.0);
        }
    }

    auto& barrier = prog.add_row(lp::Sense::Equal, 0.0);
    for (int k : {0, 1}) {
        barrier.coeffs.emplace_back(var_ge(n, k), 1.0);
        barrier.coeffs.emplace_back(var_gs(k), -1.0);
    }
    for (int k : {4, 5}) {
        barrier.coeffs.emplace_back(var_ge(n, k), -1.0);
        barrier.coeffs.emplace_back(var_gs(k), 1.0);
    }

    for (int k = 0; k < n; ++k) {
        auto& lo = prog.add_row(lp::Sense::GreaterEqual, cfg.g_min(k));
        lo.coeffs.emplace_back(var_ge(n, k), 1.0);
        lo.coeffs.emplace_back(var_gs(k), -1.0);
        auto& hi = prog.add_row(lp::Sense::LessEqual, cfg.g_max(k));
        hi.coeffs.emplace_back(var_ge(n, k), 1.0);
        hi.coeffs.emplace_back(var_gs(k), -1.0);
    }
    return prog;
}

// Q >= lambda * (g_s - r0) - (g_e - g_s + y - l_s - l_y) / h as a >= row.
void add_queue_row(lp::LinearProgram& prog, const ControllerConfig& cfg, int k, int q_var, double lambda,
                   double red_start) {
    const double inv_h = 1.0 / cfg.headway(k);
    auto& row = prog.add_row(lp::Sense::GreaterEqual,
                             -lambda * red_start -
                                 (cfg.yellow(k) - cfg.startup_lost(k) - cfg.yellow_lost(k)) * inv_h);
    row.coeffs.emplace_back(q_var, 1.0);
    row.coeffs.emplace_back(var_ge(cfg.num_streams, k), inv_h);
    row.coeffs.emplace_back(var_gs(k), -(lambda + inv_h));
}

} // namespace

lp::LinearProgram build_p1(const agg::AggregateResult& agg, const est::ArrivalEstimate& lambda,
                           const ControllerConfig& cfg, PhaseCase phase_case,
                           const Eigen::ArrayXd& red_start) {
    const int n = cfg.num_streams;
    if (agg.eta_hat.size() != n || lambda.lambda.size() != n || red_start.size() != n)
        throw InvalidConfig("build_p1: per-stream inputs must match the stream count");

    auto prog = first_stage(cfg, phase_case, n);
    const Eigen::ArrayXd eta = agg.eta_hat.max(0.0);
    for (int k = 0; k < n; ++k) {
        const int q_var = 1 + 2 * n + k;
        prog.objective(var_gs(k)) = eta(k);
        prog.objective(q_var) = cfg.c_max;
        add_queue_row(prog, cfg, k, q_var, lambda.lambda(k), red_start(k));
    }
    return prog;
}

ScenarioSet sample_scenarios(const agg::AggregateResult& agg, const dp::Sensitivity& sens,
                             const dp::PrivacyBudget& budget, int m_count, const Eigen::ArrayXd& gamma,
                             const est::EstimatorBounds& bounds, std::mt19937_64& rng) {
    const int n = static_cast<int>(agg.pos_hat.size());
    const Eigen::ArrayXd point_pos = agg.pos_hat.max(0.0);
    const Eigen::ArrayXd point_time = agg.time_hat.max(0.0);

    const auto pos_spec = dp::laplace_scale(sens.delta_pos(), budget.epsilon);
    std::vector<dp::LaplaceSpec> time_specs;
    time_specs.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) time_specs.push_back(dp::laplace_scale(sens.delta_time(k), budget.epsilon));

    const auto in_range = [&](const Eigen::ArrayXd& p, const Eigen::ArrayXd& t) {
        if ((p < 0.0).any() || (t < 0.0).any()) return false;
        const double denom = (gamma * t).sum();
        if (denom <= 0.0) return false;
        const Eigen::ArrayXd lam = gamma * (p.sum() / denom);
        return (lam >= bounds.lambda_min).all() && (lam <= bounds.lambda_max).all();
    };

    ScenarioSet set;
    set.pos.reserve(static_cast<std::size_t>(m_count));
    set.time.reserve(static_cast<std::size_t>(m_count));
    Eigen::ArrayXd p(n), t(n);
    for (int m = 0; m < m_count; ++m) {
        bool accepted = false;
        for (int attempt = 0; attempt < 100 && !accepted; ++attempt) {
            for (int k = 0; k < n; ++k) {
                p(k) = agg.pos_hat(k) + dp::sample_laplace(pos_spec, rng);
                t(k) = agg.time_hat(k) + dp::sample_laplace(time_specs[static_cast<std::size_t>(k)], rng);
            }
            accepted = in_range(p, t);
        }
        if (accepted) {
            set.pos.push_back(p);
            set.time.push_back(t);
        } else {
            set.pos.push_back(point_pos);
            set.time.push_back(point_time);
        }
    }
    return set;
}

lp::LinearProgram build_p2(const ScenarioSet& scenarios, const Eigen::ArrayXd& eta_hat,
                           const Eigen::ArrayXd& gamma, const ControllerConfig& cfg, PhaseCase phase_case,
                           const Eigen::ArrayXd& red_start, const est::EstimatorBounds& bounds) {
    const int n = cfg.num_streams;
    const int m_count = scenarios.count();
    if (m_count < 1) throw InvalidConfig("build_p2: need at least one scenario");
    if (eta_hat.size() != n || gamma.size() != n || red_start.size() != n)
        throw InvalidConfig("build_p2: per-stream inputs must match the stream count");

    auto prog = first_stage(cfg, phase_case, n * m_count);
    const Eigen::ArrayXd eta = eta_hat.max(0.0);
    for (int k = 0; k < n; ++k) prog.objective(var_gs(k)) = eta(k);

    const double q_weight = cfg.c_max / static_cast<double>(m_count);
    for (int m = 0; m < m_count; ++m) {
        const auto est = est::estimate(scenarios.pos[static_cast<std::size_t>(m)],
                                       scenarios.time[static_cast<std::size_t>(m)], gamma, bounds);
        for (int k = 0; k < n; ++k) {
            const int q_var = 1 + 2 * n + m * n + k;
            prog.objective(q_var) = q_weight;
            add_queue_row(prog, cfg, k, q_var, est.lambda(k), red_start(k));
        }
    }
    return prog;
}

namespace {

long to_ds(double seconds) { return std::lround(seconds * 10.0); }

// Splits a pair total so both rounded durations stay within their green
// bounds; the second member absorbs the residue.
void split_pair(long total, double raw_first, long min1, long max1, long min2, long max2, long& d1,
                long& d2) {
    d1 = std::clamp(to_ds(raw_first), min1, max1);
    d2 = total - d1;
    if (d2 < min2) {
        d2 = min2;
        d1 = std::clamp(total - d2, min1, max1);
        d2 = total - d1;
    } else if (d2 > max2) {
        d2 = max2;
        d1 = std::clamp(total - d2, min1, max1);
        d2 = total - d1;
    }
}

} // namespace

SignalTimingPlan extract_plan(const lp::LpSolution& sol, const ControllerConfig& cfg, PhaseCase phase_case) {
    if (sol.status != lp::SolveStatus::Optimal)
        throw NotOptimal(std::string("extract_plan: solver returned ") + lp::status_name(sol.status));
    const int n = cfg.num_streams;

    const auto orders = ring_orders(phase_case);
    const Eigen::ArrayXd lost = cfg.yellow + cfg.clearance;

    // pre-rounding plan straight from the solution
    SignalTimingPlan raw;
    raw.phase_case = phase_case;
    raw.cycle = sol.x(kVarCycle);
    raw.green_start = Eigen::ArrayXd::Zero(n);
    raw.green_end = Eigen::ArrayXd::Zero(n);
    for (int k = 0; k < n; ++k) {
        raw.green_start(k) = sol.x(var_gs(k));
        raw.green_end(k) = sol.x(var_ge(n, k));
    }
    if (!verify_plan(raw, cfg, 1e-6))
        throw NotOptimal("extract_plan: solution violates the plan identities");

    // round to 0.1 s in integer deciseconds; the barrier sum is rounded
    // once and both rings are re-balanced against it, so the identities
    // stay exact on the grid
    const long cycle_ds =
        std::clamp(to_ds(raw.cycle), to_ds(cfg.c_min), to_ds(cfg.c_max));
    std::array<long, 8> dur_ds{};
    const long barrier_raw = to_ds(raw.durations()(orders[0][0]) + raw.durations()(orders[0][1]));

    for (const auto& order : orders) {
        long lost_sum = 0;
        for (int p = 0; p < 4; ++p) lost_sum += to_ds(lost(order[p]));
        const long green_total = cycle_ds - lost_sum;

        const auto bound = [&](int p) {
            return std::pair<long, long>{to_ds(cfg.g_min(order[p])), to_ds(cfg.g_max(order[p]))};
        };
        const auto [min1, max1] = bound(0);
        const auto [min2, max2] = bound(1);
        const auto [min3, max3] = bound(2);
        const auto [min4, max4] = bound(3);

        const long b1 = std::clamp(barrier_raw, std::max(min1 + min2, green_total - max3 - max4),
                                   std::min(max1 + max2, green_total - min3 - min4));
        long d1, d2, d3, d4;
        split_pair(b1, raw.durations()(order[0]), min1, max1, min2, max2, d1, d2);
        split_pair(green_total - b1, raw.durations()(order[2]), min3, max3, min4, max4, d3, d4);
        dur_ds[static_cast<std::size_t>(order[0])] = d1;
        dur_ds[static_cast<std::size_t>(order[1])] = d2;
        dur_ds[static_cast<std::size_t>(order[2])] = d3;
        dur_ds[static_cast<std::size_t>(order[3])] = d4;
    }

    SignalTimingPlan plan;
    plan.phase_case = phase_case;
    plan.cycle = static_cast<double>(cycle_ds) / 10.0;
    plan.green_start = Eigen::ArrayXd::Zero(n);
    plan.green_end = Eigen::ArrayXd::Zero(n);
    for (const auto& order : orders) {
        long t = 0;
        for (int p = 0; p < 4; ++p) {
            const int k = order[p];
            plan.green_start(k) = static_cast<double>(t) / 10.0;
            t += dur_ds[static_cast<std::size_t>(k)];
            plan.green_end(k) = static_cast<double>(t) / 10.0;
            t += to_ds(lost(k));
        }
    }
    if (!verify_plan(plan, cfg, 1e-9))
        throw NotOptimal("extract_plan: rounded plan failed re-verification");
    return plan;
}

SignalTimingPlan uniform_plan(const ControllerConfig& cfg, PhaseCase phase_case, double cycle) {
    cfg.validate();
    const int n = cfg.num_streams;
    const auto orders = ring_orders(phase_case);
    const Eigen::ArrayXd lost = cfg.yellow + cfg.clearance;

    SignalTimingPlan plan;
    plan.phase_case = phase_case;
    plan.cycle = std::round(cycle * 10.0) / 10.0;
    plan.green_start = Eigen::ArrayXd::Zero(n);
    plan.green_end = Eigen::ArrayXd::Zero(n);

    for (const auto& order : orders) {
        long lost_sum = 0;
        for (int p = 0; p < 4; ++p) lost_sum += to_ds(lost(order[p]));
        const long green_total = std::lround(plan.cycle * 10.0) - lost_sum;
        const long base = green_total / 4;
        // positions 1 and 3 absorb the split residue so the barrier and
        // ring sums stay exact
        const long d[4] = {base, green_total / 2 - base, base, green_total - green_total / 2 - base};
        long t = 0;
        for (int p = 0; p < 4; ++p) {
            const int k = order[p];
            plan.green_start(k) = static_cast<double>(t) / 10.0;
            t += d[p];
            plan.green_end(k) = static_cast<double>(t) / 10.0;
            t += to_ds(lost(k));
        }
    }
    if (!verify_plan(plan, cfg))
        throw InvalidConfig("uniform_plan: equal split does not satisfy the plan bounds");
    return plan;
}

} // namespace privsig::ctrl
