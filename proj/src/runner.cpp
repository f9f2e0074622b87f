#include "privsig/runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "privsig/aggregation.hpp"
#include "privsig/arrival.hpp"
#include "privsig/rng.hpp"

namespace privsig::runner {

using nlohmann::json;

const char* controller_name(ControllerKind k) {
    switch (k) {
    case ControllerKind::Actuated: return "actuated";
    case ControllerKind::Lp: return "lp";
    case ControllerKind::PrivacyLp: return "privacy-lp";
    case ControllerKind::PrivacyTsp: return "privacy-tsp";
    }
    return "?";
}

ControllerKind controller_from_name(const std::string& name) {
    if (name == "actuated") return ControllerKind::Actuated;
    if (name == "lp") return ControllerKind::Lp;
    if (name == "privacy-lp") return ControllerKind::PrivacyLp;
    if (name == "privacy-tsp") return ControllerKind::PrivacyTsp;
    throw BadConfig("unknown controller: " + name);
}

sim::FlowPattern pattern_from_name(const std::string& name) {
    if (name == "high_balanced") return sim::FlowPattern::HighBalanced;
    if (name == "low_balanced") return sim::FlowPattern::LowBalanced;
    if (name == "unbalanced") return sim::FlowPattern::Unbalanced;
    throw BadConfig("unknown flow pattern: " + name);
}

void ExperimentConfig::validate() const {
    if (penetration < 0.0 || penetration > 1.0) throw BadConfig("penetration must lie in [0,1]");
    if (!(p_dire > 0.0) || !(8.0 * p_dire < 1.0)) throw BadConfig("p_dire must lie in (0, 0.125)");
    if (!(q_e > 0.0) || !(phi > 0.0)) throw BadConfig("q_e and phi must be positive");
    if (scenario_count < 1) throw BadConfig("scenario_count must be at least 1");
    if (seeds.empty()) throw BadConfig("at least one seed required");
    for (std::size_t i = 0; i < seeds.size(); ++i)
        for (std::size_t j = i + 1; j < seeds.size(); ++j)
            if (seeds[i] == seeds[j]) throw BadConfig("replication seeds must be distinct");
    if (!(warmup_s < horizon_s)) throw BadConfig("warmup must end before the horizon");
    if (!(eval_window_s > 0.0)) throw BadConfig("eval window must be positive");
    if (history_cycles < 1 || n_ref_window < 1) throw BadConfig("history windows must be positive");
    if (!(lambda_min > 0.0)) throw BadConfig("lambda_min must be positive");
    try {
        signal.validate();
    } catch (const ctrl::InvalidConfig& e) {
        throw BadConfig(e.what());
    }
}

sim::SimParams ExperimentConfig::sim_params() const {
    sim::SimParams p;
    p.link_length_m = link_length_m;
    p.zone_radius_m = zone_radius_m;
    p.jam_spacing_m = jam_spacing_m;
    p.free_speed_ms = free_speed_ms;
    p.horizon = horizon_s;
    p.warmup = warmup_s;
    p.eval_window = eval_window_s;
    return p;
}

namespace {

json signal_to_json(const ctrl::ControllerConfig& s) {
    auto arr = [](const Eigen::ArrayXd& a) {
        std::vector<double> v(a.data(), a.data() + a.size());
        return json(v);
    };
    return json{{"yellow", arr(s.yellow)},
                {"clearance", arr(s.clearance)},
                {"startup_lost", arr(s.startup_lost)},
                {"yellow_lost", arr(s.yellow_lost)},
                {"headway", arr(s.headway)},
                {"g_min", arr(s.g_min)},
                {"g_max", arr(s.g_max)},
                {"c_min", s.c_min},
                {"c_max", s.c_max}};
}

void signal_from_json(const json& j, ctrl::ControllerConfig& s) {
    auto arr = [&](const char* key, Eigen::ArrayXd& out) {
        if (!j.contains(key)) return;
        const auto v = j.at(key).get<std::vector<double>>();
        out = Eigen::Map<const Eigen::ArrayXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    };
    arr("yellow", s.yellow);
    arr("clearance", s.clearance);
    arr("startup_lost", s.startup_lost);
    arr("yellow_lost", s.yellow_lost);
    arr("headway", s.headway);
    arr("g_min", s.g_min);
    arr("g_max", s.g_max);
    if (j.contains("c_min")) s.c_min = j.at("c_min").get<double>();
    if (j.contains("c_max")) s.c_max = j.at("c_max").get<double>();
}

} // namespace

std::string ExperimentConfig::to_json() const {
    json j{{"controller", controller_name(controller)},
           {"pattern", sim::pattern_name(pattern)},
           {"penetration", penetration},
           {"p_dire", p_dire},
           {"q_e", q_e},
           {"phi", phi},
           {"epsilon_override", epsilon_override},
           {"scenario_count", scenario_count},
           {"seeds", seeds},
           {"horizon_s", horizon_s},
           {"warmup_s", warmup_s},
           {"eval_window_s", eval_window_s},
           {"history_cycles", history_cycles},
           {"n_ref_window", n_ref_window},
           {"n_ref_initial", n_ref_initial},
           {"lambda_min", lambda_min},
           {"bootstrap_cycle_s", bootstrap_cycle_s},
           {"actuated_max_gap_s", actuated_max_gap_s},
           {"link_length_m", link_length_m},
           {"zone_radius_m", zone_radius_m},
           {"jam_spacing_m", jam_spacing_m},
           {"free_speed_ms", free_speed_ms},
           {"signal", signal_to_json(signal)},
           {"output_dir", output_dir},
           {"transcript_log", transcript_log}};
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw BadConfig(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        if (j.contains("controller")) cfg.controller = controller_from_name(j.at("controller").get<std::string>());
        if (j.contains("pattern")) cfg.pattern = pattern_from_name(j.at("pattern").get<std::string>());
        auto num = [&](const char* key, auto& out) {
            if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
        };
        num("penetration", cfg.penetration);
        num("p_dire", cfg.p_dire);
        num("q_e", cfg.q_e);
        num("phi", cfg.phi);
        num("epsilon_override", cfg.epsilon_override);
        num("scenario_count", cfg.scenario_count);
        if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        num("horizon_s", cfg.horizon_s);
        num("warmup_s", cfg.warmup_s);
        num("eval_window_s", cfg.eval_window_s);
        num("history_cycles", cfg.history_cycles);
        num("n_ref_window", cfg.n_ref_window);
        num("n_ref_initial", cfg.n_ref_initial);
        num("lambda_min", cfg.lambda_min);
        num("bootstrap_cycle_s", cfg.bootstrap_cycle_s);
        num("actuated_max_gap_s", cfg.actuated_max_gap_s);
        num("link_length_m", cfg.link_length_m);
        num("zone_radius_m", cfg.zone_radius_m);
        num("jam_spacing_m", cfg.jam_spacing_m);
        num("free_speed_ms", cfg.free_speed_ms);
        if (j.contains("signal")) signal_from_json(j.at("signal"), cfg.signal);
        if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
        if (j.contains("transcript_log")) cfg.transcript_log = j.at("transcript_log").get<std::string>();
    } catch (const json::exception& e) {
        throw BadConfig(std::string("config field error: ") + e.what());
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BadConfig("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

namespace {

/// Rolling-horizon CV pipeline: snapshot -> records -> aggregation round ->
/// history update -> arrival estimate -> P1/P2 -> plan.
class CvController : public sim::PlanProvider {
public:
    CvController(const ExperimentConfig& cfg, std::uint64_t seed)
        : cfg_(cfg),
          history_perturbed_(cfg.signal.num_streams, cfg.history_cycles),
          history_exact_(cfg.signal.num_streams, cfg.history_cycles),
          n_ref_(cfg.n_ref_initial, cfg.n_ref_window),
          bounds_(est::EstimatorBounds::from_headways(cfg.signal.headway, cfg.lambda_min)),
          rng_(make_rng(seed, "protocol")),
          last_plan_(ctrl::uniform_plan(cfg.signal, ctrl::PhaseCase::StartWith15, cfg.bootstrap_cycle_s)) {
        last_estimate_.lambda = Eigen::ArrayXd::Constant(cfg.signal.num_streams, cfg.lambda_min);
        last_estimate_.gamma =
            Eigen::ArrayXd::Constant(cfg.signal.num_streams, 1.0 / cfg.signal.num_streams);
        if (!cfg_.transcript_log.empty())
            transcript_out_.open(cfg_.transcript_log, std::ios::app);
    }

    ctrl::SignalTimingPlan next_plan(double t, ctrl::PhaseCase next_case, sim::Simulator& sim) override {
        DecisionStep step;
        step.t = t;

        const auto states = sim.snapshot();
        step.n_cvs = static_cast<int>(states.size());

        const Eigen::ArrayXd red_rel = sim.red_start() - t; // r_s0 in the plan frame
        const dp::Sensitivity sens{cfg_.q_e, cfg_.phi, reference_red(last_plan_)};

        agg::AggregateResult agg_result;
        Eigen::ArrayXd exact_eta = Eigen::ArrayXd::Zero(cfg_.signal.num_streams);
        Eigen::ArrayXd exact_pos = exact_eta, exact_time = exact_eta;
        dp::PrivacyBudget budget{cfg_.p_dire, n_ref_.mean(), 0.0};

        const bool wants_dp = cfg_.controller == ControllerKind::PrivacyLp ||
                              cfg_.controller == ControllerKind::PrivacyTsp;
        bool have_round = false;
        if (step.n_cvs >= 2) {
            try {
                if (wants_dp) {
                    budget.epsilon = cfg_.epsilon_override > 0.0
                                         ? cfg_.epsilon_override
                                         : dp::epsilon_bound(cfg_.p_dire, budget.n_ref);
                } else {
                    budget.epsilon = 1.0; // unused in SmpcOnly mode
                }
                std::vector<agg::PrivateRecord> records;
                records.reserve(states.size());
                for (const auto& s : states) records.push_back(agg::prepare_record(s));
                for (const auto& r : records) {
                    exact_eta += r.eta;
                    exact_pos += r.pos;
                    exact_time += r.time;
                }
                const auto mode = wants_dp ? agg::AggregationMode::SmpcDp : agg::AggregationMode::SmpcOnly;
                auto [result, transcript] =
                    agg::run_round(records, mode, budget, sens, rng_, agg::RoundConfig{codec_, round_id_});
                agg_result = std::move(result);
                if (transcript_out_.is_open()) agg::dump_transcript(transcript, transcript_out_);
                have_round = true;
                ++round_id_;

                step.aggregated = true;
                step.epsilon = wants_dp ? budget.epsilon : 0.0;
                if (wants_dp) {
                    step.b_eta = sens.delta_eta() / budget.epsilon;
                    step.b_pos = sens.delta_pos() / budget.epsilon;
                    step.b_time_min = sens.red_ref.minCoeff() * cfg_.phi / budget.epsilon;
                    step.b_time_max = sens.red_ref.maxCoeff() * cfg_.phi / budget.epsilon;
                }
                const auto report = dp::classify_vast_majority(states, sens);
                step.type1 = report.type1;
                step.type2 = report.type2;
                step.type3 = report.type3;
            } catch (const dp::NonPositiveBudget&) {
                have_round = false;
            }
            n_ref_.observe(static_cast<double>(step.n_cvs));
        }

        if (!have_round) {
            // no usable round: plan with zero queued counts and the last estimate
            agg_result.eta_hat = Eigen::ArrayXd::Zero(cfg_.signal.num_streams);
            agg_result.pos_hat = agg_result.eta_hat;
            agg_result.time_hat = agg_result.eta_hat;
            agg_result.n_observed = step.n_cvs;
        }

        history_perturbed_.push(agg_result.eta_hat);
        history_exact_.push(exact_eta);
        const Eigen::ArrayXd gamma = history_perturbed_.gamma();

        est::ArrivalEstimate estimate;
        if (have_round) {
            estimate = est::estimate(agg_result.pos_hat, agg_result.time_hat, gamma, bounds_);
            last_estimate_ = estimate;
        } else {
            estimate = last_estimate_;
            estimate.gamma = gamma;
        }
        const auto exact_estimate = est::estimate(exact_pos, exact_time, history_exact_.gamma(), bounds_);
        step.eta_hat = agg_result.eta_hat;
        step.lambda_perturbed = estimate.lambda;
        step.lambda_exact = exact_estimate.lambda;

        // build and solve the cycle plan for the group starting now
        ctrl::SignalTimingPlan plan;
        const auto t_solve0 = std::chrono::steady_clock::now();
        try {
            lp::LinearProgram prog;
            if (cfg_.controller == ControllerKind::PrivacyTsp && have_round) {
                const auto scenarios = ctrl::sample_scenarios(agg_result, sens, budget, cfg_.scenario_count,
                                                              gamma, bounds_, rng_);
                prog = ctrl::build_p2(scenarios, agg_result.eta_hat, gamma, cfg_.signal, next_case, red_rel,
                                      bounds_);
            } else {
                prog = ctrl::build_p1(agg_result, estimate, cfg_.signal, next_case, red_rel);
            }
            const auto sol = lp::solve(prog);
            step.lp_status = lp::status_name(sol.status);
            step.lp_iterations = sol.iterations;
            plan = ctrl::extract_plan(sol, cfg_.signal, next_case);
        } catch (const std::exception&) {
            plan = ctrl::uniform_plan(cfg_.signal, next_case, cfg_.bootstrap_cycle_s);
            step.plan_fallback = true;
            if (step.lp_status.empty()) step.lp_status = "fallback";
        }
        step.solve_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_solve0).count();

        last_plan_ = plan;
        steps_.push_back(std::move(step));
        return plan;
    }

    std::vector<DecisionStep> take_steps() { return std::move(steps_); }

private:
    // red duration per stream in the most recently executed plan
    Eigen::ArrayXd reference_red(const ctrl::SignalTimingPlan& plan) const {
        return plan.cycle - plan.durations() - cfg_.signal.yellow - cfg_.signal.clearance;
    }

    ExperimentConfig cfg_;
    field::FixedPointCodec codec_{};
    est::CycleHistory history_perturbed_;
    est::CycleHistory history_exact_;
    dp::ReferenceCountTracker n_ref_;
    est::EstimatorBounds bounds_;
    Rng rng_;
    ctrl::SignalTimingPlan last_plan_;
    est::ArrivalEstimate last_estimate_;
    std::vector<DecisionStep> steps_;
    std::ofstream transcript_out_;
    int round_id_ = 0;
};

RunResult run_one(const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto profile = sim::build_demand(cfg.pattern);
    auto arrivals_rng = make_rng(seed, "arrivals");
    auto vehicles = sim::generate_arrivals(profile, cfg.horizon_s, cfg.penetration, arrivals_rng);
    sim::Simulator simulator(cfg.signal, cfg.sim_params(), std::move(vehicles));

    RunResult result;
    result.seed = seed;
    if (cfg.controller == ControllerKind::Actuated) {
        simulator.run_actuated(cfg.actuated_max_gap_s, cfg.horizon_s);
    } else {
        CvController provider(cfg, seed);
        sim::run_planned(simulator, provider,
                         ctrl::uniform_plan(cfg.signal, ctrl::PhaseCase::StartWith15, cfg.bootstrap_cycle_s));
        result.steps = provider.take_steps();
    }
    result.metrics = simulator.metrics();
    return result;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<RunResult> results;
    results.reserve(cfg.seeds.size());
    for (std::uint64_t seed : cfg.seeds) results.push_back(run_one(cfg, seed));
    if (!cfg.output_dir.empty()) write_run_outputs(cfg, results, cfg.output_dir);
    return results;
}

void apply_axis(ExperimentConfig& cfg, const std::string& name, double value) {
    if (name == "penetration")
        cfg.penetration = value;
    else if (name == "p_dire")
        cfg.p_dire = value;
    else if (name == "q_e")
        cfg.q_e = value;
    else if (name == "phi")
        cfg.phi = value;
    else if (name == "scenario_count")
        cfg.scenario_count = static_cast<int>(value);
    else if (name == "pattern")
        cfg.pattern = static_cast<sim::FlowPattern>(static_cast<int>(value));
    else if (name == "controller")
        cfg.controller = static_cast<ControllerKind>(static_cast<int>(value));
    else
        throw UnknownAxis("unknown sweep axis: " + name);
}

std::vector<SweepCell> sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes) {
    base.validate();
    if (axes.empty() || axes.size() > 2) throw UnknownAxis("sweep supports one or two axes");
    for (const auto& a : axes)
        if (a.values.empty()) throw UnknownAxis("sweep axis without values: " + a.name);

    std::vector<std::vector<std::pair<std::string, double>>> cells_coords;
    if (axes.size() == 1) {
        for (double v : axes[0].values) cells_coords.push_back({{axes[0].name, v}});
    } else {
        for (double v0 : axes[0].values)
            for (double v1 : axes[1].values)
                cells_coords.push_back({{axes[0].name, v0}, {axes[1].name, v1}});
    }

    std::vector<SweepCell> cells;
    for (const auto& coords : cells_coords) {
        ExperimentConfig cfg = base;
        cfg.output_dir.clear();
        for (const auto& [name, value] : coords) apply_axis(cfg, name, value);
        cfg.validate();

        SweepCell cell;
        cell.coords = coords;
        cell.runs = run_experiment(cfg);

        std::vector<double> delays, stops, residuals;
        std::vector<double> type1_fracs, solve_means;
        for (const auto& r : cell.runs) {
            delays.push_back(r.metrics.avg_delay_s);
            stops.push_back(static_cast<double>(r.metrics.stops));
            residuals.push_back(r.metrics.residual_vehicles);
            long t1 = 0, total = 0;
            double solve_sum = 0.0;
            for (const auto& s : r.steps) {
                t1 += s.type1;
                total += s.type1 + s.type2 + s.type3;
                solve_sum += s.solve_seconds;
            }
            if (total > 0) type1_fracs.push_back(static_cast<double>(t1) / static_cast<double>(total));
            if (!r.steps.empty()) solve_means.push_back(solve_sum / static_cast<double>(r.steps.size()));
        }
        cell.delay_mean = mean_of(delays);
        cell.delay_std = sample_std(delays);
        cell.stops_mean = mean_of(stops);
        cell.stops_std = sample_std(stops);
        cell.residual_mean = mean_of(residuals);
        cell.residual_std = sample_std(residuals);
        cell.type1_fraction = mean_of(type1_fracs);
        cell.solve_seconds_mean = mean_of(solve_means);

        if (!base.output_dir.empty()) {
            std::string sub = base.output_dir + "/cell";
            for (const auto& [name, value] : coords) {
                std::ostringstream os;
                os << "_" << name << "=" << value;
                sub += os.str();
            }
            write_run_outputs(cfg, cell.runs, sub);
        }
        cells.push_back(std::move(cell));
    }
    if (!base.output_dir.empty()) {
        std::filesystem::create_directories(base.output_dir);
        write_sweep_summary(cells, base.output_dir + "/sweep_summary.csv");
    }
    return cells;
}

namespace {

void write_csv_array(std::ostream& os, const Eigen::ArrayXd& a) {
    for (int i = 0; i < a.size(); ++i) os << ',' << a(i);
}

} // namespace

void write_run_outputs(const ExperimentConfig& cfg, const std::vector<RunResult>& results,
                       const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    {
        std::ofstream out(dir + "/config.json");
        out << cfg.to_json() << "\n";
    }

    {
        std::ofstream out(dir + "/summary.csv");
        out << "seed,avg_delay_s,stops,residual_vehicles,vehicles_in_window,departed_in_window\n";
        std::vector<double> delays, stops, residuals;
        for (const auto& r : results) {
            out << r.seed << ',' << r.metrics.avg_delay_s << ',' << r.metrics.stops << ','
                << r.metrics.residual_vehicles << ',' << r.metrics.vehicles_in_window << ','
                << r.metrics.departed_in_window << "\n";
            delays.push_back(r.metrics.avg_delay_s);
            stops.push_back(static_cast<double>(r.metrics.stops));
            residuals.push_back(r.metrics.residual_vehicles);
        }
        out << "mean," << mean_of(delays) << ',' << mean_of(stops) << ',' << mean_of(residuals) << ",,\n";
        out << "std," << sample_std(delays) << ',' << sample_std(stops) << ',' << sample_std(residuals)
            << ",,\n";
    }

    const int n = cfg.signal.num_streams;
    {
        std::ofstream out(dir + "/cycles.csv");
        out << "seed,group,t_start,t_end,in_eval_window";
        for (int k = 0; k < n; ++k) out << ",green_" << (k + 1);
        for (int k = 0; k < n; ++k) out << ",residual_" << (k + 1);
        for (int k = 0; k < n; ++k) out << ",lambda_exact_" << (k + 1);
        for (int k = 0; k < n; ++k) out << ",lambda_perturbed_" << (k + 1);
        out << "\n";
        for (const auto& r : results) {
            for (std::size_t g = 0; g < r.metrics.groups.size(); ++g) {
                const auto& rec = r.metrics.groups[g];
                const bool in_window =
                    rec.t_end >= cfg.warmup_s && rec.t_end <= cfg.warmup_s + cfg.eval_window_s;
                out << r.seed << ',' << rec.index << ',' << rec.t_start << ',' << rec.t_end << ','
                    << (in_window ? 1 : 0);
                write_csv_array(out, rec.green);
                write_csv_array(out, rec.residual);
                // the step taken at the barrier opening group g planned it
                if (g >= 1 && g - 1 < r.steps.size()) {
                    write_csv_array(out, r.steps[g - 1].lambda_exact);
                    write_csv_array(out, r.steps[g - 1].lambda_perturbed);
                } else {
                    for (int k = 0; k < 2 * n; ++k) out << ",nan";
                }
                out << "\n";
            }
        }
    }

    {
        std::ofstream out(dir + "/diagnostics.csv");
        out << "seed,t,n_cvs,aggregated,epsilon,b_eta,b_pos,b_time_min,b_time_max,type1,type2,type3,"
               "solve_seconds,lp_status,lp_iterations,plan_fallback\n";
        for (const auto& r : results) {
            for (const auto& s : r.steps) {
                out << r.seed << ',' << s.t << ',' << s.n_cvs << ',' << (s.aggregated ? 1 : 0) << ','
                    << s.epsilon << ',' << s.b_eta << ',' << s.b_pos << ',' << s.b_time_min << ','
                    << s.b_time_max << ',' << s.type1 << ',' << s.type2 << ',' << s.type3 << ','
                    << s.solve_seconds << ',' << s.lp_status << ',' << s.lp_iterations << ','
                    << (s.plan_fallback ? 1 : 0) << "\n";
            }
        }
    }
}

void write_sweep_summary(const std::vector<SweepCell>& cells, const std::string& path) {
    std::ofstream out(path);
    if (cells.empty()) return;
    for (const auto& [name, _] : cells.front().coords) out << name << ',';
    out << "delay_mean,delay_std,stops_mean,stops_std,residual_mean,residual_std,type1_fraction,"
           "solve_seconds_mean\n";
    for (const auto& c : cells) {
        for (const auto& [_, value] : c.coords) out << value << ',';
        out << c.delay_mean << ',' << c.delay_std << ',' << c.stops_mean << ',' << c.stops_std << ','
            << c.residual_mean << ',' << c.residual_std << ',' << c.type1_fraction << ','
            << c.solve_seconds_mean << "\n";
    }
}

} // namespace privsig::runner
