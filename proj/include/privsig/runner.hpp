#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "privsig/control.hpp"
#include "privsig/sim.hpp"

namespace privsig::runner {

struct BadConfig : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownAxis : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ControllerKind { Actuated, Lp, PrivacyLp, PrivacyTsp };

const char* controller_name(ControllerKind k);
ControllerKind controller_from_name(const std::string& name);
sim::FlowPattern pattern_from_name(const std::string& name);

struct ExperimentConfig {
    ControllerKind controller = ControllerKind::PrivacyLp;
    sim::FlowPattern pattern = sim::FlowPattern::HighBalanced;
    double penetration = 0.5;

    // privacy parameters
    double p_dire = 0.05;
    double q_e = 8.0;
    double phi = 1.0;
    double epsilon_override = 0.0; // > 0 pins the budget directly (testing knob)

    // stochastic program
    int scenario_count = 400;

    // replications and timing
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    double horizon_s = 3900.0;
    double warmup_s = 300.0;
    double eval_window_s = 3600.0;

    // estimator and budget history
    int history_cycles = 10;
    int n_ref_window = 5;
    double n_ref_initial = 40.0;
    double lambda_min = 1e-4;
    double bootstrap_cycle_s = 60.0;
    double actuated_max_gap_s = 3.0;

    // geometry
    double link_length_m = 300.0;
    double zone_radius_m = 500.0;
    double jam_spacing_m = 7.0;
    double free_speed_ms = 50.0 / 3.6;

    ctrl::ControllerConfig signal = ctrl::ControllerConfig::defaults();

    std::string output_dir;
    std::string transcript_log; // append per-round transcripts when set

    void validate() const;
    sim::SimParams sim_params() const;

    std::string to_json() const;
    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig load(const std::string& path);
};

/// One pipeline execution at a barrier crossing.
struct DecisionStep {
    double t = 0.0;
    int n_cvs = 0;
    bool aggregated = false; // false when the round was skipped (N < 2, no budget)
    double epsilon = 0.0;
    double b_eta = 0.0;
    double b_pos = 0.0;
    double b_time_min = 0.0;
    double b_time_max = 0.0;
    int type1 = 0, type2 = 0, type3 = 0;
    Eigen::ArrayXd eta_hat;
    Eigen::ArrayXd lambda_perturbed;
    Eigen::ArrayXd lambda_exact;
    double solve_seconds = 0.0;
    long lp_iterations = 0;
    std::string lp_status;
    bool plan_fallback = false;
};

struct RunResult {
    std::uint64_t seed = 0;
    sim::SimMetrics metrics;
    std::vector<DecisionStep> steps;
};

/// Runs every replication of the configured experiment; writes the run
/// directory (summary.csv, cycles.csv, diagnostics.csv, config echo) when
/// output_dir is set.
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg);

struct SweepAxis {
    std::string name;
    std::vector<double> values;
};

struct SweepCell {
    std::vector<std::pair<std::string, double>> coords;
    double delay_mean = 0.0, delay_std = 0.0;
    double stops_mean = 0.0, stops_std = 0.0;
    double residual_mean = 0.0, residual_std = 0.0;
    double type1_fraction = 0.0; // of classified CVs, averaged over steps
    double solve_seconds_mean = 0.0;
    std::vector<RunResult> runs;
};

/// Cross-product sweep over one or two config axes with shared seeds per
/// cell for paired comparison. Axis names: penetration, p_dire, q_e, phi,
/// scenario_count, pattern (0/1/2), controller (0..3).
std::vector<SweepCell> sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes);

void apply_axis(ExperimentConfig& cfg, const std::string& name, double value);

void write_run_outputs(const ExperimentConfig& cfg, const std::vector<RunResult>& results,
                       const std::string& dir);
void write_sweep_summary(const std::vector<SweepCell>& cells, const std::string& path);

} // namespace privsig::runner
