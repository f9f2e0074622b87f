// Command-line front end: run one experiment, sweep a parameter axis, or
// validate a config file. Exit codes: 0 success, 2 config error, 3 runtime
// failure.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "privsig/runner.hpp"

namespace {

using privsig::runner::ExperimentConfig;

struct Overrides {
    std::string config_path;
    std::string controller;
    std::string pattern;
    double penetration = -1.0;
    double p_dire = -1.0;
    double q_e = -1.0;
    double phi = -1.0;
    int scenarios = -1;
    std::vector<std::uint64_t> seeds;
    double horizon = -1.0;
    double warmup = -1.0;
    double eval_window = -1.0;
    std::string output;
    std::string transcript_log;
    bool paper_scale = false;
};

void add_common_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON config file (flags override file values)");
    cmd->add_option("--controller", o.controller, "actuated | lp | privacy-lp | privacy-tsp");
    cmd->add_option("--pattern", o.pattern, "high_balanced | low_balanced | unbalanced");
    cmd->add_option("--penetration", o.penetration, "CV penetration rate in [0,1]");
    cmd->add_option("--p-dire", o.p_dire, "per-direction identification risk");
    cmd->add_option("--q-e", o.q_e, "position sensitivity Q_e (vehicles)");
    cmd->add_option("--phi", o.phi, "arrival-time sensitivity coefficient");
    cmd->add_option("--scenarios", o.scenarios, "scenario count |M| for privacy-tsp");
    cmd->add_option("--seed", o.seeds, "replication seed (repeatable)");
    cmd->add_option("--horizon", o.horizon, "simulation horizon, s");
    cmd->add_option("--warmup", o.warmup, "warmup before the evaluation window, s");
    cmd->add_option("--eval-window", o.eval_window, "evaluation window length, s");
    cmd->add_option("--output", o.output, "run directory for summary/cycles/diagnostics CSVs");
    cmd->add_option("--transcript-log", o.transcript_log, "append aggregation transcripts to this file");
    cmd->add_flag("--paper-scale", o.paper_scale, "10000 s horizon, 1300 s warmup, 7200 s window, 10 seeds");
}

ExperimentConfig resolve(const Overrides& o) {
    ExperimentConfig cfg;
    if (!o.config_path.empty()) cfg = ExperimentConfig::load(o.config_path);
    if (o.paper_scale) {
        cfg.horizon_s = 10000.0;
        cfg.warmup_s = 1300.0;
        cfg.eval_window_s = 7200.0;
        cfg.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    }
    if (!o.controller.empty()) cfg.controller = privsig::runner::controller_from_name(o.controller);
    if (!o.pattern.empty()) cfg.pattern = privsig::runner::pattern_from_name(o.pattern);
    if (o.penetration >= 0.0) cfg.penetration = o.penetration;
    if (o.p_dire >= 0.0) cfg.p_dire = o.p_dire;
    if (o.q_e >= 0.0) cfg.q_e = o.q_e;
    if (o.phi >= 0.0) cfg.phi = o.phi;
    if (o.scenarios >= 0) cfg.scenario_count = o.scenarios;
    if (!o.seeds.empty()) cfg.seeds = o.seeds;
    if (o.horizon >= 0.0) cfg.horizon_s = o.horizon;
    if (o.warmup >= 0.0) cfg.warmup_s = o.warmup;
    if (o.eval_window >= 0.0) cfg.eval_window_s = o.eval_window;
    if (!o.output.empty()) cfg.output_dir = o.output;
    if (!o.transcript_log.empty()) cfg.transcript_log = o.transcript_log;
    cfg.validate();
    return cfg;
}

int do_run(const Overrides& o) {
    const auto cfg = resolve(o);
    const auto results = privsig::runner::run_experiment(cfg);
    for (const auto& r : results) {
        std::cout << "seed " << r.seed << ": delay " << r.metrics.avg_delay_s << " s/veh, stops "
                  << r.metrics.stops << ", residual " << r.metrics.residual_vehicles << "\n";
    }
    if (!cfg.output_dir.empty()) std::cout << "outputs written to " << cfg.output_dir << "\n";
    return 0;
}

int do_sweep(const Overrides& o, const std::vector<std::string>& axes,
             const std::vector<std::string>& value_lists) {
    if (axes.empty() || axes.size() > 2 || axes.size() != value_lists.size())
        throw privsig::runner::BadConfig("sweep needs 1 or 2 --axis options, each with a --values list");
    const auto cfg = resolve(o);
    std::vector<privsig::runner::SweepAxis> sweep_axes;
    for (std::size_t i = 0; i < axes.size(); ++i) {
        privsig::runner::SweepAxis axis;
        axis.name = axes[i];
        std::string token;
        std::stringstream ss(value_lists[i]);
        while (std::getline(ss, token, ',')) axis.values.push_back(std::stod(token));
        sweep_axes.push_back(std::move(axis));
    }
    const auto cells = privsig::runner::sweep(cfg, sweep_axes);
    for (const auto& c : cells) {
        for (const auto& [name, value] : c.coords) std::cout << name << "=" << value << " ";
        std::cout << "-> delay " << c.delay_mean << " +/- " << c.delay_std << " s/veh, residual "
                  << c.residual_mean << ", type1 " << c.type1_fraction << ", solve "
                  << c.solve_seconds_mean << " s\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"privacy-preserving CV signal control testbed"};
    app.require_subcommand(1);

    Overrides run_o, sweep_o, val_o;
    auto* run_cmd = app.add_subcommand("run", "run one experiment");
    add_common_options(run_cmd, run_o);

    auto* sweep_cmd = app.add_subcommand("sweep", "cross-product sweep over config axes");
    add_common_options(sweep_cmd, sweep_o);
    std::vector<std::string> axes, value_lists;
    sweep_cmd->add_option("--axis", axes, "config field to sweep (repeatable, max 2)");
    sweep_cmd->add_option("--values", value_lists, "comma-separated values per axis");

    auto* val_cmd = app.add_subcommand("validate-config", "parse and validate a config file");
    val_cmd->add_option("--config", val_o.config_path, "JSON config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return do_run(run_o);
        if (sweep_cmd->parsed()) return do_sweep(sweep_o, axes, value_lists);
        if (val_cmd->parsed()) {
            const auto cfg = resolve(val_o);
            std::cout << cfg.to_json() << "\n";
            return 0;
        }
    } catch (const privsig::runner::BadConfig& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const privsig::runner::UnknownAxis& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
