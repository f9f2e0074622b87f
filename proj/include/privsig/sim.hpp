#pragma once

#include <Eigen/Dense>
#include <deque>
#include <limits>
#include <queue>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "privsig/control.hpp"
#include "privsig/cv_state.hpp"

namespace privsig::sim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class FlowPattern { HighBalanced, LowBalanced, Unbalanced };

const char* pattern_name(FlowPattern p);

/// Piecewise-constant arrival rate schedule per link plus turning ratios.
struct DemandProfile {
    struct Piece {
        double t_start = 0.0;    // s
        double rate_veh_h = 0.0; // veh/h from t_start onward
    };
    std::array<std::vector<Piece>, 4> link_rates;
    std::array<Eigen::Array3d, 4> turn_ratios; // left, through, right
    FlowPattern pattern = FlowPattern::HighBalanced;
};

/// HighBalanced: four equal links totalling 3000 veh/h. LowBalanced: equal
/// links totalling 2000 veh/h. Unbalanced: 2:1 major/minor totalling
/// 3000 veh/h. Turning ratios fixed at left 0.25 / through 0.65 / right
/// 0.10 on every link.
DemandProfile build_demand(FlowPattern pattern);

/// Stream layout (dual ring, leading lefts):
///   ring A: 0 = left(link0), 1 = through(link1), 2 = left(link2), 3 = through(link3)
///   ring B: 4 = left(link1), 5 = through(link0), 6 = left(link3), 7 = through(link2)
/// Uncontrolled right turns carry stream -1 and pass freely.
int stream_for_turn(int link, int turn);

struct Vehicle {
    int id = 0;
    int link = 0;
    int stream = -1;          // -1 for uncontrolled right turns
    double arrival = 0.0;     // virtual stopline arrival, s
    bool is_cv = false;

    // runtime
    double depart = std::numeric_limits<double>::quiet_NaN();
    bool in_queue = false;
    bool ever_queued = false;
    double queue_join = 0.0;

    bool departed() const { return depart == depart; }
};

/// Thinned Poisson arrivals over the piecewise-constant schedule; each
/// vehicle draws its turn from the link ratios and its CV flag from
/// Bernoulli(penetration). Right-turners are not CVs: they have no
/// controlled stream to report an indicator for.
std::vector<Vehicle> generate_arrivals(const DemandProfile& profile, double horizon, double penetration,
                                       std::mt19937_64& rng);

struct SimParams {
    double link_length_m = 300.0;
    double zone_radius_m = 500.0; // communication range for aggregation membership
    double jam_spacing_m = 7.0;
    double free_speed_ms = 50.0 / 3.6;
    double horizon = 3900.0;
    double warmup = 300.0;
    double eval_window = 3600.0;

    double approach_time() const { return link_length_m / free_speed_ms; }
    double zone_time() const { return zone_radius_m / free_speed_ms; }
};

/// One phase group (half cycle) as executed: green splits and the residual
/// queue measured at each effective green end. Streams not served in the
/// group carry residual -1.
struct GroupRecord {
    int index = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    Eigen::ArrayXd green;
    Eigen::ArrayXd residual;
};

struct SimMetrics {
    double avg_delay_s = 0.0;  // departed vehicles arriving in the window
    long stops = 0;
    double residual_vehicles = 0.0; // summed over green ends in the window
    long vehicles_in_window = 0;
    long departed_in_window = 0;
    std::vector<GroupRecord> groups;
};

/// Point-queue intersection: a vehicle joins the back of its stream queue
/// at its virtual arrival when the signal is red or a queue stands,
/// discharge starts l_s after green and releases one vehicle per h_k
/// until g_e + y - l_y, leftovers carry over as the residual queue.
class Simulator {
public:
    struct PhaseWindow {
        int stream = 0;
        double green_start = 0.0; // absolute, s
        double green_end = 0.0;
    };

    Simulator(const ctrl::ControllerConfig& cfg, const SimParams& params, std::vector<Vehicle> vehicles);

    double now() const { return time_; }
    bool finished() const { return time_ >= params_.horizon; }
    const ctrl::ControllerConfig& config() const { return cfg_; }

    /// Executes one phase group and advances to its end.
    void run_group(std::span<const PhaseWindow> phases, double group_end);

    /// Runs gap-actuated control (lockstep NEMA pairs) until the horizon.
    void run_actuated(double max_gap_s, double until);

    /// CV states in the zone of interest at the current time.
    std::vector<agg::CvState> snapshot() const;

    /// Most recent red start per stream, absolute seconds.
    const Eigen::ArrayXd& red_start() const { return red_start_; }

    SimMetrics metrics() const;
    const std::vector<GroupRecord>& records() const { return records_; }
    const SimParams& params() const { return params_; }

    // conservation accounting
    long total_arrived() const { return arrived_; }
    long total_departed() const { return departed_; }
    long queued_now() const;

private:
    struct StreamState {
        std::deque<int> queue;
        bool green = false;
        double green_start = 0.0;
        double green_end = 0.0; // scheduled g_e
        double eff_end = 0.0;   // g_e + y - l_y
        double last_actuation = -1e18;
    };

    enum class EventKind { GreenStart = 0, Discharge = 1, Arrival = 2, GreenEnd = 3 };
    struct Event {
        double time;
        int rank;
        int stream;
        double a; // payload: green_end for GreenStart
        double b;
        bool operator>(const Event& o) const {
            if (time != o.time) return time > o.time;
            if (rank != o.rank) return rank > o.rank;
            return stream > o.stream;
        }
    };

    void process_until(double t_end, bool inclusive = false, int gap_a = -1, int gap_b = -1,
                       double* last_actuation = nullptr);
    void handle(const Event& e);
    void depart_vehicle(int vid, double t);
    void start_green(int k, double g_s, double g_e);
    void end_green(int k);
    void open_group(double t_start);
    void close_group(double t_end);

    ctrl::ControllerConfig cfg_;
    SimParams params_;
    std::vector<Vehicle> vehicles_; // sorted by arrival
    std::vector<StreamState> streams_;
    Eigen::ArrayXd red_start_;
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
    std::size_t next_arrival_ = 0;
    mutable std::size_t zone_begin_ = 0;
    double time_ = 0.0;
    long arrived_ = 0;
    long departed_ = 0;
    std::vector<GroupRecord> records_;
    GroupRecord current_;
    bool group_open_ = false;
};

/// Supplies the next cycle's plan at every barrier crossing.
class PlanProvider {
public:
    virtual ~PlanProvider() = default;
    virtual ctrl::SignalTimingPlan next_plan(double t, ctrl::PhaseCase next_case, Simulator& sim) = 0;
};

/// Rolling-horizon drive loop: executes the first phase group of each plan,
/// then asks the provider again at the barrier.
void run_planned(Simulator& sim, PlanProvider& provider, ctrl::SignalTimingPlan initial_plan);

} // namespace privsig::sim
