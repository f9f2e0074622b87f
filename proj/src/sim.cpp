#include "privsig/sim.hpp"

#include <algorithm>
#include <cmath>

namespace privsig::sim {

const char* pattern_name(FlowPattern p) {
    switch (p) {
    case FlowPattern::HighBalanced: return "high_balanced";
    case FlowPattern::LowBalanced: return "low_balanced";
    case FlowPattern::Unbalanced: return "unbalanced";
    }
    return "?";
}

DemandProfile build_demand(FlowPattern pattern) {
    DemandProfile profile;
    profile.pattern = pattern;
    std::array<double, 4> rates{};
    switch (pattern) {
    case FlowPattern::HighBalanced: rates = {750.0, 750.0, 750.0, 750.0}; break;
    case FlowPattern::LowBalanced: rates = {500.0, 500.0, 500.0, 500.0}; break;
    case FlowPattern::Unbalanced: rates = {1000.0, 1000.0, 500.0, 500.0}; break;
    }
    // time-dependent link demand fluctuating around the pattern level: a
    // fixed mean-one multiplier cycle, phase-shifted per link so peaks
    // stagger across approaches; piece length 300 s
    static constexpr double kShape[12] = {1.0, 1.25, 0.85, 1.1, 0.75, 1.2, 0.9, 1.15, 0.8, 1.05, 0.95, 1.0};
    static constexpr double kPiece = 300.0;
    for (int l = 0; l < 4; ++l) {
        auto& pieces = profile.link_rates[static_cast<std::size_t>(l)];
        pieces.clear();
        for (int seg = 0; seg < 40; ++seg) {
            const double mult = kShape[static_cast<std::size_t>((seg + 3 * l) % 12)];
            pieces.push_back(DemandProfile::Piece{kPiece * seg, rates[static_cast<std::size_t>(l)] * mult});
        }
        profile.turn_ratios[static_cast<std::size_t>(l)] = Eigen::Array3d{0.25, 0.65, 0.10};
    }
    return profile;
}

int stream_for_turn(int link, int turn) {
    // turn: 0 left, 1 through, 2 right
    static constexpr int kLeft[4] = {0, 4, 2, 6};
    static constexpr int kThrough[4] = {5, 1, 7, 3};
    if (turn == 0) return kLeft[link];
    if (turn == 1) return kThrough[link];
    return -1;
}

std::vector<Vehicle> generate_arrivals(const DemandProfile& profile, double horizon, double penetration,
                                       std::mt19937_64& rng) {
    if (penetration < 0.0 || penetration > 1.0)
        throw ConfigError("generate_arrivals: penetration must lie in [0,1]");
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<Vehicle> out;
    for (int l = 0; l < 4; ++l) {
        const auto& pieces = profile.link_rates[static_cast<std::size_t>(l)];
        const auto& ratios = profile.turn_ratios[static_cast<std::size_t>(l)];
        for (std::size_t p = 0; p < pieces.size(); ++p) {
            const double rate = pieces[p].rate_veh_h / 3600.0; // veh/s
            if (rate <= 0.0) continue;
            const double t_end = (p + 1 < pieces.size()) ? pieces[p + 1].t_start : horizon;
            double t = pieces[p].t_start;
            for (;;) {
                t += -std::log(1.0 - uni(rng)) / rate;
                if (t >= std::min(t_end, horizon)) break;
                const double u = uni(rng);
                const int turn = (u < ratios(0)) ? 0 : (u < ratios(0) + ratios(1)) ? 1 : 2;
                Vehicle v;
                v.link = l;
                v.stream = stream_for_turn(l, turn);
                v.arrival = t;
                const bool cv_draw = uni(rng) < penetration;
                v.is_cv = (v.stream >= 0) && cv_draw;
                out.push_back(v);
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Vehicle& a, const Vehicle& b) {
        if (a.arrival != b.arrival) return a.arrival < b.arrival;
        return a.link < b.link;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i);
    return out;
}

Simulator::Simulator(const ctrl::ControllerConfig& cfg, const SimParams& params, std::vector<Vehicle> vehicles)
    : cfg_(cfg), params_(params), vehicles_(std::move(vehicles)) {
    cfg_.validate();
    if (params_.warmup >= params_.horizon) throw ConfigError("Simulator: warmup must end before the horizon");
    streams_.resize(static_cast<std::size_t>(cfg_.num_streams));
    red_start_ = Eigen::ArrayXd::Zero(cfg_.num_streams);
}

void Simulator::open_group(double t_start) {
    current_ = GroupRecord{};
    current_.index = static_cast<int>(records_.size());
    current_.t_start = t_start;
    current_.green = Eigen::ArrayXd::Zero(cfg_.num_streams);
    current_.residual = Eigen::ArrayXd::Constant(cfg_.num_streams, -1.0);
    group_open_ = true;
}

void Simulator::close_group(double t_end) {
    if (!group_open_) return;
    current_.t_end = t_end;
    records_.push_back(current_);
    group_open_ = false;
}

void Simulator::depart_vehicle(int vid, double t) {
    Vehicle& v = vehicles_[static_cast<std::size_t>(vid)];
    v.depart = t;
    v.in_queue = false;
    ++departed_;
}

void Simulator::start_green(int k, double g_s, double g_e) {
    StreamState& s = streams_[static_cast<std::size_t>(k)];
    s.green = true;
    s.green_start = g_s;
    s.green_end = g_e;
    s.eff_end = g_e + cfg_.yellow(k) - cfg_.yellow_lost(k);
    if (!s.queue.empty()) {
        const double first = g_s + cfg_.startup_lost(k) + cfg_.headway(k);
        if (first <= s.eff_end)
            events_.push(Event{first, static_cast<int>(EventKind::Discharge), k, 0.0, 0.0});
    }
}

void Simulator::end_green(int k) {
    StreamState& s = streams_[static_cast<std::size_t>(k)];
    if (group_open_) {
        current_.green(k) = s.green_end - s.green_start;
        current_.residual(k) = static_cast<double>(s.queue.size());
    }
    s.green = false;
    red_start_(k) = s.green_end + cfg_.yellow(k) + cfg_.clearance(k);
}

void Simulator::handle(const Event& e) {
    const int k = e.stream;
    switch (static_cast<EventKind>(e.rank)) {
    case EventKind::GreenStart:
        start_green(k, e.time, e.a);
        events_.push(Event{streams_[static_cast<std::size_t>(k)].eff_end,
                           static_cast<int>(EventKind::GreenEnd), k, 0.0, 0.0});
        break;
    case EventKind::Discharge: {
        StreamState& s = streams_[static_cast<std::size_t>(k)];
        if (!s.green || e.time > s.eff_end + 1e-12 || s.queue.empty()) break;
        const int vid = s.queue.front();
        s.queue.pop_front();
        depart_vehicle(vid, e.time);
        s.last_actuation = e.time;
        const double next = e.time + cfg_.headway(k);
        if (!s.queue.empty() && next <= s.eff_end)
            events_.push(Event{next, static_cast<int>(EventKind::Discharge), k, 0.0, 0.0});
        break;
    }
    case EventKind::GreenEnd:
        end_green(k);
        break;
    case EventKind::Arrival:
        break; // handled in step_before
    }
}

void Simulator::run_group(std::span<const PhaseWindow> phases, double group_end) {
    open_group(time_);
    for (const auto& p : phases)
        events_.push(Event{p.green_start, static_cast<int>(EventKind::GreenStart), p.stream, p.green_end, 0.0});
    process_until(group_end);
    time_ = group_end;
    close_group(group_end);
}

void Simulator::process_until(double t_end, bool inclusive, int gap_a, int gap_b, double* last_actuation) {
    for (;;) {
        const bool have_arrival = next_arrival_ < vehicles_.size();
        const double ta = have_arrival ? vehicles_[next_arrival_].arrival : 0.0;
        const bool have_event = !events_.empty();

        // composite (time, rank) ordering between the arrival cursor and the heap
        bool take_arrival;
        double t_next;
        if (have_arrival && have_event) {
            const Event& top = events_.top();
            take_arrival = (ta < top.time) || (ta == top.time && static_cast<int>(EventKind::Arrival) < top.rank);
            t_next = take_arrival ? ta : top.time;
        } else if (have_arrival) {
            take_arrival = true;
            t_next = ta;
        } else if (have_event) {
            take_arrival = false;
            t_next = events_.top().time;
        } else {
            return;
        }

        if (inclusive ? (t_next > t_end) : (t_next >= t_end)) return;

        time_ = t_next;
        if (take_arrival) {
            Vehicle& v = vehicles_[next_arrival_++];
            ++arrived_;
            const int k = v.stream;
            if (k < 0) {
                depart_vehicle(v.id, time_);
            } else {
                StreamState& s = streams_[static_cast<std::size_t>(k)];
                if (s.green && time_ <= s.eff_end && s.queue.empty()) {
                    depart_vehicle(v.id, time_);
                    s.last_actuation = time_;
                } else {
                    v.in_queue = true;
                    v.ever_queued = true;
                    v.queue_join = time_;
                    s.queue.push_back(v.id);
                }
            }
        } else {
            const Event e = events_.top();
            events_.pop();
            handle(e);
        }

        if (last_actuation != nullptr) {
            const double act = std::max(streams_[static_cast<std::size_t>(gap_a)].last_actuation,
                                        streams_[static_cast<std::size_t>(gap_b)].last_actuation);
            if (act > *last_actuation) {
                *last_actuation = act;
                return; // caller re-evaluates the gap-out time
            }
        }
    }
}

void Simulator::run_actuated(double max_gap_s, double until) {
    static constexpr int kPairs[4][2] = {{0, 4}, {1, 5}, {2, 6}, {3, 7}};
    int phase = 0;
    open_group(time_);
    while (time_ < until) {
        const int ka = kPairs[phase][0];
        const int kb = kPairs[phase][1];
        const double g_s = time_;
        const double min_green = std::max(cfg_.g_min(ka), cfg_.g_min(kb));
        const double max_green = std::min(cfg_.g_max(ka), cfg_.g_max(kb));

        // open-ended green; the end is decided by gap-out or max-out
        start_green(ka, g_s, g_s + max_green);
        start_green(kb, g_s, g_s + max_green);
        streams_[static_cast<std::size_t>(ka)].eff_end = g_s + max_green; // provisional
        streams_[static_cast<std::size_t>(kb)].eff_end = g_s + max_green;

        double last_act = std::max(streams_[static_cast<std::size_t>(ka)].last_actuation,
                                   streams_[static_cast<std::size_t>(kb)].last_actuation);
        double green_end;
        for (;;) {
            // extend while the shortest served-stream headway stays within the
            // gap (inclusive at the boundary), never beyond max green
            const double stop_at = std::min(g_s + max_green, std::max(g_s + min_green, last_act + max_gap_s));
            const double before = last_act;
            process_until(stop_at, /*inclusive=*/true, ka, kb, &last_act);
            if (last_act == before) { // no new actuation up to the stop time
                green_end = stop_at;
                break;
            }
        }

        for (int k : {ka, kb}) {
            StreamState& s = streams_[static_cast<std::size_t>(k)];
            s.green_end = green_end;
            s.eff_end = green_end + cfg_.yellow(k) - cfg_.yellow_lost(k);
            events_.push(Event{s.eff_end, static_cast<int>(EventKind::GreenEnd), k, 0.0, 0.0});
        }

        const double next_start = green_end + std::max(cfg_.yellow(ka) + cfg_.clearance(ka),
                                                       cfg_.yellow(kb) + cfg_.clearance(kb));
        process_until(next_start);
        time_ = next_start;
        if (phase % 2 == 1) {
            close_group(time_);
            open_group(time_);
        }
        phase = (phase + 1) % 4;
    }
    close_group(time_);
}

std::vector<agg::CvState> Simulator::snapshot() const {
    std::vector<agg::CvState> out;
    const int n = cfg_.num_streams;

    for (int k = 0; k < n; ++k) {
        const StreamState& s = streams_[static_cast<std::size_t>(k)];
        for (std::size_t idx = 0; idx < s.queue.size(); ++idx) {
            const Vehicle& v = vehicles_[static_cast<std::size_t>(s.queue[idx])];
            if (!v.is_cv) continue;
            // position in vehicles from the stopline: the (idx+1)-th in line
            // stands idx jam spacings plus half its own slot back; residual
            // vehicles report their arrival as the red start
            out.push_back(agg::CvState::make(n, k, true, static_cast<double>(idx) + 0.5,
                                             std::max(0.0, v.arrival - red_start_(k))));
        }
    }

    const double zone = params_.zone_time();
    const double speed_per_spacing = params_.free_speed_ms / params_.jam_spacing_m;
    while (zone_begin_ < vehicles_.size()) {
        const Vehicle& v = vehicles_[zone_begin_];
        if (v.departed() && v.depart + zone <= time_)
            ++zone_begin_;
        else
            break;
    }
    for (std::size_t i = zone_begin_; i < vehicles_.size(); ++i) {
        const Vehicle& v = vehicles_[i];
        if (v.arrival - zone > time_) break; // upstream of the zone
        if (!v.is_cv || v.stream < 0 || v.in_queue) continue;
        if (v.departed() && v.depart + zone <= time_) continue; // left the zone
        const double p = v.departed() ? 0.0 : std::max(0.0, (v.arrival - time_) * speed_per_spacing);
        out.push_back(agg::CvState::make(n, v.stream, false, p, v.arrival - red_start_(v.stream)));
    }
    return out;
}

long Simulator::queued_now() const {
    long q = 0;
    for (const auto& s : streams_) q += static_cast<long>(s.queue.size());
    return q;
}

SimMetrics Simulator::metrics() const {
    SimMetrics m;
    const double w0 = params_.warmup;
    const double w1 = params_.warmup + params_.eval_window;
    double delay_sum = 0.0;
    for (const Vehicle& v : vehicles_) {
        if (v.arrival < w0 || v.arrival > w1) continue;
        if (v.arrival > time_) continue; // never entered the run
        ++m.vehicles_in_window;
        if (v.ever_queued) ++m.stops;
        if (v.departed()) {
            ++m.departed_in_window;
            delay_sum += v.depart - v.arrival;
        }
    }
    m.avg_delay_s = (m.departed_in_window > 0) ? delay_sum / static_cast<double>(m.departed_in_window) : 0.0;
    for (const auto& g : records_) {
        if (g.t_end < w0 || g.t_end > w1) continue;
        m.residual_vehicles += g.residual.max(0.0).sum();
    }
    m.groups = records_;
    return m;
}

void run_planned(Simulator& sim, PlanProvider& provider, ctrl::SignalTimingPlan initial_plan) {
    ctrl::SignalTimingPlan plan = std::move(initial_plan);
    // drive loop: execute the first phase group of the current plan, then
    // re-optimize at the barrier for the group that starts there
    while (!sim.finished()) {
        const auto orders = ctrl::ring_orders(plan.phase_case);
        const double t0 = sim.now();
        std::vector<Simulator::PhaseWindow> phases;
        phases.reserve(4);
        for (const auto& order : orders)
            for (int pos = 0; pos < 2; ++pos) {
                const int k = order[pos];
                phases.push_back(Simulator::PhaseWindow{k, t0 + plan.green_start(k), t0 + plan.green_end(k)});
            }
        const double group_end = t0 + ctrl::first_group_end(plan, sim.config());
        sim.run_group(phases, group_end);
        if (sim.finished()) break;
        plan = provider.next_plan(sim.now(), ctrl::other(plan.phase_case), sim);
    }
}

} // namespace privsig::sim
