#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace privsig::agg {

struct InvalidIndicator : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Snapshot one connected vehicle shares at a decision step: a one-hot
/// stream indicator, its queued flag, position in vehicles from the
/// stopline, and stopline arrival time relative to the stream's red start.
struct CvState {
    Eigen::ArrayXi alpha;   // one-hot over streams
    bool queued = false;    // delta
    double position = 0.0;  // vehicles from stopline, >= 0
    double arrival_time = 0.0; // s, relative to red start

    int stream() const {
        int idx = -1;
        for (int k = 0; k < alpha.size(); ++k) {
            if (alpha(k) != 0) {
                if (idx >= 0 || alpha(k) != 1) return -1;
                idx = k;
            }
        }
        return idx;
    }

    static CvState make(int num_streams, int stream, bool queued, double position, double arrival_time) {
        CvState s;
        s.alpha = Eigen::ArrayXi::Zero(num_streams);
        s.alpha(stream) = 1;
        s.queued = queued;
        s.position = position;
        s.arrival_time = arrival_time;
        return s;
    }
};

/// Per-stream contribution vectors of one CV: eta = alpha * delta,
/// pos = alpha * delta * p, time = alpha * delta * t. All-zero when the
/// vehicle is not queued, so its participation never changes a sum.
struct PrivateRecord {
    Eigen::ArrayXd eta;
    Eigen::ArrayXd pos;
    Eigen::ArrayXd time;
};

inline PrivateRecord prepare_record(const CvState& s) {
    const int k = s.stream();
    if (k < 0) throw InvalidIndicator("prepare_record: indicator must have exactly one 1");
    const auto n = s.alpha.size();
    PrivateRecord r;
    r.eta = Eigen::ArrayXd::Zero(n);
    r.pos = Eigen::ArrayXd::Zero(n);
    r.time = Eigen::ArrayXd::Zero(n);
    if (s.queued) {
        r.eta(k) = 1.0;
        r.pos(k) = s.position;
        r.time(k) = s.arrival_time;
    }
    return r;
}

} // namespace privsig::agg
