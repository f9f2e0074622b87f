#pragma once

#include <Eigen/Dense>
#include <deque>
#include <stdexcept>

namespace privsig::est {

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Ring buffer of per-stream queued-CV counts over the past c decision
/// cycles, feeding the turning-proportion estimate. Perturbed counts are
/// clamped at zero before storage.
class CycleHistory {
public:
    explicit CycleHistory(int num_streams, int capacity = 10)
        : num_streams_(num_streams), capacity_(capacity) {}

    void push(const Eigen::ArrayXd& eta_hat) {
        if (eta_hat.size() != num_streams_)
            throw DimensionMismatch("CycleHistory::push: one count per stream expected");
        rows_.push_back(eta_hat.max(0.0));
        if (static_cast<int>(rows_.size()) > capacity_) rows_.pop_front();
    }

    /// gamma_k = sum_r eta_hat_{k,r} / sum_r sum_k' eta_hat_{k',r};
    /// uniform 1/K before any mass has been observed.
    Eigen::ArrayXd gamma() const {
        Eigen::ArrayXd totals = Eigen::ArrayXd::Zero(num_streams_);
        for (const auto& row : rows_) totals += row;
        const double grand = totals.sum();
        if (grand <= 0.0)
            return Eigen::ArrayXd::Constant(num_streams_, 1.0 / static_cast<double>(num_streams_));
        return totals / grand;
    }

    int size() const { return static_cast<int>(rows_.size()); }
    int capacity() const { return capacity_; }
    int num_streams() const { return num_streams_; }

private:
    int num_streams_;
    int capacity_;
    std::deque<Eigen::ArrayXd> rows_;
};

/// Clamp range for estimated arrival rates: arrivals cannot sustainably
/// exceed the stream's saturation flow 1/h_k.
struct EstimatorBounds {
    double lambda_min = 1e-4;       // veh/s
    Eigen::ArrayXd lambda_max;      // veh/s, per stream

    static EstimatorBounds from_headways(const Eigen::ArrayXd& headway, double lambda_min = 1e-4) {
        return EstimatorBounds{lambda_min, 1.0 / headway};
    }
};

struct ArrivalEstimate {
    Eigen::ArrayXd lambda;  // veh/s per stream
    Eigen::ArrayXd gamma;
    bool degenerate = false;
};

/// Joint maximum-likelihood estimate of per-stream arrival rates from the
/// (possibly perturbed) aggregates:
///   lambda_k = gamma_k * sum(pos_hat) / sum(gamma * time_hat),
/// inputs clamped at zero, result clamped into the estimator bounds.
/// A vanishing denominator yields lambda_min everywhere with the estimate
/// flagged degenerate.
ArrivalEstimate estimate(const Eigen::ArrayXd& pos_hat, const Eigen::ArrayXd& time_hat,
                         const Eigen::ArrayXd& gamma, const EstimatorBounds& bounds);

} // namespace privsig::est
