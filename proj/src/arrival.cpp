#include "privsig/arrival.hpp"

namespace privsig::est {

ArrivalEstimate estimate(const Eigen::ArrayXd& pos_hat, const Eigen::ArrayXd& time_hat,
                         const Eigen::ArrayXd& gamma, const EstimatorBounds& bounds) {
    const auto n = gamma.size();
    if (pos_hat.size() != n || time_hat.size() != n || bounds.lambda_max.size() != n)
        throw DimensionMismatch("estimate: per-stream inputs must share one dimension");

    ArrivalEstimate out;
    out.gamma = gamma;

    const Eigen::ArrayXd p = pos_hat.max(0.0);
    const Eigen::ArrayXd t = time_hat.max(0.0);
    const double numer = p.sum();
    const double denom = (gamma * t).sum();

    if (denom <= 0.0) {
        out.lambda = Eigen::ArrayXd::Constant(n, bounds.lambda_min);
        out.degenerate = true;
        return out;
    }

    out.lambda = (gamma * (numer / denom)).max(bounds.lambda_min).min(bounds.lambda_max);
    return out;
}

} // namespace privsig::est
