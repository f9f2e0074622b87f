#pragma once

#include <Eigen/Dense>
#include <deque>
#include <random>
#include <span>
#include <stdexcept>

#include "privsig/cv_state.hpp"

namespace privsig::dp {

struct InvalidRisk : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonPositiveBudget : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonPositiveInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TooFewParties : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Privacy budget implied by a per-direction identification risk: with 8
/// possible directions at a four-link intersection,
///   epsilon = ln( 8 * p_dire * (n - 1) / (1 - 8 * p_dire) ).
/// Throws InvalidRisk when 8*p_dire is not in (0,1) or n < 2, and
/// NonPositiveBudget when the log argument is <= 1.
double epsilon_bound(double p_dire, double n);

struct PrivacyBudget {
    double p_dire = 0.0;
    double n_ref = 0.0;
    double epsilon = 0.0;

    static PrivacyBudget from_risk(double p_dire, double n_ref) {
        return PrivacyBudget{p_dire, n_ref, epsilon_bound(p_dire, n_ref)};
    }
};

/// Vast-majority sensitivities of the three aggregated variables:
/// counting 1, position Q_e, arrival time phi * R_k with R_k the reference
/// red duration of stream k.
struct Sensitivity {
    double q_e = 8.0;
    double phi = 1.0;
    Eigen::ArrayXd red_ref; // seconds, per stream

    double delta_eta() const { return 1.0; }
    double delta_pos() const { return q_e; }
    double delta_time(int k) const { return phi * red_ref(k); }
};

/// Laplace scale b = Delta / epsilon, in physical units of the protected
/// variable.
struct LaplaceSpec {
    double b = 0.0;
};

LaplaceSpec laplace_scale(double delta, double epsilon);

/// Inverse-CDF draw from Lap(0, b).
double sample_laplace(const LaplaceSpec& spec, std::mt19937_64& rng);

/// Inverse-CDF draw from Beta(1, n-1): 1 - (1-u)^(1/(n-1)).
double sample_beta_1(int n, std::mt19937_64& rng);

/// Counts of CVs per protection class for a given sensitivity choice:
/// type 1 has both key parameters within the vast-majority bounds, type 2
/// exactly one, type 3 neither. Only queued CVs are classified.
struct VastMajorityReport {
    int type1 = 0;
    int type2 = 0;
    int type3 = 0;

    int total() const { return type1 + type2 + type3; }
};

VastMajorityReport classify_vast_majority(std::span<const agg::CvState> states, const Sensitivity& sens);

/// Sliding mean of the CV count observed over recent decision steps, used
/// as the reference N for the budget before the current round's count is
/// known. Starts from a prior of 40 until data exists.
class ReferenceCountTracker {
public:
    explicit ReferenceCountTracker(double initial = 40.0, int window = 5)
        : initial_(initial), window_(window) {}

    void observe(double n) {
        counts_.push_back(n);
        if (static_cast<int>(counts_.size()) > window_) counts_.pop_front();
    }

    double mean() const {
        if (counts_.empty()) return initial_;
        double s = 0.0;
        for (double c : counts_) s += c;
        return s / static_cast<double>(counts_.size());
    }

private:
    double initial_;
    int window_;
    std::deque<double> counts_;
};

} // namespace privsig::dp
