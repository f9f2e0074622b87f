#include "privsig/dp.hpp"

#include <cmath>

namespace privsig::dp {

double epsilon_bound(double p_dire, double n) {
    const double risk = 8.0 * p_dire;
    if (!(risk > 0.0) || !(risk < 1.0)) throw InvalidRisk("epsilon_bound: 8*p_dire must lie in (0,1)");
    if (!(n >= 2.0)) throw InvalidRisk("epsilon_bound: need n >= 2");
    const double arg = risk * (n - 1.0) / (1.0 - risk);
    if (!(arg > 1.0)) throw NonPositiveBudget("epsilon_bound: budget would be <= 0");
    return std::log(arg);
}

LaplaceSpec laplace_scale(double delta, double epsilon) {
    if (!(delta > 0.0) || !(epsilon > 0.0))
        throw NonPositiveInput("laplace_scale: delta and epsilon must be > 0");
    return LaplaceSpec{delta / epsilon};
}

double sample_laplace(const LaplaceSpec& spec, std::mt19937_64& rng) {
    // u uniform on (-1/2, 1/2]; x = -b * sgn(u) * ln(1 - 2|u|)
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double u = uni(rng) - 0.5;
    if (u == -0.5) u = 0.5; // open at the left end
    const double sign = (u >= 0.0) ? 1.0 : -1.0;
    return -spec.b * sign * std::log(1.0 - 2.0 * std::fabs(u));
}

double sample_beta_1(int n, std::mt19937_64& rng) {
    if (n < 2) throw TooFewParties("sample_beta_1: need n >= 2");
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double u = uni(rng);
    return 1.0 - std::pow(1.0 - u, 1.0 / static_cast<double>(n - 1));
}

VastMajorityReport classify_vast_majority(std::span<const agg::CvState> states, const Sensitivity& sens) {
    VastMajorityReport rep;
    for (const auto& s : states) {
        if (!s.queued) continue;
        const int k = s.stream();
        const bool pos_ok = s.position <= sens.delta_pos();
        const bool time_ok = s.arrival_time <= sens.delta_time(k);
        if (pos_ok && time_ok)
            ++rep.type1;
        else if (pos_ok || time_ok)
            ++rep.type2;
        else
            ++rep.type3;
    }
    return rep;
}

} // namespace privsig::dp
