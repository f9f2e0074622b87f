#include "privsig/aggregation.hpp"

#include <cmath>
#include <ostream>
#include <vector>

namespace privsig::agg {

const char* variable_name(VariableTag tag) {
    switch (tag) {
    case VariableTag::Eta: return "eta";
    case VariableTag::Pos: return "P";
    case VariableTag::Time: return "T";
    }
    return "?";
}

namespace {

double record_value(const PrivateRecord& r, VariableTag tag, int k) {
    switch (tag) {
    case VariableTag::Eta: return r.eta(k);
    case VariableTag::Pos: return r.pos(k);
    case VariableTag::Time: return r.time(k);
    }
    return 0.0;
}

} // namespace

std::pair<AggregateResult, RoundTranscript> run_round(std::span<const PrivateRecord> records,
                                                      AggregationMode mode,
                                                      const dp::PrivacyBudget& budget,
                                                      const dp::Sensitivity& sens,
                                                      std::mt19937_64& rng,
                                                      const RoundConfig& cfg) {
    const int n = static_cast<int>(records.size());
    if (n < 2) throw TooFewParties("run_round: need at least 2 CVs");
    const int num_streams = static_cast<int>(records[0].eta.size());

    AggregateResult result;
    result.eta_hat = Eigen::ArrayXd::Zero(num_streams);
    result.pos_hat = Eigen::ArrayXd::Zero(num_streams);
    result.time_hat = Eigen::ArrayXd::Zero(num_streams);
    result.mode = mode;
    result.n_observed = n;

    RoundTranscript transcript;
    transcript.round_id = cfg.round_id;
    transcript.n_parties = n;
    transcript.num_streams = num_streams;
    transcript.mode = mode;
    const std::size_t per_var = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1);
    transcript.shares.reserve(3 * static_cast<std::size_t>(num_streams) * per_var);
    transcript.submissions.reserve(3 * static_cast<std::size_t>(num_streams) * static_cast<std::size_t>(n));
    if (mode == AggregationMode::SmpcDp) {
        transcript.beta_eta = Eigen::ArrayXd::Zero(num_streams);
        transcript.beta_pos = Eigen::ArrayXd::Zero(num_streams);
        transcript.beta_time = Eigen::ArrayXd::Zero(num_streams);
    }

    std::vector<field::FieldElement> sums(static_cast<std::size_t>(n));

    const VariableTag tags[3] = {VariableTag::Eta, VariableTag::Pos, VariableTag::Time};
    for (VariableTag tag : tags) {
        for (int k = 0; k < num_streams; ++k) {
            // share exchange: party i sends share j to party j, keeps share i
            std::fill(sums.begin(), sums.end(), field::FieldElement{});
            for (int i = 0; i < n; ++i) {
                const auto encoded = cfg.codec.encode(record_value(records[static_cast<std::size_t>(i)], tag, k));
                const auto shares = field::split(encoded, n, rng);
                for (int j = 0; j < n; ++j) {
                    sums[static_cast<std::size_t>(j)] += shares.shares[static_cast<std::size_t>(j)];
                    if (j != i)
                        transcript.shares.push_back(
                            ShareMessage{i, j, tag, k, shares.shares[static_cast<std::size_t>(j)].raw()});
                }
            }

            // distributed perturbation: one beta broadcast, per-party Laplace
            if (mode == AggregationMode::SmpcDp) {
                const double beta = dp::sample_beta_1(n, rng);
                double delta = 1.0;
                switch (tag) {
                case VariableTag::Eta: delta = sens.delta_eta(); break;
                case VariableTag::Pos: delta = sens.delta_pos(); break;
                case VariableTag::Time: delta = sens.delta_time(k); break;
                }
                const auto spec = dp::laplace_scale(delta, budget.epsilon);
                const double root_beta = std::sqrt(beta);
                for (int j = 0; j < n; ++j) {
                    const double noise = root_beta * dp::sample_laplace(spec, rng);
                    sums[static_cast<std::size_t>(j)] += cfg.codec.encode(noise);
                }
                switch (tag) {
                case VariableTag::Eta: transcript.beta_eta(k) = beta; break;
                case VariableTag::Pos: transcript.beta_pos(k) = beta; break;
                case VariableTag::Time: transcript.beta_time(k) = beta; break;
                }
            }

            // submissions and reconstruction at the data center
            field::FieldElement total;
            for (int j = 0; j < n; ++j) {
                transcript.submissions.push_back(Submission{j, tag, k, sums[static_cast<std::size_t>(j)].raw()});
                total += sums[static_cast<std::size_t>(j)];
            }
            const double value = cfg.codec.decode(total);
            switch (tag) {
            case VariableTag::Eta: result.eta_hat(k) = value; break;
            case VariableTag::Pos: result.pos_hat(k) = value; break;
            case VariableTag::Time: result.time_hat(k) = value; break;
            }
        }
    }

    return {std::move(result), std::move(transcript)};
}

CoalitionView coalition_view(const RoundTranscript& t, std::span<const int> coalition) {
    std::vector<char> in(static_cast<std::size_t>(t.n_parties), 0);
    int members = 0;
    for (int idx : coalition) {
        if (idx < 0 || idx >= t.n_parties) continue;
        if (!in[static_cast<std::size_t>(idx)]) {
            in[static_cast<std::size_t>(idx)] = 1;
            ++members;
        }
    }
    if (members >= t.n_parties) throw FullCoalition("coalition_view: coalition must exclude at least one CV");

    CoalitionView view;
    view.beta_eta = t.beta_eta;
    view.beta_pos = t.beta_pos;
    view.beta_time = t.beta_time;
    if (members == 0) return view;
    for (const auto& m : t.shares) {
        if (in[static_cast<std::size_t>(m.sender)] || in[static_cast<std::size_t>(m.receiver)])
            view.shares.push_back(m);
    }
    return view;
}

void dump_transcript(const RoundTranscript& t, std::ostream& os) {
    for (const auto& m : t.shares) {
        os << t.round_id << ' ' << m.sender << ' ' << m.receiver << ' ' << variable_name(m.tag) << '['
           << m.stream << "] " << m.value << '\n';
    }
    if (t.mode == AggregationMode::SmpcDp) {
        for (int k = 0; k < t.num_streams; ++k) {
            os << t.round_id << " dc * beta:eta[" << k << "] " << t.beta_eta(k) << '\n';
            os << t.round_id << " dc * beta:P[" << k << "] " << t.beta_pos(k) << '\n';
            os << t.round_id << " dc * beta:T[" << k << "] " << t.beta_time(k) << '\n';
        }
    }
    for (const auto& s : t.submissions) {
        os << t.round_id << ' ' << s.sender << " dc " << variable_name(s.tag) << '[' << s.stream << "] "
           << s.value << '\n';
    }
}

} // namespace privsig::agg
