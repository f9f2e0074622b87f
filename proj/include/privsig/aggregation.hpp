#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "privsig/cv_state.hpp"
#include "privsig/dp.hpp"
#include "privsig/field.hpp"

namespace privsig::agg {

struct TooFewParties : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FullCoalition : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class AggregationMode { SmpcOnly, SmpcDp };

/// Which of the three shared variables a message belongs to.
enum class VariableTag { Eta, Pos, Time };

const char* variable_name(VariableTag tag);

/// One share in transit: party `sender` hands `value` to party `receiver`
/// for the aggregation of variable (tag, stream).
struct ShareMessage {
    int sender = 0;
    int receiver = 0;
    VariableTag tag = VariableTag::Eta;
    int stream = 0;
    std::uint64_t value = 0;
};

/// Perturbed share sum a party submits to the data center.
struct Submission {
    int sender = 0;
    VariableTag tag = VariableTag::Eta;
    int stream = 0;
    std::uint64_t value = 0;
};

/// Everything that crossed the bus in one round: N*(N-1) exchanged shares
/// plus N submissions per aggregated variable, and the broadcast beta per
/// variable in DP mode.
struct RoundTranscript {
    int round_id = 0;
    int n_parties = 0;
    int num_streams = 0;
    AggregationMode mode = AggregationMode::SmpcOnly;
    std::vector<ShareMessage> shares;
    std::vector<Submission> submissions;
    Eigen::ArrayXd beta_eta;  // empty in SmpcOnly mode
    Eigen::ArrayXd beta_pos;
    Eigen::ArrayXd beta_time;
};

/// Reconstructed per-stream sums. In SmpcOnly mode these equal the exact
/// plaintext sums up to codec quantization; in SmpcDp mode each carries
/// Lap(0, Delta/epsilon) noise.
struct AggregateResult {
    Eigen::ArrayXd eta_hat;
    Eigen::ArrayXd pos_hat;
    Eigen::ArrayXd time_hat;
    AggregationMode mode = AggregationMode::SmpcOnly;
    int n_observed = 0;
};

struct RoundConfig {
    field::FixedPointCodec codec{};
    int round_id = 0;
};

/// Runs one aggregation round: every party splits each of its 3*K values
/// into N additive shares, exchanges them, sums what it received, in DP
/// mode adds sqrt(beta) * Lap(0, Delta/eps) to the sum, and submits; the
/// data center reconstructs by adding the submissions mod p.
std::pair<AggregateResult, RoundTranscript> run_round(std::span<const PrivateRecord> records,
                                                      AggregationMode mode,
                                                      const dp::PrivacyBudget& budget,
                                                      const dp::Sensitivity& sens,
                                                      std::mt19937_64& rng,
                                                      const RoundConfig& cfg = {});

/// Messages visible to a colluding subset of parties: shares they sent or
/// received plus the public beta broadcasts. Submissions go only to the
/// data center and are excluded.
struct CoalitionView {
    std::vector<ShareMessage> shares;
    Eigen::ArrayXd beta_eta;
    Eigen::ArrayXd beta_pos;
    Eigen::ArrayXd beta_time;
};

CoalitionView coalition_view(const RoundTranscript& t, std::span<const int> coalition);

/// Line-delimited transcript dump, one message per line:
///   round sender receiver variable[stream] value
void dump_transcript(const RoundTranscript& t, std::ostream& os);

} // namespace privsig::agg
