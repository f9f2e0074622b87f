#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>
#include <vector>

#include "privsig/aggregation.hpp"
#include "testutil/stats.hpp"

using namespace privsig;

namespace {

dp::Sensitivity make_sens(int num_streams, double q_e = 8.0, double phi = 1.0, double red = 60.0) {
    dp::Sensitivity s;
    s.q_e = q_e;
    s.phi = phi;
    s.red_ref = Eigen::ArrayXd::Constant(num_streams, red);
    return s;
}

std::vector<agg::PrivateRecord> records_from(const std::vector<agg::CvState>& states) {
    std::vector<agg::PrivateRecord> out;
    for (const auto& s : states) out.push_back(agg::prepare_record(s));
    return out;
}

} // namespace

TEST_CASE("prepare_record is the indicator product") {
    auto s = agg::CvState::make(8, 2, true, 4.0, 30.0);
    auto r = agg::prepare_record(s);
    CHECK(r.eta(2) == 1.0);
    CHECK(r.pos(2) == 4.0);
    CHECK(r.time(2) == 30.0);
    CHECK(r.eta.sum() == 1.0);
    CHECK(r.pos.sum() == 4.0);

    s.queued = false;
    r = agg::prepare_record(s);
    CHECK(r.eta.sum() == 0.0);
    CHECK(r.pos.sum() == 0.0);
    CHECK(r.time.sum() == 0.0);

    auto tiny = agg::CvState::make(8, 7, true, 0.5, 3.0);
    r = agg::prepare_record(tiny);
    CHECK(r.eta(7) == 1.0);
    CHECK(r.pos(7) == 0.5);
    CHECK(r.time(7) == 3.0);

    agg::CvState bad;
    bad.alpha = Eigen::ArrayXi::Zero(8);
    CHECK_THROWS_AS(agg::prepare_record(bad), agg::InvalidIndicator);
    bad.alpha(1) = 1;
    bad.alpha(5) = 1;
    CHECK_THROWS_AS(agg::prepare_record(bad), agg::InvalidIndicator);
}

TEST_CASE("smpc-only rounds reconstruct plaintext sums exactly") {
    std::mt19937_64 rng(17);
    const dp::PrivacyBudget budget{0.05, 40.0, 3.0};
    std::uniform_int_distribution<int> n_dist(2, 80);
    std::uniform_int_distribution<int> k_dist(1, 8);
    std::uniform_real_distribution<double> pos_dist(0.0, 40.0);
    std::uniform_real_distribution<double> time_dist(0.0, 120.0);
    field::FixedPointCodec codec{};

    for (int round = 0; round < 200; ++round) {
        const int n = n_dist(rng);
        const int k = k_dist(rng);
        std::vector<agg::CvState> states;
        Eigen::ArrayXd eta = Eigen::ArrayXd::Zero(k), pos = eta, time = eta;
        std::uniform_int_distribution<int> stream(0, k - 1);
        std::bernoulli_distribution queued(0.7);
        for (int i = 0; i < n; ++i) {
            const int s = stream(rng);
            const bool q = queued(rng);
            const double p = pos_dist(rng), t = time_dist(rng);
            states.push_back(agg::CvState::make(k, s, q, q ? p : 0.0, t));
            if (q) {
                eta(s) += 1.0;
                pos(s) += p;
                time(s) += t;
            }
        }
        const auto recs = records_from(states);
        const auto [result, transcript] =
            agg::run_round(recs, agg::AggregationMode::SmpcOnly, budget, make_sens(k), rng);
        const double tol = n * codec.resolution();
        CHECK((result.eta_hat - eta).abs().maxCoeff() <= tol);
        CHECK((result.pos_hat - pos).abs().maxCoeff() <= tol);
        CHECK((result.time_hat - time).abs().maxCoeff() <= tol);

        // message counts: N(N-1) shares + N submissions per aggregated variable
        const std::size_t per_var = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1);
        CHECK(transcript.shares.size() == 3 * static_cast<std::size_t>(k) * per_var);
        CHECK(transcript.submissions.size() == 3 * static_cast<std::size_t>(k) * static_cast<std::size_t>(n));
    }
}

TEST_CASE("run_round rejects a single participant") {
    std::mt19937_64 rng(3);
    const auto recs = records_from({agg::CvState::make(4, 1, true, 2.0, 10.0)});
    CHECK_THROWS_AS(
        agg::run_round(recs, agg::AggregationMode::SmpcOnly, dp::PrivacyBudget{0.05, 40.0, 3.0}, make_sens(4), rng),
        agg::TooFewParties);
}

TEST_CASE("dp rounds carry Lap(0, Delta/eps) noise on the counting variable") {
    std::mt19937_64 rng(23);
    const double eps = 2.0;
    const dp::PrivacyBudget budget{0.05, 40.0, eps};
    const auto sens = make_sens(1);
    // three CVs in one stream, eta = 2
    std::vector<agg::CvState> states{agg::CvState::make(1, 0, true, 3.0, 20.0),
                                     agg::CvState::make(1, 0, false, 0.0, 10.0),
                                     agg::CvState::make(1, 0, true, 5.0, 40.0)};
    const auto recs = records_from(states);

    constexpr int kRounds = 100000;
    std::vector<double> noise;
    noise.reserve(kRounds);
    for (int r = 0; r < kRounds; ++r) {
        const auto [result, transcript] = agg::run_round(recs, agg::AggregationMode::SmpcDp, budget, sens, rng);
        noise.push_back(result.eta_hat(0) - 2.0);
    }
    const double b = sens.delta_eta() / eps;
    const double d = teststats::ks_statistic(noise, [&](double x) { return teststats::laplace_cdf(x, 0.0, b); });
    CHECK(d < teststats::ks_critical(noise.size(), 0.01));
    CHECK(teststats::variance(noise) == doctest::Approx(2.0 * b * b).epsilon(0.05));
}

TEST_CASE("deterministic transcripts under a fixed seed") {
    const dp::PrivacyBudget budget{0.05, 40.0, 2.5};
    const auto sens = make_sens(2);
    std::vector<agg::CvState> states{agg::CvState::make(2, 0, true, 3.0, 20.0),
                                     agg::CvState::make(2, 1, true, 1.0, 5.0),
                                     agg::CvState::make(2, 1, false, 0.0, 2.0)};
    const auto recs = records_from(states);

    std::mt19937_64 rng_a(99), rng_b(99);
    const auto [res_a, tr_a] = agg::run_round(recs, agg::AggregationMode::SmpcDp, budget, sens, rng_a);
    const auto [res_b, tr_b] = agg::run_round(recs, agg::AggregationMode::SmpcDp, budget, sens, rng_b);
    CHECK((res_a.eta_hat == res_b.eta_hat).all());
    CHECK((res_a.pos_hat == res_b.pos_hat).all());
    CHECK(tr_a.shares.size() == tr_b.shares.size());
    for (std::size_t i = 0; i < tr_a.shares.size(); ++i) CHECK(tr_a.shares[i].value == tr_b.shares[i].value);
    for (std::size_t i = 0; i < tr_a.submissions.size(); ++i)
        CHECK(tr_a.submissions[i].value == tr_b.submissions[i].value);
}

TEST_CASE("coalition views") {
    std::mt19937_64 rng(31);
    const dp::PrivacyBudget budget{0.05, 40.0, 2.5};
    const auto sens = make_sens(1);
    std::vector<agg::CvState> states{agg::CvState::make(1, 0, true, 3.0, 20.0),
                                     agg::CvState::make(1, 0, true, 1.0, 5.0),
                                     agg::CvState::make(1, 0, true, 2.0, 8.0)};
    const auto recs = records_from(states);
    const auto [result, transcript] = agg::run_round(recs, agg::AggregationMode::SmpcOnly, budget, sens, rng);

    const std::vector<int> empty;
    CHECK(agg::coalition_view(transcript, empty).shares.empty());

    const std::vector<int> all{0, 1, 2};
    CHECK_THROWS_AS(agg::coalition_view(transcript, all), agg::FullCoalition);

    const std::vector<int> pair{0, 2};
    const auto view = agg::coalition_view(transcript, pair);
    for (const auto& m : view.shares) CHECK((m.sender == 0 || m.sender == 2 || m.receiver == 0 || m.receiver == 2));
    // the excluded party's own retained share never appears
    for (const auto& m : view.shares) CHECK(!(m.sender == 1 && m.receiver == 1));
}

TEST_CASE("coalition of n-1 learns nothing about the excluded secret") {
    // run the protocol twice with the excluded CV's position at 0 and 10;
    // every share position visible to the coalition must match in law
    const dp::PrivacyBudget budget{0.05, 40.0, 2.5};
    const auto sens = make_sens(1);
    constexpr int kRounds = 20000;
    const int n = 3;

    const auto run_views = [&](double secret_pos, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::vector<agg::CvState> states{agg::CvState::make(1, 0, true, 4.0, 12.0),
                                         agg::CvState::make(1, 0, true, 2.0, 30.0),
                                         agg::CvState::make(1, 0, true, secret_pos, 7.0)};
        const auto recs = records_from(states);
        const std::vector<int> coalition{0, 1};
        // marginals of the excluded CV's messages to each coalition member,
        // for the position variable
        std::vector<std::vector<double>> per_position(static_cast<std::size_t>(n - 1));
        for (int r = 0; r < kRounds; ++r) {
            const auto [result, transcript] =
                agg::run_round(recs, agg::AggregationMode::SmpcOnly, budget, sens, rng);
            const auto view = agg::coalition_view(transcript, coalition);
            for (const auto& m : view.shares) {
                if (m.sender == 2 && m.tag == agg::VariableTag::Pos)
                    per_position[static_cast<std::size_t>(m.receiver)].push_back(
                        static_cast<double>(m.value) / static_cast<double>(field::kPrime));
            }
        }
        return per_position;
    };

    const auto views_a = run_views(0.0, 555);
    const auto views_b = run_views(10.0, 777);
    for (std::size_t pos = 0; pos < views_a.size(); ++pos) {
        REQUIRE(views_a[pos].size() == static_cast<std::size_t>(kRounds));
        const double d = teststats::ks_statistic_two_sample(views_a[pos], views_b[pos]);
        CHECK(d < teststats::ks_critical_two_sample(views_a[pos].size(), views_b[pos].size(), 0.01));
    }
}

TEST_CASE("transcript dump is line-delimited") {
    std::mt19937_64 rng(41);
    const dp::PrivacyBudget budget{0.05, 40.0, 2.5};
    const auto sens = make_sens(1);
    std::vector<agg::CvState> states{agg::CvState::make(1, 0, true, 3.0, 20.0),
                                     agg::CvState::make(1, 0, true, 1.0, 5.0)};
    const auto [result, transcript] =
        agg::run_round(records_from(states), agg::AggregationMode::SmpcDp, budget, sens, rng,
                       agg::RoundConfig{field::FixedPointCodec{}, 7});
    std::ostringstream os;
    agg::dump_transcript(transcript, os);
    const std::string text = os.str();
    long lines = std::count(text.begin(), text.end(), '\n');
    // 3 vars * (2*1 shares + 2 submissions) + 3 beta broadcasts
    CHECK(lines == 3 * (2 + 2) + 3);
    CHECK(text.find("7 0 1 eta[0]") != std::string::npos);
}
