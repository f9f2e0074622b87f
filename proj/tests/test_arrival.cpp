#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "privsig/arrival.hpp"

using namespace privsig;

namespace {
est::EstimatorBounds bounds_for(int n, double lambda_max = 1.0) {
    return est::EstimatorBounds{1e-4, Eigen::ArrayXd::Constant(n, lambda_max)};
}
} // namespace

TEST_CASE("cycle history clamps, evicts and mismatches") {
    est::CycleHistory h(8, 3);
    CHECK(h.size() == 0);
    h.push(Eigen::ArrayXd::Ones(8));
    CHECK(h.size() == 1);

    Eigen::ArrayXd noisy = Eigen::ArrayXd::Ones(8);
    noisy(2) = -0.7;
    h.push(noisy);
    // clamped to zero, so stream 2 carries 1 from the first push only
    const auto g = h.gamma();
    CHECK(g(2) < g(3));

    h.push(Eigen::ArrayXd::Ones(8));
    h.push(Eigen::ArrayXd::Ones(8)); // evicts the first
    CHECK(h.size() == 3);

    CHECK_THROWS_AS(h.push(Eigen::ArrayXd::Ones(5)), est::DimensionMismatch);
}

TEST_CASE("gamma from history") {
    est::CycleHistory h(8, 10);
    // cold start: uniform
    CHECK(h.gamma()(0) == doctest::Approx(1.0 / 8.0));

    h.push(Eigen::ArrayXd::Ones(8));
    for (int k = 0; k < 8; ++k) CHECK(h.gamma()(k) == doctest::Approx(1.0 / 8.0));

    est::CycleHistory single(8, 10);
    Eigen::ArrayXd only3 = Eigen::ArrayXd::Zero(8);
    only3(3) = 4.0;
    single.push(only3);
    CHECK(single.gamma()(3) == doctest::Approx(1.0));
    CHECK(single.gamma()(0) == doctest::Approx(0.0));
}

TEST_CASE("gamma is invariant under positive rescaling of the history") {
    est::CycleHistory a(4, 10), b(4, 10);
    Eigen::ArrayXd row(4);
    row << 1.0, 2.0, 3.0, 4.0;
    a.push(row);
    b.push(Eigen::ArrayXd(row * 7.5));
    CHECK((a.gamma() - b.gamma()).abs().maxCoeff() < 1e-12);
}

TEST_CASE("estimator on spec examples") {
    // single stream: collapses to sum(p) / sum(t)
    {
        const auto e = est::estimate(Eigen::ArrayXd::Constant(1, 6.0), Eigen::ArrayXd::Constant(1, 60.0),
                                     Eigen::ArrayXd::Constant(1, 1.0), bounds_for(1));
        CHECK(e.lambda(0) == doctest::Approx(0.1));
        CHECK(!e.degenerate);
    }
    // two streams, hand-evaluated
    {
        Eigen::ArrayXd gamma(2), p(2), t(2);
        gamma << 0.5, 0.5;
        p << 3.0, 5.0;
        t << 30.0, 50.0;
        const auto e = est::estimate(p, t, gamma, bounds_for(2));
        CHECK(e.lambda(0) == doctest::Approx(0.1));
        CHECK(e.lambda(1) == doctest::Approx(0.1));

        // scaling every gamma by 2 leaves lambda unchanged
        const auto e2 = est::estimate(p, t, Eigen::ArrayXd(gamma * 2.0), bounds_for(2));
        CHECK((e.lambda - e2.lambda).abs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("degenerate denominator flags and floors") {
    const auto e = est::estimate(Eigen::ArrayXd::Constant(2, 3.0), Eigen::ArrayXd::Zero(2),
                                 Eigen::ArrayXd::Constant(2, 0.5), bounds_for(2));
    CHECK(e.degenerate);
    CHECK(e.lambda(0) == doctest::Approx(1e-4));
    CHECK(e.lambda(1) == doctest::Approx(1e-4));
}

TEST_CASE("negative perturbed inputs are clamped before use") {
    Eigen::ArrayXd gamma(2), p(2), t(2);
    gamma << 0.5, 0.5;
    p << -3.0, 5.0; // dp noise can push aggregates negative
    t << 30.0, 50.0;
    const auto e = est::estimate(p, t, gamma, bounds_for(2));
    CHECK(e.lambda(0) == doctest::Approx(0.5 * 5.0 / 40.0));
}

TEST_CASE("monotonicity in the position aggregate") {
    Eigen::ArrayXd gamma(3), p(3), t(3);
    gamma << 0.2, 0.5, 0.3;
    p << 3.0, 5.0, 2.0;
    t << 30.0, 50.0, 20.0;
    const auto base = est::estimate(p, t, gamma, bounds_for(3, 100.0));
    p(1) += 4.0;
    const auto more = est::estimate(p, t, gamma, bounds_for(3, 100.0));
    for (int k = 0; k < 3; ++k) CHECK(more.lambda(k) >= base.lambda(k));
}

TEST_CASE("lambda clamps into the saturation range") {
    const auto e = est::estimate(Eigen::ArrayXd::Constant(1, 1e6), Eigen::ArrayXd::Constant(1, 1.0),
                                 Eigen::ArrayXd::Constant(1, 1.0), bounds_for(1, 0.5));
    CHECK(e.lambda(0) == doctest::Approx(0.5));
}
