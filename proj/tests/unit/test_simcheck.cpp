#include "test_support.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

hle::SimulationConfig config_for(hle::MatrixSchedule matrices, std::uint64_t agents,
                                 std::uint64_t seed) {
    hle::SimulationConfig c;
    const auto s = matrices.front().rows();
    c.matrices = std::move(matrices);
    c.agents = agents;
    c.seed = seed;
    c.birth_mix = hle::best_state_cohort(s);
    c.healthy = {0};
    return c;
}

TEST(Rng, KnownSequenceAndRange) {
    hle::Xoshiro256StarStar a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        EXPECT_EQ(x, b.next());
        EXPECT_NE(x, c.next());
    }
    for (int i = 0; i < 100000; ++i) {
        const double u = a.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
    EXPECT_STREQ(hle::Xoshiro256StarStar::algorithm, "xoshiro256**/splitmix64");
}

TEST(Rng, AgentStreamsDiffer) {
    auto s0 = hle::agent_stream(7, 0);
    auto s1 = hle::agent_stream(7, 1);
    auto s0again = hle::agent_stream(7, 0);
    const auto first = s0.next();
    EXPECT_NE(first, s1.next());
    EXPECT_EQ(first, s0again.next());
}

TEST(Simulate, ImmortalCohortStaysPut) {
    const auto r = hle::simulate(config_for(test::constant_schedule(MatrixXd::Identity(2, 2), 100),
                                            1000, 3));
    for (const double s : r.survival) {
        EXPECT_EQ(s, 1.0);
    }
    EXPECT_EQ(r.state_years(0, 0), 100.0);
    EXPECT_EQ(r.state_years(1, 0), 0.0);
    EXPECT_EQ(r.birth_counts[0], 1000u);
    EXPECT_EQ(r.le_mean, 35.0);
    EXPECT_EQ(r.hle_mean, 35.0);
}

TEST(Simulate, GeometricLifetime) {
    auto c = config_for(test::constant_schedule(MatrixXd::Constant(1, 1, 0.9), 100), 200000, 99);
    c.hle_age = 0;
    const auto r = hle::simulate(c);
    double expected = 0.0, p = 1.0;
    for (int t = 1; t <= 100; ++t) {
        p *= 0.9;
        expected += p;
    }
    EXPECT_LE(std::abs(r.state_years(0, 0) - expected), 3.0 * r.state_years_se(0, 0));
    EXPECT_LE(std::abs(r.le_mean - expected), 3.0 * r.le_se);
    EXPECT_GT(r.le_se, 0.0);
}

TEST(Simulate, ReproducibleAcrossRunsAndThreads) {
    const auto m = test::bundled(hle::HealthMeasure::hh, hle::Gender::female);
    auto c = config_for(m, 20000, 12345);
    c.threads = 1;
    const auto a = hle::simulate(c);
    c.threads = 3;
    const auto b = hle::simulate(c);
    EXPECT_EQ(a.survival, b.survival);
    EXPECT_TRUE((a.state_years.array() == b.state_years.array()).all());
    EXPECT_EQ(a.hle_mean, b.hle_mean);
    c.seed = 54321;
    const auto other = hle::simulate(c);
    EXPECT_NE(a.survival, other.survival);
}

TEST(Simulate, AgreesWithAnalyticRecursions) {
    auto c = config_for(test::bundled(hle::HealthMeasure::sah, hle::Gender::male), 100000, 2024);
    c.healthy = hle::healthy_states(hle::HealthMeasure::sah);
    VectorXd mix(4);
    mix << 0.4, 0.3, 0.2, 0.1;
    c.birth_mix = mix;
    const auto r = hle::simulate(c);
    const std::array ages{10, 30, 50, 70, 90};
    const auto checks = hle::compare_with_analytic(c, r, ages);
    EXPECT_EQ(checks.size(), 5u + 2u + 16u);
    for (const auto &check : checks) {
        EXPECT_TRUE(check.pass) << check.quantity << ": analytic " << check.analytic
                                << " empirical " << check.empirical << " se "
                                << check.standard_error;
    }
    const auto doc = hle::to_json(r, checks);
    EXPECT_EQ(doc["rng"], "xoshiro256**/splitmix64");
    EXPECT_EQ(doc["seed"], 2024u);
    EXPECT_TRUE(doc["all_pass"].get<bool>());
}

TEST(Simulate, DetectsWrongMatrices) {
    auto c = config_for(test::bundled(hle::HealthMeasure::hh, hle::Gender::male), 50000, 8);
    const auto r = hle::simulate(c);
    auto wrong = c;
    wrong.matrices = std::vector(c.matrices.size(), c.matrices[40]);
    const std::array ages{30, 50, 70};
    bool any_fail = false;
    for (const auto &check : hle::compare_with_analytic(wrong, r, ages)) {
        any_fail = any_fail || !check.pass;
    }
    EXPECT_TRUE(any_fail);
}

TEST(Simulate, Validation) {
    auto c = config_for(test::toy_chain(), 0, 1);
    EXPECT_THROW(hle::simulate(c), hle::ValidationError);
    c.agents = 10;
    c.hle_age = 5;
    EXPECT_THROW(hle::simulate(c), hle::ValidationError);
}

} // namespace
