#include "test_support.hpp"

#include "../support/path_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double geometric(double r, int terms) {
    double sum = 0.0, p = 1.0;
    for (int t = 1; t <= terms; ++t) {
        p *= r;
        sum += p;
    }
    return sum;
}

TEST(Survival, IdentityNeverDies) {
    const auto s = hle::survival_curve(test::constant_schedule(MatrixXd::Identity(4, 4), 100),
                                       hle::best_state_cohort(4));
    ASSERT_EQ(s.size(), 101u);
    for (const double v : s) {
        EXPECT_EQ(v, 1.0);
    }
}

TEST(Survival, ScalarGeometric) {
    const auto s =
        hle::survival_curve(test::constant_schedule(MatrixXd::Constant(1, 1, 0.9), 100),
                            VectorXd::Ones(1));
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(s[i], std::pow(0.9, static_cast<double>(i)), 1e-15);
    }
}

TEST(Survival, ToyChainByHand) {
    const auto s = hle::survival_curve(test::toy_chain(), hle::best_state_cohort(2));
    ASSERT_EQ(s.size(), 4u);
    EXPECT_NEAR(s[1], 0.9, 1e-15);
    EXPECT_NEAR(s[2], 0.79, 1e-15);
    EXPECT_NEAR(s[3], 0.5925, 1e-15);
    // A cohort vector of counts rather than shares gives the same curve.
    VectorXd x(2);
    x << 300.0, 100.0;
    const auto mixed = hle::survival_curve(test::toy_chain(), x);
    EXPECT_NEAR(mixed[1], (300.0 * 0.9 + 100.0 * 0.8) / 400.0, 1e-15);
}

TEST(Survival, RejectsBadCohorts) {
    EXPECT_THROW(hle::survival_curve(test::toy_chain(), VectorXd::Zero(2)), hle::ValidationError);
    EXPECT_THROW(hle::survival_curve(test::toy_chain(), VectorXd::Ones(3)), hle::ValidationError);
    EXPECT_THROW(hle::survival_curve({}, VectorXd::Ones(2)), hle::ValidationError);
    auto ragged = test::toy_chain();
    ragged[1] = MatrixXd::Identity(3, 3);
    EXPECT_THROW(hle::survival_curve(ragged, VectorXd::Ones(2)), hle::ValidationError);
}

TEST(Occupancy, IdentityStaysIdentity) {
    for (const auto &n : hle::occupancy(test::constant_schedule(MatrixXd::Identity(3, 3), 10))) {
        EXPECT_TRUE(n.isIdentity());
    }
}

TEST(Occupancy, ToyChainByHand) {
    const auto n = hle::occupancy(test::toy_chain());
    ASSERT_EQ(n.size(), 4u);
    MatrixXd n2(2, 2), n3(2, 2);
    n2 << 0.44, 0.18,
          0.35, 0.48;
    n3 << 0.3075, 0.21,
          0.285, 0.285;
    EXPECT_TRUE(n[0].isIdentity());
    EXPECT_TRUE(n[1].isApprox(test::toy_chain()[0], 1e-15));
    EXPECT_TRUE(n[2].isApprox(n2, 1e-14));
    EXPECT_TRUE(n[3].isApprox(n3, 1e-14));
}

TEST(Occupancy, ColumnSumsAreSurvivalFromEachState) {
    const auto matrices = test::bundled(hle::HealthMeasure::sah, hle::Gender::female);
    const auto n = hle::occupancy(matrices);
    for (Eigen::Index k = 0; k < 4; ++k) {
        const auto s = hle::survival_curve(matrices, VectorXd::Unit(4, k));
        for (std::size_t i = 0; i < n.size(); ++i) {
            EXPECT_NEAR(n[i].col(k).sum(), s[i], 1e-14);
        }
    }
}

TEST(ExpectedYears, ImmortalCohort) {
    const auto z = hle::expected_years(test::constant_schedule(MatrixXd::Identity(2, 2), 100));
    ASSERT_EQ(z.size(), 101u);
    EXPECT_TRUE(z[97].isApprox(3.0 * MatrixXd::Identity(2, 2)));
    EXPECT_TRUE(z[99].isIdentity());
    EXPECT_TRUE(z[100].isZero());
    EXPECT_TRUE(z[0].isApprox(100.0 * MatrixXd::Identity(2, 2)));
}

TEST(ExpectedYears, ScalarGeometric) {
    const auto z = hle::expected_years(test::constant_schedule(MatrixXd::Constant(1, 1, 0.9), 100));
    for (int a = 0; a <= 100; ++a) {
        EXPECT_NEAR(z[static_cast<std::size_t>(a)](0, 0), geometric(0.9, 100 - a), 1e-12) << a;
    }
}

TEST(ExpectedYears, ToyChainByHand) {
    const auto z = hle::expected_years(test::toy_chain());
    MatrixXd z0(2, 2);
    z0 << 1.4475, 0.59,
          0.835, 1.365;
    EXPECT_TRUE(z[0].isApprox(z0, 1e-14)) << z[0];
    EXPECT_TRUE(z[2].isApprox(test::toy_chain()[2], 1e-15));
}

TEST(ExpectedYears, ColumnSumsMatchRestartedSurvival) {
    const auto matrices = test::bundled(hle::HealthMeasure::hh, hle::Gender::male);
    const auto z = hle::expected_years(matrices);
    for (int a : {0, 30, 64, 65, 90, 99}) {
        const hle::MatrixSchedule tail(matrices.begin() + a, matrices.end());
        for (Eigen::Index k = 0; k < 2; ++k) {
            const auto s = hle::survival_curve(tail, VectorXd::Unit(2, k));
            double sum = 0.0;
            for (std::size_t i = 1; i < s.size(); ++i) {
                sum += s[i];
            }
            EXPECT_NEAR(z[static_cast<std::size_t>(a)].col(k).sum(), sum, 1e-10);
        }
    }
}

TEST(BruteForce, RecursionsMatchPathEnumeration) {
    std::mt19937_64 rng(20240607);
    for (Eigen::Index states = 1; states <= 3; ++states) {
        for (int ages = 1; ages <= 4; ++ages) {
            for (int draw = 0; draw < 5; ++draw) {
                const auto chain = fixtures::random_chain(rng, ages, states);
                const fixtures::PathOracle oracle{chain, states};
                const auto n_ref = oracle.occupancy();
                const auto z_ref = oracle.expected_years();
                const auto n = hle::occupancy(chain);
                const auto z = hle::expected_years(chain);
                for (std::size_t i = 0; i < n.size(); ++i) {
                    EXPECT_LE((n[i] - n_ref[i]).cwiseAbs().maxCoeff(), 1e-12);
                    EXPECT_LE((z[i] - z_ref[i]).cwiseAbs().maxCoeff(), 1e-12)
                        << states << " states, " << ages << " ages, a = " << i;
                }
            }
        }
    }
}

TEST(StateMix, Basics) {
    const auto id = test::constant_schedule(MatrixXd::Identity(3, 3), 10);
    for (int age = 0; age <= 10; ++age) {
        EXPECT_TRUE(hle::state_mix_at_age(id, VectorXd::Unit(3, 0), age).isApprox(VectorXd::Unit(3, 0)));
    }
    VectorXd x(2);
    x << 3.0, 1.0;
    EXPECT_TRUE(hle::state_mix_at_age(test::toy_chain(), x, 0).isApprox(x / 4.0));
    VectorXd expected(2);
    expected << 0.3075, 0.285;
    expected /= expected.sum();
    EXPECT_TRUE(hle::state_mix_at_age(test::toy_chain(), hle::best_state_cohort(2), 3)
                    .isApprox(expected, 1e-14));
    EXPECT_THROW(hle::state_mix_at_age(test::toy_chain(), x, 4), hle::ValidationError);
    EXPECT_THROW(hle::state_mix_at_age(test::constant_schedule(MatrixXd::Zero(2, 2), 3), x, 2),
                 hle::DomainError);
}

TEST(HealthExpectancy, ImmortalAndHealthy) {
    const auto id = test::constant_schedule(MatrixXd::Identity(4, 4), 100);
    const auto h = hle::healthy_life_expectancy(id, hle::HealthMeasure::sah, 65, VectorXd::Unit(4, 0));
    EXPECT_DOUBLE_EQ(h.le, 35.0);
    EXPECT_DOUBLE_EQ(h.hle, 35.0);
    EXPECT_DOUBLE_EQ(h.uhle, 0.0);
    EXPECT_DOUBLE_EQ(h.pct_healthy, 100.0);
}

TEST(HealthExpectancy, AbsorbingUnhealthyState) {
    MatrixXd m = MatrixXd::Zero(4, 4);
    m(3, 3) = 0.9;
    m(3, 0) = 0.9; // anyone elsewhere falls ill too
    const auto h = hle::healthy_life_expectancy(test::constant_schedule(m, 100),
                                                hle::HealthMeasure::sah, 65, VectorXd::Unit(4, 3));
    EXPECT_DOUBLE_EQ(h.hle, 0.0);
    EXPECT_NEAR(h.uhle, geometric(0.9, 35), 1e-12);
    EXPECT_DOUBLE_EQ(h.pct_healthy, 0.0);
}

TEST(HealthExpectancy, HalfYearCorrectionSplitsByShare) {
    hle::HealthExpectancy h{10.0, 6.0, 4.0, 60.0};
    const auto c = hle::with_half_year_correction(h);
    EXPECT_DOUBLE_EQ(c.le, 10.5);
    EXPECT_DOUBLE_EQ(c.hle, 6.3);
    EXPECT_DOUBLE_EQ(c.uhle, 4.2);
    EXPECT_DOUBLE_EQ(c.pct_healthy, 60.0);
}

TEST(HealthExpectancy, Validation) {
    const auto id = test::constant_schedule(MatrixXd::Identity(2, 2), 100);
    EXPECT_THROW(hle::healthy_life_expectancy(id, hle::HealthMeasure::sah, 65, VectorXd::Unit(4, 0)),
                 hle::ValidationError);
    EXPECT_THROW(hle::healthy_life_expectancy(id, hle::HealthMeasure::hh, 65, VectorXd::Ones(2)),
                 hle::ValidationError);
    EXPECT_THROW(hle::healthy_life_expectancy(id, hle::HealthMeasure::hh, 101, VectorXd::Unit(2, 0)),
                 hle::ValidationError);
    EXPECT_THROW(hle::healthy_life_expectancy(id, hle::HealthMeasure::hh, 100, VectorXd::Unit(2, 0)),
                 hle::DomainError);
}

TEST(HealthExpectancy, LowerSurvivalNeverRaisesLe) {
    const auto base = test::bundled(hle::HealthMeasure::sah, hle::Gender::male);
    const VectorXd mix = VectorXd::Unit(4, 0);
    const double le = hle::healthy_life_expectancy(base, hle::HealthMeasure::sah, 65, mix).le;
    for (int age : {65, 70, 80, 95}) {
        for (Eigen::Index k = 0; k < 4; ++k) {
            auto worse = base;
            worse[static_cast<std::size_t>(age)].col(k) *= 0.95;
            EXPECT_LE(hle::healthy_life_expectancy(worse, hle::HealthMeasure::sah, 65, mix).le,
                      le);
        }
    }
}

TEST(Tensor, LongFormatCsv) {
    std::ostringstream out;
    hle::write_tensor_csv(out, hle::occupancy(test::toy_chain()));
    std::istringstream in(out.str());
    const auto t = hle::csv::read(in);
    EXPECT_EQ(t.header, (std::vector<std::string>{"age", "destination_state", "birth_state", "value"}));
    EXPECT_EQ(t.rows.size(), 16u);
    EXPECT_EQ(t.rows[9][0], "2");
    EXPECT_EQ(t.rows[9][1], "1");
    EXPECT_EQ(t.rows[9][2], "0");
    EXPECT_NEAR(hle::csv::to_double(t.rows[9][3], 0), 0.35, 1e-15);
}

} // namespace
