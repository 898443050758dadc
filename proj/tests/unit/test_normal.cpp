#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace {

TEST(NormalCdf, FrozenHighPrecisionValues) {
    EXPECT_NEAR(hle::standard_normal_cdf(0.0), 0.5, 1e-16);
    EXPECT_NEAR(hle::standard_normal_cdf(1.959963985), 0.9750000000268815622991789, 1e-15);
    const double tail = hle::standard_normal_cdf(-8.0);
    EXPECT_NEAR(tail / 6.220960574271784123515995e-16, 1.0, 1e-12);
}

TEST(NormalCdf, MatchesReferenceGrid) {
    std::ifstream in(test::data_dir() / "normal_cdf_reference.csv");
    ASSERT_TRUE(in);
    const auto t = hle::csv::read(in);
    ASSERT_EQ(t.rows.size(), 1000u);
    double worst = 0.0;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const double x = hle::csv::to_double(t.rows[r][0], r);
        const double ref = hle::csv::to_double(t.rows[r][1], r);
        worst = std::max(worst, std::abs(hle::standard_normal_cdf(x) - ref));
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(NormalCdf, Symmetry) {
    for (double x = -8.0; x <= 8.0; x += 0.0137) {
        EXPECT_NEAR(hle::standard_normal_cdf(x) + hle::standard_normal_cdf(-x), 1.0, 1e-12) << x;
    }
}

TEST(NormalCdf, MonotoneAndBounded) {
    double prev = 0.0;
    for (double x = -40.0; x <= 40.0; x += 0.05) {
        const double p = hle::standard_normal_cdf(x);
        EXPECT_GE(p, prev);
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
        prev = p;
    }
}

TEST(NormalCdf, RejectsNonFinite) {
    EXPECT_THROW(hle::standard_normal_cdf(std::numeric_limits<double>::quiet_NaN()),
                 hle::DomainError);
    EXPECT_THROW(hle::standard_normal_cdf(std::numeric_limits<double>::infinity()),
                 hle::DomainError);
}

TEST(NormalInterval, UpperTailKeepsPrecision) {
    const double inf = std::numeric_limits<double>::infinity();
    // 1 - Phi(8) computed as a difference would be 0.
    EXPECT_NEAR(hle::standard_normal_interval(8.0, inf) / 6.220960574271784123515995e-16, 1.0,
                1e-12);
    EXPECT_DOUBLE_EQ(hle::standard_normal_interval(-inf, inf), 1.0);
    EXPECT_NEAR(hle::standard_normal_interval(-1.0, 1.0), 0.682689492137085897, 1e-15);
}

TEST(NormalInterval, RejectsReversedBounds) {
    EXPECT_THROW(hle::standard_normal_interval(1.0, 0.0), hle::DomainError);
}

} // namespace
