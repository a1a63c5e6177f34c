#include <gtest/gtest.h>

#include <cmath>

#include "glbandit/design.hpp"
#include "test_util.hpp"

using namespace glbandit;
using glbandit::testing::random_ball;
using glbandit::testing::random_spd;
using glbandit::testing::unit;

TEST(History, PushAndOrder) {
    HistoryBuffer h(2, 1.0);
    EXPECT_TRUE(h.empty());
    h.push(unit(2, 0), 1.0);
    EXPECT_EQ(h.size(), 1u);
    h.push(unit(2, 1), 0.25);
    EXPECT_EQ(h.action(0), unit(2, 0));
    EXPECT_EQ(h.action(1), unit(2, 1));
    EXPECT_EQ(h.reward(1), 0.25);
    EXPECT_EQ(h.total_pushed(), 2u);
}

TEST(History, RejectsInvalidEntries) {
    HistoryBuffer h(2, 1.0);
    EXPECT_NO_THROW(h.push(unit(2, 0), 1.0));  // r = m is inside
    EXPECT_NO_THROW(h.push(unit(2, 0), 0.0));
    EXPECT_THROW(h.push(unit(2, 0), 1.0 + 1e-9), std::invalid_argument);
    EXPECT_THROW(h.push(unit(2, 0), -1e-9), std::invalid_argument);
    EXPECT_THROW(h.push(Vector::Constant(2, 0.8), 0.5), std::invalid_argument);
    EXPECT_THROW(h.push(unit(3, 0), 0.5), std::invalid_argument);
    EXPECT_THROW(HistoryBuffer(0, 1.0), std::invalid_argument);
}

TEST(History, DropFrontKeepsOrderAcrossCompaction) {
    HistoryBuffer h(1, 10.0);
    for (int i = 0; i < 10000; ++i) h.push(Vector::Constant(1, 0.5), (i % 100) / 10.0);
    h.drop_front(9000);
    EXPECT_EQ(h.size(), 1000u);
    EXPECT_EQ(h.origin_index(), 9000u);
    EXPECT_EQ(h.total_pushed(), 10000u);
    for (std::size_t i = 0; i < h.size(); ++i) EXPECT_EQ(h.reward(i), ((9000 + i) % 100) / 10.0);
    h.drop_front(5000);
    EXPECT_TRUE(h.empty());
}

TEST(Scheme, Validation) {
    EXPECT_THROW(ForgettingScheme::discount(1.0).validate(), std::invalid_argument);
    EXPECT_THROW(ForgettingScheme::discount(0.0).validate(), std::invalid_argument);
    EXPECT_THROW(ForgettingScheme::window(0).validate(), std::invalid_argument);
    EXPECT_NO_THROW(ForgettingScheme::stationary().validate());
    EXPECT_EQ(ForgettingScheme::window(7).describe(), "window(7)");
}

TEST(Design, DiscountSingleUpdate) {
    DesignState v(2, 2.0);
    v.update(unit(2, 0), ForgettingScheme::discount(0.5));
    EXPECT_NEAR(v.matrix()(0, 0), 3.0, 1e-15);
    EXPECT_NEAR(v.matrix()(1, 1), 2.0, 1e-15);
    EXPECT_NEAR(v.matrix()(0, 1), 0.0, 1e-15);
}

TEST(Design, WindowEvictionCancelsInsertion) {
    const double ridge = 1.5;
    const auto w = ForgettingScheme::window(1);
    DesignState v(2, ridge);
    v.update(unit(2, 0), w);
    const Vector e1 = unit(2, 0);
    v.update(unit(2, 1), w, &e1);
    Matrix expected = ridge * Matrix::Identity(2, 2);
    expected(1, 1) += 1.0;
    EXPECT_LT((v.matrix() - expected).norm(), 1e-15);
}

TEST(Design, WindowRequiresEvictionOnlyWhenFull) {
    const auto w = ForgettingScheme::window(2);
    DesignState v(2, 1.0);
    const Vector e1 = unit(2, 0);
    EXPECT_THROW(v.update(e1, w, &e1), std::invalid_argument);
    v.update(e1, w);
    v.update(e1, w);
    EXPECT_THROW(v.update(e1, w), std::invalid_argument);
    EXPECT_NO_THROW(v.update(e1, w, &e1));
}

TEST(Design, ZeroActionStationaryIsIdentity) {
    DesignState v(3, 4.0);
    const Matrix before = v.matrix();
    v.update(Vector::Zero(3), ForgettingScheme::stationary());
    EXPECT_EQ(v.matrix(), before);
}

TEST(Design, RejectsLongActions) {
    DesignState v(2, 1.0);
    EXPECT_THROW(v.update(Vector::Constant(2, 1.0), ForgettingScheme::stationary()), std::invalid_argument);
    EXPECT_THROW(DesignState(2, 0.0), std::invalid_argument);
}

TEST(InvNorm, Examples) {
    DesignState v(2, 1.0);
    EXPECT_DOUBLE_EQ(v.inv_norm(unit(2, 0)), 1.0);
    Matrix m(2, 2);
    m << 4, 0, 0, 1;
    v.assign(m, 0, 0);
    Vector a(2);
    a << 2, 0;
    EXPECT_NEAR(v.inv_norm(a), 1.0, 1e-15);
}

TEST(InvNorm, ExplicitInverseOracle) {
    Rng rng(21);
    for (int rep = 0; rep < 50; ++rep) {
        DesignState v(5, 1.0);
        const Matrix m = random_spd(5, rng);
        v.assign(m, 0, 0);
        const Vector a = Vector::Random(5);
        const double oracle = std::sqrt(a.dot(m.inverse() * a));
        EXPECT_NEAR(v.inv_norm(a), oracle, 1e-10 * std::max(1.0, oracle));
    }
}

TEST(LogDet, Examples) {
    DesignState v(3, 1.0);
    EXPECT_NEAR(v.log_det(), 0.0, 1e-15);
    DesignState w(2, 1.0);
    Matrix m(2, 2);
    m << 2, 0, 0, 1;
    w.assign(m, 0, 0);
    EXPECT_NEAR(w.log_det(), std::log(2.0), 1e-15);
}

TEST(LogDet, EigenvalueOracle) {
    Rng rng(22);
    for (int rep = 0; rep < 50; ++rep) {
        const Matrix m = random_spd(4, rng);
        DesignState v(4, 1.0);
        v.assign(m, 0, 0);
        Eigen::SelfAdjointEigenSolver<Matrix> es(m);
        EXPECT_NEAR(v.log_det(), es.eigenvalues().array().log().sum(), 1e-9);
    }
}

TEST(Rebuild, Examples) {
    HistoryBuffer h(2, 1.0);
    EXPECT_EQ(rebuild_direct(h, ForgettingScheme::discount(0.9), 3.0).matrix(), 3.0 * Matrix::Identity(2, 2));
    h.push(unit(2, 0), 1.0);
    const Matrix v = rebuild_direct(h, ForgettingScheme::discount(0.9), 1.0).matrix();
    EXPECT_NEAR(v(0, 0), 2.0, 1e-15);
    EXPECT_NEAR(v(1, 1), 1.0, 1e-15);
}

namespace {

void check_recursion(const ForgettingScheme& scheme, std::size_t d, std::size_t steps, double ridge, std::uint64_t seed) {
    Rng rng(seed);
    HistoryBuffer h(d, 1.0);
    DesignState v(d, ridge);
    double worst = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        const Vector a = random_ball(d, rng);
        Vector evicted;
        const bool evict = scheme.kind == ForgettingScheme::Kind::window && h.size() >= scheme.tau;
        if (evict) evicted = h.action(h.size() - scheme.tau);
        h.push(a, 0.5);
        v.update(a, scheme, evict ? &evicted : nullptr);
        const DesignState direct = rebuild_direct(h, scheme, ridge);
        worst = std::max(worst, relative_frobenius(v.matrix(), direct.matrix()));
        // Smallest eigenvalue never drops below the ridge.
        ASSERT_GE(v.min_eigenvalue(), ridge - 1e-9 * std::max(1.0, ridge));
    }
    EXPECT_LE(worst, 1e-9) << scheme.describe();
}

}  // namespace

TEST(Rebuild, RecursionMatchesDirectDiscount) {
    check_recursion(ForgettingScheme::discount(0.95), 3, 100, 1.0, 1);
    check_recursion(ForgettingScheme::discount(0.9975), 2, 1000, 18.0 / 2.4665e-3, 2);
    check_recursion(ForgettingScheme::discount(0.5), 4, 1000, 0.1, 3);
}

TEST(Rebuild, RecursionMatchesDirectWindow) {
    check_recursion(ForgettingScheme::window(1), 2, 200, 1.0, 4);
    check_recursion(ForgettingScheme::window(30), 3, 1000, 0.5, 5);
    check_recursion(ForgettingScheme::window(400), 2, 1000, 7300.0, 6);
}

TEST(Rebuild, RecursionMatchesDirectStationary) { check_recursion(ForgettingScheme::stationary(), 3, 1000, 2.0, 7); }
