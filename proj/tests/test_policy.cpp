#include <gtest/gtest.h>

#include <cmath>
#include <deque>

#include "glbandit/policy.hpp"
#include "test_util.hpp"

using namespace glbandit;
using glbandit::testing::random_ball;
using glbandit::testing::random_unit;
using glbandit::testing::unit;

namespace {

const GlmFamily logit = make_family(Link::logistic);
const GlmFamily lin = make_family(Link::linear);

ForgettingScheme scheme_for(PolicyKind k, std::size_t tau = 20) {
    switch (required_scheme(k)) {
        case ForgettingScheme::Kind::discount: return ForgettingScheme::discount(0.98);
        case ForgettingScheme::Kind::window: return ForgettingScheme::window(tau);
        default: return ForgettingScheme::stationary();
    }
}

struct Fixture {
    GlmFamily family;
    ModelBounds bounds;
    ConfidenceParams conf;
};

Fixture setup(PolicyKind k, const GlmFamily& f = logit, double S = 3.0, double lambda = 2.0, double scale = 1.0,
            std::size_t tau = 20) {
    Fixture s{f, make_bounds(f, S, lambda), {}};
    s.conf = make_confidence(f, s.bounds, 1000, 2, 0.05, scheme_for(k, tau), scale);
    return s;
}

std::unique_ptr<Policy> policy(PolicyKind k, const Fixture& s, bool refined = true) {
    PolicyConfig cfg;
    cfg.kind = k;
    cfg.refined_bonus = refined;
    return make_policy(cfg, s.family, s.bounds, s.conf, 1);
}

std::vector<Vector> sphere_actions(std::size_t n, Rng& rng) {
    std::vector<Vector> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(random_unit(2, rng));
    return out;
}

const PolicyKind glb_kinds[] = {PolicyKind::DGlmUcb, PolicyKind::SwGlmUcb, PolicyKind::LogUcb1Like,
                                PolicyKind::GlmUcbLike, PolicyKind::DGlucbLike};

/// Minimiser of (theta - t0)^T Q (theta - t0) over ||theta|| <= S from the KKT system (Q + nu I) theta = Q t0.
Vector convex_projection_oracle(const Matrix& Q, const Vector& t0, double S) {
    if (t0.norm() <= S) return t0;
    const auto sol = [&](double nu) -> Vector {
        return (Q + nu * Matrix::Identity(Q.rows(), Q.cols())).ldlt().solve(Q * t0);
    };
    double lo = 0.0, hi = 1.0;
    while (sol(hi).norm() > S) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (sol(mid).norm() > S ? lo : hi) = mid;
    }
    return sol(hi);
}

}  // namespace

TEST(PolicyKind, NamesRoundTrip) {
    for (auto k : {PolicyKind::DGlmUcb, PolicyKind::SwGlmUcb, PolicyKind::LogUcb1Like, PolicyKind::GlmUcbLike,
                   PolicyKind::DGlucbLike, PolicyKind::KArmSwUcb, PolicyKind::Random, PolicyKind::OracleGreedy})
        EXPECT_EQ(policy_kind_from_string(to_string(k)), k);
    EXPECT_THROW(policy_kind_from_string("UCB"), ConfigError);
}

TEST(Policy, Initialisation) {
    for (auto k : glb_kinds) {
        const Fixture s = setup(k);
        const auto p = policy(k, s);
        EXPECT_EQ(p->theta_hat(), Vector::Zero(2));
        ASSERT_NE(p->design(), nullptr);
        const double ridge = s.bounds.lambda / s.bounds.c_mu;
        EXPECT_LT((p->design()->matrix() - ridge * Matrix::Identity(2, 2)).norm(), 1e-12) << to_string(k);
    }
    const auto r = policy(PolicyKind::Random, setup(PolicyKind::Random));
    EXPECT_EQ(r->design(), nullptr);
    const auto karm = policy(PolicyKind::KArmSwUcb, setup(PolicyKind::KArmSwUcb));
    EXPECT_TRUE(karm->karm_counts().empty());
}

TEST(Policy, SchemeMismatchRejected) {
    Fixture s = setup(PolicyKind::DGlmUcb);
    s.conf.scheme = ForgettingScheme::stationary();
    EXPECT_THROW(policy(PolicyKind::DGlmUcb, s), ConfigError);
}

TEST(Policy, BonusDominanceAndTieRule) {
    const Fixture s = setup(PolicyKind::LogUcb1Like, lin, 3.0, 1.0);  // c = 1, so V = I
    auto p = policy(PolicyKind::LogUcb1Like, s);
    const std::vector<Vector> two{Vector::Zero(2), unit(2, 0)};
    EXPECT_EQ(p->select_action(two), 1u);
    const std::vector<Vector> tie{unit(2, 0), Vector::Zero(2), unit(2, 0)};
    EXPECT_EQ(p->select_action(tie), 0u);
}

TEST(Policy, ObserveLinearRidge) {
    const Fixture s = setup(PolicyKind::LogUcb1Like, lin, 3.0, 1.0);
    auto p = policy(PolicyKind::LogUcb1Like, s);
    p->observe(unit(2, 0), 1.0);
    EXPECT_EQ(p->rounds(), 1u);
    EXPECT_EQ(p->tracker()->history().size(), 1u);
    EXPECT_NEAR(p->theta_hat()(0), 0.5, 1e-12);
    EXPECT_NEAR(p->theta_hat()(1), 0.0, 1e-12);
}

TEST(Policy, WindowHoldsLastTau) {
    const Fixture s = setup(PolicyKind::SwGlmUcb, logit, 3.0, 2.0, 1.0, 3);
    auto p = policy(PolicyKind::SwGlmUcb, s);
    for (int i = 0; i < 4; ++i) p->observe(unit(2, i % 2), 1.0);
    EXPECT_EQ(p->tracker()->history().size(), 3u);
    EXPECT_EQ(p->design()->window_fill(), 3u);
}

TEST(Policy, DesignMatchesDirectRebuild) {
    for (auto k : glb_kinds) {
        const Fixture s = setup(k);
        auto p = policy(k, s);
        Rng rng(2);
        std::uniform_int_distribution<int> coin(0, 1);
        double worst = 0.0;
        for (int t = 0; t < 1500; ++t) {
            const auto acts = sphere_actions(5, rng);
            const std::size_t i = p->select_action(acts);
            p->observe(acts[i], coin(rng));
            const DesignState direct = rebuild_direct(p->tracker()->history(), s.conf.scheme, p->design()->ridge());
            worst = std::max(worst, relative_frobenius(p->design()->matrix(), direct.matrix()));
        }
        EXPECT_LE(worst, 1e-9) << to_string(k);
    }
}

TEST(Policy, BonusFormsAndRefinedSwitch) {
    for (auto k : glb_kinds) {
        const Fixture s = setup(k, logit, 3.0, 2.0, 0.2);
        auto p = policy(k, s);
        Rng rng(3);
        std::uniform_int_distribution<int> coin(0, 1);
        std::size_t used = 0;
        for (int t = 0; t < 300; ++t) {
            const auto acts = sphere_actions(8, rng);
            const DesignState v = *p->design();
            const std::size_t i = p->select_action(acts);
            const Selection& sel = p->last_selection();
            const std::size_t round = p->rounds() + 1;
            const double r = rho(s.conf, round);
            double expected;
            if (k == PolicyKind::GlmUcbLike || k == PolicyKind::DGlucbLike) {
                expected = 0.2 * s.bounds.k_mu * r / s.bounds.c_mu * v.inv_norm(acts[i]);
                EXPECT_FALSE(sel.used_refined);
            } else {
                const bool inside = p->theta_hat().norm() <= s.bounds.S;
                const double b = beta(s.conf, round);
                const double br = beta_refined(s.conf, round);
                EXPECT_EQ(sel.used_refined, inside && br < b);
                expected = bonus(s.conf, sel.used_refined ? br : b, v, acts[i]);
                used += sel.used_refined;
            }
            EXPECT_NEAR(sel.bonus, expected, 1e-12 * std::max(1.0, expected)) << to_string(k);
            // upper confidence index of the choice is maximal
            const double ci = mean(logit, acts[i].dot(p->theta_hat())) + sel.bonus;
            for (const auto& a : acts) {
                const double coef = sel.bonus / v.inv_norm(acts[i]);
                EXPECT_LE(mean(logit, a.dot(p->theta_hat())) + coef * v.inv_norm(a), ci + 1e-12);
            }
            p->observe(acts[i], coin(rng));
        }
        if (k == PolicyKind::DGlmUcb || k == PolicyKind::LogUcb1Like) EXPECT_GT(used, 0u);
    }
}

TEST(Policy, RandomIsUniform) {
    auto p = policy(PolicyKind::Random, setup(PolicyKind::Random));
    Rng rng(4);
    const auto acts = sphere_actions(4, rng);
    std::vector<int> counts(4, 0);
    const int n = 40000;
    for (int t = 0; t < n; ++t) {
        ++counts[p->select_action(acts)];
        p->observe(acts[0], 0.0);
    }
    for (int c : counts) EXPECT_NEAR(c, n / 4.0, 4 * std::sqrt(n * 0.25 * 0.75));
}

TEST(Policy, OracleGreedyNeedsThetaStar) {
    auto p = policy(PolicyKind::OracleGreedy, setup(PolicyKind::OracleGreedy));
    const std::vector<Vector> acts{unit(2, 0), unit(2, 1)};
    EXPECT_THROW(p->select_action(acts), std::logic_error);
    Vector th(2);
    th << -1, 2;
    p->set_theta_star(th);
    EXPECT_EQ(p->select_action(acts), 1u);
}

TEST(KArm, SingleArmAndBruteForceIndex) {
    const std::size_t tau = 15;
    const Fixture s = setup(PolicyKind::KArmSwUcb, logit, 3.0, 2.0, 1.0, tau);
    PolicyConfig one_cfg;
    one_cfg.kind = PolicyKind::KArmSwUcb;
    auto one = make_policy(one_cfg, s.family, s.bounds, s.conf, 1);
    const std::vector<Vector> single{unit(2, 0)};
    for (int t = 0; t < 30; ++t) {
        EXPECT_EQ(one->select_action(single), 0u);
        one->observe(single[0], 1.0);
    }

    PolicyConfig cfg;
    cfg.kind = PolicyKind::KArmSwUcb;
    cfg.xi = 0.6;
    cfg.karm_B = 1.0;
    auto p = make_policy(cfg, s.family, s.bounds, s.conf, 1);
    Rng rng(5);
    const auto arms = sphere_actions(4, rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::deque<std::pair<std::size_t, double>> log;
    for (int t = 0; t < 200; ++t) {
        const std::size_t i = p->select_action(arms);
        // brute force over the stored log
        double best = -1;
        std::size_t arg = 0;
        for (std::size_t k = 0; k < arms.size(); ++k) {
            double n = 0, sum = 0;
            for (const auto& [arm, r] : log)
                if (arm == k) n += 1, sum += r;
            const double idx = n == 0 ? std::numeric_limits<double>::infinity()
                                      : sum / n + std::sqrt(0.6 * std::log(std::min<double>(t + 1, tau)) / n);
            if (idx > best) best = idx, arg = k;
        }
        ASSERT_EQ(i, arg) << "t=" << t;
        const double r = u(rng) < 0.3 + 0.1 * double(i) ? 1.0 : 0.0;
        p->observe(arms[i], r);
        log.emplace_back(i, r);
        if (log.size() > tau) log.pop_front();
        std::size_t total = 0;
        for (auto c : p->karm_counts()) total += c;
        EXPECT_EQ(total, log.size());
    }
}

TEST(Projection, InsideReturnsThetaHat) {
    Rng rng(6);
    HistoryBuffer h(2, 1.0);
    DesignState v(2, 1.0);
    Vector th(2);
    th << 0.3, -0.2;
    EXPECT_EQ(project_to_theta(h, {}, logit, v, th, 1.0, rng), th);
}

TEST(Projection, EmptyHistoryRescalesRadially) {
    Rng rng(7);
    HistoryBuffer h(2, 1.0);
    DesignState v(2, 1.0);
    Vector th(2);
    th << 3.0, 4.0;
    const Vector p = project_to_theta(h, {}, logit, v, th, 2.0, rng);
    EXPECT_LT((p - th * 0.4).norm(), 1e-12);
}

TEST(Projection, LinearMatchesConvexOracle) {
    Rng rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t d = 2 + rep % 2;
        HistoryBuffer h(d, 1.0);
        DesignState v(d, 0.5);
        for (int i = 0; i < 6; ++i) {
            const Vector a = random_ball(d, rng);
            h.push(a, 0.5);
            v.update(a, ForgettingScheme::stationary());
        }
        const std::vector<double> w(h.size(), 1.0);
        Matrix M = Matrix::Zero(long(d), long(d));
        for (std::size_t i = 0; i < h.size(); ++i) M += h.action(i) * h.action(i).transpose();
        const Matrix Q = M * v.matrix().inverse() * M;
        const Vector th = random_unit(d, rng) * 5.0;
        const Vector got = project_to_theta(h, w, lin, v, th, 1.5, rng);
        const Vector want = convex_projection_oracle(Q, th, 1.5);
        EXPECT_LE(got.norm(), 1.5 + 1e-12);
        EXPECT_LE((got - want).norm(), 1e-4) << rep;
    }
}
