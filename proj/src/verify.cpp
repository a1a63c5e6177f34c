#include "glbandit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "glbandit/confidence.hpp"
#include "glbandit/estimator.hpp"

namespace glbandit {

namespace {

constexpr double kSlack = 1e-9;

Vector random_unit(std::size_t d, Rng& rng) {
    std::normal_distribution<double> gauss;
    Vector v(static_cast<Eigen::Index>(d));
    double n = 0.0;
    do {
        for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = gauss(rng);
        n = v.norm();
    } while (n == 0.0);
    return v / n;
}

Vector random_in_ball(std::size_t d, double radius, Rng& rng) {
    std::uniform_real_distribution<double> unif;
    return random_unit(d, rng) * (radius * std::pow(unif(rng), 1.0 / static_cast<double>(d)));
}

/// Unit-sphere, ball, and repeated-action sequences so degenerate designs appear in every battery.
std::vector<Vector> random_actions(std::size_t d, std::size_t n, Rng& rng) {
    std::uniform_int_distribution<int> mode(0, 2);
    const int kind = mode(rng);
    std::vector<Vector> out;
    out.reserve(n);
    const Vector fixed = random_unit(d, rng);
    for (std::size_t i = 0; i < n; ++i) {
        if (kind == 0) out.push_back(random_unit(d, rng));
        else if (kind == 1) out.push_back(random_in_ball(d, 1.0, rng));
        else out.push_back(fixed);
    }
    return out;
}

double log_det_spd(const Matrix& m) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
    return 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

struct Tally {
    VerifyReport report;

    explicit Tally(std::string name) {
        report.check = std::move(name);
        report.worst_margin = std::numeric_limits<double>::infinity();
    }
    // margin >= -tolerance is a pass
    void add(double margin, double tolerance = kSlack) {
        ++report.instances;
        if (!(margin >= -tolerance)) ++report.violations;
        if (!(margin >= report.worst_margin)) report.worst_margin = margin;
    }
    VerifyReport done() {
        if (report.instances == 0) report.worst_margin = 0.0;
        report.pass = report.violations == 0;
        return report;
    }
};

nlohmann::json report_json(const VerifyReport& r) {
    nlohmann::json j = {{"check", r.check},
                        {"instances", r.instances},
                        {"violations", r.violations},
                        {"worst_margin", r.worst_margin},
                        {"pass", r.pass}};
    if (r.allowed_rate > 0.0) {
        j["rate"] = r.rate;
        j["allowed_rate"] = r.allowed_rate;
    }
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

}  // namespace

std::string to_json(const VerifyReport& report) { return report_json(report).dump(2); }

std::string to_json(const std::vector<VerifyReport>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    bool all = true;
    for (const auto& r : reports) {
        arr.push_back(report_json(r));
        all = all && r.pass;
    }
    return nlohmann::json{{"pass", all}, {"reports", arr}}.dump(2);
}

TailEvaluation weighted_tail(const std::vector<Vector>& actions, const std::vector<double>& noise,
                             const std::vector<double>& variance, const std::vector<double>& weights,
                             double lambda_last, double m, double delta) {
    const std::size_t n = actions.size();
    if (noise.size() != n || variance.size() != n || weights.size() != n)
        throw std::invalid_argument("weighted_tail: length mismatch");
    if (!(lambda_last > 0.0) || !(m > 0.0) || !(delta > 0.0 && delta <= 1.0))
        throw std::invalid_argument("weighted_tail: lambda, m must be positive and delta in (0, 1]");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(weights[i] > 0.0)) throw std::invalid_argument("weighted_tail: weights must be positive");
        if (i > 0 && weights[i] < weights[i - 1]) throw std::invalid_argument("weighted_tail: weights must be nondecreasing");
    }
    const std::size_t d = n > 0 ? static_cast<std::size_t>(actions.front().size()) : 1;
    const auto di = static_cast<Eigen::Index>(d);
    // The statistic and the bound are invariant under w -> w / c, lambda -> lambda / c^2; normalise by w_last.
    const double w_last = n > 0 ? weights.back() : 1.0;
    const double lam = lambda_last / (w_last * w_last);
    Vector s = Vector::Zero(di);
    Matrix h = lam * Matrix::Identity(di, di);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights[i] / w_last;
        s.noalias() += (w * noise[i]) * actions[i];
        h.noalias() += (w * w * variance[i]) * (actions[i] * actions[i].transpose());
    }
    Eigen::LLT<Matrix> llt(h);
    TailEvaluation out;
    out.statistic = std::sqrt(std::max(0.0, s.dot(llt.solve(s))));
    const double sl = std::sqrt(lam);
    const double log_ratio = 0.5 * log_det_spd(h) - std::log(delta) - 0.5 * static_cast<double>(d) * std::log(lam);
    out.bound = sl / (2.0 * m) + (2.0 * m / sl) * log_ratio + (2.0 * m / sl) * static_cast<double>(d) * std::log(2.0);
    return out;
}

void ConcentrationTrial::validate() const {
    if (d < 1 || t < 1) throw ConfigError("trial", "d and t must be at least 1");
    if (!(lambda > 0.0) || !(m > 0.0)) throw ConfigError("trial", "lambda and m must be positive");
    if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("trial.delta", "must lie in (0, 1]");
    if (n_trials < 1) throw ConfigError("trial.n_trials", "must be at least 1");
    scheme.validate();
    if (scheme.kind == ForgettingScheme::Kind::none) {
        if (custom_weights.size() != t - 1) throw ConfigError("trial.weights", "need t - 1 weights");
        for (std::size_t i = 0; i < custom_weights.size(); ++i) {
            if (!(custom_weights[i] > 0.0)) throw ConfigError("trial.weights", "weights must be positive");
            if (i > 0 && custom_weights[i] < custom_weights[i - 1])
                throw ConfigError("trial.weights", "weights must be nondecreasing");
        }
    }
}

VerifyReport mc_concentration(const ConcentrationTrial& trial) {
    trial.validate();
    const std::size_t n = trial.t - 1;
    std::size_t first = 0;  // 0-based index of the first included observation
    std::vector<double> weights(n, 1.0);
    std::string label;
    switch (trial.scheme.kind) {
        case ForgettingScheme::Kind::discount: {
            const std::size_t D = trial.lookback == 0 ? n : std::min(trial.lookback, n);
            first = n - D;
            for (std::size_t i = 0; i < n; ++i) weights[i] = std::pow(trial.scheme.gamma, static_cast<double>(n - 1 - i));
            label = "concentration_discount_gamma_" + nlohmann::json(trial.scheme.gamma).dump();
            break;
        }
        case ForgettingScheme::Kind::window:
            first = n > trial.scheme.tau ? n - trial.scheme.tau : 0;
            label = "concentration_window_tau_" + std::to_string(trial.scheme.tau);
            break;
        case ForgettingScheme::Kind::none:
            weights = trial.custom_weights;
            label = "concentration_weighted";
            break;
    }
    weights.erase(weights.begin(), weights.begin() + static_cast<std::ptrdiff_t>(first));

    Tally tally(label);
    std::vector<Vector> actions(n - first);
    std::vector<double> noise(n - first), variance(n - first);
    std::uniform_real_distribution<double> unif;
    for (std::size_t k = 0; k < trial.n_trials; ++k) {
        Rng rng = make_stream(trial.seed, 0x636f6e63, k);
        for (std::size_t i = 0; i < n; ++i) {
            Vector a = random_unit(trial.d, rng);
            const double p = unif(rng);
            const double eps = (unif(rng) < p ? 1.0 : 0.0) - p;
            if (i < first) continue;
            actions[i - first] = std::move(a);
            noise[i - first] = eps * trial.m;
            variance[i - first] = p * (1.0 - p) * trial.m * trial.m;
        }
        const TailEvaluation ev = weighted_tail(actions, noise, variance, weights, trial.lambda, trial.m, trial.delta);
        tally.add(ev.bound - ev.statistic, 0.0);
    }
    VerifyReport r = tally.done();
    const double nt = static_cast<double>(trial.n_trials);
    r.rate = static_cast<double>(r.violations) / nt;
    r.allowed_rate = trial.delta + 3.0 * std::sqrt(trial.delta * (1.0 - trial.delta) / nt);
    r.pass = r.rate <= r.allowed_rate;
    return r;
}

SelfConcordanceValues self_concordance_values(const GlmFamily& family, double z1, double z2) {
    const double gap = std::abs(z1 - z2);
    const double d1 = mean_derivative(family, z1);
    SelfConcordanceValues v;
    v.chord = alpha_slope(family, z1, z2);
    v.lower = gap > 0.0 ? d1 * (-std::expm1(-gap)) / gap : d1;
    v.upper = gap > 0.0 ? d1 * std::expm1(gap) / gap : d1;
    v.alt_lower = d1 / (1.0 + gap);
    return v;
}

VerifyReport check_self_concordance(const GlmFamily& family, const GridSpec& grid) {
    Tally tally("self_concordance_" + std::string(to_string(family.link)));
    auto probe = [&](double z1, double z2) {
        const auto v = self_concordance_values(family, z1, z2);
        // relative slack: the logistic derivative spans nine orders of magnitude on the grid
        const double tol = kSlack * std::max(v.chord, 1e-300);
        const double margin = std::min({v.chord - v.lower, v.upper - v.chord, v.chord - v.alt_lower});
        tally.add(margin, tol);
    };
    const auto steps = static_cast<std::size_t>(std::floor((grid.hi - grid.lo) / grid.step + 0.5));
    const auto psteps = static_cast<std::size_t>(std::floor((grid.hi - grid.lo) / grid.partner_step + 0.5));
    for (std::size_t i = 0; i <= steps; ++i) {
        const double z1 = grid.lo + static_cast<double>(i) * grid.step;
        for (std::size_t j = 0; j <= psteps; ++j) probe(z1, grid.lo + static_cast<double>(j) * grid.partner_step);
        probe(z1, z1);
    }
    Rng rng = make_stream(grid.seed, 0x7363);
    std::uniform_real_distribution<double> z(grid.lo, grid.hi);
    for (std::size_t k = 0; k < grid.random_pairs; ++k) {
        const double z1 = z(rng);
        probe(z1, z(rng));
    }
    VerifyReport r = tally.done();
    if (family.link == Link::linear) r.note = "second derivative is zero; all three sides coincide";
    return r;
}

VerifyReport check_matrix_domination(const GlmFamily& family, double S, std::size_t n_instances, std::uint64_t seed) {
    Tally tally("matrix_domination_S_" + nlohmann::json(S).dump());
    Rng rng = make_stream(seed, 0x6d64);
    std::uniform_int_distribution<std::size_t> dim(1, 4), len(0, 100), win(1, 60);
    std::uniform_real_distribution<double> unif;
    const double factor = 1.0 / (1.0 + 2.0 * S);
    for (std::size_t k = 0; k < n_instances; ++k) {
        const std::size_t d = dim(rng);
        const auto di = static_cast<Eigen::Index>(d);
        const std::size_t n = len(rng);
        const auto actions = random_actions(d, n, rng);
        const double lambda = 0.1 + 9.9 * unif(rng);
        const bool discount = k % 2 == 0;
        const double gamma = 0.5 + 0.499 * unif(rng);
        const std::size_t tau = win(rng);
        Vector th1 = random_in_ball(d, S, rng);
        Vector th2 = random_in_ball(d, S, rng);
        if (k % 7 == 0) th2 = th1;
        if (k % 5 == 0) th1 = random_unit(d, rng) * S;  // boundary
        Matrix G = lambda * Matrix::Identity(di, di);
        Matrix H1 = G, H2 = G;
        const std::size_t first = (!discount && n > tau) ? n - tau : 0;
        for (std::size_t i = first; i < n; ++i) {
            const double w = discount ? std::pow(gamma, 2.0 * static_cast<double>(n - 1 - i)) : 1.0;
            const Vector& a = actions[i];
            const double z1 = a.dot(th1), z2 = a.dot(th2);
            const Matrix aa = a * a.transpose();
            G.noalias() += (w * alpha_slope(family, z1, z2)) * aa;
            H1.noalias() += (w * mean_derivative(family, z1)) * aa;
            H2.noalias() += (w * mean_derivative(family, z2)) * aa;
        }
        for (const Matrix* H : {&H1, &H2}) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(G - factor * (*H), Eigen::EigenvaluesOnly);
            tally.add(es.eigenvalues().minCoeff());
        }
    }
    return tally.done();
}

VerifyReport check_determinant_bounds(std::size_t n_instances, std::uint64_t seed) {
    Tally tally("determinant_bounds");
    Rng rng = make_stream(seed, 0x6465);
    std::uniform_int_distribution<std::size_t> dim(1, 5), len(1, 300), win(1, 100);
    std::uniform_real_distribution<double> unif;
    for (std::size_t k = 0; k < n_instances; ++k) {
        const std::size_t d = dim(rng);
        const auto di = static_cast<Eigen::Index>(d);
        const double dd = static_cast<double>(d);
        const std::size_t t = len(rng);
        const std::size_t n = t - 1;  // observations s = 1..t-1
        const auto actions = random_actions(d, n, rng);
        const double k_mu = 0.05 + 0.95 * unif(rng);
        std::vector<double> sigma2(n);
        for (auto& s : sigma2) s = (k % 11 == 0) ? k_mu : k_mu * unif(rng);
        const double lambda = 0.1 + 9.9 * unif(rng);
        const double gamma = 0.5 + 0.499 * unif(rng);
        Matrix M = Matrix::Zero(di, di);
        double bound_log = 0.0;
        switch (k % 4) {
            case 0: {  // general weights with lambda_{t-1}
                std::vector<double> w(t);
                double acc = 0.1 + unif(rng);
                for (auto& x : w) {
                    x = acc;
                    acc += unif(rng);
                }
                double sum_w2 = 0.0;
                for (const double x : w) sum_w2 += x * x;
                for (std::size_t i = 0; i < n; ++i) M.noalias() += (w[i] * w[i] * sigma2[i]) * (actions[i] * actions[i].transpose());
                M.diagonal().array() += lambda;
                bound_log = dd * std::log(lambda + k_mu * sum_w2 / dd);
                break;
            }
            case 1: {  // squared discount weights over the last t0 observations
                const std::size_t t0 = std::uniform_int_distribution<std::size_t>(0, n)(rng);
                for (std::size_t i = n - t0; i < n; ++i)
                    M.noalias() += (std::pow(gamma, 2.0 * static_cast<double>(n - 1 - i)) * sigma2[i]) *
                                   (actions[i] * actions[i].transpose());
                M.diagonal().array() += lambda;
                bound_log = dd * std::log(lambda + k_mu * (1.0 - std::pow(gamma, 2.0 * static_cast<double>(t0))) /
                                                       (dd * (1.0 - gamma * gamma)));
                break;
            }
            case 2: {  // discounted design matrix
                for (std::size_t i = 0; i < n; ++i)
                    M.noalias() += std::pow(gamma, static_cast<double>(n - 1 - i)) * (actions[i] * actions[i].transpose());
                M.diagonal().array() += lambda;
                bound_log = dd * std::log(lambda + (1.0 - std::pow(gamma, static_cast<double>(t - 1))) / (dd * (1.0 - gamma)));
                break;
            }
            default: {  // sliding window
                const std::size_t tau = win(rng);
                const std::size_t first = n > tau ? n - tau : 0;
                for (std::size_t i = first; i < n; ++i) M.noalias() += sigma2[i] * (actions[i] * actions[i].transpose());
                M.diagonal().array() += lambda;
                bound_log = dd * std::log(lambda + k_mu * static_cast<double>(std::min(t, tau)) / dd);
                break;
            }
        }
        tally.add(bound_log - log_det_spd(M));
    }
    return tally.done();
}

EllipticalSides elliptical_sides(const std::vector<Vector>& actions, const ForgettingScheme& scheme, double lambda) {
    if (scheme.kind == ForgettingScheme::Kind::none) throw std::invalid_argument("elliptical_sides: needs forgetting");
    scheme.validate();
    const std::size_t T = actions.size();
    const std::size_t d = T > 0 ? static_cast<std::size_t>(actions.front().size()) : 1;
    const double dd = static_cast<double>(d);
    DesignState V(d, lambda);
    double lhs = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        lhs += V.inv_norm_squared(actions[t]);
        const Vector* evicted = nullptr;
        if (scheme.kind == ForgettingScheme::Kind::window && t >= scheme.tau) evicted = &actions[t - scheme.tau];
        V.update(actions[t], scheme, evicted);
    }
    const double c = 2.0 * std::max(1.0, 1.0 / lambda);
    double rhs = 0.0;
    if (scheme.kind == ForgettingScheme::Kind::discount) {
        rhs = c * (V.log_det() - dd * std::log(lambda) - dd * static_cast<double>(T) * std::log(scheme.gamma));
    } else {
        const double blocks = std::ceil(static_cast<double>(T) / static_cast<double>(scheme.tau));
        rhs = c * dd * blocks * std::log1p(static_cast<double>(scheme.tau) / (lambda * dd));
    }
    return {lhs, rhs};
}

VerifyReport check_elliptical(ForgettingScheme::Kind scheme, std::size_t n_instances, std::uint64_t seed) {
    const bool discount = scheme == ForgettingScheme::Kind::discount;
    Tally tally(discount ? "elliptical_discount" : "elliptical_window");
    Rng rng = make_stream(seed, discount ? 0x656c64 : 0x656c77);
    std::uniform_int_distribution<std::size_t> dim(1, 5), len(0, 200), win(1, 50), pick(0, 2);
    constexpr double lambdas[] = {0.1, 1.0, 10.0};
    constexpr double gammas[] = {0.8, 0.9, 0.99};
    for (std::size_t k = 0; k < n_instances; ++k) {
        const std::size_t d = dim(rng);
        const auto actions = random_actions(d, len(rng), rng);
        const double lambda = lambdas[pick(rng)];
        const ForgettingScheme fs = discount ? ForgettingScheme::discount(gammas[pick(rng)]) : ForgettingScheme::window(win(rng));
        const auto sides = elliptical_sides(actions, fs, lambda);
        tally.add(sides.rhs - sides.lhs);
    }
    return tally.done();
}

VerifyReport check_deviation_chain(std::size_t n_stretches, std::uint64_t seed) {
    Tally tally("deviation_chain");
    const GlmFamily fam = make_family(Link::logistic);
    constexpr std::size_t d = 2, horizon = 300, every = 25;
    constexpr double S = 3.0, lambda = 1.0, gamma = 0.99, delta = 0.05;
    ModelBounds bounds = make_bounds(fam, S, lambda);
    bounds.k_mu = 0.25;
    const ConfidenceParams conf = make_confidence(fam, bounds, horizon, d, delta, ForgettingScheme::discount(gamma));
    const double r = rho(conf, horizon);
    const double bound = std::sqrt(1.0 + s_bar(conf)) * r + r * r / std::sqrt(lambda);
    const auto scheme = ForgettingScheme::discount(gamma);
    std::size_t failures = 0;
    for (std::size_t k = 0; k < n_stretches; ++k) {
        Rng rng = make_stream(seed, 0x6463, k);
        const Vector theta_star = random_in_ball(d, S, rng);
        HistoryBuffer hist(d, 1.0);
        Rng reward_rng = make_stream(seed, 0x646372, k);
        std::optional<Vector> warm;
        for (std::size_t t = 1; t <= horizon; ++t) {
            if (t > 1 && (t - 1) % every == 0) {
                const MleSolution sol = solve_mle(hist, fam, scheme, lambda, S, warm);
                warm = sol.theta_hat;
                const std::size_t n = hist.size();
                Vector diff = lambda * (sol.theta_hat - theta_star);
                Matrix G = lambda * Matrix::Identity(d, d);
                for (std::size_t i = 0; i < n; ++i) {
                    const double w = std::pow(gamma, static_cast<double>(n - 1 - i));
                    const auto a = hist.action(i);
                    const double zh = a.dot(sol.theta_hat), zs = a.dot(theta_star);
                    diff.noalias() += (w * (mean(fam, zh) - mean(fam, zs))) * a;
                    G.noalias() += (w * w * alpha_slope(fam, zh, zs)) * (a * a.transpose());
                }
                const double lhs = std::sqrt(diff.dot(G.llt().solve(diff)));
                ++tally.report.instances;
                if (!(lhs <= bound)) ++failures;
                tally.report.worst_margin = std::min(tally.report.worst_margin, bound - lhs);
            }
            const Vector a = random_unit(d, rng);
            hist.push(a, sample_reward(fam, a.dot(theta_star), reward_rng));
        }
    }
    VerifyReport rep = tally.report;
    rep.violations = failures;
    rep.rate = rep.instances ? static_cast<double>(failures) / static_cast<double>(rep.instances) : 0.0;
    rep.allowed_rate = delta;
    rep.pass = rep.rate <= delta;
    rep.note = "bound " + nlohmann::json(bound).dump();
    return rep;
}

VerifyReport check_deviation_quadratic(std::size_t n_instances, std::uint64_t seed) {
    Tally tally("deviation_quadratic");
    Rng rng = make_stream(seed, 0x7175);
    std::uniform_real_distribution<double> unif;
    for (std::size_t k = 0; k < n_instances; ++k) {
        const double A = (k % 13 == 0) ? 0.0 : std::pow(10.0, -3.0 + 6.0 * unif(rng));
        const double B = (k % 17 == 0) ? 0.0 : std::pow(10.0, -3.0 + 6.0 * unif(rng));
        const double x = solve_deviation_quadratic(A, B);
        const double residual = std::abs(x * x - A * x - B) / std::max({1.0, x * x, B});
        const double cap = A + std::sqrt(B);
        const double margin = std::min({cap - x + 1e-12 * std::max(1.0, cap), 1e-9 - residual, x});
        tally.add(margin, 0.0);
    }
    return tally.done();
}

std::vector<VerifyReport> run_suite(const std::string& suite, std::size_t trials, std::uint64_t seed) {
    std::vector<VerifyReport> out;
    const bool all = suite == "all";
    if (!all && suite != "lemmas" && suite != "concentration" && suite != "deviation")
        throw ConfigError("suite", "unknown suite '" + suite + "' (lemmas, concentration, deviation, all)");
    if (all || suite == "lemmas") {
        GridSpec grid;
        grid.random_pairs = std::max<std::size_t>(trials, 1);
        grid.seed = seed;
        for (const Link l : {Link::logistic, Link::poisson, Link::linear})
            out.push_back(check_self_concordance(make_family(l, 10.0), grid));
        out.push_back(check_matrix_domination(make_family(Link::logistic), 6.0, trials, seed));
        out.push_back(check_determinant_bounds(trials, seed));
        out.push_back(check_elliptical(ForgettingScheme::Kind::discount, trials, seed));
        out.push_back(check_elliptical(ForgettingScheme::Kind::window, trials, seed));
    }
    if (all || suite == "concentration") {
        ConcentrationTrial trial;
        trial.n_trials = trials;
        trial.seed = seed;
        for (const double g : {0.9, 0.99}) {
            trial.scheme = ForgettingScheme::discount(g);
            out.push_back(mc_concentration(trial));
        }
        for (const std::size_t tau : {30u, 100u}) {
            trial.scheme = ForgettingScheme::window(tau);
            out.push_back(mc_concentration(trial));
        }
    }
    if (all || suite == "deviation") {
        out.push_back(check_deviation_chain(std::max<std::size_t>(trials / 50, 4), seed));
        out.push_back(check_deviation_quadratic(std::max<std::size_t>(trials, 10000), seed));
    }
    return out;
}

}  // namespace glbandit
