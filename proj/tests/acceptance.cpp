// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "glbandit/cli.hpp"
#include "glbandit/config.hpp"
#include "glbandit/estimator.hpp"
#include "glbandit/verify.hpp"

using namespace glbandit;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vector rand_ball(std::size_t d, Rng& rng) {
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> u;
    Vector v(static_cast<Eigen::Index>(d));
    for (auto& x : v) x = n(rng);
    return v * (std::pow(u(rng), 1.0 / double(d)) / v.norm());
}

HistoryBuffer rand_history(std::size_t d, std::size_t n, Rng& rng) {
    HistoryBuffer h(d, 1.0);
    std::uniform_real_distribution<double> u;
    for (std::size_t i = 0; i < n; ++i) h.push(rand_ball(d, rng), u(rng));
    return h;
}

std::vector<double> weights_of(std::size_t n, const ForgettingScheme& s) {
    std::vector<double> w(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (s.kind == ForgettingScheme::Kind::discount) w[i] = std::pow(s.gamma, double(n - 1 - i));
        if (s.kind == ForgettingScheme::Kind::window && i + s.tau < n) w[i] = 0.0;
    }
    return w;
}

void figure2_criteria() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = preset("figure2a");
    cfg.n_reps = 100;
    const ResolvedExperiment res = resolve(cfg);
    const BatchResult b = run_batch(res.policies, res.env, cfg.n_reps, cfg.base_seed, default_parallelism());
    const double secs = seconds_since(t0);

    const auto final_mean = [&](const char* n) { return b.at(n).stats.mean.back(); };
    const auto mean_at = [&](const char* n, std::size_t t) { return b.at(n).stats.mean[t - 1]; };
    const double dglm = final_mean("DGlmUcb"), log1 = final_mean("LogUcb1Like"), glm = final_mean("GlmUcbLike"),
                 dglucb = final_mean("DGlucbLike");
    report(1, dglm < log1 && dglm < glm && dglucb > dglm,
           fmt("figure2a, %zu reps, %.0f s: final mean regret DGlmUcb %.1f, LogUcb1Like %.1f, GlmUcbLike %.1f, "
               "DGlucbLike %.1f (need DGlmUcb below all three)",
               cfg.n_reps, secs, dglm, log1, glm, dglucb));

    const double pre_log = mean_at("LogUcb1Like", 4000), pre_dglm = mean_at("DGlmUcb", 4000);
    report(2, pre_log <= pre_dglm,
           fmt("mean regret at t=4000: LogUcb1Like %.2f <= DGlmUcb %.2f", pre_log, pre_dglm));

    std::size_t inside = 0, refined = 0, not_tighter = 0;
    for (const char* n : {"DGlmUcb", "LogUcb1Like"})
        for (const auto& r : b.at(n).reps) {
            inside += r.inside_rounds;
            refined += r.refined_rounds;
            not_tighter += r.refined_not_tighter;
        }
    report(7, not_tighter == 0 && refined > 0,
           fmt("sqrt-scaled policies: %zu rounds with ||theta_hat|| <= S, beta_refined >= beta on %zu of them, "
               "refined bonus applied on %zu rounds",
               inside, not_tighter, refined));
}

void concentration_criterion() {
    const auto reports = run_suite("concentration", 2000, 1);
    bool ok = reports.size() == 4;
    std::string detail;
    for (const auto& r : reports) {
        ok = ok && r.pass;
        detail += fmt("%s rate %.4f (allowed %.4f); ", r.check.c_str(), r.rate, r.allowed_rate);
    }
    report(3, ok, detail);
}

void lemma_criterion() {
    const auto reports = run_suite("lemmas", 10000, 1);
    bool ok = reports.size() == 7;
    std::string detail;
    for (const auto& r : reports) {
        ok = ok && r.pass && r.violations == 0 && r.instances >= 10000;
        detail += fmt("%s %zu/%zu; ", r.check.c_str(), r.violations, r.instances);
    }
    report(4, ok, detail);
}

void estimator_criterion() {
    Rng rng(2024);
    const GlmFamily lin = make_family(Link::linear), logit = make_family(Link::logistic);
    const ForgettingScheme schemes[] = {ForgettingScheme::stationary(), ForgettingScheme::discount(0.95),
                                        ForgettingScheme::window(20)};
    double ridge_err = 0, grad_ratio = 0, warm_err = 0, trunc_err = 0;
    for (int k = 0; k < 100; ++k) {
        const ForgettingScheme& s = schemes[k % 3];
        const std::size_t d = 1 + k % 4;
        const HistoryBuffer h = rand_history(d, 10 + 3 * k, rng);
        const double lambda = 0.2 + 0.03 * k;
        const auto w = weights_of(h.size(), s);
        Matrix A = lambda * Matrix::Identity(long(d), long(d));
        Vector rhs = Vector::Zero(long(d));
        for (std::size_t i = 0; i < h.size(); ++i) {
            A += w[i] * h.action(i) * h.action(i).transpose();
            rhs += w[i] * h.reward(i) * h.action(i);
        }
        const Vector oracle = A.ldlt().solve(rhs);
        ridge_err = std::max(ridge_err, (solve_mle(h, lin, s, lambda, 10.0).theta_hat - oracle).norm() /
                                            std::max(1.0, oracle.norm()));

        const MleSolution sol = solve_mle(h, logit, s, lambda, 6.0);
        grad_ratio = std::max(grad_ratio, sol.grad_norm / (1e-8 * std::max(1.0, rhs.norm())));
        const Vector warm = solve_mle(h, logit, s, lambda, 6.0, Vector(Vector::Random(long(d)) * 10)).theta_hat;
        warm_err = std::max(warm_err, (warm - sol.theta_hat).norm());
    }
    for (double g : {0.5, 0.9, 0.99, 0.999}) {
        const HistoryBuffer h = rand_history(2, 30000, rng);
        HistoryBuffer cut = h;
        truncate_negligible(cut, g, 1e-12);
        const auto s = ForgettingScheme::discount(g);
        trunc_err = std::max(trunc_err, (solve_mle(h, logit, s, 1.0, 6.0).theta_hat -
                                         solve_mle(cut, logit, s, 1.0, 6.0).theta_hat).norm());
    }
    report(5, ridge_err <= 1e-8 && grad_ratio <= 1.0 && warm_err <= 1e-6 && trunc_err <= 1e-6,
           fmt("linear vs weighted ridge %.2e (<=1e-8); grad/tol %.3f (<=1); warm vs cold %.2e (<=1e-6); "
               "truncation %.2e (<=1e-6)",
               ridge_err, grad_ratio, warm_err, trunc_err));
}

void design_criterion() {
    double worst[2] = {0, 0};
    int idx = 0;
    for (const auto& s : {ForgettingScheme::discount(0.97), ForgettingScheme::window(50)}) {
        for (int ep = 0; ep < 5; ++ep) {
            Rng rng(make_stream(7, std::uint64_t(ep), std::uint64_t(idx)));
            const std::size_t d = 2 + ep % 3;
            const double ridge = ep % 2 ? 1.0 : 18.0 / 2.4665e-3;
            HistoryBuffer h(d, 1.0);
            DesignState v(d, ridge);
            for (int t = 0; t < 1000; ++t) {
                const Vector a = rand_ball(d, rng);
                Vector ev;
                const bool evict = s.kind == ForgettingScheme::Kind::window && h.size() >= s.tau;
                if (evict) ev = h.action(h.size() - s.tau);
                h.push(a, 0.0);
                v.update(a, s, evict ? &ev : nullptr);
                worst[idx] = std::max(worst[idx], relative_frobenius(v.matrix(), rebuild_direct(h, s, ridge).matrix()));
            }
        }
        ++idx;
    }
    report(6, worst[0] <= 1e-9 && worst[1] <= 1e-9,
           fmt("max relative Frobenius gap over 1000-step episodes: discount %.2e, window %.2e (<=1e-9)", worst[0],
               worst[1]));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void determinism_criterion() {
    const fs::path root = fs::temp_directory_path() / "glbandit_acceptance";
    fs::remove_all(root);
    std::ostringstream sink;
    bool ok = true;
    for (const char* p : {"1", "8"}) {
        const std::vector<std::string> args{"simulate", "--preset", "figure2a", "--reps", "4", "--seed", "3",
                                            "--parallelism", p, "--out", (root / p).string()};
        ok = ok && run_command(args, sink, sink) == 0;
    }
    std::size_t files = 0;
    if (ok)
        for (const auto& f : fs::directory_iterator(root / "1")) {
            if (f.path().extension() != ".csv") continue;
            ++files;
            ok = ok && slurp(f.path()) == slurp(root / "8" / f.path().filename());
        }
    report(8, ok && files == 8, fmt("%zu csv files compared between parallelism 1 and 8", files));
}

void scaling_criterion() {
    std::vector<double> ratio;
    std::string detail;
    for (const std::size_t T : {2000u, 8000u, 32000u}) {
        ExperimentConfig c = preset("figure2a");
        c.T = T;
        c.segments = sweep_segments(2, T, c.S);
        c.gamma = GammaRule{true, 0.0, 2};
        c.policies.resize(1);  // DGlmUcb
        const ResolvedExperiment res = resolve(c);
        const BatchResult b = run_batch(res.policies, res.env, 50, c.base_seed, default_parallelism());
        ratio.push_back(b.policies[0].stats.mean.back() / double(T));
        detail += fmt("T=%zu gamma=%.6f R_T/T=%.5f; ", T, res.gamma, ratio.back());
    }
    report(9, ratio[0] > ratio[1] && ratio[1] > ratio[2], detail);
}

void optimism_criterion() {
    const ExperimentConfig c = preset("stationary");
    const ResolvedExperiment res = resolve(c);
    const BatchResult b = run_batch(res.policies, res.env, c.n_reps, c.base_seed, default_parallelism());
    std::size_t eligible = 0, violations = 0;
    for (const auto& r : b.policies[0].reps) {
        eligible += r.optimism_eligible;
        violations += r.optimism_violations;
    }
    const double rate = double(violations) / double(std::max<std::size_t>(eligible, 1));
    const double allowed = c.delta + 3.0 * std::sqrt(c.delta / double(std::max<std::size_t>(eligible, 1)));
    report(10, eligible > 0 && rate <= allowed,
           fmt("stationary, bonus_scale %.1f, delta %.2f, %zu reps: %zu/%zu rounds with regret > 2 bonus, rate %.5f "
               "(allowed %.5f)",
               c.bonus_scale, c.delta, c.n_reps, violations, eligible, rate, allowed));
}

}  // namespace

int main() {
    try {
        figure2_criteria();
        concentration_criterion();
        lemma_criterion();
        estimator_criterion();
        design_criterion();
        determinism_criterion();
        scaling_criterion();
        optimism_criterion();
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: %s\n", e.what());
        return 100;
    }
    std::printf("%d criteria failed\n", failures);
    return failures;
}
