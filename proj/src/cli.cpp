#include "glbandit/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "glbandit/config.hpp"
#include "glbandit/harness.hpp"
#include "glbandit/verify.hpp"

namespace glbandit {

namespace {

namespace fs = std::filesystem;

struct RunOptions {
    std::string preset;
    std::string config;
    std::size_t reps = 0;
    long long seed = -1;
    std::string out;
    std::size_t parallelism = 0;
    std::size_t horizon = 0;
};

ExperimentConfig load_experiment(const RunOptions& o) {
    if (o.preset.empty() == o.config.empty()) throw ConfigError("", "give exactly one of --preset or --config");
    ExperimentConfig c = o.preset.empty() ? load_config(o.config) : preset(o.preset);
    if (o.reps > 0) c.n_reps = o.reps;
    if (o.seed >= 0) c.base_seed = static_cast<std::uint64_t>(o.seed);
    if (!o.out.empty()) c.output_dir = o.out;
    if (o.parallelism > 0) c.parallelism = o.parallelism;
    if (o.horizon > 0) c.T = o.horizon;
    return c;
}

std::size_t effective_parallelism(const ExperimentConfig& c) {
    return c.parallelism > 0 ? c.parallelism : default_parallelism();
}

std::string safe_name(const std::string& s) {
    std::string out;
    for (const char ch : s) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') ? ch : '_';
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw std::runtime_error("write to " + path.string() + " failed");
}

nlohmann::json policy_summary(const PolicyResult& p, const PolicySpec& spec) {
    double refined = 0, inside = 0, not_tighter = 0, eligible = 0, violations = 0;
    for (const auto& r : p.reps) {
        refined += static_cast<double>(r.refined_rounds);
        inside += static_cast<double>(r.inside_rounds);
        not_tighter += static_cast<double>(r.refined_not_tighter);
        eligible += static_cast<double>(r.optimism_eligible);
        violations += static_cast<double>(r.optimism_violations);
    }
    const std::size_t T = p.stats.mean.size();
    return {{"policy", p.name},
            {"kind", std::string(to_string(spec.policy.kind))},
            {"scheme", spec.conf.scheme.describe()},
            {"bonus_scale", spec.conf.bonus_scale},
            {"refined_bonus", spec.policy.refined_bonus},
            {"projection", spec.policy.projection},
            {"mean_final_regret", T ? p.stats.mean.back() : 0.0},
            {"q25_final_regret", T ? p.stats.q25.back() : 0.0},
            {"q75_final_regret", T ? p.stats.q75.back() : 0.0},
            {"refined_rounds", refined},
            {"inside_rounds", inside},
            {"refined_not_tighter_rounds", not_tighter},
            {"optimism_eligible_rounds", eligible},
            {"optimism_violations", violations}};
}

int cmd_simulate(const RunOptions& o, std::ostream& out) {
    const ExperimentConfig cfg = load_experiment(o);
    const ResolvedExperiment res = resolve(cfg);
    const std::string hash = config_hash(cfg);
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);

    const BatchResult batch = run_batch(res.policies, res.env, cfg.n_reps, cfg.base_seed, effective_parallelism(cfg));

    nlohmann::json meta = {{"config_hash", hash},
                           {"config", nlohmann::json::parse(to_json_string(cfg))},
                           {"lambda", res.lambda},
                           {"reps", cfg.n_reps},
                           {"base_seed", cfg.base_seed},
                           {"seeds", "replication r uses base_seed + r; all policies share each environment realisation"},
                           {"common_random_numbers", true}};
    if (res.gamma > 0.0) meta["gamma"] = res.gamma;
    if (res.tau > 0) meta["tau"] = res.tau;
    meta.erase("parallelism");
    meta["config"].erase("parallelism");
    meta["config"].erase("output_dir");
    nlohmann::json summaries = nlohmann::json::array();
    std::vector<std::pair<std::string, AggregateStats>> curves;
    for (std::size_t i = 0; i < batch.policies.size(); ++i) {
        const PolicyResult& p = batch.policies[i];
        const std::string base = safe_name(p.name);
        export_stats(p.stats, (dir / (base + "_stats.csv")).string(), ExportFormat::csv, p.name);
        if (cfg.write_traces) {
            RegretTrace tr = p.first_trace;
            tr.meta.config_hash = hash;
            export_trace(tr, (dir / (base + "_trace.csv")).string(), ExportFormat::csv);
        }
        summaries.push_back(policy_summary(p, res.policies[i]));
        curves.emplace_back(p.name, p.stats);
    }
    meta["policies"] = summaries;
    write_text(dir / "metadata.json", meta.dump(2) + "\n");
    const std::size_t bp = res.env.segments.size() > 1 ? res.env.segments[1].start : 0;
    export_svg(curves, (dir / "regret.svg").string(), cfg.name.empty() ? "regret" : cfg.name, bp);

    char line[256];
    std::snprintf(line, sizeof line, "%-20s %14s %14s %14s\n", "policy", "mean_regret", "q25", "q75");
    out << line;
    for (const auto& s : summaries) {
        std::snprintf(line, sizeof line, "%-20s %14.4f %14.4f %14.4f\n", s["policy"].get<std::string>().c_str(),
                      s["mean_final_regret"].get<double>(), s["q25_final_regret"].get<double>(),
                      s["q75_final_regret"].get<double>());
        out << line;
    }
    out << "config hash " << hash << ", outputs in " << dir.string() << "\n";
    return 0;
}

int cmd_verify(const std::string& suite, std::size_t trials, std::uint64_t seed, const std::string& out_path,
               std::ostream& out) {
    const auto reports = run_suite(suite, trials, seed);
    const std::string text = to_json(reports) + "\n";
    if (!out_path.empty()) {
        const fs::path p(out_path);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        write_text(p, text);
    }
    out << text;
    for (const auto& r : reports)
        if (!r.pass) return 1;
    return 0;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

int cmd_sweep(const RunOptions& o, const std::string& horizons, const std::string& breakpoints,
              const std::string& gammas, const std::string& taus, std::ostream& out) {
    ExperimentConfig base = load_experiment(o);
    const fs::path dir(base.output_dir);
    fs::create_directories(dir);
    std::ofstream csv(dir / "sweep.csv", std::ios::binary | std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot open " + (dir / "sweep.csv").string());
    csv << "T,breakpoints,gamma,tau,policy,mean_final,mean_final_over_T,q25_final,q75_final,n_reps\n";
    auto parse_size = [](const std::string& s, const char* what) {
        try {
            std::size_t pos = 0;
            const unsigned long long v = std::stoull(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw ConfigError(what, "bad integer '" + s + "'");
        }
    };
    char line[256];
    std::snprintf(line, sizeof line, "%8s %4s %10s %6s %-16s %14s %12s\n", "T", "G", "gamma", "tau", "policy", "mean_R_T",
                  "R_T/T");
    out << line;
    for (const auto& hs : split_list(horizons)) {
        const std::size_t T = parse_size(hs, "--horizons");
        for (const auto& bs : split_list(breakpoints)) {
            const std::size_t G = parse_size(bs, "--breakpoints");
            for (const auto& gs : split_list(gammas)) {
                for (const auto& ts : split_list(taus)) {
                    ExperimentConfig c = base;
                    c.T = T;
                    c.segments = sweep_segments(G, T, c.S);
                    if (gs == "theorem") {
                        c.gamma = GammaRule{true, 0.0, std::max<std::size_t>(G, 1)};
                    } else {
                        c.gamma = GammaRule{false, std::stod(gs), std::nullopt};
                    }
                    if (ts == "theorem") {
                        c.tau = TauRule{true, 0, std::max<std::size_t>(G, 1)};
                    } else {
                        c.tau = TauRule{false, parse_size(ts, "--taus"), std::nullopt};
                    }
                    for (auto& p : c.policies) {
                        p.gamma.reset();
                        p.tau.reset();
                    }
                    const ResolvedExperiment res = resolve(c);
                    const BatchResult b = run_batch(res.policies, res.env, c.n_reps, c.base_seed, effective_parallelism(c));
                    for (const auto& p : b.policies) {
                        const double m = p.stats.mean.back();
                        char cell[128];
                        csv << T << ',' << G << ',';
                        std::snprintf(cell, sizeof cell, "%.17g", res.gamma);
                        csv << cell << ',' << res.tau << ',' << p.name << ',';
                        std::snprintf(cell, sizeof cell, "%.17g,%.17g,%.17g,%.17g", m, m / static_cast<double>(T),
                                      p.stats.q25.back(), p.stats.q75.back());
                        csv << cell << ',' << p.stats.n_reps << '\n';
                        std::snprintf(line, sizeof line, "%8zu %4zu %10.6f %6zu %-16s %14.4f %12.6f\n", T, G, res.gamma,
                                      res.tau, p.name.c_str(), m, m / static_cast<double>(T));
                        out << line;
                    }
                }
            }
        }
    }
    if (!csv) throw std::runtime_error("write to sweep.csv failed");
    return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulation and verification toolkit for non-stationary GLM bandits", "glbandit"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    RunOptions sim;
    auto add_run_flags = [](CLI::App* sub, RunOptions& o) {
        sub->add_option("--preset", o.preset, "built-in configuration name");
        sub->add_option("--config", o.config, "experiment config file (json)");
        sub->add_option("--reps", o.reps, "number of replications");
        sub->add_option("--seed", o.seed, "base seed");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--parallelism", o.parallelism, "worker threads (default: GLB_PARALLELISM or all cores)");
        sub->add_option("--horizon", o.horizon, "override the horizon T");
    };
    CLI::App* simulate = app.add_subcommand("simulate", "run a replicated batch and export regret curves");
    add_run_flags(simulate, sim);

    std::string suite = "all";
    std::size_t trials = 10000;
    long long vseed = 1;
    std::string vout;
    CLI::App* verify = app.add_subcommand("verify", "run numerical verification suites");
    verify->add_option("--suite", suite, "lemmas, concentration, deviation or all");
    verify->add_option("--trials", trials, "instances per lemma check / Monte Carlo trials");
    verify->add_option("--seed", vseed, "seed");
    verify->add_option("--out", vout, "write the json report to this file");

    RunOptions sw;
    std::string horizons = "2000,8000,32000", breakpoints = "2", gammas = "theorem", taus = "theorem";
    CLI::App* sweep = app.add_subcommand("sweep", "grid over horizon, forgetting and breakpoints");
    add_run_flags(sweep, sw);
    sweep->add_option("--horizons", horizons, "comma-separated horizons");
    sweep->add_option("--breakpoints", breakpoints, "comma-separated breakpoint counts");
    sweep->add_option("--gammas", gammas, "comma-separated discount factors or 'theorem'");
    sweep->add_option("--taus", taus, "comma-separated window lengths or 'theorem'");

    std::string dump;
    CLI::App* presets = app.add_subcommand("presets", "list or print built-in configurations");
    presets->add_option("--dump", dump, "print the named preset as json");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*simulate) return cmd_simulate(sim, out);
        if (*verify) return cmd_verify(suite, trials, static_cast<std::uint64_t>(vseed), vout, out);
        if (*sweep) return cmd_sweep(sw, horizons, breakpoints, gammas, taus, out);
        if (*presets) {
            if (!dump.empty()) {
                out << to_json_string(preset(dump));
            } else {
                for (const auto& n : preset_names()) out << n << "\n";
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const EpisodeError& e) {
        err << "run failed (seed " << e.seed() << ", round " << e.round() << "): " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

int run_command(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_command(args, std::cout, std::cerr);
}

}  // namespace glbandit
