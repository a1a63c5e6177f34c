#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "glbandit/environment.hpp"
#include "glbandit/policy.hpp"

namespace glbandit {

/// A policy with every constant resolved, ready to instantiate.
struct PolicySpec {
    PolicyConfig policy;
    ModelBounds bounds;
    ConfidenceParams conf;

    std::string name() const { return policy.name(); }
};

struct RoundRecord {
    std::size_t t = 0;
    std::size_t chosen_index = 0;
    double inst_regret = 0.0;
    double cum_regret = 0.0;
    double bonus = 0.0;
    double mle_norm = 0.0;
    bool inside_theta = true;
    bool optimism_violation = false;  // inst_regret > 2 bonus on an eligible round
    bool optimism_eligible = false;   // at least D rounds after the latest breakpoint
    bool used_refined = false;
    double beta = 0.0;
    double beta_refined = 0.0;

    bool operator==(const RoundRecord&) const = default;
};

struct TraceMetadata {
    std::string policy;
    std::uint64_t seed = 0;
    std::string config_hash;
};

struct RegretTrace {
    TraceMetadata meta;
    std::vector<RoundRecord> rounds;

    double total_regret() const noexcept { return rounds.empty() ? 0.0 : rounds.back().cum_regret; }
};

/// Lookback after a breakpoint before optimism is assessed: ceil(log T / log(1/gamma)) for a discount,
/// tau for a window, 0 without forgetting.
std::size_t optimism_lookback(const ForgettingScheme& scheme, std::size_t T);

/// Raised when a replication fails; carries the replication seed and the round (0 when not in a round).
class EpisodeError : public std::runtime_error {
public:
    EpisodeError(const std::string& what, std::uint64_t seed, std::size_t round)
        : std::runtime_error(what), seed_(seed), round_(round) {}
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t round() const noexcept { return round_; }

private:
    std::uint64_t seed_;
    std::size_t round_;
};

/// Runs one policy for spec.T rounds against the realisation `seed` of the environment.
RegretTrace run_episode(const PolicySpec& spec, const EnvironmentSpec& env, std::uint64_t seed);

struct AggregateStats {
    std::vector<double> mean;  // per round, cumulative regret
    std::vector<double> q25;
    std::vector<double> q75;
    std::size_t n_reps = 0;

    bool operator==(const AggregateStats&) const = default;
};

/// Per-replication totals of the trace diagnostics.
struct RepSummary {
    std::uint64_t seed = 0;
    double final_regret = 0.0;
    std::size_t inside_rounds = 0;
    std::size_t refined_rounds = 0;             // rounds where the refined bonus was applied
    std::size_t refined_not_tighter = 0;        // inside rounds where beta_refined >= beta
    std::size_t optimism_eligible = 0;
    std::size_t optimism_violations = 0;
};

struct PolicyResult {
    std::string name;
    AggregateStats stats;
    std::vector<RepSummary> reps;  // replication order
    RegretTrace first_trace;       // trace of replication 0
};

struct BatchResult {
    std::vector<PolicyResult> policies;  // same order as the input specs

    const PolicyResult& at(const std::string& name) const;
};

/// Replication r uses seed base_seed + r for the environment; every policy sees the same realisation.
/// Aggregation folds replications in index order whatever the thread count.
BatchResult run_batch(const std::vector<PolicySpec>& policies, const EnvironmentSpec& env, std::size_t n_reps,
                      std::uint64_t base_seed, std::size_t parallelism);

/// Linear-interpolation quantile of an unsorted sample.
double quantile(std::vector<double> values, double q);

/// Default thread count: GLB_PARALLELISM if set and positive, else the hardware concurrency.
std::size_t default_parallelism();

enum class ExportFormat { csv, json, svg_plot_data };

/// Trace csv: t,inst_regret,cum_regret,bonus,mle_norm,inside_theta,optimism_violation,chosen_index,used_refined.
void export_trace(const RegretTrace& trace, const std::string& path, ExportFormat format);
RegretTrace import_trace_csv(const std::string& path);

/// Stats csv: t,mean,q25,q75,n_reps.
void export_stats(const AggregateStats& stats, const std::string& path, ExportFormat format,
                  const std::string& title = "");
AggregateStats import_stats_csv(const std::string& path);

/// Several policies on one chart: mean polylines and q25..q75 bands, with axis ticks.
void export_svg(const std::vector<std::pair<std::string, AggregateStats>>& curves, const std::string& path,
                const std::string& title, std::size_t breakpoint = 0);

}  // namespace glbandit
