#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quboport/market_data.hpp"
#include "quboport/qubo.hpp"
#include "quboport/scoring.hpp"
#include "quboport/solvers.hpp"

namespace quboport {

struct RandomSection {
    long long samples = 100000;
    int pool_keep = 64;
};

struct SaSection {
    int steps = 5000;
    int restarts = 20;
    std::optional<double> initial_temp;  // nullopt = size to the matrix
    std::optional<double> cooling_rate;  // nullopt = decay to 1e-8 over steps
};

struct GaSection {
    int population = 256;
    int generations = 200;
    double elitism_prob = 0.1;
    std::optional<double> mutation_prob;  // nullopt = 1/universe
    int tournament_size = 3;
};

/// Everything one experiment run needs; loadable from a key = value file
/// with [random] / [sa] / [ga] sections.
struct ExperimentConfig {
    std::string prices_path;
    std::string indices_path;   // optional; empty = equal-weight asset proxy
    std::string riskfree_path;  // optional; empty = zero rate
    double alpha = 1.0;
    double m = 5.0;
    double floor = 0.0;
    double clip_threshold = 1e-6;
    int required_days = 253;
    int n_min = 2;
    int n_max = 0;  // 0 = universe size after filtering
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    int workers = 1;
    int brute_max_n = 16;      // run the exhaustive oracle when N fits
    int landscape_max_n = 14;  // emit landscape CSVs when N fits
    bool scale_for_solvers = false;
    int star_pool = 16;
    int star_extras = 2;
    std::size_t star_seed_cap = 1000;
    QuboMode mode = QuboMode::exact_alpha0;
    RandomSection random;
    SaSection sa;
    GaSection ga;

    void validate() const;  // throws ParamOutOfRange / IoError
};

ExperimentConfig load_config(const std::string& path);

struct MethodSummary {
    std::string method;
    std::uint64_t mask = 0;
    int size = 0;
    double energy = 0.0;
    double best_cqns = 0.0;
    double wall_time = 0.0;
    std::uint64_t evaluations = 0;
};

struct SizeCompareRow {
    int size = 0;
    std::string method;
    double best_cqns = 0.0;
    bool baseline_present = false;
    double baseline_mean = 0.0;
    double baseline_best = 0.0;
    bool beats_baseline_mean = false;
};

struct ScoredResult {
    std::string method;
    Portfolio portfolio;
    ScoreSet scores;
};

struct ComparisonReport {
    int universe = 0;
    std::vector<std::string> tickers;
    double g = 0.0;  // preliminary score behind every shift factor
    std::vector<MethodSummary> methods;
    std::vector<SizeCompareRow> by_size;
    std::vector<ScoredResult> frontier;
};

/**
 * Full workflow: ingest, filter, repair, score, build shifted QUBOs,
 * profile landscapes, run every solver, analyze stars, rerun the GA
 * seeded, then write the comparison artifacts into cfg.output_dir.
 *
 * Every output file except timings.json is a pure function of (config,
 * seed). Partially written outputs are removed when a stage fails.
 */
ComparisonReport run_experiment(const ExperimentConfig& cfg);

/// Scatter of candidates for risk/return plotting; one row per result.
void emit_frontier_csv(const std::vector<ScoredResult>& pool,
                       const std::string& path);

/// Per-(size, method) bests against the random-sampling baseline.
std::vector<SizeCompareRow> compare_by_size(const std::vector<SolveResult>& results,
                                            const std::vector<SizeSummary>& baseline);

}  // namespace quboport
