#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "quboport/errors.hpp"
#include "quboport/qubo.hpp"
#include "quboport/scoring.hpp"

namespace quboport {

using MaskObjective = std::function<double(std::uint64_t)>;

/// One solver outcome. energy is the optimized objective value; cqns is
/// the exact score at the configured alpha whenever a rescore hook is
/// available, otherwise it repeats the objective value.
struct SolveResult {
    Portfolio mask;
    double energy = 0.0;
    double cqns = 0.0;
    std::string method;
    double wall_time = 0.0;  // seconds; measurement only, not reproducible
    std::uint64_t evaluations = 0;
};

/// Cross-cutting solver knobs: exact rescoring hook and worker count.
struct SolveContext {
    MaskObjective rescore;  // usually a CqnsEvaluator; may be empty
    int workers = 1;
};

struct BruteForceOptions {
    int hard_cap = 26;         // enumeration refusal point
    bool override_cap = false;
    std::string checkpoint_path;           // empty = no checkpointing
    std::uint64_t checkpoint_every = 1u << 20;  // masks between checkpoint writes
    std::uint64_t stop_after = 0;  // pause after this many masks (0 = run to end)
};

struct BruteForceRun {
    SolveResult best;
    bool completed = true;
    std::uint64_t masks_done = 0;  // cumulative across resumed runs
};

/**
 * Exact minimization over all 2^N - 1 nonempty masks by plain counting;
 * constant memory. Energies are always computed from scratch per mask so
 * an interrupted and resumed run retraces the identical incumbent path.
 * Ties break toward the smaller mask value.
 */
BruteForceRun brute_force(const MaskObjective& objective, int universe,
                          const SolveContext& ctx = {},
                          const BruteForceOptions& opt = {});
BruteForceRun brute_force(const QuboMatrix& q, const SolveContext& ctx = {},
                          const BruteForceOptions& opt = {});

struct SizeSummary {
    int size = 0;
    std::uint64_t count = 0;
    double mean = 0.0;
    double best = 0.0;
    std::uint64_t best_mask = 0;
};

struct RandomSampleOutcome {
    SolveResult best;
    std::vector<SizeSummary> by_size;  // ascending size, only sizes observed
    // Distinct best / worst masks seen, as (value, mask): top ascending by
    // value, bottom descending. Feed these to star_analysis.
    std::vector<std::pair<double, std::uint64_t>> top;
    std::vector<std::pair<double, std::uint64_t>> bottom;
    std::uint64_t samples = 0;
};

/**
 * Uniform sampling over nonempty masks (empty draws are redrawn). Work
 * is split into 64 fixed chunks with independent derived RNG streams and
 * merged in chunk order, so results do not depend on the worker count.
 */
RandomSampleOutcome random_sample(const MaskObjective& objective, int universe,
                                  long long samples, std::uint64_t seed,
                                  const SolveContext& ctx = {}, int pool_keep = 64);

struct SaConfig {
    double initial_temp = 1.0;
    double cooling_rate = 0.999;  // multiplicative, per step
    int steps = 5000;
    int restarts = 20;
    std::uint64_t seed = 0;
};

/// Temperature schedule sized to the matrix: start at twice the largest
/// coefficient magnitude, decay to 1e-8 of it over the step budget.
SaConfig tuned_sa_config(const QuboMatrix& q, int steps = 5000, int restarts = 20,
                         std::uint64_t seed = 0);

/**
 * Single-bit-flip simulated annealing with geometric cooling and
 * incremental delta evaluation. Restarts own independent derived RNG
 * streams; their incumbents merge by (energy, mask). The incumbent only
 * tracks nonempty masks.
 */
SolveResult simulated_anneal(const QuboMatrix& q, const SaConfig& cfg,
                             const SolveContext& ctx = {});

struct GaConfig {
    int population = 256;
    int generations = 200;
    double elitism_prob = 0.1;
    std::optional<double> mutation_prob;  // default 1/universe
    std::vector<std::uint64_t> seeds;
    std::uint64_t seed = 0;
    int tournament_size = 3;
};

/**
 * Genetic search over masks: stochastic rank-ordered elitism, uniform
 * crossover of tournament winners, per-bit mutation. The all-time best
 * individual is re-inserted each generation, so with seeds present the
 * result is never worse than the best seed.
 */
SolveResult genetic(const MaskObjective& objective, int universe,
                    const GaConfig& cfg, const SolveContext& ctx = {});

struct StarEntry {
    int asset = 0;
    double frequency = 0.0;  // fraction of the k-pool containing the asset
};

/// Assets ranked by how often they appear in the best / worst results.
struct StarReport {
    std::vector<StarEntry> all_stars;  // frequency descending, asset ascending
    std::vector<StarEntry> dog_stars;
    int pool_size = 0;  // k
};

/// Frequency analysis over a pool of scored results, ranked by cqns.
/// Only assets with nonzero frequency are listed.
StarReport star_analysis(const std::vector<SolveResult>& pool, int k);

/**
 * Candidate masks built from the top (n - extras) frequent assets plus
 * every combination of `extras` assets drawn from the rest of the
 * universe, skipping assets in the worst-pool list; lexicographic
 * combination order, capped at `cap` masks.
 */
std::vector<std::uint64_t> heuristic_seed(const StarReport& report, int target_size,
                                          int extras, int universe,
                                          std::size_t cap = 1000);

}  // namespace quboport
