#include "quboport/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "quboport/csv.hpp"
#include "quboport/parallel.hpp"
#include "quboport/rng.hpp"

namespace quboport {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_universe(int universe) {
    if (universe < 1 || universe > 64)
        throw ParamOutOfRange("universe must be in [1, 64], got " +
                              std::to_string(universe));
}

SolveResult finish_result(std::uint64_t mask, int universe, double energy,
                          std::string method, std::uint64_t evaluations,
                          double wall_time, const SolveContext& ctx) {
    SolveResult r;
    r.mask = Portfolio::from_mask(mask, universe);
    r.energy = energy;
    r.cqns = ctx.rescore ? ctx.rescore(mask) : energy;
    r.method = std::move(method);
    r.wall_time = wall_time;
    r.evaluations = evaluations;
    return r;
}

bool better(double e, std::uint64_t mask, double best_e, std::uint64_t best_mask) {
    return e < best_e || (e == best_e && mask < best_mask);
}

struct Checkpoint {
    std::uint64_t index = 0;
    std::uint64_t mask = 0;
    double energy = 0.0;
};

std::optional<Checkpoint> read_checkpoint(const std::string& path, int universe) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::string index_text, mask_hex, energy_text;
    if (!(in >> index_text >> mask_hex >> energy_text))
        throw MalformedData(path + ": bad checkpoint line");
    Checkpoint cp;
    try {
        cp.index = std::stoull(index_text);
    } catch (const std::exception&) {
        throw MalformedData(path + ": bad checkpoint index");
    }
    cp.mask = Portfolio::from_hex(mask_hex, universe).mask;
    cp.energy = parse_cell(energy_text, path + " checkpoint energy");
    return cp;
}

void write_checkpoint(const std::string& path, std::uint64_t index,
                      std::uint64_t mask, double energy) {
    char mask_hex[24];
    std::snprintf(mask_hex, sizeof(mask_hex), "%llx",
                  static_cast<unsigned long long>(mask));
    write_file_atomic(path, std::to_string(index) + " " + mask_hex + " " +
                                fmt_g17(energy) + "\n");
}

template <class Eval>
BruteForceRun brute_core(Eval&& eval, int universe, const SolveContext& ctx,
                         const BruteForceOptions& opt) {
    check_universe(universe);
    if (universe > opt.hard_cap && !opt.override_cap)
        throw BudgetExceeded("universe " + std::to_string(universe) +
                             " exceeds enumeration cap " + std::to_string(opt.hard_cap));

    const std::uint64_t last =
        universe >= 64 ? ~std::uint64_t(0) : (std::uint64_t(1) << universe) - 1;

    std::uint64_t start_index = 0;
    double best_e = std::numeric_limits<double>::infinity();
    std::uint64_t best_mask = 0;
    if (!opt.checkpoint_path.empty()) {
        if (auto cp = read_checkpoint(opt.checkpoint_path, universe)) {
            if (cp->index > last)
                throw MalformedData("checkpoint index beyond enumeration range");
            start_index = cp->index;
            best_mask = cp->mask;
            best_e = cp->energy;
        }
    }

    const auto t0 = Clock::now();
    std::uint64_t k = start_index;
    bool completed = true;
    while (k < last) {
        ++k;
        const std::uint64_t mask = k;  // plain counting order
        const double e = eval(mask);
        if (better(e, mask, best_e, best_mask)) {
            best_e = e;
            best_mask = mask;
        }
        if (!opt.checkpoint_path.empty() && opt.checkpoint_every > 0 &&
            k % opt.checkpoint_every == 0 && k != last) {
            write_checkpoint(opt.checkpoint_path, k, best_mask, best_e);
        }
        if (opt.stop_after > 0 && k >= opt.stop_after && k != last) {
            completed = false;
            if (!opt.checkpoint_path.empty())
                write_checkpoint(opt.checkpoint_path, k, best_mask, best_e);
            break;
        }
    }
    if (completed && !opt.checkpoint_path.empty())
        write_checkpoint(opt.checkpoint_path, k, best_mask, best_e);

    BruteForceRun run;
    run.completed = completed;
    run.masks_done = k;
    run.best = finish_result(best_mask, universe, best_e, "brute", k,
                             seconds_since(t0), ctx);
    return run;
}

}  // namespace

BruteForceRun brute_force(const MaskObjective& objective, int universe,
                          const SolveContext& ctx, const BruteForceOptions& opt) {
    if (!objective) throw ParamOutOfRange("objective is empty");
    return brute_core([&](std::uint64_t m) { return objective(m); }, universe, ctx,
                      opt);
}

BruteForceRun brute_force(const QuboMatrix& q, const SolveContext& ctx,
                          const BruteForceOptions& opt) {
    return brute_core([&](std::uint64_t m) { return qubo_energy(q, m); },
                      q.universe(), ctx, opt);
}

namespace {

constexpr int kSampleChunks = 64;

struct ChunkAccum {
    // indexed by portfolio size 1..N
    std::vector<std::uint64_t> count;
    std::vector<double> sum;
    std::vector<double> best;
    std::vector<std::uint64_t> best_mask;
    std::vector<std::pair<double, std::uint64_t>> top;
    std::vector<std::pair<double, std::uint64_t>> bottom;
};

}  // namespace

RandomSampleOutcome random_sample(const MaskObjective& objective, int universe,
                                  long long samples, std::uint64_t seed,
                                  const SolveContext& ctx, int pool_keep) {
    check_universe(universe);
    if (!objective) throw ParamOutOfRange("objective is empty");
    if (samples < 1) throw ParamOutOfRange("samples must be >= 1");
    if (pool_keep < 1) throw ParamOutOfRange("pool_keep must be >= 1");

    const auto t0 = Clock::now();
    std::vector<ChunkAccum> chunks(kSampleChunks);

    // Fixed chunk count with per-chunk derived streams: the draw sequence
    // is a function of (seed, chunk) alone, so any worker count produces
    // the same outcome.
    parallel_for_index(kSampleChunks, ctx.workers, [&](int c) {
        const long long base = samples / kSampleChunks;
        const long long mine = base + (c < samples % kSampleChunks ? 1 : 0);
        if (mine == 0) return;

        ChunkAccum& acc = chunks[c];
        acc.count.assign(universe + 1, 0);
        acc.sum.assign(universe + 1, 0.0);
        acc.best.assign(universe + 1, std::numeric_limits<double>::infinity());
        acc.best_mask.assign(universe + 1, 0);

        auto gen = make_engine(derive_seed(seed, std::uint64_t(c)));
        std::vector<std::pair<double, std::uint64_t>> drawn;
        drawn.reserve(mine);
        for (long long s = 0; s < mine; ++s) {
            const std::uint64_t mask = random_nonempty_mask(gen, universe);
            const double v = objective(mask);
            const int size = __builtin_popcountll(mask);
            acc.count[size]++;
            acc.sum[size] += v;
            if (better(v, mask, acc.best[size], acc.best_mask[size])) {
                acc.best[size] = v;
                acc.best_mask[size] = mask;
            }
            drawn.emplace_back(v, mask);
        }

        std::sort(drawn.begin(), drawn.end());
        const std::size_t keep = std::min<std::size_t>(pool_keep, drawn.size());
        acc.top.assign(drawn.begin(), drawn.begin() + keep);
        acc.bottom.assign(drawn.end() - keep, drawn.end());
    });

    RandomSampleOutcome out;
    out.samples = std::uint64_t(samples);

    std::vector<std::uint64_t> count(universe + 1, 0);
    std::vector<double> sum(universe + 1, 0.0);
    std::vector<double> best(universe + 1, std::numeric_limits<double>::infinity());
    std::vector<std::uint64_t> best_mask(universe + 1, 0);
    std::vector<std::pair<double, std::uint64_t>> top_all, bottom_all;
    for (const ChunkAccum& acc : chunks) {
        if (acc.count.empty()) continue;
        for (int n = 1; n <= universe; ++n) {
            count[n] += acc.count[n];
            sum[n] += acc.sum[n];
            if (acc.count[n] > 0 &&
                better(acc.best[n], acc.best_mask[n], best[n], best_mask[n])) {
                best[n] = acc.best[n];
                best_mask[n] = acc.best_mask[n];
            }
        }
        top_all.insert(top_all.end(), acc.top.begin(), acc.top.end());
        bottom_all.insert(bottom_all.end(), acc.bottom.begin(), acc.bottom.end());
    }

    double global_best = std::numeric_limits<double>::infinity();
    std::uint64_t global_mask = 0;
    for (int n = 1; n <= universe; ++n) {
        if (count[n] == 0) continue;
        out.by_size.push_back(
            {n, count[n], sum[n] / double(count[n]), best[n], best_mask[n]});
        if (better(best[n], best_mask[n], global_best, global_mask)) {
            global_best = best[n];
            global_mask = best_mask[n];
        }
    }

    auto dedupe_masks = [](std::vector<std::pair<double, std::uint64_t>>& pool) {
        pool.erase(std::unique(pool.begin(), pool.end(),
                               [](const auto& a, const auto& b) {
                                   return a.second == b.second;
                               }),
                   pool.end());
    };
    std::sort(top_all.begin(), top_all.end());
    dedupe_masks(top_all);
    if (top_all.size() > std::size_t(pool_keep)) top_all.resize(pool_keep);
    std::sort(bottom_all.begin(), bottom_all.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    dedupe_masks(bottom_all);
    if (bottom_all.size() > std::size_t(pool_keep)) bottom_all.resize(pool_keep);
    out.top = std::move(top_all);
    out.bottom = std::move(bottom_all);

    out.best = finish_result(global_mask, universe, global_best, "random",
                             std::uint64_t(samples), seconds_since(t0), ctx);
    return out;
}

SaConfig tuned_sa_config(const QuboMatrix& q, int steps, int restarts,
                         std::uint64_t seed) {
    SaConfig cfg;
    const double scale = q.max_abs_coeff();
    cfg.initial_temp = scale > 0.0 ? 2.0 * scale : 1.0;
    cfg.cooling_rate = std::pow(1e-8, 1.0 / double(std::max(1, steps)));
    cfg.steps = steps;
    cfg.restarts = restarts;
    cfg.seed = seed;
    return cfg;
}

SolveResult simulated_anneal(const QuboMatrix& q, const SaConfig& cfg,
                             const SolveContext& ctx) {
    const int N = q.universe();
    check_universe(N);
    if (cfg.initial_temp < 0.0) throw ParamOutOfRange("initial_temp must be >= 0");
    if (!(cfg.cooling_rate > 0.0 && cfg.cooling_rate < 1.0))
        throw ParamOutOfRange("cooling_rate must lie in (0, 1)");
    if (cfg.steps < 1) throw ParamOutOfRange("steps must be >= 1");
    if (cfg.restarts < 1) throw ParamOutOfRange("restarts must be >= 1");

    const auto t0 = Clock::now();
    std::vector<std::pair<double, std::uint64_t>> incumbents(cfg.restarts);

    parallel_for_index(cfg.restarts, ctx.workers, [&](int r) {
        auto gen = make_engine(derive_seed(cfg.seed, std::uint64_t(r)));
        std::uint64_t mask = random_nonempty_mask(gen, N);
        double energy = qubo_energy(q, mask);
        double best_e = energy;
        std::uint64_t best_mask = mask;
        double temp = cfg.initial_temp;

        for (int step = 0; step < cfg.steps; ++step) {
            const int i = int(bounded(gen, std::uint64_t(N)));
            const bool in = (mask >> i) & 1u;
            // One row scan gives the energy change of flipping bit i.
            double around = q.coeffs(i, i);
            for (std::uint64_t rest = mask & ~(std::uint64_t(1) << i); rest;
                 rest &= rest - 1) {
                around += q.pair_coeff(i, __builtin_ctzll(rest));
            }
            const double delta = in ? -around : around;
            bool accept = delta <= 0.0;
            if (!accept && temp > 0.0)
                accept = uniform01(gen) < std::exp(-delta / temp);
            if (accept) {
                mask ^= std::uint64_t(1) << i;
                energy += delta;
                if (mask != 0 && better(energy, mask, best_e, best_mask)) {
                    best_e = energy;
                    best_mask = mask;
                }
            }
            temp *= cfg.cooling_rate;
        }
        // Report a from-scratch energy so accumulated increments never
        // leak into the merged comparison.
        incumbents[r] = {qubo_energy(q, best_mask), best_mask};
    });

    double best_e = std::numeric_limits<double>::infinity();
    std::uint64_t best_mask = 0;
    for (const auto& [e, mask] : incumbents)
        if (better(e, mask, best_e, best_mask)) {
            best_e = e;
            best_mask = mask;
        }

    return finish_result(best_mask, N, best_e, "sa",
                         std::uint64_t(cfg.restarts) * std::uint64_t(cfg.steps),
                         seconds_since(t0), ctx);
}

SolveResult genetic(const MaskObjective& objective, int universe,
                    const GaConfig& cfg, const SolveContext& ctx) {
    check_universe(universe);
    if (!objective) throw ParamOutOfRange("objective is empty");
    if (cfg.population < 2) throw ParamOutOfRange("population must be >= 2");
    if (cfg.generations < 0) throw ParamOutOfRange("generations must be >= 0");
    if (!(cfg.elitism_prob >= 0.0 && cfg.elitism_prob <= 1.0))
        throw ParamOutOfRange("elitism_prob must lie in [0, 1]");
    const double mutation_prob = cfg.mutation_prob.value_or(1.0 / double(universe));
    if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0))
        throw ParamOutOfRange("mutation_prob must lie in [0, 1]");
    if (cfg.tournament_size < 1) throw ParamOutOfRange("tournament_size must be >= 1");

    const auto t0 = Clock::now();
    const std::uint64_t universe_mask =
        universe >= 64 ? ~std::uint64_t(0) : (std::uint64_t(1) << universe) - 1;
    auto gen = make_engine(cfg.seed);
    std::uint64_t evaluations = 0;

    auto evaluate = [&](const std::vector<std::uint64_t>& pop,
                        std::vector<double>& fit) {
        fit.resize(pop.size());
        parallel_for_index(int(pop.size()), ctx.workers,
                           [&](int i) { fit[i] = objective(pop[i]); });
        evaluations += pop.size();
    };

    std::vector<std::uint64_t> population;
    population.reserve(cfg.population);
    for (std::uint64_t s : cfg.seeds) {
        if (s == 0) throw DomainError("seed mask is empty");
        if ((s & ~universe_mask) != 0)
            throw DomainError("seed mask has bits outside the universe");
        population.push_back(s);
    }
    if (int(population.size()) > cfg.population) {
        // Too many seeds for the population: keep the strongest.
        std::vector<double> seed_fit;
        evaluate(population, seed_fit);
        std::vector<int> order(population.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return seed_fit[a] != seed_fit[b] ? seed_fit[a] < seed_fit[b]
                                              : population[a] < population[b];
        });
        std::vector<std::uint64_t> trimmed;
        trimmed.reserve(cfg.population);
        for (int i = 0; i < cfg.population; ++i) trimmed.push_back(population[order[i]]);
        population = std::move(trimmed);
    }
    while (int(population.size()) < cfg.population)
        population.push_back(random_nonempty_mask(gen, universe));

    std::vector<double> fitness;
    evaluate(population, fitness);

    double best_e = std::numeric_limits<double>::infinity();
    std::uint64_t best_mask = 0;
    auto track_best = [&]() {
        for (std::size_t i = 0; i < population.size(); ++i)
            if (better(fitness[i], population[i], best_e, best_mask)) {
                best_e = fitness[i];
                best_mask = population[i];
            }
    };
    track_best();

    std::vector<int> order(cfg.population);
    auto tournament = [&]() {
        int winner = int(bounded(gen, std::uint64_t(cfg.population)));
        for (int t = 1; t < cfg.tournament_size; ++t) {
            const int challenger = int(bounded(gen, std::uint64_t(cfg.population)));
            if (better(fitness[challenger], population[challenger], fitness[winner],
                       population[winner]))
                winner = challenger;
        }
        return population[winner];
    };

    for (int g = 0; g < cfg.generations; ++g) {
        for (int i = 0; i < cfg.population; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return fitness[a] != fitness[b] ? fitness[a] < fitness[b]
                                            : population[a] < population[b];
        });

        std::vector<std::uint64_t> next;
        next.reserve(cfg.population);
        for (int idx : order) {
            if (int(next.size()) >= cfg.population) break;
            if (uniform01(gen) < cfg.elitism_prob) next.push_back(population[idx]);
        }
        while (int(next.size()) < cfg.population) {
            const std::uint64_t p1 = tournament();
            const std::uint64_t p2 = tournament();
            const std::uint64_t pick = gen() & universe_mask;
            std::uint64_t child = (p1 & pick) | (p2 & ~pick & universe_mask);
            for (int b = 0; b < universe; ++b)
                if (uniform01(gen) < mutation_prob) child ^= std::uint64_t(1) << b;
            if (child == 0)
                child = std::uint64_t(1) << bounded(gen, std::uint64_t(universe));
            next.push_back(child);
        }
        // The all-time best survives every generation, which also pins
        // the result at or below the best seed.
        if (std::find(next.begin(), next.end(), best_mask) == next.end())
            next.back() = best_mask;

        population = std::move(next);
        evaluate(population, fitness);
        track_best();
    }

    auto result = finish_result(best_mask, universe, best_e, "ga", evaluations,
                                seconds_since(t0), ctx);
    return result;
}

StarReport star_analysis(const std::vector<SolveResult>& pool, int k) {
    if (k < 1) throw ParamOutOfRange("pool size k must be >= 1");
    if (int(pool.size()) < 2 * k)
        throw InsufficientPool("need at least " + std::to_string(2 * k) +
                               " results, got " + std::to_string(pool.size()));

    std::vector<const SolveResult*> sorted;
    sorted.reserve(pool.size());
    for (const auto& r : pool) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const SolveResult* a,
                                               const SolveResult* b) {
        return a->cqns != b->cqns ? a->cqns < b->cqns : a->mask.mask < b->mask.mask;
    });

    const int universe = sorted.front()->mask.universe;
    auto frequencies = [&](auto begin, auto end) {
        std::vector<StarEntry> entries;
        std::vector<int> counts(universe, 0);
        for (auto it = begin; it != end; ++it)
            for (int i = 0; i < universe; ++i)
                if ((*it)->mask.contains(i)) counts[i]++;
        for (int i = 0; i < universe; ++i)
            if (counts[i] > 0) entries.push_back({i, double(counts[i]) / double(k)});
        std::sort(entries.begin(), entries.end(), [](const StarEntry& a,
                                                     const StarEntry& b) {
            return a.frequency != b.frequency ? a.frequency > b.frequency
                                              : a.asset < b.asset;
        });
        return entries;
    };

    StarReport report;
    report.pool_size = k;
    report.all_stars = frequencies(sorted.begin(), sorted.begin() + k);
    report.dog_stars = frequencies(sorted.end() - k, sorted.end());
    return report;
}

std::vector<std::uint64_t> heuristic_seed(const StarReport& report, int target_size,
                                          int extras, int universe,
                                          std::size_t cap) {
    check_universe(universe);
    if (target_size < 1 || target_size > universe)
        throw ParamOutOfRange("target size out of range");
    if (extras < 0 || extras > target_size)
        throw ParamOutOfRange("extras out of range");
    if (cap < 1) throw ParamOutOfRange("cap must be >= 1");

    const int star_count = target_size - extras;
    if (star_count > int(report.all_stars.size()))
        throw InsufficientStars("need " + std::to_string(star_count) +
                                " frequent assets, have " +
                                std::to_string(report.all_stars.size()));

    std::uint64_t base = 0;
    for (int s = 0; s < star_count; ++s) {
        const int asset = report.all_stars[s].asset;
        if (asset < 0 || asset >= universe)
            throw DomainError("star asset index out of range");
        base |= std::uint64_t(1) << asset;
    }
    if (extras == 0) return {base};

    std::uint64_t excluded = base;
    for (const StarEntry& e : report.dog_stars)
        if (e.asset >= 0 && e.asset < universe)
            excluded |= std::uint64_t(1) << e.asset;

    std::vector<int> candidates;
    for (int i = 0; i < universe; ++i)
        if (!((excluded >> i) & 1u)) candidates.push_back(i);
    if (int(candidates.size()) < extras)
        throw InsufficientStars("only " + std::to_string(candidates.size()) +
                                " candidate assets for " + std::to_string(extras) +
                                " extras");

    std::vector<std::uint64_t> masks;
    std::vector<int> combo(extras);
    for (int i = 0; i < extras; ++i) combo[i] = i;
    const int m = int(candidates.size());
    while (masks.size() < cap) {
        std::uint64_t mask = base;
        for (int idx : combo) mask |= std::uint64_t(1) << candidates[idx];
        masks.push_back(mask);

        // advance to next lexicographic combination
        int pos = extras - 1;
        while (pos >= 0 && combo[pos] == m - extras + pos) --pos;
        if (pos < 0) break;
        combo[pos]++;
        for (int j = pos + 1; j < extras; ++j) combo[j] = combo[j - 1] + 1;
    }
    return masks;
}

}  // namespace quboport
