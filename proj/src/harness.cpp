#include "quboport/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "quboport/csv.hpp"
#include "quboport/rng.hpp"

namespace quboport {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

long long parse_int(const std::string& value, const std::string& context) {
    const double d = parse_cell(value, context);
    const long long i = static_cast<long long>(d);
    if (double(i) != d)
        throw MalformedData(context + ": expected an integer, got '" + value + "'");
    return i;
}

bool parse_bool(const std::string& value, const std::string& context) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw MalformedData(context + ": expected true/false, got '" + value + "'");
}

std::optional<double> parse_auto(const std::string& value, const std::string& context) {
    if (value == "auto") return std::nullopt;
    return parse_cell(value, context);
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);

    ExperimentConfig cfg;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);

        if (line.front() == '[') {
            if (line.back() != ']') throw MalformedData(where + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "random" && section != "sa" && section != "ga")
                throw MalformedData(where + ": unknown section [" + section + "]");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) throw MalformedData(where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string ctx = where + " (" + key + ")";

        if (section.empty()) {
            if (key == "prices") cfg.prices_path = value;
            else if (key == "indices") cfg.indices_path = value;
            else if (key == "riskfree") cfg.riskfree_path = value;
            else if (key == "alpha") cfg.alpha = parse_cell(value, ctx);
            else if (key == "m") cfg.m = parse_cell(value, ctx);
            else if (key == "floor") cfg.floor = parse_cell(value, ctx);
            else if (key == "clip_threshold") cfg.clip_threshold = parse_cell(value, ctx);
            else if (key == "required_days") cfg.required_days = int(parse_int(value, ctx));
            else if (key == "n_min") cfg.n_min = int(parse_int(value, ctx));
            else if (key == "n_max") cfg.n_max = int(parse_int(value, ctx));
            else if (key == "output_dir") cfg.output_dir = value;
            else if (key == "seed") cfg.seed = std::uint64_t(parse_int(value, ctx));
            else if (key == "workers") cfg.workers = int(parse_int(value, ctx));
            else if (key == "brute_max_n") cfg.brute_max_n = int(parse_int(value, ctx));
            else if (key == "landscape_max_n") cfg.landscape_max_n = int(parse_int(value, ctx));
            else if (key == "scale_for_solvers") cfg.scale_for_solvers = parse_bool(value, ctx);
            else if (key == "star_pool") cfg.star_pool = int(parse_int(value, ctx));
            else if (key == "star_extras") cfg.star_extras = int(parse_int(value, ctx));
            else if (key == "star_seed_cap") cfg.star_seed_cap = std::size_t(parse_int(value, ctx));
            else if (key == "mode") cfg.mode = qubo_mode_from_string(value);
            else throw MalformedData(ctx + ": unknown key");
        } else if (section == "random") {
            if (key == "samples") cfg.random.samples = parse_int(value, ctx);
            else if (key == "pool_keep") cfg.random.pool_keep = int(parse_int(value, ctx));
            else throw MalformedData(ctx + ": unknown key in [random]");
        } else if (section == "sa") {
            if (key == "steps") cfg.sa.steps = int(parse_int(value, ctx));
            else if (key == "restarts") cfg.sa.restarts = int(parse_int(value, ctx));
            else if (key == "initial_temp") cfg.sa.initial_temp = parse_auto(value, ctx);
            else if (key == "cooling_rate") cfg.sa.cooling_rate = parse_auto(value, ctx);
            else throw MalformedData(ctx + ": unknown key in [sa]");
        } else {
            if (key == "population") cfg.ga.population = int(parse_int(value, ctx));
            else if (key == "generations") cfg.ga.generations = int(parse_int(value, ctx));
            else if (key == "elitism_prob") cfg.ga.elitism_prob = parse_cell(value, ctx);
            else if (key == "mutation_prob") cfg.ga.mutation_prob = parse_auto(value, ctx);
            else if (key == "tournament_size") cfg.ga.tournament_size = int(parse_int(value, ctx));
            else throw MalformedData(ctx + ": unknown key in [ga]");
        }
    }
    return cfg;
}

void ExperimentConfig::validate() const {
    auto bad = [](const std::string& msg) { throw ParamOutOfRange(msg); };
    if (n_min < 2) bad("n_min must be >= 2");
    if (n_max < 0) bad("n_max must be >= 0");
    if (n_max > 0 && n_max < n_min) bad("n_max must be >= n_min");
    if (alpha < 0.0) bad("alpha must be >= 0");
    if (!(m > 1.5 && m < 20.0)) bad("m must lie in (1.5, 20)");
    if (!(clip_threshold > 0.0)) bad("clip_threshold must be positive");
    if (required_days < 1) bad("required_days must be >= 1");
    if (workers < 1) bad("workers must be >= 1");
    if (brute_max_n < 0 || brute_max_n > 26) bad("brute_max_n must lie in [0, 26]");
    if (landscape_max_n < 0 || landscape_max_n > 24)
        bad("landscape_max_n must lie in [0, 24]");
    if (star_pool < 1) bad("star_pool must be >= 1");
    if (star_extras < 0) bad("star_extras must be >= 0");
    if (star_seed_cap < 1) bad("star_seed_cap must be >= 1");
    if (random.samples < 1) bad("random.samples must be >= 1");
    if (random.pool_keep < 1) bad("random.pool_keep must be >= 1");
    if (sa.steps < 1) bad("sa.steps must be >= 1");
    if (sa.restarts < 1) bad("sa.restarts must be >= 1");
    if (sa.initial_temp && *sa.initial_temp < 0.0) bad("sa.initial_temp must be >= 0");
    if (sa.cooling_rate && !(*sa.cooling_rate > 0.0 && *sa.cooling_rate < 1.0))
        bad("sa.cooling_rate must lie in (0, 1)");
    if (ga.population < 2) bad("ga.population must be >= 2");
    if (ga.generations < 0) bad("ga.generations must be >= 0");
    if (!(ga.elitism_prob >= 0.0 && ga.elitism_prob <= 1.0))
        bad("ga.elitism_prob must lie in [0, 1]");
    if (ga.mutation_prob && !(*ga.mutation_prob >= 0.0 && *ga.mutation_prob <= 1.0))
        bad("ga.mutation_prob must lie in [0, 1]");
    if (ga.tournament_size < 1) bad("ga.tournament_size must be >= 1");

    if (prices_path.empty()) throw IoError("no prices file configured");
    if (!fs::exists(prices_path)) throw IoError("prices file not found: " + prices_path);
    if (!indices_path.empty() && !fs::exists(indices_path))
        throw IoError("indices file not found: " + indices_path);
    if (!riskfree_path.empty() && !fs::exists(riskfree_path))
        throw IoError("risk-free file not found: " + riskfree_path);
}

std::vector<SizeCompareRow> compare_by_size(const std::vector<SolveResult>& results,
                                            const std::vector<SizeSummary>& baseline) {
    std::map<std::pair<int, std::string>, double> best;
    for (const SolveResult& r : results) {
        const auto key = std::make_pair(r.mask.size(), r.method);
        auto it = best.find(key);
        if (it == best.end() || r.cqns < it->second) best[key] = r.cqns;
    }
    std::map<int, const SizeSummary*> base;
    for (const SizeSummary& b : baseline) base[b.size] = &b;

    std::vector<SizeCompareRow> rows;
    for (const auto& [key, cqns] : best) {
        SizeCompareRow row;
        row.size = key.first;
        row.method = key.second;
        row.best_cqns = cqns;
        if (auto it = base.find(row.size); it != base.end()) {
            row.baseline_present = true;
            row.baseline_mean = it->second->mean;
            row.baseline_best = it->second->best;
            row.beats_baseline_mean = cqns < row.baseline_mean;
        }
        rows.push_back(row);
    }
    return rows;
}

void emit_frontier_csv(const std::vector<ScoredResult>& pool,
                       const std::string& path) {
    if (pool.empty()) throw ParamOutOfRange("frontier pool is empty");
    std::string out =
        "method,mask-hex,size,std_dev,expected_return,sharpe,cqr,cqns,momentum\n";
    for (const ScoredResult& r : pool) {
        out += r.method;
        out += ',';
        out += r.portfolio.to_hex();
        out += ',';
        out += std::to_string(r.portfolio.size());
        out += ',';
        out += fmt_g17(r.scores.std_dev);
        out += ',';
        out += fmt_g17(r.scores.expected_return);
        out += ',';
        out += fmt_g17(r.scores.sharpe);
        out += ',';
        out += fmt_g17(r.scores.cqr);
        out += ',';
        out += fmt_g17(r.scores.cqns);
        out += ',';
        out += fmt_g17(r.scores.momentum);
        out += '\n';
    }
    write_file_atomic(path, out);
}

namespace {

ordered_json score_json(const ScoreSet& s) {
    ordered_json j;
    j["expected_return"] = s.expected_return;
    j["variance"] = s.variance;
    j["std_dev"] = s.std_dev;
    j["sharpe"] = s.sharpe;
    j["cqr"] = s.cqr;
    j["cqns"] = s.cqns;
    j["momentum"] = s.momentum;
    j["alpha"] = s.alpha;
    return j;
}

struct Pipeline {
    const ExperimentConfig& cfg;
    std::vector<std::string>& written;
    ordered_json timings = ordered_json::object();

    std::string out_path(const std::string& name) const {
        return (fs::path(cfg.output_dir) / name).string();
    }
    void emit(const std::string& name, const std::string& contents) {
        const std::string path = out_path(name);
        write_file_atomic(path, contents);
        written.push_back(path);
    }

    ComparisonReport run() {
        const auto t0 = std::chrono::steady_clock::now();

        // --- ingest ------------------------------------------------------
        PriceSeries prices = load_prices(cfg.prices_path);
        Eigen::MatrixXd returns = compute_log_returns(prices);

        Eigen::VectorXd market_series;
        MarketContext mctx;
        if (!cfg.indices_path.empty()) {
            PriceSeries indices = load_prices(cfg.indices_path);
            if (indices.dates != prices.dates)
                throw MalformedData("index dates do not match price dates");
            Eigen::MatrixXd index_returns = compute_log_returns(indices);
            market_series = composite_market_series(index_returns);
            std::vector<double> per_index(index_returns.cols());
            for (int k = 0; k < index_returns.cols(); ++k)
                per_index[k] = index_returns.col(k).sum();
            std::vector<double> rf;
            if (!cfg.riskfree_path.empty()) {
                CsvTable t = read_csv(cfg.riskfree_path);
                if (t.header.size() < 2 || t.header[0] != "date")
                    throw MalformedData(cfg.riskfree_path + ": expected date,rate columns");
                for (std::size_t r = 0; r < t.rows.size(); ++r)
                    rf.push_back(parse_cell(t.rows[r][1],
                                            cfg.riskfree_path + " row " + t.rows[r][0]));
            }
            mctx = build_market_context(per_index, rf, cfg.floor);
        } else {
            // No index data: proxy the market with the equal-weight mean
            // of the asset returns themselves.
            market_series = returns.rowwise().mean();
            mctx = build_market_context({market_series.sum()}, {}, cfg.floor);
        }

        // --- statistics, filters, repair ---------------------------------
        ReturnStats stats_all = compute_stats(returns, market_series, mctx);
        auto [stats, filter_report] = apply_filters(stats_all, prices, cfg.required_days);
        const bool needed_repair = !is_psd(stats.cov);
        stats.cov = repair_psd(stats.cov, cfg.clip_threshold);

        const int N = stats.universe();
        if (N > 64) throw ParamOutOfRange("universe exceeds 64 assets after filtering");
        const int n_max = cfg.n_max == 0 ? std::min(N, 64) : cfg.n_max;
        if (n_max > N) throw ParamOutOfRange("n_max exceeds the filtered universe");
        if (cfg.n_min > n_max)
            throw ParamOutOfRange("n_min exceeds the filtered universe");
        const std::vector<std::string>& tickers = filter_report.kept;

        emit("filter_report.json", filter_report.to_json() + "\n");

        ordered_json stats_json;
        stats_json["universe"] = N;
        stats_json["tickers"] = tickers;
        stats_json["n_days"] = stats.n_days;
        stats_json["market_return"] = mctx.market_return;
        stats_json["risk_free_rate"] = mctx.risk_free_rate;
        stats_json["floor"] = mctx.floor;
        stats_json["index_returns"] = mctx.index_returns;
        stats_json["psd_repaired"] = needed_repair;
        stats_json["clip_threshold"] = cfg.clip_threshold;
        emit("stats.json", stats_json.dump(2) + "\n");

        std::string assets_csv = "ticker,mu,variance,beta,market_cov\n";
        for (int i = 0; i < N; ++i) {
            assets_csv += tickers[i];
            assets_csv += ',';
            assets_csv += fmt_g17(stats.mu[i]);
            assets_csv += ',';
            assets_csv += fmt_g17(stats.cov(i, i));
            assets_csv += ',';
            assets_csv += fmt_g17(stats.beta[i]);
            assets_csv += ',';
            assets_csv += fmt_g17(stats.market_cov[i]);
            assets_csv += '\n';
        }
        emit("assets.csv", assets_csv);

        // --- whole-universe and single-asset scores ----------------------
        const std::uint64_t full_mask =
            N >= 64 ? ~std::uint64_t(0) : (std::uint64_t(1) << N) - 1;
        Portfolio full = Portfolio::from_mask(full_mask, N);
        ordered_json scores_json;
        scores_json["all_assets"] = score_json(score_all(stats, mctx, full, cfg.alpha));
        scores_json["all_assets"]["mask-hex"] = full.to_hex();
        scores_json["single_assets"] = ordered_json::array();
        for (int i = 0; i < N; ++i) {
            Portfolio single = Portfolio::from_indices({i}, N);
            ordered_json entry = score_json(score_all(stats, mctx, single, cfg.alpha));
            entry["ticker"] = tickers[i];
            scores_json["single_assets"].push_back(entry);
        }
        emit("scores_all.json", scores_json.dump(2) + "\n");

        // --- objective: exact score, unscorable masks pushed to +inf -----
        CqnsEvaluator exact(stats, cfg.alpha);
        MaskObjective objective = [exact](std::uint64_t mask) {
            try {
                return exact(mask);
            } catch (const DomainError&) {
                return std::numeric_limits<double>::infinity();
            }
        };
        SolveContext sctx{objective, cfg.workers};

        GaConfig ga_base;
        ga_base.population = cfg.ga.population;
        ga_base.generations = cfg.ga.generations;
        ga_base.elitism_prob = cfg.ga.elitism_prob;
        ga_base.mutation_prob = cfg.ga.mutation_prob;
        ga_base.tournament_size = cfg.ga.tournament_size;

        // --- preliminary GA supplies the shift's g -----------------------
        GaConfig prelim_cfg = ga_base;
        prelim_cfg.seed = derive_seed(cfg.seed, "prelim_ga");
        SolveResult prelim = genetic(objective, N, prelim_cfg, sctx);
        timings["prelim_ga"] = prelim.wall_time;
        const double g = prelim.cqns;

        // --- per-size QUBOs, landscapes, simulated annealing -------------
        std::vector<SolveResult> sa_results;
        ordered_json shift_json;
        for (int n = cfg.n_min; n <= n_max; ++n) {
            QuboMatrix raw = build_qubo(stats, n, cfg.alpha, cfg.mode);
            ShiftParams sp = shift_factor(g, cfg.m, n, N);
            QuboMatrix shifted = apply_shift(raw, sp);
            shift_json["n" + std::to_string(n)] = sp.s_n;

            const std::string qubo_path = out_path("qubo_n" + std::to_string(n) + ".txt");
            export_qubo(shifted, qubo_path);
            written.push_back(qubo_path);

            QuboMatrix solver_q = shifted;
            if (cfg.scale_for_solvers) {
                solver_q = tanh_scale(shifted);
                const std::string scaled_path =
                    out_path("qubo_n" + std::to_string(n) + "_scaled.txt");
                export_qubo(solver_q, scaled_path);
                written.push_back(scaled_path);
            }

            if (N <= cfg.landscape_max_n) {
                auto points = landscape_profile(shifted, stats, cfg.alpha);
                const std::string lpath =
                    out_path("landscape_n" + std::to_string(n) + ".csv");
                write_landscape_csv(points, lpath);
                written.push_back(lpath);
            }

            SaConfig sa_cfg = tuned_sa_config(
                solver_q, cfg.sa.steps, cfg.sa.restarts,
                derive_seed(cfg.seed, "sa_n" + std::to_string(n)));
            if (cfg.sa.initial_temp) sa_cfg.initial_temp = *cfg.sa.initial_temp;
            if (cfg.sa.cooling_rate) sa_cfg.cooling_rate = *cfg.sa.cooling_rate;
            SolveResult sa_result = simulated_anneal(solver_q, sa_cfg, sctx);
            timings["sa_n" + std::to_string(n)] = sa_result.wall_time;
            sa_results.push_back(sa_result);
        }

        // --- exhaustive oracle when the universe is small enough ---------
        std::optional<SolveResult> brute;
        if (N <= cfg.brute_max_n) {
            BruteForceRun run = brute_force(objective, N, sctx, BruteForceOptions{});
            brute = run.best;
            timings["brute"] = run.best.wall_time;
        }

        // --- random-sampling baseline ------------------------------------
        RandomSampleOutcome rnd =
            random_sample(objective, N, cfg.random.samples,
                          derive_seed(cfg.seed, "random"), sctx, cfg.random.pool_keep);
        timings["random"] = rnd.best.wall_time;

        std::string baseline_csv = "size,count,mean_cqns,best_cqns,best_mask-hex\n";
        for (const SizeSummary& b : rnd.by_size) {
            baseline_csv += std::to_string(b.size);
            baseline_csv += ',';
            baseline_csv += std::to_string(b.count);
            baseline_csv += ',';
            baseline_csv += fmt_g17(b.mean);
            baseline_csv += ',';
            baseline_csv += fmt_g17(b.best);
            baseline_csv += ',';
            baseline_csv += Portfolio::from_mask(b.best_mask, N).to_hex();
            baseline_csv += '\n';
        }
        emit("baseline_by_size.csv", baseline_csv);

        // --- star-frequency analysis over the sampled pool ----------------
        std::vector<SolveResult> star_pool;
        auto pool_entry = [&](double value, std::uint64_t mask) {
            SolveResult r;
            r.mask = Portfolio::from_mask(mask, N);
            r.energy = value;
            r.cqns = value;
            r.method = "random";
            r.evaluations = 1;
            return r;
        };
        for (const auto& [v, mask] : rnd.top) star_pool.push_back(pool_entry(v, mask));
        for (const auto& [v, mask] : rnd.bottom) star_pool.push_back(pool_entry(v, mask));
        const int k = std::min<int>(cfg.star_pool, int(star_pool.size() / 2));
        std::optional<StarReport> stars;
        if (k >= 1) stars = star_analysis(star_pool, k);

        ordered_json star_json;
        star_json["pool_size"] = stars ? stars->pool_size : 0;
        auto star_array = [&](const std::vector<StarEntry>& entries) {
            ordered_json arr = ordered_json::array();
            for (const StarEntry& e : entries) {
                ordered_json item;
                item["asset"] = e.asset;
                item["ticker"] = tickers[e.asset];
                item["frequency"] = e.frequency;
                arr.push_back(item);
            }
            return arr;
        };
        star_json["all_stars"] = stars ? star_array(stars->all_stars) : ordered_json::array();
        star_json["dog_stars"] = stars ? star_array(stars->dog_stars) : ordered_json::array();
        emit("star_report.json", star_json.dump(2) + "\n");

        // --- seeded GA rerun ---------------------------------------------
        SolveResult best_known = prelim;
        auto consider = [&](const SolveResult& r) {
            if (r.cqns < best_known.cqns ||
                (r.cqns == best_known.cqns && r.mask.mask < best_known.mask.mask))
                best_known = r;
        };
        for (const SolveResult& r : sa_results) consider(r);
        consider(rnd.best);
        if (brute) consider(*brute);

        std::vector<std::uint64_t> seeds;
        std::set<std::uint64_t> seen;
        auto push_seed = [&](std::uint64_t mask) {
            if (mask != 0 && seen.insert(mask).second) seeds.push_back(mask);
        };
        if (stars) {
            const int target = best_known.mask.size();
            const int extras = std::min(cfg.star_extras, target);
            try {
                for (std::uint64_t mask :
                     heuristic_seed(*stars, target, extras, N, cfg.star_seed_cap))
                    push_seed(mask);
            } catch (const InsufficientStars&) {
                // not enough frequent assets at this size; seed from solver
                // bests alone
            }
        }
        push_seed(prelim.mask.mask);
        for (const SolveResult& r : sa_results) push_seed(r.mask.mask);
        push_seed(rnd.best.mask.mask);
        if (brute) push_seed(brute->mask.mask);

        GaConfig seeded_cfg = ga_base;
        seeded_cfg.seeds = seeds;
        seeded_cfg.seed = derive_seed(cfg.seed, "seeded_ga");
        SolveResult seeded = genetic(objective, N, seeded_cfg, sctx);
        seeded.method = "ga_seeded";
        timings["seeded_ga"] = seeded.wall_time;

        // --- pool results, compare, emit ---------------------------------
        std::vector<SolveResult> methods;
        if (brute) methods.push_back(*brute);
        methods.push_back(rnd.best);
        for (const SolveResult& r : sa_results) methods.push_back(r);
        methods.push_back(prelim);
        methods.push_back(seeded);

        std::string results_csv = "method,mask-hex,size,energy,cqns,evaluations\n";
        for (const SolveResult& r : methods) {
            results_csv += r.method;
            results_csv += ',';
            results_csv += r.mask.to_hex();
            results_csv += ',';
            results_csv += std::to_string(r.mask.size());
            results_csv += ',';
            results_csv += fmt_g17(r.energy);
            results_csv += ',';
            results_csv += fmt_g17(r.cqns);
            results_csv += ',';
            results_csv += std::to_string(r.evaluations);
            results_csv += '\n';
        }
        emit("results.csv", results_csv);

        auto rows = compare_by_size(methods, rnd.by_size);
        std::string compare_csv =
            "size,method,best_cqns,baseline_mean,baseline_best,beats_baseline_mean\n";
        for (const SizeCompareRow& row : rows) {
            compare_csv += std::to_string(row.size);
            compare_csv += ',';
            compare_csv += row.method;
            compare_csv += ',';
            compare_csv += fmt_g17(row.best_cqns);
            compare_csv += ',';
            if (row.baseline_present) {
                compare_csv += fmt_g17(row.baseline_mean);
                compare_csv += ',';
                compare_csv += fmt_g17(row.baseline_best);
                compare_csv += ',';
                compare_csv += row.beats_baseline_mean ? "1" : "0";
            } else {
                compare_csv += ",,";
            }
            compare_csv += '\n';
        }
        emit("compare_by_size.csv", compare_csv);

        std::vector<ScoredResult> frontier;
        std::set<std::pair<std::string, std::uint64_t>> frontier_seen;
        auto push_frontier = [&](const std::string& method, std::uint64_t mask) {
            if (!frontier_seen.insert({method, mask}).second) return;
            Portfolio p = Portfolio::from_mask(mask, N);
            frontier.push_back({method, p, score_all(stats, mctx, p, cfg.alpha)});
        };
        for (const SolveResult& r : methods) push_frontier(r.method, r.mask.mask);
        for (const SizeSummary& b : rnd.by_size) push_frontier("random", b.best_mask);
        std::sort(frontier.begin(), frontier.end(),
                  [](const ScoredResult& a, const ScoredResult& b) {
                      if (a.method != b.method) return a.method < b.method;
                      if (a.scores.cqns != b.scores.cqns)
                          return a.scores.cqns < b.scores.cqns;
                      return a.portfolio.mask < b.portfolio.mask;
                  });
        const std::string frontier_path = out_path("frontier.csv");
        emit_frontier_csv(frontier, frontier_path);
        written.push_back(frontier_path);

        // --- re-validate everything we are about to report ---------------
        for (const SolveResult& r : methods) {
            const double again = objective(r.mask.mask);
            if (!(std::abs(again - r.cqns) <= 1e-12))
                throw Error("ValidationFailed",
                            "stored score for method " + r.method + " mask " +
                                r.mask.to_hex() + " does not recompute");
            if (brute && r.cqns < brute->cqns - 1e-12)
                throw Error("ValidationFailed",
                            "method " + r.method + " reports a score below the "
                            "exhaustive optimum");
        }
        for (const ScoredResult& r : frontier) {
            const ScoreSet again = score_all(stats, mctx, r.portfolio, cfg.alpha);
            if (!(std::abs(again.cqns - r.scores.cqns) <= 1e-12) ||
                !(std::abs(again.sharpe - r.scores.sharpe) <= 1e-12) ||
                !(std::abs(again.expected_return - r.scores.expected_return) <= 1e-12))
                throw Error("ValidationFailed", "frontier row for mask " +
                                                    r.portfolio.to_hex() +
                                                    " does not recompute");
        }

        // --- report ------------------------------------------------------
        ComparisonReport report;
        report.universe = N;
        report.tickers = tickers;
        report.g = g;
        for (const SolveResult& r : methods) {
            report.methods.push_back({r.method, r.mask.mask, r.mask.size(), r.energy,
                                      r.cqns, r.wall_time, r.evaluations});
        }
        report.by_size = rows;
        report.frontier = frontier;

        ordered_json rj;
        rj["universe"] = N;
        rj["tickers"] = tickers;
        rj["alpha"] = cfg.alpha;
        rj["mode"] = to_string(cfg.mode);
        rj["m"] = cfg.m;
        rj["floor"] = cfg.floor;
        rj["clip_threshold"] = cfg.clip_threshold;
        rj["required_days"] = cfg.required_days;
        rj["n_min"] = cfg.n_min;
        rj["n_max"] = n_max;
        rj["seed"] = cfg.seed;
        rj["scale_for_solvers"] = cfg.scale_for_solvers;
        rj["samples"] = cfg.random.samples;
        rj["g"] = g;
        rj["shift_factors"] = shift_json;
        rj["psd_repaired"] = needed_repair;
        rj["methods"] = ordered_json::array();
        for (const MethodSummary& msum : report.methods) {
            ordered_json mj;
            mj["method"] = msum.method;
            mj["mask-hex"] = Portfolio::from_mask(msum.mask, N).to_hex();
            mj["size"] = msum.size;
            mj["energy"] = msum.energy;
            mj["cqns"] = msum.best_cqns;
            mj["evaluations"] = msum.evaluations;
            rj["methods"].push_back(mj);
        }
        rj["validation"] = "ok";
        emit("report.json", rj.dump(2) + "\n");

        // Wall-clock log; the one file that is not reproducible by design.
        ordered_json tj;
        tj["stages"] = timings;
        tj["total"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        emit("timings.json", tj.dump(2) + "\n");

        return report;
    }
};

}  // namespace

ComparisonReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    std::vector<std::string> written;
    Pipeline pipeline{cfg, written};
    try {
        return pipeline.run();
    } catch (...) {
        std::error_code ec;
        for (const std::string& path : written) fs::remove(path, ec);
        throw;
    }
}

}  // namespace quboport
