// Command-line front end: ingest price data, score portfolios, compile
// and export QUBOs, profile landscapes, run individual solvers, or drive
// the full experiment workflow.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "quboport/csv.hpp"
#include "quboport/harness.hpp"
#include "quboport/market_data.hpp"
#include "quboport/qubo.hpp"
#include "quboport/rng.hpp"
#include "quboport/scoring.hpp"
#include "quboport/solvers.hpp"

namespace {

using namespace quboport;
using ordered_json = nlohmann::ordered_json;

struct DataOpts {
    std::string prices, indices, riskfree;
    double floor = 0.0;
    double clip = 1e-6;
    int required_days = 253;
};

void add_data_options(CLI::App* cmd, DataOpts& opts, bool required = true) {
    auto* p = cmd->add_option("--prices", opts.prices, "price CSV (date,<T1>,...)");
    if (required) p->required();
    cmd->add_option("--indices", opts.indices, "market index level CSV");
    cmd->add_option("--riskfree", opts.riskfree, "risk-free rate CSV");
    cmd->add_option("--floor", opts.floor, "index return floor (default 0)");
    cmd->add_option("--clip", opts.clip, "PSD repair eigenvalue clip threshold");
    cmd->add_option("--required-days", opts.required_days,
                    "minimum contiguous trade observations");
}

struct Universe {
    PriceSeries prices;
    ReturnStats stats;
    MarketContext ctx;
    FilterReport filter_report;
    bool psd_repaired = false;
};

Universe load_universe(const DataOpts& opts) {
    Universe u;
    u.prices = load_prices(opts.prices);
    Eigen::MatrixXd returns = compute_log_returns(u.prices);

    Eigen::VectorXd market_series;
    if (!opts.indices.empty()) {
        PriceSeries indices = load_prices(opts.indices);
        if (indices.dates != u.prices.dates)
            throw MalformedData("index dates do not match price dates");
        Eigen::MatrixXd index_returns = compute_log_returns(indices);
        market_series = composite_market_series(index_returns);
        std::vector<double> per_index(index_returns.cols());
        for (int k = 0; k < index_returns.cols(); ++k)
            per_index[k] = index_returns.col(k).sum();
        std::vector<double> rf;
        if (!opts.riskfree.empty()) {
            CsvTable t = read_csv(opts.riskfree);
            if (t.header.size() < 2 || t.header[0] != "date")
                throw MalformedData(opts.riskfree + ": expected date,rate columns");
            for (const auto& row : t.rows)
                rf.push_back(parse_cell(row[1], opts.riskfree + " row " + row[0]));
        }
        u.ctx = build_market_context(per_index, rf, opts.floor);
    } else {
        market_series = returns.rowwise().mean();
        u.ctx = build_market_context({market_series.sum()}, {}, opts.floor);
    }

    ReturnStats all = compute_stats(returns, market_series, u.ctx);
    auto [filtered, report] = apply_filters(all, u.prices, opts.required_days);
    u.stats = std::move(filtered);
    u.filter_report = std::move(report);
    u.psd_repaired = !is_psd(u.stats.cov);
    u.stats.cov = repair_psd(u.stats.cov, opts.clip);
    if (u.stats.universe() > 64)
        throw ParamOutOfRange("universe exceeds 64 assets after filtering");
    return u;
}

Portfolio resolve_mask(const Universe& u, const std::string& mask_hex,
                       const std::vector<std::string>& ticker_list, bool all) {
    const int N = u.stats.universe();
    const int picked = int(!mask_hex.empty()) + int(!ticker_list.empty()) + int(all);
    if (picked != 1)
        throw ParamOutOfRange("pass exactly one of --mask, --tickers, --all");
    if (all)
        return Portfolio::from_mask(
            N >= 64 ? ~std::uint64_t(0) : (std::uint64_t(1) << N) - 1, N);
    if (!mask_hex.empty()) return Portfolio::from_hex(mask_hex, N);
    std::vector<int> indices;
    for (const std::string& t : ticker_list) {
        auto it = std::find(u.filter_report.kept.begin(), u.filter_report.kept.end(), t);
        if (it == u.filter_report.kept.end())
            throw MalformedData("ticker not in the filtered universe: " + t);
        indices.push_back(int(it - u.filter_report.kept.begin()));
    }
    return Portfolio::from_indices(indices, N);
}

ordered_json score_json(const Portfolio& p, const ScoreSet& s,
                        const std::vector<std::string>& tickers) {
    ordered_json j;
    j["mask-hex"] = p.to_hex();
    j["size"] = p.size();
    ordered_json names = ordered_json::array();
    for (int i : p.indices()) names.push_back(tickers[i]);
    j["tickers"] = names;
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

struct QuboOpts {
    int size = 0;
    double alpha = 1.0;
    std::string mode = "exact_alpha0";
    std::optional<double> g;
    double m = 5.0;
    bool scale = false;
};

void add_qubo_options(CLI::App* cmd, QuboOpts& opts) {
    cmd->add_option("--size", opts.size, "target portfolio size")->required();
    cmd->add_option("--alpha", opts.alpha, "score exponent parameter");
    cmd->add_option("--mode", opts.mode, "exact_alpha0 or paper");
    cmd->add_option("--g", opts.g, "best classical score; enables the size shift");
    cmd->add_option("--m", opts.m, "shift multiplier, open interval (1.5, 20)");
    cmd->add_flag("--scale", opts.scale, "apply tanh scaling after the shift");
}

QuboMatrix build_from_opts(const Universe& u, const QuboOpts& opts) {
    QuboMatrix q = build_qubo(u.stats, opts.size, opts.alpha,
                              qubo_mode_from_string(opts.mode));
    if (opts.g) {
        ShiftParams sp = shift_factor(*opts.g, opts.m, opts.size, u.stats.universe());
        q = apply_shift(q, sp);
    }
    if (opts.scale) q = tanh_scale(q);
    return q;
}

ordered_json result_json(const SolveResult& r) {
    ordered_json j;
    j["method"] = r.method;
    j["mask-hex"] = r.mask.to_hex();
    j["size"] = r.mask.size();
    j["energy"] = r.energy;
    j["cqns"] = r.cqns;
    j["evaluations"] = r.evaluations;
    j["wall_time"] = r.wall_time;
    return j;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Equal-weight portfolio selection via QUBO compilation and "
                 "classical minimization"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "load prices, filter, write stats");
    DataOpts ingest_data;
    std::string ingest_out;
    add_data_options(ingest, ingest_data);
    ingest->add_option("--out", ingest_out, "output directory")->required();

    // score
    auto* score = app.add_subcommand("score", "score one portfolio");
    DataOpts score_data;
    std::string score_mask;
    std::vector<std::string> score_tickers;
    bool score_all_assets = false;
    double score_alpha = 1.0;
    add_data_options(score, score_data);
    score->add_option("--mask", score_mask, "portfolio as a hex bitmask");
    score->add_option("--tickers", score_tickers, "portfolio as ticker names")
        ->delimiter(',');
    score->add_flag("--all", score_all_assets, "score the full universe");
    score->add_option("--alpha", score_alpha, "score exponent parameter");

    // build-qubo / export-qubo
    auto* build = app.add_subcommand("build-qubo", "compile a QUBO and summarize it");
    DataOpts build_data;
    QuboOpts build_qopts;
    std::string build_out;
    add_data_options(build, build_data);
    add_qubo_options(build, build_qopts);
    build->add_option("--out", build_out, "also export to this coordinate file");

    auto* exportq = app.add_subcommand("export-qubo", "compile a QUBO to a file");
    DataOpts export_data;
    QuboOpts export_qopts;
    std::string export_out;
    add_data_options(exportq, export_data);
    add_qubo_options(exportq, export_qopts);
    exportq->add_option("--out", export_out, "coordinate file path")->required();

    // landscape
    auto* land = app.add_subcommand("landscape", "energy/score by size CSV");
    DataOpts land_data;
    QuboOpts land_qopts;
    std::string land_out;
    long long land_samples = 0;
    std::uint64_t land_seed = 0;
    add_data_options(land, land_data);
    add_qubo_options(land, land_qopts);
    land->add_option("--samples", land_samples,
                     "sample this many masks instead of enumerating");
    land->add_option("--sample-seed", land_seed, "RNG seed for sampled profiles");
    land->add_option("--out", land_out, "output CSV path")->required();

    // solve
    auto* solve = app.add_subcommand("solve", "minimize one instance");
    DataOpts solve_data;
    std::string solve_method, solve_qubo_file, solve_out, solve_checkpoint;
    int solve_size = 0;
    double solve_alpha = 1.0;
    std::string solve_mode = "exact_alpha0";
    std::optional<double> solve_g;
    double solve_m = 5.0;
    std::uint64_t solve_seed = 0;
    int solve_workers = 1;
    long long solve_samples = 100000;
    int solve_pool_keep = 64;
    SaConfig solve_sa;
    GaConfig solve_ga;
    std::vector<std::string> solve_ga_seeds;
    std::optional<double> solve_sa_temp, solve_sa_cooling, solve_ga_mutation;
    std::uint64_t solve_stop_after = 0;
    bool solve_cap_override = false;
    solve->add_option("--method", solve_method, "brute | random | sa | ga")
        ->required()
        ->check(CLI::IsMember({"brute", "random", "sa", "ga"}));
    add_data_options(solve, solve_data, /*required=*/false);
    solve->add_option("--qubo", solve_qubo_file, "solve this exported QUBO file");
    solve->add_option("--size", solve_size,
                      "build the QUBO for this target size (with --prices)");
    solve->add_option("--alpha", solve_alpha, "score exponent parameter");
    solve->add_option("--mode", solve_mode, "exact_alpha0 or paper");
    solve->add_option("--g", solve_g, "best classical score; enables the shift");
    solve->add_option("--m", solve_m, "shift multiplier");
    solve->add_option("--seed", solve_seed, "RNG seed");
    solve->add_option("--workers", solve_workers, "worker threads");
    solve->add_option("--samples", solve_samples, "random sampling draw count");
    solve->add_option("--pool-keep", solve_pool_keep, "best/worst pool size kept");
    solve->add_option("--sa-steps", solve_sa.steps, "annealing steps per restart");
    solve->add_option("--sa-restarts", solve_sa.restarts, "annealing restarts");
    solve->add_option("--sa-temp", solve_sa_temp, "initial temperature (default auto)");
    solve->add_option("--sa-cooling", solve_sa_cooling,
                      "cooling rate in (0,1) (default auto)");
    solve->add_option("--ga-pop", solve_ga.population, "GA population");
    solve->add_option("--ga-gens", solve_ga.generations, "GA generations");
    solve->add_option("--ga-elitism", solve_ga.elitism_prob, "GA elitism probability");
    solve->add_option("--ga-mutation", solve_ga_mutation,
                      "GA per-bit mutation probability (default 1/N)");
    solve->add_option("--ga-tournament", solve_ga.tournament_size,
                      "GA tournament size");
    solve->add_option("--ga-seed-mask", solve_ga_seeds,
                      "hex seed mask for the GA (repeatable)");
    solve->add_option("--checkpoint", solve_checkpoint,
                      "brute-force checkpoint file (resumes if present)");
    solve->add_option("--stop-after", solve_stop_after,
                      "pause brute force after this many masks");
    solve->add_flag("--cap-override", solve_cap_override,
                    "enumerate past the brute-force size cap");
    solve->add_option("--out", solve_out, "append the result as a scored CSV row");

    // run
    auto* run = app.add_subcommand("run", "full experiment workflow");
    std::string run_config;
    DataOpts run_data;
    std::string run_out;
    std::optional<std::uint64_t> run_seed;
    std::optional<int> run_workers;
    run->add_option("--config", run_config, "experiment config file");
    add_data_options(run, run_data, /*required=*/false);
    run->add_option("--out", run_out, "output directory (overrides config)");
    run->add_option("--seed", run_seed, "master seed (overrides config)");
    run->add_option("--workers", run_workers, "worker threads (overrides config)");

    // compare
    auto* compare = app.add_subcommand("compare", "summarize a run's outputs");
    std::string compare_dir;
    compare->add_option("--dir", compare_dir, "run output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (app.got_subcommand(ingest)) {
        Universe u = load_universe(ingest_data);
        std::filesystem::create_directories(ingest_out);
        auto out_path = [&](const std::string& name) {
            return (std::filesystem::path(ingest_out) / name).string();
        };
        write_file_atomic(out_path("filter_report.json"),
                          u.filter_report.to_json() + "\n");
        const int N = u.stats.universe();
        ordered_json sj;
        sj["universe"] = N;
        sj["tickers"] = u.filter_report.kept;
        sj["n_days"] = u.stats.n_days;
        sj["market_return"] = u.ctx.market_return;
        sj["risk_free_rate"] = u.ctx.risk_free_rate;
        sj["floor"] = u.ctx.floor;
        sj["index_returns"] = u.ctx.index_returns;
        sj["psd_repaired"] = u.psd_repaired;
        sj["clip_threshold"] = ingest_data.clip;
        write_file_atomic(out_path("stats.json"), sj.dump(2) + "\n");
        std::string csv = "ticker,mu,variance,beta,market_cov\n";
        for (int i = 0; i < N; ++i) {
            csv += u.filter_report.kept[i];
            csv += ',' + fmt_g17(u.stats.mu[i]);
            csv += ',' + fmt_g17(u.stats.cov(i, i));
            csv += ',' + fmt_g17(u.stats.beta[i]);
            csv += ',' + fmt_g17(u.stats.market_cov[i]);
            csv += '\n';
        }
        write_file_atomic(out_path("assets.csv"), csv);
        std::cout << sj.dump(2) << "\n";
        return 0;
    }

    if (app.got_subcommand(score)) {
        Universe u = load_universe(score_data);
        Portfolio p = resolve_mask(u, score_mask, score_tickers, score_all_assets);
        ScoreSet s = score_all(u.stats, u.ctx, p, score_alpha);
        std::cout << score_json(p, s, u.filter_report.kept).dump(2) << "\n";
        return 0;
    }

    if (app.got_subcommand(build) || app.got_subcommand(exportq)) {
        const bool exporting = app.got_subcommand(exportq);
        const DataOpts& data = exporting ? export_data : build_data;
        const QuboOpts& qopts = exporting ? export_qopts : build_qopts;
        const std::string& out = exporting ? export_out : build_out;
        Universe u = load_universe(data);
        QuboMatrix q = build_from_opts(u, qopts);
        if (!out.empty()) export_qubo(q, out);
        ordered_json j;
        j["universe"] = q.universe();
        j["target_size"] = q.target_size;
        j["mode"] = to_string(q.mode);
        j["alpha"] = q.alpha;
        if (q.shift) j["s_n"] = q.shift->s_n;
        j["scaled"] = q.scaled;
        j["max_abs_coeff"] = q.max_abs_coeff();
        if (!out.empty()) j["file"] = out;
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    if (app.got_subcommand(land)) {
        Universe u = load_universe(land_data);
        QuboMatrix q = build_from_opts(u, land_qopts);
        std::optional<LandscapeBudget> budget;
        if (land_samples > 0) budget = LandscapeBudget{land_samples, land_seed};
        auto points = landscape_profile(q, u.stats, land_qopts.alpha, budget);
        write_landscape_csv(points, land_out);
        std::cout << "wrote " << points.size() << " points to " << land_out << "\n";
        return 0;
    }

    if (app.got_subcommand(solve)) {
        std::optional<Universe> u;
        std::optional<QuboMatrix> q;
        int N = 0;
        SolveContext ctx;
        ctx.workers = solve_workers;
        if (!solve_data.prices.empty()) {
            u = load_universe(solve_data);
            N = u->stats.universe();
            CqnsEvaluator exact(u->stats, solve_alpha);
            ctx.rescore = [exact](std::uint64_t m) { return exact(m); };
            if (solve_size > 0) {
                QuboOpts qo;
                qo.size = solve_size;
                qo.alpha = solve_alpha;
                qo.mode = solve_mode;
                qo.g = solve_g;
                qo.m = solve_m;
                q = build_from_opts(*u, qo);
            }
        } else if (!solve_qubo_file.empty()) {
            q = import_qubo(solve_qubo_file);
            N = q->universe();
        } else {
            throw ParamOutOfRange("solve needs --prices or --qubo");
        }

        MaskObjective objective;
        if (q) {
            const QuboMatrix& qm = *q;
            objective = [qm](std::uint64_t m) { return qubo_energy(qm, m); };
        } else {
            objective = ctx.rescore;  // minimize the exact score directly
        }

        SolveResult result;
        if (solve_method == "brute") {
            BruteForceOptions opt;
            opt.checkpoint_path = solve_checkpoint;
            opt.stop_after = solve_stop_after;
            opt.override_cap = solve_cap_override;
            BruteForceRun r = brute_force(objective, N, ctx, opt);
            result = r.best;
            if (!r.completed)
                std::cerr << "paused after " << r.masks_done
                          << " masks; rerun to resume from the checkpoint\n";
        } else if (solve_method == "random") {
            RandomSampleOutcome r = random_sample(objective, N, solve_samples,
                                                  solve_seed, ctx, solve_pool_keep);
            result = r.best;
        } else if (solve_method == "sa") {
            if (!q)
                throw ParamOutOfRange(
                    "simulated annealing needs a QUBO; pass --qubo or --size");
            SaConfig cfg = tuned_sa_config(*q, solve_sa.steps, solve_sa.restarts,
                                           solve_seed);
            if (solve_sa_temp) cfg.initial_temp = *solve_sa_temp;
            if (solve_sa_cooling) cfg.cooling_rate = *solve_sa_cooling;
            result = simulated_anneal(*q, cfg, ctx);
        } else {
            GaConfig cfg = solve_ga;
            cfg.mutation_prob = solve_ga_mutation;
            cfg.seed = solve_seed;
            for (const std::string& hex : solve_ga_seeds)
                cfg.seeds.push_back(Portfolio::from_hex(hex, N).mask);
            result = genetic(objective, N, cfg, ctx);
        }

        std::cout << result_json(result).dump(2) << "\n";
        if (!solve_out.empty()) {
            if (!u)
                throw ParamOutOfRange("--out needs price data for full scores");
            ScoreSet s = score_all(u->stats, u->ctx, result.mask, solve_alpha);
            std::string csv = score_csv_header() + ",method,wall_time\n";
            csv += score_csv_row(result.mask, s) + "," + result.method + "," +
                   fmt_g17(result.wall_time) + "\n";
            write_file_atomic(solve_out, csv);
        }
        return 0;
    }

    if (app.got_subcommand(run)) {
        ExperimentConfig cfg;
        if (!run_config.empty()) cfg = load_config(run_config);
        if (!run_data.prices.empty()) cfg.prices_path = run_data.prices;
        if (!run_data.indices.empty()) cfg.indices_path = run_data.indices;
        if (!run_data.riskfree.empty()) cfg.riskfree_path = run_data.riskfree;
        if (run->count("--floor")) cfg.floor = run_data.floor;
        if (run->count("--clip")) cfg.clip_threshold = run_data.clip;
        if (run->count("--required-days")) cfg.required_days = run_data.required_days;
        if (!run_out.empty()) cfg.output_dir = run_out;
        if (run_seed) cfg.seed = *run_seed;
        if (run_workers) cfg.workers = *run_workers;
        ComparisonReport report = run_experiment(cfg);
        ordered_json j;
        j["universe"] = report.universe;
        j["g"] = report.g;
        j["output_dir"] = cfg.output_dir;
        j["methods"] = ordered_json::array();
        for (const MethodSummary& m : report.methods) {
            ordered_json mj;
            mj["method"] = m.method;
            mj["mask-hex"] = Portfolio::from_mask(m.mask, report.universe).to_hex();
            mj["size"] = m.size;
            mj["cqns"] = m.best_cqns;
            j["methods"].push_back(mj);
        }
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    if (app.got_subcommand(compare)) {
        auto path = [&](const std::string& name) {
            return (std::filesystem::path(compare_dir) / name).string();
        };
        CsvTable results = read_csv(path("results.csv"));
        std::cout << "method          mask-hex      size  cqns\n";
        for (const auto& row : results.rows) {
            std::printf("%-15s %-13s %-5s %s\n", row[0].c_str(), row[1].c_str(),
                        row[2].c_str(), row[4].c_str());
        }
        CsvTable by_size = read_csv(path("compare_by_size.csv"));
        std::cout << "\nsize  method          best_cqns            baseline_mean        "
                     "beats\n";
        for (const auto& row : by_size.rows) {
            std::printf("%-5s %-15s %-20s %-20s %s\n", row[0].c_str(), row[1].c_str(),
                        row[2].c_str(), row[3].c_str(), row[5].c_str());
        }
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const quboport::Error& e) {
        ordered_json j;
        j["error"] = e.code();
        j["message"] = e.what();
        std::cerr << j.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        ordered_json j;
        j["error"] = "Unhandled";
        j["message"] = e.what();
        std::cerr << j.dump() << "\n";
        return 2;
    }
}
