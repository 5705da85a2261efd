#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "quboport/market_data.hpp"
#include "testutil.hpp"

using namespace quboport;
using testutil::TempDir;
using testutil::write_text;

namespace {

PriceSeries series_from(const std::vector<std::string>& tickers,
                        const std::vector<std::vector<double>>& rows) {
    PriceSeries s;
    s.tickers = tickers;
    s.prices.resize(int(rows.size()), int(tickers.size()));
    char buf[24];
    for (int t = 0; t < int(rows.size()); ++t) {
        std::snprintf(buf, sizeof(buf), "2023-01-%02d", t + 1);
        s.dates.push_back(buf);
        for (int i = 0; i < int(tickers.size()); ++i) s.prices(t, i) = rows[t][i];
    }
    return s;
}

/// Independent two-pass covariance oracle with divisor n-1.
Eigen::MatrixXd cov_oracle(const Eigen::MatrixXd& r) {
    const int n = int(r.rows()), d = int(r.cols());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (int t = 0; t < n; ++t)
        for (int i = 0; i < d; ++i) mean[i] += r(t, i);
    mean /= double(n);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (int t = 0; t < n; ++t)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                cov(i, j) += (r(t, i) - mean[i]) * (r(t, j) - mean[j]);
    return cov / double(n - 1);
}

}  // namespace

TEST_CASE("load_prices parses a well-formed file and sorts by date") {
    TempDir dir("prices");
    write_text(dir.file("p.csv"),
               "date,AAA,BBB\n"
               "2023-01-03,101.5,55.0\n"
               "2023-01-02,100.0,54.5\n"
               "2023-01-04,102.0,55.5\n");
    PriceSeries s = load_prices(dir.file("p.csv"));
    CHECK(s.num_days() == 3);
    CHECK(s.num_assets() == 2);
    CHECK(s.tickers == std::vector<std::string>{"AAA", "BBB"});
    CHECK(s.dates.front() == "2023-01-02");
    CHECK(s.dates.back() == "2023-01-04");
    CHECK(s.prices(0, 0) == 100.0);
    CHECK(s.prices(2, 1) == 55.5);
}

TEST_CASE("load_prices rejects bad input") {
    TempDir dir("prices_bad");
    SUBCASE("empty cell") {
        write_text(dir.file("p.csv"), "date,AAA\n2023-01-02,\n2023-01-03,1\n");
        CHECK_THROWS_AS(load_prices(dir.file("p.csv")), MalformedData);
    }
    SUBCASE("non-numeric price") {
        write_text(dir.file("p.csv"), "date,AAA\n2023-01-02,x\n2023-01-03,1\n");
        CHECK_THROWS_AS(load_prices(dir.file("p.csv")), MalformedData);
    }
    SUBCASE("ragged row") {
        write_text(dir.file("p.csv"), "date,AAA,BBB\n2023-01-02,1\n2023-01-03,1,2\n");
        CHECK_THROWS_AS(load_prices(dir.file("p.csv")), MalformedData);
    }
    SUBCASE("single row") {
        write_text(dir.file("p.csv"), "date,AAA\n2023-01-02,1\n");
        CHECK_THROWS_AS(load_prices(dir.file("p.csv")), InsufficientHistory);
    }
    SUBCASE("duplicate date") {
        write_text(dir.file("p.csv"),
                   "date,AAA\n2023-01-02,1\n2023-01-02,2\n");
        CHECK_THROWS_AS(load_prices(dir.file("p.csv")), MalformedData);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_prices(dir.file("absent.csv")), IoError);
    }
}

TEST_CASE("compute_log_returns matches the definition") {
    PriceSeries s = series_from({"A", "B", "C"}, {{100, 50, 100},
                                                  {110, 50, 105},
                                                  {121, 50, 99.75}});
    Eigen::MatrixXd r = compute_log_returns(s);
    REQUIRE(r.rows() == 2);
    CHECK(r(0, 0) == doctest::Approx(std::log(1.1)).epsilon(1e-12));
    CHECK(r(1, 0) == doctest::Approx(std::log(1.1)).epsilon(1e-12));
    CHECK(r(0, 1) == 0.0);
    CHECK(r(1, 1) == 0.0);
    CHECK(r(0, 2) == doctest::Approx(std::log(1.05)).epsilon(1e-12));
    CHECK(r(1, 2) == doctest::Approx(std::log(0.95)).epsilon(1e-12));
}

TEST_CASE("compute_log_returns rejects non-positive prices") {
    PriceSeries s = series_from({"A"}, {{100}, {0.0}});
    CHECK_THROWS_AS(compute_log_returns(s), DomainError);
    PriceSeries neg = series_from({"A"}, {{100}, {-5}});
    CHECK_THROWS_AS(compute_log_returns(neg), DomainError);
}

TEST_CASE("compute_stats matches a two-pass oracle on synthetic data") {
    auto gen = make_engine(77);
    const int days = 10, assets = 3;
    Eigen::MatrixXd r(days, assets);
    Eigen::VectorXd mkt(days);
    for (int t = 0; t < days; ++t) {
        mkt[t] = (uniform01(gen) - 0.5) * 0.02;
        for (int i = 0; i < assets; ++i)
            r(t, i) = 0.5 * (i + 1) * mkt[t] + (uniform01(gen) - 0.5) * 0.01;
    }
    MarketContext ctx;
    ReturnStats s = compute_stats(r, mkt, ctx);

    CHECK(s.n_days == days);
    Eigen::MatrixXd oracle = cov_oracle(r);
    for (int i = 0; i < assets; ++i) {
        CHECK(s.mu[i] == doctest::Approx(r.col(i).mean()).epsilon(1e-12));
        for (int j = 0; j < assets; ++j)
            CHECK(s.cov(i, j) == doctest::Approx(oracle(i, j)).epsilon(1e-9));
    }
    // market_cov and beta against a joint covariance oracle
    Eigen::MatrixXd joint(days, assets + 1);
    joint << r, mkt;
    Eigen::MatrixXd jc = cov_oracle(joint);
    for (int i = 0; i < assets; ++i) {
        CHECK(s.market_cov[i] == doctest::Approx(jc(i, assets)).epsilon(1e-9));
        CHECK(s.beta[i] ==
              doctest::Approx(jc(i, assets) / jc(assets, assets)).epsilon(1e-9));
    }
    // mandated re-symmetrization: exact transpose equality
    CHECK(s.cov == s.cov.transpose());
}

TEST_CASE("beta equals the scale factor for exact multiples of the market") {
    auto gen = make_engine(5);
    const int days = 40;
    Eigen::VectorXd mkt(days);
    for (int t = 0; t < days; ++t) mkt[t] = (uniform01(gen) - 0.5) * 0.02;
    Eigen::MatrixXd r(days, 3);
    r.col(0) = mkt;            // k = 1
    r.col(1) = 2.0 * mkt;      // k = 2
    r.col(2) = -0.7 * mkt;     // k = -0.7
    ReturnStats s = compute_stats(r, mkt, MarketContext{});
    CHECK(s.beta[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.beta[1] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(s.beta[2] == doctest::Approx(-0.7).epsilon(1e-9));
}

TEST_CASE("compute_stats degenerate and mismatched inputs") {
    Eigen::MatrixXd r = Eigen::MatrixXd::Random(5, 2) * 0.01;
    CHECK_THROWS_AS(compute_stats(r, Eigen::VectorXd::Zero(5), MarketContext{}),
                    DegenerateMarket);
    CHECK_THROWS_AS(compute_stats(r, Eigen::VectorXd::Random(4), MarketContext{}),
                    DimensionError);
    Eigen::MatrixXd one_row = Eigen::MatrixXd::Random(1, 2);
    CHECK_THROWS_AS(compute_stats(one_row, Eigen::VectorXd::Random(1), MarketContext{}),
                    InsufficientHistory);
}

TEST_CASE("contiguous_observations counts the longest traded run") {
    // Moves on days 1..3, flat 4..5, moves 6..8: transitions are
    // m m m f f m m m -> longest run 3.
    PriceSeries s = series_from({"A"}, {{1}, {2}, {3}, {4}, {4}, {4}, {5}, {6}, {7}});
    CHECK(contiguous_observations(s, 0) == 3);
    PriceSeries all_moves = series_from({"A"}, {{1}, {2}, {3}});
    CHECK(contiguous_observations(all_moves, 0) == 2);
    PriceSeries all_flat = series_from({"A"}, {{5}, {5}, {5}});
    CHECK(contiguous_observations(all_flat, 0) == 0);
}

TEST_CASE("apply_filters removes by beta bounds and history, slicing stats") {
    // Four assets: clean, beta_low, beta_high, discontinuous.
    ReturnStats s = testutil::make_stats(4, 11);
    s.beta[0] = 1.0;
    s.beta[1] = -0.5;
    s.beta[2] = 10.5;
    s.beta[3] = 1.0;

    std::vector<std::vector<double>> rows;
    double p = 100;
    for (int t = 0; t < 6; ++t) {
        rows.push_back({p, p, p, (t >= 2 && t <= 4) ? 50.0 : p});
        p += 1;  // clean columns move every day
    }
    PriceSeries prices = series_from({"KEEP", "LOWB", "HIGB", "GAPS"}, rows);

    auto [kept, report] = apply_filters(s, prices, 5);
    REQUIRE(report.kept == std::vector<std::string>{"KEEP"});
    REQUIRE(report.removed.size() == 3);
    CHECK(report.removed[0] ==
          std::pair<std::string, RemovalReason>{"LOWB", RemovalReason::BetaLow});
    CHECK(report.removed[1] ==
          std::pair<std::string, RemovalReason>{"HIGB", RemovalReason::BetaHigh});
    CHECK(report.removed[2] == std::pair<std::string, RemovalReason>{
                                   "GAPS", RemovalReason::DiscontinuousHistory});

    // surviving statistics sliced, not recomputed
    CHECK(kept.universe() == 1);
    CHECK(kept.mu[0] == s.mu[0]);
    CHECK(kept.cov(0, 0) == s.cov(0, 0));
    CHECK(kept.beta[0] == s.beta[0]);
    CHECK(kept.market_cov[0] == s.market_cov[0]);
    CHECK(kept.n_days == s.n_days);

    // boundary betas survive: 0 and 10 are inside [0, 10]
    ReturnStats edge = testutil::make_stats(2, 12);
    edge.beta[0] = 0.0;
    edge.beta[1] = 10.0;
    PriceSeries edge_prices = series_from({"A", "B"}, {{1, 1}, {2, 2}, {3, 3}});
    auto [edge_kept, edge_report] = apply_filters(edge, edge_prices, 2);
    CHECK(edge_report.kept.size() == 2);
    CHECK(edge_kept.universe() == 2);

    // nothing survives -> EmptyUniverse
    ReturnStats bad = testutil::make_stats(1, 13);
    bad.beta[0] = -1.0;
    PriceSeries one = series_from({"A"}, {{1}, {2}});
    CHECK_THROWS_AS(apply_filters(bad, one, 1), EmptyUniverse);
}

TEST_CASE("filter report serializes to json") {
    FilterReport r;
    r.kept = {"AAA"};
    r.removed = {{"BBB", RemovalReason::BetaLow},
                 {"CCC", RemovalReason::DiscontinuousHistory}};
    const std::string j = r.to_json();
    CHECK(j.find("\"kept\"") != std::string::npos);
    CHECK(j.find("\"beta_low\"") != std::string::npos);
    CHECK(j.find("\"discontinuous_history\"") != std::string::npos);
    CHECK(j.find("\"BBB\"") != std::string::npos);
}

TEST_CASE("is_psd accepts PSD matrices and rejects indefinite ones") {
    CHECK(is_psd(Eigen::MatrixXd::Identity(4, 4)));
    Eigen::MatrixXd singular(2, 2);
    singular << 1, 1, 1, 1;  // eigenvalues 2, 0
    CHECK(is_psd(singular));
    Eigen::MatrixXd indef(2, 2);
    indef << 1, 2, 2, 1;  // eigenvalues 3, -1
    CHECK(!is_psd(indef));
}

TEST_CASE("repair_psd leaves PSD input unchanged, elementwise") {
    ReturnStats s = testutil::make_stats(6, 21);
    Eigen::MatrixXd out = repair_psd(s.cov, 1e-6);
    CHECK(out == s.cov);
}

TEST_CASE("repair_psd clips a slightly negative eigenvalue") {
    // Construct a matrix with known eigenvalues {1, 2e-9, -1e-8} in a
    // random orthogonal basis.
    const int d = 3;
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(d, d);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd v = qr.householderQ();
    Eigen::VectorXd lambda(d);
    lambda << 1.0, 2e-9, -1e-8;
    Eigen::MatrixXd m = v * lambda.asDiagonal() * v.transpose();
    m = 0.5 * (m + m.transpose());
    REQUIRE(!is_psd(m));

    const double clip = 1e-6;
    Eigen::MatrixXd out = repair_psd(m, clip);
    // Clipping lands eigenvalues at exactly zero, so the strict Cholesky
    // may hit a zero pivot; the boundary-tolerant PSD test is the
    // library's acceptance check for repaired matrices.
    CHECK(is_psd(out));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-14);
    CHECK((out - m).cwiseAbs().maxCoeff() <= d * clip);

    // idempotence: repairing the repaired matrix is the identity
    Eigen::MatrixXd again = repair_psd(out, clip);
    CHECK(again == out);
}

TEST_CASE("repair_psd refuses genuinely indefinite matrices") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 2, 2, 1;
    CHECK_THROWS_AS(repair_psd(m, 1e-6), NotRepairable);
    Eigen::MatrixXd asym(2, 2);
    asym << 1, 0.5, 0.2, 1;
    CHECK_THROWS_AS(repair_psd(asym, 1e-6), DomainError);
}

TEST_CASE("build_market_context floors, averages, and validates") {
    MarketContext c = build_market_context({0.10, -0.05}, {}, 0.0);
    CHECK(c.index_returns == std::vector<double>{0.10, 0.0});
    CHECK(c.market_return == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(c.risk_free_rate == 0.0);

    MarketContext single = build_market_context({0.08}, {0.02, 0.02}, 0.0);
    CHECK(single.market_return == doctest::Approx(0.08).epsilon(1e-12));
    CHECK(single.risk_free_rate == doctest::Approx(0.02).epsilon(1e-12));

    // three indices, one negative: the negative one contributes the floor
    MarketContext three = build_market_context({0.12, 0.07, -0.30}, {}, 0.0);
    CHECK(three.index_returns[2] == 0.0);
    CHECK(three.market_return ==
          doctest::Approx((0.12 + 0.07 + 0.0) / 3.0).epsilon(1e-12));

    CHECK_THROWS_AS(build_market_context({}, {}, 0.0), MalformedData);
    CHECK_THROWS_AS(build_market_context({0.1, 0.2}, {}, 0.0, {1.0}), MalformedData);

    // explicit weights
    MarketContext w = build_market_context({0.10, 0.20}, {}, 0.0, {3.0, 1.0});
    CHECK(w.market_return == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("composite_market_series combines index columns per row") {
    Eigen::MatrixXd idx(2, 2);
    idx << 0.01, 0.03, -0.02, 0.04;
    Eigen::VectorXd eq = composite_market_series(idx);
    CHECK(eq[0] == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(eq[1] == doctest::Approx(0.01).epsilon(1e-12));
    Eigen::VectorXd wt = composite_market_series(idx, {1.0, 3.0});
    CHECK(wt[0] == doctest::Approx(0.025).epsilon(1e-12));
}
