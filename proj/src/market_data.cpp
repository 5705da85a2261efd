#include "quboport/market_data.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "quboport/csv.hpp"

namespace quboport {

void PriceSeries::validate() const {
    if (tickers.empty()) throw MalformedData("price series has no tickers");
    if (prices.cols() != static_cast<Eigen::Index>(tickers.size()))
        throw MalformedData("price matrix width does not match ticker count");
    if (prices.rows() != static_cast<Eigen::Index>(dates.size()))
        throw MalformedData("price matrix height does not match date count");
    if (num_days() < 2) throw InsufficientHistory("need at least 2 price rows");
    for (std::size_t t = 1; t < dates.size(); ++t) {
        if (!(dates[t - 1] < dates[t]))
            throw MalformedData("dates not strictly increasing at row " + std::to_string(t));
    }
    if (!prices.allFinite()) throw MalformedData("non-finite price entry");
}

PriceSeries CsvPriceSource::load() { return load_prices(path_); }

PriceSeries load_prices(const std::string& path) {
    CsvTable table = read_csv(path);
    if (table.header.empty() || table.header[0] != "date")
        throw MalformedData(path + ": first header column must be 'date'");
    if (table.header.size() < 2)
        throw MalformedData(path + ": no ticker columns");
    if (table.rows.size() < 2)
        throw InsufficientHistory(path + ": need at least 2 data rows");

    PriceSeries series;
    series.tickers.assign(table.header.begin() + 1, table.header.end());

    // Sort rows by date before building the matrix; files are usually
    // already sorted but the contract does not require it.
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const auto& a, const auto& b) { return a[0] < b[0]; });

    const int days = static_cast<int>(table.rows.size());
    const int assets = static_cast<int>(series.tickers.size());
    series.dates.reserve(days);
    series.prices.resize(days, assets);
    for (int t = 0; t < days; ++t) {
        const auto& row = table.rows[t];
        series.dates.push_back(row[0]);
        for (int i = 0; i < assets; ++i) {
            series.prices(t, i) = parse_cell(
                row[i + 1], path + " row " + row[0] + " ticker " + series.tickers[i]);
        }
    }
    series.validate();
    return series;
}

Eigen::MatrixXd compute_log_returns(const PriceSeries& prices) {
    prices.validate();
    if ((prices.prices.array() <= 0.0).any())
        throw DomainError("non-positive price; log return undefined");
    const int days = prices.num_days();
    const int assets = prices.num_assets();
    Eigen::MatrixXd r(days - 1, assets);
    for (int t = 0; t + 1 < days; ++t)
        for (int i = 0; i < assets; ++i)
            r(t, i) = std::log(prices.prices(t + 1, i) / prices.prices(t, i));
    return r;
}

ReturnStats compute_stats(const Eigen::MatrixXd& returns,
                          const Eigen::VectorXd& market_returns,
                          const MarketContext& ctx) {
    (void)ctx;  // part of the signature for parity with remote sources
    if (market_returns.size() != returns.rows())
        throw DimensionError("market series length does not match return rows");
    const int n = static_cast<int>(returns.rows());
    if (n < 2) throw InsufficientHistory("need at least 2 return rows");

    ReturnStats stats;
    stats.n_days = n;
    stats.mu = returns.colwise().mean();

    Eigen::MatrixXd centered = returns.rowwise() - stats.mu.transpose();
    Eigen::MatrixXd cov = (centered.transpose() * centered) / double(n - 1);
    stats.cov = 0.5 * (cov + cov.transpose());  // exact symmetry

    const double market_mean = market_returns.mean();
    Eigen::VectorXd market_centered = market_returns.array() - market_mean;
    const double market_var = market_centered.squaredNorm() / double(n - 1);
    if (market_var <= 0.0) throw DegenerateMarket("market series has zero variance");

    stats.market_cov = (centered.transpose() * market_centered) / double(n - 1);
    stats.beta = stats.market_cov / market_var;
    return stats;
}

int contiguous_observations(const PriceSeries& prices, int asset) {
    if (asset < 0 || asset >= prices.num_assets())
        throw DimensionError("asset index out of range");
    // A return observation t counts only when the close actually moved;
    // a forward-filled flat day breaks the run.
    int best = 0, run = 0;
    for (int t = 0; t + 1 < prices.num_days(); ++t) {
        if (prices.prices(t + 1, asset) != prices.prices(t, asset)) {
            best = std::max(best, ++run);
        } else {
            run = 0;
        }
    }
    return best;
}

std::string to_string(RemovalReason reason) {
    switch (reason) {
        case RemovalReason::BetaLow: return "beta_low";
        case RemovalReason::BetaHigh: return "beta_high";
        case RemovalReason::DiscontinuousHistory: return "discontinuous_history";
    }
    return "unknown";
}

std::string FilterReport::to_json() const {
    nlohmann::ordered_json j;
    j["kept"] = kept;
    j["removed"] = nlohmann::ordered_json::array();
    for (const auto& [ticker, reason] : removed)
        j["removed"].push_back({{"ticker", ticker}, {"reason", to_string(reason)}});
    return j.dump(2);
}

std::pair<ReturnStats, FilterReport> apply_filters(const ReturnStats& stats,
                                                   const PriceSeries& prices,
                                                   int required_days) {
    if (stats.universe() != prices.num_assets())
        throw DimensionError("stats and prices cover different universes");

    FilterReport report;
    std::vector<int> keep;
    for (int i = 0; i < stats.universe(); ++i) {
        const std::string& ticker = prices.tickers[i];
        if (stats.beta[i] < 0.0) {
            report.removed.emplace_back(ticker, RemovalReason::BetaLow);
        } else if (stats.beta[i] > 10.0) {
            report.removed.emplace_back(ticker, RemovalReason::BetaHigh);
        } else if (contiguous_observations(prices, i) < required_days) {
            report.removed.emplace_back(ticker, RemovalReason::DiscontinuousHistory);
        } else {
            keep.push_back(i);
            report.kept.push_back(ticker);
        }
    }
    if (keep.empty()) throw EmptyUniverse("no assets survived filtering");

    const int m = static_cast<int>(keep.size());
    ReturnStats out;
    out.n_days = stats.n_days;
    out.mu.resize(m);
    out.market_cov.resize(m);
    out.beta.resize(m);
    out.cov.resize(m, m);
    for (int a = 0; a < m; ++a) {
        out.mu[a] = stats.mu[keep[a]];
        out.market_cov[a] = stats.market_cov[keep[a]];
        out.beta[a] = stats.beta[keep[a]];
        for (int b = 0; b < m; ++b) out.cov(a, b) = stats.cov(keep[a], keep[b]);
    }
    return {std::move(out), std::move(report)};
}

bool is_psd(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw DimensionError("PSD test needs a square matrix");
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) return true;
    // A matrix clipped onto the PSD boundary has eigenvalues at exactly
    // zero, which strict Cholesky rejects; accept up to rounding slack.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) return false;
    const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
    const double slack =
        16.0 * double(m.rows()) * std::numeric_limits<double>::epsilon() * std::max(scale, 1.0);
    return es.eigenvalues().minCoeff() >= -slack;
}

Eigen::MatrixXd repair_psd(const Eigen::MatrixXd& cov, double clip_threshold) {
    if (cov.rows() != cov.cols()) throw DimensionError("covariance must be square");
    if (!(clip_threshold > 0.0)) throw DomainError("clip_threshold must be positive");
    if (!cov.isApprox(cov.transpose(), 1e-12))
        throw DomainError("covariance must be symmetric");
    if (is_psd(cov)) return cov;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw NotRepairable("eigendecomposition failed");
    Eigen::VectorXd lambda = es.eigenvalues();
    for (int i = 0; i < lambda.size(); ++i) {
        if (lambda[i] <= -clip_threshold)
            throw NotRepairable("eigenvalue " + fmt_g17(lambda[i]) +
                                " below -clip_threshold; matrix is indefinite");
        if (std::abs(lambda[i]) < clip_threshold) lambda[i] = 0.0;
    }
    Eigen::MatrixXd repaired =
        es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (repaired + repaired.transpose());
}

MarketContext build_market_context(const std::vector<double>& index_returns,
                                   const std::vector<double>& risk_free_series,
                                   double floor,
                                   const std::vector<double>& weights) {
    if (index_returns.empty()) throw MalformedData("no index returns");
    if (!weights.empty() && weights.size() != index_returns.size())
        throw MalformedData("weight count does not match index count");
    for (double v : index_returns)
        if (!std::isfinite(v)) throw MalformedData("non-finite index return");

    MarketContext ctx;
    ctx.floor = floor;
    ctx.index_returns.reserve(index_returns.size());
    for (double v : index_returns) ctx.index_returns.push_back(std::max(v, floor));

    double wsum = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < ctx.index_returns.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        if (!std::isfinite(w) || w < 0.0) throw MalformedData("invalid index weight");
        wsum += w;
        acc += w * ctx.index_returns[i];
    }
    if (wsum <= 0.0) throw MalformedData("index weights sum to zero");
    ctx.market_return = acc / wsum;

    if (!risk_free_series.empty()) {
        double rf = 0.0;
        for (double v : risk_free_series) {
            if (!std::isfinite(v)) throw MalformedData("non-finite risk-free rate");
            rf += v;
        }
        ctx.risk_free_rate = rf / double(risk_free_series.size());
    }
    return ctx;
}

Eigen::VectorXd composite_market_series(const Eigen::MatrixXd& index_returns,
                                        const std::vector<double>& weights) {
    if (index_returns.cols() < 1) throw MalformedData("no index columns");
    if (!weights.empty() &&
        weights.size() != static_cast<std::size_t>(index_returns.cols()))
        throw MalformedData("weight count does not match index count");

    Eigen::VectorXd w(index_returns.cols());
    if (weights.empty()) {
        w.setConstant(1.0 / double(index_returns.cols()));
    } else {
        double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
        if (wsum <= 0.0) throw MalformedData("index weights sum to zero");
        for (int i = 0; i < w.size(); ++i) w[i] = weights[i] / wsum;
    }
    return index_returns * w;
}

}  // namespace quboport
