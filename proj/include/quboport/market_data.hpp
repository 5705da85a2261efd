#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "quboport/errors.hpp"

namespace quboport {

/**
 * Date-aligned adjusted-close history for a ticker universe.
 *
 * Invariants: no missing cells, dates strictly increasing (ISO-8601 so
 * lexicographic order is chronological), at least two rows, one column
 * per ticker.
 */
struct PriceSeries {
    std::vector<std::string> tickers;
    std::vector<std::string> dates;
    Eigen::MatrixXd prices;  // row = date, column = ticker

    int num_days() const { return static_cast<int>(prices.rows()); }
    int num_assets() const { return static_cast<int>(prices.cols()); }

    /// Throws MalformedData / InsufficientHistory when an invariant fails.
    void validate() const;
};

/// Economic backdrop: floored index returns, their composite, and the
/// average risk-free rate. All values share the return frequency of the
/// asset data (no annualization happens downstream).
struct MarketContext {
    std::vector<double> index_returns;  // after flooring
    double floor = 0.0;
    double risk_free_rate = 0.0;
    double market_return = 0.0;  // weighted mean of floored indices
};

/// Per-asset return statistics over one universe. Immutable once built;
/// safe to share across solver threads.
struct ReturnStats {
    Eigen::VectorXd mu;          // expected daily log return per asset
    Eigen::MatrixXd cov;         // sample covariance, exactly symmetric
    Eigen::VectorXd market_cov;  // covariance of each asset with the market
    Eigen::VectorXd beta;        // market_cov / market variance
    int n_days = 0;              // return observations behind the estimates

    int universe() const { return static_cast<int>(mu.size()); }
};

enum class RemovalReason { BetaLow, BetaHigh, DiscontinuousHistory };

std::string to_string(RemovalReason reason);

/// Which tickers survived universe filtering and why the rest fell out.
struct FilterReport {
    std::vector<std::string> kept;
    std::vector<std::pair<std::string, RemovalReason>> removed;

    std::string to_json() const;
};

/// Ingestion seam: statistics code consumes PriceSeries only, so a remote
/// fetcher can slot in beside the CSV reader without touching it.
class PriceSource {
public:
    virtual ~PriceSource() = default;
    virtual PriceSeries load() = 0;
};

class CsvPriceSource final : public PriceSource {
public:
    explicit CsvPriceSource(std::string path) : path_(std::move(path)) {}
    PriceSeries load() override;

private:
    std::string path_;
};

/// Parse a price CSV (header `date,<T1>,<T2>,...`) into a PriceSeries.
/// Rows are sorted ascending by date. Throws MalformedData on missing or
/// non-numeric cells and InsufficientHistory on fewer than 2 rows.
PriceSeries load_prices(const std::string& path);

/// Daily log returns, one row fewer than the price matrix:
/// r[t][i] = ln(p[t+1][i] / p[t][i]). Throws DomainError on a
/// non-positive price.
Eigen::MatrixXd compute_log_returns(const PriceSeries& prices);

/**
 * Column means, sample covariance (divisor n-1), per-asset covariance
 * with the market series, and beta = market_cov / market variance.
 *
 * The covariance matrix is re-symmetrized so cov == cov.transpose()
 * holds exactly. Throws DegenerateMarket when the market series has zero
 * variance and DimensionError on shape mismatches. The market context is
 * part of the statistics contract but the estimators themselves are
 * frequency-agnostic and do not read it.
 */
ReturnStats compute_stats(const Eigen::MatrixXd& returns,
                          const Eigen::VectorXd& market_returns,
                          const MarketContext& ctx);

/**
 * Drop assets with beta < 0, beta > 10, or fewer than `required_days`
 * contiguous trade observations. Surviving statistics are sliced from the
 * originals, never recomputed. Throws EmptyUniverse when nothing survives.
 *
 * A return observation counts as traded when the close moved against the
 * previous day; forward-filled (non-traded) days break the contiguous run.
 */
std::pair<ReturnStats, FilterReport> apply_filters(const ReturnStats& stats,
                                                   const PriceSeries& prices,
                                                   int required_days);

/// Longest run of consecutive traded return observations for one asset
/// column. Exposed for tests.
int contiguous_observations(const PriceSeries& prices, int asset);

/// PSD test: strict Cholesky first, then an eigenvalue fallback that
/// accepts the numerically-zero boundary a clipped matrix sits on.
bool is_psd(const Eigen::MatrixXd& m);

/**
 * Return `cov` unchanged when it already factorizes; otherwise
 * eigendecompose, zero every eigenvalue with |lambda| < clip_threshold,
 * reassemble and re-symmetrize. Throws NotRepairable when an eigenvalue
 * is at or below -clip_threshold (genuinely indefinite input, not a
 * rounding artifact).
 *
 * Idempotent: repairing a repaired matrix returns it unchanged,
 * elementwise. Perturbation is bounded by d * clip_threshold per entry.
 */
Eigen::MatrixXd repair_psd(const Eigen::MatrixXd& cov, double clip_threshold);

/**
 * Floor each index return at `floor`, combine them into the composite
 * market return (weighted mean; empty weights = equal), and average the
 * risk-free series. Throws MalformedData on empty inputs or a weight
 * vector of the wrong length.
 */
MarketContext build_market_context(const std::vector<double>& index_returns,
                                   const std::vector<double>& risk_free_series,
                                   double floor,
                                   const std::vector<double>& weights = {});

/// Weighted per-row combination of index return columns into one market
/// series (empty weights = equal). Used to form the daily market series
/// behind beta.
Eigen::VectorXd composite_market_series(const Eigen::MatrixXd& index_returns,
                                        const std::vector<double>& weights = {});

}  // namespace quboport
