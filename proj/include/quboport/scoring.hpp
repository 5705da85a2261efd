#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "quboport/errors.hpp"
#include "quboport/market_data.hpp"

namespace quboport {

/**
 * Equal-weight portfolio over a universe of up to 64 assets, stored as a
 * bitmask. Included assets carry weight 1/popcount, the rest 0.
 */
struct Portfolio {
    std::uint64_t mask = 0;
    int universe = 0;

    static Portfolio from_mask(std::uint64_t mask, int universe);
    static Portfolio from_indices(const std::vector<int>& indices, int universe);
    static Portfolio from_bits(const std::vector<int>& bits);
    static Portfolio from_hex(const std::string& hex, int universe);

    int size() const { return __builtin_popcountll(mask); }
    bool contains(int i) const { return (mask >> i) & 1u; }
    std::vector<int> indices() const;       // ascending
    std::vector<int> to_bits() const;       // length = universe
    std::string to_hex() const;             // lowercase, no 0x prefix
};

/// Every score of one portfolio under one statistics set.
struct ScoreSet {
    double expected_return = 0.0;
    double variance = 0.0;
    double std_dev = 0.0;
    double sharpe = 0.0;
    double cqr = 0.0;
    double cqns = 0.0;
    double momentum = 0.0;  // w . Cov_im
    double alpha = 0.0;

    std::string to_json() const;
};

std::string score_csv_header();
std::string score_csv_row(const Portfolio& p, const ScoreSet& s);

/// E[R_w] = (1/n) sum of included mu_i.
double portfolio_mean_return(const ReturnStats& stats, const Portfolio& p);

/// Var(R_w) = (1/n^2)(sum v_i + 2 sum_{i<j} cov_ij) over included assets.
double portfolio_variance(const ReturnStats& stats, const Portfolio& p);

/// Sharpe ratio = (beta_w (E[R_w] - R_b) + R_b) / sigma, beta_w the
/// equal-weight mean of included asset betas, R_b the risk-free rate.
double sharpe(const ReturnStats& stats, const MarketContext& ctx, const Portfolio& p);

/// Chicago Quantum Ratio = (w . Cov_im) / sigma.
double cqr(const ReturnStats& stats, const Portfolio& p);

/// Chicago Quantum Net Score = Var(R_w) - E[R_w]^(2+alpha); lower is better.
double cqns(const ReturnStats& stats, const Portfolio& p, double alpha = 1.0);

ScoreSet score_all(const ReturnStats& stats, const MarketContext& ctx,
                   const Portfolio& p, double alpha = 1.0);

/**
 * Mask-level CQNS evaluator for solver callbacks. Produces bit-identical
 * values to cqns() by running the same accumulation order; exists so hot
 * loops can skip Portfolio bookkeeping.
 */
class CqnsEvaluator {
public:
    CqnsEvaluator(const ReturnStats& stats, double alpha);
    double operator()(std::uint64_t mask) const;
    int universe() const { return n_; }
    double alpha() const { return alpha_; }

private:
    Eigen::VectorXd mu_;
    Eigen::MatrixXd cov_;
    double alpha_;
    int n_;
};

}  // namespace quboport
