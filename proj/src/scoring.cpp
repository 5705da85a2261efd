#include "quboport/scoring.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "quboport/csv.hpp"

namespace quboport {

namespace {

void check_universe(int universe) {
    if (universe < 1 || universe > 64)
        throw ParamOutOfRange("universe must be in [1, 64], got " +
                              std::to_string(universe));
}

// Shared accumulation core: one code path feeds cqns(), score_all() and
// the mask-level evaluator, so all three agree bit for bit.
struct PortfolioMoments {
    double mean;
    double variance;
};

PortfolioMoments moments(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov,
                         std::uint64_t mask, int universe) {
    const int n = __builtin_popcountll(mask);
    if (n == 0) throw EmptyPortfolio("portfolio has no assets");

    double sum_mu = 0.0, sum_var = 0.0, sum_pairs = 0.0;
    for (int i = 0; i < universe; ++i) {
        if (!((mask >> i) & 1u)) continue;
        sum_mu += mu[i];
        sum_var += cov(i, i);
        for (int j = i + 1; j < universe; ++j)
            if ((mask >> j) & 1u) sum_pairs += cov(i, j);
    }
    const double dn = double(n);
    return {sum_mu / dn, (sum_var + 2.0 * sum_pairs) / (dn * dn)};
}

double cqns_value(double mean, double variance, double alpha) {
    const double exponent = 2.0 + alpha;
    if (mean < 0.0 && std::nearbyint(exponent) != exponent)
        throw DomainError("negative expected return with non-integer exponent " +
                          fmt_g17(exponent));
    return variance - std::pow(mean, exponent);
}

}  // namespace

Portfolio Portfolio::from_mask(std::uint64_t mask, int universe) {
    check_universe(universe);
    if (universe < 64 && (mask >> universe) != 0)
        throw DomainError("mask has bits outside the universe");
    return Portfolio{mask, universe};
}

Portfolio Portfolio::from_indices(const std::vector<int>& indices, int universe) {
    check_universe(universe);
    std::uint64_t mask = 0;
    for (int i : indices) {
        if (i < 0 || i >= universe)
            throw DomainError("asset index " + std::to_string(i) + " out of range");
        mask |= std::uint64_t(1) << i;
    }
    return Portfolio{mask, universe};
}

Portfolio Portfolio::from_bits(const std::vector<int>& bits) {
    check_universe(static_cast<int>(bits.size()));
    std::uint64_t mask = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] != 0 && bits[i] != 1)
            throw DomainError("bit vector entries must be 0 or 1");
        if (bits[i]) mask |= std::uint64_t(1) << i;
    }
    return Portfolio{mask, static_cast<int>(bits.size())};
}

Portfolio Portfolio::from_hex(const std::string& hex, int universe) {
    check_universe(universe);
    std::string body = hex;
    if (body.rfind("0x", 0) == 0 || body.rfind("0X", 0) == 0) body = body.substr(2);
    if (body.empty() || body.size() > 16)
        throw MalformedData("bad mask hex: '" + hex + "'");
    std::uint64_t mask = 0;
    for (char c : body) {
        int digit;
        if (c >= '0' && c <= '9') digit = c - '0';
        else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
        else throw MalformedData("bad mask hex: '" + hex + "'");
        mask = (mask << 4) | std::uint64_t(digit);
    }
    return from_mask(mask, universe);
}

std::vector<int> Portfolio::indices() const {
    std::vector<int> out;
    out.reserve(size());
    for (int i = 0; i < universe; ++i)
        if (contains(i)) out.push_back(i);
    return out;
}

std::vector<int> Portfolio::to_bits() const {
    std::vector<int> bits(universe, 0);
    for (int i = 0; i < universe; ++i)
        if (contains(i)) bits[i] = 1;
    return bits;
}

std::string Portfolio::to_hex() const {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%llx", static_cast<unsigned long long>(mask));
    return buf;
}

std::string ScoreSet::to_json() const {
    nlohmann::ordered_json j;
    j["expected_return"] = expected_return;
    j["variance"] = variance;
    j["std_dev"] = std_dev;
    j["sharpe"] = sharpe;
    j["cqr"] = cqr;
    j["cqns"] = cqns;
    j["momentum"] = momentum;
    j["alpha"] = alpha;
    return j.dump();
}

std::string score_csv_header() {
    return "mask-hex,size,expected_return,variance,std_dev,sharpe,cqr,cqns,momentum,alpha";
}

std::string score_csv_row(const Portfolio& p, const ScoreSet& s) {
    std::ostringstream out;
    out << p.to_hex() << ',' << p.size() << ',' << fmt_g17(s.expected_return) << ','
        << fmt_g17(s.variance) << ',' << fmt_g17(s.std_dev) << ',' << fmt_g17(s.sharpe)
        << ',' << fmt_g17(s.cqr) << ',' << fmt_g17(s.cqns) << ',' << fmt_g17(s.momentum)
        << ',' << fmt_g17(s.alpha);
    return out.str();
}

double portfolio_mean_return(const ReturnStats& stats, const Portfolio& p) {
    if (p.universe != stats.universe())
        throw DimensionError("portfolio universe does not match stats");
    return moments(stats.mu, stats.cov, p.mask, p.universe).mean;
}

double portfolio_variance(const ReturnStats& stats, const Portfolio& p) {
    if (p.universe != stats.universe())
        throw DimensionError("portfolio universe does not match stats");
    return moments(stats.mu, stats.cov, p.mask, p.universe).variance;
}

double sharpe(const ReturnStats& stats, const MarketContext& ctx, const Portfolio& p) {
    if (p.universe != stats.universe())
        throw DimensionError("portfolio universe does not match stats");
    auto [mean, variance] = moments(stats.mu, stats.cov, p.mask, p.universe);
    const double sigma = std::sqrt(variance);
    if (!(sigma > 0.0)) throw DegeneratePortfolio("zero portfolio variance");

    double beta_sum = 0.0;
    for (int i = 0; i < p.universe; ++i)
        if (p.contains(i)) beta_sum += stats.beta[i];
    const double beta_w = beta_sum / double(p.size());
    return (beta_w * (mean - ctx.risk_free_rate) + ctx.risk_free_rate) / sigma;
}

double cqr(const ReturnStats& stats, const Portfolio& p) {
    if (p.universe != stats.universe())
        throw DimensionError("portfolio universe does not match stats");
    const double variance = moments(stats.mu, stats.cov, p.mask, p.universe).variance;
    const double sigma = std::sqrt(variance);
    if (!(sigma > 0.0)) throw DegeneratePortfolio("zero portfolio variance");

    double cov_im = 0.0;
    for (int i = 0; i < p.universe; ++i)
        if (p.contains(i)) cov_im += stats.market_cov[i];
    return (cov_im / double(p.size())) / sigma;
}

double cqns(const ReturnStats& stats, const Portfolio& p, double alpha) {
    if (p.universe != stats.universe())
        throw DimensionError("portfolio universe does not match stats");
    auto [mean, variance] = moments(stats.mu, stats.cov, p.mask, p.universe);
    return cqns_value(mean, variance, alpha);
}

ScoreSet score_all(const ReturnStats& stats, const MarketContext& ctx,
                   const Portfolio& p, double alpha) {
    ScoreSet s;
    s.expected_return = portfolio_mean_return(stats, p);
    s.variance = portfolio_variance(stats, p);
    s.std_dev = std::sqrt(s.variance);
    s.sharpe = sharpe(stats, ctx, p);
    s.cqr = cqr(stats, p);
    s.cqns = cqns(stats, p, alpha);
    double cov_im = 0.0;
    for (int i = 0; i < p.universe; ++i)
        if (p.contains(i)) cov_im += stats.market_cov[i];
    s.momentum = cov_im / double(p.size());
    s.alpha = alpha;
    return s;
}

CqnsEvaluator::CqnsEvaluator(const ReturnStats& stats, double alpha)
    : mu_(stats.mu), cov_(stats.cov), alpha_(alpha), n_(stats.universe()) {
    if (n_ < 1 || n_ > 64) throw ParamOutOfRange("universe must be in [1, 64]");
}

double CqnsEvaluator::operator()(std::uint64_t mask) const {
    auto [mean, variance] = moments(mu_, cov_, mask, n_);
    return cqns_value(mean, variance, alpha_);
}

}  // namespace quboport
