#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quboport/errors.hpp"
#include "quboport/market_data.hpp"
#include "quboport/scoring.hpp"

namespace quboport {

enum class QuboMode {
    exact_alpha0,  // energy of any size-n mask equals CQNS at alpha = 0
    paper,         // literal divisors: v_i/(n^2(n-1)) - mu_i/n, 2 cov_ij/n^2
};

std::string to_string(QuboMode mode);
QuboMode qubo_mode_from_string(const std::string& name);

/// Additive adjustment steering solvers toward the target portfolio size.
struct ShiftParams {
    double g = 0.0;    // best classical score seen so far
    double m = 5.0;    // multiplier, open interval (1.5, 20)
    double s_n = 0.0;  // -2 g n m / |U|
};

/**
 * Upper-triangular QUBO: diagonal entries are the linear terms, the
 * strictly-upper triangle the pairwise terms, strictly-lower all zero.
 * Energy of mask x is sum_i diag_i x_i + sum_{i<j} upper_ij x_i x_j.
 */
struct QuboMatrix {
    Eigen::MatrixXd coeffs;
    int target_size = 0;
    QuboMode mode = QuboMode::exact_alpha0;
    double alpha = 0.0;
    std::optional<ShiftParams> shift;
    bool scaled = false;

    int universe() const { return static_cast<int>(coeffs.rows()); }
    double diag(int i) const { return coeffs(i, i); }
    /// Pairwise coefficient for an unordered pair, i != j.
    double pair_coeff(int i, int j) const {
        return i < j ? coeffs(i, j) : coeffs(j, i);
    }
    double max_abs_coeff() const;
};

/// Spin-variable form of a QUBO under z = a x + b: for every binary x,
/// x^t Q_sym x = z^t J z + c . z + k.
struct IsingModel {
    Eigen::MatrixXd couplings;  // J, symmetric
    Eigen::VectorXd field;      // c
    double offset = 0.0;        // k
    double a = 2.0;
    double b = -1.0;

    double energy(std::uint64_t mask) const;
};

/// Compile per-asset statistics into the QUBO for one portfolio size.
QuboMatrix build_qubo(const ReturnStats& stats, int target_size, double alpha,
                      QuboMode mode);

/// s_n = -2 g n m / |U|; m restricted to the open interval (1.5, 20).
ShiftParams shift_factor(double g, double m, int target_size, int universe);

/// Add s_n/n to every diagonal entry and 2 s_n/(n-1) to every
/// strictly-upper entry, n the matrix's target size. Must run before
/// scaling, at most once.
QuboMatrix apply_shift(const QuboMatrix& q, const ShiftParams& s);

/// Replace each coefficient c with clamp(tanh(c/tau), -0.99, 0.99).
/// tau <= 0 selects the default pre-scale, the max absolute coefficient
/// (an all-zero matrix passes through with the scaled flag set).
QuboMatrix tanh_scale(const QuboMatrix& q, double tau = 0.0);

double qubo_energy(const QuboMatrix& q, const Portfolio& mask);
double qubo_energy(const QuboMatrix& q, std::uint64_t mask);

IsingModel to_ising(const QuboMatrix& q, double a = 2.0, double b = -1.0);

struct LandscapePoint {
    int size = 0;
    double energy = 0.0;
    double cqns = 0.0;  // NaN when undefined at this mask
    std::uint64_t mask = 0;
};

struct LandscapeBudget {
    long long samples = 0;
    std::uint64_t seed = 0;
};

/**
 * (size, energy, cqns) for every nonempty mask (N <= 24) or for a random
 * sample of masks when a budget is given. Sorted by (size, mask).
 */
std::vector<LandscapePoint> landscape_profile(
    const QuboMatrix& q, const ReturnStats& stats, double alpha,
    const std::optional<LandscapeBudget>& budget = std::nullopt);

void write_landscape_csv(const std::vector<LandscapePoint>& points,
                         const std::string& path);

/// Coordinate-format text file: header `N target_size mode alpha`, then
/// one `i j value` line per nonzero coefficient, i <= j, sorted by (i, j).
void export_qubo(const QuboMatrix& q, const std::string& path);
QuboMatrix import_qubo(const std::string& path);

}  // namespace quboport
