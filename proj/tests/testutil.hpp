#pragma once

// Shared fixtures for the test suite: synthetic statistics with a PSD
// covariance, random QUBO matrices, and a scratch-directory guard.
#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "quboport/market_data.hpp"
#include "quboport/qubo.hpp"
#include "quboport/rng.hpp"

namespace testutil {

/// Random statistics over n assets. Covariance is a factor model
/// B B^t / f + diagonal noise, so it is PSD by construction; magnitudes
/// mimic daily log-return data.
inline quboport::ReturnStats make_stats(int n, std::uint64_t seed) {
    auto gen = quboport::make_engine(seed);
    auto u = [&] { return quboport::uniform01(gen); };

    quboport::ReturnStats s;
    s.mu.resize(n);
    for (int i = 0; i < n; ++i) s.mu[i] = 2e-4 + 8e-4 * u();

    const int f = 3;
    Eigen::MatrixXd b(n, f);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < f; ++j) b(i, j) = (u() - 0.5) * 0.02;
    Eigen::MatrixXd cov = b * b.transpose() / double(f);
    for (int i = 0; i < n; ++i) cov(i, i) += 1e-5 + 4e-5 * u();
    s.cov = 0.5 * (cov + cov.transpose());

    s.market_cov.resize(n);
    for (int i = 0; i < n; ++i) s.market_cov[i] = 1e-5 + 9e-5 * u();
    const double market_var = 8e-5;
    s.beta = s.market_cov / market_var;
    s.n_days = 253;
    return s;
}

/// Random upper-triangular QUBO with coefficients in [-scale, scale].
inline quboport::QuboMatrix random_qubo(int n, std::uint64_t seed,
                                        double scale = 1.0) {
    auto gen = quboport::make_engine(seed);
    quboport::QuboMatrix q;
    q.coeffs = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            q.coeffs(i, j) = (quboport::uniform01(gen) * 2.0 - 1.0) * scale;
    q.target_size = std::max(2, n / 2);
    return q;
}

/// Unique scratch directory, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("quboport_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

inline void write_text(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << contents;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

}  // namespace testutil
