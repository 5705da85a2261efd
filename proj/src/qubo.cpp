#include "quboport/qubo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "quboport/csv.hpp"
#include "quboport/rng.hpp"

namespace quboport {

std::string to_string(QuboMode mode) {
    return mode == QuboMode::exact_alpha0 ? "exact_alpha0" : "paper";
}

QuboMode qubo_mode_from_string(const std::string& name) {
    if (name == "exact_alpha0") return QuboMode::exact_alpha0;
    if (name == "paper") return QuboMode::paper;
    throw MalformedData("unknown QUBO mode: '" + name + "'");
}

double QuboMatrix::max_abs_coeff() const {
    double best = 0.0;
    for (int i = 0; i < universe(); ++i)
        for (int j = i; j < universe(); ++j)
            best = std::max(best, std::abs(coeffs(i, j)));
    return best;
}

QuboMatrix build_qubo(const ReturnStats& stats, int target_size, double alpha,
                      QuboMode mode) {
    const int N = stats.universe();
    if (target_size < 2)
        throw UnsupportedSize("QUBO needs target size >= 2; rank single assets directly");
    if (target_size > N)
        throw UnsupportedSize("target size exceeds universe size");

    const double n = double(target_size);
    const double n2 = n * n;
    QuboMatrix q;
    q.coeffs = Eigen::MatrixXd::Zero(N, N);
    q.target_size = target_size;
    q.mode = mode;
    q.alpha = alpha;

    if (mode == QuboMode::exact_alpha0) {
        // Expanding Var - E^2 of an equal-weight size-n mask gives
        // coefficients quadratic in the inclusion bits, so the energy is
        // the alpha = 0 score itself.
        for (int i = 0; i < N; ++i) {
            q.coeffs(i, i) = (stats.cov(i, i) - stats.mu[i] * stats.mu[i]) / n2;
            for (int j = i + 1; j < N; ++j)
                q.coeffs(i, j) = 2.0 * (stats.cov(i, j) - stats.mu[i] * stats.mu[j]) / n2;
        }
    } else {
        for (int i = 0; i < N; ++i) {
            q.coeffs(i, i) = stats.cov(i, i) / (n2 * (n - 1.0)) - stats.mu[i] / n;
            for (int j = i + 1; j < N; ++j)
                q.coeffs(i, j) = 2.0 * stats.cov(i, j) / n2;
        }
    }
    return q;
}

ShiftParams shift_factor(double g, double m, int target_size, int universe) {
    if (target_size <= 1) throw ParamOutOfRange("shift needs target size > 1");
    if (universe < target_size) throw ParamOutOfRange("universe smaller than target size");
    if (!(m > 1.5 && m < 20.0))
        throw ParamOutOfRange("shift multiplier must lie in (1.5, 20), got " + fmt_g17(m));
    ShiftParams s;
    s.g = g;
    s.m = m;
    s.s_n = -2.0 * g * double(target_size) * m / double(universe);
    return s;
}

QuboMatrix apply_shift(const QuboMatrix& q, const ShiftParams& s) {
    if (q.scaled) throw InvalidPhaseOrder("shift must precede tanh scaling");
    if (q.shift) throw InvalidPhaseOrder("matrix is already shifted");
    const double n = double(q.target_size);
    QuboMatrix out = q;
    for (int i = 0; i < q.universe(); ++i) {
        out.coeffs(i, i) += s.s_n / n;
        for (int j = i + 1; j < q.universe(); ++j)
            out.coeffs(i, j) += 2.0 * s.s_n / (n - 1.0);
    }
    out.shift = s;
    return out;
}

QuboMatrix tanh_scale(const QuboMatrix& q, double tau) {
    QuboMatrix out = q;
    out.scaled = true;
    if (tau <= 0.0) tau = q.max_abs_coeff();
    if (tau == 0.0) return out;  // all-zero matrix passes through
    for (int i = 0; i < q.universe(); ++i)
        for (int j = i; j < q.universe(); ++j)
            out.coeffs(i, j) = std::clamp(std::tanh(q.coeffs(i, j) / tau), -0.99, 0.99);
    return out;
}

double qubo_energy(const QuboMatrix& q, const Portfolio& mask) {
    if (mask.universe != q.universe())
        throw DimensionError("mask universe does not match QUBO size");
    return qubo_energy(q, mask.mask);
}

double qubo_energy(const QuboMatrix& q, std::uint64_t mask) {
    const int N = q.universe();
    if (N < 64 && (mask >> N) != 0)
        throw DimensionError("mask has bits outside the QUBO universe");
    double e = 0.0;
    for (int i = 0; i < N; ++i) {
        if (!((mask >> i) & 1u)) continue;
        e += q.coeffs(i, i);
        for (int j = i + 1; j < N; ++j)
            if ((mask >> j) & 1u) e += q.coeffs(i, j);
    }
    return e;
}

double IsingModel::energy(std::uint64_t mask) const {
    const int N = static_cast<int>(field.size());
    Eigen::VectorXd z(N);
    for (int i = 0; i < N; ++i) z[i] = a * double((mask >> i) & 1u) + b;
    return z.dot(couplings * z) + field.dot(z) + offset;
}

IsingModel to_ising(const QuboMatrix& q, double a, double b) {
    if (a == 0.0) throw DegenerateTransform("affine scale a must be nonzero");
    const int N = q.universe();

    // View the stored triangle as a symmetric matrix: x^t Q_sym x
    // reproduces the QUBO energy on binary x (x_i^2 = x_i).
    Eigen::MatrixXd qsym(N, N);
    for (int i = 0; i < N; ++i) {
        qsym(i, i) = q.coeffs(i, i);
        for (int j = i + 1; j < N; ++j)
            qsym(i, j) = qsym(j, i) = 0.5 * q.coeffs(i, j);
    }

    IsingModel ising;
    ising.a = a;
    ising.b = b;
    ising.couplings = qsym / (a * a);
    ising.field = -2.0 * (b / (a * a)) * (qsym * Eigen::VectorXd::Ones(N));
    ising.offset = (b * b / (a * a)) * qsym.sum();
    return ising;
}

namespace {

// Incremental landscape sweep in Gray-code order: one bit flips per
// step, so energy and the CQNS building blocks update in O(N).
struct SweepState {
    double energy = 0.0;
    double sum_mu = 0.0;
    double sum_var = 0.0;
    double sum_pairs = 0.0;
    int bits = 0;

    void flip(const QuboMatrix& q, const ReturnStats& stats, std::uint64_t mask,
              int i) {
        const bool adding = !((mask >> i) & 1u);
        const double sign = adding ? 1.0 : -1.0;
        double de = q.coeffs(i, i);
        double dp = 0.0;
        for (int j = 0; j < q.universe(); ++j) {
            if (j == i || !((mask >> j) & 1u)) continue;
            de += q.pair_coeff(i, j);
            dp += stats.cov(i, j);
        }
        energy += sign * de;
        sum_mu += sign * stats.mu[i];
        sum_var += sign * stats.cov(i, i);
        sum_pairs += sign * dp;
        bits += adding ? 1 : -1;
    }
};

double cqns_from_sums(const SweepState& st, double alpha) {
    const double n = double(st.bits);
    const double mean = st.sum_mu / n;
    const double variance = (st.sum_var + 2.0 * st.sum_pairs) / (n * n);
    const double exponent = 2.0 + alpha;
    if (mean < 0.0 && std::nearbyint(exponent) != exponent)
        return std::numeric_limits<double>::quiet_NaN();
    return variance - std::pow(mean, exponent);
}

}  // namespace

std::vector<LandscapePoint> landscape_profile(
    const QuboMatrix& q, const ReturnStats& stats, double alpha,
    const std::optional<LandscapeBudget>& budget) {
    const int N = q.universe();
    if (stats.universe() != N)
        throw DimensionError("stats universe does not match QUBO size");

    std::vector<LandscapePoint> points;
    if (!budget) {
        if (N > 24)
            throw BudgetRequired("universe too large to enumerate; provide a sample budget");
        const std::uint64_t total = std::uint64_t(1) << N;
        points.reserve(total - 1);
        SweepState st;
        std::uint64_t mask = 0;
        for (std::uint64_t k = 1; k < total; ++k) {
            const int bit = __builtin_ctzll(k);  // Gray-code flip position
            st.flip(q, stats, mask, bit);
            mask ^= std::uint64_t(1) << bit;
            points.push_back({st.bits, st.energy, cqns_from_sums(st, alpha), mask});
        }
    } else {
        if (budget->samples < 1) throw ParamOutOfRange("sample budget must be positive");
        auto gen = make_engine(budget->seed);
        std::vector<std::uint64_t> masks;
        masks.reserve(budget->samples);
        for (long long s = 0; s < budget->samples; ++s)
            masks.push_back(random_nonempty_mask(gen, N));
        std::sort(masks.begin(), masks.end());
        masks.erase(std::unique(masks.begin(), masks.end()), masks.end());
        for (std::uint64_t mask : masks) {
            SweepState st;
            std::uint64_t cur = 0;
            for (int i = 0; i < N; ++i) {
                if (!((mask >> i) & 1u)) continue;
                st.flip(q, stats, cur, i);
                cur |= std::uint64_t(1) << i;
            }
            points.push_back({st.bits, st.energy, cqns_from_sums(st, alpha), mask});
        }
    }

    std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
        return a.size != b.size ? a.size < b.size : a.mask < b.mask;
    });
    return points;
}

void write_landscape_csv(const std::vector<LandscapePoint>& points,
                         const std::string& path) {
    std::string out = "size,energy,cqns\n";
    for (const auto& p : points) {
        out += std::to_string(p.size);
        out += ',';
        out += fmt_g17(p.energy);
        out += ',';
        out += fmt_g17(p.cqns);
        out += '\n';
    }
    write_file_atomic(path, out);
}

void export_qubo(const QuboMatrix& q, const std::string& path) {
    std::ostringstream out;
    out << q.universe() << ' ' << q.target_size << ' ' << to_string(q.mode) << ' '
        << fmt_g17(q.alpha) << '\n';
    for (int i = 0; i < q.universe(); ++i)
        for (int j = i; j < q.universe(); ++j)
            if (q.coeffs(i, j) != 0.0)
                out << i << ' ' << j << ' ' << fmt_g17(q.coeffs(i, j)) << '\n';
    write_file_atomic(path, out.str());
}

QuboMatrix import_qubo(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::string header;
    if (!std::getline(in, header)) throw MalformedData(path + ": empty file");
    std::istringstream hs(header);
    int N = 0, target_size = 0;
    std::string mode_name, alpha_text;
    if (!(hs >> N >> target_size >> mode_name >> alpha_text))
        throw MalformedData(path + ": bad header line");
    if (N < 2 || N > 64) throw MalformedData(path + ": bad universe size");

    QuboMatrix q;
    q.coeffs = Eigen::MatrixXd::Zero(N, N);
    q.target_size = target_size;
    q.mode = qubo_mode_from_string(mode_name);
    q.alpha = parse_cell(alpha_text, path + " header alpha");

    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        int i = 0, j = 0;
        std::string value_text;
        if (!(ls >> i >> j >> value_text))
            throw MalformedData(path + ":" + std::to_string(lineno) + ": bad entry line");
        if (i < 0 || j < i || j >= N)
            throw MalformedData(path + ":" + std::to_string(lineno) + ": bad indices");
        q.coeffs(i, j) = parse_cell(value_text, path + ":" + std::to_string(lineno));
    }
    return q;
}

}  // namespace quboport
