#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace skt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for numerical failures inside a solve (as opposed to bad input).
class SolverError : public std::runtime_error
{
public:
    explicit SolverError(const std::string& what, double time = -1.0)
        : std::runtime_error(what), time_(time)
    {}

    /// Time stamp of the failing step, or a negative value when unknown.
    double time() const { return time_; }

private:
    double time_;
};

class NewtonDiverged : public SolverError
{
public:
    NewtonDiverged(const std::string& what, double last_residual, double time = -1.0)
        : SolverError(what, time), last_residual_(last_residual)
    {}
    double last_residual() const { return last_residual_; }

private:
    double last_residual_;
};

class EllipticityLost : public SolverError
{
public:
    using SolverError::SolverError;
};

class LinearSolveFailed : public SolverError
{
public:
    LinearSolveFailed(const std::string& what, int step_index)
        : SolverError(what), step_index_(step_index)
    {}
    int step_index() const { return step_index_; }

private:
    int step_index_;
};

/// 64-bit FNV-1a; used for config and model fingerprints embedded in outputs.
inline std::uint64_t fnv1a(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return s;
}

/// Uniform samples in the closed ball |u| <= radius of R^m. The generator is
/// advanced deterministically so a fixed seed reproduces the same states.
inline std::vector<Vector> sample_states(int m, double radius, int count, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(count));
    while (static_cast<int>(out.size()) < count) {
        Vector u(m);
        for (int i = 0; i < m; ++i) u[i] = unit(gen);
        if (u.norm() <= 1.0) out.push_back(radius * u);
    }
    return out;
}

/// Same as sample_states but restricted to the nonnegative orthant.
inline std::vector<Vector> sample_nonnegative_states(int m, double radius, int count,
                                                     std::uint64_t seed)
{
    auto out = sample_states(m, radius, count, seed);
    for (auto& u : out) u = u.cwiseAbs();
    return out;
}

} // namespace skt
