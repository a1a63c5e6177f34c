#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace glbandit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// All randomness flows through explicitly passed engines; there is no global stream.
using Rng = std::mt19937_64;

/// Independent engine for (seed, stream, index). Distinct tuples give unrelated streams.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

/// Exact equality that tolerates differing sizes (Eigen's operator== requires equal shapes).
inline bool same_vector(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }

inline bool same_vectors(const std::vector<Vector>& a, const std::vector<Vector>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same_vector(a[i], b[i])) return false;
    return true;
}

/// Raised when a configuration value is missing or out of range. `field` is a json-path style locator.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Raised when an objective or iterate stops being finite (e.g. Poisson overflow).
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, Vector theta)
        : std::runtime_error(what), theta_(std::move(theta)) {}
    const Vector& theta() const noexcept { return theta_; }

private:
    Vector theta_;
};

}  // namespace glbandit
