#pragma once

#include <cstddef>
#include <string>

#include "glbandit/history.hpp"
#include "glbandit/types.hpp"

namespace glbandit {

struct ForgettingScheme {
    enum class Kind { none, discount, window };

    Kind kind = Kind::none;
    double gamma = 1.0;    // discount only, in (0, 1)
    std::size_t tau = 0;   // window only, >= 1

    static ForgettingScheme stationary() { return {}; }
    static ForgettingScheme discount(double gamma) { return {Kind::discount, gamma, 0}; }
    static ForgettingScheme window(std::size_t tau) { return {Kind::window, 1.0, tau}; }

    void validate() const;
    std::string describe() const;

    bool operator==(const ForgettingScheme&) const = default;
};

/// V_t = sum_s w_s a_s a_s^T + ridge * I, kept together with its Cholesky factor.
/// Policies use ridge = lambda / c_mu; the elliptical-potential checks use ridge = lambda.
class DesignState {
public:
    DesignState(std::size_t dim, double ridge);

    /// discount: V <- a a^T + gamma V + ridge (1 - gamma) I
    /// window:   V <- V + a a^T - e e^T, where `evicted` (e) is mandatory once tau samples are held
    /// none:     V <- V + a a^T
    void update(const Eigen::Ref<const Vector>& a, const ForgettingScheme& scheme,
                const Vector* evicted = nullptr);

    double inv_norm(const Eigen::Ref<const Vector>& a) const;
    double inv_norm_squared(const Eigen::Ref<const Vector>& a) const;
    double log_det() const;
    double min_eigenvalue() const;

    const Matrix& matrix() const noexcept { return v_; }
    const Matrix& cholesky_factor() const noexcept { return chol_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(v_.rows()); }
    double ridge() const noexcept { return ridge_; }
    std::size_t rounds() const noexcept { return rounds_; }
    std::size_t window_fill() const noexcept { return window_fill_; }

    /// Replace V wholesale (used after a direct rebuild).
    void assign(Matrix v, std::size_t rounds, std::size_t window_fill);

private:
    void refactor();

    Matrix v_;
    Matrix chol_;
    double ridge_;
    std::size_t rounds_ = 0;
    std::size_t window_fill_ = 0;
};

/// Non-recursive V from stored history: weights gamma^(age) for discount, 1 on the last tau
/// entries for a window, 1 everywhere otherwise.
DesignState rebuild_direct(const HistoryBuffer& history, const ForgettingScheme& scheme, double ridge);

/// ||A - B||_F / max(||B||_F, 1e-300)
double relative_frobenius(const Matrix& a, const Matrix& b);

}  // namespace glbandit
