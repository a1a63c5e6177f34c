#include "glbandit/design.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace glbandit {

namespace {

constexpr double kNormSlack = 1e-12;

void check_action_norm(const Eigen::Ref<const Vector>& a, const char* what) {
    if (!a.allFinite() || a.norm() > 1.0 + kNormSlack)
        throw std::invalid_argument(std::string(what) + ": action norm exceeds 1");
}

}  // namespace

HistoryBuffer::HistoryBuffer(std::size_t dim, double reward_bound) : dim_(dim), reward_bound_(reward_bound) {
    if (dim == 0) throw std::invalid_argument("HistoryBuffer: dimension must be positive");
    if (!(reward_bound >= 0.0)) throw std::invalid_argument("HistoryBuffer: reward bound must be nonnegative");
}

void HistoryBuffer::push(const Eigen::Ref<const Vector>& a, double reward) {
    if (static_cast<std::size_t>(a.size()) != dim_) throw std::invalid_argument("HistoryBuffer::push: dimension mismatch");
    check_action_norm(a, "HistoryBuffer::push");
    if (!(reward >= 0.0 && reward <= reward_bound_))
        throw std::invalid_argument("HistoryBuffer::push: reward outside [0, m]");
    actions_.insert(actions_.end(), a.data(), a.data() + a.size());
    rewards_.push_back(reward);
}

void HistoryBuffer::drop_front(std::size_t count) {
    count = std::min(count, size());
    head_ += count;
    origin_ += count;
    if (head_ > 4096 && head_ > size()) {
        actions_.erase(actions_.begin(), actions_.begin() + static_cast<std::ptrdiff_t>(head_ * dim_));
        rewards_.erase(rewards_.begin(), rewards_.begin() + static_cast<std::ptrdiff_t>(head_));
        head_ = 0;
    }
}

void ForgettingScheme::validate() const {
    switch (kind) {
        case Kind::discount:
            if (!(gamma > 0.0 && gamma < 1.0))
                throw std::invalid_argument("ForgettingScheme: discount factor must lie in (0, 1)");
            break;
        case Kind::window:
            if (tau < 1) throw std::invalid_argument("ForgettingScheme: window length must be >= 1");
            break;
        case Kind::none:
            break;
    }
}

std::string ForgettingScheme::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
        case Kind::discount: os << "discount(" << gamma << ")"; break;
        case Kind::window: os << "window(" << tau << ")"; break;
        case Kind::none: os << "none"; break;
    }
    return os.str();
}

DesignState::DesignState(std::size_t dim, double ridge) : ridge_(ridge) {
    if (dim == 0) throw std::invalid_argument("DesignState: dimension must be positive");
    if (!(ridge > 0.0)) throw std::invalid_argument("DesignState: ridge must be positive");
    const auto n = static_cast<Eigen::Index>(dim);
    v_ = ridge * Matrix::Identity(n, n);
    refactor();
}

void DesignState::update(const Eigen::Ref<const Vector>& a, const ForgettingScheme& scheme, const Vector* evicted) {
    if (a.size() != v_.rows()) throw std::invalid_argument("update_design: dimension mismatch");
    check_action_norm(a, "update_design");
    switch (scheme.kind) {
        case ForgettingScheme::Kind::discount:
            v_ *= scheme.gamma;
            v_.diagonal().array() += ridge_ * (1.0 - scheme.gamma);
            v_.noalias() += a * a.transpose();
            break;
        case ForgettingScheme::Kind::window: {
            const bool full = window_fill_ >= scheme.tau;
            if (full && evicted == nullptr)
                throw std::invalid_argument("update_design: window is full, the evicted action is required");
            if (!full && evicted != nullptr)
                throw std::invalid_argument("update_design: eviction requested before the window is full");
            if (full) {
                if (evicted->size() != v_.rows()) throw std::invalid_argument("update_design: dimension mismatch");
                check_action_norm(*evicted, "update_design (evicted)");
                v_.noalias() -= (*evicted) * evicted->transpose();
            } else {
                ++window_fill_;
            }
            v_.noalias() += a * a.transpose();
            break;
        }
        case ForgettingScheme::Kind::none:
            v_.noalias() += a * a.transpose();
            break;
    }
    ++rounds_;
    refactor();
}

void DesignState::assign(Matrix v, std::size_t rounds, std::size_t window_fill) {
    if (v.rows() != v_.rows() || v.cols() != v_.cols()) throw std::invalid_argument("DesignState::assign: shape mismatch");
    v_ = std::move(v);
    rounds_ = rounds;
    window_fill_ = window_fill;
    refactor();
}

void DesignState::refactor() {
    Eigen::LLT<Matrix> llt(v_);
    if (llt.info() != Eigen::Success) throw NumericError("DesignState: design matrix lost positive definiteness", Vector());
    chol_ = llt.matrixL();
}

double DesignState::inv_norm_squared(const Eigen::Ref<const Vector>& a) const {
    const Vector y = chol_.triangularView<Eigen::Lower>().solve(a);
    return y.squaredNorm();
}

double DesignState::inv_norm(const Eigen::Ref<const Vector>& a) const { return std::sqrt(inv_norm_squared(a)); }

double DesignState::log_det() const { return 2.0 * chol_.diagonal().array().log().sum(); }

double DesignState::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(v_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

DesignState rebuild_direct(const HistoryBuffer& history, const ForgettingScheme& scheme, double ridge) {
    scheme.validate();
    DesignState state(history.dim(), ridge);
    const std::size_t n = history.size();
    std::size_t first = 0;
    if (scheme.kind == ForgettingScheme::Kind::window && n > scheme.tau) first = n - scheme.tau;
    Matrix v = ridge * Matrix::Identity(state.matrix().rows(), state.matrix().cols());
    for (std::size_t i = first; i < n; ++i) {
        double w = 1.0;
        if (scheme.kind == ForgettingScheme::Kind::discount)
            w = std::pow(scheme.gamma, static_cast<double>(n - 1 - i));
        const auto a = history.action(i);
        v.noalias() += w * (a * a.transpose());
    }
    state.assign(std::move(v), history.total_pushed(), n - first);
    return state;
}

double relative_frobenius(const Matrix& a, const Matrix& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace glbandit
