#pragma once

#include <cstddef>
#include <vector>

#include "glbandit/types.hpp"

namespace glbandit {

/// Ordered (action, reward) observations. Actions are stored row-contiguous so
/// likelihood sweeps read memory linearly. Dropping a prefix advances origin_index.
class HistoryBuffer {
public:
    HistoryBuffer(std::size_t dim, double reward_bound);

    /// Rejects ||a|| > 1 + 1e-12 and rewards outside [0, m].
    void push(const Eigen::Ref<const Vector>& a, double reward);

    std::size_t size() const noexcept { return rewards_.size() - head_; }
    bool empty() const noexcept { return size() == 0; }
    std::size_t dim() const noexcept { return dim_; }
    double reward_bound() const noexcept { return reward_bound_; }

    /// Absolute index (0-based) of the first retained entry.
    std::size_t origin_index() const noexcept { return origin_; }
    /// Number of observations ever pushed.
    std::size_t total_pushed() const noexcept { return origin_ + size(); }

    const double* action_data(std::size_t i) const noexcept { return actions_.data() + (head_ + i) * dim_; }
    Eigen::Map<const Vector> action(std::size_t i) const {
        return Eigen::Map<const Vector>(action_data(i), static_cast<Eigen::Index>(dim_));
    }
    double reward(std::size_t i) const noexcept { return rewards_[head_ + i]; }

    void drop_front(std::size_t count);

private:
    std::size_t dim_;
    double reward_bound_;
    std::vector<double> actions_;
    std::vector<double> rewards_;
    std::size_t head_ = 0;
    std::size_t origin_ = 0;
};

}  // namespace glbandit
