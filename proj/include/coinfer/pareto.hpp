#pragma once

#include <algorithm>
#include <iterator>
#include <vector>

namespace coinfer {

/// Items not dominated in (energy, time), both minimized. Kept in ascending
/// energy and therefore strictly descending time, so both queries are
/// logarithmic. On an exact tie the item inserted first stays.
template <class T, auto Energy, auto Time>
class ParetoFront {
public:
    bool dominated(double energy, double time) const {
        const auto it = std::upper_bound(items_.begin(), items_.end(), energy,
                                         [](double e, const T& x) { return e < x.*Energy; });
        return it != items_.begin() && (*std::prev(it)).*Time <= time;
    }

    /// Inserts `item` unless it is dominated; drops the items it dominates.
    bool insert(T item) {
        const double energy = item.*Energy;
        const double time = item.*Time;
        if (dominated(energy, time)) return false;
        auto first = std::lower_bound(items_.begin(), items_.end(), energy,
                                      [](const T& x, double e) { return x.*Energy < e; });
        auto last = first;
        while (last != items_.end() && (*last).*Time >= time) ++last;
        first = items_.erase(first, last);
        items_.insert(first, std::move(item));
        return true;
    }

    bool empty() const noexcept { return items_.empty(); }
    std::size_t size() const noexcept { return items_.size(); }
    const std::vector<T>& items() const noexcept { return items_; }
    std::vector<T> release() && { return std::move(items_); }

private:
    std::vector<T> items_;
};

}  // namespace coinfer
