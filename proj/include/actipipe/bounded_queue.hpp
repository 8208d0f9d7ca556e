#pragma once

// Blocking bounded queue between the ingestion and classification stages.
// push() blocks while full; pop() waits up to a timeout. close() wakes
// everyone; pop() then drains what is left and returns nullopt when empty.

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>

namespace actipipe {

template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

    /// Returns false if the queue was closed before the item fit.
    bool push(T item) {
        std::unique_lock<std::mutex> lk(mu_);
        not_full_.wait(lk, [this] { return closed_ || items_.size() < capacity_; });
        if (closed_) return false;
        items_.push_back(std::move(item));
        high_water_ = std::max(high_water_, items_.size());
        lk.unlock();
        not_empty_.notify_one();
        return true;
    }

    template <typename Rep, typename Period>
    std::optional<T> pop(std::chrono::duration<Rep, Period> timeout) {
        std::unique_lock<std::mutex> lk(mu_);
        if (!not_empty_.wait_for(lk, timeout, [this] { return closed_ || !items_.empty(); })) {
            return std::nullopt;
        }
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        lk.unlock();
        not_full_.notify_one();
        return item;
    }

    void close() {
        {
            std::lock_guard<std::mutex> lk(mu_);
            closed_ = true;
        }
        not_full_.notify_all();
        not_empty_.notify_all();
    }

    bool closed() const {
        std::lock_guard<std::mutex> lk(mu_);
        return closed_;
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lk(mu_);
        return items_.size();
    }

    std::size_t capacity() const { return capacity_; }

    std::size_t high_water() const {
        std::lock_guard<std::mutex> lk(mu_);
        return high_water_;
    }

private:
    const std::size_t capacity_;
    mutable std::mutex mu_;
    std::condition_variable not_full_;
    std::condition_variable not_empty_;
    std::deque<T> items_;
    std::size_t high_water_ = 0;
    bool closed_ = false;
};

}  // namespace actipipe
