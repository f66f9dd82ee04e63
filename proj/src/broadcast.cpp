#include "ttcoach/broadcast.hpp"

#include <algorithm>

namespace ttcoach {

Subscription::Subscription(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 1)) {}

void Subscription::push(std::string message) {
    {
        std::lock_guard lock(mutex_);
        if (closed_) return;
        if (queue_.size() == capacity_) {
            queue_.pop_front();
            ++dropped_;
        }
        queue_.push_back(std::move(message));
    }
    cv_.notify_all();
    notify();
}

std::optional<std::string> Subscription::try_pop() {
    std::lock_guard lock(mutex_);
    if (queue_.empty()) return std::nullopt;
    auto msg = std::move(queue_.front());
    queue_.pop_front();
    return msg;
}

std::optional<std::string> Subscription::pop_wait(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return std::nullopt;
    auto msg = std::move(queue_.front());
    queue_.pop_front();
    return msg;
}

void Subscription::close(std::string reason) {
    {
        std::lock_guard lock(mutex_);
        if (closed_) return;
        closed_ = true;
        reason_ = std::move(reason);
    }
    cv_.notify_all();
    notify();
}

bool Subscription::closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
}

std::string Subscription::close_reason() const {
    std::lock_guard lock(mutex_);
    return reason_;
}

std::size_t Subscription::size() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
}

std::size_t Subscription::dropped() const {
    std::lock_guard lock(mutex_);
    return dropped_;
}

void Subscription::set_notify(std::function<void()> notify) {
    std::lock_guard lock(mutex_);
    notify_ = std::move(notify);
}

void Subscription::notify() {
    std::function<void()> fn;
    {
        std::lock_guard lock(mutex_);
        fn = notify_;
    }
    if (fn) fn();
}

std::shared_ptr<Subscription> FeedbackHub::subscribe(std::size_t capacity) {
    auto sub = std::make_shared<Subscription>(capacity);
    std::lock_guard lock(mutex_);
    if (closed_) {
        sub->close(reason_);
    } else {
        subscribers_.push_back(sub);
    }
    return sub;
}

void FeedbackHub::unsubscribe(const std::shared_ptr<Subscription>& sub) {
    std::lock_guard lock(mutex_);
    std::erase_if(subscribers_, [&](const std::weak_ptr<Subscription>& w) {
        auto s = w.lock();
        return !s || s == sub;
    });
}

void FeedbackHub::publish(const std::string& message) {
    std::vector<std::shared_ptr<Subscription>> targets;
    {
        std::lock_guard lock(mutex_);
        std::erase_if(subscribers_, [](const auto& w) { return w.expired(); });
        for (const auto& w : subscribers_) {
            if (auto s = w.lock()) targets.push_back(std::move(s));
        }
    }
    for (const auto& s : targets) s->push(message);
}

void FeedbackHub::close(const std::string& reason) {
    std::vector<std::shared_ptr<Subscription>> targets;
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
        reason_ = reason;
        for (const auto& w : subscribers_) {
            if (auto s = w.lock()) targets.push_back(std::move(s));
        }
        subscribers_.clear();
    }
    for (const auto& s : targets) s->close(reason);
}

std::size_t FeedbackHub::subscriber_count() const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(std::count_if(subscribers_.begin(), subscribers_.end(),
                                                  [](const auto& w) { return !w.expired(); }));
}

}  // namespace ttcoach
