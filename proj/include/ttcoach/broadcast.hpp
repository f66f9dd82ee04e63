#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace ttcoach {

// Bounded per-subscriber message queue. When full, push() drops the oldest
// message so a slow reader never stalls the publisher.
class Subscription {
public:
    explicit Subscription(std::size_t capacity);

    void push(std::string message);
    std::optional<std::string> try_pop();
    std::optional<std::string> pop_wait(std::chrono::milliseconds timeout);

    // Closing keeps queued messages readable; `reason` explains the close.
    void close(std::string reason);
    bool closed() const;
    std::string close_reason() const;

    std::size_t size() const;
    std::size_t dropped() const;

    // Called (outside the lock) after every push and on close.
    void set_notify(std::function<void()> notify);

private:
    void notify();

    const std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::string> queue_;
    std::size_t dropped_ = 0;
    bool closed_ = false;
    std::string reason_;
    std::function<void()> notify_;
};

// Fan-out of one session's feedback to any number of subscribers. Late
// joiners only see messages published after they subscribe.
class FeedbackHub {
public:
    std::shared_ptr<Subscription> subscribe(std::size_t capacity);
    void unsubscribe(const std::shared_ptr<Subscription>& sub);
    void publish(const std::string& message);
    void close(const std::string& reason);
    std::size_t subscriber_count() const;

private:
    mutable std::mutex mutex_;
    std::vector<std::weak_ptr<Subscription>> subscribers_;
    bool closed_ = false;
    std::string reason_;
};

}  // namespace ttcoach
