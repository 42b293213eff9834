#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace envirollm {

/// Fan-out of serialized events to any number of subscribers. Publishing
/// never blocks on a subscriber: one whose queue is full is disconnected.
class LiveFeed {
 public:
  static constexpr std::size_t kDefaultCapacity = 64;

  class Subscription {
   public:
    explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

    /// Next event, waiting up to `timeout`. nullopt on timeout or once the
    /// subscription is closed and drained.
    std::optional<std::string> next(std::chrono::milliseconds timeout);

    bool closed() const;
    /// True when the feed cut this subscriber off for falling behind.
    bool dropped() const;
    std::size_t pending() const;

   private:
    friend class LiveFeed;

    bool push(std::string event);
    void close(bool dropped);

    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::string> queue_;
    bool closed_ = false;
    bool dropped_ = false;
  };

  explicit LiveFeed(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {}

  std::shared_ptr<Subscription> subscribe();
  void unsubscribe(const std::shared_ptr<Subscription>& subscription);
  void publish(const std::string& event);
  void close_all();
  std::size_t subscriber_count() const;
  std::size_t published_count() const;

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::vector<std::shared_ptr<Subscription>> subscribers_;
  std::size_t published_ = 0;
};

}  // namespace envirollm
