#include "envirollm/live_feed.hpp"

#include <algorithm>

namespace envirollm {

std::optional<std::string> LiveFeed::Subscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [this] { return !queue_.empty() || closed_; });
  if (queue_.empty()) {
    return std::nullopt;
  }
  auto event = std::move(queue_.front());
  queue_.pop_front();
  return event;
}

bool LiveFeed::Subscription::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

bool LiveFeed::Subscription::dropped() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

std::size_t LiveFeed::Subscription::pending() const {
  std::lock_guard lock(mutex_);
  return queue_.size();
}

bool LiveFeed::Subscription::push(std::string event) {
  std::lock_guard lock(mutex_);
  if (closed_) {
    return false;
  }
  if (queue_.size() >= capacity_) {
    closed_ = true;
    dropped_ = true;
    queue_.clear();
    cv_.notify_all();
    return false;
  }
  queue_.push_back(std::move(event));
  cv_.notify_all();
  return true;
}

void LiveFeed::Subscription::close(bool dropped) {
  std::lock_guard lock(mutex_);
  closed_ = true;
  dropped_ = dropped_ || dropped;
  cv_.notify_all();
}

std::shared_ptr<LiveFeed::Subscription> LiveFeed::subscribe() {
  auto sub = std::make_shared<Subscription>(capacity_);
  std::lock_guard lock(mutex_);
  subscribers_.push_back(sub);
  return sub;
}

void LiveFeed::unsubscribe(const std::shared_ptr<Subscription>& subscription) {
  subscription->close(false);
  std::lock_guard lock(mutex_);
  std::erase(subscribers_, subscription);
}

void LiveFeed::publish(const std::string& event) {
  std::lock_guard lock(mutex_);
  ++published_;
  std::erase_if(subscribers_, [&event](const std::shared_ptr<Subscription>& sub) {
    return !sub->push(event);
  });
}

void LiveFeed::close_all() {
  std::lock_guard lock(mutex_);
  for (auto& sub : subscribers_) {
    sub->close(false);
  }
  subscribers_.clear();
}

std::size_t LiveFeed::subscriber_count() const {
  std::lock_guard lock(mutex_);
  return subscribers_.size();
}

std::size_t LiveFeed::published_count() const {
  std::lock_guard lock(mutex_);
  return published_;
}

}  // namespace envirollm
