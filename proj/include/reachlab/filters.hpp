#pragma once

#include <vector>

#include "reachlab/common.hpp"

namespace reachlab {

// Backward-Euler first-order lag y_k = y_{k-1} + a (u_k - y_{k-1}) with
// a = 2*pi*fc*Ts / (1 + 2*pi*fc*Ts). DC gain is exactly 1 and the output is
// a convex combination of past inputs.
inline double lowpass_coefficient(double cutoff_hz, double sample_time_s) {
  const double w = 2.0 * kPi * cutoff_hz * sample_time_s;
  return w / (1.0 + w);
}

// Two-channel first-order low-pass. The actuation-bandwidth filter latches
// onto its first input; the observer's Q-filter starts from zero state.
class LowPass2 {
 public:
  enum class Init { first_input, zero };

  LowPass2(double cutoff_hz, double sample_time_s, Init init)
      : a_(lowpass_coefficient(cutoff_hz, sample_time_s)), init_(init) {
    check(a_ > 0.0 && a_ < 1.0, "lowpass: coefficient outside (0,1)");
    reset();
  }

  void reset() {
    state_ = {0.0, 0.0};
    primed_ = (init_ == Init::zero);
  }

  double coefficient() const { return a_; }

  Vec2 apply(const Vec2& u) {
    if (!primed_) {
      state_ = u;
      primed_ = true;
      return state_;
    }
    for (int i = 0; i < 2; ++i) state_[i] += a_ * (u[i] - state_[i]);
    return state_;
  }

 private:
  double a_;
  Init init_;
  Vec2 state_ = {0.0, 0.0};
  bool primed_ = false;
};

// Ring buffer over the last `capacity` pushed items. Reading with delay h
// returns the item from step max(0, k - h), where k is the newest step.
template <typename T>
class DelayLine {
 public:
  explicit DelayLine(int capacity) : buf_(static_cast<std::size_t>(capacity)) {
    check(capacity >= 1, "delay line: capacity must be >= 1");
  }

  void clear() { count_ = 0; }
  int size() const { return count_; }

  void push(const T& item) {
    head_ = (count_ == 0) ? 0 : (head_ + 1) % static_cast<int>(buf_.size());
    buf_[static_cast<std::size_t>(head_)] = item;
    ++count_;
  }

  const T& read_delayed(int h) const {
    check(count_ > 0, "delay line: read before first push");
    const int newest = count_ - 1;
    const int offset = std::min(h, newest);
    check(offset < static_cast<int>(buf_.size()), "delay line: delay exceeds capacity");
    int idx = head_ - offset;
    if (idx < 0) idx += static_cast<int>(buf_.size());
    return buf_[static_cast<std::size_t>(idx)];
  }

 private:
  std::vector<T> buf_;
  int head_ = 0;
  int count_ = 0;
};

// Fixed-length window of the most recent fixed-dimension items, flattened
// newest-first and zero-padded before the window fills. Both augmentation
// kinds (committed actions, disturbance estimates) go through this type.
class HistoryWindow {
 public:
  HistoryWindow(int window_len, int item_dim)
      : len_(window_len), dim_(item_dim),
        buf_(static_cast<std::size_t>(window_len * item_dim), 0.0) {
    check(window_len >= 1 && item_dim >= 1, "history window: bad shape");
  }

  void clear() {
    count_ = 0;
    head_ = 0;
    std::fill(buf_.begin(), buf_.end(), 0.0);
  }

  int window_len() const { return len_; }
  int item_dim() const { return dim_; }
  int count() const { return count_; }

  void push(std::span<const double> item) {
    check(static_cast<int>(item.size()) == dim_, "history window: item dim mismatch");
    head_ = (count_ == 0) ? 0 : (head_ + 1) % len_;
    std::copy(item.begin(), item.end(), buf_.begin() + static_cast<std::size_t>(head_ * dim_));
    ++count_;
  }

  // out must hold window_len * item_dim values
  void flatten_into(double* out) const {
    for (int i = 0; i < len_; ++i) {
      double* dst = out + static_cast<std::size_t>(i * dim_);
      if (i < count_) {
        int idx = head_ - i;
        if (idx < 0) idx += len_;
        const double* src = buf_.data() + static_cast<std::size_t>(idx * dim_);
        std::copy(src, src + dim_, dst);
      } else {
        std::fill(dst, dst + dim_, 0.0);
      }
    }
  }

  Vec flattened() const {
    Vec out(static_cast<std::size_t>(len_ * dim_));
    flatten_into(out.data());
    return out;
  }

 private:
  int len_;
  int dim_;
  Vec buf_;
  int count_ = 0;
  int head_ = 0;
};

}  // namespace reachlab
