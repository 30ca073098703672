/* Copyright 2026 The rawcast Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rawcast/pipeline.hpp"

namespace rawcast {

/// Blocking bounded FIFO for the wall-clock client stages.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(size_t capacity) : capacity_(capacity) {}

  void push(T item) {
    std::unique_lock lock(mu_);
    cv_space_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
    if (closed_) return;
    items_.push_back(std::move(item));
    cv_items_.notify_one();
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    cv_items_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    cv_space_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_items_.notify_all();
    cv_space_.notify_all();
  }

 private:
  size_t capacity_;
  std::deque<T> items_;
  bool closed_ = false;
  std::mutex mu_;
  std::condition_variable cv_items_, cv_space_;
};

/// Connected TCP byte stream carrying length-prefixed messages
/// (u32 little-endian length + body).
class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(int fd) : fd_(fd) {}
  TcpStream(TcpStream&& other) noexcept;
  TcpStream& operator=(TcpStream&& other) noexcept;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;
  ~TcpStream();

  static TcpStream connect(const std::string& host, uint16_t port);

  void send_message(std::span<const uint8_t> body);
  /// nullopt on clean EOF; throws on transport errors.
  std::optional<std::vector<uint8_t>> recv_message();

  bool open() const { return fd_ >= 0; }
  void close();

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  explicit TcpListener(uint16_t port);  // port 0 picks a free port
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  uint16_t port() const { return port_; }
  TcpStream accept();
  void close();

 private:
  int fd_ = -1;
  uint16_t port_ = 0;
};

// ---------------------------------------------------------------------------
// Wall-clock endpoints (demo mode; message bytes identical to simulation)
// ---------------------------------------------------------------------------

/// Serve one connection: FrameMessage in, ResultMessage out, until EOF.
/// Malformed frames produce an error response when the frame id is
/// parseable. Returns frames served.
int serve_connection(TcpStream& conn, const ServerContext& ctx);

struct WallClientOptions {
  int frames = 60;
  double frame_interval = 1.0 / 30;  // capture cadence, seconds
  int queue_capacity = 2;
};

/// Wall-clock client over a connected stream: the controller plans each
/// frame, demosaic runs on a parallel worker that never blocks the offload
/// path, and detection results update the controller as they return.
std::vector<FrameMetrics> run_wall_client(TcpStream& conn, SceneStream& scenes,
                                          Controller& controller,
                                          const WeightSet& weights,
                                          const TileGrid& grid,
                                          const WallClientOptions& options);

}  // namespace rawcast
