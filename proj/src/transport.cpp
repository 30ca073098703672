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

#include "rawcast/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <thread>

namespace rawcast {

namespace {

void write_all(int fd, const uint8_t* data, size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w <= 0) throw std::runtime_error("socket write failed");
    data += w;
    n -= size_t(w);
  }
}

bool read_all(int fd, uint8_t* data, size_t n) {
  size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, data + got, n - got, 0);
    if (r == 0) {
      if (got == 0) return false;  // clean EOF at a message boundary
      throw std::runtime_error("socket closed mid-message");
    }
    if (r < 0) throw std::runtime_error("socket read failed");
    got += size_t(r);
  }
  return true;
}

}  // namespace

TcpStream::TcpStream(TcpStream&& other) noexcept : fd_(other.fd_) {
  other.fd_ = -1;
}

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

TcpStream::~TcpStream() { close(); }

void TcpStream::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

TcpStream TcpStream::connect(const std::string& host, uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error("socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw std::runtime_error("bad host address: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw std::runtime_error("connect failed");
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpStream(fd);
}

void TcpStream::send_message(std::span<const uint8_t> body) {
  if (fd_ < 0) throw std::runtime_error("stream not open");
  const uint32_t len = uint32_t(body.size());
  uint8_t hdr[4] = {uint8_t(len), uint8_t(len >> 8), uint8_t(len >> 16),
                    uint8_t(len >> 24)};
  write_all(fd_, hdr, 4);
  write_all(fd_, body.data(), body.size());
}

std::optional<std::vector<uint8_t>> TcpStream::recv_message() {
  if (fd_ < 0) throw std::runtime_error("stream not open");
  uint8_t hdr[4];
  if (!read_all(fd_, hdr, 4)) return std::nullopt;
  const uint32_t len = uint32_t(hdr[0]) | uint32_t(hdr[1]) << 8 |
                       uint32_t(hdr[2]) << 16 | uint32_t(hdr[3]) << 24;
  if (len > (64u << 20)) throw std::runtime_error("message too large");
  std::vector<uint8_t> body(len);
  if (len > 0 && !read_all(fd_, body.data(), len))
    throw std::runtime_error("socket closed mid-message");
  return body;
}

TcpListener::TcpListener(uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw std::runtime_error("socket() failed");
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd_);
    throw std::runtime_error("bind failed");
  }
  if (::listen(fd_, 1) != 0) {
    ::close(fd_);
    throw std::runtime_error("listen failed");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() { close(); }

void TcpListener::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

TcpStream TcpListener::accept() {
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) throw std::runtime_error("accept failed");
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpStream(fd);
}

// ---------------------------------------------------------------------------
// Endpoints
// ---------------------------------------------------------------------------

int serve_connection(TcpStream& conn, const ServerContext& ctx) {
  int served = 0;
  for (;;) {
    auto body = conn.recv_message();
    if (!body) break;
    ResultMessage result;
    try {
      const FrameMessage msg = parse_frame_message(*body);
      result = server_process(ctx, msg);
    } catch (const std::exception&) {
      // Salvage the frame id when the fixed prefix survived.
      result.error = true;
      if (body->size() >= 13) {
        uint64_t id = 0;
        for (int i = 0; i < 8; ++i)
          id |= uint64_t((*body)[size_t(5 + i)]) << (8 * i);
        result.frame_id = id;
      }
    }
    conn.send_message(serialize_message(result));
    ++served;
  }
  return served;
}

std::vector<FrameMetrics> run_wall_client(TcpStream& conn, SceneStream& scenes,
                                          Controller& controller,
                                          const WeightSet& weights,
                                          const TileGrid& grid,
                                          const WallClientOptions& options) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto now = [&] {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };

  std::vector<FrameMetrics> metrics(size_t(options.frames));
  std::vector<double> demosaic_done(size_t(options.frames), -1);

  // demosaic path: parallel worker fed by a bounded queue
  struct DemJob {
    int index;
    BayerFrame frame;
  };
  BoundedQueue<DemJob> dem_queue(size_t(options.queue_capacity));
  std::mutex state_mu;
  std::thread demosaic_worker([&] {
    while (auto job = dem_queue.pop()) {
      const RgbFrame rgb = demosaic_bilinear(job->frame);
      (void)rgb;  // render path ends here; display is out of scope
      std::lock_guard lock(state_mu);
      demosaic_done[size_t(job->index)] = now();
    }
  });

  // result path: receiver updates the controller between frames
  std::mutex result_mu;
  std::vector<std::pair<int, double>> result_times;  // frame, arrival
  std::vector<std::vector<BoundingBox>> results(size_t(options.frames));
  std::thread receiver([&] {
    try {
      for (;;) {
        auto body = conn.recv_message();
        if (!body) break;
        const ResultMessage msg = parse_result_message(*body);
        std::lock_guard lock(result_mu);
        const int id = int(msg.frame_id);
        if (id >= 0 && id < options.frames) {
          results[size_t(id)] = msg.detections;
          result_times.push_back({id, now()});
        }
      }
    } catch (const std::exception&) {
      // connection failure: outstanding frames stay marked dropped
    }
  });

  BandwidthSample last_sample{0, 0, 0};
  bool have_sample = false;
  int newest_delivered = -1;

  for (int i = 0; i < options.frames; ++i) {
    const double capture_at = now();
    SyntheticScene scene = scenes.frame(i);
    dem_queue.push({i, scene.frame});

    {
      std::lock_guard lock(result_mu);
      int newest = -1;
      for (const auto& [id, t] : result_times) newest = std::max(newest, id);
      if (newest > newest_delivered) {
        controller.deliver_results(results[size_t(newest)]);
        newest_delivered = newest;
      }
    }
    const double eab = have_sample
                           ? estimate_bandwidth(last_sample)
                           : std::numeric_limits<double>::infinity();
    const TransmissionPlan plan = controller.adapt(eab);
    const FrameMessage msg =
        build_frame_message(uint64_t(i), scene.frame, plan, weights, grid);
    const std::vector<uint8_t> wire = serialize_message(msg);

    FrameMetrics& fm = metrics[size_t(i)];
    fm.frame_id = uint64_t(i);
    fm.captured_at = capture_at;
    fm.tiles_sent = int(msg.tiles.size());
    fm.config_used = plan.config.id;
    fm.key_frame = plan.is_key_frame;
    fm.transmitted_bytes = wire.size();

    try {
      const double tx_start = now();
      conn.send_message(wire);
      const double tx_end = now();
      if (tx_end > tx_start) {
        last_sample = {double(wire.size()), tx_start, tx_end};
        have_sample = true;
      }
      fm.transmit_start = tx_start;
      fm.transmit_end = tx_end;
    } catch (const std::exception&) {
      fm.dropped = true;
    }

    // hold the capture cadence
    const double next = double(i + 1) * options.frame_interval;
    while (now() < next)
      std::this_thread::sleep_for(std::chrono::microseconds(200));
  }

  conn.close();  // receiver unblocks on EOF
  dem_queue.close();
  demosaic_worker.join();
  receiver.join();

  // e2e: capture -> result received (render is a no-op timestamp)
  for (auto& [id, t] : result_times) {
    FrameMetrics& fm = metrics[size_t(id)];
    const double dem = demosaic_done[size_t(id)];
    fm.e2e_latency = std::max(t, dem) - fm.captured_at;
  }
  for (auto& fm : metrics) {
    if (fm.e2e_latency <= 0) fm.dropped = true;
  }
  return metrics;
}

}  // namespace rawcast
