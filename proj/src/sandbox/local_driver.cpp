#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <thread>

#include "ctfvault/digest.hpp"
#include "ctfvault/error.hpp"
#include "ctfvault/sandbox/driver.hpp"

namespace ctfvault::sandbox {
namespace {

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const auto n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

std::string challenge_from_image(std::string_view image_ref) {
  constexpr std::string_view kPrefix = "local/";
  if (image_ref.substr(0, kPrefix.size()) != kPrefix) return {};
  image_ref.remove_prefix(kPrefix.size());
  return std::string(image_ref.substr(0, image_ref.find('@')));
}

/// One loopback listener. Connections are served one at a time.
class Listener {
 public:
  Listener(EndpointKind kind, std::uint16_t container_port, std::string banner)
      : kind_(kind), container_port_(container_port), banner_(std::move(banner)) {
    fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd_ < 0) throw Error(Errc::DriverFailure, std::string("socket: ") + std::strerror(errno));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    socklen_t len = sizeof(addr);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(fd_, 16) != 0 ||
        ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
      const std::string reason = std::strerror(errno);
      ::close(fd_);
      throw Error(Errc::DriverFailure, "cannot bind loopback listener: " + reason);
    }
    host_port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this] { serve(); });
  }

  ~Listener() { shutdown(); }

  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  void shutdown() {
    if (stopping_.exchange(true)) return;
    ::shutdown(fd_, SHUT_RDWR);
    {
      std::lock_guard lock(client_mutex_);
      if (client_ >= 0) ::shutdown(client_, SHUT_RDWR);
    }
    if (thread_.joinable()) thread_.join();
    ::close(fd_);
  }

  [[nodiscard]] BoundEndpoint binding() const {
    return BoundEndpoint{kind_, container_port_, "127.0.0.1", host_port_};
  }

 private:
  void serve() {
    while (!stopping_) {
      const int client = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
      if (client < 0) {
        if (errno == EINTR || errno == ECONNABORTED) continue;
        break;
      }
      {
        std::lock_guard lock(client_mutex_);
        client_ = client;
      }
      if (!stopping_) handle(client);
      {
        std::lock_guard lock(client_mutex_);
        client_ = -1;
      }
      ::close(client);
    }
  }

  void handle(int client) {
    char buf[4096];
    if (kind_ == EndpointKind::Http) {
      std::string request;
      while (request.find("\r\n\r\n") == std::string::npos && request.size() < 16384) {
        const auto n = ::recv(client, buf, sizeof(buf), 0);
        if (n <= 0) return;
        request.append(buf, static_cast<std::size_t>(n));
      }
      send_all(client, "HTTP/1.1 200 OK\r\nContent-Type: text/plain\r\nContent-Length: " +
                           std::to_string(banner_.size()) + "\r\nConnection: close\r\n\r\n" + banner_);
      return;
    }
    if (!send_all(client, banner_)) return;
    while (!stopping_) {
      const auto n = ::recv(client, buf, sizeof(buf), 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return;
      if (!send_all(client, std::string_view(buf, static_cast<std::size_t>(n)))) return;
    }
  }

  EndpointKind kind_;
  std::uint16_t container_port_;
  std::string banner_;
  int fd_ = -1;
  std::uint16_t host_port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex client_mutex_;
  int client_ = -1;
  std::thread thread_;
};

}  // namespace

class LocalDriver::Service {
 public:
  std::vector<std::unique_ptr<Listener>> listeners;
};

LocalDriver::LocalDriver(std::filesystem::path log_path) : log_path_(std::move(log_path)) {}

LocalDriver::~LocalDriver() {
  std::lock_guard lock(mutex_);
  running_.clear();
}

std::string LocalDriver::banner_for(std::string_view challenge_id) {
  return "[ctf-vault] " + std::string(challenge_id) + " ready\n";
}

void LocalDriver::record(const std::string& line) {
  ledger_.push_back(line);
  if (log_path_.empty()) return;
  std::ofstream out(log_path_, std::ios::app);
  out << line << '\n';
}

std::string LocalDriver::build(const BuildPlan& plan) {
  const std::string recipe = render_build_recipe(plan);
  std::lock_guard lock(mutex_);
  if (fail_build_) {
    fail_build_ = false;
    record("build-failed " + plan.challenge_id);
    throw Error(Errc::DriverFailure, "local build of '" + plan.challenge_id + "' failed");
  }
  const std::string image = "local/" + plan.challenge_id + "@" + sha256_hex(recipe).substr(0, 12);
  record("build " + image);
  return image;
}

StartResult LocalDriver::start(const std::string& image_ref, std::span<const EndpointSpec> ports,
                               std::span<const Mount> mounts) {
  const std::string challenge = challenge_from_image(image_ref);
  if (challenge.empty()) {
    throw Error(Errc::DriverFailure, "'" + image_ref + "' is not a local image reference");
  }
  {
    std::lock_guard lock(mutex_);
    if (fail_start_) {
      fail_start_ = false;
      record("start-failed " + image_ref);
      throw Error(Errc::DriverFailure, "local start of '" + image_ref + "' failed");
    }
  }
  for (const auto& mount : mounts) {
    std::error_code ec;
    std::filesystem::create_directories(mount.host_path, ec);
    if (ec) throw Error(Errc::DriverFailure, "cannot prepare mount " + mount.host_path.string());
  }

  auto service = std::make_unique<Service>();
  StartResult result;
  for (const auto& port : ports) {
    service->listeners.push_back(std::make_unique<Listener>(port.kind, port.port, banner_for(challenge)));
    result.endpoints.push_back(service->listeners.back()->binding());
  }

  std::lock_guard lock(mutex_);
  result.runtime_id = "local-" + std::to_string(next_id_++);
  record("start " + result.runtime_id + " " + image_ref);
  running_.emplace(result.runtime_id, std::move(service));
  return result;
}

void LocalDriver::stop(const std::string& runtime_id) {
  std::unique_ptr<Service> service;
  {
    std::lock_guard lock(mutex_);
    auto it = running_.find(runtime_id);
    if (it == running_.end()) throw Error(Errc::DriverFailure, "no local runtime '" + runtime_id + "'");
    service = std::move(it->second);
    running_.erase(it);
    record("stop " + runtime_id);
  }
  service.reset();
}

bool LocalDriver::alive(const std::string& runtime_id) {
  std::lock_guard lock(mutex_);
  return running_.count(runtime_id) != 0;
}

std::vector<std::string> LocalDriver::ledger() const {
  std::lock_guard lock(mutex_);
  return ledger_;
}

std::size_t LocalDriver::running_count() const {
  std::lock_guard lock(mutex_);
  return running_.size();
}

}  // namespace ctfvault::sandbox
