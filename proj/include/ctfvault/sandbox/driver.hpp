#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "ctfvault/manifest.hpp"
#include "ctfvault/sandbox/build_plan.hpp"

namespace ctfvault::sandbox {

struct Mount {
  std::filesystem::path host_path;
  std::string container_path;
};

struct BoundEndpoint {
  EndpointKind kind = EndpointKind::Tcp;
  std::uint16_t container_port = 0;
  std::string host;
  std::uint16_t host_port = 0;

  friend bool operator==(const BoundEndpoint&, const BoundEndpoint&) = default;
};

struct StartResult {
  std::string runtime_id;
  std::vector<BoundEndpoint> endpoints;
};

/// Container runtime abstraction. Every method throws DriverFailure on error.
/// Host ports are chosen by the driver, never by the manifest.
class RuntimeDriver {
 public:
  virtual ~RuntimeDriver() = default;

  virtual std::string build(const BuildPlan& plan) = 0;
  virtual StartResult start(const std::string& image_ref, std::span<const EndpointSpec> ports,
                            std::span<const Mount> mounts) = 0;
  virtual void stop(const std::string& runtime_id) = 0;
  [[nodiscard]] virtual bool alive(const std::string& runtime_id) = 0;
  [[nodiscard]] virtual std::string_view name() const noexcept = 0;
};

/// Runs challenge "containers" as in-process loopback services: each
/// endpoint gets an ephemeral 127.0.0.1 port that greets with the challenge
/// banner and then echoes what it receives. Every call is appended to an
/// in-memory ledger (and to `log_path` when set).
class LocalDriver final : public RuntimeDriver {
 public:
  explicit LocalDriver(std::filesystem::path log_path = {});
  ~LocalDriver() override;

  std::string build(const BuildPlan& plan) override;
  StartResult start(const std::string& image_ref, std::span<const EndpointSpec> ports,
                    std::span<const Mount> mounts) override;
  void stop(const std::string& runtime_id) override;
  bool alive(const std::string& runtime_id) override;
  std::string_view name() const noexcept override { return "local"; }

  /// Makes the next build() or start() call fail with DriverFailure.
  void fail_next_build() { std::lock_guard lock(mutex_); fail_build_ = true; }
  void fail_next_start() { std::lock_guard lock(mutex_); fail_start_ = true; }

  [[nodiscard]] std::vector<std::string> ledger() const;
  [[nodiscard]] std::size_t running_count() const;

  /// Banner line a local service sends on connect (includes the LF).
  static std::string banner_for(std::string_view challenge_id);

 private:
  class Service;
  void record(const std::string& line);

  std::filesystem::path log_path_;
  mutable std::mutex mutex_;
  std::vector<std::string> ledger_;
  std::map<std::string, std::unique_ptr<Service>> running_;
  std::uint64_t next_id_ = 1;
  bool fail_build_ = false;
  bool fail_start_ = false;
};

/// Drives an external OCI runtime (`docker`, `podman`) through its command
/// line. Recipes are written under `scratch_dir`; upstream `src/Dockerfile`
/// images are built first and supplied as the `upstream` build context.
class OciDriver final : public RuntimeDriver {
 public:
  struct Options {
    std::string binary = "docker";
    std::filesystem::path scratch_dir;
    std::string bind_host = "127.0.0.1";
  };

  explicit OciDriver(Options options);

  std::string build(const BuildPlan& plan) override;
  StartResult start(const std::string& image_ref, std::span<const EndpointSpec> ports,
                    std::span<const Mount> mounts) override;
  void stop(const std::string& runtime_id) override;
  bool alive(const std::string& runtime_id) override;
  std::string_view name() const noexcept override { return "oci"; }

 private:
  Options options_;
};

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Runs argv[0] (PATH lookup) with the given arguments, no shell involved.
ProcessResult run_process(const std::vector<std::string>& argv);

}  // namespace ctfvault::sandbox
