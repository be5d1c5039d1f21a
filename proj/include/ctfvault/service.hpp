#pragma once

#include <cstdint>
#include <functional>
#include <json.hpp>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctfvault/config.hpp"
#include "ctfvault/registry.hpp"
#include "ctfvault/sandbox/instance.hpp"
#include "ctfvault/store.hpp"

namespace ctfvault::service {

enum class ApiCode { NotFound, QuotaExceeded, BadRequest, DriverFailure, Internal };

std::string_view to_string(ApiCode code) noexcept;
int http_status(ApiCode code) noexcept;

class ApiError : public std::runtime_error {
 public:
  ApiError(ApiCode code, const std::string& message, int status = 0)
      : std::runtime_error(message), code_(code), status_(status != 0 ? status : http_status(code)) {}

  [[nodiscard]] ApiCode code() const noexcept { return code_; }
  [[nodiscard]] int status() const noexcept { return status_; }

 private:
  ApiCode code_;
  int status_;
};

struct SubmitResponse {
  bool correct = false;
  std::optional<std::string> platform_flag;  // present iff correct
  bool first_solve = false;                  // this submission created the solve
  bool solved_before = false;
};

struct InstancePayload {
  sandbox::InstanceHandle handle;
  std::vector<std::string> hints;  // one per endpoint, e.g. `nc 127.0.0.1 40123`
};

/// Composes registry, flag checking, sandbox and store behind the API
/// operations. Thread-safe: the registry is immutable, the store and the
/// instance manager synchronize internally.
class Platform {
 public:
  using Clock = std::function<std::int64_t()>;

  Platform(Config config, Registry registry, std::unique_ptr<sandbox::RuntimeDriver> driver);
  ~Platform();

  /// Ingests `config.archive_root` and creates the configured driver.
  static std::unique_ptr<Platform> from_config(const Config& config);

  SubmitResponse handle_submit(const std::string& user, const std::string& challenge,
                               const std::string& submission);
  [[nodiscard]] CategoryStats handle_stats() const;
  InstancePayload handle_instance_create(const std::string& user, const std::string& challenge);
  void handle_instance_delete(const std::string& user, const std::string& instance_id);

  [[nodiscard]] std::optional<std::string> authenticate(std::string_view bearer_token) const;
  [[nodiscard]] std::vector<SolveRecord> solves_of(const std::string& user) const;

  [[nodiscard]] const Registry& registry() const noexcept { return registry_; }
  [[nodiscard]] const Config& config() const noexcept { return config_; }
  [[nodiscard]] SolveLog& solves() noexcept { return solves_; }
  [[nodiscard]] sandbox::RuntimeDriver& driver() noexcept { return *driver_; }
  [[nodiscard]] sandbox::InstanceManager& instances() noexcept { return *instances_; }

  void set_clock(Clock clock) { clock_ = std::move(clock); }

 private:
  const sandbox::BuildPlan& plan_for(const Registry::Entry& entry);

  Config config_;
  Registry registry_;
  SolveLog solves_;
  std::unique_ptr<sandbox::RuntimeDriver> driver_;
  std::unique_ptr<sandbox::InstanceManager> instances_;
  std::mutex plan_mutex_;
  std::map<std::string, sandbox::BuildPlan, std::less<>> plans_;
  Clock clock_;
};

std::unique_ptr<sandbox::RuntimeDriver> make_driver(const Config& config);

/// Connection hint for a bound endpoint (`nc host port`, `curl ...`, `ssh ...`).
std::string connection_hint(const sandbox::BoundEndpoint& endpoint);

nlohmann::json summary_json(const ChallengeManifest& manifest);
nlohmann::json detail_json(const ChallengeManifest& manifest);
nlohmann::json to_json(const SubmitResponse& response);
nlohmann::json to_json(const CategoryStats& stats);
nlohmann::json to_json(const InstancePayload& payload);
nlohmann::json error_json(const ApiError& error);

/// HTTP/1.1 JSON front end over a Platform.
class HttpServer {
 public:
  explicit HttpServer(Platform& platform);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds (port 0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); blocks.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ctfvault::service
