#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ctfvault/sandbox/build_plan.hpp"
#include "ctfvault/sandbox/driver.hpp"

namespace ctfvault::sandbox {

enum class InstanceState { Created, Running, Stopped };

std::string_view to_string(InstanceState state) noexcept;

/// Created -> Running -> Stopped; Stopped is terminal.
bool is_legal_transition(InstanceState from, InstanceState to) noexcept;

struct InstanceHandle {
  std::string instance_id;
  std::string challenge_id;
  std::string user_id;
  InstanceState state = InstanceState::Created;
  std::vector<BoundEndpoint> endpoints;
  std::filesystem::path workspace;
};

/// Owns instance lifecycles on one driver. Transitions of a given instance
/// are serialized; distinct instances proceed concurrently.
class InstanceManager {
 public:
  struct Options {
    std::filesystem::path data_dir;
    std::size_t per_user_quota = 1;
  };

  using TransitionObserver =
      std::function<void(const std::string& instance_id, InstanceState from, InstanceState to)>;

  InstanceManager(RuntimeDriver& driver, Options options);
  ~InstanceManager();

  InstanceManager(const InstanceManager&) = delete;
  InstanceManager& operator=(const InstanceManager&) = delete;

  /// Builds and starts `plan` for `user`. Throws QuotaExceeded when the user
  /// already holds `per_user_quota` running instances, DriverFailure when the
  /// driver fails (no instance is recorded then), InvalidArgument for user
  /// ids that are not path-safe.
  InstanceHandle launch(const BuildPlan& plan, const std::string& user);

  /// Throws NotRunning unless the instance is Running, NotFound for unknown ids.
  InstanceHandle stop(const InstanceHandle& handle);

  [[nodiscard]] std::optional<InstanceHandle> find(const std::string& instance_id) const;
  [[nodiscard]] std::vector<InstanceHandle> running_for(const std::string& user) const;

  /// `<data_dir>/workspaces/<user>/<challenge_id>`.
  [[nodiscard]] std::filesystem::path workspace_path(const std::string& user,
                                                     const std::string& challenge_id) const;

  void set_transition_observer(TransitionObserver observer);

  /// Stops every running instance; used at shutdown.
  void stop_all();

 private:
  struct Instance {
    std::mutex mutex;
    InstanceHandle handle;
    std::string runtime_id;
  };

  void transition(Instance& instance, InstanceState to);

  RuntimeDriver& driver_;
  Options options_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Instance>> instances_;
  std::map<std::string, std::size_t> active_per_user_;
  TransitionObserver observer_;
};

/// User ids become path components: `[A-Za-z0-9._-]+`, not `.` or `..`.
bool is_path_safe_user(std::string_view user) noexcept;

}  // namespace ctfvault::sandbox
