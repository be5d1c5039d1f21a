#include "ctfvault/sandbox/instance.hpp"

#include <algorithm>
#include <random>

#include "ctfvault/error.hpp"

namespace ctfvault::sandbox {
namespace {

std::string random_token() {
  static std::mutex mutex;
  static std::mt19937_64 rng{std::random_device{}()};
  static constexpr char kHex[] = "0123456789abcdef";
  std::lock_guard lock(mutex);
  std::string out;
  for (int word = 0; word < 2; ++word) {
    auto bits = rng();
    for (int i = 0; i < 16; ++i, bits >>= 4) out += kHex[bits & 0xf];
  }
  return out;
}

}  // namespace

std::string_view to_string(InstanceState state) noexcept {
  switch (state) {
    case InstanceState::Created: return "created";
    case InstanceState::Running: return "running";
    case InstanceState::Stopped: return "stopped";
  }
  return "stopped";
}

bool is_legal_transition(InstanceState from, InstanceState to) noexcept {
  return (from == InstanceState::Created && to == InstanceState::Running) ||
         (from == InstanceState::Running && to == InstanceState::Stopped);
}

bool is_path_safe_user(std::string_view user) noexcept {
  if (user.empty() || user.size() > 128 || user == "." || user == "..") return false;
  return std::all_of(user.begin(), user.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
           c == '_' || c == '-';
  });
}

InstanceManager::InstanceManager(RuntimeDriver& driver, Options options)
    : driver_(driver), options_(std::move(options)) {}

InstanceManager::~InstanceManager() { stop_all(); }

std::filesystem::path InstanceManager::workspace_path(const std::string& user,
                                                      const std::string& challenge_id) const {
  return options_.data_dir / "workspaces" / user / challenge_id;
}

void InstanceManager::set_transition_observer(TransitionObserver observer) {
  std::lock_guard lock(mutex_);
  observer_ = std::move(observer);
}

void InstanceManager::transition(Instance& instance, InstanceState to) {
  const InstanceState from = instance.handle.state;
  if (!is_legal_transition(from, to)) {
    throw Error(Errc::InvalidArgument, "illegal instance transition " + std::string(to_string(from)) +
                                           " -> " + std::string(to_string(to)));
  }
  instance.handle.state = to;
  TransitionObserver observer;
  {
    std::lock_guard lock(mutex_);
    observer = observer_;
  }
  if (observer) observer(instance.handle.instance_id, from, to);
}

InstanceHandle InstanceManager::launch(const BuildPlan& plan, const std::string& user) {
  if (!is_path_safe_user(user)) {
    throw Error(Errc::InvalidArgument, "user id '" + user + "' is not path-safe");
  }
  check_plan(plan);
  {
    std::lock_guard lock(mutex_);
    auto& active = active_per_user_[user];
    if (active >= options_.per_user_quota) {
      throw Error(Errc::QuotaExceeded, "user '" + user + "' already has " + std::to_string(active) +
                                           " running instance(s)");
    }
    ++active;  // reserved until start succeeds or fails
  }

  const auto workspace = workspace_path(user, plan.challenge_id);
  StartResult started;
  try {
    std::error_code ec;
    std::filesystem::create_directories(workspace, ec);
    if (ec) throw Error(Errc::DriverFailure, "cannot create workspace " + workspace.string());
    const std::string image = driver_.build(plan);
    const Mount mounts[] = {Mount{workspace, plan.workspace_mount}};
    started = driver_.start(image, plan.exposed_ports, mounts);
  } catch (...) {
    std::lock_guard lock(mutex_);
    --active_per_user_[user];
    try {
      throw;
    } catch (const Error& e) {
      if (e.code() == Errc::DriverFailure) throw;
      throw Error(Errc::DriverFailure, e.what());
    } catch (const std::exception& e) {
      throw Error(Errc::DriverFailure, e.what());
    }
  }

  auto instance = std::make_shared<Instance>();
  instance->runtime_id = started.runtime_id;
  instance->handle.instance_id = random_token();
  instance->handle.challenge_id = plan.challenge_id;
  instance->handle.user_id = user;
  instance->handle.state = InstanceState::Created;
  instance->handle.workspace = workspace;

  std::lock_guard instance_lock(instance->mutex);
  {
    std::lock_guard lock(mutex_);
    instances_.emplace(instance->handle.instance_id, instance);
  }
  instance->handle.endpoints = std::move(started.endpoints);
  transition(*instance, InstanceState::Running);
  return instance->handle;
}

InstanceHandle InstanceManager::stop(const InstanceHandle& handle) {
  std::shared_ptr<Instance> instance;
  {
    std::lock_guard lock(mutex_);
    auto it = instances_.find(handle.instance_id);
    if (it == instances_.end()) {
      throw Error(Errc::NotFound, "no instance '" + handle.instance_id + "'");
    }
    instance = it->second;
  }
  std::lock_guard instance_lock(instance->mutex);
  if (instance->handle.state != InstanceState::Running) {
    throw Error(Errc::NotRunning, "instance '" + handle.instance_id + "' is " +
                                      std::string(to_string(instance->handle.state)));
  }
  driver_.stop(instance->runtime_id);
  instance->handle.endpoints.clear();
  transition(*instance, InstanceState::Stopped);
  {
    std::lock_guard lock(mutex_);
    --active_per_user_[instance->handle.user_id];
  }
  return instance->handle;
}

std::optional<InstanceHandle> InstanceManager::find(const std::string& instance_id) const {
  std::shared_ptr<Instance> instance;
  {
    std::lock_guard lock(mutex_);
    auto it = instances_.find(instance_id);
    if (it == instances_.end()) return std::nullopt;
    instance = it->second;
  }
  std::lock_guard instance_lock(instance->mutex);
  return instance->handle;
}

std::vector<InstanceHandle> InstanceManager::running_for(const std::string& user) const {
  std::vector<std::shared_ptr<Instance>> candidates;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, instance] : instances_) candidates.push_back(instance);
  }
  std::vector<InstanceHandle> out;
  for (const auto& instance : candidates) {
    std::lock_guard instance_lock(instance->mutex);
    if (instance->handle.user_id == user && instance->handle.state == InstanceState::Running) {
      out.push_back(instance->handle);
    }
  }
  return out;
}

void InstanceManager::stop_all() {
  std::vector<std::shared_ptr<Instance>> all;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, instance] : instances_) all.push_back(instance);
  }
  for (const auto& instance : all) {
    InstanceHandle handle;
    {
      std::lock_guard instance_lock(instance->mutex);
      if (instance->handle.state != InstanceState::Running) continue;
      handle = instance->handle;
    }
    try {
      stop(handle);
    } catch (const std::exception&) {
      // Best effort at shutdown.
    }
  }
}

}  // namespace ctfvault::sandbox
