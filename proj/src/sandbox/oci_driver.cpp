#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>

#include "ctfvault/error.hpp"
#include "ctfvault/sandbox/driver.hpp"

extern char** environ;

namespace ctfvault::sandbox {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string describe(const std::vector<std::string>& argv) {
  std::string out;
  for (const auto& a : argv) {
    if (!out.empty()) out += ' ';
    out += a;
  }
  return out;
}

ProcessResult checked(const std::vector<std::string>& argv) {
  ProcessResult result = run_process(argv);
  if (result.exit_code != 0) {
    throw Error(Errc::DriverFailure, "'" + describe(argv) + "' exited with " +
                                         std::to_string(result.exit_code) + ": " + trim(result.err));
  }
  return result;
}

std::uint16_t parse_host_port(const std::string& text) {
  // `docker port` prints one `host:port` per line; IPv4 first.
  const std::string line = trim(text.substr(0, text.find('\n')));
  const auto colon = line.rfind(':');
  unsigned value = 0;
  if (colon != std::string::npos) {
    const char* begin = line.data() + colon + 1;
    const char* end = line.data() + line.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec == std::errc{} && ptr == end && value > 0 && value <= 65535) {
      return static_cast<std::uint16_t>(value);
    }
  }
  throw Error(Errc::DriverFailure, "cannot parse published port from '" + line + "'");
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv) {
  if (argv.empty()) throw Error(Errc::InvalidArgument, "empty command");
  std::array<int, 2> out_pipe{-1, -1};
  std::array<int, 2> err_pipe{-1, -1};
  if (::pipe2(out_pipe.data(), O_CLOEXEC) != 0 || ::pipe2(err_pipe.data(), O_CLOEXEC) != 0) {
    throw Error(Errc::DriverFailure, std::string("pipe: ") + std::strerror(errno));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&actions, err_pipe[1], STDERR_FILENO);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = 0;
  const int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  if (rc != 0) {
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);
    throw Error(Errc::DriverFailure, "cannot run '" + argv[0] + "': " + std::strerror(rc));
  }

  ProcessResult result;
  std::array<pollfd, 2> fds{pollfd{out_pipe[0], POLLIN, 0}, pollfd{err_pipe[0], POLLIN, 0}};
  std::array<std::string*, 2> sinks{&result.out, &result.err};
  int open_fds = 2;
  char buf[4096];
  while (open_fds > 0) {
    if (::poll(fds.data(), fds.size(), -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (fds[i].fd < 0 || fds[i].revents == 0) continue;
      const auto n = ::read(fds[i].fd, buf, sizeof(buf));
      if (n > 0) {
        sinks[i]->append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || errno != EINTR) {
        ::close(fds[i].fd);
        fds[i].fd = -1;
        --open_fds;
      }
    }
  }
  for (auto& p : fds) {
    if (p.fd >= 0) ::close(p.fd);
  }

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return result;
}

OciDriver::OciDriver(Options options) : options_(std::move(options)) {
  if (options_.scratch_dir.empty()) {
    options_.scratch_dir = std::filesystem::temp_directory_path() / "ctf-vault-recipes";
  }
}

std::string OciDriver::build(const BuildPlan& plan) {
  const std::string recipe = render_build_recipe(plan);
  const std::string tag = image_tag(plan);

  std::error_code ec;
  std::filesystem::create_directories(options_.scratch_dir, ec);
  const auto recipe_path = options_.scratch_dir / (plan.challenge_id + ".containerfile");
  {
    std::ofstream out(recipe_path, std::ios::binary | std::ios::trunc);
    out << recipe;
    if (!out) throw Error(Errc::DriverFailure, "cannot write " + recipe_path.string());
  }

  std::vector<std::string> argv = {options_.binary, "build", "-t", tag, "-f", recipe_path.string()};
  if (plan.upstream_recipe) {
    const auto colon = tag.rfind(':');
    const std::string upstream_tag = tag.substr(0, colon) + "-upstream" + tag.substr(colon);
    const auto upstream_file = plan.context_dir / *plan.upstream_recipe;
    checked({options_.binary, "build", "-t", upstream_tag, "-f", upstream_file.string(),
             upstream_file.parent_path().string()});
    argv.push_back("--build-context");
    argv.push_back(std::string(kUpstreamStage) + "=docker-image://" + upstream_tag);
  }
  argv.push_back(plan.context_dir.string());
  checked(argv);
  return tag;
}

StartResult OciDriver::start(const std::string& image_ref, std::span<const EndpointSpec> ports,
                             std::span<const Mount> mounts) {
  std::vector<std::string> argv = {options_.binary, "run", "-d"};
  for (const auto& port : ports) {
    argv.push_back("-p");
    argv.push_back(options_.bind_host + "::" + std::to_string(port.port) + "/tcp");
  }
  for (const auto& mount : mounts) {
    std::error_code ec;
    std::filesystem::create_directories(mount.host_path, ec);
    argv.push_back("-v");
    argv.push_back(mount.host_path.string() + ":" + mount.container_path);
  }
  argv.push_back(image_ref);

  StartResult result;
  result.runtime_id = trim(checked(argv).out);
  if (result.runtime_id.empty()) throw Error(Errc::DriverFailure, "runtime returned no container id");
  try {
    for (const auto& port : ports) {
      const auto out =
          checked({options_.binary, "port", result.runtime_id, std::to_string(port.port) + "/tcp"}).out;
      result.endpoints.push_back(
          BoundEndpoint{port.kind, port.port, options_.bind_host, parse_host_port(out)});
    }
  } catch (const Error&) {
    run_process({options_.binary, "rm", "-f", result.runtime_id});
    throw;
  }
  return result;
}

void OciDriver::stop(const std::string& runtime_id) {
  checked({options_.binary, "rm", "-f", runtime_id});
}

bool OciDriver::alive(const std::string& runtime_id) {
  const auto result = run_process({options_.binary, "inspect", "-f", "{{.State.Running}}", runtime_id});
  return result.exit_code == 0 && trim(result.out) == "true";
}

}  // namespace ctfvault::sandbox
