#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "ctfvault/error.hpp"
#include "ctfvault/sandbox/driver.hpp"
#include "ctfvault/sandbox/instance.hpp"
#include "fixtures.hpp"
#include "lifecycle_model.hpp"

using namespace ctfvault;
using namespace ctfvault::sandbox;
using namespace ctfvault::testing;

namespace {

BuildPlan tcp_plan(std::string id = "chal") {
  BuildPlan plan;
  plan.challenge_id = std::move(id);
  plan.base_ref = "base";
  plan.exposed_ports = {{EndpointKind::Tcp, 1337}};
  return plan;
}

std::string exchange(std::uint16_t port, const std::string& send, std::size_t want) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  if (!send.empty()) REQUIRE(::send(fd, send.data(), send.size(), 0) == static_cast<ssize_t>(send.size()));
  std::string got;
  char buf[256];
  while (got.size() < want) {
    const auto n = ::recv(fd, buf, sizeof buf, 0);
    if (n <= 0) break;
    got.append(buf, static_cast<std::size_t>(n));
  }
  ::close(fd);
  return got;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("workspace is stable across launches") {
  TempDir tmp;
  LocalDriver driver;
  InstanceManager mgr(driver, {tmp.path(), 1});
  const auto first = mgr.launch(tcp_plan(), "alice");
  CHECK(first.workspace == tmp / "workspaces" / "alice" / "chal");
  write_file(first.workspace / "notes.txt", "keep me");
  mgr.stop(first);
  CHECK(read_file(first.workspace / "notes.txt") == "keep me");
  const auto second = mgr.launch(tcp_plan(), "alice");
  CHECK(second.workspace == first.workspace);
  CHECK(second.instance_id != first.instance_id);
  CHECK(mgr.workspace_path("bob", "chal") != mgr.workspace_path("alice", "chal"));
  CHECK(mgr.workspace_path("alice", "other") != mgr.workspace_path("alice", "chal"));
}

TEST_CASE("quota") {
  TempDir tmp;
  LocalDriver driver;
  InstanceManager mgr(driver, {tmp.path(), 1});
  const auto h = mgr.launch(tcp_plan("a"), "alice");
  CHECK(code_of([&] { mgr.launch(tcp_plan("b"), "alice"); }) == Errc::QuotaExceeded);
  CHECK_NOTHROW(mgr.launch(tcp_plan("b"), "bob"));
  mgr.stop(h);
  CHECK_NOTHROW(mgr.launch(tcp_plan("b"), "alice"));
}

TEST_CASE("stop semantics") {
  TempDir tmp;
  LocalDriver driver;
  InstanceManager mgr(driver, {tmp.path(), 1});
  const auto h = mgr.launch(tcp_plan(), "alice");
  CHECK(h.state == InstanceState::Running);
  REQUIRE(h.endpoints.size() == 1);
  const auto stopped = mgr.stop(h);
  CHECK(stopped.state == InstanceState::Stopped);
  CHECK(stopped.endpoints.empty());
  CHECK(code_of([&] { mgr.stop(h); }) == Errc::NotRunning);
  InstanceHandle ghost;
  ghost.instance_id = "nope";
  CHECK(code_of([&] { mgr.stop(ghost); }) == Errc::NotFound);
}

TEST_CASE("local endpoint greets and echoes") {
  TempDir tmp;
  LocalDriver driver;
  InstanceManager mgr(driver, {tmp.path(), 1});
  const auto h = mgr.launch(tcp_plan("echo-me"), "alice");
  REQUIRE(h.endpoints.size() == 1);
  const auto& ep = h.endpoints[0];
  CHECK(ep.host == "127.0.0.1");
  CHECK(ep.container_port == 1337);
  CHECK(ep.host_port != 0);
  const auto banner = LocalDriver::banner_for("echo-me");
  CHECK(exchange(ep.host_port, "ping\n", banner.size() + 5) == banner + "ping\n");
}

TEST_CASE("ports are ephemeral and distinct") {
  TempDir tmp;
  LocalDriver driver;
  InstanceManager mgr(driver, {tmp.path(), 1});
  const auto a = mgr.launch(tcp_plan(), "alice");
  const auto b = mgr.launch(tcp_plan(), "bob");
  CHECK(a.endpoints[0].host_port != b.endpoints[0].host_port);
}

TEST_CASE("driver failures leave no instance") {
  TempDir tmp;
  LocalDriver driver;
  InstanceManager mgr(driver, {tmp.path(), 1});
  driver.fail_next_build();
  CHECK(code_of([&] { mgr.launch(tcp_plan(), "alice"); }) == Errc::DriverFailure);
  driver.fail_next_start();
  CHECK(code_of([&] { mgr.launch(tcp_plan(), "alice"); }) == Errc::DriverFailure);
  CHECK(mgr.running_for("alice").empty());
  CHECK(driver.running_count() == 0);
  CHECK_NOTHROW(mgr.launch(tcp_plan(), "alice"));
}

TEST_CASE("user ids must be path-safe") {
  TempDir tmp;
  LocalDriver driver;
  InstanceManager mgr(driver, {tmp.path(), 1});
  CHECK(code_of([&] { mgr.launch(tcp_plan(), "../root"); }) == Errc::InvalidArgument);
  CHECK(code_of([&] { mgr.launch(tcp_plan(), ".."); }) == Errc::InvalidArgument);
  CHECK(is_path_safe_user("user.name-1_x"));
}

TEST_CASE("driver ledger") {
  TempDir tmp;
  LocalDriver driver(tmp / "driver.log");
  InstanceManager mgr(driver, {tmp.path(), 1});
  mgr.stop(mgr.launch(tcp_plan(), "alice"));
  const auto ledger = driver.ledger();
  REQUIRE(ledger.size() == 3);
  CHECK(ledger[0].rfind("build ", 0) == 0);
  CHECK(ledger[1].rfind("start ", 0) == 0);
  CHECK(ledger[2].rfind("stop ", 0) == 0);
  CHECK(read_file(tmp / "driver.log").size() > 0);
}

TEST_CASE("lifecycle model check") {
  const auto outcome = run_lifecycle_model_check(300, 2024);
  INFO(outcome.first_problem);
  CHECK(outcome.sequences == 300);
  CHECK(outcome.transitions > 0);
  CHECK(outcome.clean());
}

TEST_CASE("oci driver against a fake runtime") {
  TempDir tmp;
  const auto fake = tmp / "fake-runtime";
  const auto calls = tmp / "calls.log";
  write_file(fake,
             "#!/bin/sh\n"
             "echo \"$*\" >> '" + calls.string() + "'\n"
             "case \"$1\" in\n"
             "  build) exit 0 ;;\n"
             "  run) echo cafe1234 ;;\n"
             "  port) echo 127.0.0.1:49153 ;;\n"
             "  inspect) echo true ;;\n"
             "  rm) exit 0 ;;\n"
             "  *) exit 1 ;;\n"
             "esac\n");
  fs::permissions(fake, fs::perms::owner_all);

  ChallengeFixture f{.id = "oci-chal", .artifacts = {"dist/vuln"}, .endpoints = {"tcp/31337"}, .src_dir = true,
                     .upstream_dockerfile = true};
  const auto dir = write_challenge(tmp / "archive", f);
  const auto plan = compile_build_plan(parse_manifest(manifest_text(f)), dir);

  OciDriver driver({fake.string(), tmp / "scratch", "127.0.0.1"});
  const auto image = driver.build(plan);
  CHECK(image == image_tag(plan));
  CHECK(fs::exists(tmp / "scratch" / "oci-chal.containerfile"));
  const Mount mounts[] = {{tmp / "ws", "/home/user"}};
  const auto started = driver.start(image, plan.exposed_ports, mounts);
  CHECK(started.runtime_id == "cafe1234");
  REQUIRE(started.endpoints.size() == 1);
  CHECK(started.endpoints[0].host_port == 49153);
  CHECK(driver.alive("cafe1234"));
  driver.stop("cafe1234");

  const auto log = read_file(calls);
  CHECK(log.find("build -t ctf-vault/oci-chal-upstream:") != std::string::npos);
  CHECK(log.find("--build-context upstream=docker-image://") != std::string::npos);
  CHECK(log.find("run -d -p 127.0.0.1::31337/tcp -v " + (tmp / "ws").string() + ":/home/user") !=
        std::string::npos);
  CHECK(log.find("rm -f cafe1234") != std::string::npos);

  OciDriver broken({(tmp / "missing-binary").string(), tmp / "scratch", "127.0.0.1"});
  CHECK(code_of([&] { broken.build(plan); }) == Errc::DriverFailure);
}
