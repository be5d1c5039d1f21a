#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "ctfvault/cli.hpp"
#include "ctfvault/flagcheck.hpp"
#include "ctfvault/sandbox/driver.hpp"
#include "fixtures.hpp"

using namespace ctfvault;
using namespace ctfvault::testing;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args, const std::string& stdin_text = "") {
  std::istringstream in(stdin_text);
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

void write_corpus(const fs::path& root) {
  for (const auto& f : fixture_corpus()) write_challenge(root, f);
}

}  // namespace

TEST_CASE("validate") {
  TempDir tmp;
  write_corpus(tmp / "archive");
  const auto root = (tmp / "archive").string();
  auto r = run_cli({"validate", root});
  CHECK(r.code == 0);
  CHECK(r.out.empty());

  fs::remove(tmp / "archive" / "alpha-ctf-2019" / "baby-rsa" / "REHOST.md");
  r = run_cli({"validate", root});
  CHECK(r.code == 1);
  CHECK(r.out.rfind("ERROR baby-rsa REHOST_MISSING ", 0) == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);

  r = run_cli({"validate", root, "--json"});
  CHECK(r.code == 1);
  const auto rec = nlohmann::json::parse(r.out);
  CHECK(rec["code"] == "REHOST_MISSING");
  CHECK(rec["severity"] == "ERROR");

  CHECK(run_cli({"validate", (tmp / "missing").string()}).code == 3);
  CHECK(run_cli({"validate"}).code == 2);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
}

TEST_CASE("validate via --config") {
  TempDir tmp;
  write_corpus(tmp / "archive");
  write_file(tmp / "vault.json", R"({"archive": {"root": "archive"}, "data.dir": "data"})");
  CHECK(run_cli({"--config", (tmp / "vault.json").string(), "validate"}).code == 0);
  CHECK(run_cli({"validate", "--config", (tmp / "vault.json").string()}).code == 0);
}

TEST_CASE("duplicate ids fail validation") {
  TempDir tmp;
  write_challenge(tmp.path(), {.id = "same", .event = "A", .artifacts = {"dist/x"}});
  write_challenge(tmp.path(), {.id = "same", .event = "B", .artifacts = {"dist/x"}});
  const auto r = run_cli({"validate", tmp.path().string()});
  CHECK(r.code == 1);
  CHECK(r.out.find("DUPLICATE_ID") != std::string::npos);
}

TEST_CASE("build") {
  TempDir tmp;
  write_corpus(tmp / "archive");
  const auto root = (tmp / "archive").string();
  const auto out = (tmp / "out").string();
  auto r = run_cli({"build", "stack-smash", "--root", root, "--out", out});
  REQUIRE(r.code == 0);
  const auto recipe_path = tmp / "out" / "stack-smash.containerfile";
  CHECK(r.out == "recipe " + recipe_path.generic_string() + "\n");
  const auto first = read_file(recipe_path);
  CHECK(first.rfind("FROM ctf-vault/base:latest AS base\n", 0) == 0);
  REQUIRE(run_cli({"build", "stack-smash", "--root", root, "--out", out}).code == 0);
  CHECK(read_file(recipe_path) == first);

  r = run_cli({"build", "no-such-challenge", "--root", root, "--out", out});
  CHECK(r.code == 2);
  CHECK(r.err.find("unknown challenge") != std::string::npos);

  fs::remove(tmp / "archive" / "alpha-ctf-2019" / "stack-smash" / "REHOST.md");
  CHECK(run_cli({"build", "stack-smash", "--root", root, "--out", out}).code == 1);
}

TEST_CASE("build --run records one build in the local driver log") {
  TempDir tmp;
  write_corpus(tmp / "archive");
  write_file(tmp / "vault.json", R"({"archive.root": "archive", "data.dir": "data", "runtime.driver": "local"})");
  const auto r = run_cli({"build", "heap-house", "--config", (tmp / "vault.json").string(), "--out",
                          (tmp / "out").string(), "--run"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("image local/heap-house@") != std::string::npos);
  const auto log = read_file(tmp / "data" / "local-driver.log");
  CHECK(std::count(log.begin(), log.end(), '\n') == 1);
  CHECK(log.rfind("build local/heap-house@", 0) == 0);
}

TEST_CASE("flagcheck-gen") {
  auto r = run_cli({"flagcheck-gen", "chal-1", "pwn{release}"}, "flag{t}\n");
  REQUIRE(r.code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 4);
  CHECK(r.out.find("flag{t}") == std::string::npos);
  const auto record = flagcheck::parse_check_record(r.out);
  CHECK(record.digest == flagcheck::digest_flag("flag{t}"));
  const auto verdict = flagcheck::verify(record, "flag{t}");
  CHECK(verdict.accepted());
  CHECK(verdict.platform_flag() == "pwn{release}");

  CHECK(run_cli({"flagcheck-gen", "chal-1", "pwn{release}"}, "").code == 2);
  CHECK(run_cli({"flagcheck-gen", "chal-1", "pwn{release}"}, "\n").code == 2);
  CHECK(run_cli({"flagcheck-gen", "Bad Id", "p"}, "flag{t}").code == 2);
  CHECK(run_cli({"flagcheck-gen", "chal-1"}, "flag{t}").code == 2);

  r = run_cli({"flagcheck-gen", "chal-1", "p", "--json"}, "flag{t}");
  CHECK(nlohmann::json::parse(r.out)["digest"] == flagcheck::digest_flag("flag{t}"));
}

TEST_CASE("stats") {
  TempDir tmp;
  write_corpus(tmp / "archive");
  write_file(tmp / "solves.log", "1 alice baby-rsa\n2 bob baby-rsa\n3 alice baby-rsa\n4 alice ghost\n");
  const auto r = run_cli({"stats", "--root", (tmp / "archive").string(), "--solves", (tmp / "solves.log").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("Cryptography", 0) == 0);
  CHECK(r.out.find("Total") != std::string::npos);
  const auto again = run_cli({"stats", "--root", (tmp / "archive").string(), "--solves", (tmp / "solves.log").string()});
  CHECK(again.out == r.out);
  const auto js = run_cli({"stats", "--json", "--root", (tmp / "archive").string(), "--solves",
                           (tmp / "solves.log").string()});
  const auto payload = nlohmann::json::parse(js.out);
  CHECK(payload["rows"][0]["solves"] == 2);
  CHECK(payload["rows"][11]["available"] == 10);
  CHECK(payload["unknown"]["solves"] == 1);
}

TEST_CASE("the installed binary reads the flag from stdin only") {
  const auto empty = sandbox::run_process({CTF_VAULT_EXE, "flagcheck-gen", "chal-1", "p"});
  CHECK(empty.exit_code == 2);
  const auto help = sandbox::run_process({CTF_VAULT_EXE, "--help"});
  CHECK(help.exit_code == 0);
  CHECK(help.out.find("flagcheck-gen") != std::string::npos);
}
