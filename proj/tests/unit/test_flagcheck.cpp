#include <doctest.h>

#include <random>
#include <regex>

#include "ctfvault/error.hpp"
#include "ctfvault/flagcheck.hpp"
#include "sha256_reference.hpp"

using namespace ctfvault;
using namespace ctfvault::flagcheck;

namespace {

std::string random_bytes(std::mt19937_64& rng, std::size_t len) {
  std::string s(len, '\0');
  for (auto& c : s) c = static_cast<char>(rng() & 0xff);
  return s;
}

}  // namespace

TEST_CASE("normalize_flag strips trailing line endings only") {
  CHECK(normalize_flag("flag{x}\n") == "flag{x}");
  CHECK(normalize_flag("flag{x}") == "flag{x}");
  CHECK(normalize_flag("  flag{x}") == "  flag{x}");
  CHECK(normalize_flag("flag{x}\r\n") == "flag{x}");
  CHECK(normalize_flag("flag{x} \n") == "flag{x} ");
}

TEST_CASE("digest vectors") {
  CHECK(digest_flag("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(digest_flag("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(testing::reference_sha256_hex("") == digest_flag(""));
  CHECK(testing::reference_sha256_hex("abc") == digest_flag("abc"));
}

TEST_CASE("digest agrees with the reference implementation") {
  std::mt19937_64 rng(7);
  const std::regex hex64("[0-9a-f]{64}");
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_bytes(rng, rng() % 200);
    const auto d = digest_flag(s);
    CHECK(std::regex_match(d, hex64));
    CHECK(d == testing::reference_sha256_hex(s));
  }
}

TEST_CASE("generate_check") {
  const auto rec = generate_check("flag{test}\n", "pwn{release}", "chal-1");
  CHECK(rec.digest == digest_flag("flag{test}"));
  CHECK(rec.platform_flag == "pwn{release}");
  CHECK(rec.challenge_id == "chal-1");
  CHECK(rec.algorithm == "sha256");
  CHECK_THROWS_AS(generate_check("\n", "p", "c"), Error);
  try {
    generate_check("\n", "p", "c");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyFlag);
  }
}

TEST_CASE("verify") {
  const auto rec = generate_check("flag{test}", "pwn{r}", "c");
  const auto ok = verify(rec, "flag{test}\n");
  CHECK(ok.accepted());
  CHECK(ok.platform_flag() == "pwn{r}");
  CHECK_FALSE(verify(rec, "flag{Test}").accepted());
  CHECK_FALSE(verify(rec, "").accepted());
  CHECK(verify(rec, "").platform_flag().empty());
}

TEST_CASE("verify_plaintext") {
  CHECK(verify_plaintext("flag{a}", "flag{a}\n").accepted());
  CHECK_FALSE(verify_plaintext("flag{a}", "flag{b}").accepted());
}

TEST_CASE("verify_plaintext matches verify over a self-released record") {
  std::mt19937_64 rng(99);
  const std::string alphabet = "ab{}\n\r ";
  auto word = [&] {
    std::string s;
    for (auto n = rng() % 6; n > 0; --n) s += alphabet[rng() % alphabet.size()];
    return s;
  };
  for (int i = 0; i < 5000; ++i) {
    const auto e = word();
    const auto s = word();
    bool via_record = false;
    try {
      via_record = verify(generate_check(e, e, "c"), s).accepted();
    } catch (const Error& err) {
      REQUIRE(err.code() == Errc::EmptyFlag);
    }
    CAPTURE(e);
    CAPTURE(s);
    CHECK(verify_plaintext(e, s).accepted() == via_record);
  }
}

TEST_CASE("serialized records never contain the flag") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    std::string flag = "flag{";
    for (auto n = 8 + rng() % 24; n > 0; --n) flag += static_cast<char>('!' + rng() % 94);
    flag += "}";
    const auto text = serialize(generate_check(flag, "pwn{p}", "c"));
    CHECK(text.find(flag) == std::string::npos);
  }
}

TEST_CASE("record text round-trips") {
  const auto rec = generate_check("flag{t}\n", "pwn.college{abc}", "chal-9");
  const auto text = serialize(rec);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(text.rfind("algorithm: sha256\nchallenge: chal-9\ndigest: ", 0) == 0);
  CHECK(parse_check_record(text) == rec);
  CHECK_THROWS_AS(parse_check_record("algorithm: md5\n"), Error);
}
