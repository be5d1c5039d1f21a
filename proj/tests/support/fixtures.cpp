#include "fixtures.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "ctfvault/digest.hpp"

namespace ctfvault::testing {

TempDir::TempDir() {
  static std::mt19937_64 rng{std::random_device{}()};
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = fs::temp_directory_path() / ("ctfvault-test-" + std::to_string(rng()));
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create a temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string manifest_text(const ChallengeFixture& f) {
  std::ostringstream out;
  out << "# fixture manifest\n"
      << "id: " << f.id << '\n'
      << "event: " << f.event << '\n'
      << "year: " << f.year << '\n'
      << "category: " << f.category << '\n'
      << "points: " << f.points << '\n'
      << "title: Fixture " << f.id << '\n'
      << "description: " << f.description << '\n';
  for (const auto& a : f.artifacts) out << "artifact: " << a << '\n';
  for (const auto& e : f.endpoints) out << "endpoint: " << e << '\n';
  if (f.platform_flag) {
    out << "flag_digest: " << sha256_hex(f.flag) << '\n'
        << "platform_flag: " << *f.platform_flag << '\n';
  } else {
    out << "flag: " << f.flag << '\n';
  }
  return out.str();
}

std::string event_dir_name(const ChallengeFixture& f) {
  std::string slug;
  for (char c : f.event) {
    if (c >= 'A' && c <= 'Z') slug += static_cast<char>(c - 'A' + 'a');
    else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) slug += c;
    else if (!slug.empty() && slug.back() != '-') slug += '-';
  }
  return slug + "-" + std::to_string(f.year);
}

fs::path write_challenge(const fs::path& root, const ChallengeFixture& f) {
  const fs::path dir = root / event_dir_name(f) / f.id;
  fs::create_directories(dir);
  write_file(dir / "challenge.manifest", manifest_text(f));
  if (f.rehost) write_file(dir / "REHOST.md", "# Rehosting " + f.id + "\n\n1. Build the image.\n");
  if (f.create_artifacts) {
    for (const auto& a : f.artifacts) write_file(dir / a, "artifact " + a + "\n");
  }
  if (f.src_dir) write_file(dir / "src" / "server.py", "print('hello')\n");
  if (f.upstream_dockerfile) write_file(dir / "src" / "Dockerfile", "FROM ubuntu:22.04\nCOPY . /srv\n");
  return dir;
}

const std::array<TableRow, 11>& table_distribution() {
  static const std::array<TableRow, 11> rows = {{
      {Category::Cryptography, 261, 5204},
      {Category::BinaryExploitation, 168, 504},
      {Category::ReverseEngineering, 125, 856},
      {Category::WebExploitation, 26, 220},
      {Category::Forensics, 43, 160},
      {Category::OSINT, 17, 71},
      {Category::Blockchain, 2, 2},
      {Category::RadioFrequency, 2, 8},
      {Category::SocialEngineering, 1, 2},
      {Category::Steganography, 1, 4},
      {Category::Misc, 54, 364},
  }};
  return rows;
}

namespace {

std::string table_challenge_id(Category c, std::size_t i) {
  return std::string(canonical_name(c)) + "-" + std::to_string(i);
}

}  // namespace

void write_table_archive(const fs::path& root) {
  static const std::array<std::string, 4> kEvents = {"Alpha CTF", "Bravo CTF", "Charlie CTF", "Delta CTF"};
  for (const auto& row : table_distribution()) {
    for (std::size_t i = 0; i < row.available; ++i) {
      ChallengeFixture f;
      f.id = table_challenge_id(row.category, i);
      f.event = kEvents[i % kEvents.size()];
      f.year = 2014 + static_cast<int>(i % 11);
      f.category = std::string(canonical_name(row.category));
      f.points = static_cast<int>(50 * (1 + i % 10));
      f.artifacts = {"dist/" + f.id + ".bin"};
      f.flag = "flag{" + f.id + "}";
      write_challenge(root, f);
    }
  }
}

void write_table_solves(const fs::path& log, std::size_t duplicates) {
  std::ostringstream out;
  std::int64_t ts = 1'700'000'000;
  std::vector<std::string> lines;
  for (const auto& row : table_distribution()) {
    for (std::size_t j = 0; j < row.solves; ++j) {
      const std::string user = "user" + std::to_string(j / row.available);
      lines.push_back(std::to_string(ts++) + " " + user + " " +
                      table_challenge_id(row.category, j % row.available));
    }
  }
  for (std::size_t d = 0; d < duplicates && d < lines.size(); ++d) {
    const auto& original = lines[d * 7 % lines.size()];
    lines.push_back(std::to_string(ts++) + original.substr(original.find(' ')));
  }
  for (const auto& line : lines) out << line << '\n';
  write_file(log, out.str());
}

std::vector<ChallengeFixture> fixture_corpus() {
  std::vector<ChallengeFixture> corpus;
  auto add = [&](ChallengeFixture f) { corpus.push_back(std::move(f)); };
  add({.id = "baby-rsa", .event = "Alpha CTF", .year = 2019, .category = "crypto",
       .artifacts = {"dist/chall.py", "dist/output.txt"}});
  add({.id = "stack-smash", .event = "Alpha CTF", .year = 2019, .category = "pwn",
       .artifacts = {"dist/chall"}, .endpoints = {"tcp/1337"}});
  add({.id = "heap-house", .event = "Bravo CTF", .year = 2021, .category = "pwn",
       .artifacts = {"dist/heap", "dist/libc.so.6"}, .endpoints = {"tcp/9001", "ssh/22"}});
  add({.id = "crackme", .event = "Bravo CTF", .year = 2021, .category = "rev",
       .artifacts = {"dist/crackme"}, .flag = "flag{rev}", .platform_flag = "pwn.college{crackme}"});
  add({.id = "blog-sqli", .event = "Charlie CTF", .year = 2022, .category = "web",
       .endpoints = {"http/8080"}, .src_dir = true});
  add({.id = "upstream-pwn", .event = "Charlie CTF", .year = 2022, .category = "pwn",
       .artifacts = {"dist/vuln"}, .endpoints = {"tcp/31337"}, .src_dir = true,
       .upstream_dockerfile = true});
  add({.id = "pcap-hunt", .event = "Delta CTF", .year = 2018, .category = "forensics",
       .artifacts = {"dist/capture.pcap"}});
  add({.id = "where-am-i", .event = "Delta CTF", .year = 2018, .category = "osint",
       .artifacts = {"dist/photo.jpg"}});
  add({.id = "hidden-pixels", .event = "Echo CTF", .year = 2023, .category = "stego",
       .artifacts = {"dist/image.png"}, .endpoints = {"tcp/5000"}});
  add({.id = "sanity-check", .event = "Echo CTF", .year = 2023, .category = "misc",
       .endpoints = {"tcp/4000", "http/4001"}, .src_dir = true});
  return corpus;
}

}  // namespace ctfvault::testing
