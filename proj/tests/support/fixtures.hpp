#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctfvault/category.hpp"
#include "ctfvault/registry.hpp"

namespace ctfvault::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const fs::path& path() const noexcept { return path_; }
  fs::path operator/(const fs::path& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

void write_file(const fs::path& path, std::string_view content);
std::string read_file(const fs::path& path);

struct ChallengeFixture {
  std::string id;
  std::string event = "Demo CTF";
  int year = 2020;
  std::string category = "misc";
  int points = 100;
  std::string description = "A fixture challenge.";
  std::vector<std::string> artifacts;
  std::vector<std::string> endpoints;
  std::string flag = "flag{fixture}";
  std::optional<std::string> platform_flag;  // set: store a digest instead of the flag
  bool rehost = true;
  bool create_artifacts = true;
  bool src_dir = false;
  bool upstream_dockerfile = false;
};

std::string manifest_text(const ChallengeFixture& fixture);
std::string event_dir_name(const ChallengeFixture& fixture);
/// Writes `<root>/<event>-<year>/<id>/...` and returns the challenge dir.
fs::path write_challenge(const fs::path& root, const ChallengeFixture& fixture);

struct TableRow {
  Category category;
  std::size_t available;
  std::size_t solves;
};

/// Per-category challenge and solve counts for the stats fixtures (700 / 7,395).
const std::array<TableRow, 11>& table_distribution();

/// 700 challenges laid out on disk according to table_distribution().
void write_table_archive(const fs::path& root);
/// Solve log with exactly the table's deduplicated solve counts, plus
/// `duplicates` repeated lines that must not count.
void write_table_solves(const fs::path& log, std::size_t duplicates = 25);

/// Ten varied challenges used for determinism checks.
std::vector<ChallengeFixture> fixture_corpus();

}  // namespace ctfvault::testing
