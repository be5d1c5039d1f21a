#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctfvault/manifest.hpp"
#include "ctfvault/store.hpp"

namespace ctfvault {

enum class Severity { Error, Warning };

std::string_view to_string(Severity severity) noexcept;  // "ERROR" / "WARNING"

struct Finding {
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
  std::optional<std::string> path;

  friend bool operator==(const Finding&, const Finding&) = default;
};

struct ValidationReport {
  std::string challenge_id;
  std::vector<Finding> findings;

  [[nodiscard]] bool passing() const noexcept;
};

/// Immutable-after-ingest index of the archive. Iteration is by id.
class Registry {
 public:
  struct Entry {
    ChallengeManifest manifest;
    std::filesystem::path directory;
  };

  Registry() = default;
  explicit Registry(std::filesystem::path root) : root_(std::move(root)) {}

  /// Throws DuplicateId naming both directories.
  void insert(ChallengeManifest manifest, std::filesystem::path directory);

  [[nodiscard]] const Entry* find(std::string_view id) const;
  [[nodiscard]] const std::map<std::string, Entry, std::less<>>& entries() const noexcept {
    return entries_;
  }
  [[nodiscard]] const std::map<std::string, std::vector<std::string>, std::less<>>& event_index()
      const noexcept {
    return by_event_;
  }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
  [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
  std::map<std::string, Entry, std::less<>> entries_;
  std::map<std::string, std::vector<std::string>, std::less<>> by_event_;
};

/// Canonical, order-independent text dump (directories relative to root).
std::string dump(const Registry& registry);

struct IngestResult {
  Registry registry;
  /// Skipped directories (Warning `MANIFEST_MISSING`) and manifests that do
  /// not parse (Error `MANIFEST_INVALID`); paths are relative to the root.
  std::vector<Finding> findings;
};

/// Scans `<root>/<event-dir>/<challenge-dir>/challenge.manifest`. Throws
/// IoFailure when the root is unreadable and DuplicateId on id clashes.
IngestResult ingest_archive(const std::filesystem::path& root);

/// Read-only checks: REHOST_MISSING, ARTIFACT_MISSING, EMPTY_DESCRIPTION,
/// NO_ENDPOINT_NO_ARTIFACT.
ValidationReport validate_challenge(const ChallengeManifest& manifest,
                                    const std::filesystem::path& dir);

struct QueryFilter {
  std::optional<std::string> event;
  std::optional<int> year;
  std::optional<Category> category;
};

/// Matches every set field; sorted by (event, year, id).
std::vector<ChallengeManifest> query(const Registry& registry, const QueryFilter& filter);

struct CategoryRow {
  std::optional<Category> category;  // nullopt for the Total row
  std::string label;
  std::size_t available = 0;
  std::size_t solves = 0;

  friend bool operator==(const CategoryRow&, const CategoryRow&) = default;
};

struct CategoryStats {
  /// Eleven category rows in table order followed by the Total row.
  std::vector<CategoryRow> rows;
  /// Deduplicated solves whose challenge is not in the registry; excluded from Total.
  std::size_t unknown_solves = 0;
  std::vector<std::string> unknown_challenges;

  [[nodiscard]] const CategoryRow& total() const { return rows.back(); }
  [[nodiscard]] const CategoryRow& row(Category c) const;
};

CategoryStats category_stats(const Registry& registry, std::span<const SolveRecord> solves);

}  // namespace ctfvault
