#include "ctfvault/registry.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "ctfvault/error.hpp"

namespace fs = std::filesystem;

namespace ctfvault {
namespace {

std::vector<fs::path> sorted_subdirectories(const fs::path& dir) {
  std::vector<fs::path> out;
  std::error_code ec;
  fs::directory_iterator it(dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot read directory " + dir.string() + ": " + ec.message());
  for (const auto& entry : it) {
    const auto name = entry.path().filename().string();
    if (name.empty() || name.front() == '.') continue;
    std::error_code type_ec;
    if (entry.is_directory(type_ec)) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(Errc::IoFailure, "cannot read " + path.string());
  return buf.str();
}

bool stays_inside(const fs::path& dir, const fs::path& candidate) {
  std::error_code ec;
  const auto base = fs::weakly_canonical(dir, ec);
  if (ec) return false;
  const auto full = fs::weakly_canonical(candidate, ec);
  if (ec) return false;
  auto [b, f] = std::mismatch(base.begin(), base.end(), full.begin(), full.end());
  return b == base.end();
}

}  // namespace

std::string_view to_string(Severity severity) noexcept {
  return severity == Severity::Error ? "ERROR" : "WARNING";
}

bool ValidationReport::passing() const noexcept {
  return std::none_of(findings.begin(), findings.end(),
                      [](const Finding& f) { return f.severity == Severity::Error; });
}

void Registry::insert(ChallengeManifest manifest, fs::path directory) {
  if (const auto* existing = find(manifest.id)) {
    throw Error(Errc::DuplicateId, "duplicate challenge id '" + manifest.id + "' in " +
                                       existing->directory.string() + " and " + directory.string());
  }
  auto& ids = by_event_[manifest.event];
  ids.insert(std::upper_bound(ids.begin(), ids.end(), manifest.id), manifest.id);
  std::string id = manifest.id;
  entries_.emplace(std::move(id), Entry{std::move(manifest), std::move(directory)});
}

const Registry::Entry* Registry::find(std::string_view id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string dump(const Registry& registry) {
  std::ostringstream out;
  for (const auto& [id, entry] : registry.entries()) {
    out << "## " << id << ' '
        << entry.directory.lexically_relative(registry.root()).generic_string() << '\n'
        << serialize_manifest(entry.manifest);
  }
  for (const auto& [event, ids] : registry.event_index()) {
    out << "@ " << event;
    for (const auto& id : ids) out << ' ' << id;
    out << '\n';
  }
  return out.str();
}

IngestResult ingest_archive(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(Errc::IoFailure, "archive root " + root.string() + " is not a readable directory");
  }
  IngestResult result{Registry(root), {}};
  for (const auto& event_dir : sorted_subdirectories(root)) {
    for (const auto& challenge_dir : sorted_subdirectories(event_dir)) {
      const auto rel = challenge_dir.lexically_relative(root).generic_string();
      const auto manifest_path = challenge_dir / kManifestFileName;
      if (!fs::is_regular_file(manifest_path, ec)) {
        result.findings.push_back(Finding{Severity::Warning, "MANIFEST_MISSING",
                                          "directory has no " + std::string(kManifestFileName) +
                                              "; skipped",
                                          rel});
        continue;
      }
      ChallengeManifest manifest;
      try {
        manifest = parse_manifest(read_file(manifest_path));
      } catch (const Error& e) {
        if (e.code() == Errc::IoFailure) throw;
        result.findings.push_back(Finding{Severity::Error, "MANIFEST_INVALID",
                                          std::string(to_string(e.code())) + ": " + e.what(), rel});
        continue;
      }
      result.registry.insert(std::move(manifest), challenge_dir);
    }
  }
  return result;
}

ValidationReport validate_challenge(const ChallengeManifest& manifest, const fs::path& dir) {
  ValidationReport report{manifest.id, {}};
  std::error_code ec;

  if (!fs::is_regular_file(dir / manifest.rehost_doc, ec)) {
    report.findings.push_back(Finding{Severity::Error, "REHOST_MISSING",
                                      "rehosting document " + manifest.rehost_doc + " not found",
                                      manifest.rehost_doc});
  }
  for (const auto& raw : manifest.artifacts) {
    std::string artifact;
    try {
      artifact = normalize_relative_path(raw);
    } catch (const Error& e) {
      report.findings.push_back(Finding{Severity::Error, "PATH_ESCAPE", e.what(), raw});
      continue;
    }
    const auto full = dir / artifact;
    if (!fs::is_regular_file(full, ec)) {
      report.findings.push_back(
          Finding{Severity::Error, "ARTIFACT_MISSING", "artifact " + artifact + " not found", artifact});
    } else if (!stays_inside(dir, full)) {
      report.findings.push_back(Finding{Severity::Error, "PATH_ESCAPE",
                                        "artifact " + artifact + " resolves outside the challenge directory",
                                        artifact});
    }
  }
  if (manifest.description.empty()) {
    report.findings.push_back(
        Finding{Severity::Warning, "EMPTY_DESCRIPTION", "challenge has no description", std::nullopt});
  }
  if (manifest.endpoints.empty() && manifest.artifacts.empty()) {
    report.findings.push_back(Finding{Severity::Error, "NO_ENDPOINT_NO_ARTIFACT",
                                      "challenge declares neither endpoints nor artifacts",
                                      std::nullopt});
  }
  return report;
}

std::vector<ChallengeManifest> query(const Registry& registry, const QueryFilter& filter) {
  std::vector<ChallengeManifest> out;
  for (const auto& [id, entry] : registry.entries()) {
    const auto& m = entry.manifest;
    if (filter.event && m.event != *filter.event) continue;
    if (filter.year && m.year != *filter.year) continue;
    if (filter.category && m.category != *filter.category) continue;
    out.push_back(m);
  }
  std::sort(out.begin(), out.end(), [](const ChallengeManifest& a, const ChallengeManifest& b) {
    return std::tie(a.event, a.year, a.id) < std::tie(b.event, b.year, b.id);
  });
  return out;
}

const CategoryRow& CategoryStats::row(Category c) const {
  for (const auto& r : rows) {
    if (r.category == c) return r;
  }
  throw Error(Errc::NotFound, "category row missing");
}

CategoryStats category_stats(const Registry& registry, std::span<const SolveRecord> solves) {
  CategoryStats stats;
  std::array<std::size_t, kAllCategories.size()> available{};
  std::array<std::size_t, kAllCategories.size()> solved{};
  for (const auto& [id, entry] : registry.entries()) {
    ++available[static_cast<std::size_t>(entry.manifest.category)];
  }

  std::set<std::pair<std::string_view, std::string_view>> seen;
  std::set<std::string> unknown;
  for (const auto& record : solves) {
    if (!seen.emplace(record.user_id, record.challenge_id).second) continue;
    if (const auto* entry = registry.find(record.challenge_id)) {
      ++solved[static_cast<std::size_t>(entry->manifest.category)];
    } else {
      ++stats.unknown_solves;
      unknown.insert(record.challenge_id);
    }
  }
  stats.unknown_challenges.assign(unknown.begin(), unknown.end());

  CategoryRow total{std::nullopt, "Total", 0, 0};
  for (const Category c : kAllCategories) {
    const auto i = static_cast<std::size_t>(c);
    stats.rows.push_back(CategoryRow{c, std::string(table_label(c)), available[i], solved[i]});
    total.available += available[i];
    total.solves += solved[i];
  }
  stats.rows.push_back(std::move(total));
  return stats;
}

}  // namespace ctfvault
