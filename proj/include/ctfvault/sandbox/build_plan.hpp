#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ctfvault/manifest.hpp"

namespace ctfvault::sandbox {

inline constexpr std::string_view kWorkspaceMount = "/home/user";
inline constexpr std::string_view kChallengeRoot = "/challenge";
inline constexpr std::string_view kDefaultBaseRef = "ctf-vault/base:latest";
/// Stage name under which an upstream `src/Dockerfile` is made available.
inline constexpr std::string_view kUpstreamStage = "upstream";

struct CopyIn {
  std::string src;  // relative to the challenge directory, `/`-separated
  std::string dst;  // absolute container path
  friend bool operator==(const CopyIn&, const CopyIn&) = default;
};

struct Run {
  std::string command;
  friend bool operator==(const Run&, const Run&) = default;
};

struct Entrypoint {
  std::string command;
  friend bool operator==(const Entrypoint&, const Entrypoint&) = default;
};

using BuildStep = std::variant<CopyIn, Run, Entrypoint>;

struct BuildPlan {
  std::string challenge_id;
  std::string base_ref;
  /// Set when the challenge ships `src/Dockerfile`; the upstream image is
  /// layered onto the base stage unmodified.
  std::optional<std::string> upstream_recipe;
  std::vector<BuildStep> stages;
  std::vector<EndpointSpec> exposed_ports;  // sorted by port
  std::string workspace_mount{kWorkspaceMount};
  /// Build context on the host. Not part of the rendered recipe.
  std::filesystem::path context_dir;

  friend bool operator==(const BuildPlan&, const BuildPlan&) = default;
};

/// Throws PathEscape for artifact paths leaving `dir`, NoContent when the
/// challenge has no src/, no dist/, no artifacts and no endpoints.
BuildPlan compile_build_plan(const ChallengeManifest& manifest, const std::filesystem::path& dir,
                             std::string_view base_ref = kDefaultBaseRef);

/// Throws InvalidArgument for plans that break the BuildPlan invariants.
void check_plan(const BuildPlan& plan);

/// Containerfile text. Line 1 is `FROM <base_ref> AS base`, line 2 opens the
/// challenge stage, then one instruction per step. LF only.
std::string render_build_recipe(const BuildPlan& plan);

/// Stable image reference derived from the rendered recipe.
std::string image_tag(const BuildPlan& plan);

}  // namespace ctfvault::sandbox
