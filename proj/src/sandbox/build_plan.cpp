#include "ctfvault/sandbox/build_plan.hpp"

#include <algorithm>
#include <json.hpp>
#include <sstream>

#include "ctfvault/digest.hpp"
#include "ctfvault/error.hpp"

namespace fs = std::filesystem;

namespace ctfvault::sandbox {
namespace {

bool resolves_inside(const fs::path& dir, const fs::path& candidate) {
  std::error_code ec;
  const auto base = fs::weakly_canonical(dir, ec);
  if (ec) return false;
  const auto full = fs::weakly_canonical(candidate, ec);
  if (ec) return false;
  return std::mismatch(base.begin(), base.end(), full.begin(), full.end()).first == base.end();
}

std::string container_path_for(const std::string& artifact) {
  constexpr std::string_view kDist = "dist/";
  std::string_view rel = artifact;
  if (rel.substr(0, kDist.size()) == kDist) rel.remove_prefix(kDist.size());
  return std::string(kChallengeRoot) + "/" + std::string(rel);
}

std::string serve_command(std::uint16_t port, const std::string& target) {
  return "socat TCP-LISTEN:" + std::to_string(port) + ",reuseaddr,fork EXEC:" + target;
}

bool needs_json_form(std::string_view s) {
  return s.empty() || s.front() == '[' ||
         s.find_first_of(" \t\"\\") != std::string_view::npos;
}

}  // namespace

BuildPlan compile_build_plan(const ChallengeManifest& manifest, const fs::path& dir,
                             std::string_view base_ref) {
  BuildPlan plan;
  plan.challenge_id = manifest.id;
  plan.base_ref = std::string(base_ref);
  plan.context_dir = dir;

  std::vector<std::string> artifacts;
  for (const auto& raw : manifest.artifacts) {
    std::string artifact = normalize_relative_path(raw);
    if (!resolves_inside(dir, dir / artifact)) {
      throw Error(Errc::PathEscape, "artifact '" + raw + "' resolves outside " + dir.string());
    }
    artifacts.push_back(std::move(artifact));
  }

  std::error_code ec;
  const bool has_src = fs::is_directory(dir / "src", ec) && resolves_inside(dir, dir / "src");
  const bool has_dist = fs::is_directory(dir / "dist", ec) && resolves_inside(dir, dir / "dist");
  const bool has_upstream = has_src && fs::is_regular_file(dir / "src" / "Dockerfile", ec);

  if (artifacts.empty() && manifest.endpoints.empty() && !has_src && !has_dist) {
    throw Error(Errc::NoContent,
                "challenge '" + manifest.id + "' has no src/, no dist/, no artifacts and no endpoints");
  }

  if (has_upstream) plan.upstream_recipe = "src/Dockerfile";

  for (const auto& artifact : artifacts) {
    plan.stages.emplace_back(CopyIn{artifact, container_path_for(artifact)});
  }
  if (artifacts.empty() && has_dist) {
    plan.stages.emplace_back(CopyIn{"dist", std::string(kChallengeRoot) + "/"});
  }
  if (has_src && !has_upstream) {
    plan.stages.emplace_back(CopyIn{"src", std::string(kChallengeRoot) + "/src/"});
  }

  const auto first_tcp = std::find_if(manifest.endpoints.begin(), manifest.endpoints.end(),
                                      [](const EndpointSpec& e) { return e.kind == EndpointKind::Tcp; });
  if (first_tcp != manifest.endpoints.end()) {
    const std::string target = artifacts.empty() ? std::string(kChallengeRoot) + "/run"
                                                 : container_path_for(artifacts.front());
    plan.stages.emplace_back(Entrypoint{serve_command(first_tcp->port, target)});
  }

  plan.exposed_ports = manifest.endpoints;
  std::stable_sort(plan.exposed_ports.begin(), plan.exposed_ports.end(),
                   [](const EndpointSpec& a, const EndpointSpec& b) { return a.port < b.port; });
  return plan;
}

void check_plan(const BuildPlan& plan) {
  if (!is_valid_slug(plan.challenge_id)) {
    throw Error(Errc::InvalidArgument, "plan challenge id is not a slug");
  }
  if (plan.base_ref.empty() || plan.base_ref.find_first_of(" \t\r\n") != std::string::npos) {
    throw Error(Errc::InvalidArgument, "base image reference must be non-empty without whitespace");
  }
  for (std::size_t i = 0; i < plan.stages.size(); ++i) {
    const auto& step = plan.stages[i];
    if (const auto* copy = std::get_if<CopyIn>(&step)) {
      if (normalize_relative_path(copy->src) != copy->src) {
        throw Error(Errc::PathEscape, "copy source '" + copy->src + "' is not a normalized relative path");
      }
      if (copy->dst.empty() || copy->dst.front() != '/' ||
          copy->dst.find_first_of("\r\n") != std::string::npos) {
        throw Error(Errc::InvalidArgument, "copy destination '" + copy->dst + "' is not absolute");
      }
      continue;
    }
    const std::string& command = std::holds_alternative<Run>(step) ? std::get<Run>(step).command
                                                                  : std::get<Entrypoint>(step).command;
    if (command.empty() || command.find_first_of("\r\n") != std::string::npos) {
      throw Error(Errc::InvalidArgument, "step command must be a non-empty single line");
    }
    if (std::holds_alternative<Entrypoint>(step) && i + 1 != plan.stages.size()) {
      throw Error(Errc::InvalidArgument, "entrypoint must be the final step");
    }
  }
}

std::string render_build_recipe(const BuildPlan& plan) {
  check_plan(plan);
  std::ostringstream out;
  out << "FROM " << plan.base_ref << " AS base\n";
  out << "FROM base AS challenge-" << plan.challenge_id << '\n';
  if (plan.upstream_recipe) {
    out << "COPY --from=" << kUpstreamStage << " / /\n";
  }
  for (const auto& step : plan.stages) {
    if (const auto* copy = std::get_if<CopyIn>(&step)) {
      if (needs_json_form(copy->src) || needs_json_form(copy->dst)) {
        out << "COPY " << nlohmann::json::array({copy->src, copy->dst}).dump() << '\n';
      } else {
        out << "COPY " << copy->src << ' ' << copy->dst << '\n';
      }
    } else if (const auto* run = std::get_if<Run>(&step)) {
      out << "RUN " << run->command << '\n';
    } else {
      out << "ENTRYPOINT " << std::get<Entrypoint>(step).command << '\n';
    }
  }
  return out.str();
}

std::string image_tag(const BuildPlan& plan) {
  return "ctf-vault/" + plan.challenge_id + ":" + sha256_hex(render_build_recipe(plan)).substr(0, 12);
}

}  // namespace ctfvault::sandbox
