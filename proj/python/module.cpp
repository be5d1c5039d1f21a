#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ctfvault/error.hpp"
#include "ctfvault/flagcheck.hpp"
#include "ctfvault/manifest.hpp"
#include "ctfvault/registry.hpp"
#include "ctfvault/sandbox/build_plan.hpp"
#include "ctfvault/store.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace ctfvault;

namespace {

py::dict step_to_dict(const sandbox::BuildStep& step) {
  if (const auto* copy = std::get_if<sandbox::CopyIn>(&step)) {
    return py::dict("kind"_a = "copy", "src"_a = copy->src, "dst"_a = copy->dst);
  }
  if (const auto* run = std::get_if<sandbox::Run>(&step)) {
    return py::dict("kind"_a = "run", "command"_a = run->command);
  }
  return py::dict("kind"_a = "entrypoint", "command"_a = std::get<sandbox::Entrypoint>(step).command);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Core operations of the ctf-vault challenge archive";

  static py::exception<Error> error_type(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::tuple args = py::make_tuple(std::string(to_string(e.code())), e.what());
      PyErr_SetObject(error_type.ptr(), args.ptr());
    }
  });

  py::enum_<Category>(m, "Category")
      .value("Cryptography", Category::Cryptography)
      .value("BinaryExploitation", Category::BinaryExploitation)
      .value("ReverseEngineering", Category::ReverseEngineering)
      .value("WebExploitation", Category::WebExploitation)
      .value("Forensics", Category::Forensics)
      .value("OSINT", Category::OSINT)
      .value("Blockchain", Category::Blockchain)
      .value("RadioFrequency", Category::RadioFrequency)
      .value("SocialEngineering", Category::SocialEngineering)
      .value("Steganography", Category::Steganography)
      .value("Misc", Category::Misc);
  m.def("category_from_string", &category_from_string, "text"_a);
  m.def("canonical_name", [](Category c) { return std::string(canonical_name(c)); });

  py::enum_<EndpointKind>(m, "EndpointKind")
      .value("Tcp", EndpointKind::Tcp)
      .value("Http", EndpointKind::Http)
      .value("Ssh", EndpointKind::Ssh);

  py::class_<EndpointSpec>(m, "EndpointSpec")
      .def_readonly("kind", &EndpointSpec::kind)
      .def_readonly("port", &EndpointSpec::port)
      .def("__repr__", [](const EndpointSpec& e) { return "EndpointSpec(" + format_endpoint(e) + ")"; });

  py::class_<ChallengeManifest>(m, "ChallengeManifest")
      .def_readonly("id", &ChallengeManifest::id)
      .def_readonly("event", &ChallengeManifest::event)
      .def_readonly("year", &ChallengeManifest::year)
      .def_readonly("category", &ChallengeManifest::category)
      .def_readonly("points", &ChallengeManifest::points)
      .def_readonly("title", &ChallengeManifest::title)
      .def_readonly("description", &ChallengeManifest::description)
      .def_readonly("artifacts", &ChallengeManifest::artifacts)
      .def_readonly("endpoints", &ChallengeManifest::endpoints)
      .def_readonly("rehost_doc", &ChallengeManifest::rehost_doc)
      .def_property_readonly("flag_is_hashed",
                             [](const ChallengeManifest& mf) {
                               return std::holds_alternative<HashedFlag>(mf.flag_spec);
                             })
      .def(py::self == py::self);

  m.def("parse_manifest", &parse_manifest, "text"_a);
  m.def("serialize_manifest", &serialize_manifest, "manifest"_a);

  py::class_<flagcheck::CheckRecord>(m, "CheckRecord")
      .def_readonly("algorithm", &flagcheck::CheckRecord::algorithm)
      .def_readonly("challenge_id", &flagcheck::CheckRecord::challenge_id)
      .def_readonly("digest", &flagcheck::CheckRecord::digest)
      .def_readonly("platform_flag", &flagcheck::CheckRecord::platform_flag)
      .def(py::self == py::self);

  py::class_<flagcheck::Verdict>(m, "Verdict")
      .def_property_readonly("accepted", &flagcheck::Verdict::accepted)
      .def_property_readonly("platform_flag", [](const flagcheck::Verdict& v) -> std::optional<std::string> {
        if (!v.accepted()) return std::nullopt;
        return v.platform_flag();
      });

  m.def("normalize_flag", &flagcheck::normalize_flag, "raw"_a);
  m.def("digest_flag", &flagcheck::digest_flag, "normalized"_a);
  m.def("generate_check", &flagcheck::generate_check, "actual_flag"_a, "platform_flag"_a, "challenge_id"_a);
  m.def("verify", &flagcheck::verify, "record"_a, "submission"_a);
  m.def("verify_plaintext", &flagcheck::verify_plaintext, "expected"_a, "submission"_a);
  m.def("serialize_check_record", &flagcheck::serialize, "record"_a);
  m.def("parse_check_record", &flagcheck::parse_check_record, "text"_a);

  py::class_<SolveRecord>(m, "SolveRecord")
      .def(py::init([](std::string user, std::string challenge, std::int64_t ts) {
             return SolveRecord{std::move(user), std::move(challenge), ts};
           }),
           "user_id"_a, "challenge_id"_a, "timestamp"_a)
      .def_readonly("user_id", &SolveRecord::user_id)
      .def_readonly("challenge_id", &SolveRecord::challenge_id)
      .def_readonly("timestamp", &SolveRecord::timestamp);

  py::class_<SolveLog>(m, "SolveLog")
      .def(py::init<std::filesystem::path>(), "path"_a)
      .def("append",
           [](SolveLog& log, const SolveRecord& r) {
             return log.append(r) == AppendResult::Appended ? "appended" : "duplicate";
           })
      .def("has_solved", &SolveLog::has_solved, "user"_a, "challenge"_a)
      .def("records", &SolveLog::records)
      .def_property_readonly("warnings", &SolveLog::load_warnings)
      .def("__len__", &SolveLog::size);

  py::class_<Finding>(m, "Finding")
      .def_property_readonly("severity", [](const Finding& f) { return std::string(to_string(f.severity)); })
      .def_readonly("code", &Finding::code)
      .def_readonly("message", &Finding::message)
      .def_readonly("path", &Finding::path);

  py::class_<Registry>(m, "Registry")
      .def("__len__", &Registry::size)
      .def("ids",
           [](const Registry& r) {
             std::vector<std::string> ids;
             for (const auto& [id, entry] : r.entries()) ids.push_back(id);
             return ids;
           })
      .def("get",
           [](const Registry& r, const std::string& id) -> std::optional<ChallengeManifest> {
             if (const auto* e = r.find(id)) return e->manifest;
             return std::nullopt;
           })
      .def("directory",
           [](const Registry& r, const std::string& id) -> std::optional<std::filesystem::path> {
             if (const auto* e = r.find(id)) return e->directory;
             return std::nullopt;
           })
      .def("events", [](const Registry& r) { return r.event_index(); })
      .def("dump", [](const Registry& r) { return dump(r); });

  m.def("ingest_archive", [](const std::filesystem::path& root) {
    auto result = ingest_archive(root);
    return py::make_tuple(std::move(result.registry), std::move(result.findings));
  });
  m.def("validate_challenge", [](const ChallengeManifest& mf, const std::filesystem::path& dir) {
    return validate_challenge(mf, dir).findings;
  });
  m.def(
      "query",
      [](const Registry& r, std::optional<std::string> event, std::optional<int> year,
         std::optional<Category> category) {
        return query(r, QueryFilter{std::move(event), year, category});
      },
      "registry"_a, "event"_a = py::none(), "year"_a = py::none(), "category"_a = py::none());
  m.def("category_stats", [](const Registry& r, const std::vector<SolveRecord>& solves) {
    const auto stats = category_stats(r, solves);
    py::list rows;
    for (const auto& row : stats.rows) {
      rows.append(py::dict("label"_a = row.label, "available"_a = row.available, "solves"_a = row.solves));
    }
    return rows;
  });

  m.def(
      "compile_build_plan",
      [](const ChallengeManifest& mf, const std::filesystem::path& dir, const std::string& base_ref) {
        const auto plan = sandbox::compile_build_plan(mf, dir, base_ref);
        py::list steps;
        for (const auto& s : plan.stages) steps.append(step_to_dict(s));
        py::list ports;
        for (const auto& p : plan.exposed_ports) ports.append(format_endpoint(p));
        return py::dict("challenge_id"_a = plan.challenge_id, "base_ref"_a = plan.base_ref,
                        "upstream_recipe"_a = plan.upstream_recipe, "steps"_a = steps,
                        "exposed_ports"_a = ports, "workspace_mount"_a = plan.workspace_mount,
                        "recipe"_a = sandbox::render_build_recipe(plan));
      },
      "manifest"_a, "dir"_a, "base_ref"_a = std::string(sandbox::kDefaultBaseRef));
}
