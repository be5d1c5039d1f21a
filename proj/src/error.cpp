#include "ctfvault/error.hpp"

namespace ctfvault {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedDocument: return "MalformedDocument";
    case Errc::UnknownCategory: return "UnknownCategory";
    case Errc::BadSlug: return "BadSlug";
    case Errc::BadDigest: return "BadDigest";
    case Errc::MissingField: return "MissingField";
    case Errc::UnknownKey: return "UnknownKey";
    case Errc::PathEscape: return "PathEscape";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::IoFailure: return "IoFailure";
    case Errc::EmptyFlag: return "EmptyFlag";
    case Errc::NoContent: return "NoContent";
    case Errc::DriverFailure: return "DriverFailure";
    case Errc::QuotaExceeded: return "QuotaExceeded";
    case Errc::NotRunning: return "NotRunning";
    case Errc::NotFound: return "NotFound";
    case Errc::CorruptLog: return "CorruptLog";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace ctfvault
