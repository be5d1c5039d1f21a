"""Python bindings for the ctf-vault challenge archive core."""

from ._core import (
    Category,
    CheckRecord,
    ChallengeManifest,
    EndpointKind,
    EndpointSpec,
    Error,
    Finding,
    Registry,
    SolveLog,
    SolveRecord,
    Verdict,
    canonical_name,
    category_from_string,
    category_stats,
    compile_build_plan,
    digest_flag,
    generate_check,
    ingest_archive,
    normalize_flag,
    parse_check_record,
    parse_manifest,
    query,
    serialize_check_record,
    serialize_manifest,
    validate_challenge,
    verify,
    verify_plaintext,
)

__all__ = [name for name in dir() if not name.startswith("_")]
