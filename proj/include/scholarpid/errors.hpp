#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace scholarpid {

enum class Errc {
  // knowledge store
  empty_title,
  invalid_doi_syntax,
  invalid_orcid,
  unknown_record,
  invalid_path,
  empty_research_problem,
  malformed_statement,
  // metadata
  unfrozen_snapshot,
  missing_creators,
  validation_failed,
  malformed_xml,
  unknown_element,
  vocabulary_violation,
  bad_length,
  non_digit,
  // publishing
  no_authors,
  no_contributions,
  duplicate_content,
  registrar_unavailable,
  no_prior_version,
  unknown_snapshot,
  different_papers,
  immutable_snapshot,
  // registry
  invalid_prefix,
  identifier_mismatch,
  conflicting_registration,
  unknown_doi,
  // queries and service plumbing
  unsupported_field,
  bad_request,
  storage_fault,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::empty_title: return "EmptyTitle";
    case Errc::invalid_doi_syntax: return "InvalidDoiSyntax";
    case Errc::invalid_orcid: return "InvalidOrcid";
    case Errc::unknown_record: return "UnknownRecord";
    case Errc::invalid_path: return "InvalidPath";
    case Errc::empty_research_problem: return "EmptyResearchProblem";
    case Errc::malformed_statement: return "MalformedStatement";
    case Errc::unfrozen_snapshot: return "UnfrozenSnapshot";
    case Errc::missing_creators: return "MissingCreators";
    case Errc::validation_failed: return "ValidationFailed";
    case Errc::malformed_xml: return "MalformedXml";
    case Errc::unknown_element: return "UnknownElement";
    case Errc::vocabulary_violation: return "VocabularyViolation";
    case Errc::bad_length: return "BadLength";
    case Errc::non_digit: return "NonDigit";
    case Errc::no_authors: return "NoAuthors";
    case Errc::no_contributions: return "NoContributions";
    case Errc::duplicate_content: return "DuplicateContent";
    case Errc::registrar_unavailable: return "RegistrarUnavailable";
    case Errc::no_prior_version: return "NoPriorVersion";
    case Errc::unknown_snapshot: return "UnknownSnapshot";
    case Errc::different_papers: return "DifferentPapers";
    case Errc::immutable_snapshot: return "ImmutableSnapshot";
    case Errc::invalid_prefix: return "InvalidPrefix";
    case Errc::identifier_mismatch: return "IdentifierMismatch";
    case Errc::conflicting_registration: return "ConflictingRegistration";
    case Errc::unknown_doi: return "UnknownDoi";
    case Errc::unsupported_field: return "UnsupportedField";
    case Errc::bad_request: return "BadRequest";
    case Errc::storage_fault: return "StorageFault";
  }
  return "UnknownError";
}

// One failed validation rule. Violations are reported as values, not thrown,
// so callers can collect every problem in one pass.
struct Violation {
  std::string field;
  std::string rule;
  std::string detail;
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  Error(Errc code, const std::string& message, std::vector<Violation> violations)
      : std::runtime_error(message), code_(code),
        violations_(std::move(violations)) {}

  Errc code() const { return code_; }
  const char* code_name() const { return errc_name(code_); }
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  Errc code_;
  std::vector<Violation> violations_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace scholarpid
