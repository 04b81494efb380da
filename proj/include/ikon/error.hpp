#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ikon {

enum class ErrorCode {
  // lexicon
  MalformedLine,
  DuplicateId,
  UnresolvedClass,
  UnknownLexeme,
  // corpus / search
  UnreadableSource,
  EmptyDocument,
  MissingDocument,
  // ontology
  LabelCollision,
  UnknownConcept,
  InvalidRelation,
  MalformedTriple,
  UnsupportedConstruct,
  VersionConflict,
  // pipeline
  DuplicateProject,
  UnknownProject,
  InvalidConfig,
  PrerequisiteNotMet,
  AlreadyDone,
  StageFailure,
  InvalidEdge,
  StaleVersion,
  NotFound,
};

std::string_view to_string(ErrorCode code);

/// Every failure the library reports carries one of the codes above plus a
/// subject (offending id, field name, uri) and, where it applies, a line number.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string subject, std::string detail = {}, std::size_t line = 0);

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::string subject_;
  std::size_t line_;
};

}  // namespace ikon
