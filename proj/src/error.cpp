#include "ikon/error.hpp"

namespace ikon {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnresolvedClass: return "UnresolvedClass";
    case ErrorCode::UnknownLexeme: return "UnknownLexeme";
    case ErrorCode::UnreadableSource: return "UnreadableSource";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::MissingDocument: return "MissingDocument";
    case ErrorCode::LabelCollision: return "LabelCollision";
    case ErrorCode::UnknownConcept: return "UnknownConcept";
    case ErrorCode::InvalidRelation: return "InvalidRelation";
    case ErrorCode::MalformedTriple: return "MalformedTriple";
    case ErrorCode::UnsupportedConstruct: return "UnsupportedConstruct";
    case ErrorCode::VersionConflict: return "VersionConflict";
    case ErrorCode::DuplicateProject: return "DuplicateProject";
    case ErrorCode::UnknownProject: return "UnknownProject";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::PrerequisiteNotMet: return "PrerequisiteNotMet";
    case ErrorCode::AlreadyDone: return "AlreadyDone";
    case ErrorCode::StageFailure: return "StageFailure";
    case ErrorCode::InvalidEdge: return "InvalidEdge";
    case ErrorCode::StaleVersion: return "StaleVersion";
    case ErrorCode::NotFound: return "NotFound";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& subject, const std::string& detail,
                    std::size_t line) {
  std::string msg(to_string(code));
  msg += '(';
  if (line != 0) {
    msg += "line " + std::to_string(line);
    if (!subject.empty()) msg += ", ";
  }
  msg += subject;
  msg += ')';
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

}  // namespace

Error::Error(ErrorCode code, std::string subject, std::string detail, std::size_t line)
    : std::runtime_error(compose(code, subject, detail, line)),
      code_(code),
      subject_(std::move(subject)),
      line_(line) {}

}  // namespace ikon
