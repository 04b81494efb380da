#pragma once

// Projects on disk and the module work bound to each stage.
//
// <root>/projects/<id>/
//   events.ndjson, project.json
//   config/            frozen copies of lexicon, rules, seeds, seed ontology
//   corpus/            S1: <doc_id>.txt, manifest.tsv
//   parse/             S2: <doc_id>.psg
//   terms.tsv, senses.tsv, reparse_queue.tsv                         S3
//   network.tsv, ontology/promoted.nt, ontology/current.nt           S4
//   index.tsv, archive.tsv                                           S5
// <root>/library/      shared ontology library (S5 publishes here)

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ikon/archive_search.hpp"
#include "ikon/extraction.hpp"
#include "ikon/ontology.hpp"
#include "ikon/pipeline.hpp"

namespace ikon::pipeline {

/// Letters, digits, '-', '_' and '.', not starting with '.'.
bool valid_project_id(std::string_view id);

/// Runs the module operations bound to `stage` for the project in `dir` and
/// returns the artifacts written, hashed.
std::map<std::string, std::string> run_stage_work(const std::filesystem::path& dir, const ProjectState& state,
                                                  Stage stage, onto::OntologyLibrary& library, const Clock& clock);

/// Paths of `state` artifacts whose current hash differs from the recorded one,
/// for stages that are done.
std::vector<std::string> verify_artifacts(const std::filesystem::path& dir, const ProjectState& state);

/// terms.tsv with curation decisions applied; undecided terms stay candidates.
std::vector<extract::TermCandidate> curated_terms(const std::filesystem::path& dir, const ProjectState& state);
/// As curated_terms, plus auto-acceptance of undecided terms whose frequency
/// reaches config.accept_min_frequency. This is what S4 and S5 consume.
std::vector<extract::TermCandidate> effective_terms(const std::filesystem::path& dir, const ProjectState& state);

struct ConceptPatch {
  std::optional<std::string> preferred_label;
  std::optional<std::set<std::string>> alt_labels;
  std::optional<std::optional<std::string>> definition;  // engaged nullopt clears it
  std::vector<onto::ConceptRelation> add_relations;      // source filled with the patched concept
  std::vector<onto::ConceptRelation> remove_relations;
};

struct ProjectSearch {
  std::vector<search::SearchHit> documents;
  std::vector<search::SearchHit> labels;
};

class Workspace {
 public:
  explicit Workspace(std::filesystem::path root, Clock clock = {});

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path project_dir(const std::string& id) const;
  onto::OntologyLibrary& library() noexcept { return library_; }

  /// Validates the config (paths, threshold, lexicon and rule files parse),
  /// freezes copies into the project and logs project_created.
  std::shared_ptr<Project> create_project(const std::string& id, const std::string& domain, ProjectConfig config);
  /// Cached per workspace. The first open in a process converts a stage left
  /// running by a dead process into needs_repeat. Throws UnknownProject.
  std::shared_ptr<Project> open_project(const std::string& id);
  std::vector<std::string> project_ids() const;

  ProjectState run_stage(const std::string& id, Stage stage, std::optional<std::uint64_t> expected = {});
  ProjectState rollback(const std::string& id, Stage from, Stage to, const std::string& reason,
                        std::optional<std::uint64_t> expected = {});
  /// Throws NotFound when the term is not in terms.tsv.
  ProjectState decide_term(const std::string& id, const std::string& term_id, const std::string& status,
                           std::optional<std::uint64_t> expected = {});

  std::vector<extract::TermCandidate> terms(const std::string& id);

  /// Working copy of the ontology; requires S4 to have run.
  onto::OntologyGraph ontology(const std::string& id);
  std::pair<ProjectState, onto::Concept> add_concept(const std::string& id, onto::Concept c,
                                                     std::optional<std::uint64_t> expected = {});
  ProjectState patch_concept(const std::string& id, const std::string& concept_id, const ConceptPatch& patch,
                             std::optional<std::uint64_t> expected = {});
  /// `library_ref` is "domain" (latest) or "domain@version".
  std::pair<ProjectState, onto::MergeResult> merge_library(const std::string& id, const std::string& library_ref,
                                                           std::optional<std::uint64_t> expected = {});
  /// Requires S4 done (not stale).
  void export_owl(const std::string& id, const std::filesystem::path& out);

  ProjectSearch search(const std::string& id, const std::string& query, std::size_t k);

 private:
  std::filesystem::path root_;
  Clock clock_;
  onto::OntologyLibrary library_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Project>> open_;
};

}  // namespace ikon::pipeline
