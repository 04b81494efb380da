#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ikon/corpus.hpp"
#include "ikon/extraction.hpp"
#include "ikon/ontology.hpp"

namespace ikon::search {

struct Posting {
  std::string doc_id;
  std::size_t tf = 0;
  friend bool operator==(const Posting&, const Posting&) = default;
};

/// Immutable once built. Tokens are the lowercased word tokens of
/// text::normalized_tokens; posting lists are sorted by doc_id.
class InvertedIndex {
 public:
  InvertedIndex() = default;

  const std::map<std::string, std::vector<Posting>>& postings() const noexcept { return postings_; }
  std::size_t doc_count() const noexcept { return doc_totals_.size(); }
  const std::map<std::string, std::size_t>& doc_totals() const noexcept { return doc_totals_; }
  const std::vector<Posting>* find(const std::string& token) const;

  /// Document bodies for snippets; empty after read_index.
  const std::map<std::string, std::string>& bodies() const noexcept { return bodies_; }

 private:
  friend InvertedIndex build_index(const corpus::CorpusManifest&, const std::function<std::string(const std::string&)>&);
  friend InvertedIndex read_index(const std::filesystem::path&);

  std::map<std::string, std::vector<Posting>> postings_;
  std::map<std::string, std::size_t> doc_totals_;
  std::map<std::string, std::string> bodies_;
};

/// `body_of(doc_id)` supplies document text and throws MissingDocument when absent.
InvertedIndex build_index(const corpus::CorpusManifest& manifest,
                          const std::function<std::string(const std::string&)>& body_of);

/// index.tsv: token, doc_id, tf; sorted by token then doc_id.
std::string format_index(const InvertedIndex& index);
/// Rebuilds postings and per-document totals from index.tsv.
InvertedIndex read_index(const std::filesystem::path& index_tsv);

enum class HitKind { Document, Term, Concept };
std::string_view to_string(HitKind kind);

struct SearchHit {
  HitKind kind = HitKind::Document;
  std::string target_id;
  double score = 0.0;
  std::optional<std::string> snippet;
};

/// score(d) = sum over distinct query tokens t of tf(t, d) * ln(1 + N / df(t)).
/// Zero-score documents are excluded; ties go to the smaller doc_id.
std::vector<SearchHit> search(const InvertedIndex& index, const std::string& query, std::size_t k);

/// About 120 bytes of `body` around the first query token, on one line.
std::string make_snippet(std::string_view body, const std::string& query);

/// Exact (score 2) and prefix (score 1) matches of the normalized query
/// against term surfaces and concept labels.
std::vector<SearchHit> search_labels(const std::vector<extract::TermCandidate>& terms, const onto::OntologyGraph* graph,
                                     const std::string& query, std::size_t k);

struct ArchiveRow {
  std::string surface;
  std::string status;
  std::string concept_id;  // "-" when unlinked
  std::string timestamp;
  friend bool operator==(const ArchiveRow&, const ArchiveRow&) = default;
};

std::vector<ArchiveRow> read_archive(const std::filesystem::path& archive_tsv);

/// Appends one row per term whose (status, concept link) differs from its
/// latest archived row. Existing bytes are never rewritten. Returns the
/// appended rows.
std::vector<ArchiveRow> archive_terms(const std::filesystem::path& archive_tsv,
                                      const std::vector<extract::TermCandidate>& terms,
                                      const onto::OntologyGraph* graph, const std::string& timestamp);

}  // namespace ikon::search
