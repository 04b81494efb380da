#include "ikon/archive_search.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ikon/error.hpp"
#include "ikon/hash.hpp"
#include "ikon/text.hpp"

namespace fs = std::filesystem;

namespace ikon::search {

const std::vector<Posting>* InvertedIndex::find(const std::string& token) const {
  const auto it = postings_.find(token);
  return it == postings_.end() ? nullptr : &it->second;
}

InvertedIndex build_index(const corpus::CorpusManifest& manifest,
                          const std::function<std::string(const std::string&)>& body_of) {
  InvertedIndex idx;
  std::vector<std::string> ids;
  for (const auto& e : manifest.entries) ids.push_back(e.doc_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (const auto& id : ids) {
    std::string body = body_of(id);
    std::map<std::string, std::size_t> tf;
    const auto toks = text::normalized_tokens(body);
    for (const auto& t : toks) ++tf[t];
    idx.doc_totals_[id] = toks.size();
    // ids are visited in sorted order, so appending keeps posting lists sorted.
    for (const auto& [tok, n] : tf) idx.postings_[tok].push_back({id, n});
    idx.bodies_[id] = std::move(body);
  }
  return idx;
}

std::string format_index(const InvertedIndex& index) {
  std::string out;
  for (const auto& [tok, list] : index.postings())
    for (const auto& p : list) out += tok + '\t' + p.doc_id + '\t' + std::to_string(p.tf) + '\n';
  return out;
}

InvertedIndex read_index(const fs::path& index_tsv) {
  InvertedIndex idx;
  std::istringstream in(read_file(index_tsv));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 3) throw Error(ErrorCode::MalformedLine, index_tsv.string(), "index row needs 3 columns", line_no);
    const std::size_t tf = std::stoul(f[2]);
    idx.postings_[f[0]].push_back({f[1], tf});
    idx.doc_totals_[f[1]] += tf;
  }
  return idx;
}

std::string_view to_string(HitKind kind) {
  switch (kind) {
    case HitKind::Document: return "document";
    case HitKind::Term: return "term";
    case HitKind::Concept: return "concept";
  }
  return "document";
}

std::string make_snippet(std::string_view body, const std::string& query) {
  const auto toks = text::normalized_tokens(query);
  const std::string lower = text::to_lower(body);
  std::size_t at = std::string::npos;
  for (const auto& q : toks) at = std::min(at, lower.find(q));
  if (at == std::string::npos) at = 0;
  std::size_t from = at > 40 ? at - 40 : 0;
  std::size_t to = std::min(body.size(), at + 80);
  // Keep the window on UTF-8 boundaries.
  while (from > 0 && (static_cast<unsigned char>(body[from]) & 0xC0) == 0x80) --from;
  while (to < body.size() && (static_cast<unsigned char>(body[to]) & 0xC0) == 0x80) ++to;
  const std::string s = text::tsv_field(body.substr(from, to - from));
  return std::string(text::trim(s));
}

std::vector<SearchHit> search(const InvertedIndex& index, const std::string& query, std::size_t k) {
  const auto toks = text::normalized_tokens(query);
  const std::set<std::string> terms(toks.begin(), toks.end());
  const double n = static_cast<double>(index.doc_count());
  std::map<std::string, double> score;
  for (const auto& t : terms) {
    const auto* list = index.find(t);
    if (!list || list->empty()) continue;
    const double idf = std::log(1.0 + n / static_cast<double>(list->size()));
    for (const auto& p : *list) score[p.doc_id] += static_cast<double>(p.tf) * idf;
  }
  std::vector<SearchHit> hits;
  for (const auto& [doc, s] : score)
    if (s > 0.0) hits.push_back({HitKind::Document, doc, s, std::nullopt});
  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.target_id < b.target_id;
  });
  if (hits.size() > k) hits.resize(k);
  for (auto& h : hits)
    if (const auto it = index.bodies().find(h.target_id); it != index.bodies().end())
      h.snippet = make_snippet(it->second, query);
  return hits;
}

std::vector<SearchHit> search_labels(const std::vector<extract::TermCandidate>& terms, const onto::OntologyGraph* graph,
                                     const std::string& query, std::size_t k) {
  const std::string q = text::normalize_label(query);
  std::vector<SearchHit> hits;
  if (q.empty()) return hits;
  auto match = [&](const std::string& label) -> double {
    const std::string norm = text::normalize_label(label);
    if (norm == q) return 2.0;
    if (norm.rfind(q, 0) == 0) return 1.0;
    return 0.0;
  };
  for (const auto& t : terms)
    if (const double s = match(t.surface); s > 0) hits.push_back({HitKind::Term, t.term_id, s, t.surface});
  if (graph) {
    for (const auto& [id, c] : graph->concepts()) {
      double s = match(c.preferred_label);
      for (const auto& alt : c.alt_labels) s = std::max(s, match(alt));
      if (s > 0) hits.push_back({HitKind::Concept, id, s, c.preferred_label});
    }
  }
  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.target_id < b.target_id;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

std::vector<ArchiveRow> read_archive(const fs::path& archive_tsv) {
  std::vector<ArchiveRow> rows;
  if (!fs::exists(archive_tsv)) return rows;
  std::istringstream in(read_file(archive_tsv));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 4) throw Error(ErrorCode::MalformedLine, archive_tsv.string(), "archive row needs 4 columns", line_no);
    rows.push_back({f[0], f[1], f[2], f[3]});
  }
  return rows;
}

std::vector<ArchiveRow> archive_terms(const fs::path& archive_tsv, const std::vector<extract::TermCandidate>& terms,
                                      const onto::OntologyGraph* graph, const std::string& timestamp) {
  std::map<std::string, ArchiveRow> latest;
  for (auto& r : read_archive(archive_tsv)) latest[r.surface] = std::move(r);

  std::vector<const extract::TermCandidate*> ordered;
  for (const auto& t : terms) ordered.push_back(&t);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->surface < b->surface; });

  std::vector<ArchiveRow> appended;
  for (const auto* t : ordered) {
    const std::string surface = text::tsv_field(t->surface);
    std::string concept_id = "-";
    if (graph)
      if (const auto* c = graph->find_by_label(t->surface)) concept_id = c->id;
    ArchiveRow row{surface, std::string(extract::to_string(t->status)), concept_id, timestamp};
    const auto it = latest.find(surface);
    if (it != latest.end() && it->second.status == row.status && it->second.concept_id == row.concept_id) continue;
    latest[surface] = row;
    appended.push_back(std::move(row));
  }
  if (appended.empty()) return appended;
  if (archive_tsv.has_parent_path()) fs::create_directories(archive_tsv.parent_path());
  std::ofstream out(archive_tsv, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::UnreadableSource, archive_tsv.string(), "cannot append");
  for (const auto& r : appended)
    out << r.surface << '\t' << r.status << '\t' << r.concept_id << '\t' << r.timestamp << '\n';
  return appended;
}

}  // namespace ikon::search
