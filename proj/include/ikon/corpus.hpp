#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ikon::corpus {

struct Document {
  std::string doc_id;  // "d" + first 16 hex digits of the body's SHA-256
  std::string uri;
  std::string title;
  std::string body;
  std::string ingested_at;
  std::optional<double> relevance;
};

struct ManifestEntry {
  std::string doc_id;
  std::string uri;
  std::string sha256;
  double relevance = 0.0;
  std::string title;
};

struct CorpusManifest {
  std::string project_id;
  std::vector<ManifestEntry> entries;
};

/// Returns raw text for a uri; throws ikon::Error(UnreadableSource) on failure.
using Fetcher = std::function<std::string(const std::string& uri)>;

/// Fetches http:// URLs with a plain GET and strips markup from text/html bodies.
std::string http_fetch(const std::string& uri);

/// Tag removal plus whitespace collapse. Script and style element contents are dropped.
std::string strip_html(std::string_view html);

/// Every regular file under `dir` (recursively, sorted by path) becomes a
/// Document. Byte-identical bodies are ingested once, keeping the first path.
std::vector<Document> ingest_directory(const std::filesystem::path& dir);

std::vector<Document> ingest_urls(const std::vector<std::string>& urls, const Fetcher& fetch = http_fetch);

std::string document_id_for(std::string_view body);

/// Fraction of distinct seed terms that occur in the body as whole tokens,
/// case-insensitively. A multi-word seed must occur as a contiguous token run.
/// Throws std::invalid_argument on an empty seed set.
double score_relevance(const Document& doc, const std::set<std::string>& seed_terms);

/// Documents scoring >= threshold, ordered by score descending then doc_id.
CorpusManifest select_corpus(const std::vector<Document>& docs, const std::set<std::string>& seed_terms,
                             double threshold, std::string project_id = {});

/// Writes `<dir>/<doc_id>.txt` for every manifest entry and `<dir>/manifest.tsv`.
void write_corpus(const std::filesystem::path& dir, const CorpusManifest& manifest,
                  const std::vector<Document>& docs);

std::string format_manifest(const CorpusManifest& manifest);
CorpusManifest read_manifest(const std::filesystem::path& manifest_tsv);

/// Reads the body of one stored document; throws MissingDocument.
std::string read_body(const std::filesystem::path& dir, const std::string& doc_id);

/// One seed term per non-empty, non-comment line.
std::set<std::string> read_seed_terms(const std::filesystem::path& path);

}  // namespace ikon::corpus
