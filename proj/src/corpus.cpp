#include "ikon/corpus.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "ikon/error.hpp"
#include "ikon/hash.hpp"
#include "ikon/text.hpp"

namespace fs = std::filesystem;

namespace ikon::corpus {

namespace {

std::string first_line_title(std::string_view body) {
  std::size_t start = 0;
  while (start < body.size()) {
    auto end = body.find('\n', start);
    if (end == std::string_view::npos) end = body.size();
    const auto line = text::trim(body.substr(start, end - start));
    if (!line.empty()) return text::tsv_field(line);
    start = end + 1;
  }
  return {};
}

Document make_document(std::string uri, std::string body) {
  if (text::trim(body).empty()) throw Error(ErrorCode::EmptyDocument, uri);
  if (!text::is_valid_utf8(body)) throw Error(ErrorCode::UnreadableSource, uri, "not valid UTF-8");
  Document doc;
  doc.doc_id = document_id_for(body);
  doc.uri = std::move(uri);
  doc.title = first_line_title(body);
  doc.body = std::move(body);
  doc.ingested_at = text::utc_timestamp();
  return doc;
}

std::vector<Document> dedup(std::vector<Document> docs) {
  std::unordered_set<std::string> seen;
  std::vector<Document> out;
  for (auto& d : docs)
    if (seen.insert(d.doc_id).second) out.push_back(std::move(d));
  return out;
}

bool ieq_prefix(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  return true;
}

}  // namespace

std::string document_id_for(std::string_view body) { return "d" + sha256_hex(body).substr(0, 16); }

std::string strip_html(std::string_view html) {
  std::string raw;
  raw.reserve(html.size());
  for (std::size_t i = 0; i < html.size();) {
    if (html[i] != '<') {
      raw += html[i++];
      continue;
    }
    const auto rest = html.substr(i + 1);
    for (std::string_view skip : {"script", "style"}) {
      if (ieq_prefix(rest, skip)) {
        const std::string close = "</" + std::string(skip);
        std::size_t j = i + 1;
        while (j < html.size() && !ieq_prefix(html.substr(j), close)) ++j;
        i = j;
        break;
      }
    }
    const auto gt = html.find('>', i);
    if (gt == std::string_view::npos) break;
    raw += ' ';
    i = gt + 1;
  }
  std::string out;
  bool space = false;
  for (char c : raw) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f') {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

std::string http_fetch(const std::string& uri) {
  static constexpr std::string_view kScheme = "http://";
  if (uri.rfind(kScheme, 0) != 0) throw Error(ErrorCode::UnreadableSource, uri, "only http:// is supported");
  const auto slash = uri.find('/', kScheme.size());
  const std::string authority = uri.substr(0, slash);
  const std::string path = slash == std::string::npos ? "/" : uri.substr(slash);
  httplib::Client client(authority);
  client.set_connection_timeout(10);
  client.set_read_timeout(30);
  auto res = client.Get(path);
  if (!res) throw Error(ErrorCode::UnreadableSource, uri, httplib::to_string(res.error()));
  if (res->status != 200) throw Error(ErrorCode::UnreadableSource, uri, "HTTP " + std::to_string(res->status));
  const auto type = res->get_header_value("Content-Type");
  if (type.find("html") != std::string::npos) return strip_html(res->body);
  return res->body;
}

std::vector<Document> ingest_directory(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::UnreadableSource, dir.string(), "not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir, ec))
    if (entry.is_regular_file()) files.push_back(entry.path());
  if (ec) throw Error(ErrorCode::UnreadableSource, dir.string(), ec.message());
  std::sort(files.begin(), files.end());
  std::vector<Document> docs;
  for (const auto& f : files) docs.push_back(make_document(f.string(), read_file(f)));
  return dedup(std::move(docs));
}

std::vector<Document> ingest_urls(const std::vector<std::string>& urls, const Fetcher& fetch) {
  std::vector<Document> docs;
  for (const auto& u : urls) docs.push_back(make_document(u, fetch(u)));
  return dedup(std::move(docs));
}

double score_relevance(const Document& doc, const std::set<std::string>& seed_terms) {
  if (seed_terms.empty()) throw std::invalid_argument("score_relevance: empty seed set");
  std::set<std::vector<std::string>> seeds;
  for (const auto& s : seed_terms) {
    auto toks = text::normalized_tokens(s);
    if (!toks.empty()) seeds.insert(std::move(toks));
  }
  if (seeds.empty()) throw std::invalid_argument("score_relevance: seeds contain no word tokens");
  const auto body = text::normalized_tokens(doc.body);
  std::size_t hits = 0;
  for (const auto& seed : seeds) {
    if (std::search(body.begin(), body.end(), seed.begin(), seed.end()) != body.end()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(seeds.size());
}

CorpusManifest select_corpus(const std::vector<Document>& docs, const std::set<std::string>& seed_terms,
                             double threshold, std::string project_id) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("select_corpus: threshold outside [0,1]");
  CorpusManifest m{std::move(project_id), {}};
  for (const auto& d : docs) {
    const double score = score_relevance(d, seed_terms);
    if (score >= threshold) m.entries.push_back({d.doc_id, d.uri, sha256_hex(d.body), score, d.title});
  }
  std::sort(m.entries.begin(), m.entries.end(), [](const ManifestEntry& a, const ManifestEntry& b) {
    if (a.relevance != b.relevance) return a.relevance > b.relevance;
    return a.doc_id < b.doc_id;
  });
  return m;
}

std::string format_manifest(const CorpusManifest& manifest) {
  std::string out;
  for (const auto& e : manifest.entries) {
    out += e.doc_id + '\t' + text::tsv_field(e.uri) + '\t' + e.sha256 + '\t' + text::format_fixed(e.relevance, 4) +
           '\t' + text::tsv_field(e.title) + '\n';
  }
  return out;
}

void write_corpus(const fs::path& dir, const CorpusManifest& manifest, const std::vector<Document>& docs) {
  fs::create_directories(dir);
  for (const auto& e : manifest.entries) {
    const auto it = std::find_if(docs.begin(), docs.end(), [&](const Document& d) { return d.doc_id == e.doc_id; });
    if (it == docs.end()) throw Error(ErrorCode::MissingDocument, e.doc_id);
    write_file_atomic(dir / (e.doc_id + ".txt"), it->body);
  }
  write_file_atomic(dir / "manifest.tsv", format_manifest(manifest));
}

CorpusManifest read_manifest(const fs::path& manifest_tsv) {
  std::istringstream in(read_file(manifest_tsv));
  CorpusManifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 5) throw Error(ErrorCode::MalformedLine, manifest_tsv.string(), "manifest row needs 5 columns", line_no);
    m.entries.push_back({f[0], f[1], f[2], std::stod(f[3]), f[4]});
  }
  return m;
}

std::string read_body(const fs::path& dir, const std::string& doc_id) {
  const auto path = dir / (doc_id + ".txt");
  if (!fs::exists(path)) throw Error(ErrorCode::MissingDocument, doc_id);
  return read_file(path);
}

std::set<std::string> read_seed_terms(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::set<std::string> seeds;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    seeds.emplace(t);
  }
  return seeds;
}

}  // namespace ikon::corpus
