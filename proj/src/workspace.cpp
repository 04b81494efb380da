#include "ikon/workspace.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "ikon/corpus.hpp"
#include "ikon/error.hpp"
#include "ikon/hash.hpp"
#include "ikon/lexicon.hpp"
#include "ikon/linganalysis.hpp"
#include "ikon/text.hpp"

namespace fs = std::filesystem;

namespace ikon::pipeline {

bool valid_project_id(std::string_view id) {
  if (id.empty() || id.front() == '.' || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](char ch) {
    return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '-' ||
           ch == '_' || ch == '.';
  });
}

namespace {

fs::path resolve(const fs::path& dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : dir / path;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first failure.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

onto::OntologyGraph load_graph(const fs::path& path) {
  std::istringstream in(read_file(path));
  return onto::import_owl(in);
}

lex::Lexicon load_lexicon_of(const fs::path& dir, const ProjectState& s) {
  return lex::load_lexicon_file(resolve(dir, s.config.lexicon).string());
}

std::vector<std::vector<ling::ParseGraph>> load_parses(const fs::path& dir, const corpus::CorpusManifest& manifest,
                                                       const lex::Lexicon& lexicon) {
  std::vector<std::vector<ling::ParseGraph>> docs;
  for (const auto& e : manifest.entries) {
    const fs::path p = dir / "parse" / (e.doc_id + ".psg");
    if (!fs::exists(p)) throw Error(ErrorCode::MissingDocument, e.doc_id, "no parse for document");
    std::istringstream in(read_file(p));
    docs.push_back(ling::read_parse_graphs(in, e.doc_id, lexicon));
  }
  return docs;
}

std::map<std::string, std::string> hashed(const fs::path& dir, const std::vector<std::string>& rels) {
  std::map<std::string, std::string> out;
  for (const auto& r : rels) out[r] = sha256_file(dir / r);
  return out;
}

std::vector<std::string> stage_s1(const fs::path& dir, const ProjectState& s) {
  const auto docs = corpus::ingest_directory(resolve(dir, s.config.sources));
  const auto seeds = corpus::read_seed_terms(resolve(dir, s.config.seeds));
  const auto manifest = corpus::select_corpus(docs, seeds, s.config.threshold, s.project_id);
  if (manifest.entries.empty())
    throw Error(ErrorCode::StageFailure, "S1", "no document reaches the relevance threshold");
  fs::remove_all(dir / "corpus");
  corpus::write_corpus(dir / "corpus", manifest, docs);
  std::vector<std::string> out{"corpus/manifest.tsv"};
  for (const auto& e : manifest.entries) out.push_back("corpus/" + e.doc_id + ".txt");
  return out;
}

std::vector<std::string> stage_s2(const fs::path& dir, const ProjectState& s) {
  const auto lexicon = load_lexicon_of(dir, s);
  const auto rules = ling::load_rules_file(resolve(dir, s.config.rules).string());
  ling::validate_rules(rules, lexicon);
  const auto manifest = corpus::read_manifest(dir / "corpus" / "manifest.tsv");
  fs::remove_all(dir / "parse");
  fs::create_directories(dir / "parse");
  parallel_for(manifest.entries.size(), s.config.threads, [&](std::size_t i) {
    const auto& id = manifest.entries[i].doc_id;
    const auto graphs = ling::analyze_document(lexicon, rules, id, corpus::read_body(dir / "corpus", id));
    write_file_atomic(dir / "parse" / (id + ".psg"), ling::format_parse_graphs(graphs));
  });
  std::vector<std::string> out;
  for (const auto& e : manifest.entries) out.push_back("parse/" + e.doc_id + ".psg");
  return out;
}

std::vector<std::string> stage_s3(const fs::path& dir, const ProjectState& s) {
  const auto lexicon = load_lexicon_of(dir, s);
  const auto manifest = corpus::read_manifest(dir / "corpus" / "manifest.tsv");
  const auto docs = load_parses(dir, manifest, lexicon);
  const auto patterns = extract::default_patterns();
  const auto terms = extract::extract_terms(docs, lexicon, patterns, s.config.threads);
  write_file_atomic(dir / "terms.tsv", extract::format_terms(terms));

  const onto::OntologyGraph seed =
      s.config.seed_ontology.empty() ? onto::OntologyGraph{} : load_graph(resolve(dir, s.config.seed_ontology));
  std::string senses, queue;
  std::set<std::pair<std::string, std::size_t>> queued;
  for (const auto& doc : docs)
    for (const auto& g : doc)
      for (const auto& occ : extract::find_occurrences(g, lexicon, patterns)) {
        const auto sense = extract::disambiguate_sense(occ, g, lexicon, &seed);
        senses += occ.doc_id + '\t' + std::to_string(occ.sentence_index) + '\t' + std::to_string(occ.start) + '\t' +
                  std::to_string(occ.length) + '\t' + extract::term_id_for(occ.lemma_sequence) + '\t' +
                  (sense ? sense->concept_id : "NONE") + '\n';
        if (sense) continue;
        // A label match without a winning sense is the case a rule or lexicon
        // edit followed by re-parsing could fix.
        if (!seed.find_by_any_label(extract::term_surface(occ.lemma_sequence, lexicon)).empty() &&
            queued.emplace(g.doc_id, g.sentence_index).second)
          queue += g.doc_id + '\t' + std::to_string(g.sentence_index) + '\n';
      }
  write_file_atomic(dir / "senses.tsv", senses);
  write_file_atomic(dir / "reparse_queue.tsv", queue);
  return {"terms.tsv", "senses.tsv", "reparse_queue.tsv"};
}

std::vector<std::string> stage_s4(const fs::path& dir, const ProjectState& s) {
  const auto lexicon = load_lexicon_of(dir, s);
  const auto manifest = corpus::read_manifest(dir / "corpus" / "manifest.tsv");
  const auto docs = load_parses(dir, manifest, lexicon);
  const auto terms = effective_terms(dir, s);
  const auto network = extract::build_network(docs, lexicon, terms, extract::default_patterns());
  write_file_atomic(dir / "network.tsv", extract::format_network(network));
  std::vector<onto::PromotionNode> nodes;
  std::vector<onto::PromotionEdge> edges;
  extract::to_promotion_input(network, nodes, edges);
  const auto graph = onto::promote(nodes, edges, s.domain);
  const std::string owl = onto::export_owl(graph);
  write_file_atomic(dir / "ontology" / "promoted.nt", owl);
  write_file_atomic(dir / "ontology" / "current.nt", owl);
  return {"network.tsv", "ontology/promoted.nt"};
}

std::vector<std::string> stage_s5(const fs::path& dir, const ProjectState& s, onto::OntologyLibrary& library,
                                  const Clock& clock) {
  const auto manifest = corpus::read_manifest(dir / "corpus" / "manifest.tsv");
  const auto index =
      search::build_index(manifest, [&](const std::string& id) { return corpus::read_body(dir / "corpus", id); });
  write_file_atomic(dir / "index.tsv", search::format_index(index));
  auto graph = load_graph(dir / "ontology" / "current.nt");
  const std::string now = clock();
  search::archive_terms(dir / "archive.tsv", effective_terms(dir, s), &graph, now);
  graph.set_domain_name(s.domain);
  library.publish(graph, now);
  return {"index.tsv", "archive.tsv"};
}

}  // namespace

std::map<std::string, std::string> run_stage_work(const fs::path& dir, const ProjectState& state, Stage stage,
                                                  onto::OntologyLibrary& library, const Clock& clock) {
  switch (stage) {
    case Stage::S1: return hashed(dir, stage_s1(dir, state));
    case Stage::S2: return hashed(dir, stage_s2(dir, state));
    case Stage::S3: return hashed(dir, stage_s3(dir, state));
    case Stage::S4: return hashed(dir, stage_s4(dir, state));
    case Stage::S5: return hashed(dir, stage_s5(dir, state, library, clock));
  }
  return {};
}

std::vector<std::string> verify_artifacts(const fs::path& dir, const ProjectState& state) {
  std::vector<std::string> bad;
  for (const auto& r : state.stages) {
    if (r.status != StageStatus::Done) continue;
    for (const auto& [rel, hash] : r.artifacts)
      if (!fs::exists(dir / rel) || sha256_file(dir / rel) != hash) bad.push_back(rel);
  }
  return bad;
}

std::vector<extract::TermCandidate> curated_terms(const fs::path& dir, const ProjectState& state) {
  if (!fs::exists(dir / "terms.tsv")) throw Error(ErrorCode::PrerequisiteNotMet, "S3", "terms not extracted");
  auto terms = extract::read_terms(dir / "terms.tsv");
  for (auto& t : terms) {
    const auto it = state.term_decisions.find(t.term_id);
    if (it != state.term_decisions.end()) t.status = *extract::term_status_from_string(it->second);
  }
  return terms;
}

std::vector<extract::TermCandidate> effective_terms(const fs::path& dir, const ProjectState& state) {
  auto terms = curated_terms(dir, state);
  const std::size_t min = state.config.accept_min_frequency;
  for (auto& t : terms)
    if (t.status == extract::TermStatus::Candidate && min > 0 && t.frequency >= min)
      t.status = extract::TermStatus::Accepted;
  return terms;
}

Workspace::Workspace(fs::path root, Clock clock)
    : root_(std::move(root)),
      clock_(clock ? std::move(clock) : Clock([] { return text::utc_timestamp(); })),
      library_(root_ / "library") {
  fs::create_directories(root_ / "projects");
}

fs::path Workspace::project_dir(const std::string& id) const { return root_ / "projects" / id; }

std::shared_ptr<Project> Workspace::create_project(const std::string& id, const std::string& domain,
                                                   ProjectConfig config) {
  if (!valid_project_id(id)) throw Error(ErrorCode::InvalidConfig, "project_id", "invalid id: " + id);
  if (text::normalize_label(domain).empty()) throw Error(ErrorCode::InvalidConfig, "domain", "must not be empty");
  validate_config(config);

  auto checked = [](const char* field, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      throw Error(ErrorCode::InvalidConfig, field, e.what());
    }
  };
  lex::Lexicon lexicon;
  checked("lexicon", [&] { lexicon = lex::load_lexicon_file(config.lexicon); });
  checked("rules", [&] { ling::validate_rules(ling::load_rules_file(config.rules), lexicon); });
  checked("seeds", [&] {
    if (corpus::read_seed_terms(config.seeds).empty()) throw std::invalid_argument("no seed terms");
  });
  if (!config.seed_ontology.empty()) checked("seed_ontology", [&] { load_graph(config.seed_ontology); });

  std::lock_guard lock(mutex_);
  const fs::path dir = project_dir(id);
  if (open_.count(id) || fs::exists(dir / "events.ndjson")) throw Error(ErrorCode::DuplicateProject, id);
  fs::create_directories(dir / "config");
  ProjectConfig frozen = config;
  auto freeze = [&](const std::string& src, const char* name) {
    fs::copy_file(src, dir / "config" / name, fs::copy_options::overwrite_existing);
    return std::string("config/") + name;
  };
  frozen.lexicon = freeze(config.lexicon, "lexicon.txt");
  frozen.rules = freeze(config.rules, "rules.txt");
  frozen.seeds = freeze(config.seeds, "seeds.txt");
  if (!config.seed_ontology.empty()) frozen.seed_ontology = freeze(config.seed_ontology, "seed_ontology.nt");
  frozen.sources = fs::absolute(config.sources).lexically_normal().string();

  std::shared_ptr<Project> p = Project::create(std::make_unique<FileStore>(dir), id, domain, frozen, clock_);
  open_[id] = p;
  return p;
}

std::shared_ptr<Project> Workspace::open_project(const std::string& id) {
  std::lock_guard lock(mutex_);
  if (const auto it = open_.find(id); it != open_.end()) return it->second;
  if (!valid_project_id(id) || !fs::exists(project_dir(id) / "events.ndjson"))
    throw Error(ErrorCode::UnknownProject, id);
  std::shared_ptr<Project> p = Project::open(std::make_unique<FileStore>(project_dir(id)), clock_);
  p->recover_interrupted();
  open_[id] = p;
  return p;
}

std::vector<std::string> Workspace::project_ids() const {
  std::vector<std::string> ids;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(root_ / "projects", ec))
    if (e.is_directory() && fs::exists(e.path() / "events.ndjson")) ids.push_back(e.path().filename().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

ProjectState Workspace::run_stage(const std::string& id, Stage stage, std::optional<std::uint64_t> expected) {
  auto p = open_project(id);
  const fs::path dir = project_dir(id);
  return p->run_stage(
      stage, [&](const ProjectState& s, Stage st) { return run_stage_work(dir, s, st, library_, clock_); }, expected);
}

ProjectState Workspace::rollback(const std::string& id, Stage from, Stage to, const std::string& reason,
                                 std::optional<std::uint64_t> expected) {
  return open_project(id)->rollback(from, to, reason, expected);
}

ProjectState Workspace::decide_term(const std::string& id, const std::string& term_id, const std::string& status,
                                    std::optional<std::uint64_t> expected) {
  auto p = open_project(id);
  const auto terms = curated_terms(project_dir(id), p->snapshot());
  if (std::none_of(terms.begin(), terms.end(), [&](const auto& t) { return t.term_id == term_id; }))
    throw Error(ErrorCode::NotFound, term_id, "no such term");
  return p->decide_term(term_id, status, expected);
}

std::vector<extract::TermCandidate> Workspace::terms(const std::string& id) {
  auto p = open_project(id);
  auto out = curated_terms(project_dir(id), p->snapshot());
  extract::rank_for_display(out);
  return out;
}

onto::OntologyGraph Workspace::ontology(const std::string& id) {
  open_project(id);
  const fs::path path = project_dir(id) / "ontology" / "current.nt";
  if (!fs::exists(path)) throw Error(ErrorCode::PrerequisiteNotMet, "S4", "no ontology yet");
  return load_graph(path);
}

std::pair<ProjectState, onto::Concept> Workspace::add_concept(const std::string& id, onto::Concept c,
                                                              std::optional<std::uint64_t> expected) {
  auto p = open_project(id);
  const fs::path path = project_dir(id) / "ontology" / "current.nt";
  if (text::normalize_label(c.preferred_label).empty())
    throw Error(ErrorCode::InvalidConfig, "preferred_label", "must not be empty");
  if (c.id.empty()) c.id = onto::concept_id_for_label(c.preferred_label);
  onto::Concept added;
  auto state = p->edit_ontology(
      "add_concept " + c.id,
      [&](const ProjectState&) {
        auto g = load_graph(path);
        g.add_concept(c);
        added = *g.find(c.id);
        write_file_atomic(path, onto::export_owl(g));
      },
      expected);
  return {std::move(state), std::move(added)};
}

ProjectState Workspace::patch_concept(const std::string& id, const std::string& concept_id, const ConceptPatch& patch,
                                      std::optional<std::uint64_t> expected) {
  auto p = open_project(id);
  const fs::path path = project_dir(id) / "ontology" / "current.nt";
  return p->edit_ontology(
      "patch_concept " + concept_id,
      [&](const ProjectState&) {
        auto g = load_graph(path);
        const onto::Concept* found = g.find(concept_id);
        if (!found) throw Error(ErrorCode::UnknownConcept, concept_id);
        onto::Concept c = *found;
        if (patch.preferred_label) c.preferred_label = *patch.preferred_label;
        if (patch.alt_labels) c.alt_labels = *patch.alt_labels;
        if (patch.definition) c.definition = *patch.definition;
        if (text::normalize_label(c.preferred_label).empty())
          throw Error(ErrorCode::InvalidConfig, "preferred_label", "must not be empty");
        g.update_concept(c);
        for (auto r : patch.remove_relations) {
          r.source = concept_id;
          if (!g.remove_relation(r)) throw Error(ErrorCode::NotFound, r.target, "no such relation");
        }
        for (auto r : patch.add_relations) {
          r.source = concept_id;
          g.add_relation(r);
        }
        write_file_atomic(path, onto::export_owl(g));
      },
      expected);
}

std::pair<ProjectState, onto::MergeResult> Workspace::merge_library(const std::string& id,
                                                                    const std::string& library_ref,
                                                                    std::optional<std::uint64_t> expected) {
  auto p = open_project(id);
  const fs::path path = project_dir(id) / "ontology" / "current.nt";
  std::string domain = library_ref;
  std::optional<std::uint64_t> version;
  if (const auto at = library_ref.rfind('@'); at != std::string::npos) {
    domain = library_ref.substr(0, at);
    try {
      version = std::stoull(library_ref.substr(at + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "library_ref", "bad version in " + library_ref);
    }
  }
  const auto other = library_.load(domain, version);
  std::optional<onto::MergeResult> result;
  auto state = p->edit_ontology(
      "merge " + library_ref,
      [&](const ProjectState& s) {
        const auto current = load_graph(path);
        result = onto::merge(current, other);
        result->graph.set_graph_id(current.graph_id());
        result->graph.set_domain_name(s.domain);
        write_file_atomic(path, onto::export_owl(result->graph));
      },
      expected);
  return {std::move(state), std::move(*result)};
}

void Workspace::export_owl(const std::string& id, const fs::path& out) {
  auto p = open_project(id);
  const auto s = p->snapshot();
  if (s.at(Stage::S4).status != StageStatus::Done)
    throw Error(ErrorCode::PrerequisiteNotMet, "S4", "ontology is " + std::string(to_string(s.at(Stage::S4).status)));
  write_file_atomic(out, read_file(project_dir(id) / "ontology" / "current.nt"));
}

ProjectSearch Workspace::search(const std::string& id, const std::string& query, std::size_t k) {
  auto p = open_project(id);
  const fs::path dir = project_dir(id);
  const auto state = p->snapshot();
  ProjectSearch out;
  if (fs::exists(dir / "index.tsv")) {
    out.documents = search::search(search::read_index(dir / "index.tsv"), query, k);
    for (auto& h : out.documents) {
      try {
        h.snippet = search::make_snippet(corpus::read_body(dir / "corpus", h.target_id), query);
      } catch (const Error&) {
        // corpus rebuilt since indexing; the hit stands without a snippet
      }
    }
  }
  std::vector<extract::TermCandidate> terms;
  if (fs::exists(dir / "terms.tsv")) terms = curated_terms(dir, state);
  std::optional<onto::OntologyGraph> graph;
  if (fs::exists(dir / "ontology" / "current.nt")) graph = load_graph(dir / "ontology" / "current.nt");
  out.labels = search::search_labels(terms, graph ? &*graph : nullptr, query, k);
  return out;
}

}  // namespace ikon::pipeline
