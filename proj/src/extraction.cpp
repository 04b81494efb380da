#include "ikon/extraction.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <thread>
#include <tuple>

#include "ikon/error.hpp"
#include "ikon/hash.hpp"
#include "ikon/text.hpp"

namespace ikon::extract {

std::string_view to_string(TermStatus s) {
  switch (s) {
    case TermStatus::Candidate: return "candidate";
    case TermStatus::Accepted: return "accepted";
    case TermStatus::Rejected: return "rejected";
  }
  return "candidate";
}

std::optional<TermStatus> term_status_from_string(std::string_view s) {
  if (s == "candidate") return TermStatus::Candidate;
  if (s == "accepted") return TermStatus::Accepted;
  if (s == "rejected") return TermStatus::Rejected;
  return std::nullopt;
}

std::vector<Pattern> default_patterns(const std::string& noun, const std::string& adjective,
                                      const std::string& linker) {
  using K = PatternElement::Kind;
  const PatternElement n{K::Pos, noun};
  const PatternElement a{K::Pos, adjective};
  const PatternElement of{K::Literal, text::to_lower(linker)};
  return {{n}, {a, n}, {n, n}, {a, a, n}, {n, of, n}};
}

namespace {

std::string lemma_of(const lex::Lexicon& lexicon, const std::string& lexeme_id) {
  const lex::Lexeme* lx = lexicon.find_lexeme(lexeme_id);
  return lx && !lx->lemma_of.empty() ? lx->lemma_of : lexeme_id;
}

// Lemma ids a token can contribute to one pattern slot.
std::vector<std::string> slot_lemmas(const ling::Token& t, const PatternElement& el, const lex::Lexicon& lexicon) {
  std::vector<std::string> out;
  if (el.kind == PatternElement::Kind::Literal) {
    if (text::to_lower(t.surface) == el.value) out.push_back("=" + el.value);
    return out;
  }
  for (const auto& a : t.analyses)
    if (a.pos == el.value) out.push_back(lemma_of(lexicon, a.lexeme_id));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::set<Occurrence> find_occurrences(const ling::ParseGraph& graph, const lex::Lexicon& lexicon,
                                      const std::vector<Pattern>& patterns) {
  std::set<Occurrence> out;
  const auto& nodes = graph.nodes;
  for (std::size_t start = 0; start < nodes.size(); ++start) {
    for (const auto& p : patterns) {
      if (p.empty() || p.size() > kMaxTermLength || start + p.size() > nodes.size()) continue;
      std::vector<std::vector<std::string>> slots;
      for (std::size_t k = 0; k < p.size(); ++k) {
        slots.push_back(slot_lemmas(nodes[start + k], p[k], lexicon));
        if (slots.back().empty()) break;
      }
      if (slots.size() != p.size() || slots.back().empty()) continue;
      std::vector<std::string> seq(p.size());
      std::function<void(std::size_t)> expand = [&](std::size_t k) {
        if (k == slots.size()) {
          out.insert(Occurrence{graph.doc_id, graph.sentence_index, start, p.size(), seq});
          return;
        }
        for (const auto& l : slots[k]) {
          seq[k] = l;
          expand(k + 1);
        }
      };
      expand(0);
    }
  }
  return out;
}

TermCounts count_terms(std::span<const ling::ParseGraph> graphs, const lex::Lexicon& lexicon,
                       const std::vector<Pattern>& patterns) {
  TermCounts counts;
  for (const auto& g : graphs)
    for (const auto& occ : find_occurrences(g, lexicon, patterns)) {
      auto& c = counts[occ.lemma_sequence];
      ++c.frequency;
      c.doc_ids.insert(occ.doc_id);
    }
  return counts;
}

void merge_counts(TermCounts& into, const TermCounts& from) {
  for (const auto& [seq, c] : from) {
    auto& dst = into[seq];
    dst.frequency += c.frequency;
    dst.doc_ids.insert(c.doc_ids.begin(), c.doc_ids.end());
  }
}

std::string term_id_for(const std::vector<std::string>& lemma_sequence) {
  return "t" + sha256_hex(text::join(lemma_sequence, ",")).substr(0, 12);
}

std::string term_surface(const std::vector<std::string>& lemma_sequence, const lex::Lexicon& lexicon) {
  std::vector<std::string> words;
  for (const auto& l : lemma_sequence)
    words.push_back(!l.empty() && l.front() == '=' ? l.substr(1) : lexicon.base_form(l));
  return text::join(words, " ");
}

std::vector<TermCandidate> extract_terms(const std::vector<std::vector<ling::ParseGraph>>& documents,
                                         const lex::Lexicon& lexicon, const std::vector<Pattern>& patterns,
                                         unsigned threads) {
  TermCounts total;
  if (threads <= 1 || documents.size() < 2) {
    for (const auto& doc : documents) merge_counts(total, count_terms(doc, lexicon, patterns));
  } else {
    const std::size_t workers = std::min<std::size_t>(threads, documents.size());
    std::vector<TermCounts> partial(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t d = w; d < documents.size(); d += workers)
          merge_counts(partial[w], count_terms(documents[d], lexicon, patterns));
      });
    for (auto& t : pool) t.join();
    for (const auto& p : partial) merge_counts(total, p);
  }

  std::vector<TermCandidate> out;
  out.reserve(total.size());
  for (const auto& [seq, c] : total)
    out.push_back(TermCandidate{term_id_for(seq), seq, term_surface(seq, lexicon), c.frequency, c.doc_ids,
                                c.doc_ids.size(), TermStatus::Candidate});
  std::sort(out.begin(), out.end(), [](const TermCandidate& a, const TermCandidate& b) { return a.term_id < b.term_id; });
  return out;
}

void rank_for_display(std::vector<TermCandidate>& terms) {
  std::sort(terms.begin(), terms.end(), [](const TermCandidate& a, const TermCandidate& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    if (a.lemma_sequence.size() != b.lemma_sequence.size()) return a.lemma_sequence.size() > b.lemma_sequence.size();
    if (a.surface != b.surface) return a.surface < b.surface;
    return a.term_id < b.term_id;
  });
}

std::string format_terms(const std::vector<TermCandidate>& terms) {
  std::string out;
  for (const auto& t : terms)
    out += t.term_id + '\t' + text::tsv_field(t.surface) + '\t' + text::join(t.lemma_sequence, ",") + '\t' +
           std::to_string(t.frequency) + '\t' + std::to_string(t.doc_count) + '\t' +
           std::string(to_string(t.status)) + '\n';
  return out;
}

std::vector<TermCandidate> read_terms(const std::filesystem::path& terms_tsv) {
  std::istringstream in(read_file(terms_tsv));
  std::vector<TermCandidate> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = text::split(line, '\t');
    const auto status = f.size() == 6 ? term_status_from_string(f[5]) : std::nullopt;
    if (!status) throw Error(ErrorCode::MalformedLine, terms_tsv.string(), "bad terms row", line_no);
    TermCandidate t;
    t.term_id = f[0];
    t.surface = f[1];
    t.lemma_sequence = text::split(f[2], ',');
    t.frequency = std::stoul(f[3]);
    t.doc_count = std::stoul(f[4]);
    t.status = *status;
    out.push_back(std::move(t));
  }
  return out;
}

std::optional<SenseAssignment> disambiguate_sense(const Occurrence& occurrence, const ling::ParseGraph& sentence,
                                                  const lex::Lexicon& lexicon, const onto::OntologyGraph* seed) {
  if (!seed) throw Error(ErrorCode::UnknownConcept, "", "no seed ontology");
  const auto candidates = seed->find_by_any_label(term_surface(occurrence.lemma_sequence, lexicon));
  if (candidates.empty()) return std::nullopt;

  std::set<std::string> context;
  for (std::size_t i = 0; i < sentence.nodes.size(); ++i) {
    if (i >= occurrence.start && i < occurrence.start + occurrence.length) continue;
    const auto& t = sentence.nodes[i];
    if (t.analyses.empty()) context.insert(text::to_lower(t.surface));
    for (const auto& a : t.analyses) context.insert(text::normalize_label(lexicon.base_form(a.lexeme_id)));
  }

  std::optional<SenseAssignment> best;
  for (const onto::Concept* c : candidates) {
    std::set<std::string> words;
    for (const auto& nb : seed->neighbours(c->id)) {
      const onto::Concept* n = seed->find(nb);
      for (const auto& w : text::normalized_tokens(n->preferred_label)) words.insert(w);
      for (const auto& alt : n->alt_labels)
        for (const auto& w : text::normalized_tokens(alt)) words.insert(w);
    }
    std::size_t overlap = 0;
    for (const auto& w : context) overlap += words.count(w);
    if (overlap == 0) continue;
    if (!best || overlap > best->score || (overlap == best->score && c->id < best->concept_id))
      best = SenseAssignment{occurrence.doc_id, occurrence.sentence_index, occurrence.start, occurrence.length,
                             c->id, overlap};
  }
  return best;
}

SemanticNetwork build_network(const std::vector<std::vector<ling::ParseGraph>>& documents,
                              const lex::Lexicon& lexicon, const std::vector<TermCandidate>& terms,
                              const std::vector<Pattern>& patterns) {
  std::map<std::vector<std::string>, const TermCandidate*> accepted;
  for (const auto& t : terms)
    if (t.status == TermStatus::Accepted) accepted.emplace(t.lemma_sequence, &t);

  SemanticNetwork net;
  if (accepted.empty()) return net;
  for (const auto& doc : documents) {
    for (const auto& g : doc) {
      std::vector<std::pair<const TermCandidate*, Occurrence>> occs;
      for (const auto& o : find_occurrences(g, lexicon, patterns)) {
        const auto it = accepted.find(o.lemma_sequence);
        if (it == accepted.end()) continue;
        auto& node = net.nodes[it->second->term_id];
        node.surface = it->second->surface;
        node.provenance.emplace(g.doc_id, g.sentence_index);
        occs.emplace_back(it->second, o);
      }
      auto covering = [&](std::size_t idx) {
        std::set<std::string> ids;
        for (const auto& [t, o] : occs)
          if (idx >= o.start && idx < o.start + o.length) ids.insert(t->term_id);
        return ids;
      };
      for (const auto& e : g.edges) {
        const auto heads = covering(e.head);
        if (heads.empty()) continue;
        const auto deps = covering(e.dep);
        for (const auto& h : heads)
          for (const auto& d : deps)
            if (h != d) net.edges[{e.relation, h, d}].insert({g.doc_id, g.sentence_index, e.head, e.dep});
      }
    }
  }
  return net;
}

std::string format_network(const SemanticNetwork& network) {
  std::string out;
  for (const auto& [key, support] : network.edges)
    out += text::tsv_field(key.label) + '\t' + key.source + '\t' + key.target + '\t' + std::to_string(support.size()) +
           '\n';
  return out;
}

void to_promotion_input(const SemanticNetwork& network, std::vector<onto::PromotionNode>& nodes,
                        std::vector<onto::PromotionEdge>& edges) {
  nodes.clear();
  edges.clear();
  // Distinct lemma sequences can share a surface (an adjective and a noun
  // with the same stem); they become one concept.
  std::map<std::string, std::size_t> by_label;
  for (const auto& [id, n] : network.nodes) {
    const std::string norm = text::normalize_label(n.surface);
    const auto [it, fresh] = by_label.emplace(norm, nodes.size());
    if (fresh)
      nodes.push_back({n.surface, n.provenance});
    else
      nodes[it->second].provenance.insert(n.provenance.begin(), n.provenance.end());
  }
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& [key, support] : network.edges) {
    const auto& src = nodes[by_label.at(text::normalize_label(network.nodes.at(key.source).surface))].label;
    const auto& dst = nodes[by_label.at(text::normalize_label(network.nodes.at(key.target).surface))].label;
    if (src == dst || !seen.emplace(key.label, src, dst).second) continue;
    edges.push_back({key.label, src, dst});
  }
}

}  // namespace ikon::extract
