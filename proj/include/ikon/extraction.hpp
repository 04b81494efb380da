#pragma once

// Term extraction over parse graphs, sense assignment against a seed
// ontology, and the corpus-level categorical network over accepted terms.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ikon/lexicon.hpp"
#include "ikon/linganalysis.hpp"
#include "ikon/ontology.hpp"

namespace ikon::extract {

enum class TermStatus { Candidate, Accepted, Rejected };

std::string_view to_string(TermStatus s);
std::optional<TermStatus> term_status_from_string(std::string_view s);

struct TermCandidate {
  std::string term_id;
  std::vector<std::string> lemma_sequence;  // lexeme ids; literal words appear as "=word"
  std::string surface;                      // base forms joined by single spaces
  std::size_t frequency = 0;
  std::set<std::string> doc_ids;  // empty when read back from terms.tsv
  std::size_t doc_count = 0;
  TermStatus status = TermStatus::Candidate;
};

inline constexpr std::size_t kMaxTermLength = 4;

/// A pattern element matches either a POS tag of some surviving analysis or
/// a literal word (case-insensitive).
struct PatternElement {
  enum class Kind { Pos, Literal } kind = Kind::Pos;
  std::string value;
};
using Pattern = std::vector<PatternElement>;

/// Noun-phrase patterns [N], [A N], [N N], [A A N], [N of N] with the given
/// tag names and linker word.
std::vector<Pattern> default_patterns(const std::string& noun = "N", const std::string& adjective = "A",
                                      const std::string& linker = "of");

struct Occurrence {
  std::string doc_id;
  std::size_t sentence_index = 0;
  std::size_t start = 0;
  std::size_t length = 0;
  std::vector<std::string> lemma_sequence;

  friend auto operator<=>(const Occurrence&, const Occurrence&) = default;
};

/// Every distinct (span, lemma sequence) matching some pattern. An ambiguous
/// token contributes once per surviving analysis that fits the slot.
std::set<Occurrence> find_occurrences(const ling::ParseGraph& graph, const lex::Lexicon& lexicon,
                                      const std::vector<Pattern>& patterns);

/// Per-lemma-sequence partial counts. merge_counts is associative and
/// commutative, so per-document partials can be reduced in any grouping.
struct TermCount {
  std::size_t frequency = 0;
  std::set<std::string> doc_ids;
  friend bool operator==(const TermCount&, const TermCount&) = default;
};
using TermCounts = std::map<std::vector<std::string>, TermCount>;

TermCounts count_terms(std::span<const ling::ParseGraph> graphs, const lex::Lexicon& lexicon,
                       const std::vector<Pattern>& patterns);
void merge_counts(TermCounts& into, const TermCounts& from);

std::string term_id_for(const std::vector<std::string>& lemma_sequence);
std::string term_surface(const std::vector<std::string>& lemma_sequence, const lex::Lexicon& lexicon);

/// Candidates sorted by term_id. `threads` > 1 splits the documents across
/// worker threads; the result is identical to the serial reduction.
std::vector<TermCandidate> extract_terms(const std::vector<std::vector<ling::ParseGraph>>& documents,
                                         const lex::Lexicon& lexicon, const std::vector<Pattern>& patterns,
                                         unsigned threads = 1);

/// Frequency desc, length desc, surface asc.
void rank_for_display(std::vector<TermCandidate>& terms);

std::string format_terms(const std::vector<TermCandidate>& terms);
std::vector<TermCandidate> read_terms(const std::filesystem::path& terms_tsv);

struct SenseAssignment {
  std::string doc_id;
  std::size_t sentence_index = 0;
  std::size_t start = 0;
  std::size_t length = 0;
  std::string concept_id;
  std::size_t score = 0;
};

/// Lesk-style choice among seed concepts whose labels match the occurrence:
/// the score is the number of distinct base forms of the sentence's other
/// tokens found among the words of the candidate's neighbours' labels.
/// Highest score wins, smallest concept id on ties; all-zero gives nullopt.
/// Throws UnknownConcept when `seed` is null.
std::optional<SenseAssignment> disambiguate_sense(const Occurrence& occurrence, const ling::ParseGraph& sentence,
                                                  const lex::Lexicon& lexicon, const onto::OntologyGraph* seed);

struct NetworkNode {
  std::string surface;
  onto::Provenance provenance;
};

struct NetworkEdgeKey {
  std::string label;
  std::string source;  // term id of the head side
  std::string target;  // term id of the dependent side
  friend auto operator<=>(const NetworkEdgeKey&, const NetworkEdgeKey&) = default;
};

struct SupportingEdge {
  std::string doc_id;
  std::size_t sentence_index = 0;
  std::size_t head = 0;
  std::size_t dep = 0;
  friend auto operator<=>(const SupportingEdge&, const SupportingEdge&) = default;
};

struct SemanticNetwork {
  std::map<std::string, NetworkNode> nodes;  // term id -> node
  std::map<NetworkEdgeKey, std::set<SupportingEdge>> edges;

  std::size_t weight(const NetworkEdgeKey& key) const {
    const auto it = edges.find(key);
    return it == edges.end() ? 0 : it->second.size();
  }
};

/// Nodes are accepted terms with at least one occurrence. A parse edge whose
/// head lies in an occurrence of term X and whose dependent lies in an
/// occurrence of a different term Y supports the network edge
/// (relation, X, Y). Terms that are not accepted are ignored.
SemanticNetwork build_network(const std::vector<std::vector<ling::ParseGraph>>& documents,
                              const lex::Lexicon& lexicon, const std::vector<TermCandidate>& terms,
                              const std::vector<Pattern>& patterns);

/// network.tsv rows: label, source_id, target_id, weight.
std::string format_network(const SemanticNetwork& network);

/// Adapter to the ontology promotion input; nodes with equal normalized
/// surfaces are coalesced.
void to_promotion_input(const SemanticNetwork& network, std::vector<onto::PromotionNode>& nodes,
                        std::vector<onto::PromotionEdge>& edges);

}  // namespace ikon::extract
