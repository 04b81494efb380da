#pragma once

// Grammatical analysis of a text: tokenization, dictionary annotation,
// homonymy resolution under agreement/government rules, and construction of
// the first-stage syntactic-semantic structure of each sentence.

#include <istream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ikon/lexicon.hpp"

namespace ikon::ling {

using Sentence = std::vector<std::string>;

/// Sentences end at '.', '?' or '!' followed by whitespace or end of text.
/// Tokens are maximal runs of word characters; punctuation is dropped, and
/// sentences left without tokens are dropped. There is no abbreviation handling.
std::vector<Sentence> tokenize(std::string_view body);

struct Token {
  std::string doc_id;
  std::size_t sentence_index = 0;
  std::size_t token_index = 0;
  std::string surface;  // original casing
  std::vector<lex::Analysis> analyses;  // sorted, unique
  bool oov = false;

  bool ambiguous() const noexcept { return analyses.size() > 1; }
};

std::vector<Token> annotate(const lex::Lexicon& lexicon, const Sentence& sentence, std::string doc_id = {},
                            std::size_t sentence_index = 0);

enum class Direction {
  HeadLeft,   // head precedes the dependent
  HeadRight,  // head follows the dependent
};

struct ConstraintRule {
  std::string rule_id;
  std::string relation;
  std::string head_pos;
  std::string dep_pos;
  Direction direction = Direction::HeadLeft;
  std::size_t max_distance = 1;
  std::vector<std::string> agree_on;
  lex::FeatureBundle require;  // constraints on the dependent
};

std::vector<ConstraintRule> load_rules(std::istream& source);
std::vector<ConstraintRule> load_rules_file(const std::string& path);

/// Throws MalformedLine (subject = rule id) if a rule names a POS tag or a
/// feature the lexicon does not declare.
void validate_rules(const std::vector<ConstraintRule>& rules, const lex::Lexicon& lexicon);

/// Direction and distance only.
bool geometry_matches(const ConstraintRule& rule, std::size_t head, std::size_t dep);

/// Both features present with different values is a disagreement; a feature
/// missing on either side is compatible.
bool agrees(const ConstraintRule& rule, const lex::Analysis& head, const lex::Analysis& dep);

/// POS match, agreement and the dependent's required features.
bool satisfies(const ConstraintRule& rule, const lex::Analysis& head, const lex::Analysis& dep);

/// A rule binds an ordered token pair when geometry matches and some analysis
/// of each token carries the rule's POS. Every binding rule must then be
/// satisfied by the chosen analyses of both tokens.
bool rule_binds(const ConstraintRule& rule, const std::vector<Token>& tokens, std::size_t head, std::size_t dep);

struct Disambiguation {
  std::vector<Token> tokens;
  bool unresolved = false;
};

/// Reduces each token's analyses to those that occur in at least one
/// assignment satisfying every binding rule. Arc-consistency propagation runs
/// to a fixpoint first; a support search over the pruned domains then makes
/// the projection exact. With no consistent assignment the input sets are
/// kept and `unresolved` is set.
Disambiguation disambiguate(std::vector<Token> tokens, const std::vector<ConstraintRule>& rules);

struct Edge {
  std::string relation;
  std::size_t head = 0;
  std::size_t dep = 0;
  std::string rule_id;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct ParseGraph {
  std::string doc_id;
  std::size_t sentence_index = 0;
  std::vector<Token> nodes;
  std::set<Edge> edges;
  bool unresolved = false;
};

/// Emits an edge for every rule and token pair satisfied by some surviving
/// analysis pair. For each (dependent, relation) only the nearest head is
/// kept, the leftmost on a distance tie, and the smallest rule id among
/// rules proposing that same head.
ParseGraph parse_sentence(const std::vector<Token>& tokens, const std::vector<ConstraintRule>& rules);

/// tokenize -> annotate -> disambiguate -> parse_sentence for every sentence.
std::vector<ParseGraph> analyze_document(const lex::Lexicon& lexicon, const std::vector<ConstraintRule>& rules,
                                         const std::string& doc_id, std::string_view body);

/// Line-based .psg serialization of all sentences of one document:
///   S <idx> <ok|UNRESOLVED>
///   N <idx> <surface> <lexeme_id|?> <features>   (one line per surviving analysis)
///   E <relation> <head_idx> <dep_idx> <rule_id>
std::string format_parse_graphs(const std::vector<ParseGraph>& graphs);
std::vector<ParseGraph> read_parse_graphs(std::istream& in, const std::string& doc_id, const lex::Lexicon& lexicon);

}  // namespace ikon::ling
