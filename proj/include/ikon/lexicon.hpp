#pragma once

// Dictionary-driven morphology: lexemes carry a stem and a flexion class code,
// flexion classes are tables of (ending, grammatical features). A word form is
// always stem + ending; analysis inverts that concatenation.

#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ikon::lex {

/// Feature name -> value. std::map keeps names unique and ordered, so two
/// bundles compare equal exactly when they hold the same pairs.
using FeatureBundle = std::map<std::string, std::string>;

std::string format_features(const FeatureBundle& features);

struct FlexionEntry {
  std::string ending;
  FeatureBundle features;

  friend bool operator==(const FlexionEntry&, const FlexionEntry&) = default;
};

struct FlexionClass {
  std::string id;
  std::vector<FlexionEntry> entries;  // file order
};

struct Lexeme {
  std::string id;
  std::string stem;
  std::string pos;
  std::string class_id;
  std::set<std::string> sem_tags;
  // Alternate stems of one word are separate lexemes pointing at a shared lemma.
  std::string lemma_of;
};

struct Analysis {
  std::string lexeme_id;
  std::string surface;
  FeatureBundle features;
  std::string pos;

  friend auto operator<=>(const Analysis&, const Analysis&) = default;
};

/// Immutable after construction; all member functions are const and safe to
/// call from any number of threads.
class Lexicon {
 public:
  Lexicon() = default;

  const std::vector<Lexeme>& lexemes() const noexcept { return lexemes_; }
  const std::vector<FlexionClass>& classes() const noexcept { return classes_; }
  const std::set<std::string>& pos_tags() const noexcept { return pos_tags_; }
  const std::map<std::string, std::set<std::string>>& feature_inventory() const noexcept {
    return features_;
  }

  const Lexeme* find_lexeme(std::string_view id) const;
  const FlexionClass* find_class(std::string_view id) const;

  /// stem + ending of the first entry of the lexeme's class.
  std::string base_form(std::string_view lexeme_id) const;

 private:
  friend Lexicon load_lexicon(std::istream& source);
  friend class LexiconBuilder;

  void build_index();

  std::vector<Lexeme> lexemes_;
  std::vector<FlexionClass> classes_;
  std::set<std::string> pos_tags_;
  std::map<std::string, std::set<std::string>> features_;

  std::unordered_map<std::string, std::size_t> lexeme_by_id_;
  std::unordered_map<std::string, std::size_t> class_by_id_;
  std::unordered_map<std::string, std::vector<std::size_t>> lexemes_by_stem_;

  friend std::vector<Analysis> analyze_form(const Lexicon&, std::string_view);
};

/// Parses the TAB-separated lexicon format. Throws ikon::Error with
/// MalformedLine, DuplicateId or UnresolvedClass.
Lexicon load_lexicon(std::istream& source);
Lexicon load_lexicon_file(const std::string& path);

/// One Analysis per flexion entry, in entry order. Throws UnknownLexeme.
std::vector<Analysis> generate_paradigm(const Lexicon& lexicon, std::string_view lexeme_id);

/// All analyses whose surface equals the lowercased input, sorted and unique.
/// Cost depends on the length of `surface`, not on the lexicon size.
std::vector<Analysis> analyze_form(const Lexicon& lexicon, std::string_view surface);

/// Programmatic construction with the same validation as the file loader;
/// used by generators and tests.
class LexiconBuilder {
 public:
  LexiconBuilder& pos(std::string tag);
  LexiconBuilder& feature(std::string name, std::set<std::string> values);
  LexiconBuilder& entry(const std::string& class_id, std::string ending, FeatureBundle features);
  LexiconBuilder& lexeme(Lexeme lexeme);
  Lexicon build() &&;

 private:
  Lexicon lex_;
};

}  // namespace ikon::lex
