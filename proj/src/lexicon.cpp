#include "ikon/lexicon.hpp"

#include <algorithm>
#include <fstream>

#include "ikon/error.hpp"
#include "ikon/text.hpp"

namespace ikon::lex {

std::string format_features(const FeatureBundle& features) {
  std::string out;
  for (const auto& [name, value] : features) {
    if (!out.empty()) out += ',';
    out += name;
    out += '=';
    out += value;
  }
  return out;
}

namespace {

// Stateful loader shared by the file parser and LexiconBuilder. Line number 0
// means "programmatic input".
class Loader {
 public:
  Loader(std::set<std::string>& pos, std::map<std::string, std::set<std::string>>& feats,
         std::vector<Lexeme>& lexemes, std::vector<FlexionClass>& classes)
      : pos_(pos), feats_(feats), lexemes_(lexemes), classes_(classes) {}

  void header_pos(const std::string& list, std::size_t line) {
    if (seen_data_ || pos_declared_) throw Error(ErrorCode::MalformedLine, "", "misplaced !POS header", line);
    pos_declared_ = true;
    for (const auto& tag : text::split(list, ',')) {
      const auto t = std::string(text::trim(tag));
      if (t.empty()) throw Error(ErrorCode::MalformedLine, "", "empty POS tag", line);
      pos_.insert(t);
    }
  }

  void header_feat(const std::string& list, std::size_t line) {
    if (seen_data_ || feat_declared_) throw Error(ErrorCode::MalformedLine, "", "misplaced !FEAT header", line);
    feat_declared_ = true;
    for (const auto& decl : text::split(list, ',')) {
      const auto colon = decl.find(':');
      if (colon == std::string::npos || colon == 0)
        throw Error(ErrorCode::MalformedLine, "", "feature declaration needs name:values", line);
      const std::string name = decl.substr(0, colon);
      if (feats_.count(name)) throw Error(ErrorCode::MalformedLine, name, "feature declared twice", line);
      auto& values = feats_[name];
      for (const auto& v : text::split(std::string_view(decl).substr(colon + 1), '|')) {
        if (v.empty()) throw Error(ErrorCode::MalformedLine, name, "empty feature value", line);
        values.insert(v);
      }
    }
  }

  FeatureBundle parse_bundle(const std::string& field, std::size_t line) const {
    FeatureBundle bundle;
    if (field.empty()) return bundle;
    for (const auto& pair : text::split(field, ',')) {
      const auto eq = pair.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == pair.size())
        throw Error(ErrorCode::MalformedLine, pair, "feature must be name=value", line);
      std::string name = pair.substr(0, eq);
      std::string value = pair.substr(eq + 1);
      if (!bundle.emplace(name, value).second)
        throw Error(ErrorCode::MalformedLine, name, "duplicate feature in bundle", line);
    }
    return bundle;
  }

  void add_entry(const std::string& class_id, std::string ending, FeatureBundle features, std::size_t line) {
    seen_data_ = true;
    if (class_id.empty()) throw Error(ErrorCode::MalformedLine, "", "empty class id", line);
    for (const auto& [name, value] : features) {
      const auto it = feats_.find(name);
      if (it == feats_.end()) throw Error(ErrorCode::MalformedLine, name, "undeclared feature", line);
      if (!it->second.count(value)) throw Error(ErrorCode::MalformedLine, name + "=" + value, "undeclared value", line);
    }
    ending = text::to_lower(ending);
    auto [it, inserted] = class_index_.try_emplace(class_id, classes_.size());
    if (inserted) classes_.push_back(FlexionClass{class_id, {}});
    auto& cls = classes_[it->second];
    FlexionEntry entry{std::move(ending), std::move(features)};
    if (std::find(cls.entries.begin(), cls.entries.end(), entry) != cls.entries.end())
      throw Error(ErrorCode::MalformedLine, class_id, "duplicate flexion entry", line);
    cls.entries.push_back(std::move(entry));
  }

  void add_lexeme(Lexeme lx, std::size_t line) {
    seen_data_ = true;
    if (lx.id.empty()) throw Error(ErrorCode::MalformedLine, "", "empty lexeme id", line);
    if (lx.stem.empty()) throw Error(ErrorCode::MalformedLine, lx.id, "empty stem", line);
    if (!pos_.count(lx.pos)) throw Error(ErrorCode::MalformedLine, lx.pos, "undeclared part of speech", line);
    if (!lexeme_ids_.insert(lx.id).second) throw Error(ErrorCode::DuplicateId, lx.id, {}, line);
    lx.stem = text::to_lower(lx.stem);
    lexemes_.push_back(std::move(lx));
  }

  void finish() {
    for (const auto& lx : lexemes_) {
      if (!class_index_.count(lx.class_id)) throw Error(ErrorCode::UnresolvedClass, lx.id + ", " + lx.class_id);
      if (!lx.lemma_of.empty() && (!lexeme_ids_.count(lx.lemma_of) || lx.lemma_of == lx.id))
        throw Error(ErrorCode::UnknownLexeme, lx.lemma_of, "lemma_of of " + lx.id);
    }
  }

 private:
  std::set<std::string>& pos_;
  std::map<std::string, std::set<std::string>>& feats_;
  std::vector<Lexeme>& lexemes_;
  std::vector<FlexionClass>& classes_;
  std::unordered_map<std::string, std::size_t> class_index_;
  std::set<std::string> lexeme_ids_;
  bool seen_data_ = false;
  bool pos_declared_ = false;
  bool feat_declared_ = false;
};

}  // namespace

void Lexicon::build_index() {
  lexeme_by_id_.clear();
  class_by_id_.clear();
  lexemes_by_stem_.clear();
  for (std::size_t i = 0; i < classes_.size(); ++i) class_by_id_.emplace(classes_[i].id, i);
  for (std::size_t i = 0; i < lexemes_.size(); ++i) {
    lexeme_by_id_.emplace(lexemes_[i].id, i);
    lexemes_by_stem_[lexemes_[i].stem].push_back(i);
  }
}

const Lexeme* Lexicon::find_lexeme(std::string_view id) const {
  const auto it = lexeme_by_id_.find(std::string(id));
  return it == lexeme_by_id_.end() ? nullptr : &lexemes_[it->second];
}

const FlexionClass* Lexicon::find_class(std::string_view id) const {
  const auto it = class_by_id_.find(std::string(id));
  return it == class_by_id_.end() ? nullptr : &classes_[it->second];
}

std::string Lexicon::base_form(std::string_view lexeme_id) const {
  const Lexeme* lx = find_lexeme(lexeme_id);
  if (!lx) throw Error(ErrorCode::UnknownLexeme, std::string(lexeme_id));
  const FlexionClass* cls = find_class(lx->class_id);
  return lx->stem + cls->entries.front().ending;
}

Lexicon load_lexicon(std::istream& source) {
  Lexicon lex;
  Loader loader(lex.pos_tags_, lex.features_, lex.lexemes_, lex.classes_);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(source, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (text::trim(raw).empty() || raw.front() == '#') continue;
    const auto f = text::split(raw, '\t');
    const std::string& kind = f[0];
    if (kind == "!POS") {
      if (f.size() != 2) throw Error(ErrorCode::MalformedLine, "", "!POS takes one field", line_no);
      loader.header_pos(f[1], line_no);
    } else if (kind == "!FEAT") {
      if (f.size() != 2) throw Error(ErrorCode::MalformedLine, "", "!FEAT takes one field", line_no);
      loader.header_feat(f[1], line_no);
    } else if (kind == "F") {
      if (f.size() != 4) throw Error(ErrorCode::MalformedLine, "", "F line needs 4 fields", line_no);
      loader.add_entry(f[1], f[2], loader.parse_bundle(f[3], line_no), line_no);
    } else if (kind == "L") {
      if (f.size() != 6 && f.size() != 7) throw Error(ErrorCode::MalformedLine, "", "L line needs 6 fields", line_no);
      Lexeme lx{f[1], f[2], f[3], f[4], {}, f.size() == 7 ? f[6] : std::string{}};
      if (!f[5].empty())
        for (const auto& tag : text::split(f[5], ',')) {
          if (tag.empty()) throw Error(ErrorCode::MalformedLine, lx.id, "empty semantic tag", line_no);
          lx.sem_tags.insert(tag);
        }
      loader.add_lexeme(std::move(lx), line_no);
    } else {
      throw Error(ErrorCode::MalformedLine, kind, "unknown record type", line_no);
    }
  }
  loader.finish();
  lex.build_index();
  return lex;
}

Lexicon load_lexicon_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableSource, path);
  return load_lexicon(in);
}

std::vector<Analysis> generate_paradigm(const Lexicon& lexicon, std::string_view lexeme_id) {
  const Lexeme* lx = lexicon.find_lexeme(lexeme_id);
  if (!lx) throw Error(ErrorCode::UnknownLexeme, std::string(lexeme_id));
  const FlexionClass* cls = lexicon.find_class(lx->class_id);
  std::vector<Analysis> out;
  out.reserve(cls->entries.size());
  for (const auto& e : cls->entries) out.push_back(Analysis{lx->id, lx->stem + e.ending, e.features, lx->pos});
  return out;
}

std::vector<Analysis> analyze_form(const Lexicon& lexicon, std::string_view surface) {
  std::vector<Analysis> out;
  if (surface.empty()) return out;
  const std::string form = text::to_lower(surface);
  std::string stem;
  for (std::size_t cut = 1; cut <= form.size(); ++cut) {
    stem.assign(form, 0, cut);
    const auto hit = lexicon.lexemes_by_stem_.find(stem);
    if (hit == lexicon.lexemes_by_stem_.end()) continue;
    const std::string_view ending = std::string_view(form).substr(cut);
    for (const std::size_t idx : hit->second) {
      const Lexeme& lx = lexicon.lexemes_[idx];
      const FlexionClass& cls = lexicon.classes_[lexicon.class_by_id_.at(lx.class_id)];
      for (const auto& e : cls.entries)
        if (e.ending == ending) out.push_back(Analysis{lx.id, form, e.features, lx.pos});
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

LexiconBuilder& LexiconBuilder::pos(std::string tag) {
  lex_.pos_tags_.insert(std::move(tag));
  return *this;
}

LexiconBuilder& LexiconBuilder::feature(std::string name, std::set<std::string> values) {
  lex_.features_[std::move(name)].merge(values);
  return *this;
}

LexiconBuilder& LexiconBuilder::entry(const std::string& class_id, std::string ending, FeatureBundle features) {
  auto it = std::find_if(lex_.classes_.begin(), lex_.classes_.end(),
                         [&](const FlexionClass& c) { return c.id == class_id; });
  if (it == lex_.classes_.end()) {
    lex_.classes_.push_back(FlexionClass{class_id, {}});
    it = std::prev(lex_.classes_.end());
  }
  it->entries.push_back(FlexionEntry{std::move(ending), std::move(features)});
  return *this;
}

LexiconBuilder& LexiconBuilder::lexeme(Lexeme lexeme) {
  lex_.lexemes_.push_back(std::move(lexeme));
  return *this;
}

Lexicon LexiconBuilder::build() && {
  // Replay everything through the loader so builder input gets file-loader validation.
  Lexicon out;
  Loader loader(out.pos_tags_, out.features_, out.lexemes_, out.classes_);
  if (!lex_.pos_tags_.empty())
    loader.header_pos(text::join(std::vector<std::string>(lex_.pos_tags_.begin(), lex_.pos_tags_.end()), ","), 0);
  out.features_ = lex_.features_;
  for (const auto& cls : lex_.classes_)
    for (const auto& e : cls.entries) loader.add_entry(cls.id, e.ending, e.features, 0);
  for (auto& lx : lex_.lexemes_) loader.add_lexeme(std::move(lx), 0);
  loader.finish();
  out.build_index();
  return out;
}

}  // namespace ikon::lex
