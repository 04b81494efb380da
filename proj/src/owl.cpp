#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <tuple>

#include "ikon/error.hpp"
#include "ikon/ontology.hpp"
#include "ikon/text.hpp"

namespace ikon::onto {

namespace {

constexpr std::string_view kConceptPrefix = "urn:ikon:";
constexpr std::string_view kHeader = "# ikon-ontology";

std::string iri_term(std::string_view iri) { return "<" + std::string(iri) + ">"; }

std::string literal_term(std::string_view value) {
  std::string out = "\"";
  for (char c : value) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string relation_predicate(const ConceptRelation& r) {
  switch (r.type) {
    case RelationType::IsA: return std::string(iri::kSubClassOf);
    case RelationType::PartOf: return std::string(iri::kPartOf);
    case RelationType::AssociatedWith: return std::string(iri::kRelPrefix) + text::percent_encode(r.label);
  }
  return {};
}

struct Term {
  bool is_iri = false;
  std::string value;
};

// Minimal N-Triples tokenizer: `<iri> <iri> (<iri>|"literal"[@lang|^^<iri>]) .`
class LineParser {
 public:
  LineParser(std::string_view line, std::size_t line_no) : s_(line), line_no_(line_no) {}

  std::tuple<std::string, std::string, Term> triple() {
    const auto subject = iri();
    const auto predicate = iri();
    skip_ws();
    Term object;
    if (peek() == '<') {
      object = {true, iri()};
    } else if (peek() == '"') {
      object = {false, literal()};
    } else {
      fail("object must be an IRI or a literal");
    }
    skip_ws();
    if (peek() != '.') fail("missing terminating '.'");
    ++pos_;
    skip_ws();
    if (pos_ != s_.size() && s_[pos_] != '#') fail("trailing characters");
    return {subject, predicate, object};
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorCode::MalformedTriple, std::string(s_), why, line_no_);
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  std::string iri() {
    skip_ws();
    if (peek() != '<') fail("expected '<'");
    const auto end = s_.find('>', pos_);
    if (end == std::string_view::npos) fail("unterminated IRI");
    std::string out(s_.substr(pos_ + 1, end - pos_ - 1));
    if (out.empty() || out.find_first_of(" \t\"") != std::string::npos) fail("invalid IRI");
    pos_ = end + 1;
    return out;
  }

  std::string literal() {
    ++pos_;
    std::string out;
    for (;;) {
      if (pos_ >= s_.size()) fail("unterminated literal");
      const char c = s_[pos_++];
      if (c == '"') break;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (pos_ >= s_.size()) fail("dangling escape");
      const char e = s_[pos_++];
      switch (e) {
        case '\\': out += '\\'; break;
        case '"': out += '"'; break;
        case 'n': out += '\n'; break;
        case 'r': out += '\r'; break;
        case 't': out += '\t'; break;
        case 'u':
        case 'U': out += unicode_escape(e == 'u' ? 4 : 8); break;
        default: fail("unknown escape");
      }
    }
    if (peek() == '@') {
      ++pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '-')) ++pos_;
    } else if (s_.substr(pos_, 2) == "^^") {
      pos_ += 2;
      iri();
    }
    return out;
  }

  std::string unicode_escape(int digits) {
    if (pos_ + digits > s_.size()) fail("short unicode escape");
    char32_t cp = 0;
    for (int i = 0; i < digits; ++i) {
      const char c = s_[pos_++];
      cp <<= 4;
      if (c >= '0' && c <= '9') cp |= c - '0';
      else if (c >= 'A' && c <= 'F') cp |= c - 'A' + 10;
      else if (c >= 'a' && c <= 'f') cp |= c - 'a' + 10;
      else fail("bad unicode escape");
    }
    std::string out;
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
    return out;
  }

  std::string_view s_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

std::string header_value(std::string_view header, std::string_view key) {
  const std::string needle = " " + std::string(key) + "=";
  const auto at = header.find(needle);
  if (at == std::string_view::npos) return {};
  const auto start = at + needle.size();
  const auto end = header.find(' ', start);
  std::string decoded;
  if (!text::percent_decode(header.substr(start, end == std::string_view::npos ? end : end - start), decoded))
    return {};
  return decoded;
}

}  // namespace

std::string concept_iri(std::string_view domain_name, std::string_view label) {
  return std::string(kConceptPrefix) + text::percent_encode(domain_name) + ":" +
         text::percent_encode(text::normalize_label(label));
}

std::string export_owl(const OntologyGraph& graph) {
  std::vector<std::tuple<std::string, std::string, std::string>> triples;
  std::map<std::string, std::string> iri_of;
  for (const auto& [id, c] : graph.concepts()) {
    const std::string s = iri_term(concept_iri(graph.domain_name(), c.preferred_label));
    iri_of[id] = s;
    triples.emplace_back(s, iri_term(iri::kRdfType), iri_term(iri::kOwlClass));
    triples.emplace_back(s, iri_term(iri::kLabel), literal_term(c.preferred_label));
    for (const auto& alt : c.alt_labels) triples.emplace_back(s, iri_term(iri::kAltLabel), literal_term(alt));
    if (c.definition) triples.emplace_back(s, iri_term(iri::kDefinition), literal_term(*c.definition));
  }
  for (const auto& r : graph.relations())
    triples.emplace_back(iri_of.at(r.source), iri_term(relation_predicate(r)), iri_of.at(r.target));
  std::sort(triples.begin(), triples.end());

  std::string out = std::string(kHeader) + " graph=" + text::percent_encode(graph.graph_id()) +
                    " domain=" + text::percent_encode(graph.domain_name()) +
                    " version=" + std::to_string(graph.version()) + "\n";
  for (const auto& [s, p, o] : triples) out += s + ' ' + p + ' ' + o + " .\n";
  return out;
}

OntologyGraph import_owl(std::istream& in) {
  struct Pending {
    std::string predicate;
    std::string subject;
    Term object;
    std::size_t line;
  };
  std::string graph_id, domain;
  std::uint64_t version = 1;
  std::vector<Pending> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      if (t.rfind(kHeader, 0) == 0) {
        graph_id = header_value(t, "graph");
        domain = header_value(t, "domain");
        const auto v = header_value(t, "version");
        if (!v.empty()) {
          try {
            version = std::stoull(v);
          } catch (const std::exception&) {
            throw Error(ErrorCode::MalformedTriple, v, "bad version in header", line_no);
          }
        }
      }
      continue;
    }
    auto [s, p, o] = LineParser(t, line_no).triple();
    triples.push_back({std::move(p), std::move(s), std::move(o), line_no});
  }

  // Pass 1: class declarations.
  std::map<std::string, Concept> by_iri;
  std::map<std::string, std::size_t> declared_at;
  for (const auto& t : triples) {
    if (t.predicate != iri::kRdfType) continue;
    if (!t.object.is_iri || t.object.value != iri::kOwlClass)
      throw Error(ErrorCode::UnsupportedConstruct, t.subject, "only owl:Class declarations are supported", t.line);
    if (t.subject.rfind(kConceptPrefix, 0) != 0)
      throw Error(ErrorCode::UnsupportedConstruct, t.subject, "concept IRIs must use the urn:ikon: scheme", t.line);
    const auto colon = t.subject.rfind(':');
    std::string label;
    if (colon < kConceptPrefix.size() || !text::percent_decode(t.subject.substr(colon + 1), label) || label.empty())
      throw Error(ErrorCode::UnsupportedConstruct, t.subject, "cannot derive a label from the IRI", t.line);
    by_iri[t.subject].id = concept_id_for_label(label);
    declared_at.emplace(t.subject, t.line);
  }
  auto concept_for = [&](const std::string& iri, std::size_t line) -> Concept& {
    const auto it = by_iri.find(iri);
    if (it == by_iri.end()) throw Error(ErrorCode::UnsupportedConstruct, iri, "undeclared class", line);
    return it->second;
  };

  // Pass 2: annotations and relations.
  std::vector<std::pair<ConceptRelation, std::size_t>> relations;
  for (const auto& t : triples) {
    if (t.predicate == iri::kRdfType) continue;
    Concept& c = concept_for(t.subject, t.line);
    if (t.predicate == iri::kLabel || t.predicate == iri::kAltLabel || t.predicate == iri::kDefinition) {
      if (t.object.is_iri) throw Error(ErrorCode::UnsupportedConstruct, t.predicate, "annotation needs a literal", t.line);
      if (t.predicate == iri::kLabel) {
        if (!c.preferred_label.empty())
          throw Error(ErrorCode::UnsupportedConstruct, t.subject, "more than one rdfs:label", t.line);
        c.preferred_label = t.object.value;
      } else if (t.predicate == iri::kAltLabel) {
        c.alt_labels.insert(t.object.value);
      } else {
        if (c.definition) throw Error(ErrorCode::UnsupportedConstruct, t.subject, "more than one definition", t.line);
        c.definition = t.object.value;
      }
      continue;
    }
    if (!t.object.is_iri) throw Error(ErrorCode::UnsupportedConstruct, t.predicate, "relation needs an IRI object", t.line);
    concept_for(t.object.value, t.line);
    ConceptRelation r{RelationType::AssociatedWith, {}, t.subject, t.object.value};
    if (t.predicate == iri::kSubClassOf) {
      r.type = RelationType::IsA;
    } else if (t.predicate == iri::kPartOf) {
      r.type = RelationType::PartOf;
    } else if (t.predicate.rfind(iri::kRelPrefix, 0) == 0) {
      if (!text::percent_decode(std::string_view(t.predicate).substr(iri::kRelPrefix.size()), r.label) ||
          r.label.empty())
        throw Error(ErrorCode::UnsupportedConstruct, t.predicate, "bad relation label", t.line);
    } else {
      throw Error(ErrorCode::UnsupportedConstruct, t.predicate, "unsupported predicate", t.line);
    }
    relations.emplace_back(std::move(r), t.line);
  }

  OntologyGraph g(graph_id, domain, version);
  std::map<std::string, std::string> id_of;
  for (auto& [iri, c] : by_iri) {
    if (c.preferred_label.empty())
      throw Error(ErrorCode::UnsupportedConstruct, iri, "class without rdfs:label", declared_at.at(iri));
    id_of[iri] = c.id;
    try {
      g.add_concept(std::move(c));
    } catch (const Error& e) {
      throw Error(ErrorCode::UnsupportedConstruct, iri, e.what(), declared_at.at(iri));
    }
  }
  for (auto& [r, line] : relations) {
    r.source = id_of.at(r.source);
    r.target = id_of.at(r.target);
    try {
      g.add_relation(std::move(r));
    } catch (const Error& e) {
      throw Error(ErrorCode::UnsupportedConstruct, e.subject(), e.what(), line);
    }
  }
  return g;
}

}  // namespace ikon::onto
