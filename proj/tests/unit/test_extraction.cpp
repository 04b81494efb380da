#include <doctest.h>

#include <algorithm>

#include "ikon/corpus.hpp"
#include "ikon/error.hpp"
#include "ikon/extraction.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ikon;
using extract::TermCandidate;
using extract::TermStatus;

namespace {

struct Toy {
  lex::Lexicon lexicon = lex::load_lexicon_file((testing::fixture_dir() / "toy" / "lexicon.tsv").string());
  std::vector<ling::ConstraintRule> rules = ling::load_rules_file((testing::fixture_dir() / "toy" / "rules.tsv").string());
  std::vector<extract::Pattern> patterns = extract::default_patterns();

  std::vector<ling::ParseGraph> parse(const std::string& doc_id, const std::string& body) const {
    return ling::analyze_document(lexicon, rules, doc_id, body);
  }
};

const Toy& toy() {
  static const Toy t;
  return t;
}

std::vector<std::vector<ling::ParseGraph>> fixture_parses() {
  std::vector<std::vector<ling::ParseGraph>> docs;
  for (const auto& d : corpus::ingest_directory(testing::fixture_dir() / "toy" / "corpus"))
    docs.push_back(toy().parse(d.doc_id, d.body));
  return docs;
}

const TermCandidate* by_surface(const std::vector<TermCandidate>& terms, const std::string& s) {
  for (const auto& t : terms)
    if (t.surface == s) return &t;
  return nullptr;
}

ling::Token synthetic(const std::string& surface, const std::string& pos, std::size_t i) {
  ling::Token t;
  t.surface = surface;
  t.token_index = i;
  t.analyses = {lex::Analysis{surface + "_x", surface, {}, pos}};
  return t;
}

}  // namespace

TEST_SUITE("extraction") {
  TEST_CASE("frequency example and empty inputs") {
    const auto& t = toy();
    const auto graphs = t.parse("d1", "Information system. Information system. System.");
    const auto terms = extract::extract_terms({graphs}, t.lexicon, t.patterns);
    REQUIRE(by_surface(terms, "information system"));
    CHECK(by_surface(terms, "information system")->frequency == 2);
    CHECK(by_surface(terms, "system")->frequency == 3);
    CHECK(by_surface(terms, "system")->doc_count == 1);

    CHECK(extract::extract_terms({}, t.lexicon, t.patterns).empty());
    CHECK(extract::extract_terms({t.parse("d2", "Contain. Support connects.")}, t.lexicon, t.patterns).empty());
  }

  TEST_CASE("surfaces use base forms and the linker literal") {
    const auto& t = toy();
    const auto terms = extract::extract_terms({t.parse("d", "The indexes of the databases. Relational databases.")},
                                              t.lexicon, t.patterns);
    CHECK(by_surface(terms, "relational database"));
    CHECK(by_surface(terms, "database"));
    CHECK_FALSE(by_surface(terms, "index of database"));  // "the" breaks the window
    const auto t2 = extract::extract_terms({t.parse("d", "Indexes of databases.")}, t.lexicon, t.patterns);
    REQUIRE(by_surface(t2, "index of database"));
    CHECK(by_surface(t2, "index of database")->lemma_sequence ==
          std::vector<std::string>{"index_n", "=of", "database_n"});
  }

  TEST_CASE("ambiguous tokens contribute under each surviving reading") {
    ling::ParseGraph g;
    g.doc_id = "d";
    auto tok = synthetic("record", "N", 0);
    tok.analyses.push_back(lex::Analysis{"record_v", "record", {}, "V"});
    tok.analyses.push_back(lex::Analysis{"recordb_n", "record", {}, "N"});
    g.nodes = {tok};
    const auto occ = extract::find_occurrences(g, toy().lexicon, toy().patterns);
    CHECK(occ.size() == 2);
  }

  TEST_CASE("frequencies equal the n-gram oracle on the fixture corpus") {
    const auto docs = fixture_parses();
    std::vector<ling::ParseGraph> all;
    for (const auto& d : docs) all.insert(all.end(), d.begin(), d.end());
    const auto oracle = testing::oracle_term_counts(all, toy().lexicon);
    const auto terms = extract::extract_terms(docs, toy().lexicon, toy().patterns);
    REQUIRE(terms.size() == oracle.size());
    for (const auto& term : terms) {
      const auto it = oracle.find(term.lemma_sequence);
      REQUIRE(it != oracle.end());
      CHECK(term.frequency == it->second.frequency);
      CHECK(term.doc_ids == it->second.doc_ids);
      CHECK(term.doc_count == term.doc_ids.size());
      CHECK(term.lemma_sequence.size() <= extract::kMaxTermLength);
    }
  }

  TEST_CASE("parallel and serial reductions are byte-identical") {
    const auto docs = fixture_parses();
    const auto serial = extract::format_terms(extract::extract_terms(docs, toy().lexicon, toy().patterns, 1));
    for (unsigned threads : {2u, 3u, 8u, 64u})
      CHECK(extract::format_terms(extract::extract_terms(docs, toy().lexicon, toy().patterns, threads)) == serial);
  }

  TEST_CASE("merge_counts is associative and commutative") {
    testing::Rng rng(31);
    auto random_counts = [&] {
      extract::TermCounts c;
      for (std::size_t n = testing::uniform(rng, 0, 6); n > 0; --n) {
        auto& e = c[{"l" + std::to_string(testing::uniform(rng, 0, 5))}];
        e.frequency += testing::uniform(rng, 1, 4);
        e.doc_ids.insert("d" + std::to_string(testing::uniform(rng, 0, 3)));
      }
      return c;
    };
    for (int round = 0; round < 300; ++round) {
      const auto a = random_counts(), b = random_counts(), c = random_counts();
      auto ab = a;
      extract::merge_counts(ab, b);
      auto ba = b;
      extract::merge_counts(ba, a);
      CHECK(ab == ba);
      auto ab_c = ab;
      extract::merge_counts(ab_c, c);
      auto bc = b;
      extract::merge_counts(bc, c);
      auto a_bc = a;
      extract::merge_counts(a_bc, bc);
      CHECK(ab_c == a_bc);
      auto a0 = a;
      extract::merge_counts(a0, {});
      CHECK(a0 == a);
    }
  }

  TEST_CASE("adding a document never lowers a frequency") {
    const auto docs = fixture_parses();
    std::map<std::vector<std::string>, std::size_t> prev;
    for (std::size_t n = 1; n <= docs.size(); n += 3) {
      const std::vector<std::vector<ling::ParseGraph>> prefix(docs.begin(), docs.begin() + n);
      std::map<std::vector<std::string>, std::size_t> cur;
      for (const auto& t : extract::extract_terms(prefix, toy().lexicon, toy().patterns)) cur[t.lemma_sequence] = t.frequency;
      for (const auto& [seq, f] : prev) CHECK(cur[seq] >= f);
      prev = cur;
    }
  }

  TEST_CASE("display ranking") {
    std::vector<TermCandidate> terms{
        {"t1", {"a"}, "zeta", 3, {}, 1, TermStatus::Candidate},
        {"t2", {"a", "b"}, "beta gamma", 3, {}, 1, TermStatus::Candidate},
        {"t3", {"c"}, "alpha", 3, {}, 1, TermStatus::Candidate},
        {"t4", {"d"}, "omega", 9, {}, 1, TermStatus::Candidate},
    };
    extract::rank_for_display(terms);
    std::vector<std::string> order;
    for (const auto& t : terms) order.push_back(t.term_id);
    CHECK(order == std::vector<std::string>{"t4", "t2", "t3", "t1"});
  }

  TEST_CASE("terms.tsv round trip") {
    testing::TempDir dir;
    auto terms = extract::extract_terms(fixture_parses(), toy().lexicon, toy().patterns);
    terms[0].status = TermStatus::Accepted;
    terms[1].status = TermStatus::Rejected;
    testing::write_text(dir / "terms.tsv", extract::format_terms(terms));
    const auto back = extract::read_terms(dir / "terms.tsv");
    REQUIRE(back.size() == terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
      CHECK(back[i].term_id == terms[i].term_id);
      CHECK(back[i].surface == terms[i].surface);
      CHECK(back[i].lemma_sequence == terms[i].lemma_sequence);
      CHECK(back[i].frequency == terms[i].frequency);
      CHECK(back[i].doc_count == terms[i].doc_count);
      CHECK(back[i].status == terms[i].status);
    }
    CHECK(extract::format_terms(back) == extract::format_terms(terms));
    CHECK(extract::term_id_for({"a_n"}) == extract::term_id_for({"a_n"}));
    CHECK(extract::term_id_for({"a_n"}) != extract::term_id_for({"a_n", "b_n"}));
  }

  TEST_CASE("sense choice by neighbourhood overlap") {
    const auto& t = toy();
    onto::OntologyGraph seed("seed", "toy");
    seed.add_concept({"c-b", "index finger", {"index"}, {}, {}});
    seed.add_concept({"c-a", "database index", {"index"}, {}, {}});
    seed.add_concept({"c-db", "database table", {}, {}, {}});
    seed.add_concept({"c-rec", "record", {}, {}, {}});
    seed.add_concept({"c-hand", "hand", {}, {}, {}});
    seed.add_relation({onto::RelationType::AssociatedWith, "rel", "c-a", "c-db"});
    seed.add_relation({onto::RelationType::PartOf, "", "c-a", "c-rec"});
    seed.add_relation({onto::RelationType::PartOf, "", "c-b", "c-hand"});

    const auto graphs = t.parse("d", "The database has the index with records.");
    REQUIRE(graphs.size() == 1);
    const extract::Occurrence occ{"d", 0, 4, 1, {"index_n"}};
    const auto s = extract::disambiguate_sense(occ, graphs[0], t.lexicon, &seed);
    REQUIRE(s);
    CHECK(s->concept_id == "c-a");
    CHECK(s->score == 2);

    // equal overlaps: smallest id
    onto::OntologyGraph tie("seed", "toy");
    tie.add_concept({"c-b", "pointer", {"index"}, {}, {}});
    tie.add_concept({"c-a", "table index", {"index"}, {}, {}});
    tie.add_concept({"c-x", "database", {}, {}, {}});
    tie.add_concept({"c-y", "record", {}, {}, {}});
    tie.add_relation({onto::RelationType::PartOf, "", "c-a", "c-x"});
    tie.add_relation({onto::RelationType::PartOf, "", "c-b", "c-y"});
    const auto s2 = extract::disambiguate_sense(occ, graphs[0], t.lexicon, &tie);
    REQUIRE(s2);
    CHECK(s2->concept_id == "c-a");
    CHECK(s2->score == 1);

    // one candidate with no overlap
    onto::OntologyGraph lone("seed", "toy");
    lone.add_concept({"c-i", "index", {}, {}, {}});
    CHECK_FALSE(extract::disambiguate_sense(occ, graphs[0], t.lexicon, &lone));
    // empty seed ontology: never a sense
    onto::OntologyGraph empty;
    CHECK_FALSE(extract::disambiguate_sense(occ, graphs[0], t.lexicon, &empty));
    CHECK_THROWS_AS(extract::disambiguate_sense(occ, graphs[0], t.lexicon, nullptr), Error);
  }

  TEST_CASE("network edge weight counts supporting parse edges") {
    const std::vector<extract::Pattern> patterns{{{extract::PatternElement::Kind::Pos, "N"}},
                                                 {{extract::PatternElement::Kind::Pos, "A"}}};
    std::vector<ling::ParseGraph> doc;
    for (std::size_t s = 0; s < 3; ++s) {
      ling::ParseGraph g;
      g.doc_id = "d";
      g.sentence_index = s;
      g.nodes = {synthetic("fast", "A", 0), synthetic("engine", "N", 1), synthetic("runs", "V", 2)};
      g.edges = {{"attr", 1, 0, "attr1"}, {"subj", 2, 1, "subj1"}};
      doc.push_back(g);
    }
    const lex::Lexicon empty_lexicon;
    TermCandidate fast{"tf", {"fast_x"}, "fast", 3, {"d"}, 1, TermStatus::Accepted};
    TermCandidate engine{"te", {"engine_x"}, "engine", 3, {"d"}, 1, TermStatus::Accepted};

    const auto net = extract::build_network({doc}, empty_lexicon, {fast, engine}, patterns);
    CHECK(net.nodes.size() == 2);
    CHECK(net.edges.size() == 1);
    CHECK(net.weight({"attr", "te", "tf"}) == 3);
    CHECK(extract::format_network(net) == "attr\tte\ttf\t3\n");
    CHECK(net.nodes.at("te").provenance.size() == 3);

    fast.status = TermStatus::Rejected;
    const auto gated = extract::build_network({doc}, empty_lexicon, {fast, engine}, patterns);
    CHECK(gated.edges.empty());
    CHECK(gated.nodes.size() == 1);
    CHECK(extract::build_network({doc}, empty_lexicon, {}, patterns).nodes.empty());
  }

  TEST_CASE("network on the fixture corpus is sound and complete") {
    const auto docs = fixture_parses();
    auto terms = extract::extract_terms(docs, toy().lexicon, toy().patterns);
    testing::Rng rng(41);
    for (auto& t : terms) t.status = testing::coin(rng, 0.7) ? TermStatus::Accepted : TermStatus::Rejected;
    const auto net = extract::build_network(docs, toy().lexicon, terms, toy().patterns);

    std::map<std::string, const TermCandidate*> by_id;
    for (const auto& t : terms) by_id[t.term_id] = &t;
    for (const auto& [id, node] : net.nodes) CHECK(by_id.at(id)->status == TermStatus::Accepted);

    // Recount every supporting edge from scratch.
    std::map<extract::NetworkEdgeKey, std::size_t> recount;
    for (const auto& doc : docs)
      for (const auto& g : doc) {
        std::vector<std::pair<std::string, extract::Occurrence>> occs;
        for (const auto& o : extract::find_occurrences(g, toy().lexicon, toy().patterns)) {
          const auto id = extract::term_id_for(o.lemma_sequence);
          if (by_id.count(id) && by_id.at(id)->status == TermStatus::Accepted) occs.emplace_back(id, o);
        }
        for (const auto& e : g.edges) {
          std::set<std::pair<std::string, std::string>> pairs;
          for (const auto& [h, oh] : occs)
            for (const auto& [d, od] : occs)
              if (h != d && e.head >= oh.start && e.head < oh.start + oh.length && e.dep >= od.start &&
                  e.dep < od.start + od.length)
                pairs.emplace(h, d);
          for (const auto& [h, d] : pairs) ++recount[{e.relation, h, d}];
        }
      }
    CHECK(recount.size() == net.edges.size());
    for (const auto& [key, n] : recount) CHECK(net.weight(key) == n);
    for (const auto& [key, support] : net.edges) {
      CHECK(!support.empty());
      CHECK(key.source != key.target);
    }
  }

  TEST_CASE("promotion input coalesces equal surfaces") {
    extract::SemanticNetwork net;
    net.nodes["t1"] = {"Fast", {{"d", 0}}};
    net.nodes["t2"] = {"fast", {{"d", 1}}};
    net.nodes["t3"] = {"engine", {{"d", 0}}};
    net.edges[{"attr", "t3", "t1"}] = {{"d", 0, 1, 0}};
    net.edges[{"attr", "t3", "t2"}] = {{"d", 1, 1, 0}};
    net.edges[{"rel", "t1", "t2"}] = {{"d", 1, 1, 0}};
    std::vector<onto::PromotionNode> nodes;
    std::vector<onto::PromotionEdge> edges;
    extract::to_promotion_input(net, nodes, edges);
    REQUIRE(nodes.size() == 2);
    CHECK(nodes[0].provenance.size() == 2);
    REQUIRE(edges.size() == 1);
    CHECK(edges[0].label == "attr");
    CHECK(edges[0].source == "engine");
  }
}
