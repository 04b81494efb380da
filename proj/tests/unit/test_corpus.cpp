#include <doctest.h>

#include <httplib.h>

#include <thread>

#include "ikon/corpus.hpp"
#include "ikon/error.hpp"
#include "ikon/hash.hpp"
#include "support.hpp"

using namespace ikon;
using corpus::Document;
namespace fs = std::filesystem;

namespace {

Document doc(const std::string& body) {
  Document d;
  d.doc_id = corpus::document_id_for(body);
  d.uri = "mem:" + d.doc_id;
  d.body = body;
  return d;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::NotFound;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("empty directory gives no documents") {
    testing::TempDir dir;
    CHECK(corpus::ingest_directory(dir.path()).empty());
  }

  TEST_CASE("one file becomes one document") {
    testing::TempDir dir;
    testing::write_text(dir / "a.txt", "Ontology engineering\nbody text");
    const auto docs = corpus::ingest_directory(dir.path());
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].body == "Ontology engineering\nbody text");
    CHECK(docs[0].title == "Ontology engineering");
    CHECK(docs[0].doc_id == "d" + sha256_hex(docs[0].body).substr(0, 16));
    CHECK(docs[0].uri == (dir / "a.txt").string());
  }

  TEST_CASE("byte-identical files are ingested once, keeping the first path") {
    testing::TempDir dir;
    testing::write_text(dir / "b.txt", "same");
    testing::write_text(dir / "a.txt", "same");
    testing::write_text(dir / "sub/c.txt", "other");
    const auto docs = corpus::ingest_directory(dir.path());
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].uri == (dir / "a.txt").string());
  }

  TEST_CASE("empty and undecodable sources") {
    testing::TempDir dir;
    testing::write_text(dir / "blank.txt", "  \n\t");
    CHECK(code_of([&] { corpus::ingest_directory(dir.path()); }) == ErrorCode::EmptyDocument);
    testing::TempDir bad;
    testing::write_text(bad / "x.txt", std::string("caf\xe9", 4));
    CHECK(code_of([&] { corpus::ingest_directory(bad.path()); }) == ErrorCode::UnreadableSource);
    CHECK(code_of([&] { corpus::ingest_directory(bad / "missing"); }) == ErrorCode::UnreadableSource);
  }

  TEST_CASE("ingestion is idempotent") {
    const auto src = testing::fixture_dir() / "toy" / "corpus";
    const std::set<std::string> seeds{"database", "ontology"};
    const auto a = corpus::format_manifest(corpus::select_corpus(corpus::ingest_directory(src), seeds, 0.0));
    const auto b = corpus::format_manifest(corpus::select_corpus(corpus::ingest_directory(src), seeds, 0.0));
    CHECK(a == b);
  }

  TEST_CASE("relevance is seed coverage") {
    const std::set<std::string> seeds{"ontology", "graph", "lexeme", "corpus"};
    CHECK(corpus::score_relevance(doc("nothing relevant here"), seeds) == 0.0);
    CHECK(corpus::score_relevance(doc("corpus, Lexeme; GRAPH. ontology!"), seeds) == 1.0);
    CHECK(corpus::score_relevance(doc("ontology ontology graph"), seeds) == 0.5);
    // whole-token matching only
    CHECK(corpus::score_relevance(doc("ontologygraph corpora"), seeds) == 0.0);
    // multiword seeds need a contiguous run
    CHECK(corpus::score_relevance(doc("the search engine"), {"search engine"}) == 1.0);
    CHECK(corpus::score_relevance(doc("search the engine"), {"search engine"}) == 0.0);
    CHECK_THROWS_AS(corpus::score_relevance(doc("x"), {}), std::invalid_argument);
  }

  TEST_CASE("selection filters and orders by score then id") {
    const std::set<std::string> seeds{"a", "b", "c", "d"};
    const std::vector<Document> docs{doc("a"), doc("a b"), doc("a b c"), doc("b a")};
    const auto m = corpus::select_corpus(docs, seeds, 0.5, "p");
    REQUIRE(m.entries.size() == 3);
    CHECK(m.entries[0].relevance == 0.75);
    CHECK(m.entries[0].doc_id == docs[2].doc_id);
    const auto lo = std::min(docs[1].doc_id, docs[3].doc_id);
    CHECK(m.entries[1].doc_id == lo);
    CHECK(m.entries[1].relevance == 0.5);

    CHECK(corpus::select_corpus(docs, seeds, 0.0).entries.size() == 4);
    CHECK(corpus::select_corpus(docs, seeds, 1.0).entries.empty());
  }

  TEST_CASE("raising the threshold never adds documents") {
    testing::Rng rng(5);
    const std::vector<std::string> words{"a", "b", "c", "d", "e", "f"};
    const std::set<std::string> seeds{"a", "b", "c", "d", "e"};
    for (int round = 0; round < 50; ++round) {
      std::vector<Document> docs;
      for (int i = 0; i < 8; ++i) {
        std::string body;
        for (std::size_t n = testing::uniform(rng, 1, 6); n > 0; --n) body += words[testing::uniform(rng, 0, 5)] + " ";
        docs.push_back(doc(body + std::to_string(i)));
      }
      std::set<std::string> prev;
      for (double t = 1.0; t >= -1e-9; t -= 0.1) {
        std::set<std::string> cur;
        for (const auto& e : corpus::select_corpus(docs, seeds, std::max(0.0, t)).entries) cur.insert(e.doc_id);
        CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
        prev = cur;
      }
    }
  }

  TEST_CASE("corpus store round trip") {
    testing::TempDir dir;
    const std::vector<Document> docs{doc("first body\nline"), doc("second\tbody")};
    auto m = corpus::select_corpus(docs, {"body"}, 0.0, "p");
    m.entries[0].title = "tab\there";
    corpus::write_corpus(dir.path(), m, docs);
    const auto back = corpus::read_manifest(dir / "manifest.tsv");
    REQUIRE(back.entries.size() == 2);
    CHECK(back.entries[0].doc_id == m.entries[0].doc_id);
    CHECK(back.entries[0].title == "tab here");
    CHECK(back.entries[1].sha256 == m.entries[1].sha256);
    CHECK(corpus::read_body(dir.path(), m.entries[1].doc_id) == corpus::read_body(dir.path(), m.entries[1].doc_id));
    for (const auto& e : back.entries) CHECK(sha256_hex(corpus::read_body(dir.path(), e.doc_id)) == e.sha256);
    CHECK(code_of([&] { corpus::read_body(dir.path(), "dnope"); }) == ErrorCode::MissingDocument);
    const auto line = testing::read_text(dir / "manifest.tsv");
    CHECK(line.find("\t1.0000\t") != std::string::npos);
  }

  TEST_CASE("seed file ignores comments and blanks") {
    testing::TempDir dir;
    testing::write_text(dir / "seeds.txt", "# seeds\ndatabase\n\n  search engine  \n");
    CHECK(corpus::read_seed_terms(dir / "seeds.txt") == std::set<std::string>{"database", "search engine"});
  }

  TEST_CASE("html stripping") {
    CHECK(corpus::strip_html("<p>Hello <b>world</b></p><script>var x=1;</script>  <style>p{}</style>end") ==
          "Hello world end");
    CHECK(corpus::strip_html("plain") == "plain");
  }

  TEST_CASE("urls through a fetcher") {
    const auto docs = corpus::ingest_urls({"u1", "u2", "u3"}, [](const std::string& u) {
      return u == "u3" ? std::string("body one") : "body " + u;
    });
    CHECK(docs.size() == 3);
    CHECK(code_of([] {
            corpus::ingest_urls({"u"}, [](const std::string&) -> std::string {
              throw Error(ErrorCode::UnreadableSource, "u");
            });
          }) == ErrorCode::UnreadableSource);
  }

  TEST_CASE("http fetch strips markup from html responses") {
    httplib::Server srv;
    srv.Get("/page", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("<html><body><h1>Ontology</h1><p>graph</p></body></html>", "text/html");
    });
    srv.Get("/plain", [](const httplib::Request&, httplib::Response& res) { res.set_content("a <b> c", "text/plain"); });
    const int port = srv.bind_to_any_port("127.0.0.1");
    std::thread t([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();
    const std::string base = "http://127.0.0.1:" + std::to_string(port);
    CHECK(corpus::http_fetch(base + "/page") == "Ontology graph");
    CHECK(corpus::http_fetch(base + "/plain") == "a <b> c");
    CHECK(code_of([&] { corpus::http_fetch(base + "/missing"); }) == ErrorCode::UnreadableSource);
    CHECK(code_of([] { corpus::http_fetch("ftp://example/x"); }) == ErrorCode::UnreadableSource);
    srv.stop();
    t.join();
  }
}
