#include <doctest.h>

#include <httplib.h>
#include <json.hpp>
#include <thread>

#include "ikon/http_api.hpp"
#include "support.hpp"

using namespace ikon;
using Json = nlohmann::json;

namespace {

// A workspace and server on an ephemeral port, torn down with the fixture.
class Running {
 public:
  explicit Running(std::filesystem::path ui = {})
      : ws_(root_.path(), [] { return std::string("2024-01-01T00:00:00Z"); }), server_(ws_, std::move(ui)) {
    port_ = server_.bind("127.0.0.1", 0);
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(30, 0);
    for (int i = 0; i < 100 && !client_->Get("/library"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ~Running() {
    server_.stop();
    thread_.join();
  }

  httplib::Client& http() { return *client_; }
  pipeline::Workspace& ws() { return ws_; }
  const testing::TempDir& root() const { return root_; }

  std::pair<int, Json> get(const std::string& path) { return decode(client_->Get(path)); }
  std::pair<int, Json> post(const std::string& path, const Json& body = Json::object(), const httplib::Headers& h = {}) {
    return decode(client_->Post(path, h, body.dump(), "application/json"));
  }
  std::pair<int, Json> patch(const std::string& path, const Json& body, const httplib::Headers& h = {}) {
    return decode(client_->Patch(path, h, body.dump(), "application/json"));
  }

  // creates project "p" over the toy fixture and runs it up to `last`
  std::uint64_t project_through(int last) {
    auto [code, body] = post("/projects", Json{{"id", "p"}, {"domain", "toy"}, {"config", to_json(testing::toy_config())}});
    REQUIRE(code == 201);
    auto version = body["version"].get<std::uint64_t>();
    for (int i = 1; i <= last; ++i) {
      auto [c, b] = post("/projects/p/stages/S" + std::to_string(i) + "/run", Json{{"version", version}});
      REQUIRE(c == 200);
      version = b["version"].get<std::uint64_t>();
    }
    return version;
  }

 private:
  static std::pair<int, Json> decode(const httplib::Result& r) {
    REQUIRE(r);
    Json j = r->body.empty() ? Json() : Json::parse(r->body, nullptr, false);
    return {r->status, j};
  }

  testing::TempDir root_;
  pipeline::Workspace ws_;
  api::Server server_;
  int port_ = -1;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace

TEST_SUITE("http") {
  TEST_CASE("error codes map to statuses") {
    CHECK(api::http_status(ErrorCode::UnknownProject) == 404);
    CHECK(api::http_status(ErrorCode::UnknownConcept) == 404);
    CHECK(api::http_status(ErrorCode::StaleVersion) == 409);
    CHECK(api::http_status(ErrorCode::PrerequisiteNotMet) == 409);
    CHECK(api::http_status(ErrorCode::AlreadyDone) == 409);
    CHECK(api::http_status(ErrorCode::DuplicateProject) == 409);
    CHECK(api::http_status(ErrorCode::InvalidRelation) == 422);
    CHECK(api::http_status(ErrorCode::LabelCollision) == 422);
    CHECK(api::http_status(ErrorCode::InvalidConfig) == 422);
    CHECK(api::http_status(ErrorCode::InvalidEdge) == 422);
    CHECK(api::http_status(ErrorCode::StageFailure) == 500);
  }

  TEST_CASE("project lifecycle over HTTP") {
    Running srv;
    auto [c0, list0] = srv.get("/projects");
    CHECK(c0 == 200);
    CHECK(list0["projects"].empty());

    auto config = to_json(testing::toy_config());
    auto [c1, created] = srv.post("/projects", Json{{"id", "p"}, {"domain", "toy"}, {"config", config}});
    CHECK(c1 == 201);
    CHECK(created["version"] == 1);
    CHECK(created["project"]["runnable"] == Json::array({"S1"}));
    CHECK(srv.post("/projects", Json{{"id", "p"}, {"domain", "toy"}, {"config", config}}).first == 409);
    auto bad = config;
    bad["threshold"] = 3.0;
    auto [c2, e2] = srv.post("/projects", Json{{"id", "q"}, {"domain", "toy"}, {"config", bad}});
    CHECK(c2 == 422);
    CHECK(e2["error"] == "InvalidConfig");
    CHECK(e2["subject"] == "threshold");
    CHECK(srv.post("/projects", Json{{"id", "q"}, {"domain", "toy"}}).first == 422);
    CHECK(srv.http().Post("/projects", "{not json", "application/json")->status == 400);

    CHECK(srv.get("/projects/nobody").first == 404);
    CHECK(srv.post("/projects/p/stages/S2/run").first == 409);
    CHECK(srv.post("/projects/p/stages/S9/run").first == 404);

    auto [c3, r1] = srv.post("/projects/p/stages/S1/run", Json{{"version", 1}});
    CHECK(c3 == 200);
    CHECK(r1["version"] == 3);
    CHECK(r1["project"]["stages"][0]["status"] == "done");
    // stale expected version, in the body or as If-Match
    CHECK(srv.post("/projects/p/stages/S2/run", Json{{"version", 1}}).first == 409);
    CHECK(srv.post("/projects/p/stages/S2/run", Json::object(), {{"If-Match", "\"1\""}}).first == 409);
    CHECK(srv.post("/projects/p/stages/S2/run", Json::object(), {{"If-Match", "x"}}).first == 400);
    CHECK(srv.post("/projects/p/stages/S2/run", Json{{"version", "three"}}).first == 400);
    CHECK(srv.post("/projects/p/stages/S2/run", Json::object(), {{"If-Match", "3"}}).first == 200);
    CHECK(srv.post("/projects/p/stages/S3/run").first == 200);

    auto [c4, detail] = srv.get("/projects/p");
    CHECK(c4 == 200);
    CHECK(detail["rollback_edges"] == Json::array({"S2toS1", "S3toS2"}));
    CHECK(detail["runnable"] == Json::array({"S4"}));
    CHECK(detail["events_tail"].size() == 7);

    CHECK(srv.post("/projects/p/rollback", Json{{"edge", "S5toS1"}, {"reason", "x"}}).first == 422);
    auto [c5, rb] = srv.post("/projects/p/rollback", Json{{"edge", "S3toS2"}, {"reason", "rules edited"}});
    CHECK(c5 == 200);
    CHECK(rb["project"]["stages"][1]["status"] == "needs_repeat");
    CHECK(rb["project"]["stages"][1]["stale"] == true);
    CHECK(rb["project"]["stages"][0]["status"] == "done");
    CHECK(srv.post("/projects/p/stages/S2/run").first == 200);

    auto [c6, list] = srv.get("/projects");
    CHECK(c6 == 200);
    CHECK(list["projects"].size() == 1);
  }

  TEST_CASE("a failing stage answers 500 and is recorded") {
    Running srv;
    auto config = to_json(testing::toy_config(1.0));
    REQUIRE(srv.post("/projects", Json{{"id", "p"}, {"domain", "toy"}, {"config", config}}).first == 201);
    auto [code, err] = srv.post("/projects/p/stages/S1/run");
    CHECK(code == 500);
    CHECK(err["error"] == "StageFailure");
    CHECK(srv.get("/projects/p").second["stages"][0]["status"] == "failed");
  }

  TEST_CASE("term curation") {
    Running srv;
    auto version = srv.project_through(3);
    auto [c1, all] = srv.get("/projects/p/terms");
    CHECK(c1 == 200);
    REQUIRE(all["terms"].size() > 10);
    CHECK(all["terms"][0]["surface"] == "database");
    CHECK(all["version"] == version);
    CHECK(srv.get("/projects/p/terms?status=bogus").first == 422);

    const auto tid = all["terms"][1]["term_id"].get<std::string>();
    CHECK(srv.post("/projects/p/terms/tnothing/decision", Json{{"status", "accepted"}}).first == 404);
    CHECK(srv.post("/projects/p/terms/" + tid + "/decision", Json{{"status", "maybe"}}).first == 422);
    auto [c2, d] = srv.post("/projects/p/terms/" + tid + "/decision", Json{{"status", "rejected"}, {"version", version}});
    CHECK(c2 == 200);
    CHECK(d["version"] == version + 1);
    CHECK(srv.post("/projects/p/terms/" + tid + "/decision", Json{{"status", "accepted"}, {"version", version}}).first ==
          409);

    auto [c3, rejected] = srv.get("/projects/p/terms?status=rejected");
    CHECK(c3 == 200);
    REQUIRE(rejected["terms"].size() == 1);
    CHECK(rejected["terms"][0]["term_id"] == tid);
  }

  TEST_CASE("ontology editing, cycles and merge") {
    Running srv;
    CHECK(srv.get("/projects/p/ontology").first == 404);
    auto version = srv.project_through(4);
    auto [c1, onto] = srv.get("/projects/p/ontology");
    CHECK(c1 == 200);
    const auto before = onto["graph"];
    REQUIRE_FALSE(before["concepts"].empty());

    auto [c2, added] = srv.post("/projects/p/ontology/concepts",
                                Json{{"preferred_label", "data warehouse"}, {"alt_labels", {"DWH"}}, {"version", version}});
    CHECK(c2 == 201);
    CHECK(added["concept"]["id"] == "c-data%20warehouse");
    version = added["version"].get<std::uint64_t>();
    // same normalized label, hence the same derived id
    CHECK(srv.post("/projects/p/ontology/concepts", Json{{"preferred_label", "Data Warehouse "}}).second["error"] ==
          "DuplicateId");
    CHECK(srv.post("/projects/p/ontology/concepts", Json{{"id", "c-x"}, {"preferred_label", "DATABASE"}}).first == 422);
    CHECK(srv.post("/projects/p/ontology/concepts", Json{{"preferred_label", 5}}).first == 400);

    // ids contain '%', so they are percent-encoded once more in the path
    CHECK(srv.patch("/projects/p/ontology/concepts/c-data%20warehouse", Json{{"definition", "x"}}).first == 404);
    auto [c3, p1] = srv.patch("/projects/p/ontology/concepts/c-data%2520warehouse",
                              Json{{"add_relation", {{"type", "is_a"}, {"target", "c-database"}}}, {"version", version}});
    CHECK(c3 == 200);
    version = p1["version"].get<std::uint64_t>();

    // closing a cycle is rejected and the graph is unchanged
    const auto graph_before = srv.get("/projects/p/ontology").second["graph"];
    auto [c4, e4] = srv.patch("/projects/p/ontology/concepts/c-database",
                              Json{{"add_relation", {{"type", "is_a"}, {"target", "c-data%20warehouse"}}}});
    CHECK(c4 == 422);
    CHECK(e4["error"] == "InvalidRelation");
    auto [c5, after] = srv.get("/projects/p/ontology");
    CHECK(after["graph"] == graph_before);
    CHECK(after["version"] == version);

    CHECK(srv.patch("/projects/p/ontology/concepts/c-nothing", Json{{"definition", "x"}}).first == 404);
    CHECK(srv.patch("/projects/p/ontology/concepts/c-database", Json{{"definition", "x"}}, {{"If-Match", "1"}}).first ==
          409);
    CHECK(srv.patch("/projects/p/ontology/concepts/c-database", Json{{"add_relation", {{"type", "likes"}}}}).first == 422);

    // merge with the library needs a published graph
    CHECK(srv.post("/projects/p/ontology/merge", Json{{"library_ref", "toy"}}).first == 404);
    CHECK(srv.post("/projects/p/ontology/merge", Json::object()).first == 422);
    REQUIRE(srv.post("/projects/p/stages/S5/run").first == 200);
    auto [c6, lib] = srv.get("/library");
    CHECK(c6 == 200);
    REQUIRE(lib["records"].size() == 1);
    CHECK(lib["records"][0]["domain"] == "toy");
    const auto published = lib["records"][0]["concept_count"].get<std::size_t>();
    auto [c7, merged] = srv.post("/projects/p/ontology/merge", Json{{"library_ref", "toy@1"}});
    CHECK(c7 == 200);
    CHECK(merged["dropped"].empty());
    CHECK(merged["concept_count"] == published);
    CHECK(merged["project"]["stages"][4]["status"] == "needs_repeat");
  }

  TEST_CASE("search") {
    Running srv;
    srv.project_through(5);
    auto [code, hits] = srv.get("/projects/p/search?q=relational%20database&k=3");
    CHECK(code == 200);
    CHECK(hits["query"] == "relational database");
    CHECK(hits["documents"].size() == 3);
    CHECK(hits["documents"][0]["kind"] == "document");
    CHECK(hits["documents"][0]["score"].get<double>() >= hits["documents"][1]["score"].get<double>());
    CHECK_FALSE(hits["labels"].empty());
    CHECK(srv.get("/projects/p/search?q=x&k=0").first == 400);
    CHECK(srv.get("/projects/p/search?q=x&k=abc").first == 400);
    CHECK(srv.get("/projects/p/search?q=zzzz").second["documents"].empty());
  }

  TEST_CASE("static UI files are served under /ui") {
    testing::TempDir ui;
    testing::write_text(ui / "index.html", "<!doctype html><title>ikon</title>");
    testing::write_text(ui / "assets" / "app.js", "console.log(1);");
    Running srv(ui.path());
    auto page = srv.http().Get("/ui/index.html");
    REQUIRE(page);
    CHECK(page->status == 200);
    CHECK(page->body == "<!doctype html><title>ikon</title>");
    CHECK(page->get_header_value("Content-Type").find("text/html") != std::string::npos);
    auto js = srv.http().Get("/ui/assets/app.js");
    REQUIRE(js);
    CHECK(js->body == "console.log(1);");
    CHECK(srv.http().Get("/ui/")->status == 200);
    CHECK(srv.http().Get("/ui/missing.js")->status == 404);
  }
}
