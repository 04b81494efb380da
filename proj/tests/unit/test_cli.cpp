#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "ikon/ontology.hpp"
#include "support.hpp"

using namespace ikon;
using testing::run_cli;
using testing::shell_quote;

namespace {

std::string new_args(const testing::TempDir& root, double threshold, const std::string& extra = {}) {
  const auto c = testing::toy_config(threshold);
  std::ostringstream a;
  a << "--root " << shell_quote(root.path().string()) << " new toy --lexicon " << shell_quote(c.lexicon) << " --rules "
    << shell_quote(c.rules) << " --seeds " << shell_quote(c.seeds) << " --sources " << shell_quote(c.sources)
    << " --threshold " << threshold << ' ' << extra;
  return a.str();
}

std::string at(const testing::TempDir& root) { return "--root " + shell_quote(root.path().string()) + ' '; }

std::vector<std::vector<std::string>> tsv_rows(const std::string& out) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::istringstream l(line);
    std::string col;
    while (std::getline(l, col, '\t')) cols.push_back(col);
    rows.push_back(cols);
  }
  return rows;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 1") {
    testing::TempDir root;
    CHECK(run_cli("").exit_code == 1);
    CHECK(run_cli("frobnicate").exit_code == 1);
    CHECK(run_cli(at(root) + "status").exit_code == 1);
    CHECK(run_cli(at(root) + "status nobody").exit_code == 1);
    CHECK(run_cli(at(root) + "run nobody S1").exit_code == 1);
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli(new_args(root, 2.0)).exit_code == 1);
    CHECK(run_cli(at(root) + "serve --port 99999").exit_code == 1);
  }

  TEST_CASE("full run, status, terms, search and export") {
    testing::TempDir root;
    const auto created = run_cli(new_args(root, 0.2));
    REQUIRE(created.exit_code == 0);
    CHECK(created.out.find("S1  pending") != std::string::npos);
    CHECK(run_cli(new_args(root, 0.2)).exit_code == 1);  // duplicate

    CHECK(run_cli(at(root) + "run toy S2").exit_code == 1);
    CHECK(run_cli(at(root) + "run toy S7").exit_code == 1);
    const auto ran = run_cli(at(root) + "run toy all");
    REQUIRE(ran.exit_code == 0);
    CHECK(ran.out.find("S5 done") != std::string::npos);
    CHECK(run_cli(at(root) + "run toy S3").exit_code == 1);  // already done

    const auto status = run_cli(at(root) + "status toy --json");
    REQUIRE(status.exit_code == 0);
    const auto j = nlohmann::json::parse(status.out);
    CHECK(j["project_id"] == "toy");
    REQUIRE(j["stages"].size() == 5);
    for (const auto& st : j["stages"]) CHECK(st["status"] == "done");

    const auto terms = run_cli(at(root) + "terms toy");
    REQUIRE(terms.exit_code == 0);
    const auto rows = tsv_rows(terms.out);
    REQUIRE(rows.size() > 20);
    CHECK(rows[0][1] == "database");
    for (const auto& r : rows) CHECK(r.size() == 5);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stoul(rows[i - 1][2]) >= std::stoul(rows[i][2]));

    const auto hits = run_cli(at(root) + "search toy 'relational database' -k 2");
    REQUIRE(hits.exit_code == 0);
    const auto hit_rows = tsv_rows(hits.out);
    REQUIRE(hit_rows.size() >= 3);
    CHECK(hit_rows[0][0] == "document");
    CHECK(hit_rows[1][0] == "document");
    CHECK(hit_rows[2][0] != "document");

    const auto out = root / "toy.nt";
    REQUIRE(run_cli(at(root) + "export toy --owl " + shell_quote(out.string())).exit_code == 0);
    std::istringstream owl(testing::read_text(out));
    const auto g = onto::import_owl(owl);
    CHECK(g.concepts().size() > 10);
    CHECK(g.domain_name() == "toy");
  }

  TEST_CASE("curation and rollback through the CLI") {
    testing::TempDir root;
    REQUIRE(run_cli(new_args(root, 0.2, "--accept-min-frequency 0")).exit_code == 0);
    REQUIRE(run_cli(at(root) + "run toy S1").exit_code == 0);
    REQUIRE(run_cli(at(root) + "run toy S2").exit_code == 0);
    REQUIRE(run_cli(at(root) + "run toy S3").exit_code == 0);
    const auto rows = tsv_rows(run_cli(at(root) + "terms toy").out);
    REQUIRE(rows.size() > 3);
    CHECK(run_cli(at(root) + "decide toy " + rows[0][0] + " accepted").exit_code == 0);
    CHECK(run_cli(at(root) + "decide toy " + rows[1][0] + " accepted").exit_code == 0);
    CHECK(run_cli(at(root) + "decide toy " + rows[2][0] + " rejected").exit_code == 0);
    CHECK(run_cli(at(root) + "decide toy tmissing accepted").exit_code == 1);
    CHECK(run_cli(at(root) + "decide toy " + rows[3][0] + " perhaps").exit_code == 1);
    CHECK(tsv_rows(run_cli(at(root) + "terms toy --status accepted").out).size() == 2);

    // with auto-acceptance off only the two accepted terms become concepts
    REQUIRE(run_cli(at(root) + "run toy S4").exit_code == 0);
    const auto out = root / "toy.nt";
    REQUIRE(run_cli(at(root) + "export toy --owl " + shell_quote(out.string())).exit_code == 0);
    std::istringstream owl(testing::read_text(out));
    const auto g = onto::import_owl(owl);
    CHECK(g.concepts().size() == 2);
    CHECK(g.find_by_label(rows[0][1]));
    CHECK(g.find_by_label(rows[1][1]));

    CHECK(run_cli(at(root) + "rollback toy S5toS1 --reason x").exit_code == 1);
    CHECK(run_cli(at(root) + "rollback toy S3toS2").exit_code == 1);  // reason is required
    const auto rb = run_cli(at(root) + "rollback toy S3toS2 --reason 'rules changed'");
    REQUIRE(rb.exit_code == 0);
    CHECK(rb.out.find("S2  needs_repeat") != std::string::npos);
    CHECK(rb.out.find("S1  done") != std::string::npos);
    CHECK(run_cli(at(root) + "export toy --owl " + shell_quote(out.string())).exit_code == 1);
  }

  TEST_CASE("a stage failure exits 2") {
    testing::TempDir root;
    REQUIRE(run_cli(new_args(root, 1.0)).exit_code == 0);
    CHECK(run_cli(at(root) + "run toy S1").exit_code == 2);
    CHECK(run_cli(at(root) + "run toy all").exit_code == 2);
    const auto s = nlohmann::json::parse(run_cli(at(root) + "status toy --json").out);
    CHECK(s["stages"][0]["status"] == "failed");
  }
}
