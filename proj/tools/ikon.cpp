// ikon: command-line front end to a project workspace.
//
// Exit codes: 0 success, 1 user error, 2 stage failure.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <thread>

#include "ikon/error.hpp"
#include "ikon/http_api.hpp"
#include "ikon/text.hpp"
#include "ikon/workspace.hpp"

namespace {

using namespace ikon;
using pipeline::Stage;
using pipeline::StageStatus;

void print_status(const pipeline::ProjectState& s) {
  std::cout << "project " << s.project_id << "  domain " << s.domain << "  version " << s.version << '\n';
  for (const Stage st : pipeline::kStages) {
    const auto& r = s.at(st);
    std::cout << "  " << pipeline::to_string(st) << "  " << pipeline::to_string(r.status);
    if (!r.finished_at.empty()) std::cout << "  " << r.finished_at;
    if (!r.artifacts.empty()) std::cout << "  artifacts=" << r.artifacts.size();
    if (r.stale) std::cout << "  stale";
    if (!r.diagnostic.empty()) std::cout << "  (" << r.diagnostic << ")";
    std::cout << '\n';
  }
}

api::Server* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ontology learning pipeline over a text corpus"};
  app.require_subcommand(1);
  std::string root = ".";
  app.add_option("--root", root, "Workspace directory (projects/ and library/)");

  std::string domain, project_id, stage_arg, edge_arg, reason, owl_path, query, term_id, decision, status_filter;
  std::string ui_dir, host = "127.0.0.1";
  int port = 8080;
  std::size_t k = 10;
  bool as_json = false;
  pipeline::ProjectConfig cfg;

  auto* cmd_new = app.add_subcommand("new", "Create a project");
  cmd_new->add_option("domain", domain, "Domain name")->required();
  cmd_new->add_option("--id", project_id, "Project id (defaults to the domain name)");
  cmd_new->add_option("--lexicon", cfg.lexicon, "Lexicon file")->required();
  cmd_new->add_option("--rules", cfg.rules, "Constraint rule file")->required();
  cmd_new->add_option("--seeds", cfg.seeds, "Seed term file")->required();
  cmd_new->add_option("--threshold", cfg.threshold, "Relevance threshold in [0, 1]")->required();
  cmd_new->add_option("--sources", cfg.sources, "Directory of source documents")->required();
  cmd_new->add_option("--seed-ontology", cfg.seed_ontology, "Seed ontology (N-Triples)");
  cmd_new->add_option("--accept-min-frequency", cfg.accept_min_frequency,
                      "Undecided terms at least this frequent are accepted at S4 (0 = off)");
  cmd_new->add_option("--threads", cfg.threads, "Worker threads for S2/S3");

  auto* cmd_run = app.add_subcommand("run", "Run a stage, or every runnable stage in order");
  cmd_run->add_option("project", project_id)->required();
  cmd_run->add_option("stage", stage_arg, "S1..S5 or all")->required();

  auto* cmd_rollback = app.add_subcommand("rollback", "Return to an earlier stage");
  cmd_rollback->add_option("project", project_id)->required();
  cmd_rollback->add_option("edge", edge_arg, "S2toS1 or S3toS2")->required();
  cmd_rollback->add_option("--reason", reason)->required();

  auto* cmd_status = app.add_subcommand("status", "Show stage statuses");
  cmd_status->add_option("project", project_id)->required();
  cmd_status->add_flag("--json", as_json);

  auto* cmd_export = app.add_subcommand("export", "Write the project ontology");
  cmd_export->add_option("project", project_id)->required();
  cmd_export->add_option("--owl", owl_path, "Output N-Triples file")->required();

  auto* cmd_search = app.add_subcommand("search", "Search documents, terms and concepts");
  cmd_search->add_option("project", project_id)->required();
  cmd_search->add_option("query", query)->required();
  cmd_search->add_option("-k", k, "Maximum hits per kind")->check(CLI::PositiveNumber);

  auto* cmd_terms = app.add_subcommand("terms", "List term candidates in display order");
  cmd_terms->add_option("project", project_id)->required();
  cmd_terms->add_option("--status", status_filter, "candidate, accepted or rejected");

  auto* cmd_decide = app.add_subcommand("decide", "Accept or reject a term");
  cmd_decide->add_option("project", project_id)->required();
  cmd_decide->add_option("term", term_id)->required();
  cmd_decide->add_option("status", decision, "accepted or rejected")->required();

  auto* cmd_serve = app.add_subcommand("serve", "Serve the HTTP API");
  cmd_serve->add_option("--host", host);
  cmd_serve->add_option("--port", port, "0 picks a free port")->check(CLI::Range(0, 65535));
  cmd_serve->add_option("--ui", ui_dir, "Static UI directory served under /ui");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    pipeline::Workspace ws(root);

    if (*cmd_new) {
      const std::string id = project_id.empty() ? domain : project_id;
      print_status(ws.create_project(id, domain, cfg)->snapshot());
    } else if (*cmd_run) {
      if (stage_arg == "all") {
        for (const Stage st : pipeline::kStages) {
          if (ws.open_project(project_id)->snapshot().at(st).status == StageStatus::Done) continue;
          ws.run_stage(project_id, st);
          std::cout << pipeline::to_string(st) << " done\n";
        }
      } else {
        const auto st = pipeline::stage_from_string(stage_arg);
        if (!st) throw Error(ErrorCode::NotFound, stage_arg, "stage must be S1..S5 or all");
        ws.run_stage(project_id, *st);
        std::cout << stage_arg << " done\n";
      }
      print_status(ws.open_project(project_id)->snapshot());
    } else if (*cmd_rollback) {
      const auto edge = pipeline::rollback_edge_from_string(edge_arg);
      if (!edge) throw Error(ErrorCode::InvalidEdge, edge_arg);
      print_status(ws.rollback(project_id, edge->first, edge->second, reason));
    } else if (*cmd_status) {
      const auto s = ws.open_project(project_id)->snapshot();
      if (as_json)
        std::cout << pipeline::to_json(s).dump(2) << '\n';
      else
        print_status(s);
    } else if (*cmd_export) {
      ws.export_owl(project_id, owl_path);
    } else if (*cmd_search) {
      const auto found = ws.search(project_id, query, k);
      for (const auto& h : found.documents)
        std::cout << "document\t" << h.target_id << '\t' << text::format_fixed(h.score, 6) << '\t'
                  << h.snippet.value_or("") << '\n';
      for (const auto& h : found.labels)
        std::cout << search::to_string(h.kind) << '\t' << h.target_id << '\t' << text::format_fixed(h.score, 6) << '\t'
                  << h.snippet.value_or("") << '\n';
    } else if (*cmd_terms) {
      for (const auto& t : ws.terms(project_id))
        if (status_filter.empty() || extract::to_string(t.status) == status_filter)
          std::cout << t.term_id << '\t' << t.surface << '\t' << t.frequency << '\t' << t.doc_count << '\t'
                    << extract::to_string(t.status) << '\n';
    } else if (*cmd_decide) {
      print_status(ws.decide_term(project_id, term_id, decision));
    } else if (*cmd_serve) {
      api::Server server(ws, ui_dir);
      const int bound = server.bind(host, port);
      if (bound < 0) throw Error(ErrorCode::InvalidConfig, "port", "cannot bind " + host + ":" + std::to_string(port));
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on http://" << host << ':' << bound << '\n';
      server.listen();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "ikon: " << e.what() << '\n';
    return e.code() == ErrorCode::StageFailure ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "ikon: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
