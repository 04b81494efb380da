#include "ikon/http_api.hpp"

#include <httplib.h>

#include <algorithm>
#include <tuple>

#include <json.hpp>

#include "ikon/error.hpp"
#include "ikon/text.hpp"

namespace ikon::api {

using Json = nlohmann::json;
using pipeline::Stage;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownProject:
    case ErrorCode::NotFound:
    case ErrorCode::UnknownConcept:
    case ErrorCode::MissingDocument:
      return 404;
    case ErrorCode::DuplicateProject:
    case ErrorCode::StaleVersion:
    case ErrorCode::PrerequisiteNotMet:
    case ErrorCode::AlreadyDone:
    case ErrorCode::VersionConflict:
      return 409;
    case ErrorCode::StageFailure:
    case ErrorCode::UnreadableSource:
      return 500;
    default:
      return 422;
  }
}

namespace {

struct BadRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json concept_json(const onto::Concept& c) {
  return Json{{"id", c.id},
              {"preferred_label", c.preferred_label},
              {"alt_labels", c.alt_labels},
              {"definition", c.definition ? Json(*c.definition) : Json(nullptr)}};
}

Json relation_json(const onto::ConceptRelation& r) {
  return Json{{"type", onto::to_string(r.type)}, {"label", r.label}, {"source", r.source}, {"target", r.target}};
}

Json graph_json(const onto::OntologyGraph& g) {
  Json concepts = Json::array(), relations = Json::array();
  for (const auto& [id, c] : g.concepts()) concepts.push_back(concept_json(c));
  for (const auto& r : g.relations()) relations.push_back(relation_json(r));
  return Json{{"graph_id", g.graph_id()},
              {"domain", g.domain_name()},
              {"version", g.version()},
              {"concepts", concepts},
              {"relations", relations}};
}

Json term_json(const extract::TermCandidate& t) {
  return Json{{"term_id", t.term_id},     {"surface", t.surface},     {"lemma_ids", t.lemma_sequence},
              {"frequency", t.frequency}, {"doc_count", t.doc_count}, {"status", extract::to_string(t.status)}};
}

Json hit_json(const search::SearchHit& h) {
  return Json{{"kind", search::to_string(h.kind)},
              {"target_id", h.target_id},
              {"score", h.score},
              {"snippet", h.snippet ? Json(*h.snippet) : Json(nullptr)}};
}

// Stages the API would currently accept a run for, and rollback edges it
// would accept, so a client can enable exactly those controls.
Json project_json(const pipeline::ProjectState& s, const std::vector<pipeline::Event>* events = nullptr) {
  Json j = pipeline::to_json(s);
  Json runnable = Json::array(), rollbacks = Json::array();
  for (const Stage st : pipeline::kStages) {
    try {
      pipeline::check_run(s, st);
      runnable.push_back(pipeline::to_string(st));
    } catch (const Error&) {
    }
  }
  for (const auto& [name, from, to] : {std::tuple{"S2toS1", Stage::S2, Stage::S1}, std::tuple{"S3toS2", Stage::S3, Stage::S2}}) {
    try {
      pipeline::check_rollback(s, from, to);
      rollbacks.push_back(name);
    } catch (const Error&) {
    }
  }
  j["runnable"] = runnable;
  j["rollback_edges"] = rollbacks;
  if (events) {
    Json tail = Json::array();
    const std::size_t from = events->size() > 20 ? events->size() - 20 : 0;
    for (std::size_t i = from; i < events->size(); ++i) tail.push_back(pipeline::to_json((*events)[i]));
    j["events_tail"] = tail;
  }
  return j;
}

Json body_of(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  Json j = Json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw BadRequest("request body must be a JSON object");
  return j;
}

std::optional<std::uint64_t> expected_version(const httplib::Request& req, const Json& body) {
  if (req.has_header("If-Match")) {
    std::string v = req.get_header_value("If-Match");
    v.erase(std::remove(v.begin(), v.end(), '"'), v.end());
    try {
      return std::stoull(v);
    } catch (const std::exception&) {
      throw BadRequest("If-Match must carry a project version");
    }
  }
  if (body.contains("version") && !body["version"].is_null()) {
    if (!body["version"].is_number_unsigned()) throw BadRequest("version must be a non-negative integer");
    return body["version"].get<std::uint64_t>();
  }
  return std::nullopt;
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const Json::exception&) {
    throw BadRequest(std::string("field '") + key + "' has the wrong type");
  }
}

onto::ConceptRelation relation_from(const Json& j) {
  if (!j.is_object()) throw BadRequest("relation must be an object");
  const auto type = onto::relation_type_from_string(get_or<std::string>(j, "type", ""));
  if (!type) throw Error(ErrorCode::InvalidRelation, get_or<std::string>(j, "type", ""), "unknown relation type");
  return onto::ConceptRelation{*type, get_or<std::string>(j, "label", ""), "", get_or<std::string>(j, "target", "")};
}

void send(httplib::Response& res, int status, const Json& j) {
  res.status = status;
  res.set_content(j.dump(), "application/json; charset=utf-8");
}

// Wraps a handler so library errors become JSON error responses.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send(res, http_status(e.code()),
           Json{{"error", to_string(e.code())}, {"subject", e.subject()}, {"message", e.what()}});
    } catch (const BadRequest& e) {
      send(res, 400, Json{{"error", "BadRequest"}, {"message", e.what()}});
    } catch (const std::exception& e) {
      send(res, 500, Json{{"error", "Internal"}, {"message", e.what()}});
    }
  };
}

Stage stage_param(const std::string& s) {
  const auto st = pipeline::stage_from_string(s);
  if (!st) throw Error(ErrorCode::NotFound, s, "no such stage");
  return *st;
}

}  // namespace

struct Server::Impl {
  pipeline::Workspace& ws;
  httplib::Server http;

  explicit Impl(pipeline::Workspace& w) : ws(w) {}

  Json state_reply(const pipeline::ProjectState& s) { return Json{{"version", s.version}, {"project", project_json(s)}}; }

  void routes() {
    http.Get("/projects", guarded([this](const httplib::Request&, httplib::Response& res) {
      Json list = Json::array();
      for (const auto& id : ws.project_ids()) list.push_back(project_json(ws.open_project(id)->snapshot()));
      send(res, 200, Json{{"projects", list}});
    }));

    http.Post("/projects", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const Json body = body_of(req);
      const std::string domain = get_or<std::string>(body, "domain", "");
      const std::string id = get_or<std::string>(body, "id", domain);
      if (!body.contains("config")) throw Error(ErrorCode::InvalidConfig, "config", "missing");
      const auto config = pipeline::config_from_json(body["config"]);
      const auto p = ws.create_project(id, domain, config);
      send(res, 201, state_reply(p->snapshot()));
    }));

    http.Get(R"(/projects/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto p = ws.open_project(req.matches[1]);
      const auto events = p->events();
      send(res, 200, project_json(p->snapshot(), &events));
    }));

    http.Post(R"(/projects/([^/]+)/stages/([^/]+)/run)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const Json body = body_of(req);
                const auto s = ws.run_stage(req.matches[1], stage_param(req.matches[2]), expected_version(req, body));
                send(res, 200, state_reply(s));
              }));

    http.Post(R"(/projects/([^/]+)/rollback)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const Json body = body_of(req);
      std::string edge = get_or<std::string>(body, "edge", "");
      if (edge.empty()) edge = get_or<std::string>(body, "from", "") + "to" + get_or<std::string>(body, "to", "");
      const auto parsed = pipeline::rollback_edge_from_string(edge);
      if (!parsed) throw Error(ErrorCode::InvalidEdge, edge);
      const auto s = ws.rollback(req.matches[1], parsed->first, parsed->second, get_or<std::string>(body, "reason", ""),
                                 expected_version(req, body));
      send(res, 200, state_reply(s));
    }));

    http.Get(R"(/projects/([^/]+)/terms)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::optional<extract::TermStatus> filter;
      if (req.has_param("status")) {
        filter = extract::term_status_from_string(req.get_param_value("status"));
        if (!filter) throw Error(ErrorCode::InvalidConfig, "status", "unknown term status");
      }
      const auto p = ws.open_project(req.matches[1]);
      const auto version = p->snapshot().version;
      Json terms = Json::array();
      for (const auto& t : ws.terms(req.matches[1]))
        if (!filter || t.status == *filter) terms.push_back(term_json(t));
      send(res, 200, Json{{"version", version}, {"terms", terms}});
    }));

    http.Post(R"(/projects/([^/]+)/terms/([^/]+)/decision)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const Json body = body_of(req);
                const auto s = ws.decide_term(req.matches[1], req.matches[2], get_or<std::string>(body, "status", ""),
                                              expected_version(req, body));
                send(res, 200, state_reply(s));
              }));

    http.Get(R"(/projects/([^/]+)/ontology)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto version = ws.open_project(req.matches[1])->snapshot().version;
      send(res, 200, Json{{"version", version}, {"graph", graph_json(ws.ontology(req.matches[1]))}});
    }));

    http.Post(R"(/projects/([^/]+)/ontology/concepts)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const Json body = body_of(req);
                onto::Concept c;
                c.id = get_or<std::string>(body, "id", "");
                c.preferred_label = get_or<std::string>(body, "preferred_label", "");
                c.alt_labels = get_or<std::set<std::string>>(body, "alt_labels", {});
                if (body.contains("definition") && !body["definition"].is_null())
                  c.definition = get_or<std::string>(body, "definition", "");
                auto [s, added] = ws.add_concept(req.matches[1], std::move(c), expected_version(req, body));
                Json out = state_reply(s);
                out["concept"] = concept_json(added);
                send(res, 201, out);
              }));

    http.Patch(R"(/projects/([^/]+)/ontology/concepts/([^/]+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const Json body = body_of(req);
                 pipeline::ConceptPatch patch;
                 if (body.contains("preferred_label")) patch.preferred_label = get_or<std::string>(body, "preferred_label", "");
                 if (body.contains("alt_labels")) patch.alt_labels = get_or<std::set<std::string>>(body, "alt_labels", {});
                 if (body.contains("definition"))
                   patch.definition = body["definition"].is_null()
                                          ? std::optional<std::string>{}
                                          : std::optional<std::string>{get_or<std::string>(body, "definition", "")};
                 auto relations = [&](const char* one, const char* many, std::vector<onto::ConceptRelation>& into) {
                   if (body.contains(one)) into.push_back(relation_from(body[one]));
                   if (body.contains(many)) {
                     if (!body[many].is_array()) throw BadRequest(std::string(many) + " must be an array");
                     for (const auto& r : body[many]) into.push_back(relation_from(r));
                   }
                 };
                 relations("add_relation", "add_relations", patch.add_relations);
                 relations("remove_relation", "remove_relations", patch.remove_relations);
                 const auto s = ws.patch_concept(req.matches[1], req.matches[2], patch, expected_version(req, body));
                 send(res, 200, state_reply(s));
               }));

    http.Post(R"(/projects/([^/]+)/ontology/merge)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const Json body = body_of(req);
                const std::string ref = get_or<std::string>(body, "library_ref", "");
                if (ref.empty()) throw Error(ErrorCode::InvalidConfig, "library_ref", "missing");
                auto [s, merged] = ws.merge_library(req.matches[1], ref, expected_version(req, body));
                Json dropped = Json::array();
                for (const auto& r : merged.dropped) dropped.push_back(relation_json(r));
                Json out = state_reply(s);
                out["dropped"] = dropped;
                out["concept_count"] = merged.graph.concepts().size();
                send(res, 200, out);
              }));

    http.Get(R"(/projects/([^/]+)/search)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string q = req.has_param("q") ? req.get_param_value("q") : "";
      std::size_t k = 10;
      if (req.has_param("k")) {
        try {
          k = std::stoul(req.get_param_value("k"));
        } catch (const std::exception&) {
          throw BadRequest("k must be a positive integer");
        }
        if (k == 0) throw BadRequest("k must be a positive integer");
      }
      const auto found = ws.search(req.matches[1], q, k);
      Json docs = Json::array(), labels = Json::array();
      for (const auto& h : found.documents) docs.push_back(hit_json(h));
      for (const auto& h : found.labels) labels.push_back(hit_json(h));
      send(res, 200, Json{{"query", q}, {"documents", docs}, {"labels", labels}});
    }));

    http.Get("/library", guarded([this](const httplib::Request&, httplib::Response& res) {
      Json list = Json::array();
      for (const auto& r : ws.library().records())
        list.push_back(Json{{"domain", r.domain},
                            {"version", r.version},
                            {"created_at", r.created_at},
                            {"concept_count", r.concept_count}});
      send(res, 200, Json{{"records", list}});
    }));
  }
};

Server::Server(pipeline::Workspace& workspace, std::filesystem::path ui_dir) : impl_(std::make_unique<Impl>(workspace)) {
  impl_->routes();
  if (!ui_dir.empty()) impl_->http.set_mount_point("/ui", ui_dir.string());
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

void Server::listen() { impl_->http.listen_after_bind(); }

void Server::stop() {
  if (impl_) impl_->http.stop();
}

}  // namespace ikon::api
