#include "ikon/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ikon/error.hpp"
#include "ikon/hash.hpp"

namespace fs = std::filesystem;

namespace ikon::pipeline {

std::string_view to_string(Stage s) {
  static constexpr std::array<std::string_view, kStageCount> names{"S1", "S2", "S3", "S4", "S5"};
  return names[index_of(s)];
}

std::optional<Stage> stage_from_string(std::string_view s) {
  for (const Stage st : kStages)
    if (to_string(st) == s) return st;
  return std::nullopt;
}

std::string_view to_string(StageStatus s) {
  switch (s) {
    case StageStatus::Pending: return "pending";
    case StageStatus::Running: return "running";
    case StageStatus::Done: return "done";
    case StageStatus::NeedsRepeat: return "needs_repeat";
    case StageStatus::Failed: return "failed";
  }
  return "pending";
}

std::optional<StageStatus> stage_status_from_string(std::string_view s) {
  for (const auto st : {StageStatus::Pending, StageStatus::Running, StageStatus::Done, StageStatus::NeedsRepeat,
                        StageStatus::Failed})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

std::optional<std::pair<Stage, Stage>> rollback_edge_from_string(std::string_view s) {
  if (s == "S2toS1") return std::pair{Stage::S2, Stage::S1};
  if (s == "S3toS2") return std::pair{Stage::S3, Stage::S2};
  return std::nullopt;
}

Json to_json(const ProjectConfig& c) {
  return Json{{"lexicon", c.lexicon},
              {"rules", c.rules},
              {"seeds", c.seeds},
              {"sources", c.sources},
              {"seed_ontology", c.seed_ontology},
              {"threshold", c.threshold},
              {"accept_min_frequency", c.accept_min_frequency},
              {"threads", c.threads}};
}

namespace {

template <typename T>
T field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw Error(ErrorCode::InvalidConfig, name, "missing");
  try {
    return j.at(name).get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::InvalidConfig, name, "wrong type");
  }
}

template <typename T>
T field_or(const Json& j, const char* name, T fallback) {
  if (!j.is_object() || !j.contains(name) || j.at(name).is_null()) return fallback;
  return field<T>(j, name);
}

}  // namespace

ProjectConfig config_from_json(const Json& j) {
  ProjectConfig c;
  c.lexicon = field<std::string>(j, "lexicon");
  c.rules = field<std::string>(j, "rules");
  c.seeds = field<std::string>(j, "seeds");
  c.sources = field<std::string>(j, "sources");
  c.threshold = field<double>(j, "threshold");
  c.seed_ontology = field_or<std::string>(j, "seed_ontology", "");
  c.accept_min_frequency = field_or<std::size_t>(j, "accept_min_frequency", 2);
  c.threads = field_or<unsigned>(j, "threads", 1);
  return c;
}

void validate_config(const ProjectConfig& c) {
  auto need_file = [](const std::string& path, const char* name) {
    std::error_code ec;
    if (path.empty() || !fs::is_regular_file(path, ec)) throw Error(ErrorCode::InvalidConfig, name, "not a readable file: " + path);
  };
  need_file(c.lexicon, "lexicon");
  need_file(c.rules, "rules");
  need_file(c.seeds, "seeds");
  std::error_code ec;
  if (c.sources.empty() || !fs::is_directory(c.sources, ec))
    throw Error(ErrorCode::InvalidConfig, "sources", "not a directory: " + c.sources);
  if (!c.seed_ontology.empty()) need_file(c.seed_ontology, "seed_ontology");
  if (!std::isfinite(c.threshold) || c.threshold < 0.0 || c.threshold > 1.0)
    throw Error(ErrorCode::InvalidConfig, "threshold", "must lie in [0, 1]");
  if (c.threads == 0) throw Error(ErrorCode::InvalidConfig, "threads", "must be positive");
}

namespace {

Json opt_string(const std::string& s) { return s.empty() ? Json(nullptr) : Json(s); }
std::string from_opt(const Json& j) { return j.is_null() ? std::string{} : j.get<std::string>(); }

}  // namespace

Json to_json(const ProjectState& s) {
  Json stages = Json::array();
  for (const Stage st : kStages) {
    const auto& r = s.at(st);
    stages.push_back({{"stage", to_string(st)},
                      {"status", to_string(r.status)},
                      {"started_at", opt_string(r.started_at)},
                      {"finished_at", opt_string(r.finished_at)},
                      {"artifacts", r.artifacts},
                      {"stale", r.stale},
                      {"diagnostic", opt_string(r.diagnostic)}});
  }
  return Json{{"project_id", s.project_id},     {"domain", s.domain},
              {"version", s.version},           {"config", to_json(s.config)},
              {"stages", stages},               {"term_decisions", s.term_decisions},
              {"ontology_edits", s.ontology_edits}};
}

ProjectState state_from_json(const Json& j) {
  ProjectState s;
  s.project_id = j.at("project_id").get<std::string>();
  s.domain = j.at("domain").get<std::string>();
  s.version = j.at("version").get<std::uint64_t>();
  s.config = config_from_json(j.at("config"));
  for (const auto& r : j.at("stages")) {
    const auto st = stage_from_string(r.at("stage").get<std::string>());
    const auto status = stage_status_from_string(r.at("status").get<std::string>());
    if (!st || !status) throw Error(ErrorCode::MalformedLine, "project.json", "bad stage record");
    auto& rec = s.at(*st);
    rec.status = *status;
    rec.started_at = from_opt(r.at("started_at"));
    rec.finished_at = from_opt(r.at("finished_at"));
    rec.artifacts = r.at("artifacts").get<std::map<std::string, std::string>>();
    rec.stale = r.at("stale").get<bool>();
    rec.diagnostic = from_opt(r.at("diagnostic"));
  }
  s.term_decisions = j.at("term_decisions").get<std::map<std::string, std::string>>();
  s.ontology_edits = j.at("ontology_edits").get<std::uint64_t>();
  return s;
}

Json to_json(const Event& e) { return Json{{"seq", e.seq}, {"type", e.type}, {"at", e.at}, {"data", e.data}}; }

Event event_from_json(const Json& j) {
  return Event{j.at("seq").get<std::uint64_t>(), j.at("type").get<std::string>(), j.at("at").get<std::string>(),
               j.at("data")};
}

namespace {

Stage stage_of(const Json& data, const char* key = "stage") {
  const auto s = stage_from_string(data.at(key).get<std::string>());
  if (!s) throw Error(ErrorCode::MalformedLine, "events", "unknown stage");
  return *s;
}

void invalidate(StageRecord& r) {
  r.status = StageStatus::NeedsRepeat;
  r.stale = true;
}

}  // namespace

void apply(ProjectState& state, const Event& e) {
  const Json& d = e.data;
  if (e.type == "project_created") {
    state = ProjectState{};
    state.project_id = d.at("project_id").get<std::string>();
    state.domain = d.at("domain").get<std::string>();
    state.config = config_from_json(d.at("config"));
  } else if (e.type == "stage_started") {
    auto& r = state.at(stage_of(d));
    r.status = StageStatus::Running;
    r.started_at = e.at;
    r.finished_at.clear();
    r.diagnostic.clear();
  } else if (e.type == "stage_completed") {
    auto& r = state.at(stage_of(d));
    r.status = StageStatus::Done;
    r.finished_at = e.at;
    r.artifacts = d.at("artifacts").get<std::map<std::string, std::string>>();
    r.stale = false;
  } else if (e.type == "stage_failed") {
    auto& r = state.at(stage_of(d));
    r.status = StageStatus::Failed;
    r.finished_at = e.at;
    r.diagnostic = d.at("diagnostic").get<std::string>();
    r.stale = !r.artifacts.empty();
  } else if (e.type == "stage_interrupted") {
    auto& r = state.at(stage_of(d));
    invalidate(r);
    r.diagnostic = "interrupted";
  } else if (e.type == "rolled_back") {
    for (std::size_t i = index_of(stage_of(d, "to")); i < kStageCount; ++i) invalidate(state.stages[i]);
  } else if (e.type == "term_decided") {
    state.term_decisions[d.at("term_id").get<std::string>()] = d.at("status").get<std::string>();
    for (const Stage s : {Stage::S4, Stage::S5})
      if (state.at(s).status == StageStatus::Done) invalidate(state.at(s));
  } else if (e.type == "ontology_edited") {
    ++state.ontology_edits;
    if (state.at(Stage::S5).status == StageStatus::Done) invalidate(state.at(Stage::S5));
  } else {
    throw Error(ErrorCode::MalformedLine, "events", "unknown event type " + e.type);
  }
  state.version = e.seq;
}

ProjectState replay(const std::vector<Event>& events) {
  ProjectState s;
  for (const auto& e : events) apply(s, e);
  return s;
}

namespace {

bool any_running(const ProjectState& state) {
  for (const auto& r : state.stages)
    if (r.status == StageStatus::Running) return true;
  return false;
}

}  // namespace

void check_run(const ProjectState& state, Stage stage) {
  const auto& r = state.at(stage);
  if (r.status == StageStatus::Done) throw Error(ErrorCode::AlreadyDone, std::string(to_string(stage)));
  if (any_running(state)) throw Error(ErrorCode::PrerequisiteNotMet, std::string(to_string(stage)), "a stage is running");
  for (std::size_t i = 0; i < index_of(stage); ++i)
    if (state.stages[i].status != StageStatus::Done)
      throw Error(ErrorCode::PrerequisiteNotMet, std::string(to_string(stage)),
                  std::string(to_string(kStages[i])) + " is " + std::string(to_string(state.stages[i].status)));
}

void check_rollback(const ProjectState& state, Stage from, Stage to) {
  const bool valid = (from == Stage::S2 && to == Stage::S1) || (from == Stage::S3 && to == Stage::S2);
  const std::string edge = std::string(to_string(from)) + "to" + std::string(to_string(to));
  if (!valid) throw Error(ErrorCode::InvalidEdge, edge);
  if (any_running(state)) throw Error(ErrorCode::PrerequisiteNotMet, edge, "a stage is running");
  const auto st = state.at(from).status;
  if (st != StageStatus::Done && st != StageStatus::Failed)
    throw Error(ErrorCode::PrerequisiteNotMet, edge, std::string(to_string(from)) + " is neither done nor failed");
}

bool ordering_invariant_holds(const ProjectState& state) {
  std::size_t running = 0;
  for (std::size_t i = 0; i < kStageCount; ++i) {
    const auto st = state.stages[i].status;
    if (st == StageStatus::Running) ++running;
    if (st != StageStatus::Running && st != StageStatus::Done) continue;
    for (std::size_t j = 0; j < i; ++j)
      if (state.stages[j].status != StageStatus::Done) return false;
  }
  return running <= 1;
}

FileStore::FileStore(fs::path dir) : dir_(std::move(dir)) {}

std::vector<Event> FileStore::load() const {
  std::vector<Event> out;
  const fs::path path = dir_ / "events.ndjson";
  if (!fs::exists(path)) return out;
  const std::string all = read_file(path);
  std::size_t pos = 0, line_no = 0;
  while (pos < all.size()) {
    ++line_no;
    const std::size_t nl = all.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail
    const std::string line = all.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    const Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::MalformedLine, path.string(), "bad event", line_no);
    out.push_back(event_from_json(j));
  }
  return out;
}

// Cuts an unterminated last line left by a crash so the next event starts on its own line.
static void drop_torn_tail(const fs::path& path) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec || size == 0) return;
  std::ifstream in(path, std::ios::binary);
  std::uintmax_t keep = size;
  char c = 0;
  while (keep > 0) {
    in.seekg(static_cast<std::streamoff>(keep - 1));
    in.get(c);
    if (c == '\n') break;
    --keep;
  }
  in.close();
  if (keep != size) fs::resize_file(path, keep);
}

void FileStore::append(const Event& event) {
  fs::create_directories(dir_);
  drop_torn_tail(dir_ / "events.ndjson");
  std::ofstream out(dir_ / "events.ndjson", std::ios::binary | std::ios::app);
  out << to_json(event).dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::UnreadableSource, (dir_ / "events.ndjson").string(), "cannot append event");
}

void FileStore::save_snapshot(const ProjectState& state) {
  write_file_atomic(dir_ / "project.json", to_json(state).dump(2) + "\n");
}

std::optional<ProjectState> FileStore::load_snapshot() const {
  const fs::path path = dir_ / "project.json";
  if (!fs::exists(path)) return std::nullopt;
  const Json j = Json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  try {
    return state_from_json(j);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

Project::Project(std::unique_ptr<EventStore> store, Clock clock) : store_(std::move(store)), clock_(std::move(clock)) {}

std::unique_ptr<Project> Project::create(std::unique_ptr<EventStore> store, const std::string& project_id,
                                         const std::string& domain, const ProjectConfig& config, Clock clock) {
  if (!store->load().empty()) throw Error(ErrorCode::DuplicateProject, project_id);
  std::unique_ptr<Project> p(new Project(std::move(store), std::move(clock)));
  std::lock_guard lock(p->write_mutex_);
  p->emit("project_created", Json{{"project_id", project_id}, {"domain", domain}, {"config", to_json(config)}});
  return p;
}

std::unique_ptr<Project> Project::open(std::unique_ptr<EventStore> store, Clock clock) {
  const auto events = store->load();
  if (events.empty()) throw Error(ErrorCode::UnknownProject, "", "empty event log");
  std::unique_ptr<Project> p(new Project(std::move(store), std::move(clock)));
  p->state_ = replay(events);
  if (p->store_->load_snapshot() != p->state_) p->store_->save_snapshot(p->state_);
  return p;
}

ProjectState Project::snapshot() const {
  std::lock_guard lock(state_mutex_);
  return state_;
}

std::vector<Event> Project::events() const {
  std::lock_guard lock(write_mutex_);
  return store_->load();
}

void Project::emit(std::string type, Json data) {
  ProjectState next = snapshot();
  Event e{next.version + 1, std::move(type), clock_(), std::move(data)};
  apply(next, e);
  store_->append(e);
  store_->save_snapshot(next);
  std::lock_guard lock(state_mutex_);
  state_ = std::move(next);
}

void Project::check_version(std::optional<std::uint64_t> expected) const {
  if (!expected) return;
  const auto current = snapshot().version;
  if (*expected != current)
    throw Error(ErrorCode::StaleVersion, snapshot().project_id,
                "expected version " + std::to_string(*expected) + ", current " + std::to_string(current));
}

ProjectState Project::run_stage(Stage stage, const StageRunner& runner, std::optional<std::uint64_t> expected_version) {
  std::lock_guard lock(write_mutex_);
  check_version(expected_version);
  check_run(snapshot(), stage);
  const Json st = std::string(to_string(stage));
  emit("stage_started", Json{{"stage", st}});
  std::map<std::string, std::string> artifacts;
  std::string diagnostic;
  try {
    artifacts = runner(snapshot(), stage);
  } catch (const std::exception& e) {
    diagnostic = e.what();
    if (diagnostic.empty()) diagnostic = "stage failed";
  }
  if (!diagnostic.empty()) {
    emit("stage_failed", Json{{"stage", st}, {"diagnostic", diagnostic}});
    throw Error(ErrorCode::StageFailure, std::string(to_string(stage)), diagnostic);
  }
  emit("stage_completed", Json{{"stage", st}, {"artifacts", artifacts}});
  return snapshot();
}

ProjectState Project::rollback(Stage from, Stage to, const std::string& reason,
                               std::optional<std::uint64_t> expected_version) {
  std::lock_guard lock(write_mutex_);
  check_version(expected_version);
  check_rollback(snapshot(), from, to);
  emit("rolled_back", Json{{"from", to_string(from)}, {"to", to_string(to)}, {"reason", reason}});
  return snapshot();
}

ProjectState Project::decide_term(const std::string& term_id, const std::string& status,
                                  std::optional<std::uint64_t> expected_version) {
  if (status != "accepted" && status != "rejected")
    throw Error(ErrorCode::InvalidConfig, "status", "must be accepted or rejected");
  std::lock_guard lock(write_mutex_);
  check_version(expected_version);
  const auto s = snapshot();
  if (s.at(Stage::S3).status != StageStatus::Done) throw Error(ErrorCode::PrerequisiteNotMet, "S3", "terms not extracted");
  if (any_running(s)) throw Error(ErrorCode::PrerequisiteNotMet, term_id, "a stage is running");
  emit("term_decided", Json{{"term_id", term_id}, {"status", status}});
  return snapshot();
}

ProjectState Project::edit_ontology(const std::string& op, const std::function<void(const ProjectState&)>& action,
                                    std::optional<std::uint64_t> expected_version) {
  std::lock_guard lock(write_mutex_);
  check_version(expected_version);
  const auto s = snapshot();
  if (s.at(Stage::S4).status != StageStatus::Done) throw Error(ErrorCode::PrerequisiteNotMet, "S4", "no ontology yet");
  if (any_running(s)) throw Error(ErrorCode::PrerequisiteNotMet, op, "a stage is running");
  action(s);
  emit("ontology_edited", Json{{"op", op}});
  return snapshot();
}

bool Project::recover_interrupted() {
  std::lock_guard lock(write_mutex_);
  bool changed = false;
  for (const Stage st : kStages)
    if (snapshot().at(st).status == StageStatus::Running) {
      emit("stage_interrupted", Json{{"stage", to_string(st)}});
      changed = true;
    }
  return changed;
}

}  // namespace ikon::pipeline
