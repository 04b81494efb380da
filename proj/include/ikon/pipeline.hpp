#pragma once

// Project state machine. Every transition is an event; the state is the fold
// of the event log, persisted after each transition as events.ndjson (append)
// plus a project.json snapshot (atomic replace).

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ikon::pipeline {

using Json = nlohmann::json;

enum class Stage { S1, S2, S3, S4, S5 };
inline constexpr std::size_t kStageCount = 5;
inline constexpr std::array<Stage, kStageCount> kStages{Stage::S1, Stage::S2, Stage::S3, Stage::S4, Stage::S5};

std::string_view to_string(Stage s);
std::optional<Stage> stage_from_string(std::string_view s);
inline std::size_t index_of(Stage s) { return static_cast<std::size_t>(s); }

enum class StageStatus { Pending, Running, Done, NeedsRepeat, Failed };

std::string_view to_string(StageStatus s);
std::optional<StageStatus> stage_status_from_string(std::string_view s);

/// Only S2->S1 and S3->S2 exist. Accepts "S2toS1" / "S3toS2".
std::optional<std::pair<Stage, Stage>> rollback_edge_from_string(std::string_view s);

struct ProjectConfig {
  std::string lexicon;        // paths; frozen copies inside the project once created
  std::string rules;
  std::string seeds;
  std::string sources;        // directory of raw documents, read by S1
  std::string seed_ontology;  // optional N-Triples file; empty = empty seed graph
  double threshold = 0.0;
  std::size_t accept_min_frequency = 2;  // 0 disables auto-acceptance
  unsigned threads = 1;

  friend bool operator==(const ProjectConfig&, const ProjectConfig&) = default;
};

Json to_json(const ProjectConfig& c);
/// Throws InvalidConfig(field) on a missing or ill-typed field.
ProjectConfig config_from_json(const Json& j);
/// Required paths must exist (sources as a directory), threshold in [0, 1].
/// Throws InvalidConfig(field).
void validate_config(const ProjectConfig& c);

struct StageRecord {
  StageStatus status = StageStatus::Pending;
  std::string started_at;
  std::string finished_at;
  std::map<std::string, std::string> artifacts;  // project-relative path -> sha256
  bool stale = false;
  std::string diagnostic;

  friend bool operator==(const StageRecord&, const StageRecord&) = default;
};

struct ProjectState {
  std::string project_id;
  std::string domain;
  ProjectConfig config;
  std::array<StageRecord, kStageCount> stages;
  std::uint64_t version = 0;  // sequence number of the last applied event
  std::map<std::string, std::string> term_decisions;  // term_id -> accepted|rejected
  std::uint64_t ontology_edits = 0;

  const StageRecord& at(Stage s) const { return stages[index_of(s)]; }
  StageRecord& at(Stage s) { return stages[index_of(s)]; }

  friend bool operator==(const ProjectState&, const ProjectState&) = default;
};

Json to_json(const ProjectState& s);
ProjectState state_from_json(const Json& j);

struct Event {
  std::uint64_t seq = 0;
  std::string type;
  std::string at;
  Json data;

  friend bool operator==(const Event&, const Event&) = default;
};

Json to_json(const Event& e);
Event event_from_json(const Json& j);

/// Pure fold step. Events are validated when emitted, so apply never throws
/// on a log the project wrote itself.
void apply(ProjectState& state, const Event& event);
ProjectState replay(const std::vector<Event>& events);

/// Guards shared by the Project and the model checker.
/// PrerequisiteNotMet when a predecessor is not done or another stage is
/// running; AlreadyDone when the stage is done.
void check_run(const ProjectState& state, Stage stage);
/// InvalidEdge for anything but S2->S1 / S3->S2; PrerequisiteNotMet unless
/// the from-stage is done or failed and nothing is running.
void check_rollback(const ProjectState& state, Stage from, Stage to);
/// Running or done stages have all predecessors done; at most one running.
bool ordering_invariant_holds(const ProjectState& state);

class EventStore {
 public:
  virtual ~EventStore() = default;
  virtual std::vector<Event> load() const = 0;
  virtual void append(const Event& event) = 0;
  virtual void save_snapshot(const ProjectState& state) = 0;
  virtual std::optional<ProjectState> load_snapshot() const = 0;
};

/// events.ndjson + project.json inside `dir`. A torn final line (crash while
/// appending) is ignored on load.
class FileStore : public EventStore {
 public:
  explicit FileStore(std::filesystem::path dir);
  std::vector<Event> load() const override;
  void append(const Event& event) override;
  void save_snapshot(const ProjectState& state) override;
  std::optional<ProjectState> load_snapshot() const override;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

class MemoryStore : public EventStore {
 public:
  std::vector<Event> load() const override { return events_; }
  void append(const Event& event) override { events_.push_back(event); }
  void save_snapshot(const ProjectState& state) override { snapshot_ = state; }
  std::optional<ProjectState> load_snapshot() const override { return snapshot_; }

 private:
  std::vector<Event> events_;
  std::optional<ProjectState> snapshot_;
};

/// Executes the work bound to a stage and returns the artifacts it wrote
/// (project-relative path -> sha256). Failures are reported by throwing.
using StageRunner = std::function<std::map<std::string, std::string>(const ProjectState&, Stage)>;
using Clock = std::function<std::string()>;

/// One writer at a time per project; snapshot() never waits for a running stage.
class Project {
 public:
  static std::unique_ptr<Project> create(std::unique_ptr<EventStore> store, const std::string& project_id,
                                         const std::string& domain, const ProjectConfig& config, Clock clock);
  /// Rebuilds the state from the event log. Throws UnknownProject on an empty log.
  static std::unique_ptr<Project> open(std::unique_ptr<EventStore> store, Clock clock);

  ProjectState snapshot() const;
  std::vector<Event> events() const;

  /// Throws StaleVersion when `expected_version` is given and differs.
  ProjectState run_stage(Stage stage, const StageRunner& runner, std::optional<std::uint64_t> expected_version = {});
  ProjectState rollback(Stage from, Stage to, const std::string& reason,
                        std::optional<std::uint64_t> expected_version = {});
  /// Records a curation decision. Requires S3 done; when S4 is done it and
  /// S5 become needs_repeat, since their output no longer reflects curation.
  ProjectState decide_term(const std::string& term_id, const std::string& status,
                           std::optional<std::uint64_t> expected_version = {});
  /// Runs `action` (the actual edit) under the writer lock, then logs it.
  /// Requires S4 done; a done S5 becomes needs_repeat.
  ProjectState edit_ontology(const std::string& op, const std::function<void(const ProjectState&)>& action,
                             std::optional<std::uint64_t> expected_version = {});
  /// A stage left running by a dead process becomes needs_repeat. Returns
  /// whether anything changed.
  bool recover_interrupted();

 private:
  Project(std::unique_ptr<EventStore> store, Clock clock);
  void emit(std::string type, Json data);  // caller holds write_mutex_
  void check_version(std::optional<std::uint64_t> expected) const;

  std::unique_ptr<EventStore> store_;
  Clock clock_;
  mutable std::mutex write_mutex_;
  mutable std::mutex state_mutex_;
  ProjectState state_;
};

}  // namespace ikon::pipeline
