#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ikon::onto {

enum class RelationType { IsA, PartOf, AssociatedWith };

std::string_view to_string(RelationType type);
std::optional<RelationType> relation_type_from_string(std::string_view s);

struct ConceptRelation {
  RelationType type = RelationType::AssociatedWith;
  std::string label;  // only meaningful for AssociatedWith
  std::string source;
  std::string target;

  friend auto operator<=>(const ConceptRelation&, const ConceptRelation&) = default;
};

using Provenance = std::set<std::pair<std::string, std::size_t>>;  // (doc_id, sentence_index)

struct Concept {
  std::string id;
  std::string preferred_label;
  std::set<std::string> alt_labels;
  std::optional<std::string> definition;
  Provenance provenance;

  friend bool operator==(const Concept&, const Concept&) = default;
};

/// "c-" + percent-encoded normalized label. Used wherever an id has to be
/// derived from a label, so the same label always yields the same id.
std::string concept_id_for_label(std::string_view label);

/// Directed graph of concepts and typed relations. Mutators validate:
///  - concept ids unique, preferred labels non-empty;
///  - no two concepts share a normalized preferred label, and no concept's
///    alternative label equals another concept's preferred label;
///  - relation endpoints exist, no self-loops, is_a edges stay acyclic.
/// Violations throw ikon::Error and leave the graph unchanged.
class OntologyGraph {
 public:
  explicit OntologyGraph(std::string graph_id = {}, std::string domain_name = {}, std::uint64_t version = 1);

  const std::string& graph_id() const noexcept { return graph_id_; }
  const std::string& domain_name() const noexcept { return domain_name_; }
  std::uint64_t version() const noexcept { return version_; }
  void set_version(std::uint64_t v) noexcept { version_ = v; }
  void set_domain_name(std::string d) { domain_name_ = std::move(d); }
  void set_graph_id(std::string g) { graph_id_ = std::move(g); }

  const std::map<std::string, Concept>& concepts() const noexcept { return concepts_; }
  const std::set<ConceptRelation>& relations() const noexcept { return relations_; }
  bool empty() const noexcept { return concepts_.empty(); }

  const Concept* find(std::string_view id) const;
  const Concept* find_by_label(std::string_view label) const;
  /// Concepts whose preferred or alternative label normalizes to `label`.
  std::vector<const Concept*> find_by_any_label(std::string_view label) const;

  void add_concept(Concept c);
  /// Replaces labels/definition/provenance of an existing concept; relations keep pointing at it.
  void update_concept(Concept c);
  void remove_concept(std::string_view id);

  void add_relation(ConceptRelation relation);
  bool remove_relation(const ConceptRelation& relation);

  /// Concepts adjacent to `id` through any relation, in either direction.
  std::set<std::string> neighbours(std::string_view id) const;

  bool would_create_is_a_cycle(std::string_view source, std::string_view target) const;

 private:
  void check_labels(const Concept& c, std::string_view ignore_id) const;
  void index_labels(const Concept& c);
  void unindex_labels(const Concept& c);

  std::string graph_id_;
  std::string domain_name_;
  std::uint64_t version_;
  std::map<std::string, Concept> concepts_;
  std::set<ConceptRelation> relations_;
  std::map<std::string, std::string> pref_index_;           // normalized preferred label -> id
  std::map<std::string, std::set<std::string>> alt_index_;  // normalized alt label -> ids
};

/// Input to promote(): one node per accepted term of the semantic network.
struct PromotionNode {
  std::string label;
  Provenance provenance;
};

struct PromotionEdge {
  std::string label;
  std::string source;  // node label
  std::string target;  // node label
};

/// Builds a version-1 graph: one concept per node, associated_with edges for
/// network edges, and is_a(X -> Y) when Y is the head of multiword label X.
/// The head of "A B C" is the longest proper word suffix that is itself a
/// node ("B C", else "C"); for "X <linker> Y" it is X. Throws LabelCollision.
OntologyGraph promote(const std::vector<PromotionNode>& nodes, const std::vector<PromotionEdge>& edges,
                      const std::string& domain_name, const std::string& linker = "of");

struct MergeResult {
  OntologyGraph graph;
  /// Relations dropped because unification turned them into self-loops or
  /// because they would have closed an is_a cycle.
  std::vector<ConceptRelation> dropped;
};

/// Label-driven integration of two graphs. Concepts unify when their
/// normalized preferred labels are equal or one preferred label is among the
/// other's alternative labels (transitively). The unified concept keeps the
/// smallest id and the preferred label of its owner; the other preferred
/// labels become alternative labels. is_a edges present in both inputs are
/// inserted first, then the rest in label order; an edge that would close a
/// cycle is dropped and reported. Result version = max(a, b) + 1.
MergeResult merge(const OntologyGraph& a, const OntologyGraph& b);

/// N-Triples subset; output lines are sorted by subject, predicate, object.
std::string export_owl(const OntologyGraph& graph);
/// Throws MalformedTriple or UnsupportedConstruct with the offending line number.
OntologyGraph import_owl(std::istream& in);

std::string concept_iri(std::string_view domain_name, std::string_view label);

namespace iri {
inline constexpr std::string_view kRdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
inline constexpr std::string_view kOwlClass = "http://www.w3.org/2002/07/owl#Class";
inline constexpr std::string_view kSubClassOf = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
inline constexpr std::string_view kLabel = "http://www.w3.org/2000/01/rdf-schema#label";
inline constexpr std::string_view kAltLabel = "http://www.w3.org/2004/02/skos/core#altLabel";
inline constexpr std::string_view kDefinition = "http://www.w3.org/2004/02/skos/core#definition";
inline constexpr std::string_view kPartOf = "urn:ikon:rel:part_of";
inline constexpr std::string_view kRelPrefix = "urn:ikon:rel:";
}  // namespace iri

struct LibraryRecord {
  std::string domain;
  std::uint64_t version = 0;
  std::string created_at;
  std::size_t concept_count = 0;
};

/// Versioned store of published ontologies:
///   <root>/<domain>/<version>.nt and <root>/index.tsv
/// Writes are serialized per instance; versions strictly increase per domain.
class OntologyLibrary {
 public:
  explicit OntologyLibrary(std::filesystem::path root);

  /// Stores `graph` under its domain with version max(graph.version, last + 1).
  LibraryRecord publish(const OntologyGraph& graph, const std::string& created_at);

  std::vector<LibraryRecord> records() const;
  std::optional<LibraryRecord> latest(const std::string& domain) const;
  /// Throws NotFound.
  OntologyGraph load(const std::string& domain, std::optional<std::uint64_t> version = std::nullopt) const;

 private:
  std::filesystem::path root_;
  mutable std::mutex mutex_;
};

}  // namespace ikon::onto
