#include "ikon/ontology.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "ikon/error.hpp"
#include "ikon/hash.hpp"
#include "ikon/text.hpp"

namespace fs = std::filesystem;

namespace ikon::onto {

std::string_view to_string(RelationType type) {
  switch (type) {
    case RelationType::IsA: return "is_a";
    case RelationType::PartOf: return "part_of";
    case RelationType::AssociatedWith: return "associated_with";
  }
  return "associated_with";
}

std::optional<RelationType> relation_type_from_string(std::string_view s) {
  if (s == "is_a") return RelationType::IsA;
  if (s == "part_of") return RelationType::PartOf;
  if (s == "associated_with") return RelationType::AssociatedWith;
  return std::nullopt;
}

std::string concept_id_for_label(std::string_view label) {
  return "c-" + text::percent_encode(text::normalize_label(label));
}

// ---------------------------------------------------------------------------
// OntologyGraph

OntologyGraph::OntologyGraph(std::string graph_id, std::string domain_name, std::uint64_t version)
    : graph_id_(std::move(graph_id)), domain_name_(std::move(domain_name)), version_(version) {}

const Concept* OntologyGraph::find(std::string_view id) const {
  const auto it = concepts_.find(std::string(id));
  return it == concepts_.end() ? nullptr : &it->second;
}

const Concept* OntologyGraph::find_by_label(std::string_view label) const {
  const auto it = pref_index_.find(text::normalize_label(label));
  return it == pref_index_.end() ? nullptr : find(it->second);
}

std::vector<const Concept*> OntologyGraph::find_by_any_label(std::string_view label) const {
  const std::string norm = text::normalize_label(label);
  std::set<std::string> ids;
  if (const auto it = pref_index_.find(norm); it != pref_index_.end()) ids.insert(it->second);
  if (const auto it = alt_index_.find(norm); it != alt_index_.end()) ids.insert(it->second.begin(), it->second.end());
  std::vector<const Concept*> out;
  for (const auto& id : ids) out.push_back(find(id));
  return out;
}

void OntologyGraph::check_labels(const Concept& c, std::string_view ignore_id) const {
  const std::string pref = text::normalize_label(c.preferred_label);
  if (pref.empty()) throw Error(ErrorCode::LabelCollision, c.id, "empty preferred label");
  if (const auto it = pref_index_.find(pref); it != pref_index_.end() && it->second != ignore_id)
    throw Error(ErrorCode::LabelCollision, c.preferred_label, "preferred label already used by " + it->second);
  if (const auto it = alt_index_.find(pref); it != alt_index_.end())
    for (const auto& other : it->second)
      if (other != ignore_id)
        throw Error(ErrorCode::LabelCollision, c.preferred_label, "alternative label of " + other);
  for (const auto& alt : c.alt_labels) {
    const std::string norm = text::normalize_label(alt);
    if (norm.empty()) throw Error(ErrorCode::LabelCollision, c.id, "empty alternative label");
    if (const auto it = pref_index_.find(norm); it != pref_index_.end() && it->second != ignore_id)
      throw Error(ErrorCode::LabelCollision, alt, "preferred label of " + it->second);
  }
}

void OntologyGraph::index_labels(const Concept& c) {
  pref_index_[text::normalize_label(c.preferred_label)] = c.id;
  for (const auto& alt : c.alt_labels) alt_index_[text::normalize_label(alt)].insert(c.id);
}

void OntologyGraph::unindex_labels(const Concept& c) {
  pref_index_.erase(text::normalize_label(c.preferred_label));
  for (const auto& alt : c.alt_labels) {
    const auto it = alt_index_.find(text::normalize_label(alt));
    if (it == alt_index_.end()) continue;
    it->second.erase(c.id);
    if (it->second.empty()) alt_index_.erase(it);
  }
}

namespace {

void drop_self_alt(Concept& c) {
  const std::string pref = text::normalize_label(c.preferred_label);
  std::erase_if(c.alt_labels, [&](const std::string& a) { return text::normalize_label(a) == pref; });
}

}  // namespace

void OntologyGraph::add_concept(Concept c) {
  if (c.id.empty()) throw Error(ErrorCode::InvalidRelation, "", "concept id must not be empty");
  if (concepts_.count(c.id)) throw Error(ErrorCode::DuplicateId, c.id);
  drop_self_alt(c);
  check_labels(c, {});
  index_labels(c);
  const std::string id = c.id;
  concepts_.emplace(id, std::move(c));
}

void OntologyGraph::update_concept(Concept c) {
  const auto it = concepts_.find(c.id);
  if (it == concepts_.end()) throw Error(ErrorCode::UnknownConcept, c.id);
  drop_self_alt(c);
  check_labels(c, c.id);
  unindex_labels(it->second);
  index_labels(c);
  it->second = std::move(c);
}

void OntologyGraph::remove_concept(std::string_view id) {
  const auto it = concepts_.find(std::string(id));
  if (it == concepts_.end()) throw Error(ErrorCode::UnknownConcept, std::string(id));
  unindex_labels(it->second);
  std::erase_if(relations_, [&](const ConceptRelation& r) { return r.source == id || r.target == id; });
  concepts_.erase(it);
}

bool OntologyGraph::would_create_is_a_cycle(std::string_view source, std::string_view target) const {
  if (source == target) return true;
  std::map<std::string_view, std::vector<std::string_view>> out;
  for (const auto& r : relations_)
    if (r.type == RelationType::IsA) out[r.source].push_back(r.target);
  std::vector<std::string_view> stack{target};
  std::set<std::string_view> seen{target};
  while (!stack.empty()) {
    const auto cur = stack.back();
    stack.pop_back();
    if (cur == source) return true;
    if (const auto it = out.find(cur); it != out.end())
      for (const auto nxt : it->second)
        if (seen.insert(nxt).second) stack.push_back(nxt);
  }
  return false;
}

void OntologyGraph::add_relation(ConceptRelation relation) {
  if (!find(relation.source)) throw Error(ErrorCode::UnknownConcept, relation.source);
  if (!find(relation.target)) throw Error(ErrorCode::UnknownConcept, relation.target);
  if (relation.source == relation.target) throw Error(ErrorCode::InvalidRelation, relation.source, "self-loop");
  if (relation.type == RelationType::AssociatedWith) {
    if (relation.label.empty()) throw Error(ErrorCode::InvalidRelation, relation.source, "associated_with needs a label");
  } else {
    relation.label.clear();
  }
  if (relation.type == RelationType::IsA && !relations_.count(relation) &&
      would_create_is_a_cycle(relation.source, relation.target))
    throw Error(ErrorCode::InvalidRelation, relation.source + " -> " + relation.target, "is_a cycle");
  relations_.insert(std::move(relation));
}

bool OntologyGraph::remove_relation(const ConceptRelation& relation) {
  ConceptRelation key = relation;
  if (key.type != RelationType::AssociatedWith) key.label.clear();
  return relations_.erase(key) > 0;
}

std::set<std::string> OntologyGraph::neighbours(std::string_view id) const {
  std::set<std::string> out;
  for (const auto& r : relations_) {
    if (r.source == id) out.insert(r.target);
    if (r.target == id) out.insert(r.source);
  }
  return out;
}

// ---------------------------------------------------------------------------
// promote

OntologyGraph promote(const std::vector<PromotionNode>& nodes, const std::vector<PromotionEdge>& edges,
                      const std::string& domain_name, const std::string& linker) {
  OntologyGraph g(domain_name.empty() ? "promoted" : domain_name + "-promoted", domain_name, 1);
  for (const auto& n : nodes) {
    const std::string norm = text::normalize_label(n.label);
    if (const Concept* existing = g.find_by_label(norm))
      throw Error(ErrorCode::LabelCollision, n.label, "collides with " + existing->preferred_label);
    g.add_concept(Concept{concept_id_for_label(norm), n.label, {}, std::nullopt, n.provenance});
  }
  auto id_of = [&](const std::string& label) -> std::string {
    const Concept* c = g.find_by_label(label);
    if (!c) throw Error(ErrorCode::UnknownConcept, label);
    return c->id;
  };
  for (const auto& e : edges) {
    const auto s = id_of(e.source);
    const auto t = id_of(e.target);
    if (s == t) continue;
    g.add_relation(ConceptRelation{RelationType::AssociatedWith, e.label, s, t});
  }
  const std::string link = text::normalize_label(linker);
  for (const auto& n : nodes) {
    const auto words = text::split(text::normalize_label(n.label), ' ');
    if (words.size() < 2) continue;
    std::optional<std::string> head;
    const auto lk = link.empty() ? words.end() : std::find(words.begin() + 1, words.end(), link);
    if (lk != words.end()) {
      const std::string cand = text::join(std::vector<std::string>(words.begin(), lk), " ");
      if (g.find_by_label(cand)) head = cand;
    } else {
      for (std::size_t len = words.size() - 1; len >= 1 && !head; --len) {
        const std::string cand = text::join(std::vector<std::string>(words.end() - len, words.end()), " ");
        if (g.find_by_label(cand)) head = cand;
      }
    }
    if (head) g.add_relation(ConceptRelation{RelationType::IsA, {}, id_of(n.label), id_of(*head)});
  }
  return g;
}

// ---------------------------------------------------------------------------
// merge

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

MergeResult merge(const OntologyGraph& a, const OntologyGraph& b) {
  std::vector<std::pair<int, const Concept*>> all;
  for (const auto& [id, c] : a.concepts()) all.emplace_back(0, &c);
  const std::size_t a_count = all.size();
  for (const auto& [id, c] : b.concepts()) all.emplace_back(1, &c);

  UnionFind uf(all.size());
  std::map<std::string, std::vector<std::size_t>> a_pref, a_alt;
  for (std::size_t i = 0; i < a_count; ++i) {
    a_pref[text::normalize_label(all[i].second->preferred_label)].push_back(i);
    for (const auto& alt : all[i].second->alt_labels) a_alt[text::normalize_label(alt)].push_back(i);
  }
  for (std::size_t j = a_count; j < all.size(); ++j) {
    const Concept& y = *all[j].second;
    const std::string pref = text::normalize_label(y.preferred_label);
    if (const auto it = a_pref.find(pref); it != a_pref.end())
      for (const auto i : it->second) uf.unite(i, j);
    if (const auto it = a_alt.find(pref); it != a_alt.end())
      for (const auto i : it->second) uf.unite(i, j);
    for (const auto& alt : y.alt_labels)
      if (const auto it = a_pref.find(text::normalize_label(alt)); it != a_pref.end())
        for (const auto i : it->second) uf.unite(i, j);
  }

  // Group members and pick each class's owner: smallest id, then smallest label.
  // The remaining keys only make the order total, so the first definition
  // found does not depend on which side a member came from.
  std::map<std::size_t, std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < all.size(); ++i) classes[uf.find(i)].push_back(i);
  auto owner_less = [&](std::size_t x, std::size_t y) {
    const Concept& cx = *all[x].second;
    const Concept& cy = *all[y].second;
    if (cx.id != cy.id) return cx.id < cy.id;
    if (cx.preferred_label != cy.preferred_label) return cx.preferred_label < cy.preferred_label;
    if (cx.definition.has_value() != cy.definition.has_value()) return cx.definition.has_value();
    if (cx.definition != cy.definition) return *cx.definition < *cy.definition;
    if (cx.alt_labels != cy.alt_labels) return cx.alt_labels < cy.alt_labels;
    return cx.provenance < cy.provenance;
  };
  struct Unified {
    Concept node;
    std::vector<std::size_t> members;
  };
  std::vector<Unified> unified;
  for (auto& [root, members] : classes) {
    std::sort(members.begin(), members.end(), owner_less);
    const Concept& owner = *all[members.front()].second;
    Unified u{Concept{owner.id, owner.preferred_label, {}, std::nullopt, {}}, members};
    for (const auto m : members) {
      const Concept& c = *all[m].second;
      u.node.alt_labels.insert(c.alt_labels.begin(), c.alt_labels.end());
      if (m != members.front()) u.node.alt_labels.insert(c.preferred_label);
      u.node.provenance.insert(c.provenance.begin(), c.provenance.end());
      if (!u.node.definition && c.definition) u.node.definition = c.definition;
    }
    drop_self_alt(u.node);
    unified.push_back(std::move(u));
  }
  // Ids are unique per input graph but may clash across graphs between
  // concepts that did not unify.
  std::sort(unified.begin(), unified.end(), [](const Unified& x, const Unified& y) {
    if (x.node.id != y.node.id) return x.node.id < y.node.id;
    return text::normalize_label(x.node.preferred_label) < text::normalize_label(y.node.preferred_label);
  });
  std::set<std::string> used;
  std::map<std::pair<int, std::string>, std::string> new_id;
  OntologyGraph out(a.graph_id(), a.domain_name(), std::max(a.version(), b.version()) + 1);
  for (auto& u : unified) {
    std::string id = u.node.id;
    for (int n = 2; used.count(id); ++n) id = u.node.id + "~" + std::to_string(n);
    used.insert(id);
    u.node.id = id;
    for (const auto m : u.members) new_id[{all[m].first, all[m].second->id}] = id;
    out.add_concept(u.node);
  }

  MergeResult result{std::move(out), {}};
  OntologyGraph& g = result.graph;
  auto retarget = [&](int side, const ConceptRelation& r) {
    ConceptRelation x = r;
    x.source = new_id.at({side, r.source});
    x.target = new_id.at({side, r.target});
    return x;
  };
  std::set<ConceptRelation> isa_a, isa_b;
  for (int side = 0; side < 2; ++side) {
    const OntologyGraph& src = side == 0 ? a : b;
    for (const auto& r : src.relations()) {
      const ConceptRelation x = retarget(side, r);
      if (x.source == x.target) {
        result.dropped.push_back(x);
        continue;
      }
      if (x.type == RelationType::IsA) {
        (side == 0 ? isa_a : isa_b).insert(x);
      } else {
        g.add_relation(x);
      }
    }
  }
  auto label_key = [&](const ConceptRelation& r) {
    return std::make_pair(text::normalize_label(g.find(r.source)->preferred_label),
                          text::normalize_label(g.find(r.target)->preferred_label));
  };
  std::vector<ConceptRelation> common, rest;
  for (const auto& r : isa_a) (isa_b.count(r) ? common : rest).push_back(r);
  for (const auto& r : isa_b)
    if (!isa_a.count(r)) rest.push_back(r);
  for (auto* group : {&common, &rest}) {
    std::sort(group->begin(), group->end(),
              [&](const ConceptRelation& x, const ConceptRelation& y) { return label_key(x) < label_key(y); });
    for (const auto& r : *group) {
      if (g.would_create_is_a_cycle(r.source, r.target)) {
        result.dropped.push_back(r);
        continue;
      }
      g.add_relation(r);
    }
  }
  std::sort(result.dropped.begin(), result.dropped.end());
  result.dropped.erase(std::unique(result.dropped.begin(), result.dropped.end()), result.dropped.end());
  return result;
}

// ---------------------------------------------------------------------------
// OntologyLibrary

OntologyLibrary::OntologyLibrary(fs::path root) : root_(std::move(root)) {}

std::vector<LibraryRecord> OntologyLibrary::records() const {
  std::vector<LibraryRecord> out;
  const auto index = root_ / "index.tsv";
  if (!fs::exists(index)) return out;
  std::istringstream in(read_file(index));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 4) throw Error(ErrorCode::MalformedLine, index.string(), "library index row needs 4 columns", line_no);
    out.push_back({f[0], std::stoull(f[1]), f[2], static_cast<std::size_t>(std::stoull(f[3]))});
  }
  return out;
}

std::optional<LibraryRecord> OntologyLibrary::latest(const std::string& domain) const {
  std::optional<LibraryRecord> best;
  for (auto& r : records())
    if (r.domain == domain && (!best || r.version > best->version)) best = r;
  return best;
}

LibraryRecord OntologyLibrary::publish(const OntologyGraph& graph, const std::string& created_at) {
  std::lock_guard lock(mutex_);
  const auto last = latest(graph.domain_name());
  LibraryRecord rec{graph.domain_name(), std::max<std::uint64_t>(graph.version(), last ? last->version + 1 : 1),
                    created_at, graph.concepts().size()};
  OntologyGraph stored = graph;
  stored.set_version(rec.version);
  write_file_atomic(root_ / text::percent_encode(rec.domain) / (std::to_string(rec.version) + ".nt"),
                    export_owl(stored));
  const auto index = root_ / "index.tsv";
  std::string contents = fs::exists(index) ? read_file(index) : std::string{};
  contents += text::tsv_field(rec.domain) + '\t' + std::to_string(rec.version) + '\t' + rec.created_at + '\t' +
              std::to_string(rec.concept_count) + '\n';
  write_file_atomic(index, contents);
  return rec;
}

OntologyGraph OntologyLibrary::load(const std::string& domain, std::optional<std::uint64_t> version) const {
  std::lock_guard lock(mutex_);
  std::optional<LibraryRecord> rec;
  for (auto& r : records())
    if (r.domain == domain && (version ? r.version == *version : (!rec || r.version > rec->version))) rec = r;
  if (!rec) throw Error(ErrorCode::NotFound, domain + (version ? "@" + std::to_string(*version) : ""));
  std::istringstream in(
      read_file(root_ / text::percent_encode(rec->domain) / (std::to_string(rec->version) + ".nt")));
  return import_owl(in);
}

}  // namespace ikon::onto
