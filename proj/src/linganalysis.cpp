#include "ikon/linganalysis.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>

#include "ikon/error.hpp"
#include "ikon/text.hpp"

namespace ikon::ling {

std::vector<Sentence> tokenize(std::string_view body) {
  std::vector<Sentence> out;
  auto flush = [&](std::string_view chunk) {
    auto toks = text::word_tokens(chunk);
    if (!toks.empty()) out.push_back(std::move(toks));
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c != '.' && c != '?' && c != '!') continue;
    const bool at_end = i + 1 == body.size();
    const char next = at_end ? ' ' : body[i + 1];
    if (next == ' ' || next == '\t' || next == '\n' || next == '\r' || next == '\f' || next == '\v') {
      flush(body.substr(start, i + 1 - start));
      start = i + 1;
    }
  }
  if (start < body.size()) flush(body.substr(start));
  return out;
}

std::vector<Token> annotate(const lex::Lexicon& lexicon, const Sentence& sentence, std::string doc_id,
                            std::size_t sentence_index) {
  std::vector<Token> tokens;
  tokens.reserve(sentence.size());
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    Token t{doc_id, sentence_index, i, sentence[i], lex::analyze_form(lexicon, sentence[i]), false};
    t.oov = t.analyses.empty();
    tokens.push_back(std::move(t));
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Rules

namespace {

std::vector<std::string> list_field(const std::string& field, std::string_view prefix, std::size_t line) {
  std::string_view v(field);
  if (v.rfind(prefix, 0) == 0) {
    v.remove_prefix(prefix.size());
  } else if (!v.empty()) {
    throw Error(ErrorCode::MalformedLine, field, "expected '" + std::string(prefix) + "' prefix", line);
  }
  if (v.empty()) return {};
  auto items = text::split(v, ',');
  for (const auto& it : items)
    if (it.empty()) throw Error(ErrorCode::MalformedLine, field, "empty list item", line);
  return items;
}

}  // namespace

std::vector<ConstraintRule> load_rules(std::istream& source) {
  std::vector<ConstraintRule> rules;
  std::set<std::string> ids;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(source, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (text::trim(raw).empty() || raw.front() == '#') continue;
    auto f = text::split(raw, '\t');
    // Trailing empty agree/require fields may be omitted entirely.
    while (f.size() < 9 && f.size() >= 7) f.emplace_back();
    if (f.size() != 9 || f[0] != "R") throw Error(ErrorCode::MalformedLine, "", "rule line needs 9 fields", line_no);
    ConstraintRule r;
    r.rule_id = f[1];
    r.relation = f[2];
    r.head_pos = f[3];
    r.dep_pos = f[4];
    if (r.rule_id.empty() || r.relation.empty() || r.head_pos.empty() || r.dep_pos.empty())
      throw Error(ErrorCode::MalformedLine, r.rule_id, "empty rule field", line_no);
    if (f[5] == "L") {
      r.direction = Direction::HeadLeft;
    } else if (f[5] == "R") {
      r.direction = Direction::HeadRight;
    } else {
      throw Error(ErrorCode::MalformedLine, f[5], "direction must be L or R", line_no);
    }
    try {
      std::size_t used = 0;
      const long d = std::stol(f[6], &used);
      if (used != f[6].size() || d <= 0) throw std::invalid_argument("max_distance");
      r.max_distance = static_cast<std::size_t>(d);
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedLine, f[6], "max distance must be a positive integer", line_no);
    }
    r.agree_on = list_field(f[7], "agree:", line_no);
    for (const auto& pair : list_field(f[8], "require:", line_no)) {
      const auto eq = pair.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == pair.size())
        throw Error(ErrorCode::MalformedLine, pair, "require needs feature=value", line_no);
      if (!r.require.emplace(pair.substr(0, eq), pair.substr(eq + 1)).second)
        throw Error(ErrorCode::MalformedLine, pair, "duplicate required feature", line_no);
    }
    if (!ids.insert(r.rule_id).second) throw Error(ErrorCode::DuplicateId, r.rule_id, {}, line_no);
    rules.push_back(std::move(r));
  }
  return rules;
}

std::vector<ConstraintRule> load_rules_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableSource, path);
  return load_rules(in);
}

void validate_rules(const std::vector<ConstraintRule>& rules, const lex::Lexicon& lexicon) {
  const auto& tags = lexicon.pos_tags();
  const auto& feats = lexicon.feature_inventory();
  for (const auto& r : rules) {
    if (!tags.count(r.head_pos) || !tags.count(r.dep_pos))
      throw Error(ErrorCode::MalformedLine, r.rule_id, "rule uses an undeclared part of speech");
    for (const auto& f : r.agree_on)
      if (!feats.count(f)) throw Error(ErrorCode::MalformedLine, r.rule_id, "agreement on undeclared feature " + f);
    for (const auto& [f, v] : r.require) {
      const auto it = feats.find(f);
      if (it == feats.end() || !it->second.count(v))
        throw Error(ErrorCode::MalformedLine, r.rule_id, "requirement on undeclared feature " + f + "=" + v);
    }
  }
}

bool geometry_matches(const ConstraintRule& rule, std::size_t head, std::size_t dep) {
  if (head == dep) return false;
  if (rule.direction == Direction::HeadLeft && head > dep) return false;
  if (rule.direction == Direction::HeadRight && head < dep) return false;
  const std::size_t dist = head > dep ? head - dep : dep - head;
  return dist <= rule.max_distance;
}

bool agrees(const ConstraintRule& rule, const lex::Analysis& head, const lex::Analysis& dep) {
  for (const auto& f : rule.agree_on) {
    const auto h = head.features.find(f);
    const auto d = dep.features.find(f);
    if (h != head.features.end() && d != dep.features.end() && h->second != d->second) return false;
  }
  return true;
}

bool satisfies(const ConstraintRule& rule, const lex::Analysis& head, const lex::Analysis& dep) {
  if (head.pos != rule.head_pos || dep.pos != rule.dep_pos) return false;
  if (!agrees(rule, head, dep)) return false;
  for (const auto& [f, v] : rule.require) {
    const auto it = dep.features.find(f);
    if (it == dep.features.end() || it->second != v) return false;
  }
  return true;
}

bool rule_binds(const ConstraintRule& rule, const std::vector<Token>& tokens, std::size_t head, std::size_t dep) {
  if (!geometry_matches(rule, head, dep)) return false;
  auto has_pos = [](const Token& t, const std::string& pos) {
    return std::any_of(t.analyses.begin(), t.analyses.end(), [&](const lex::Analysis& a) { return a.pos == pos; });
  };
  return has_pos(tokens[head], rule.head_pos) && has_pos(tokens[dep], rule.dep_pos);
}

// ---------------------------------------------------------------------------
// Disambiguation

namespace {

// Binary constraint network over tokens; values are analysis indices.
class ConstraintNetwork {
 public:
  ConstraintNetwork(const std::vector<Token>& tokens, const std::vector<ConstraintRule>& rules)
      : n_(tokens.size()), neighbours_(n_) {
    for (std::size_t h = 0; h < n_; ++h)
      for (std::size_t d = 0; d < n_; ++d)
        for (const auto& r : rules)
          if (rule_binds(r, tokens, h, d)) add(tokens, r, h, d);
    for (auto& nb : neighbours_) {
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
  }

  const std::vector<std::size_t>& neighbours(std::size_t i) const { return neighbours_[i]; }

  bool compatible(std::size_t i, std::size_t a, std::size_t j, std::size_t b) const {
    const auto it = tables_.find({i, j});
    if (it == tables_.end()) return true;
    return it->second[a][b];
  }

 private:
  void add(const std::vector<Token>& tokens, const ConstraintRule& r, std::size_t h, std::size_t d) {
    const auto& ha = tokens[h].analyses;
    const auto& da = tokens[d].analyses;
    auto& fwd = table(h, d, ha.size(), da.size());
    auto& bwd = table(d, h, da.size(), ha.size());
    for (std::size_t a = 0; a < ha.size(); ++a)
      for (std::size_t b = 0; b < da.size(); ++b)
        if (!satisfies(r, ha[a], da[b])) fwd[a][b] = bwd[b][a] = false;
    neighbours_[h].push_back(d);
    neighbours_[d].push_back(h);
  }

  std::vector<std::vector<bool>>& table(std::size_t i, std::size_t j, std::size_t ni, std::size_t nj) {
    auto [it, inserted] = tables_.try_emplace({i, j});
    if (inserted) it->second.assign(ni, std::vector<bool>(nj, true));
    return it->second;
  }

  std::size_t n_;
  std::vector<std::vector<std::size_t>> neighbours_;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::vector<bool>>> tables_;
};

using Domains = std::vector<std::vector<std::size_t>>;

// AC-3. Returns false if some domain that started non-empty becomes empty.
bool propagate(const ConstraintNetwork& net, Domains& dom) {
  std::deque<std::pair<std::size_t, std::size_t>> queue;
  for (std::size_t i = 0; i < dom.size(); ++i)
    for (const std::size_t j : net.neighbours(i)) queue.emplace_back(i, j);
  while (!queue.empty()) {
    const auto [i, j] = queue.front();
    queue.pop_front();
    auto& di = dom[i];
    const auto before = di.size();
    di.erase(std::remove_if(di.begin(), di.end(),
                            [&](std::size_t a) {
                              return std::none_of(dom[j].begin(), dom[j].end(),
                                                  [&](std::size_t b) { return net.compatible(i, a, j, b); });
                            }),
             di.end());
    if (di.size() == before) continue;
    if (di.empty()) return false;
    for (const std::size_t k : net.neighbours(i))
      if (k != j) queue.emplace_back(k, i);
  }
  return true;
}

// Depth-first search with forward checking. `dom` holds the live values;
// `order` lists the variables still to assign.
bool search(const ConstraintNetwork& net, Domains dom, std::vector<std::size_t>& solution,
            const std::vector<std::size_t>& order, std::size_t pos) {
  if (pos == order.size()) return true;
  const std::size_t var = order[pos];
  for (const std::size_t a : dom[var]) {
    Domains next = dom;
    next[var] = {a};
    bool wiped = false;
    for (const std::size_t k : net.neighbours(var)) {
      auto& dk = next[k];
      dk.erase(std::remove_if(dk.begin(), dk.end(), [&](std::size_t b) { return !net.compatible(var, a, k, b); }),
               dk.end());
      if (dk.empty()) {
        wiped = true;
        break;
      }
    }
    if (wiped) continue;
    solution[var] = a;
    if (search(net, std::move(next), solution, order, pos + 1)) return true;
  }
  return false;
}

}  // namespace

Disambiguation disambiguate(std::vector<Token> tokens, const std::vector<ConstraintRule>& rules) {
  const std::size_t n = tokens.size();
  const ConstraintNetwork net(tokens, rules);

  Domains dom(n);
  std::vector<std::size_t> vars;
  for (std::size_t i = 0; i < n; ++i) {
    if (tokens[i].analyses.empty()) continue;
    vars.push_back(i);
    for (std::size_t a = 0; a < tokens[i].analyses.size(); ++a) dom[i].push_back(a);
  }

  if (!propagate(net, dom)) return {std::move(tokens), true};

  // Each value that survived propagation still needs a witness assignment.
  std::vector<std::vector<bool>> supported(n);
  for (std::size_t i = 0; i < n; ++i) supported[i].assign(tokens[i].analyses.size(), false);
  bool any_solution = false;
  std::vector<std::size_t> solution(n, 0);
  for (const std::size_t v : vars) {
    for (const std::size_t a : dom[v]) {
      if (supported[v][a]) continue;
      Domains start = dom;
      start[v] = {a};
      std::vector<std::size_t> order{v};
      for (const std::size_t w : vars)
        if (w != v) order.push_back(w);
      if (!search(net, std::move(start), solution, order, 0)) continue;
      any_solution = true;
      for (const std::size_t w : vars) supported[w][solution[w]] = true;
    }
  }
  if (!vars.empty() && !any_solution) return {std::move(tokens), true};

  for (const std::size_t v : vars) {
    std::vector<lex::Analysis> kept;
    for (std::size_t a = 0; a < tokens[v].analyses.size(); ++a)
      if (supported[v][a]) kept.push_back(std::move(tokens[v].analyses[a]));
    tokens[v].analyses = std::move(kept);
  }
  return {std::move(tokens), false};
}

// ---------------------------------------------------------------------------
// Parsing

ParseGraph parse_sentence(const std::vector<Token>& tokens, const std::vector<ConstraintRule>& rules) {
  ParseGraph g;
  if (!tokens.empty()) {
    g.doc_id = tokens.front().doc_id;
    g.sentence_index = tokens.front().sentence_index;
  }
  g.nodes = tokens;

  // (dep, relation) -> best edge so far
  std::map<std::pair<std::size_t, std::string>, Edge> best;
  auto better = [](const Edge& cand, const Edge& cur) {
    const auto dist = [](const Edge& e) { return e.head > e.dep ? e.head - e.dep : e.dep - e.head; };
    if (dist(cand) != dist(cur)) return dist(cand) < dist(cur);
    if (cand.head != cur.head) return cand.head < cur.head;
    return cand.rule_id < cur.rule_id;
  };
  for (const auto& r : rules) {
    for (std::size_t h = 0; h < tokens.size(); ++h) {
      for (std::size_t d = 0; d < tokens.size(); ++d) {
        if (!geometry_matches(r, h, d)) continue;
        bool ok = false;
        for (const auto& a : tokens[h].analyses) {
          for (const auto& b : tokens[d].analyses)
            if (satisfies(r, a, b)) {
              ok = true;
              break;
            }
          if (ok) break;
        }
        if (!ok) continue;
        Edge e{r.relation, h, d, r.rule_id};
        auto [it, inserted] = best.try_emplace({d, r.relation}, e);
        if (!inserted && better(e, it->second)) it->second = e;
      }
    }
  }
  for (auto& [key, e] : best) g.edges.insert(std::move(e));
  return g;
}

std::vector<ParseGraph> analyze_document(const lex::Lexicon& lexicon, const std::vector<ConstraintRule>& rules,
                                         const std::string& doc_id, std::string_view body) {
  std::vector<ParseGraph> out;
  const auto sentences = tokenize(body);
  out.reserve(sentences.size());
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    auto result = disambiguate(annotate(lexicon, sentences[s], doc_id, s), rules);
    auto g = parse_sentence(result.tokens, rules);
    g.doc_id = doc_id;
    g.sentence_index = s;
    g.unresolved = result.unresolved;
    out.push_back(std::move(g));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

std::string format_parse_graphs(const std::vector<ParseGraph>& graphs) {
  std::string out;
  for (const auto& g : graphs) {
    out += "S\t" + std::to_string(g.sentence_index) + '\t' + (g.unresolved ? "UNRESOLVED" : "ok") + '\n';
    for (const auto& t : g.nodes) {
      const std::string prefix = "N\t" + std::to_string(t.token_index) + '\t' + t.surface + '\t';
      if (t.analyses.empty()) out += prefix + "?\t\n";
      for (const auto& a : t.analyses) out += prefix + a.lexeme_id + '\t' + lex::format_features(a.features) + '\n';
    }
    for (const auto& e : g.edges)
      out += "E\t" + e.relation + '\t' + std::to_string(e.head) + '\t' + std::to_string(e.dep) + '\t' + e.rule_id + '\n';
  }
  return out;
}

std::vector<ParseGraph> read_parse_graphs(std::istream& in, const std::string& doc_id, const lex::Lexicon& lexicon) {
  std::vector<ParseGraph> out;
  std::string line;
  std::size_t line_no = 0;
  auto index = [&](const std::string& s) -> std::size_t {
    try {
      std::size_t used = 0;
      const auto v = std::stoul(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedLine, s, "expected index", line_no);
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = text::split(line, '\t');
    if (f[0] == "S" && f.size() == 3) {
      ParseGraph g;
      g.doc_id = doc_id;
      g.sentence_index = index(f[1]);
      g.unresolved = f[2] == "UNRESOLVED";
      out.push_back(std::move(g));
      continue;
    }
    if (out.empty()) throw Error(ErrorCode::MalformedLine, doc_id, "record before sentence header", line_no);
    auto& g = out.back();
    if (f[0] == "N" && f.size() == 5) {
      const std::size_t idx = index(f[1]);
      if (idx == g.nodes.size()) {
        g.nodes.push_back(Token{doc_id, g.sentence_index, idx, f[2], {}, false});
      } else if (idx + 1 != g.nodes.size()) {
        throw Error(ErrorCode::MalformedLine, f[1], "node indices must be dense", line_no);
      }
      auto& t = g.nodes.back();
      if (f[3] == "?") {
        t.oov = true;
        continue;
      }
      const lex::Lexeme* lx = lexicon.find_lexeme(f[3]);
      if (!lx) throw Error(ErrorCode::UnknownLexeme, f[3], {}, line_no);
      lex::Analysis a{lx->id, text::to_lower(f[2]), {}, lx->pos};
      if (!f[4].empty())
        for (const auto& kv : text::split(f[4], ',')) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) throw Error(ErrorCode::MalformedLine, kv, "bad feature", line_no);
          a.features.emplace(kv.substr(0, eq), kv.substr(eq + 1));
        }
      t.analyses.push_back(std::move(a));
    } else if (f[0] == "E" && f.size() == 5) {
      Edge e{f[1], index(f[2]), index(f[3]), f[4]};
      if (e.head >= g.nodes.size() || e.dep >= g.nodes.size() || e.head == e.dep)
        throw Error(ErrorCode::MalformedLine, f[1], "edge endpoints out of range", line_no);
      g.edges.insert(std::move(e));
    } else {
      throw Error(ErrorCode::MalformedLine, f[0], "unknown parse record", line_no);
    }
  }
  return out;
}

}  // namespace ikon::ling
