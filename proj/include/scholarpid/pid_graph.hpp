#pragma once

#include <json.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scholarpid/doi.hpp"
#include "scholarpid/errors.hpp"
#include "scholarpid/metadata.hpp"
#include "scholarpid/orcid.hpp"
#include "scholarpid/registrar.hpp"

namespace scholarpid {

enum class NodeKind { registered_work, external_stub };

inline const char* node_kind_name(NodeKind k) {
  return k == NodeKind::registered_work ? "registered-work" : "external-stub";
}

struct GraphCreator {
  std::optional<std::string> id;  // ORCID URI when the creator has one
  std::string name;

  bool operator==(const GraphCreator&) const = default;
};

struct WorkEdge {
  RelationType relation;
  Doi target;

  bool operator==(const WorkEdge& o) const {
    return relation == o.relation && target == o.target;
  }
};

struct WorkNode {
  Doi doi;
  std::vector<std::string> titles;
  std::vector<GraphCreator> creators;
  NodeKind kind = NodeKind::registered_work;
  std::vector<WorkEdge> edges;
};

struct CitationResult {
  std::size_t total_count = 0;
  std::vector<WorkNode> nodes;
};

/// Node summary in the wire shape used by citation/reference results:
/// lowercase DOI-URL id, creators (ORCID-URI ids), titles.
inline nlohmann::json node_to_json(const WorkNode& n) {
  nlohmann::json creators = nlohmann::json::array();
  for (const auto& c : n.creators) {
    nlohmann::json creator;
    if (c.id) creator["id"] = *c.id;
    creator["name"] = c.name;
    creators.push_back(std::move(creator));
  }
  nlohmann::json titles = nlohmann::json::array();
  for (const auto& t : n.titles) titles.push_back({{"title", t}});
  return {{"id", n.doi.url()},
          {"doi", n.doi.display_url()},
          {"kind", node_kind_name(n.kind)},
          {"creators", std::move(creators)},
          {"titles", std::move(titles)}};
}

inline nlohmann::json to_json(const CitationResult& r) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : r.nodes) nodes.push_back(node_to_json(n));
  return {{"totalCount", r.total_count}, {"nodes", std::move(nodes)}};
}

/// A typed graph over every registered work and external stub, with inverse
/// relations materialized. Instances are immutable once built; rebuild
/// produces a fresh graph from the full registry state.
class PidGraph {
 public:
  static PidGraph rebuild(const RegistryState& state) {
    PidGraph g;
    for (const auto& entry : state.entries) {
      WorkNode node;
      node.doi = entry.doi;
      node.kind = NodeKind::registered_work;
      for (const auto& t : entry.metadata.titles) node.titles.push_back(t.text);
      for (const auto& c : entry.metadata.creators) {
        GraphCreator gc;
        gc.name = c.name;
        for (const auto& ni : c.name_identifiers) {
          if (ni.scheme != "ORCID") continue;
          if (auto orcid = OrcidId::try_parse(ni.value)) {
            gc.id = orcid->uri();
            break;
          }
        }
        node.creators.push_back(std::move(gc));
      }
      for (const auto& rel : entry.metadata.related_identifiers) {
        add_edge(node, {rel.relation, rel.target});
      }
      g.nodes_[entry.doi.lowercase()] = std::move(node);
    }
    for (const auto& stub : state.stubs) {
      WorkNode node;
      node.doi = stub.doi;
      node.kind = NodeKind::external_stub;
      node.titles.push_back(stub.title);
      g.nodes_[stub.doi.lowercase()] = std::move(node);
    }

    // Materialize inverses for edges whose target is in the graph; dangling
    // targets keep their forward edge and get nothing else.
    for (auto& [source_key, source] : g.nodes_) {
      for (std::size_t i = 0; i < source.edges.size(); ++i) {
        const WorkEdge edge = source.edges[i];
        auto target = g.nodes_.find(edge.target.lowercase());
        if (target == g.nodes_.end()) continue;
        if (target->first == source_key) continue;  // self-loops gain no inverse
        add_edge(target->second, {inverse_relation(edge.relation), source.doi});
      }
    }
    return g;
  }

  const std::map<std::string, WorkNode>& nodes() const { return nodes_; }

  const WorkNode& node(const Doi& doi) const {
    auto it = nodes_.find(doi.lowercase());
    if (it == nodes_.end()) {
      raise(Errc::unknown_doi, doi.to_string() + " is not in the graph");
    }
    return it->second;
  }

  /// Works that reference the given one. Sorted by DOI for determinism.
  CitationResult citations_of(const Doi& doi) const {
    const WorkNode& target = node(doi);
    std::set<std::string> seen;
    CitationResult out;
    for (const auto& e : target.edges) {
      if (e.relation != RelationType::is_referenced_by) continue;
      auto it = nodes_.find(e.target.lowercase());
      if (it == nodes_.end()) continue;  // dangling, excluded from results
      if (!seen.insert(it->first).second) continue;
      out.nodes.push_back(it->second);
    }
    std::sort(out.nodes.begin(), out.nodes.end(),
              [](const WorkNode& a, const WorkNode& b) {
                return a.doi.lowercase() < b.doi.lowercase();
              });
    out.total_count = out.nodes.size();
    return out;
  }

  /// Works the given one references, in stored edge order.
  CitationResult references_of(const Doi& doi) const {
    const WorkNode& source = node(doi);
    std::set<std::string> seen;
    CitationResult out;
    for (const auto& e : source.edges) {
      if (e.relation != RelationType::references) continue;
      auto it = nodes_.find(e.target.lowercase());
      if (it == nodes_.end()) continue;  // dangling, excluded from results
      if (!seen.insert(it->first).second) continue;
      out.nodes.push_back(it->second);
    }
    out.total_count = out.nodes.size();
    return out;
  }

  /// The full version chain the DOI belongs to, oldest first: walk
  /// IsNewVersionOf links back to the origin, then IsPreviousVersionOf links
  /// forward. Cycles (never produced by publishing) terminate the walk.
  std::vector<WorkNode> version_chain_of(const Doi& doi) const {
    const WorkNode& start = node(doi);
    std::set<std::string> visited{start.doi.lowercase()};

    const WorkNode* oldest = &start;
    while (const WorkNode* prior =
               follow(*oldest, RelationType::is_new_version_of, visited)) {
      oldest = prior;
    }

    std::vector<WorkNode> chain{*oldest};
    visited = {oldest->doi.lowercase()};
    const WorkNode* current = oldest;
    while (const WorkNode* next =
               follow(*current, RelationType::is_previous_version_of, visited)) {
      chain.push_back(*next);
      current = next;
    }
    return chain;
  }

  /// All works crediting the given researcher identifier as a creator.
  std::vector<WorkNode> works_of_orcid(const OrcidId& orcid) const {
    const std::string uri = orcid.uri();
    std::vector<WorkNode> out;
    for (const auto& [_, n] : nodes_) {
      for (const auto& c : n.creators) {
        if (c.id && *c.id == uri) {
          out.push_back(n);
          break;
        }
      }
    }
    return out;
  }

  /// Field-selection query mirroring the PID-graph citation lookup: the
  /// request names a work (`work.id`, bare DOI or DOI URL) and selects any
  /// subset of {titles{title}, doi, citations{totalCount, nodes{id,
  /// creators{id,name}, titles{title}}}}. The reply nests the selected
  /// fields under data.work in selection order.
  nlohmann::ordered_json query(const nlohmann::ordered_json& q) const {
    if (!q.is_object() || !q.contains("work") || !q.at("work").is_object()) {
      raise(Errc::bad_request, "query must be {\"work\": {\"id\": ..., <fields>}}");
    }
    const auto& work_sel = q.at("work");
    if (!work_sel.contains("id") || !work_sel.at("id").is_string()) {
      raise(Errc::bad_request, "work.id (a DOI or DOI URL) is required");
    }
    const WorkNode& work = node(parse_work_id(work_sel.at("id").get<std::string>()));

    nlohmann::ordered_json out_work = nlohmann::ordered_json::object();
    bool selected_any = false;
    for (const auto& [field, sel] : work_sel.items()) {
      if (field == "id") continue;
      selected_any = true;
      if (field == "titles") {
        out_work["titles"] = titles_json(work, subselect(field, sel, {"title"}));
      } else if (field == "doi") {
        require_leaf(field, sel);
        out_work["doi"] = work.doi.display_url();
      } else if (field == "citations") {
        out_work["citations"] =
            citations_json(work, subselect(field, sel, {"totalCount", "nodes"}));
      } else {
        raise(Errc::unsupported_field, "unsupported field: " + field);
      }
    }
    if (!selected_any) {
      raise(Errc::unsupported_field, "query selects no fields on work");
    }

    nlohmann::ordered_json out;
    out["data"]["work"] = std::move(out_work);
    return out;
  }

  /// Accepts a bare DOI, a doi.org URL, or a "doi:" handle and returns the
  /// DOI it names. Raises bad_request when none of those spellings fit.
  static Doi parse_work_id(const std::string& id) {
    std::string text = id;
    for (const char* scheme : {"https://doi.org/", "http://doi.org/", "doi:"}) {
      if (text.rfind(scheme, 0) == 0) {
        text = text.substr(std::string(scheme).size());
        break;
      }
    }
    auto doi = Doi::try_parse(text);
    if (!doi) raise(Errc::bad_request, "work.id is not a DOI: " + id);
    return *doi;
  }

 private:
  static void add_edge(WorkNode& node, const WorkEdge& edge) {
    for (const auto& e : node.edges) {
      if (e == edge) return;
    }
    node.edges.push_back(edge);
  }

  const WorkNode* follow(const WorkNode& from, RelationType relation,
                         std::set<std::string>& visited) const {
    for (const auto& e : from.edges) {
      if (e.relation != relation) continue;
      auto it = nodes_.find(e.target.lowercase());
      if (it == nodes_.end()) continue;
      if (!visited.insert(it->first).second) continue;
      return &it->second;
    }
    return nullptr;
  }

  /// A field selection is either `true` (whole subtree) or an object whose
  /// keys come from the allowed set.
  static nlohmann::ordered_json subselect(const std::string& field,
                                          const nlohmann::ordered_json& sel,
                                          const std::set<std::string>& allowed) {
    if (sel.is_boolean() && sel.get<bool>()) {
      nlohmann::ordered_json full = nlohmann::ordered_json::object();
      for (const auto& f : allowed) full[f] = true;
      return full;
    }
    if (!sel.is_object()) {
      raise(Errc::unsupported_field,
            "selection for " + field + " must be true or an object of fields");
    }
    if (sel.empty()) {
      raise(Errc::unsupported_field, "selection for " + field + " selects no fields");
    }
    for (const auto& [key, _] : sel.items()) {
      if (!allowed.count(key)) {
        raise(Errc::unsupported_field, "unsupported field: " + field + "." + key);
      }
    }
    return sel;
  }

  static void require_leaf(const std::string& field, const nlohmann::ordered_json& sel) {
    if (!(sel.is_boolean() && sel.get<bool>())) {
      raise(Errc::unsupported_field, field + " is a leaf field; select it with true");
    }
  }

  static nlohmann::ordered_json titles_json(const WorkNode& n,
                                            const nlohmann::ordered_json& sel) {
    auto out = nlohmann::ordered_json::array();
    for (const auto& t : n.titles) {
      nlohmann::ordered_json item = nlohmann::ordered_json::object();
      for (const auto& [key, leaf] : sel.items()) {
        require_leaf("titles." + key, leaf);
        item["title"] = t;
      }
      out.push_back(std::move(item));
    }
    return out;
  }

  nlohmann::ordered_json creators_json(const WorkNode& n,
                                       const nlohmann::ordered_json& sel) const {
    auto out = nlohmann::ordered_json::array();
    for (const auto& c : n.creators) {
      nlohmann::ordered_json item = nlohmann::ordered_json::object();
      for (const auto& [key, leaf] : sel.items()) {
        require_leaf("creators." + key, leaf);
        if (key == "id") {
          if (c.id) item["id"] = *c.id;  // creators without one omit the key
        } else {
          item["name"] = c.name;
        }
      }
      out.push_back(std::move(item));
    }
    return out;
  }

  nlohmann::ordered_json citations_json(const WorkNode& work,
                                        const nlohmann::ordered_json& sel) const {
    const CitationResult result = citations_of(work.doi);
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (const auto& [key, sub] : sel.items()) {
      if (key == "totalCount") {
        require_leaf("citations.totalCount", sub);
        out["totalCount"] = result.total_count;
      } else {
        const nlohmann::ordered_json node_sel =
            subselect("citations.nodes", sub, {"id", "creators", "titles"});
        auto nodes = nlohmann::ordered_json::array();
        for (const auto& n : result.nodes) {
          nlohmann::ordered_json item = nlohmann::ordered_json::object();
          for (const auto& [nkey, nsub] : node_sel.items()) {
            if (nkey == "id") {
              require_leaf("nodes.id", nsub);
              item["id"] = n.doi.url();
            } else if (nkey == "creators") {
              item["creators"] = creators_json(n, subselect("nodes.creators", nsub,
                                                            {"id", "name"}));
            } else {
              item["titles"] = titles_json(n, subselect("nodes.titles", nsub, {"title"}));
            }
          }
          nodes.push_back(std::move(item));
        }
        out["nodes"] = std::move(nodes);
      }
    }
    return out;
  }

  std::map<std::string, WorkNode> nodes_;  // lowercase DOI → node
};

}  // namespace scholarpid
