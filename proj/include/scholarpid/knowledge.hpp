#pragma once

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "scholarpid/doi.hpp"
#include "scholarpid/errors.hpp"
#include "scholarpid/journal.hpp"
#include "scholarpid/orcid.hpp"
#include "scholarpid/time.hpp"

namespace scholarpid {

struct Agent {
  std::string name;  // "Family, Given"
  std::optional<OrcidId> orcid;
  std::optional<std::string> affiliation;
  std::optional<std::string> organization_id;  // ROR-style

  bool operator==(const Agent&) const = default;
};

enum class ValueKind { literal, resource };

// One endpoint of a statement: a literal value or a reference to a
// third-party semantic resource.
struct NodeValue {
  ValueKind kind = ValueKind::literal;
  std::string text;

  static NodeValue lit(std::string t) { return {ValueKind::literal, std::move(t)}; }
  static NodeValue res(std::string t) { return {ValueKind::resource, std::move(t)}; }

  bool operator==(const NodeValue&) const = default;
};

struct Statement {
  NodeValue subject;
  std::string predicate;
  NodeValue object;

  bool operator==(const Statement&) const = default;
};

struct Contribution {
  std::string contribution_id;
  std::string research_problem;
  std::vector<Statement> statements;

  bool operator==(const Contribution&) const = default;
};

enum class ChangeKind {
  create,
  update_field,
  add_contribution,
  remove_contribution,
  update_statement,
};

inline const char* change_kind_name(ChangeKind k) {
  switch (k) {
    case ChangeKind::create: return "create";
    case ChangeKind::update_field: return "update-field";
    case ChangeKind::add_contribution: return "add-contribution";
    case ChangeKind::remove_contribution: return "remove-contribution";
    case ChangeKind::update_statement: return "update-statement";
  }
  return "?";
}

inline ChangeKind change_kind_from(const std::string& name) {
  if (name == "create") return ChangeKind::create;
  if (name == "update-field") return ChangeKind::update_field;
  if (name == "add-contribution") return ChangeKind::add_contribution;
  if (name == "remove-contribution") return ChangeKind::remove_contribution;
  if (name == "update-statement") return ChangeKind::update_statement;
  raise(Errc::storage_fault, "unknown change kind: " + name);
}

struct ChangeEvent {
  std::uint64_t seq = 0;
  Timestamp timestamp;
  std::string actor;
  ChangeKind kind = ChangeKind::create;
  std::string target_path;
  std::optional<nlohmann::json> before;
  std::optional<nlohmann::json> after;
};

struct PaperRecord {
  std::string record_id;
  std::string title;
  std::string research_field;
  std::optional<Doi> article_doi;
  std::vector<Agent> authors;
  std::vector<Contribution> contributions;
  Timestamp created_at;
  Timestamp modified_at;
  std::vector<ChangeEvent> change_log;
};

// ---- JSON shapes ----------------------------------------------------------

inline nlohmann::json to_json(const NodeValue& v) {
  return {{"kind", v.kind == ValueKind::literal ? "literal" : "resource"},
          {"value", v.text}};
}

inline NodeValue node_value_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("value")) {
    raise(Errc::malformed_statement, "statement value must be {kind, value}");
  }
  const std::string kind = j.at("kind").get<std::string>();
  NodeValue v;
  if (kind == "literal") {
    v.kind = ValueKind::literal;
  } else if (kind == "resource") {
    v.kind = ValueKind::resource;
  } else {
    raise(Errc::malformed_statement, "statement value kind must be literal|resource");
  }
  v.text = j.at("value").get<std::string>();
  return v;
}

inline nlohmann::json to_json(const Statement& s) {
  return {{"subject", to_json(s.subject)},
          {"predicate", s.predicate},
          {"object", to_json(s.object)}};
}

inline Statement statement_from_json(const nlohmann::json& j) {
  if (!j.is_object()) raise(Errc::malformed_statement, "statement must be an object");
  Statement s;
  if (!j.contains("subject") || !j.contains("predicate") || !j.contains("object")) {
    raise(Errc::malformed_statement, "statement needs subject, predicate, object");
  }
  s.subject = node_value_from_json(j.at("subject"));
  if (!j.at("predicate").is_string()) {
    raise(Errc::malformed_statement, "predicate must be a string");
  }
  s.predicate = j.at("predicate").get<std::string>();
  if (s.predicate.empty()) raise(Errc::malformed_statement, "empty predicate");
  if (j.at("object").is_null()) raise(Errc::malformed_statement, "null object");
  s.object = node_value_from_json(j.at("object"));
  return s;
}

inline nlohmann::json to_json(const Agent& a) {
  nlohmann::json j{{"name", a.name}};
  if (a.orcid) j["orcid"] = a.orcid->value();
  if (a.affiliation) j["affiliation"] = *a.affiliation;
  if (a.organization_id) j["organization_id"] = *a.organization_id;
  return j;
}

inline Agent agent_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("name") || !j.at("name").is_string()) {
    raise(Errc::bad_request, "author must be an object with a name");
  }
  Agent a;
  a.name = j.at("name").get<std::string>();
  if (a.name.empty()) raise(Errc::bad_request, "author name must be non-empty");
  if (j.contains("orcid") && !j.at("orcid").is_null()) {
    a.orcid = OrcidId::try_parse(j.at("orcid").get<std::string>());
    if (!a.orcid) {
      raise(Errc::invalid_orcid, "invalid ORCID: " + j.at("orcid").get<std::string>());
    }
  }
  if (j.contains("affiliation") && !j.at("affiliation").is_null()) {
    a.affiliation = j.at("affiliation").get<std::string>();
  }
  if (j.contains("organization_id") && !j.at("organization_id").is_null()) {
    a.organization_id = j.at("organization_id").get<std::string>();
  }
  return a;
}

inline nlohmann::json to_json(const Contribution& c) {
  nlohmann::json stmts = nlohmann::json::array();
  for (const auto& s : c.statements) stmts.push_back(to_json(s));
  return {{"contribution_id", c.contribution_id},
          {"research_problem", c.research_problem},
          {"statements", std::move(stmts)}};
}

inline Contribution contribution_from_json(const nlohmann::json& j) {
  Contribution c;
  c.contribution_id = j.at("contribution_id").get<std::string>();
  c.research_problem = j.at("research_problem").get<std::string>();
  for (const auto& s : j.at("statements")) c.statements.push_back(statement_from_json(s));
  return c;
}

inline nlohmann::json to_json(const ChangeEvent& e) {
  nlohmann::json j{{"seq", e.seq},
                   {"timestamp", e.timestamp.to_iso()},
                   {"actor", e.actor},
                   {"kind", change_kind_name(e.kind)},
                   {"target_path", e.target_path}};
  if (e.before) j["before"] = *e.before;
  if (e.after) j["after"] = *e.after;
  return j;
}

inline ChangeEvent change_event_from_json(const nlohmann::json& j) {
  ChangeEvent e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.timestamp = Timestamp::from_iso(j.at("timestamp").get<std::string>());
  e.actor = j.at("actor").get<std::string>();
  e.kind = change_kind_from(j.at("kind").get<std::string>());
  e.target_path = j.at("target_path").get<std::string>();
  if (j.contains("before")) e.before = j.at("before");
  if (j.contains("after")) e.after = j.at("after");
  return e;
}

/// Full-fidelity record state (everything except the change log), used as
/// the payload of create events so recovery starts from the exact state.
inline nlohmann::json record_to_json(const PaperRecord& r) {
  nlohmann::json doc;
  doc["record_id"] = r.record_id;
  doc["title"] = r.title;
  doc["research_field"] = r.research_field;
  if (r.article_doi) doc["article_doi"] = r.article_doi->to_string();
  nlohmann::json authors = nlohmann::json::array();
  for (const auto& a : r.authors) authors.push_back(to_json(a));
  doc["authors"] = std::move(authors);
  nlohmann::json contributions = nlohmann::json::array();
  for (const auto& c : r.contributions) contributions.push_back(to_json(c));
  doc["contributions"] = std::move(contributions);
  doc["created_at"] = r.created_at.to_iso();
  doc["modified_at"] = r.modified_at.to_iso();
  return doc;
}

inline PaperRecord record_from_json(const nlohmann::json& doc) {
  PaperRecord r;
  r.record_id = doc.at("record_id").get<std::string>();
  r.title = doc.at("title").get<std::string>();
  r.research_field = doc.at("research_field").get<std::string>();
  if (doc.contains("article_doi")) {
    r.article_doi = Doi::parse(doc.at("article_doi").get<std::string>());
  }
  for (const auto& a : doc.at("authors")) r.authors.push_back(agent_from_json(a));
  for (const auto& c : doc.at("contributions")) {
    r.contributions.push_back(contribution_from_json(c));
  }
  r.created_at = Timestamp::from_iso(doc.at("created_at").get<std::string>());
  r.modified_at = Timestamp::from_iso(doc.at("modified_at").get<std::string>());
  return r;
}

/// The canonical publish document: stable field names (record_id, title,
/// research_field, article_doi, authors, contributions, created_at,
/// modified_at), optional fields omitted when absent, keys kept
/// lexicographically sorted by the JSON type itself. This exact document is
/// what publishing freezes and hashes; it coincides with the full record
/// state minus the change log.
inline nlohmann::json canonical_document(const PaperRecord& r) {
  return record_to_json(r);
}

inline std::string canonical_json(const PaperRecord& r) {
  return canonical_document(r).dump();
}

// ---- mutation paths -------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t slash = path.find('/', start);
    if (slash == std::string::npos) {
      parts.push_back(path.substr(start));
      break;
    }
    parts.push_back(path.substr(start, slash - start));
    start = slash + 1;
  }
  return parts;
}

inline Contribution* find_contribution(PaperRecord& r, const std::string& cid) {
  for (auto& c : r.contributions) {
    if (c.contribution_id == cid) return &c;
  }
  return nullptr;
}

}  // namespace detail

/// Applies one change event to a record in place. This is the single
/// mutation path: live operations build an event and apply it, and journal
/// recovery folds the same function over the stored log.
inline void apply_event(PaperRecord& record, const ChangeEvent& event) {
  switch (event.kind) {
    case ChangeKind::create: {
      if (!event.after) raise(Errc::storage_fault, "create event without payload");
      record = record_from_json(*event.after);
      break;
    }
    case ChangeKind::update_field: {
      if (!event.after && event.target_path != "article_doi") {
        raise(Errc::storage_fault, "update-field event without value");
      }
      const auto parts = detail::split_path(event.target_path);
      if (parts.size() == 1 && parts[0] == "title") {
        record.title = event.after->get<std::string>();
      } else if (parts.size() == 1 && parts[0] == "research_field") {
        record.research_field = event.after->get<std::string>();
      } else if (parts.size() == 1 && parts[0] == "article_doi") {
        if (!event.after || event.after->is_null()) {
          record.article_doi.reset();
        } else {
          record.article_doi = Doi::parse(event.after->get<std::string>());
        }
      } else if (parts.size() == 1 && parts[0] == "authors") {
        std::vector<Agent> authors;
        for (const auto& a : *event.after) authors.push_back(agent_from_json(a));
        record.authors = std::move(authors);
      } else if (parts.size() == 3 && parts[0] == "contributions" &&
                 parts[2] == "research_problem") {
        auto* c = detail::find_contribution(record, parts[1]);
        if (!c) raise(Errc::invalid_path, "unknown contribution: " + parts[1]);
        c->research_problem = event.after->get<std::string>();
      } else {
        raise(Errc::invalid_path, "not a mutable field: " + event.target_path);
      }
      record.modified_at = event.timestamp;
      break;
    }
    case ChangeKind::add_contribution: {
      record.contributions.push_back(contribution_from_json(*event.after));
      record.modified_at = event.timestamp;
      break;
    }
    case ChangeKind::remove_contribution: {
      const auto parts = detail::split_path(event.target_path);
      const std::string& cid = parts.back();
      auto& cs = record.contributions;
      std::size_t before = cs.size();
      std::erase_if(cs, [&](const Contribution& c) { return c.contribution_id == cid; });
      if (cs.size() == before) raise(Errc::invalid_path, "unknown contribution: " + cid);
      record.modified_at = event.timestamp;
      break;
    }
    case ChangeKind::update_statement: {
      const auto parts = detail::split_path(event.target_path);
      if (parts.size() != 4 || parts[0] != "contributions" || parts[2] != "statements") {
        raise(Errc::invalid_path, "bad statement path: " + event.target_path);
      }
      auto* c = detail::find_contribution(record, parts[1]);
      if (!c) raise(Errc::invalid_path, "unknown contribution: " + parts[1]);
      std::size_t idx = 0;
      try {
        idx = std::stoul(parts[3]);
      } catch (...) {
        raise(Errc::invalid_path, "bad statement index: " + parts[3]);
      }
      if (idx >= c->statements.size()) {
        raise(Errc::invalid_path, "statement index out of range: " + parts[3]);
      }
      c->statements[idx] = statement_from_json(*event.after);
      record.modified_at = event.timestamp;
      break;
    }
  }
}

// ---- store ----------------------------------------------------------------

/// Owns the live, editable records and their change logs, persisted to an
/// append-only journal of change events. Reads are concurrent; writes to one
/// record are serialized behind a per-record mutex.
class PaperStore {
 public:
  PaperStore(std::filesystem::path journal_path, std::shared_ptr<Clock> clock)
      : clock_(std::move(clock)), journal_(std::move(journal_path)) {
    Journal::replay(journal_.path(), [this](const nlohmann::json& line) {
      const std::string id = line.at("record_id").get<std::string>();
      ChangeEvent event = change_event_from_json(line.at("event"));
      auto& slot = slots_[id];
      if (!slot) slot = std::make_unique<Slot>();
      apply_event(slot->record, event);
      slot->record.change_log.push_back(std::move(event));
      bump_counter(id);
    });
  }

  PaperRecord create_paper(const std::string& title, const std::string& research_field,
                           const std::optional<Doi>& article_doi,
                           const std::vector<Agent>& authors,
                           const std::string& actor = "anonymous") {
    if (title.empty()) raise(Errc::empty_title, "title must be non-empty");
    for (const auto& a : authors) {
      if (a.name.empty()) raise(Errc::bad_request, "author name must be non-empty");
    }

    PaperRecord r;
    r.title = title;
    r.research_field = research_field;
    r.article_doi = article_doi;
    r.authors = authors;
    const Timestamp now = clock_->now();
    r.created_at = now;
    r.modified_at = now;

    std::unique_lock<std::shared_mutex> map_lock(map_mu_);
    r.record_id = "p" + std::to_string(next_num_++);
    ChangeEvent event;
    event.seq = 1;
    event.timestamp = now;
    event.actor = actor;
    event.kind = ChangeKind::create;
    event.target_path = "";
    event.after = record_to_json(r);

    auto slot = std::make_unique<Slot>();
    apply_event(slot->record, event);
    slot->record.change_log.push_back(event);
    PaperRecord copy = slot->record;
    slots_[r.record_id] = std::move(slot);
    journal_.append({{"record_id", r.record_id}, {"event", to_json(event)}});
    return copy;
  }

  PaperRecord update_paper(const std::string& record_id, const std::string& path,
                           const nlohmann::json& value, const std::string& actor) {
    Slot& slot = find(record_id);
    std::lock_guard<std::mutex> lock(slot.mu);
    PaperRecord& r = slot.record;

    ChangeEvent event;
    event.seq = r.change_log.back().seq + 1;
    event.timestamp = clock_->now();
    event.actor = actor;
    event.target_path = path;

    const auto parts = detail::split_path(path);
    if (parts.size() == 1 && parts[0] == "title") {
      require_string(value, "title");
      if (value.get<std::string>().empty()) raise(Errc::empty_title, "title must be non-empty");
      event.kind = ChangeKind::update_field;
      event.before = r.title;
      event.after = value;
    } else if (parts.size() == 1 && parts[0] == "research_field") {
      require_string(value, "research_field");
      event.kind = ChangeKind::update_field;
      event.before = r.research_field;
      event.after = value;
    } else if (parts.size() == 1 && parts[0] == "article_doi") {
      if (!value.is_null()) {
        require_string(value, "article_doi");
        Doi::parse(value.get<std::string>());  // syntax check up front
      }
      event.kind = ChangeKind::update_field;
      if (r.article_doi) event.before = r.article_doi->to_string();
      event.after = value;
    } else if (parts.size() == 1 && parts[0] == "authors") {
      if (!value.is_array()) raise(Errc::bad_request, "authors must be an array");
      for (const auto& a : value) agent_from_json(a);  // validate each
      event.kind = ChangeKind::update_field;
      nlohmann::json before = nlohmann::json::array();
      for (const auto& a : r.authors) before.push_back(to_json(a));
      event.before = std::move(before);
      event.after = value;
    } else if (parts.size() == 1 && parts[0] == "contributions") {
      // Appending: the value is a whole contribution document.
      if (!value.is_object()) {
        raise(Errc::bad_request, "adding a contribution takes an object value");
      }
      std::vector<Statement> statements;
      if (value.contains("statements")) {
        for (const auto& s : value.at("statements")) {
          statements.push_back(statement_from_json(s));
        }
      }
      do_add_contribution(r, value.value("research_problem", ""), statements, actor);
      return r;
    } else if (parts.size() == 2 && parts[0] == "contributions") {
      auto* c = detail::find_contribution(r, parts[1]);
      if (!c) raise(Errc::invalid_path, "unknown contribution: " + parts[1]);
      if (!value.is_null()) {
        raise(Errc::invalid_path,
              "a contribution entry can only be cleared (null); append via path"
              " \"contributions\"");
      }
      event.kind = ChangeKind::remove_contribution;
      event.before = to_json(*c);
    } else if (parts.size() == 3 && parts[0] == "contributions" &&
               parts[2] == "research_problem") {
      auto* c = detail::find_contribution(r, parts[1]);
      if (!c) raise(Errc::invalid_path, "unknown contribution: " + parts[1]);
      require_string(value, "research_problem");
      if (value.get<std::string>().empty()) {
        raise(Errc::empty_research_problem, "research problem must be non-empty");
      }
      event.kind = ChangeKind::update_field;
      event.before = c->research_problem;
      event.after = value;
    } else if (parts.size() == 4 && parts[0] == "contributions" &&
               parts[2] == "statements") {
      auto* c = detail::find_contribution(r, parts[1]);
      if (!c) raise(Errc::invalid_path, "unknown contribution: " + parts[1]);
      statement_from_json(value);  // MalformedStatement on bad shape
      std::size_t idx = 0;
      try {
        idx = std::stoul(parts[3]);
      } catch (...) {
        raise(Errc::invalid_path, "bad statement index: " + parts[3]);
      }
      if (idx >= c->statements.size()) {
        raise(Errc::invalid_path, "statement index out of range: " + parts[3]);
      }
      event.kind = ChangeKind::update_statement;
      event.before = to_json(c->statements[idx]);
      event.after = value;
    } else {
      raise(Errc::invalid_path, "not a mutable field: " + path);
    }

    apply_event(r, event);
    r.change_log.push_back(event);
    journal_.append({{"record_id", record_id}, {"event", to_json(event)}});
    return r;
  }

  Contribution add_contribution(const std::string& record_id,
                                const std::string& research_problem,
                                const std::vector<Statement>& statements,
                                const std::string& actor) {
    Slot& slot = find(record_id);
    std::lock_guard<std::mutex> lock(slot.mu);
    return do_add_contribution(slot.record, research_problem, statements, actor);
  }

  PaperRecord get_paper(const std::string& record_id) const {
    const Slot& slot = find(record_id);
    std::lock_guard<std::mutex> lock(slot.mu);
    return slot.record;
  }

  std::vector<ChangeEvent> list_changes(const std::string& record_id,
                                        std::uint64_t since_seq) const {
    const Slot& slot = find(record_id);
    std::lock_guard<std::mutex> lock(slot.mu);
    std::vector<ChangeEvent> out;
    for (const auto& e : slot.record.change_log) {
      if (e.seq > since_seq) out.push_back(e);
    }
    return out;
  }

  std::vector<std::string> record_ids() const {
    std::shared_lock<std::shared_mutex> lock(map_mu_);
    std::vector<std::string> ids;
    ids.reserve(slots_.size());
    for (const auto& [id, _] : slots_) ids.push_back(id);
    return ids;
  }

 private:
  struct Slot {
    PaperRecord record;
    mutable std::mutex mu;
  };

  static void require_string(const nlohmann::json& v, const std::string& field) {
    if (!v.is_string()) raise(Errc::bad_request, field + " must be a string");
  }

  // Caller holds the record's slot lock.
  Contribution do_add_contribution(PaperRecord& r, const std::string& research_problem,
                                   const std::vector<Statement>& statements,
                                   const std::string& actor) {
    if (research_problem.empty()) {
      raise(Errc::empty_research_problem, "research problem must be non-empty");
    }
    for (const auto& s : statements) {
      if (s.predicate.empty()) raise(Errc::malformed_statement, "empty predicate");
    }

    Contribution c;
    c.contribution_id = "c" + std::to_string(next_contribution_num(r));
    c.research_problem = research_problem;
    c.statements = statements;

    ChangeEvent event;
    event.seq = r.change_log.back().seq + 1;
    event.timestamp = clock_->now();
    event.actor = actor;
    event.kind = ChangeKind::add_contribution;
    event.target_path = "contributions/" + c.contribution_id;
    event.after = to_json(c);

    apply_event(r, event);
    r.change_log.push_back(event);
    journal_.append({{"record_id", r.record_id}, {"event", to_json(event)}});
    return c;
  }

  Slot& find(const std::string& record_id) const {
    std::shared_lock<std::shared_mutex> lock(map_mu_);
    auto it = slots_.find(record_id);
    if (it == slots_.end()) raise(Errc::unknown_record, "no such record: " + record_id);
    return *it->second;
  }

  void bump_counter(const std::string& id) {
    if (id.size() > 1 && id[0] == 'p') {
      try {
        next_num_ = std::max(next_num_,
                             static_cast<std::uint64_t>(std::stoull(id.substr(1))) + 1);
      } catch (...) {
      }
    }
  }

  static std::uint64_t next_contribution_num(const PaperRecord& r) {
    std::uint64_t max_num = 0;
    for (const auto& c : r.contributions) {
      if (c.contribution_id.size() > 1 && c.contribution_id[0] == 'c') {
        try {
          max_num = std::max(
              max_num, static_cast<std::uint64_t>(std::stoull(c.contribution_id.substr(1))));
        } catch (...) {
        }
      }
    }
    return max_num + 1;
  }

  std::shared_ptr<Clock> clock_;
  Journal journal_;
  mutable std::shared_mutex map_mu_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;
  std::uint64_t next_num_ = 1;
};

}  // namespace scholarpid
