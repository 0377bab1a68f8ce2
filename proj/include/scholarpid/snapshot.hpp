#pragma once

#include <json.hpp>

#include <algorithm>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "scholarpid/doi.hpp"
#include "scholarpid/errors.hpp"
#include "scholarpid/journal.hpp"
#include "scholarpid/metadata.hpp"
#include "scholarpid/sha256.hpp"
#include "scholarpid/time.hpp"

namespace scholarpid {

/// An immutable, content-hashed copy of a record frozen at publish time.
/// Nothing here ever changes once persisted; edits continue on the live
/// record only.
struct PaperSnapshot {
  std::string snapshot_id;  // "{paper_id}-{version_label}"
  std::string paper_id;
  std::string version_label;  // "V0.1", "V0.2", ...
  nlohmann::json content;     // canonical publish document
  std::string content_hash;   // SHA-256 hex of content bytes
  std::optional<Doi> doi;
  std::optional<std::string> previous;  // snapshot_id of the prior version
  Timestamp created_at;
};

inline std::string version_label_for(int n) { return "V0." + std::to_string(n); }

inline int version_number(const std::string& label) {
  if (label.rfind("V0.", 0) != 0) {
    raise(Errc::storage_fault, "unrecognized version label: " + label);
  }
  try {
    return std::stoi(label.substr(3));
  } catch (...) {
    raise(Errc::storage_fault, "unrecognized version label: " + label);
  }
}

inline nlohmann::json to_json(const PaperSnapshot& s) {
  nlohmann::json j{{"snapshot_id", s.snapshot_id},
                   {"paper_id", s.paper_id},
                   {"version_label", s.version_label},
                   {"content", s.content},
                   {"content_hash", s.content_hash},
                   {"created_at", s.created_at.to_iso()}};
  if (s.doi) j["doi"] = s.doi->to_string();
  if (s.previous) j["previous"] = *s.previous;
  return j;
}

inline PaperSnapshot snapshot_from_json(const nlohmann::json& j) {
  PaperSnapshot s;
  s.snapshot_id = j.at("snapshot_id").get<std::string>();
  s.paper_id = j.at("paper_id").get<std::string>();
  s.version_label = j.at("version_label").get<std::string>();
  s.content = j.at("content");
  s.content_hash = j.at("content_hash").get<std::string>();
  if (j.contains("doi")) s.doi = Doi::parse(j.at("doi").get<std::string>());
  if (j.contains("previous")) s.previous = j.at("previous").get<std::string>();
  s.created_at = Timestamp::from_iso(j.at("created_at").get<std::string>());
  return s;
}

/// Ordered oldest (V0.1) to newest; adjacent elements linked by `previous`.
struct VersionChain {
  std::vector<PaperSnapshot> snapshots;
};

/// Derives registration metadata from a frozen snapshot. The snapshot must
/// actually be frozen (carry its content hash) and the content must name at
/// least one author.
inline MetadataRecord build_metadata(const PaperSnapshot& snapshot, const Doi& doi,
                                     const std::optional<Doi>& previous_doi) {
  if (snapshot.content_hash.empty() ||
      snapshot.content_hash != sha256_hex(snapshot.content.dump())) {
    raise(Errc::unfrozen_snapshot,
          "snapshot " + snapshot.snapshot_id + " is not frozen (hash missing or stale)");
  }
  return build_metadata(snapshot.content, doi, snapshot.version_label, previous_doi);
}

/// Keeps every published snapshot, persisted one JSON line per snapshot in a
/// shared append-only journal (envelope kind "snapshot"). Snapshots are
/// immutable, so reads hand out copies and never lock per entry.
class SnapshotStore {
 public:
  explicit SnapshotStore(Journal& journal) : journal_(journal) {}

  /// Re-adds a snapshot from a replayed journal line (no re-append).
  void load(const nlohmann::json& line) {
    PaperSnapshot s = snapshot_from_json(line);
    std::lock_guard<std::mutex> lock(mu_);
    index_[s.snapshot_id] = s;
  }

  /// Persists a new snapshot. When the caller holds an open Journal::Batch,
  /// the line joins that batch's single atomic write.
  void add(const PaperSnapshot& s) {
    nlohmann::json line = to_json(s);
    line["kind"] = "snapshot";
    {
      std::lock_guard<std::mutex> lock(mu_);
      index_[s.snapshot_id] = s;
    }
    journal_.append(line);
  }

  PaperSnapshot get(const std::string& snapshot_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = index_.find(snapshot_id);
    if (it == index_.end()) {
      raise(Errc::unknown_snapshot, "no such snapshot: " + snapshot_id);
    }
    return it->second;
  }

  std::optional<PaperSnapshot> newest(const std::string& paper_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    std::optional<PaperSnapshot> best;
    for (const auto& [_, s] : index_) {
      if (s.paper_id != paper_id) continue;
      if (!best || version_number(s.version_label) > version_number(best->version_label)) {
        best = s;
      }
    }
    return best;
  }

  /// All snapshots of one paper, oldest first.
  VersionChain chain(const std::string& paper_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    VersionChain out;
    for (const auto& [_, s] : index_) {
      if (s.paper_id == paper_id) out.snapshots.push_back(s);
    }
    std::sort(out.snapshots.begin(), out.snapshots.end(),
              [](const PaperSnapshot& a, const PaperSnapshot& b) {
                return version_number(a.version_label) < version_number(b.version_label);
              });
    return out;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return index_.size();
  }

 private:
  Journal& journal_;
  mutable std::mutex mu_;
  std::map<std::string, PaperSnapshot> index_;
};

}  // namespace scholarpid
