#pragma once

#include <json.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scholarpid/errors.hpp"
#include "scholarpid/journal.hpp"
#include "scholarpid/knowledge.hpp"
#include "scholarpid/metadata.hpp"
#include "scholarpid/registrar.hpp"
#include "scholarpid/sha256.hpp"
#include "scholarpid/snapshot.hpp"

namespace scholarpid {

struct DiffEntry {
  std::string path;
  nlohmann::json before;  // null when the path is absent on the old side
  nlohmann::json after;   // null when the path is absent on the new side
};

inline nlohmann::json to_json(const DiffEntry& e) {
  return {{"path", e.path}, {"before", e.before}, {"after", e.after}};
}

/// Runs the publish workflow: freeze an immutable content-hashed snapshot of
/// a live record, mint a DOI, register its metadata, and link successive
/// versions both ways (IsNewVersionOf on the new entry, IsPreviousVersionOf
/// added to the prior one). Publishes of the same paper are serialized;
/// registration failure aborts the publish with no snapshot persisted.
class Publisher {
 public:
  Publisher(PaperStore& papers, SnapshotStore& snapshots, RegistrarClient& registrar,
            Journal& published_journal, std::shared_ptr<Clock> clock,
            std::string doi_prefix)
      : papers_(papers),
        snapshots_(snapshots),
        registrar_(registrar),
        journal_(published_journal),
        clock_(std::move(clock)),
        prefix_(std::move(doi_prefix)) {}

  /// First publish freezes V0.1; later calls publish the next version.
  std::pair<PaperSnapshot, Doi> publish(const std::string& paper_id,
                                        const std::string& actor) {
    return do_publish(paper_id, actor, /*require_prior=*/false);
  }

  /// Same workflow, but demands an existing prior version.
  std::pair<PaperSnapshot, Doi> publish_new_version(const std::string& paper_id,
                                                    const std::string& actor) {
    return do_publish(paper_id, actor, /*require_prior=*/true);
  }

  VersionChain get_version_chain(const std::string& paper_id) const {
    papers_.get_paper(paper_id);  // UnknownRecord for missing papers
    return snapshots_.chain(paper_id);
  }

  /// Snapshots are frozen; every mutation attempt is rejected outright.
  [[noreturn]] void attempt_edit_snapshot(const std::string& snapshot_id,
                                          const nlohmann::json& /*mutation*/) {
    raise(Errc::immutable_snapshot,
          "snapshots are immutable; edit the live record and publish a new version"
          " (attempted: " + snapshot_id + ")");
  }

  /// Structural diff between two snapshots of the same paper: one entry per
  /// changed path, before/after null for additions/removals. Empty exactly
  /// when the content hashes are equal; swapping the arguments swaps
  /// before/after.
  std::vector<DiffEntry> diff_versions(const std::string& snapshot_a,
                                       const std::string& snapshot_b) const {
    const PaperSnapshot a = snapshots_.get(snapshot_a);
    const PaperSnapshot b = snapshots_.get(snapshot_b);
    if (a.paper_id != b.paper_id) {
      raise(Errc::different_papers, snapshot_a + " and " + snapshot_b +
                                        " belong to different papers");
    }
    return diff_content(a.content, b.content);
  }

  // Diffs cover the substantive fields only; created_at/modified_at are
  // bookkeeping, so a pure-timestamp difference yields an empty diff.
  static std::vector<DiffEntry> diff_content(const nlohmann::json& a,
                                             const nlohmann::json& b) {
    std::vector<DiffEntry> out;
    auto field = [&](const char* name) {
      const nlohmann::json va = a.contains(name) ? a.at(name) : nlohmann::json();
      const nlohmann::json vb = b.contains(name) ? b.at(name) : nlohmann::json();
      if (va != vb) out.push_back({name, va, vb});
    };
    field("title");
    field("research_field");
    field("article_doi");
    field("authors");

    // Contributions pair up by id, not by array position.
    std::map<std::string, nlohmann::json> ca, cb;
    for (const auto& c : a.at("contributions")) {
      ca[c.at("contribution_id").get<std::string>()] = c;
    }
    for (const auto& c : b.at("contributions")) {
      cb[c.at("contribution_id").get<std::string>()] = c;
    }
    std::map<std::string, int> order;  // union of ids, stable diff order
    for (const auto& [id, _] : ca) order.emplace(id, 0);
    for (const auto& [id, _] : cb) order.emplace(id, 0);

    for (const auto& [cid, _] : order) {
      const std::string base = "contributions/" + cid;
      const bool in_a = ca.count(cid) > 0;
      const bool in_b = cb.count(cid) > 0;
      if (in_a && !in_b) {
        out.push_back({base, ca[cid], nlohmann::json()});
      } else if (!in_a && in_b) {
        out.push_back({base, nlohmann::json(), cb[cid]});
      } else {
        const auto& va = ca[cid];
        const auto& vb = cb[cid];
        if (va.at("research_problem") != vb.at("research_problem")) {
          out.push_back({base + "/research_problem", va.at("research_problem"),
                         vb.at("research_problem")});
        }
        const auto& sa = va.at("statements");
        const auto& sb = vb.at("statements");
        if (sa.size() != sb.size()) {
          if (sa != sb) out.push_back({base + "/statements", sa, sb});
        } else {
          for (std::size_t i = 0; i < sa.size(); ++i) {
            if (sa[i] != sb[i]) {
              out.push_back({base + "/statements/" + std::to_string(i), sa[i], sb[i]});
            }
          }
        }
      }
    }
    return out;
  }

 private:
  std::pair<PaperSnapshot, Doi> do_publish(const std::string& paper_id,
                                           const std::string& actor, bool require_prior) {
    std::mutex& paper_mu = publish_mutex(paper_id);
    std::lock_guard<std::mutex> serialize_publishes(paper_mu);

    const PaperRecord record = papers_.get_paper(paper_id);
    if (record.authors.empty()) {
      raise(Errc::no_authors, paper_id + " has no authors; publishing needs creators");
    }
    if (record.contributions.empty()) {
      raise(Errc::no_contributions, paper_id + " has no contributions");
    }

    PaperSnapshot snapshot;
    snapshot.content = canonical_document(record);
    snapshot.content_hash = sha256_hex(snapshot.content.dump());

    const std::optional<PaperSnapshot> newest = snapshots_.newest(paper_id);
    if (require_prior && !newest) {
      raise(Errc::no_prior_version, paper_id + " has never been published");
    }
    if (newest && newest->content_hash == snapshot.content_hash) {
      raise(Errc::duplicate_content,
            paper_id + " already published at content hash " + snapshot.content_hash);
    }

    const int next = newest ? version_number(newest->version_label) + 1 : 1;
    snapshot.paper_id = paper_id;
    snapshot.version_label = version_label_for(next);
    snapshot.snapshot_id = paper_id + "-" + snapshot.version_label;
    snapshot.created_at = clock_->now();
    if (newest) snapshot.previous = newest->snapshot_id;

    // Minted outside the atomic block on purpose: the counter advance must
    // survive a failed registration so a retry never reuses the DOI.
    const Doi doi = registrar_.mint_doi(prefix_);
    snapshot.doi = doi;

    const std::optional<Doi> previous_doi = newest ? newest->doi : std::nullopt;
    const MetadataRecord metadata = build_metadata(snapshot, doi, previous_doi);

    // One atomic journal block: registration, back-link update, snapshot.
    // If the registrar refuses, nothing below is persisted.
    Journal::Batch batch(journal_);
    registrar_.register_doi(doi, metadata);
    if (previous_doi) {
      MetadataRecord prior = registrar_.resolve(*previous_doi);
      const RelatedIdentifier back_link{RelationType::is_previous_version_of, doi};
      bool already = false;
      for (const auto& r : prior.related_identifiers) {
        if (r == back_link) already = true;
      }
      if (!already) {
        prior.related_identifiers.push_back(back_link);
        registrar_.update_doi(*previous_doi, prior);
      }
    }
    snapshots_.add(snapshot);
    batch.commit();

    (void)actor;  // the change log tracks edits; publish events carry no actor field
    return {snapshot, doi};
  }

  std::mutex& publish_mutex(const std::string& paper_id) {
    std::lock_guard<std::mutex> lock(map_mu_);
    auto& slot = mutexes_[paper_id];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
  }

  PaperStore& papers_;
  SnapshotStore& snapshots_;
  RegistrarClient& registrar_;
  Journal& journal_;
  std::shared_ptr<Clock> clock_;
  std::string prefix_;

  std::mutex map_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> mutexes_;
};

}  // namespace scholarpid
