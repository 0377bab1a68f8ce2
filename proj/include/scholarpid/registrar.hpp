#pragma once

#include <json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "scholarpid/doi.hpp"
#include "scholarpid/errors.hpp"
#include "scholarpid/journal.hpp"
#include "scholarpid/metadata.hpp"
#include "scholarpid/metadata_xml.hpp"
#include "scholarpid/orcid.hpp"
#include "scholarpid/sha256.hpp"
#include "scholarpid/time.hpp"

namespace scholarpid {

struct RegistrarEntry {
  Doi doi;
  MetadataRecord metadata;
  std::string state = "registered";
  Timestamp registered_at;
  // One element per registration/update: (when, hash of the serialized
  // metadata). Never empty, timestamps non-decreasing.
  std::vector<std::pair<Timestamp, std::string>> update_history;
};

struct OrcidWorkEntry {
  OrcidId orcid;
  Doi work_doi;
  std::string title;
  Timestamp added_at;
};

struct ExternalWorkStub {
  Doi doi;
  std::string title;
  std::string source;  // e.g. "crossref"
};

/// A full copy of the registry contents, used to rebuild the PID graph.
/// Deterministic order: entries and stubs sorted by lowercase DOI.
struct RegistryState {
  std::vector<RegistrarEntry> entries;
  std::vector<ExternalWorkStub> stubs;
};

/// What the publish workflow needs from a DOI registrar. The in-process mock
/// and the remote HTTP client implement the same interface.
class RegistrarClient {
 public:
  virtual ~RegistrarClient() = default;
  virtual Doi mint_doi(const std::string& prefix) = 0;
  virtual RegistrarEntry register_doi(const Doi& doi, const MetadataRecord& metadata) = 0;
  virtual RegistrarEntry update_doi(const Doi& doi, const MetadataRecord& metadata) = 0;
  virtual MetadataRecord resolve(const Doi& doi) = 0;
};

inline std::string metadata_hash(const MetadataRecord& m) {
  return sha256_hex(serialize_xml(m));
}

/// In-process mock of the registry federation: DOI minting, metadata
/// registration and update, resolution (registered works and external
/// stubs), and synchronous credit propagation into mock researcher records.
/// Everything is persisted as JSON lines in a shared journal and rebuilt by
/// replay. One mutex serializes writers; reads copy immutable values out.
class MockRegistry : public RegistrarClient {
 public:
  MockRegistry(Journal& journal, std::shared_ptr<Clock> clock,
               std::uint64_t counter_seed = 57590)
      : journal_(journal), clock_(std::move(clock)), counter_(counter_seed) {}

  Doi mint_doi(const std::string& prefix) override {
    if (!Doi::valid_prefix(prefix)) {
      raise(Errc::invalid_prefix, "not a valid DOI prefix: " + prefix);
    }
    std::lock_guard<std::mutex> lock(mu_);
    const std::uint64_t used = counter_++;
    Doi doi(prefix, "R" + std::to_string(used));
    journal_.append({{"kind", "mint"},
                     {"doi", doi.to_string()},
                     {"counter", used},
                     {"at", clock_->now().to_iso()}});
    return doi;
  }

  RegistrarEntry register_doi(const Doi& doi, const MetadataRecord& metadata) override {
    std::lock_guard<std::mutex> lock(mu_);
    return apply_register(doi, metadata, clock_->now(), /*journal=*/true);
  }

  RegistrarEntry update_doi(const Doi& doi, const MetadataRecord& metadata) override {
    std::lock_guard<std::mutex> lock(mu_);
    return apply_update(doi, metadata, clock_->now(), /*journal=*/true);
  }

  MetadataRecord resolve(const Doi& doi) override {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(doi.lowercase());
    if (it != entries_.end()) return it->second.metadata;
    auto st = stubs_.find(doi.lowercase());
    if (st != stubs_.end()) return stub_metadata(st->second);
    raise(Errc::unknown_doi, "nothing registered under " + doi.to_string());
  }

  void register_external_stub(const ExternalWorkStub& stub) {
    std::lock_guard<std::mutex> lock(mu_);
    apply_stub(stub, /*journal=*/true);
  }

  /// Works credited to one researcher identifier. Unknown identifiers yield
  /// an empty list rather than an error.
  std::vector<OrcidWorkEntry> orcid_record(const OrcidId& orcid) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = credit_.find(orcid.value());
    if (it == credit_.end()) return {};
    return it->second;
  }

  RegistryState state() const {
    std::lock_guard<std::mutex> lock(mu_);
    RegistryState out;
    out.entries.reserve(entries_.size());
    for (const auto& [_, e] : entries_) out.entries.push_back(e);
    out.stubs.reserve(stubs_.size());
    for (const auto& [_, s] : stubs_) out.stubs.push_back(s);
    return out;
  }

  std::optional<RegistrarEntry> find_entry(const Doi& doi) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(doi.lowercase());
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  /// Applies one replayed journal line. Lines this registry does not own
  /// (other "kind" values in the shared journal) are ignored.
  void load(const nlohmann::json& line) {
    const std::string kind = line.value("kind", "");
    std::lock_guard<std::mutex> lock(mu_);
    if (kind == "mint") {
      const std::uint64_t used = line.at("counter").get<std::uint64_t>();
      counter_ = std::max(counter_, used + 1);
    } else if (kind == "register") {
      apply_register(Doi::parse(line.at("doi").get<std::string>()),
                     parse_xml(line.at("xml").get<std::string>()),
                     Timestamp::from_iso(line.at("at").get<std::string>()),
                     /*journal=*/false);
    } else if (kind == "update") {
      apply_update(Doi::parse(line.at("doi").get<std::string>()),
                   parse_xml(line.at("xml").get<std::string>()),
                   Timestamp::from_iso(line.at("at").get<std::string>()),
                   /*journal=*/false);
    } else if (kind == "stub") {
      apply_stub(ExternalWorkStub{Doi::parse(line.at("doi").get<std::string>()),
                                  line.at("title").get<std::string>(),
                                  line.at("source").get<std::string>()},
                 /*journal=*/false);
    }
  }

 private:
  static MetadataRecord stub_metadata(const ExternalWorkStub& stub) {
    MetadataRecord m;
    m.identifier = stub.doi;
    m.titles.push_back({stub.title, ""});
    return m;  // bare work: title only, deliberately not validate()-clean
  }

  static void require_valid(const MetadataRecord& metadata) {
    auto violations = validate(metadata);
    if (!violations.empty()) {
      std::string msg = "metadata rejected:";
      for (const auto& v : violations) msg += " [" + v.field + ": " + v.rule + "]";
      throw Error(Errc::validation_failed, msg, std::move(violations));
    }
  }

  RegistrarEntry apply_register(const Doi& doi, const MetadataRecord& metadata,
                                Timestamp at, bool journal) {
    if (!(metadata.identifier == doi)) {
      raise(Errc::identifier_mismatch,
            "metadata identifier " + metadata.identifier.to_string() +
                " does not match " + doi.to_string());
    }
    require_valid(metadata);
    const std::string key = doi.lowercase();
    const std::string hash = metadata_hash(metadata);
    if (auto it = entries_.find(key); it != entries_.end()) {
      if (it->second.update_history.back().second == hash) {
        return it->second;  // idempotent re-registration
      }
      raise(Errc::conflicting_registration,
            doi.to_string() + " is already registered with different metadata; use update");
    }
    if (stubs_.count(key)) {
      raise(Errc::conflicting_registration,
            doi.to_string() + " is already present as an external stub");
    }

    RegistrarEntry entry;
    entry.doi = doi;
    entry.metadata = metadata;
    entry.registered_at = at;
    entry.update_history.emplace_back(at, hash);
    entries_[key] = entry;
    propagate_credit(entry, at);
    if (journal) {
      journal_.append({{"kind", "register"},
                       {"doi", doi.to_string()},
                       {"xml", serialize_xml(metadata)},
                       {"at", at.to_iso()}});
    }
    return entry;
  }

  RegistrarEntry apply_update(const Doi& doi, const MetadataRecord& metadata,
                              Timestamp at, bool journal) {
    auto it = entries_.find(doi.lowercase());
    if (it == entries_.end()) {
      raise(Errc::unknown_doi, "cannot update unregistered DOI " + doi.to_string());
    }
    if (!(metadata.identifier == doi)) {
      raise(Errc::identifier_mismatch,
            "metadata identifier " + metadata.identifier.to_string() +
                " does not match " + doi.to_string());
    }
    require_valid(metadata);
    RegistrarEntry& entry = it->second;
    entry.metadata = metadata;
    entry.update_history.emplace_back(at, metadata_hash(metadata));
    propagate_credit(entry, at);
    if (journal) {
      journal_.append({{"kind", "update"},
                       {"doi", doi.to_string()},
                       {"xml", serialize_xml(metadata)},
                       {"at", at.to_iso()}});
    }
    return entry;
  }

  void apply_stub(const ExternalWorkStub& stub, bool journal) {
    const std::string key = stub.doi.lowercase();
    if (auto it = stubs_.find(key); it != stubs_.end()) {
      if (it->second.title == stub.title && it->second.source == stub.source) {
        return;  // idempotent
      }
      raise(Errc::conflicting_registration,
            stub.doi.to_string() + " is already a stub with different data");
    }
    if (entries_.count(key)) {
      raise(Errc::conflicting_registration,
            stub.doi.to_string() + " is already a registered work");
    }
    stubs_[key] = stub;
    if (journal) {
      journal_.append({{"kind", "stub"},
                       {"doi", stub.doi.to_string()},
                       {"title", stub.title},
                       {"source", stub.source}});
    }
  }

  /// Mirrors the registry→researcher-record metadata exchange: every creator
  /// with a researcher identifier gets this work added to their record.
  /// (orcid, doi) pairs stay unique, so re-registration adds nothing.
  void propagate_credit(const RegistrarEntry& entry, Timestamp at) {
    for (const auto& creator : entry.metadata.creators) {
      for (const auto& ni : creator.name_identifiers) {
        if (ni.scheme != "ORCID") continue;
        auto orcid = OrcidId::try_parse(ni.value);
        if (!orcid) continue;  // validate() already flags these
        const auto pair = std::make_pair(orcid->value(), entry.doi.lowercase());
        if (!credited_.insert(pair).second) continue;
        credit_[orcid->value()].push_back(
            {*orcid, entry.doi,
             entry.metadata.titles.empty() ? "" : entry.metadata.titles.front().text,
             at});
      }
    }
  }

  Journal& journal_;
  std::shared_ptr<Clock> clock_;
  std::uint64_t counter_;
  mutable std::mutex mu_;
  std::map<std::string, RegistrarEntry> entries_;        // lowercase DOI → entry
  std::map<std::string, ExternalWorkStub> stubs_;        // lowercase DOI → stub
  std::map<std::string, std::vector<OrcidWorkEntry>> credit_;  // ORCID → works
  std::set<std::pair<std::string, std::string>> credited_;     // (ORCID, lowercase DOI)
};

}  // namespace scholarpid
