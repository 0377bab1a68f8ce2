#include "scholarpid/publishing.hpp"

#include <json.hpp>

#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "catch_util.hpp"
#include "test_util.hpp"

using nlohmann::json;
using namespace scholarpid;

namespace {

/// Delegates to the in-process registry but can be armed to refuse
/// registration, standing in for a registrar outage mid-publish.
class FailingRegistrar : public RegistrarClient {
 public:
  explicit FailingRegistrar(MockRegistry& inner) : inner_(inner) {}

  bool fail_register = false;

  Doi mint_doi(const std::string& prefix) override { return inner_.mint_doi(prefix); }

  RegistrarEntry register_doi(const Doi& doi, const MetadataRecord& m) override {
    if (fail_register) {
      raise(Errc::registrar_unavailable, "injected registrar outage");
    }
    return inner_.register_doi(doi, m);
  }

  RegistrarEntry update_doi(const Doi& doi, const MetadataRecord& m) override {
    return inner_.update_doi(doi, m);
  }

  MetadataRecord resolve(const Doi& doi) override { return inner_.resolve(doi); }

 private:
  MockRegistry& inner_;
};

struct Fixture {
  testutil::TempDir dir;
  std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>();
  PaperStore papers{dir.path() / "knowledge.jsonl", clock};
  Journal published{dir.path() / "published.jsonl"};
  MockRegistry mock{published, clock};
  FailingRegistrar registrar{mock};
  SnapshotStore snapshots{published};
  Publisher publisher{papers, snapshots, registrar, published, clock, "10.48366"};

  std::string create_fixture_paper() {
    Agent author;
    author.name = testutil::kCreatorName;
    author.orcid = OrcidId::parse(testutil::kCreatorOrcid);
    const PaperRecord r =
        papers.create_paper(testutil::kArticleTitle, testutil::kResearchField,
                            Doi::parse(testutil::kArticleDoi), {author}, "tester");
    Statement s;
    s.subject = {ValueKind::resource, "invertebrate fauna"};
    s.predicate = "observed on";
    s.object = {ValueKind::literal, "Cytisus scoparius"};
    papers.add_contribution(r.record_id, testutil::kResearchProblem, {s}, "tester");
    return r.record_id;
  }
};

}  // namespace

TEST_CASE("first publish freezes V0.1 under a fresh DOI", "[publishing]") {
  Fixture f;
  const std::string id = f.create_fixture_paper();

  const auto [snapshot, doi] = f.publisher.publish(id, "tester");
  CHECK(doi.to_string() == "10.48366/R57590");
  CHECK(snapshot.snapshot_id == "p1-V0.1");
  CHECK(snapshot.paper_id == id);
  CHECK(snapshot.version_label == "V0.1");
  CHECK_FALSE(snapshot.previous.has_value());
  REQUIRE(snapshot.doi.has_value());
  CHECK(*snapshot.doi == doi);

  // The frozen content is the canonical record document: every live field
  // including bookkeeping timestamps, but never the change log.
  const json expected = canonical_document(f.papers.get_paper(id));
  CHECK(snapshot.content == expected);
  CHECK_FALSE(snapshot.content.contains("change_log"));
  CHECK(snapshot.content.contains("created_at"));
  CHECK(snapshot.content.contains("modified_at"));
  CHECK(snapshot.content_hash == sha256_hex(snapshot.content.dump()));

  // Registration went through with the matching version label.
  const auto entry = f.mock.find_entry(doi);
  REQUIRE(entry.has_value());
  CHECK(entry->metadata.version == "V0.1");
  CHECK(entry->metadata.titles[0].text == testutil::kWorkTitle);

  // The snapshot store serves it back.
  CHECK(f.snapshots.get("p1-V0.1").content_hash == snapshot.content_hash);
}

TEST_CASE("publishing unchanged content is refused", "[publishing]") {
  Fixture f;
  const std::string id = f.create_fixture_paper();
  f.publisher.publish(id, "tester");
  testutil::require_error(Errc::duplicate_content,
                          [&] { f.publisher.publish(id, "tester"); });
  testutil::require_error(Errc::duplicate_content,
                          [&] { f.publisher.publish_new_version(id, "tester"); });
  CHECK(f.snapshots.size() == 1);
}

TEST_CASE("each publish after an edit is the next version", "[publishing]") {
  Fixture f;
  const std::string id = f.create_fixture_paper();
  const auto [v1, doi1] = f.publisher.publish(id, "tester");

  f.papers.update_paper(id, "title", "Amended title", "tester");
  const auto [v2, doi2] = f.publisher.publish(id, "tester");  // plain publish
  CHECK(v2.version_label == "V0.2");
  CHECK(doi2.to_string() == "10.48366/R57591");
  REQUIRE(v2.previous.has_value());
  CHECK(*v2.previous == v1.snapshot_id);

  f.papers.update_paper(id, "research_field", "Invasion Ecology", "tester");
  const auto [v3, doi3] = f.publisher.publish_new_version(id, "tester");
  CHECK(v3.version_label == "V0.3");
  CHECK(*v3.previous == v2.snapshot_id);

  const VersionChain chain = f.publisher.get_version_chain(id);
  REQUIRE(chain.snapshots.size() == 3);
  CHECK(chain.snapshots[0].version_label == "V0.1");
  CHECK(chain.snapshots[1].version_label == "V0.2");
  CHECK(chain.snapshots[2].version_label == "V0.3");
  CHECK(*chain.snapshots[2].previous == chain.snapshots[1].snapshot_id);
}

TEST_CASE("successive versions link both ways in the registry", "[publishing]") {
  Fixture f;
  const std::string id = f.create_fixture_paper();
  const auto [v1, doi1] = f.publisher.publish(id, "tester");
  f.papers.update_paper(id, "title", "Amended title", "tester");
  const auto [v2, doi2] = f.publisher.publish(id, "tester");

  const auto newer = f.mock.find_entry(doi2);
  REQUIRE(newer.has_value());
  bool has_forward = false;
  for (const auto& r : newer->metadata.related_identifiers) {
    if (r.relation == RelationType::is_new_version_of && r.target == doi1) {
      has_forward = true;
    }
  }
  CHECK(has_forward);

  const auto older = f.mock.find_entry(doi1);
  REQUIRE(older.has_value());
  bool has_back = false;
  for (const auto& r : older->metadata.related_identifiers) {
    if (r.relation == RelationType::is_previous_version_of && r.target == doi2) {
      has_back = true;
    }
  }
  CHECK(has_back);
  // The back-link lands as an update on the prior entry's history.
  CHECK(older->update_history.size() == 2);
}

TEST_CASE("publish preconditions", "[publishing]") {
  Fixture f;
  testutil::require_error(Errc::unknown_record,
                          [&] { f.publisher.publish("p404", "tester"); });

  const PaperRecord no_authors =
      f.papers.create_paper("Authorless", "field", std::nullopt, {});
  f.papers.add_contribution(no_authors.record_id, "Some problem", {}, "tester");
  testutil::require_error(Errc::no_authors, [&] {
    f.publisher.publish(no_authors.record_id, "tester");
  });

  Agent author;
  author.name = "Author, Test";
  const PaperRecord no_contributions =
      f.papers.create_paper("Contributionless", "field", std::nullopt, {author});
  testutil::require_error(Errc::no_contributions, [&] {
    f.publisher.publish(no_contributions.record_id, "tester");
  });

  const std::string id = f.create_fixture_paper();
  testutil::require_error(Errc::no_prior_version, [&] {
    f.publisher.publish_new_version(id, "tester");
  });
  CHECK(f.snapshots.size() == 0);
}

TEST_CASE("snapshots reject every mutation attempt", "[publishing]") {
  Fixture f;
  const std::string id = f.create_fixture_paper();
  f.publisher.publish(id, "tester");

  testutil::require_error(Errc::immutable_snapshot, [&] {
    f.publisher.attempt_edit_snapshot("p1-V0.1", json{{"title", "sneaky"}});
  });
  testutil::require_error(Errc::immutable_snapshot, [&] {
    f.publisher.attempt_edit_snapshot("p1-V0.1", json::object());
  });
  // Even for snapshots that do not exist: the operation itself is forbidden.
  testutil::require_error(Errc::immutable_snapshot, [&] {
    f.publisher.attempt_edit_snapshot("p9-V9.9", json{{"x", 1}});
  });
}

TEST_CASE("a registrar outage aborts the publish completely", "[publishing]") {
  Fixture f;
  const std::string id = f.create_fixture_paper();

  f.registrar.fail_register = true;
  testutil::require_error(Errc::registrar_unavailable,
                          [&] { f.publisher.publish(id, "tester"); });

  // No snapshot, no registration — in memory or on disk.
  CHECK(f.snapshots.size() == 0);
  CHECK(f.mock.state().entries.empty());
  std::vector<std::string> kinds;
  Journal::replay(f.published.path(), [&](const json& line) {
    kinds.push_back(line.value("kind", "?"));
  });
  REQUIRE(kinds.size() == 1);
  CHECK(kinds[0] == "mint");  // only the counter advance survives

  // The retry succeeds and must not reuse the burned DOI.
  f.registrar.fail_register = false;
  const auto [snapshot, doi] = f.publisher.publish(id, "tester");
  CHECK(doi.to_string() == "10.48366/R57591");
  CHECK(snapshot.version_label == "V0.1");
}

TEST_CASE("replaying the journal reproduces snapshots and registry", "[publishing]") {
  Fixture f;
  const std::string id = f.create_fixture_paper();
  const auto [v1, doi1] = f.publisher.publish(id, "tester");
  f.papers.update_paper(id, "title", "Amended title", "tester");
  const auto [v2, doi2] = f.publisher.publish(id, "tester");

  Journal fresh(f.dir.path() / "published.jsonl");
  SnapshotStore revived_snapshots(fresh);
  MockRegistry revived_mock(fresh, std::make_shared<ManualClock>());
  Journal::replay(f.published.path(), [&](const json& line) {
    if (line.value("kind", "") == "snapshot") {
      revived_snapshots.load(line);
    } else {
      revived_mock.load(line);
    }
  });

  CHECK(revived_snapshots.size() == 2);
  CHECK(revived_snapshots.get(v1.snapshot_id).content_hash == v1.content_hash);
  CHECK(revived_snapshots.get(v2.snapshot_id).content_hash == v2.content_hash);
  CHECK(revived_snapshots.get(v2.snapshot_id).content == v2.content);
  const auto entry = revived_mock.find_entry(doi1);
  REQUIRE(entry.has_value());
  CHECK(entry->metadata == f.mock.find_entry(doi1)->metadata);
}

TEST_CASE("diffing a snapshot against itself is empty", "[publishing]") {
  Fixture f;
  const std::string id = f.create_fixture_paper();
  f.publisher.publish(id, "tester");
  CHECK(f.publisher.diff_versions("p1-V0.1", "p1-V0.1").empty());
  testutil::require_error(Errc::unknown_snapshot, [&] {
    f.publisher.diff_versions("p1-V0.1", "p1-V0.9");
  });
}

TEST_CASE("diffs name each changed path with before and after", "[publishing]") {
  Fixture f;
  const std::string id = f.create_fixture_paper();
  f.publisher.publish(id, "tester");
  f.papers.update_paper(id, "title", "Amended title", "tester");
  f.publisher.publish(id, "tester");

  const auto diff = f.publisher.diff_versions("p1-V0.1", "p1-V0.2");
  REQUIRE(diff.size() == 1);
  CHECK(diff[0].path == "title");
  CHECK(diff[0].before == json(testutil::kArticleTitle));
  CHECK(diff[0].after == json("Amended title"));

  // Swapping the arguments swaps the sides.
  const auto reversed = f.publisher.diff_versions("p1-V0.2", "p1-V0.1");
  REQUIRE(reversed.size() == 1);
  CHECK(reversed[0].before == diff[0].after);
  CHECK(reversed[0].after == diff[0].before);
}

TEST_CASE("snapshots of different papers never diff", "[publishing]") {
  Fixture f;
  const std::string first = f.create_fixture_paper();
  f.publisher.publish(first, "tester");

  Agent author;
  author.name = "Author, Other";
  const PaperRecord other =
      f.papers.create_paper("A second paper", "field", std::nullopt, {author});
  f.papers.add_contribution(other.record_id, "Another problem", {}, "tester");
  f.publisher.publish(other.record_id, "tester");

  testutil::require_error(Errc::different_papers, [&] {
    f.publisher.diff_versions("p1-V0.1", other.record_id + "-V0.1");
  });
}

TEST_CASE("contribution diffs pair by id, not position", "[publishing]") {
  Fixture f;
  const std::string id = f.create_fixture_paper();
  f.publisher.publish(id, "tester");

  // V0.2 adds a contribution.
  f.papers.add_contribution(id, "A second problem", {}, "tester");
  f.publisher.publish(id, "tester");
  auto diff = f.publisher.diff_versions("p1-V0.1", "p1-V0.2");
  REQUIRE(diff.size() == 1);
  CHECK(diff[0].path == "contributions/c2");
  CHECK(diff[0].before.is_null());
  CHECK(diff[0].after.at("research_problem") == "A second problem");

  // V0.3 removes the original contribution: whole-object removal entry.
  f.papers.update_paper(id, "contributions/c1", nullptr, "tester");
  f.publisher.publish(id, "tester");
  diff = f.publisher.diff_versions("p1-V0.2", "p1-V0.3");
  REQUIRE(diff.size() == 1);
  CHECK(diff[0].path == "contributions/c1");
  CHECK(diff[0].before.at("contribution_id") == "c1");
  CHECK(diff[0].after.is_null());

  // V0.4 rephrases the research problem of the surviving contribution.
  f.papers.update_paper(id, "contributions/c2/research_problem",
                        "A second problem, rephrased", "tester");
  f.publisher.publish(id, "tester");
  diff = f.publisher.diff_versions("p1-V0.3", "p1-V0.4");
  REQUIRE(diff.size() == 1);
  CHECK(diff[0].path == "contributions/c2/research_problem");

  // V0.5 rewrites one statement in place: per-index entry.
  Statement s;
  s.subject = {ValueKind::resource, "herbivore load"};
  s.predicate = "compared across";
  s.object = {ValueKind::literal, "native and exotic habitats"};
  f.papers.update_paper(id, "contributions/c2", nullptr, "tester");
  const Contribution host =
      f.papers.add_contribution(id, "Statement host", {s, s}, "tester");
  f.publisher.publish(id, "tester");
  Statement changed = s;
  changed.predicate = "contrasted across";
  const std::string stmt_path =
      "contributions/" + host.contribution_id + "/statements/1";
  f.papers.update_paper(id, stmt_path, to_json(changed), "tester");
  f.publisher.publish(id, "tester");
  diff = f.publisher.diff_versions("p1-V0.5", "p1-V0.6");
  REQUIRE(diff.size() == 1);
  CHECK(diff[0].path == stmt_path);
  CHECK(diff[0].before.at("predicate") == "compared across");
  CHECK(diff[0].after.at("predicate") == "contrasted across");
}

TEST_CASE("a pure bookkeeping change diffs empty despite new hashes",
          "[publishing]") {
  Fixture f;
  const std::string id = f.create_fixture_paper();
  const auto [v1, d1] = f.publisher.publish(id, "tester");

  // Edit and revert: substantively identical, but modified_at moved on.
  f.papers.update_paper(id, "title", "Temporarily different", "tester");
  f.papers.update_paper(id, "title", testutil::kArticleTitle, "tester");
  const auto [v2, d2] = f.publisher.publish(id, "tester");

  CHECK(v1.content_hash != v2.content_hash);  // timestamps are frozen content
  CHECK(f.publisher.diff_versions(v1.snapshot_id, v2.snapshot_id).empty());
}

TEST_CASE("top-level diffs match a direct field comparison", "[publishing]") {
  // Property check: after random scripts of top-level edits, the diff must
  // name exactly the fields whose frozen values differ, with the raw
  // before/after taken verbatim from the two content documents.
  std::mt19937 rng(424242);
  std::uniform_int_distribution<int> which(0, 3);
  std::uniform_int_distribution<int> count(1, 4);

  for (int round = 0; round < 10; ++round) {
    Fixture f;
    const std::string id = f.create_fixture_paper();
    const auto [v1, d1] = f.publisher.publish(id, "tester");

    const int edits = count(rng);
    for (int i = 0; i < edits; ++i) {
      switch (which(rng)) {
        case 0:
          f.papers.update_paper(id, "title", "Title v" + std::to_string(i), "t");
          break;
        case 1:
          f.papers.update_paper(id, "research_field", "Field " + std::to_string(i),
                                "t");
          break;
        case 2:
          f.papers.update_paper(id, "article_doi",
                                "10.5555/alt" + std::to_string(i), "t");
          break;
        case 3:
          f.papers.update_paper(
              id, "authors",
              json::array({{{"name", "Author " + std::to_string(i)}}}), "t");
          break;
      }
    }
    const auto [v2, d2] = f.publisher.publish(id, "tester");

    const auto diff = f.publisher.diff_versions(v1.snapshot_id, v2.snapshot_id);
    for (const char* name : {"title", "research_field", "article_doi", "authors"}) {
      const json before = v1.content.contains(name) ? v1.content.at(name) : json();
      const json after = v2.content.contains(name) ? v2.content.at(name) : json();
      const DiffEntry* found = nullptr;
      for (const auto& e : diff) {
        if (e.path == name) found = &e;
      }
      if (before != after) {
        REQUIRE(found != nullptr);
        CHECK(found->before == before);
        CHECK(found->after == after);
      } else {
        CHECK(found == nullptr);
      }
    }
    for (const auto& e : diff) {
      CHECK(e.path.rfind("contributions", 0) == std::string::npos);
    }
  }
}

TEST_CASE("racing publishes of the same content admit exactly one", "[publishing]") {
  Fixture f;
  const std::string id = f.create_fixture_paper();
  f.publisher.publish(id, "tester");
  f.papers.update_paper(id, "title", "Race target", "tester");

  int wins = 0, duplicates = 0;
  auto attempt = [&]() {
    try {
      f.publisher.publish(id, "tester");
      ++wins;
    } catch (const Error& e) {
      REQUIRE(e.code() == Errc::duplicate_content);
      ++duplicates;
    }
  };
  std::thread a(attempt), b(attempt);
  a.join();
  b.join();

  CHECK(wins == 1);
  CHECK(duplicates == 1);
  CHECK(f.snapshots.size() == 2);
  CHECK(f.snapshots.newest(id)->version_label == "V0.2");
}
