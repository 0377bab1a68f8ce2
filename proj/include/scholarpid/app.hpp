#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>

#include "scholarpid/doi.hpp"
#include "scholarpid/errors.hpp"
#include "scholarpid/journal.hpp"
#include "scholarpid/knowledge.hpp"
#include "scholarpid/pid_graph.hpp"
#include "scholarpid/publishing.hpp"
#include "scholarpid/registrar.hpp"
#include "scholarpid/remote_registrar.hpp"
#include "scholarpid/snapshot.hpp"

namespace scholarpid {

/// Runtime configuration. Every field has an environment variable
/// (SCHOLARPID_*); command-line flags override the environment.
struct ServiceConfig {
  std::filesystem::path data_dir;
  std::string listen_host = "127.0.0.1";  // loopback by default, no auth layer
  int listen_port = 8080;
  std::string doi_prefix = "10.48366";
  std::string registrar_mode = "mock";  // mock | remote
  std::string remote_base_url;
  std::string remote_user;
  std::string remote_password;
  std::uint64_t counter_seed = 57590;

  static ServiceConfig from_env() {
    ServiceConfig cfg;
    if (const char* v = std::getenv("SCHOLARPID_DATA_DIR")) cfg.data_dir = v;
    if (const char* v = std::getenv("SCHOLARPID_LISTEN")) cfg.set_listen(v);
    if (const char* v = std::getenv("SCHOLARPID_DOI_PREFIX")) cfg.doi_prefix = v;
    if (const char* v = std::getenv("SCHOLARPID_REGISTRAR")) cfg.registrar_mode = v;
    if (const char* v = std::getenv("SCHOLARPID_REMOTE_URL")) cfg.remote_base_url = v;
    if (const char* v = std::getenv("SCHOLARPID_REGISTRAR_USER")) cfg.remote_user = v;
    if (const char* v = std::getenv("SCHOLARPID_REGISTRAR_PASS")) cfg.remote_password = v;
    if (const char* v = std::getenv("SCHOLARPID_COUNTER_SEED")) {
      cfg.counter_seed = std::strtoull(v, nullptr, 10);
    }
    return cfg;
  }

  /// Accepts "host:port" or just ":port"/"port".
  void set_listen(const std::string& spec) {
    auto colon = spec.rfind(':');
    if (colon == std::string::npos) {
      listen_port = std::atoi(spec.c_str());
      return;
    }
    if (colon > 0) listen_host = spec.substr(0, colon);
    listen_port = std::atoi(spec.c_str() + colon + 1);
  }

  void validate() const {
    if (data_dir.empty()) {
      raise(Errc::bad_request, "a data directory is required (--data-dir)");
    }
    if (!Doi::valid_prefix(doi_prefix)) {
      raise(Errc::invalid_prefix, "not a valid DOI prefix: " + doi_prefix);
    }
    if (registrar_mode != "mock" && registrar_mode != "remote") {
      raise(Errc::bad_request, "registrar mode must be mock or remote, got: " +
                                   registrar_mode);
    }
    if (registrar_mode == "remote" && remote_base_url.empty()) {
      raise(Errc::bad_request, "remote registrar mode needs a base URL");
    }
    if (listen_port < 0 || listen_port > 65535) {
      raise(Errc::bad_request, "listen port out of range");
    }
  }
};

/// Owns the whole running system: journals, stores, registrar, publisher and
/// the query graph. Construction recovers all state by replaying the data
/// directory's journals; a corrupt journal or unwritable directory refuses
/// to start with a diagnostic.
class App {
 public:
  explicit App(ServiceConfig cfg,
               std::shared_ptr<Clock> clock = std::make_shared<SystemClock>())
      : cfg_(std::move(cfg)), clock_(std::move(clock)) {
    cfg_.validate();
    probe_writable(cfg_.data_dir);

    const auto published_path = cfg_.data_dir / "published.jsonl";
    if (cfg_.registrar_mode == "mock") {
      // The journal is shared: registry lines and snapshot lines interleave,
      // distinguished by their "kind" field.
      published_journal_ = std::make_unique<Journal>(published_path);
      mock_ = std::make_unique<MockRegistry>(*published_journal_, clock_,
                                             cfg_.counter_seed);
      snapshots_ = std::make_unique<SnapshotStore>(*published_journal_);
      Journal::replay(published_path, [this](const nlohmann::json& line) {
        if (line.value("kind", "") == "snapshot") {
          snapshots_->load(line);
        } else {
          mock_->load(line);
        }
      });
      registrar_ = mock_.get();
    } else {
      published_journal_ = std::make_unique<Journal>(published_path);
      remote_ = std::make_unique<RemoteRegistrar>(cfg_.remote_base_url,
                                                  cfg_.remote_user,
                                                  cfg_.remote_password);
      snapshots_ = std::make_unique<SnapshotStore>(*published_journal_);
      Journal::replay(published_path, [this](const nlohmann::json& line) {
        if (line.value("kind", "") == "snapshot") snapshots_->load(line);
      });
      registrar_ = remote_.get();
    }

    papers_ = std::make_unique<PaperStore>(cfg_.data_dir / "knowledge.jsonl", clock_);
    publisher_ = std::make_unique<Publisher>(*papers_, *snapshots_, *registrar_,
                                             *published_journal_, clock_,
                                             cfg_.doi_prefix);
    refresh_graph();
  }

  const ServiceConfig& config() const { return cfg_; }
  const std::shared_ptr<Clock>& clock() const { return clock_; }
  PaperStore& papers() { return *papers_; }
  SnapshotStore& snapshots() { return *snapshots_; }
  Publisher& publisher() { return *publisher_; }
  RegistrarClient& registrar() { return *registrar_; }

  /// The mock registry, or null when running against a remote registrar.
  /// Graph queries, researcher records, and stub registration need it.
  MockRegistry* mock_registry() { return mock_.get(); }

  MockRegistry& require_mock() {
    if (!mock_) {
      raise(Errc::bad_request,
            "this operation needs the in-process registry (registrar mode mock)");
    }
    return *mock_;
  }

  /// The current graph. Instances are immutable; hold the pointer as long
  /// as needed.
  std::shared_ptr<const PidGraph> graph() const {
    std::lock_guard<std::mutex> lock(graph_mu_);
    return graph_;
  }

  /// Re-derives the graph from the registry. Called after anything that
  /// changes registry contents (publish, stub registration).
  void refresh_graph() {
    auto next = std::make_shared<const PidGraph>(
        mock_ ? PidGraph::rebuild(mock_->state()) : PidGraph());
    std::lock_guard<std::mutex> lock(graph_mu_);
    graph_ = std::move(next);
  }

 private:
  static void probe_writable(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const auto probe = dir / ".write-probe";
    std::ofstream out(probe, std::ios::trunc);
    out << "ok";
    out.flush();
    if (!out) {
      raise(Errc::storage_fault, "data directory is not writable: " + dir.string());
    }
    out.close();
    std::filesystem::remove(probe, ec);
  }

  ServiceConfig cfg_;
  std::shared_ptr<Clock> clock_;
  std::unique_ptr<Journal> published_journal_;
  std::unique_ptr<MockRegistry> mock_;
  std::unique_ptr<RemoteRegistrar> remote_;
  RegistrarClient* registrar_ = nullptr;
  std::unique_ptr<SnapshotStore> snapshots_;
  std::unique_ptr<PaperStore> papers_;
  std::unique_ptr<Publisher> publisher_;

  mutable std::mutex graph_mu_;
  std::shared_ptr<const PidGraph> graph_;
};

}  // namespace scholarpid
