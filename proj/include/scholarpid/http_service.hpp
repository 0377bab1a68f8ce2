#pragma once

#include <httplib.h>
#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

#include "scholarpid/app.hpp"
#include "scholarpid/errors.hpp"
#include "scholarpid/metadata_xml.hpp"

namespace scholarpid {

inline int http_status_for(Errc code) {
  switch (code) {
    case Errc::unknown_record:
    case Errc::unknown_snapshot:
    case Errc::unknown_doi:
      return 404;
    case Errc::duplicate_content:
    case Errc::conflicting_registration:
    case Errc::immutable_snapshot:
    case Errc::no_prior_version:
    case Errc::identifier_mismatch:
      return 409;
    case Errc::registrar_unavailable:
      return 502;
    case Errc::storage_fault:
      return 500;
    default:
      return 400;  // caller fault: bad syntax, bad path, failed validation…
  }
}

/// Builds a live paper (and its contributions) from one request document.
/// Shared by the HTTP create endpoint and the CLI so both accept the same
/// shape.
inline PaperRecord create_paper_from_json(App& app, const nlohmann::json& body) {
  if (!body.is_object()) raise(Errc::bad_request, "request body must be a JSON object");
  const std::string title = body.value("title", "");
  const std::string field = body.value("research_field", "");
  const std::string actor = body.value("actor", "anonymous");

  std::optional<Doi> article_doi;
  if (body.contains("article_doi") && !body.at("article_doi").is_null()) {
    article_doi = Doi::parse(body.at("article_doi").get<std::string>());
  }
  std::vector<Agent> authors;
  if (body.contains("authors")) {
    for (const auto& a : body.at("authors")) authors.push_back(agent_from_json(a));
  }

  PaperRecord record =
      app.papers().create_paper(title, field, article_doi, authors, actor);
  if (body.contains("contributions")) {
    for (const auto& c : body.at("contributions")) {
      std::vector<Statement> statements;
      if (c.contains("statements")) {
        for (const auto& s : c.at("statements")) {
          statements.push_back(statement_from_json(s));
        }
      }
      app.papers().add_contribution(record.record_id,
                                    c.value("research_problem", ""), statements,
                                    actor);
    }
    record = app.papers().get_paper(record.record_id);
  }
  return record;
}

/// Applies one PATCH document to a paper: either {"path", "value"} for an
/// update, or {"add_contribution": {...}} to append a contribution.
inline PaperRecord patch_paper_from_json(App& app, const std::string& record_id,
                                         const nlohmann::json& body) {
  if (!body.is_object()) raise(Errc::bad_request, "request body must be a JSON object");
  const std::string actor = body.value("actor", "anonymous");
  if (body.contains("path")) {
    if (!body.contains("value")) {
      raise(Errc::bad_request, "update needs a value (use null to clear)");
    }
    return app.papers().update_paper(record_id, body.at("path").get<std::string>(),
                                     body.at("value"), actor);
  }
  if (body.contains("add_contribution")) {
    const auto& c = body.at("add_contribution");
    std::vector<Statement> statements;
    if (c.contains("statements")) {
      for (const auto& s : c.at("statements")) {
        statements.push_back(statement_from_json(s));
      }
    }
    app.papers().add_contribution(record_id, c.value("research_problem", ""),
                                  statements, actor);
    return app.papers().get_paper(record_id);
  }
  raise(Errc::bad_request, "PATCH body needs \"path\"+\"value\" or \"add_contribution\"");
}

inline nlohmann::json publish_response(const std::pair<PaperSnapshot, Doi>& published) {
  return {{"snapshot", to_json(published.first)},
          {"doi", published.second.to_string()},
          {"doi_url", published.second.url()}};
}

/// The HTTP surface. One instance wraps an App; bind() then run() serve
/// until stop(). Every endpoint returns JSON (metadata.xml returns XML) and
/// failures carry a structured error body.
class HttpService {
 public:
  explicit HttpService(App& app) : app_(app) { routes(); }

  /// Binds the configured address. A configured port of 0 picks a free
  /// port; the chosen port is returned and kept.
  int bind() {
    const auto& cfg = app_.config();
    if (cfg.listen_port == 0) {
      port_ = server_.bind_to_any_port(cfg.listen_host);
      if (port_ < 0) {
        raise(Errc::storage_fault, "cannot bind to " + cfg.listen_host);
      }
    } else {
      if (!server_.bind_to_port(cfg.listen_host, cfg.listen_port)) {
        raise(Errc::storage_fault, "cannot bind to " + cfg.listen_host + ":" +
                                       std::to_string(cfg.listen_port));
      }
      port_ = cfg.listen_port;
    }
    return port_;
  }

  bool run() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  int port() const { return port_; }

 private:
  using Request = httplib::Request;
  using Response = httplib::Response;

  static void reply_json(Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void reply_error(Response& res, int status, const std::string& code,
                          const std::string& message) {
    reply_json(res, status, {{"error", {{"code", code}, {"message", message}}}});
  }

  /// Runs a handler and turns every failure into a structured error body.
  static void guarded(Response& res, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      reply_error(res, http_status_for(e.code()), e.code_name(), e.what());
    } catch (const nlohmann::json::exception& e) {
      reply_error(res, 400, "BadRequest", e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, "StorageFault", e.what());
    }
  }

  static nlohmann::json parse_body(const Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    return nlohmann::json::parse(req.body);  // json::exception → 400
  }

  void routes() {
    server_.Post("/papers", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        PaperRecord record = create_paper_from_json(app_, parse_body(req));
        reply_json(res, 201, record_to_json(record));
      });
    });

    server_.Get(R"(/papers/([^/]+)/changes)", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        std::uint64_t since = 0;
        if (req.has_param("since")) {
          since = std::strtoull(req.get_param_value("since").c_str(), nullptr, 10);
        }
        nlohmann::json changes = nlohmann::json::array();
        for (const auto& e : app_.papers().list_changes(req.matches[1], since)) {
          changes.push_back(to_json(e));
        }
        reply_json(res, 200, {{"changes", std::move(changes)}});
      });
    });

    server_.Get(R"(/papers/([^/]+)/versions)", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        nlohmann::json versions = nlohmann::json::array();
        for (const auto& s : app_.publisher().get_version_chain(req.matches[1]).snapshots) {
          versions.push_back(to_json(s));
        }
        reply_json(res, 200, {{"versions", std::move(versions)}});
      });
    });

    server_.Get(R"(/papers/([^/]+))", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        reply_json(res, 200, record_to_json(app_.papers().get_paper(req.matches[1])));
      });
    });

    server_.Patch(R"(/papers/([^/]+))", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        PaperRecord record = patch_paper_from_json(app_, req.matches[1], parse_body(req));
        reply_json(res, 200, record_to_json(record));
      });
    });

    server_.Post(R"(/papers/([^/]+)/publish)", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        auto published =
            app_.publisher().publish(req.matches[1], body.value("actor", "anonymous"));
        app_.refresh_graph();
        reply_json(res, 201, publish_response(published));
      });
    });

    server_.Post(R"(/papers/([^/]+)/versions)", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        auto published = app_.publisher().publish_new_version(
            req.matches[1], body.value("actor", "anonymous"));
        app_.refresh_graph();
        reply_json(res, 201, publish_response(published));
      });
    });

    server_.Get(R"(/snapshots/(.+)/metadata\.xml)", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const Doi doi = Doi::parse(req.matches[1]);
        MetadataRecord metadata;
        if (auto* mock = app_.mock_registry()) {
          auto entry = mock->find_entry(doi);
          if (!entry) {
            raise(Errc::unknown_doi, "nothing registered under " + doi.to_string());
          }
          metadata = entry->metadata;
        } else {
          metadata = app_.registrar().resolve(doi);
        }
        res.status = 200;
        res.set_content(serialize_xml(metadata), "application/xml");
      });
    });

    server_.Get(R"(/works/(.+)/citations)", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        auto graph = app_.graph();
        reply_json(res, 200, to_json(graph->citations_of(Doi::parse(req.matches[1]))));
      });
    });

    server_.Get(R"(/works/(.+)/references)", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        auto graph = app_.graph();
        reply_json(res, 200, to_json(graph->references_of(Doi::parse(req.matches[1]))));
      });
    });

    server_.Get(R"(/works/(.+)/versions)", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        auto graph = app_.graph();
        nlohmann::json versions = nlohmann::json::array();
        for (const auto& n : graph->version_chain_of(Doi::parse(req.matches[1]))) {
          versions.push_back(node_to_json(n));
        }
        reply_json(res, 200, {{"versions", std::move(versions)}});
      });
    });

    server_.Get(R"(/works/(.+))", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        auto graph = app_.graph();
        reply_json(res, 200, node_to_json(graph->node(Doi::parse(req.matches[1]))));
      });
    });

    server_.Get(R"(/orcid/([^/]+)/works)", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const OrcidId orcid = OrcidId::parse(req.matches[1]);
        auto graph = app_.graph();
        nlohmann::json works = nlohmann::json::array();
        for (const auto& n : graph->works_of_orcid(orcid)) {
          works.push_back(node_to_json(n));
        }
        reply_json(res, 200, {{"orcid", orcid.uri()}, {"works", std::move(works)}});
      });
    });

    server_.Post("/pidgraph/query", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const auto q = nlohmann::ordered_json::parse(req.body);
        auto graph = app_.graph();
        res.status = 200;
        res.set_content(graph->query(q).dump(), "application/json");
      });
    });

    server_.Post("/registry/stubs", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        ExternalWorkStub stub{Doi::parse(body.at("doi").get<std::string>()),
                              body.at("title").get<std::string>(),
                              body.value("source", "crossref")};
        app_.require_mock().register_external_stub(stub);
        app_.refresh_graph();
        reply_json(res, 201,
                   {{"doi", stub.doi.to_string()},
                    {"title", stub.title},
                    {"source", stub.source}});
      });
    });
  }

  App& app_;
  httplib::Server server_;
  int port_ = 0;
};

}  // namespace scholarpid
