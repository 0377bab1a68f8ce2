#pragma once

#include <httplib.h>
#include <json.hpp>

#include <memory>
#include <string>

#include "scholarpid/errors.hpp"
#include "scholarpid/metadata_xml.hpp"
#include "scholarpid/registrar.hpp"

namespace scholarpid {

/// HTTP client for an out-of-process registrar speaking a small JSON
/// protocol (documented in the README):
///
///   POST {base}/mint                {"prefix": p}        -> {"doi": d}
///   PUT  {base}/dois/{doi}          {"metadata_xml": x}  -> register
///   POST {base}/dois/{doi}          {"metadata_xml": x}  -> update
///   GET  {base}/dois/{doi}                               -> {"metadata_xml": x}
///
/// Optional HTTP basic auth. Any transport failure or non-2xx/404 status
/// maps to RegistrarUnavailable; a 404 maps to UnknownDoi. Disabled unless
/// explicitly configured — nothing in the default setup or the test suite
/// reaches a real network.
class RemoteRegistrar : public RegistrarClient {
 public:
  explicit RemoteRegistrar(const std::string& base_url, const std::string& user = "",
                           const std::string& password = "")
      : client_(std::make_unique<httplib::Client>(base_url)) {
    client_->set_connection_timeout(5, 0);
    client_->set_read_timeout(10, 0);
    if (!user.empty()) client_->set_basic_auth(user, password);
  }

  Doi mint_doi(const std::string& prefix) override {
    if (!Doi::valid_prefix(prefix)) {
      raise(Errc::invalid_prefix, "not a valid DOI prefix: " + prefix);
    }
    nlohmann::json body{{"prefix", prefix}};
    auto res = client_->Post("/mint", body.dump(), "application/json");
    const nlohmann::json reply = expect_json(res, "mint");
    return Doi::parse(reply.at("doi").get<std::string>());
  }

  RegistrarEntry register_doi(const Doi& doi, const MetadataRecord& metadata) override {
    if (!(metadata.identifier == doi)) {
      raise(Errc::identifier_mismatch,
            "metadata identifier does not match " + doi.to_string());
    }
    nlohmann::json body{{"metadata_xml", serialize_xml(metadata)}};
    auto res = client_->Put(("/dois/" + doi.lowercase()).c_str(), body.dump(),
                            "application/json");
    expect_ok(res, "register");
    return make_entry(doi, metadata);
  }

  RegistrarEntry update_doi(const Doi& doi, const MetadataRecord& metadata) override {
    nlohmann::json body{{"metadata_xml", serialize_xml(metadata)}};
    auto res = client_->Post(("/dois/" + doi.lowercase()).c_str(), body.dump(),
                             "application/json");
    expect_ok(res, "update");
    return make_entry(doi, metadata);
  }

  MetadataRecord resolve(const Doi& doi) override {
    auto res = client_->Get(("/dois/" + doi.lowercase()).c_str());
    const nlohmann::json reply = expect_json(res, "resolve");
    return parse_xml(reply.at("metadata_xml").get<std::string>());
  }

 private:
  static RegistrarEntry make_entry(const Doi& doi, const MetadataRecord& metadata) {
    RegistrarEntry entry;
    entry.doi = doi;
    entry.metadata = metadata;
    entry.update_history.emplace_back(Timestamp{}, metadata_hash(metadata));
    return entry;
  }

  static void expect_ok(const httplib::Result& res, const std::string& op) {
    if (!res) {
      raise(Errc::registrar_unavailable,
            "registrar " + op + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 404) {
      raise(Errc::unknown_doi, "registrar " + op + ": unknown DOI");
    }
    if (res->status < 200 || res->status >= 300) {
      raise(Errc::registrar_unavailable,
            "registrar " + op + " returned status " + std::to_string(res->status));
    }
  }

  static nlohmann::json expect_json(const httplib::Result& res, const std::string& op) {
    expect_ok(res, op);
    nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) {
      raise(Errc::registrar_unavailable, "registrar " + op + ": unparseable reply");
    }
    return parsed;
  }

  std::unique_ptr<httplib::Client> client_;
};

}  // namespace scholarpid
