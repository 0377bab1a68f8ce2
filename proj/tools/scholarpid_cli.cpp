// Command-line front end. Every subcommand opens the data directory, runs
// one operation against the same library the HTTP service uses, prints JSON
// (XML for `metadata xml`) to stdout, and exits 0 on success, 1 on caller
// error, 2 on internal/storage/registrar failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scholarpid/app.hpp"
#include "scholarpid/http_service.hpp"
#include "scholarpid/metadata_xml.hpp"

namespace {

using nlohmann::json;
using namespace scholarpid;

std::string read_all(const std::string& path_or_dash) {
  if (path_or_dash == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path_or_dash, std::ios::binary);
  if (!in) raise(Errc::bad_request, "cannot read file: " + path_or_dash);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void print_json(const json& doc) { std::cout << doc.dump(2) << "\n"; }

// Values on the command line are JSON when they parse as JSON, otherwise
// taken as bare strings — so both `title '"T2"'` and `title T2` work.
json parse_value(const std::string& text) {
  json parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded()) return json(text);
  return parsed;
}

struct Cli {
  ServiceConfig cfg = ServiceConfig::from_env();
  std::unique_ptr<App> app;

  App& open() {
    if (!app) app = std::make_unique<App>(cfg);
    return *app;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"persistent identification of machine-actionable paper records"};
  cli.require_subcommand(1);

  Cli ctx;
  std::string data_dir_flag, listen_flag, prefix_flag, registrar_flag, remote_url_flag;
  std::uint64_t seed_flag = 0;
  cli.add_option("--data-dir", data_dir_flag, "data directory (journals live here)");
  cli.add_option("--listen", listen_flag, "listen address host:port (serve)");
  cli.add_option("--doi-prefix", prefix_flag, "DOI prefix for minting");
  cli.add_option("--registrar", registrar_flag, "registrar mode: mock | remote");
  cli.add_option("--remote-url", remote_url_flag, "remote registrar base URL");
  auto* seed_opt =
      cli.add_option("--counter-seed", seed_flag, "first DOI suffix counter value");

  // ---- paper ----------------------------------------------------------
  auto* paper = cli.add_subcommand("paper", "live paper records and publishing");
  paper->require_subcommand(1);

  std::string create_json, create_title, create_field, create_article_doi;
  std::string create_author_name, create_author_orcid, create_actor = "anonymous";
  auto* create = paper->add_subcommand("create", "create a live paper record");
  create->add_option("--json", create_json,
                     "full request document, a file path or - for stdin");
  create->add_option("--title", create_title, "paper title");
  create->add_option("--field", create_field, "research field");
  create->add_option("--article-doi", create_article_doi, "DOI of the described article");
  create->add_option("--author-name", create_author_name, "author name, Family, Given");
  create->add_option("--author-orcid", create_author_orcid, "author ORCID");
  create->add_option("--actor", create_actor, "who makes the change");

  std::string update_id, update_path, update_value, update_actor = "anonymous";
  auto* update = paper->add_subcommand("update", "edit one field of a live record");
  update->add_option("id", update_id, "record id")->required();
  update->add_option("path", update_path,
                     "field path, e.g. title, authors, contributions/c1/research_problem")
      ->required();
  update->add_option("value", update_value, "new value (JSON or bare string; null clears)")
      ->required();
  update->add_option("--actor", update_actor, "who makes the change");

  std::string get_id;
  auto* get = paper->add_subcommand("get", "print a live record");
  get->add_option("id", get_id, "record id")->required();

  std::string changes_id;
  std::uint64_t changes_since = 0;
  auto* changes = paper->add_subcommand("changes", "print a record's change log");
  changes->add_option("id", changes_id, "record id")->required();
  changes->add_option("--since", changes_since, "only events with seq greater than this");

  std::string publish_id, publish_actor = "anonymous";
  auto* publish = paper->add_subcommand("publish", "freeze, mint a DOI, register");
  publish->add_option("id", publish_id, "record id")->required();
  publish->add_option("--actor", publish_actor, "who publishes");

  std::string newver_id, newver_actor = "anonymous";
  auto* newver = paper->add_subcommand("new-version", "publish the next version");
  newver->add_option("id", newver_id, "record id")->required();
  newver->add_option("--actor", newver_actor, "who publishes");

  std::string versions_id;
  auto* versions = paper->add_subcommand("versions", "print the version chain");
  versions->add_option("id", versions_id, "record id")->required();

  std::string diff_a, diff_b;
  auto* diff = paper->add_subcommand("diff", "structural diff between two snapshots");
  diff->add_option("snapshot-a", diff_a, "older snapshot id, e.g. p1-V0.1")->required();
  diff->add_option("snapshot-b", diff_b, "newer snapshot id")->required();

  // ---- metadata -------------------------------------------------------
  auto* metadata = cli.add_subcommand("metadata", "registered DOI metadata");
  metadata->require_subcommand(1);
  std::string xml_doi;
  auto* xml = metadata->add_subcommand("xml", "print the registered XML for a DOI");
  xml->add_option("doi", xml_doi, "a registered DOI")->required();

  // ---- pidgraph -------------------------------------------------------
  auto* pidgraph = cli.add_subcommand("pidgraph", "citation and version queries");
  pidgraph->require_subcommand(1);
  std::string cit_doi;
  auto* citations = pidgraph->add_subcommand("citations", "works citing a DOI");
  citations->add_option("doi", cit_doi, "DOI or DOI URL")->required();
  std::string ref_doi;
  auto* references = pidgraph->add_subcommand("references", "works a DOI references");
  references->add_option("doi", ref_doi, "DOI or DOI URL")->required();
  std::string query_file;
  auto* query = pidgraph->add_subcommand("query", "run a field-selection query document");
  query->add_option("file", query_file, "JSON query file, or - for stdin")->required();

  // ---- orcid ----------------------------------------------------------
  auto* orcid = cli.add_subcommand("orcid", "researcher records");
  orcid->require_subcommand(1);
  std::string orcid_id;
  auto* works = orcid->add_subcommand("works", "works credited to an ORCID");
  works->add_option("id", orcid_id, "ORCID, bare or URI form")->required();

  // ---- registry -------------------------------------------------------
  auto* registry = cli.add_subcommand("registry", "mock registry administration");
  registry->require_subcommand(1);
  std::string stub_doi, stub_title, stub_source = "crossref";
  auto* stub = registry->add_subcommand("stub", "register an external work stub");
  stub->add_option("doi", stub_doi, "the external work's DOI")->required();
  stub->add_option("title", stub_title, "the external work's title")->required();
  stub->add_option("--source", stub_source, "origin label");

  // ---- serve ----------------------------------------------------------
  auto* serve = cli.add_subcommand("serve", "run the HTTP service");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // CLI11 prints usage; --help stays 0, every usage fault is a caller error.
    return cli.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (!data_dir_flag.empty()) ctx.cfg.data_dir = data_dir_flag;
    if (!listen_flag.empty()) ctx.cfg.set_listen(listen_flag);
    if (!prefix_flag.empty()) ctx.cfg.doi_prefix = prefix_flag;
    if (!registrar_flag.empty()) ctx.cfg.registrar_mode = registrar_flag;
    if (!remote_url_flag.empty()) ctx.cfg.remote_base_url = remote_url_flag;
    if (seed_opt->count() > 0) ctx.cfg.counter_seed = seed_flag;

    if (create->parsed()) {
      json body;
      if (!create_json.empty()) {
        body = json::parse(read_all(create_json));
      } else {
        body = json::object();
        body["title"] = create_title;
        body["research_field"] = create_field;
        if (!create_article_doi.empty()) body["article_doi"] = create_article_doi;
        if (!create_author_name.empty()) {
          json author{{"name", create_author_name}};
          if (!create_author_orcid.empty()) author["orcid"] = create_author_orcid;
          body["authors"] = json::array({author});
        }
      }
      body["actor"] = create_actor;
      print_json(record_to_json(create_paper_from_json(ctx.open(), body)));
    } else if (update->parsed()) {
      print_json(record_to_json(ctx.open().papers().update_paper(
          update_id, update_path, parse_value(update_value), update_actor)));
    } else if (get->parsed()) {
      print_json(record_to_json(ctx.open().papers().get_paper(get_id)));
    } else if (changes->parsed()) {
      json out = json::array();
      for (const auto& e : ctx.open().papers().list_changes(changes_id, changes_since)) {
        out.push_back(to_json(e));
      }
      print_json({{"changes", out}});
    } else if (publish->parsed()) {
      print_json(publish_response(ctx.open().publisher().publish(publish_id, publish_actor)));
    } else if (newver->parsed()) {
      print_json(publish_response(
          ctx.open().publisher().publish_new_version(newver_id, newver_actor)));
    } else if (versions->parsed()) {
      json out = json::array();
      for (const auto& s : ctx.open().publisher().get_version_chain(versions_id).snapshots) {
        out.push_back(to_json(s));
      }
      print_json({{"versions", out}});
    } else if (diff->parsed()) {
      json out = json::array();
      for (const auto& e : ctx.open().publisher().diff_versions(diff_a, diff_b)) {
        out.push_back(to_json(e));
      }
      print_json({{"diff", out}});
    } else if (xml->parsed()) {
      const Doi doi = Doi::parse(xml_doi);
      App& app = ctx.open();
      MetadataRecord record;
      if (auto* mock = app.mock_registry()) {
        auto entry = mock->find_entry(doi);
        if (!entry) raise(Errc::unknown_doi, "nothing registered under " + doi.to_string());
        record = entry->metadata;
      } else {
        record = app.registrar().resolve(doi);
      }
      std::cout << serialize_xml(record);
    } else if (citations->parsed()) {
      print_json(to_json(
          ctx.open().graph()->citations_of(PidGraph::parse_work_id(cit_doi))));
    } else if (references->parsed()) {
      print_json(to_json(
          ctx.open().graph()->references_of(PidGraph::parse_work_id(ref_doi))));
    } else if (query->parsed()) {
      const auto q = nlohmann::ordered_json::parse(read_all(query_file));
      std::cout << ctx.open().graph()->query(q).dump(2) << "\n";
    } else if (works->parsed()) {
      const OrcidId id = OrcidId::parse(orcid_id);
      json out = json::array();
      for (const auto& n : ctx.open().graph()->works_of_orcid(id)) {
        out.push_back(node_to_json(n));
      }
      print_json({{"orcid", id.uri()}, {"works", out}});
    } else if (stub->parsed()) {
      App& app = ctx.open();
      ExternalWorkStub s{Doi::parse(stub_doi), stub_title, stub_source};
      app.require_mock().register_external_stub(s);
      app.refresh_graph();
      print_json({{"doi", s.doi.to_string()}, {"title", s.title}, {"source", s.source}});
    } else if (serve->parsed()) {
      App& app = ctx.open();
      HttpService service(app);
      const int port = service.bind();
      std::cout << "scholarpid listening on http://" << app.config().listen_host << ":"
                << port << std::endl;
      if (!service.run()) {
        raise(Errc::storage_fault, "server loop terminated abnormally");
      }
    }
  } catch (const Error& e) {
    std::cerr << "error [" << e.code_name() << "]: " << e.what() << "\n";
    for (const auto& v : e.violations()) {
      std::cerr << "  - " << v.field << ": " << v.rule << " (" << v.detail << ")\n";
    }
    return http_status_for(e.code()) >= 500 ? 2 : 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error [BadRequest]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error [Internal]: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
