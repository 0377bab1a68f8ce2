#pragma once

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "scholarpid/errors.hpp"
#include "scholarpid/metadata.hpp"

namespace scholarpid {

namespace xml_names {
inline constexpr const char* ns = "http://datacite.org/schema/kernel-4";
inline constexpr const char* xsi = "http://www.w3.org/2001/XMLSchema-instance";
inline constexpr const char* schema_location =
    "http://datacite.org/schema/kernel-4 "
    "http://schema.datacite.org/meta/kernel-4.3/metadata.xsd";
}  // namespace xml_names

namespace detail {

inline std::string escape_text(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string escape_attr(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace detail

/// Collapses insignificant whitespace so two layouts of the same document
/// compare equal: runs of whitespace become one space, and spaces touching a
/// tag boundary disappear. Attribute values with wrapped lines normalize the
/// same way.
inline std::string normalize_xml(std::string_view xml) {
  std::string collapsed;
  collapsed.reserve(xml.size());
  bool pending_space = false;
  for (char ch : xml) {
    if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
      pending_space = true;
      continue;
    }
    if (pending_space && !collapsed.empty()) collapsed.push_back(' ');
    pending_space = false;
    collapsed.push_back(ch);
  }
  std::string out;
  out.reserve(collapsed.size());
  for (std::size_t i = 0; i < collapsed.size(); ++i) {
    if (collapsed[i] == ' ') {
      if (!out.empty() && out.back() == '>') continue;
      if (i + 1 < collapsed.size() && collapsed[i + 1] == '<') continue;
    }
    out.push_back(collapsed[i]);
  }
  return out;
}

/// Serializes a record to its canonical XML document. Deterministic: element
/// order, attribute order, indentation and escaping are all fixed, so equal
/// records always yield identical bytes. Throws ValidationFailed (carrying
/// the violation list) if the record does not validate.
inline std::string serialize_xml(const MetadataRecord& m) {
  auto violations = validate(m);
  if (!violations.empty()) {
    std::string msg = "metadata record is invalid:";
    for (const auto& v : violations) msg += " [" + v.field + ": " + v.rule + "]";
    throw Error(Errc::validation_failed, msg, std::move(violations));
  }

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<resource xmlns=\"" << xml_names::ns << "\" xmlns:xsi=\"" << xml_names::xsi
      << "\" xsi:schemaLocation=\"" << xml_names::schema_location << "\">\n";

  out << "  <identifier identifierType=\"DOI\">"
      << detail::escape_text(m.identifier.to_string()) << "</identifier>\n";

  out << "  <titles>\n";
  for (const auto& t : m.titles) {
    out << "    <title";
    if (!t.lang.empty()) out << " xml:lang=\"" << detail::escape_attr(t.lang) << "\"";
    out << ">" << detail::escape_text(t.text) << "</title>\n";
  }
  out << "  </titles>\n";

  out << "  <publisher";
  if (!m.publisher.lang.empty()) {
    out << " xml:lang=\"" << detail::escape_attr(m.publisher.lang) << "\"";
  }
  out << ">" << detail::escape_text(m.publisher.text) << "</publisher>\n";

  if (!m.version.empty()) {
    out << "  <version>" << detail::escape_text(m.version) << "</version>\n";
  }

  out << "  <resourceType resourceTypeGeneral=\""
      << detail::escape_attr(m.resource_type.general) << "\">"
      << detail::escape_text(m.resource_type.value) << "</resourceType>\n";

  out << "  <creators>\n";
  for (const auto& c : m.creators) {
    out << "    <creator>\n";
    out << "      <creatorName nameType=\"" << detail::escape_attr(c.name_type) << "\">"
        << detail::escape_text(c.name) << "</creatorName>\n";
    for (const auto& ni : c.name_identifiers) {
      out << "      <nameIdentifier schemeURI=\"" << detail::escape_attr(ni.scheme_uri)
          << "\" nameIdentifierScheme=\"" << detail::escape_attr(ni.scheme) << "\">"
          << detail::escape_text(ni.value) << "</nameIdentifier>\n";
    }
    out << "    </creator>\n";
  }
  out << "  </creators>\n";

  if (!m.subjects.empty()) {
    out << "  <subjects>\n";
    for (const auto& s : m.subjects) {
      out << "    <subject";
      if (!s.lang.empty()) out << " xml:lang=\"" << detail::escape_attr(s.lang) << "\"";
      out << ">" << detail::escape_text(s.text) << "</subject>\n";
    }
    out << "  </subjects>\n";
  }

  if (!m.related_identifiers.empty()) {
    out << "  <relatedIdentifiers>\n";
    for (const auto& r : m.related_identifiers) {
      out << "    <relatedIdentifier relationType=\"" << relation_type_name(r.relation)
          << "\" relatedIdentifierType=\"DOI\">"
          << detail::escape_text(r.target.to_string()) << "</relatedIdentifier>\n";
    }
    out << "  </relatedIdentifiers>\n";
  }

  if (!m.descriptions.empty()) {
    out << "  <descriptions>\n";
    for (const auto& d : m.descriptions) {
      out << "    <description descriptionType=\"" << detail::escape_attr(d.kind) << "\"";
      if (!d.lang.empty()) out << " xml:lang=\"" << detail::escape_attr(d.lang) << "\"";
      out << ">" << detail::escape_text(d.text) << "</description>\n";
    }
    out << "  </descriptions>\n";
  }

  out << "</resource>\n";
  return out.str();
}

namespace detail {

using boost::property_tree::ptree;

inline void check_attrs(const ptree& node, const std::string& element,
                        const std::set<std::string>& allowed) {
  auto attrs = node.get_child_optional("<xmlattr>");
  if (!attrs) return;
  for (const auto& [name, _] : *attrs) {
    if (!allowed.count(name)) {
      raise(Errc::unknown_element,
            "unknown attribute on <" + element + ">: " + name);
    }
  }
}

inline std::string attr_or(const ptree& node, const std::string& name,
                           const std::string& fallback) {
  return node.get<std::string>("<xmlattr>." + name, fallback);
}

inline std::string required_attr(const ptree& node, const std::string& element,
                                 const std::string& name) {
  auto v = node.get_optional<std::string>("<xmlattr>." + name);
  if (!v) raise(Errc::malformed_xml, "<" + element + "> is missing " + name);
  return *v;
}

// Containers hold only child elements; any stray character data means the
// document does not follow the schema shape.
inline void require_no_text(const ptree& node, const std::string& element) {
  if (!node.get_value<std::string>().empty()) {
    raise(Errc::malformed_xml, "unexpected text inside <" + element + ">");
  }
}

inline Doi parse_doi_text(const std::string& text, const std::string& element) {
  auto doi = Doi::try_parse(text);
  if (!doi) {
    raise(Errc::vocabulary_violation,
          "<" + element + "> does not hold a DOI: \"" + text + "\"");
  }
  return *doi;
}

}  // namespace detail

/// Parses a kernel-4 document back into a MetadataRecord. Strict by design:
/// unknown elements or attributes are rejected, closed vocabularies are
/// enforced, whitespace inside text is normalized (runs collapse to one
/// space, ends trimmed).
inline MetadataRecord parse_xml(const std::string& bytes) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  try {
    std::istringstream in{bytes};
    pt::read_xml(in, doc,
                 pt::xml_parser::trim_whitespace | pt::xml_parser::no_comments);
  } catch (const pt::xml_parser_error& e) {
    raise(Errc::malformed_xml, std::string("not well-formed XML: ") + e.what());
  }

  auto root = doc.get_child_optional("resource");
  if (!root) raise(Errc::malformed_xml, "root element must be <resource>");

  detail::check_attrs(*root, "resource", {"xmlns", "xmlns:xsi", "xsi:schemaLocation"});
  const std::string ns = detail::attr_or(*root, "xmlns", "");
  if (ns != xml_names::ns) {
    raise(Errc::malformed_xml, "wrong or missing xmlns: \"" + ns + "\"");
  }

  MetadataRecord m;
  m.resource_type = ResourceType{"", ""};
  bool saw_identifier = false, saw_titles = false, saw_publisher = false;
  bool saw_version = false, saw_resource_type = false, saw_creators = false;
  bool saw_subjects = false, saw_related = false, saw_descriptions = false;

  auto once = [](bool& flag, const std::string& element) {
    if (flag) raise(Errc::malformed_xml, "duplicate <" + element + ">");
    flag = true;
  };

  detail::require_no_text(*root, "resource");
  for (const auto& [key, node] : *root) {
    if (key == "<xmlattr>") continue;

    if (key == "identifier") {
      once(saw_identifier, key);
      detail::check_attrs(node, key, {"identifierType"});
      const std::string id_type = detail::required_attr(node, key, "identifierType");
      if (id_type != "DOI") {
        raise(Errc::vocabulary_violation, "unsupported identifierType: " + id_type);
      }
      m.identifier = detail::parse_doi_text(node.get_value<std::string>(), key);

    } else if (key == "titles") {
      once(saw_titles, key);
      detail::check_attrs(node, key, {});
      detail::require_no_text(node, key);
      for (const auto& [tkey, tnode] : node) {
        if (tkey == "<xmlattr>") continue;
        if (tkey != "title") raise(Errc::unknown_element, "unknown element <" + tkey + ">");
        detail::check_attrs(tnode, tkey, {"xml:lang"});
        m.titles.push_back(
            {tnode.get_value<std::string>(), detail::attr_or(tnode, "xml:lang", "")});
      }

    } else if (key == "publisher") {
      once(saw_publisher, key);
      detail::check_attrs(node, key, {"xml:lang"});
      m.publisher = {node.get_value<std::string>(), detail::attr_or(node, "xml:lang", "")};

    } else if (key == "version") {
      once(saw_version, key);
      detail::check_attrs(node, key, {});
      m.version = node.get_value<std::string>();

    } else if (key == "resourceType") {
      once(saw_resource_type, key);
      detail::check_attrs(node, key, {"resourceTypeGeneral"});
      const std::string general = detail::required_attr(node, key, "resourceTypeGeneral");
      if (!valid_resource_type_general(general)) {
        raise(Errc::vocabulary_violation, "unknown resourceTypeGeneral: " + general);
      }
      m.resource_type = {general, node.get_value<std::string>()};

    } else if (key == "creators") {
      once(saw_creators, key);
      detail::check_attrs(node, key, {});
      detail::require_no_text(node, key);
      for (const auto& [ckey, cnode] : node) {
        if (ckey == "<xmlattr>") continue;
        if (ckey != "creator") raise(Errc::unknown_element, "unknown element <" + ckey + ">");
        detail::check_attrs(cnode, ckey, {});
        detail::require_no_text(cnode, ckey);
        Creator creator;
        creator.name_type.clear();
        bool saw_name = false;
        for (const auto& [nkey, nnode] : cnode) {
          if (nkey == "<xmlattr>") continue;
          if (nkey == "creatorName") {
            if (saw_name) raise(Errc::malformed_xml, "duplicate <creatorName>");
            saw_name = true;
            detail::check_attrs(nnode, nkey, {"nameType"});
            const std::string name_type = detail::attr_or(nnode, "nameType", "Personal");
            if (name_type != "Personal" && name_type != "Organizational") {
              raise(Errc::vocabulary_violation, "unknown nameType: " + name_type);
            }
            creator.name = nnode.get_value<std::string>();
            creator.name_type = name_type;
          } else if (nkey == "nameIdentifier") {
            detail::check_attrs(nnode, nkey, {"schemeURI", "nameIdentifierScheme"});
            NameIdentifier ni;
            ni.scheme = detail::required_attr(nnode, nkey, "nameIdentifierScheme");
            if (ni.scheme != "ORCID") {
              raise(Errc::vocabulary_violation,
                    "unsupported nameIdentifierScheme: " + ni.scheme);
            }
            ni.scheme_uri = detail::attr_or(nnode, "schemeURI", "");
            ni.value = nnode.get_value<std::string>();
            creator.name_identifiers.push_back(std::move(ni));
          } else {
            raise(Errc::unknown_element, "unknown element <" + nkey + ">");
          }
        }
        if (!saw_name) raise(Errc::malformed_xml, "<creator> without <creatorName>");
        m.creators.push_back(std::move(creator));
      }

    } else if (key == "subjects") {
      once(saw_subjects, key);
      detail::check_attrs(node, key, {});
      detail::require_no_text(node, key);
      for (const auto& [skey, snode] : node) {
        if (skey == "<xmlattr>") continue;
        if (skey != "subject") raise(Errc::unknown_element, "unknown element <" + skey + ">");
        detail::check_attrs(snode, skey, {"xml:lang"});
        m.subjects.push_back(
            {snode.get_value<std::string>(), detail::attr_or(snode, "xml:lang", "")});
      }

    } else if (key == "relatedIdentifiers") {
      once(saw_related, key);
      detail::check_attrs(node, key, {});
      detail::require_no_text(node, key);
      for (const auto& [rkey, rnode] : node) {
        if (rkey == "<xmlattr>") continue;
        if (rkey != "relatedIdentifier") {
          raise(Errc::unknown_element, "unknown element <" + rkey + ">");
        }
        detail::check_attrs(rnode, rkey, {"relationType", "relatedIdentifierType"});
        const std::string relation = detail::required_attr(rnode, rkey, "relationType");
        auto rt = relation_type_from(relation);
        if (!rt) raise(Errc::vocabulary_violation, "unknown relationType: " + relation);
        const std::string id_type = detail::required_attr(rnode, rkey, "relatedIdentifierType");
        if (id_type != "DOI") {
          raise(Errc::vocabulary_violation, "unsupported relatedIdentifierType: " + id_type);
        }
        m.related_identifiers.push_back(
            {*rt, detail::parse_doi_text(rnode.get_value<std::string>(), rkey)});
      }

    } else if (key == "descriptions") {
      once(saw_descriptions, key);
      detail::check_attrs(node, key, {});
      detail::require_no_text(node, key);
      for (const auto& [dkey, dnode] : node) {
        if (dkey == "<xmlattr>") continue;
        if (dkey != "description") {
          raise(Errc::unknown_element, "unknown element <" + dkey + ">");
        }
        detail::check_attrs(dnode, dkey, {"descriptionType", "xml:lang"});
        const std::string kind = detail::required_attr(dnode, dkey, "descriptionType");
        if (kind != "Abstract") {
          raise(Errc::vocabulary_violation, "unsupported descriptionType: " + kind);
        }
        m.descriptions.push_back(
            {kind, dnode.get_value<std::string>(), detail::attr_or(dnode, "xml:lang", "")});
      }

    } else {
      raise(Errc::unknown_element, "unknown element <" + key + ">");
    }
  }

  if (!saw_identifier) raise(Errc::malformed_xml, "missing <identifier>");
  if (!saw_titles) raise(Errc::malformed_xml, "missing <titles>");
  if (!saw_publisher) raise(Errc::malformed_xml, "missing <publisher>");
  if (!saw_resource_type) raise(Errc::malformed_xml, "missing <resourceType>");
  if (!saw_creators) raise(Errc::malformed_xml, "missing <creators>");
  return m;
}

}  // namespace scholarpid
