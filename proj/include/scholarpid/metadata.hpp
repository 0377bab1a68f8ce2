#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scholarpid/doi.hpp"
#include "scholarpid/errors.hpp"
#include "scholarpid/knowledge.hpp"
#include "scholarpid/orcid.hpp"

namespace scholarpid {

// Relation vocabulary used on related identifiers. Closed: parsing anything
// else is a vocabulary violation.
enum class RelationType {
  references,
  is_referenced_by,
  is_new_version_of,
  is_previous_version_of,
};

inline const char* relation_type_name(RelationType t) {
  switch (t) {
    case RelationType::references: return "References";
    case RelationType::is_referenced_by: return "IsReferencedBy";
    case RelationType::is_new_version_of: return "IsNewVersionOf";
    case RelationType::is_previous_version_of: return "IsPreviousVersionOf";
  }
  return "?";
}

inline std::optional<RelationType> relation_type_from(const std::string& name) {
  if (name == "References") return RelationType::references;
  if (name == "IsReferencedBy") return RelationType::is_referenced_by;
  if (name == "IsNewVersionOf") return RelationType::is_new_version_of;
  if (name == "IsPreviousVersionOf") return RelationType::is_previous_version_of;
  return std::nullopt;
}

inline RelationType inverse_relation(RelationType t) {
  switch (t) {
    case RelationType::references: return RelationType::is_referenced_by;
    case RelationType::is_referenced_by: return RelationType::references;
    case RelationType::is_new_version_of: return RelationType::is_previous_version_of;
    case RelationType::is_previous_version_of: return RelationType::is_new_version_of;
  }
  return t;
}

struct RelatedIdentifier {
  RelationType relation = RelationType::references;
  Doi target;  // relatedIdentifierType is always DOI here

  bool operator==(const RelatedIdentifier& o) const {
    return relation == o.relation && target == o.target;
  }
};

struct NameIdentifier {
  std::string scheme = "ORCID";
  std::string scheme_uri = "http://orcid.org/";
  std::string value;  // hyphenated ORCID

  bool operator==(const NameIdentifier&) const = default;
};

struct Creator {
  std::string name;  // "Family, Given"
  std::string name_type = "Personal";
  std::vector<NameIdentifier> name_identifiers;

  bool operator==(const Creator&) const = default;
};

struct LocalizedText {
  std::string text;
  std::string lang;  // empty = no xml:lang attribute

  bool operator==(const LocalizedText&) const = default;
};

struct Description {
  std::string kind = "Abstract";  // descriptionType
  std::string text;
  std::string lang;  // empty = no xml:lang attribute

  bool operator==(const Description&) const = default;
};

struct ResourceType {
  std::string general = "Dataset";  // resourceTypeGeneral
  std::string value = "Paper";

  bool operator==(const ResourceType&) const = default;
};

inline bool valid_resource_type_general(const std::string& g) {
  return g == "Dataset" || g == "Text" || g == "Software" || g == "Other";
}

/// A kernel-4 metadata record for one registered snapshot. Field order here
/// mirrors the serialized element order.
struct MetadataRecord {
  Doi identifier;
  std::vector<LocalizedText> titles;
  LocalizedText publisher;
  std::string version;  // e.g. "V0.1"; empty = element omitted
  ResourceType resource_type;
  std::vector<Creator> creators;
  std::vector<LocalizedText> subjects;
  std::vector<RelatedIdentifier> related_identifiers;
  std::vector<Description> descriptions;

  bool operator==(const MetadataRecord&) const = default;
};

/// Structural validation. Returns every broken rule rather than stopping at
/// the first, so callers can report the full story.
inline std::vector<Violation> validate(const MetadataRecord& m) {
  std::vector<Violation> out;
  if (m.identifier.empty()) {
    out.push_back({"identifier", "MissingIdentifier", "a DOI identifier is required"});
  }
  if (m.titles.empty()) {
    out.push_back({"titles", "MissingTitles", "at least one title is required"});
  }
  for (std::size_t i = 0; i < m.titles.size(); ++i) {
    if (m.titles[i].text.empty()) {
      out.push_back({"titles/" + std::to_string(i), "EmptyTitle", "title must be non-empty"});
    }
  }
  if (m.publisher.text.empty()) {
    out.push_back({"publisher", "EmptyPublisher", "publisher must be non-empty"});
  }
  if (m.creators.empty()) {
    out.push_back({"creators", "MissingCreators", "at least one creator is required"});
  }
  for (std::size_t i = 0; i < m.creators.size(); ++i) {
    const auto& c = m.creators[i];
    const std::string base = "creators/" + std::to_string(i);
    if (c.name.empty()) {
      out.push_back({base, "EmptyCreatorName", "creator name must be non-empty"});
    }
    for (std::size_t k = 0; k < c.name_identifiers.size(); ++k) {
      const auto& ni = c.name_identifiers[k];
      if (ni.scheme == "ORCID" && !OrcidId::try_parse(ni.value)) {
        out.push_back({base + "/nameIdentifiers/" + std::to_string(k),
                       "InvalidOrcidChecksum",
                       "not a valid ORCID: " + ni.value});
      }
    }
  }
  if (!valid_resource_type_general(m.resource_type.general)) {
    out.push_back({"resourceType", "VocabularyViolation",
                   "unknown resourceTypeGeneral: " + m.resource_type.general});
  }
  return out;
}

namespace metadata_defaults {
inline constexpr const char* publisher = "Open Research Knowledge Graph";
inline constexpr const char* title_suffix = " [ORKG]";
inline constexpr const char* lang = "en";
}  // namespace metadata_defaults

/// Derives the registration metadata for a frozen record document.
///
/// The description summarizes what the record is about: the article title
/// plus the research problem of each contribution. Subjects carry the
/// research field; the original article (when known) is cited via a
/// References related identifier; a prior version is linked with
/// IsNewVersionOf.
inline MetadataRecord build_metadata(const nlohmann::json& content, const Doi& doi,
                                     const std::string& version_label,
                                     const std::optional<Doi>& previous_doi) {
  MetadataRecord m;
  m.identifier = doi;
  m.version = version_label;

  const std::string title = content.at("title").get<std::string>();
  m.titles.push_back({title + metadata_defaults::title_suffix, metadata_defaults::lang});
  m.publisher = {metadata_defaults::publisher, metadata_defaults::lang};

  if (!content.contains("authors") || content.at("authors").empty()) {
    raise(Errc::missing_creators, "cannot build metadata without authors");
  }
  for (const auto& a : content.at("authors")) {
    Creator c;
    c.name = a.at("name").get<std::string>();
    if (a.contains("orcid")) {
      c.name_identifiers.push_back(
          NameIdentifier{.value = a.at("orcid").get<std::string>()});
    }
    m.creators.push_back(std::move(c));
  }

  const std::string field = content.at("research_field").get<std::string>();
  if (!field.empty()) {
    m.subjects.push_back({field, metadata_defaults::lang});
  }

  if (content.contains("article_doi")) {
    m.related_identifiers.push_back(
        {RelationType::references, Doi::parse(content.at("article_doi").get<std::string>())});
  }
  if (previous_doi) {
    m.related_identifiers.push_back({RelationType::is_new_version_of, *previous_doi});
  }

  std::string description = "The machine-actionable description of an article: " + title;
  const auto& contributions = content.at("contributions");
  for (std::size_t i = 0; i < contributions.size(); ++i) {
    description += (i == 0 ? " which addresses the research problem " : " and ");
    description += contributions[i].at("research_problem").get<std::string>();
  }
  description += ".";
  m.descriptions.push_back({.text = std::move(description)});

  return m;
}

}  // namespace scholarpid
