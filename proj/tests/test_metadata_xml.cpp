#include "scholarpid/metadata_xml.hpp"

#include <string>

#include "catch_util.hpp"
#include "test_util.hpp"

using namespace scholarpid;

namespace {

MetadataRecord fixture_metadata() {
  return build_metadata(testutil::fixture_content(), Doi::parse(testutil::kWorkDoi),
                        "V0.1", std::nullopt);
}

std::string golden_bytes() {
  return testutil::read_file(testutil::golden_path("golden_kernel4.xml"));
}

/// Returns `hay` with the first occurrence of `from` swapped for `to`,
/// asserting the needle exists so edits can't silently miss.
std::string replaced(std::string hay, const std::string& from, const std::string& to) {
  const auto at = hay.find(from);
  REQUIRE(at != std::string::npos);
  return hay.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("whitespace normalization erases layout differences", "[xml]") {
  CHECK(normalize_xml("<a>  x   y\n z\t</a>") == "<a>x y z</a>");
  CHECK(normalize_xml("<a>\n  <b/>\n</a>\n") == "<a><b/></a>");
  CHECK(normalize_xml("<a\nb=\"1\">t</a>") == "<a b=\"1\">t</a>");
  // Distinct texts stay distinct.
  CHECK(normalize_xml("<a>x y</a>") != normalize_xml("<a>xy</a>"));
}

TEST_CASE("serialized fixture matches the golden document", "[xml]") {
  const std::string ours = serialize_xml(fixture_metadata());
  CHECK(normalize_xml(ours) == normalize_xml(golden_bytes()));
}

TEST_CASE("the golden document parses to the fixture record", "[xml]") {
  // The golden file uses a ragged layout: wrapped attribute values, padded
  // and line-broken element text. Parsing must see through all of it.
  const MetadataRecord parsed = parse_xml(golden_bytes());
  const MetadataRecord expected = fixture_metadata();

  CHECK(parsed.identifier.to_string() == testutil::kWorkDoi);
  REQUIRE(parsed.titles.size() == 1);
  CHECK(parsed.titles[0].text == testutil::kWorkTitle);
  CHECK(parsed.version == "V0.1");
  REQUIRE(parsed.creators.size() == 1);
  CHECK(parsed.creators[0].name == testutil::kCreatorName);
  REQUIRE(parsed.creators[0].name_identifiers.size() == 1);
  CHECK(parsed.creators[0].name_identifiers[0].value == testutil::kCreatorOrcid);
  REQUIRE(parsed.descriptions.size() == 1);
  CHECK(parsed.descriptions[0].text == testutil::kDescription);

  CHECK(parsed == expected);
}

TEST_CASE("parse-serialize round trip is a fixpoint", "[xml]") {
  const MetadataRecord m = fixture_metadata();
  const std::string once = serialize_xml(m);
  const MetadataRecord back = parse_xml(once);
  CHECK(back == m);
  CHECK(serialize_xml(back) == once);  // byte-identical, not just equivalent
}

TEST_CASE("optional sections disappear when empty", "[xml]") {
  MetadataRecord m;
  m.identifier = Doi::parse("10.5555/min");
  m.titles.push_back({"Minimal work", ""});
  m.publisher = {"Test Registry", ""};
  m.resource_type = {"Text", "Report"};
  Creator c;
  c.name = "Only, Author";
  m.creators.push_back(c);

  const std::string xml = serialize_xml(m);
  CHECK(xml.find("<subjects>") == std::string::npos);
  CHECK(xml.find("<relatedIdentifiers>") == std::string::npos);
  CHECK(xml.find("<descriptions>") == std::string::npos);
  CHECK(xml.find("<version>") == std::string::npos);
  CHECK(xml.find("xml:lang") == std::string::npos);
  CHECK(xml.find("<nameIdentifier") == std::string::npos);
  CHECK(parse_xml(xml) == m);
}

TEST_CASE("markup characters in content survive the round trip", "[xml]") {
  MetadataRecord m = fixture_metadata();
  m.titles[0].text = "Growth of A&B under <shade> at >2m [ORKG]";
  m.titles[0].lang = "x\"y";  // quote inside an attribute value
  m.descriptions[0].text = "Compares A&B with \"quoted\" species <here>.";

  const std::string xml = serialize_xml(m);
  CHECK(xml.find("A&amp;B") != std::string::npos);
  CHECK(xml.find("&lt;shade&gt;") != std::string::npos);
  CHECK(xml.find("xml:lang=\"x&quot;y\"") != std::string::npos);
  CHECK(parse_xml(xml) == m);
}

TEST_CASE("serializing an invalid record reports the violations", "[xml]") {
  MetadataRecord m = fixture_metadata();
  m.creators.clear();
  m.titles[0].text.clear();
  try {
    serialize_xml(m);
    FAIL("expected validation to fail");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::validation_failed);
    REQUIRE(e.violations().size() == 2);
    CHECK(e.violations()[0].rule == "EmptyTitle");
    CHECK(e.violations()[1].rule == "MissingCreators");
  }
}

TEST_CASE("malformed documents are rejected as such", "[xml]") {
  const std::string good = serialize_xml(fixture_metadata());

  testutil::require_error(Errc::malformed_xml, [] { parse_xml(""); });
  testutil::require_error(Errc::malformed_xml, [] { parse_xml("not xml at all"); });
  testutil::require_error(Errc::malformed_xml,
                          [&] { parse_xml(good.substr(0, good.size() / 2)); });
  testutil::require_error(Errc::malformed_xml, [&] {
    parse_xml(replaced(replaced(good, "<resource", "<record"), "</resource>",
                       "</record>"));
  });
  testutil::require_error(Errc::malformed_xml, [&] {
    parse_xml(replaced(good, "http://datacite.org/schema/kernel-4\"",
                       "http://example.org/other-schema\""));
  });
  // Duplicate singleton section.
  testutil::require_error(Errc::malformed_xml, [&] {
    parse_xml(replaced(good, "<publisher",
                       "<publisher xml:lang=\"en\">Twice</publisher><publisher"));
  });
  // Required sections must be present.
  for (const char* element : {"identifier", "titles", "publisher", "resourceType",
                              "creators"}) {
    const std::string open = "<" + std::string(element);
    const std::string close = "</" + std::string(element) + ">";
    std::string pruned = good;
    const auto from = pruned.find(open);
    REQUIRE(from != std::string::npos);
    auto to = pruned.find(close, from);
    if (to == std::string::npos) {
      to = pruned.find(">", from);  // self-closing span fallback
      pruned.erase(from, to - from + 1);
    } else {
      pruned.erase(from, to + close.size() - from);
    }
    testutil::require_error(Errc::malformed_xml, [&] { parse_xml(pruned); });
  }
  // A creator needs a name.
  testutil::require_error(Errc::malformed_xml, [&] {
    parse_xml(replaced(
        good, "<creatorName nameType=\"Personal\">Heidari, Golsa</creatorName>", ""));
  });
  // Containers hold elements, not text.
  testutil::require_error(Errc::malformed_xml, [&] {
    parse_xml(replaced(good, "<creators>", "<creators>stray text"));
  });
}

TEST_CASE("unknown elements and attributes are rejected", "[xml]") {
  const std::string good = serialize_xml(fixture_metadata());
  testutil::require_error(Errc::unknown_element, [&] {
    parse_xml(replaced(good, "<titles>", "<banner>x</banner><titles>"));
  });
  testutil::require_error(Errc::unknown_element, [&] {
    parse_xml(replaced(good, "<titles>", "<titles><heading>x</heading>"));
  });
  testutil::require_error(Errc::unknown_element, [&] {
    parse_xml(replaced(good, "<title xml:lang=\"en\">", "<title lang=\"en\">"));
  });
  testutil::require_error(Errc::unknown_element, [&] {
    parse_xml(replaced(good, "<resource xmlns=", "<resource id=\"r1\" xmlns="));
  });
}

TEST_CASE("closed vocabularies are enforced on parse", "[xml]") {
  const std::string good = serialize_xml(fixture_metadata());
  testutil::require_error(Errc::vocabulary_violation, [&] {
    parse_xml(replaced(good, "identifierType=\"DOI\"", "identifierType=\"URL\""));
  });
  testutil::require_error(Errc::vocabulary_violation, [&] {
    parse_xml(replaced(good, "relationType=\"References\"", "relationType=\"Cites\""));
  });
  testutil::require_error(Errc::vocabulary_violation, [&] {
    parse_xml(replaced(good, "relatedIdentifierType=\"DOI\"",
                       "relatedIdentifierType=\"URL\""));
  });
  testutil::require_error(Errc::vocabulary_violation, [&] {
    parse_xml(replaced(good, "resourceTypeGeneral=\"Dataset\"",
                       "resourceTypeGeneral=\"Collection\""));
  });
  testutil::require_error(Errc::vocabulary_violation, [&] {
    parse_xml(replaced(good, "nameType=\"Personal\"", "nameType=\"Institutional\""));
  });
  testutil::require_error(Errc::vocabulary_violation, [&] {
    parse_xml(replaced(good, "nameIdentifierScheme=\"ORCID\"",
                       "nameIdentifierScheme=\"ISNI\""));
  });
  testutil::require_error(Errc::vocabulary_violation, [&] {
    parse_xml(replaced(good, "descriptionType=\"Abstract\"",
                       "descriptionType=\"Methods\""));
  });
  // Identifier text must be DOI-shaped.
  testutil::require_error(Errc::vocabulary_violation, [&] {
    parse_xml(replaced(good, ">10.48366/R57590</identifier>",
                       ">urn:isbn:12345</identifier>"));
  });
}

TEST_CASE("ragged whitespace and entities normalize on parse", "[xml]") {
  // Hand-mangled layout: wrapped text, padded values, entity escapes.
  const std::string mangled = R"(<?xml version="1.0" encoding="UTF-8"?>
<resource xmlns="http://datacite.org/schema/kernel-4">
  <identifier identifierType="DOI">
     10.5555/w1
  </identifier>
  <titles><title> Broom &amp; gorse,
     compared </title></titles>
  <publisher> Test
Registry </publisher>
  <resourceType resourceTypeGeneral="Text">Report</resourceType>
  <creators><creator><creatorName> Only,
  Author </creatorName></creator></creators>
</resource>)";
  const MetadataRecord m = parse_xml(mangled);
  CHECK(m.identifier.to_string() == "10.5555/w1");
  CHECK(m.titles[0].text == "Broom & gorse, compared");
  CHECK(m.publisher.text == "Test Registry");
  CHECK(m.creators[0].name == "Only, Author");
  CHECK(m.creators[0].name_type == "Personal");  // absent attribute defaults
}
