#pragma once

#include <cctype>
#include <optional>
#include <string>

#include "scholarpid/errors.hpp"

namespace scholarpid {

/// ISO 7064 MOD 11-2 check character for a 15-digit base string.
/// Returns '0'..'9' or 'X'.
inline char orcid_check_char(const std::string& base15) {
  if (base15.size() != 15) {
    raise(Errc::bad_length, "check base must be 15 digits, got " +
                                std::to_string(base15.size()));
  }
  int total = 0;
  for (char c : base15) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      raise(Errc::non_digit, std::string("non-digit in check base: '") + c + "'");
    }
    total = (total + (c - '0')) * 2;
  }
  const int result = (12 - total % 11) % 11;
  return result == 10 ? 'X' : static_cast<char>('0' + result);
}

/// Researcher identifier: 16 characters in 4 hyphen-separated groups, e.g.
/// "0000-0002-5071-1658". The final character is the MOD 11-2 check over the
/// first 15 digits. Parsing accepts the bare hyphenated form or the
/// "https://orcid.org/..." URI and always verifies the checksum.
class OrcidId {
 public:
  OrcidId() = default;

  static OrcidId parse(const std::string& text) {
    auto parsed = try_parse(text);
    if (!parsed) raise(Errc::invalid_orcid, "invalid ORCID: " + text);
    return *parsed;
  }

  static std::optional<OrcidId> try_parse(const std::string& text) {
    std::string body = text;
    for (const char* scheme : {"https://orcid.org/", "http://orcid.org/"}) {
      if (body.rfind(scheme, 0) == 0) {
        body = body.substr(std::string(scheme).size());
        break;
      }
    }
    if (body.size() != 19) return std::nullopt;
    std::string digits;
    for (int i = 0; i < 19; ++i) {
      if (i == 4 || i == 9 || i == 14) {
        if (body[i] != '-') return std::nullopt;
        continue;
      }
      digits += body[i];
    }
    char check = digits.back();
    if (check == 'x') check = 'X';
    const std::string base = digits.substr(0, 15);
    for (char c : base) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    }
    if (check != 'X' && !std::isdigit(static_cast<unsigned char>(check))) {
      return std::nullopt;
    }
    if (orcid_check_char(base) != check) return std::nullopt;
    OrcidId id;
    id.value_ = base.substr(0, 4) + "-" + base.substr(4, 4) + "-" +
                base.substr(8, 4) + "-" + base.substr(12, 3) + check;
    return id;
  }

  /// Canonical hyphenated form, e.g. "0000-0002-5071-1658".
  const std::string& value() const { return value_; }

  std::string uri() const { return "https://orcid.org/" + value_; }

  bool operator==(const OrcidId&) const = default;
  auto operator<=>(const OrcidId&) const = default;

 private:
  std::string value_;
};

}  // namespace scholarpid
