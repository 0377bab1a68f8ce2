#pragma once

#include <cctype>
#include <functional>
#include <optional>
#include <string>

#include "scholarpid/errors.hpp"

namespace scholarpid {

/// DOI name, split at the first '/'. The prefix is "10." plus a registrant
/// code of at least four digits. Suffix comparison is case-insensitive;
/// the original casing is kept for display.
class Doi {
 public:
  Doi() = default;

  Doi(std::string prefix, std::string suffix)
      : prefix_(std::move(prefix)), suffix_(std::move(suffix)) {
    if (!valid_prefix(prefix_)) {
      raise(Errc::invalid_doi_syntax, "bad DOI prefix: " + prefix_);
    }
    if (suffix_.empty()) raise(Errc::invalid_doi_syntax, "empty DOI suffix");
    for (char c : suffix_) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        raise(Errc::invalid_doi_syntax, "whitespace in DOI suffix: " + suffix_);
      }
    }
  }

  static Doi parse(const std::string& text) {
    auto slash = text.find('/');
    if (slash == std::string::npos) {
      raise(Errc::invalid_doi_syntax, "DOI has no prefix/suffix separator: " + text);
    }
    return Doi(text.substr(0, slash), text.substr(slash + 1));
  }

  static std::optional<Doi> try_parse(const std::string& text) {
    try {
      return parse(text);
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  static bool valid_prefix(const std::string& p) {
    if (p.rfind("10.", 0) != 0) return false;
    if (p.size() < 7) return false;  // "10." + at least 4 digits
    for (std::size_t i = 3; i < p.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(p[i]))) return false;
    }
    return true;
  }

  const std::string& prefix() const { return prefix_; }
  const std::string& suffix() const { return suffix_; }
  bool empty() const { return prefix_.empty(); }

  std::string to_string() const { return prefix_ + "/" + suffix_; }

  /// Identity form: full name with the suffix lowercased.
  std::string lowercase() const {
    std::string out = to_string();
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  }

  /// Resolver URL in identity (lowercase) form.
  std::string url() const { return "https://doi.org/" + lowercase(); }

  /// Resolver URL keeping the original casing.
  std::string display_url() const { return "https://doi.org/" + to_string(); }

  bool operator==(const Doi& other) const { return lowercase() == other.lowercase(); }
  bool operator!=(const Doi& other) const { return !(*this == other); }
  bool operator<(const Doi& other) const { return lowercase() < other.lowercase(); }

 private:
  std::string prefix_;
  std::string suffix_;
};

struct DoiHash {
  std::size_t operator()(const Doi& d) const {
    return std::hash<std::string>()(d.lowercase());
  }
};

}  // namespace scholarpid
