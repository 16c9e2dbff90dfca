#pragma once

// Number formatting and flat "key = value" documents shared by CSV writers,
// fit reports and the CLI configuration.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qaction {

/// Shortest round-trip representation ("%.17g" normalized); deterministic.
std::string format_number(double v);

/// Ordered key/value document. Keys are dotted ("fit.T"); values are raw text.
class KeyValueDocument {
 public:
  void set(const std::string& key, std::string value);
  void set(const std::string& key, double value);
  void set(const std::string& key, bool value);
  void set(const std::string& key, const std::vector<double>& values);

  bool contains(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

  /// Canonical text: one "key = value" line per entry in key order.
  std::string canonical_text() const;

  /// Parses "key = value" lines; '#' starts a comment. Throws ConfigError on
  /// malformed lines or duplicate keys.
  static KeyValueDocument parse(std::istream& is);
  static KeyValueDocument parse_text(std::string_view text);

  friend bool operator==(const KeyValueDocument&, const KeyValueDocument&) = default;

 private:
  std::map<std::string, std::string> entries_;
};

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view text);

double parse_double(const std::string& text, const std::string& key);
long long parse_integer(const std::string& text, const std::string& key);
bool parse_bool(const std::string& text, const std::string& key);
std::vector<double> parse_double_list(const std::string& text, const std::string& key);

}  // namespace qaction
