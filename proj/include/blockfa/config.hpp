#pragma once

#include "blockfa/types.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace blockfa {

/// Flat key/value configuration in a TOML-like syntax:
///
///     # comment
///     name = fig4
///     [contour]
///     radius = 1.1*span, 2*span, 4*span
///
/// A `[section]` header prefixes the following keys with "section.". Values
/// may be quoted and list values may be wrapped in brackets. Keys keep the
/// order of their first appearance.
class Config {
 public:
  using Entry = std::pair<std::string, std::string>;

  static Config parse(const std::string& text, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  /// Applies a "key=value" assignment, as given to `--set`.
  void apply_override(const std::string& assignment);

  bool has(const std::string& key) const;
  /// Throws ParseError naming the key when it is absent.
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  const std::vector<Entry>& entries() const noexcept { return entries_; }

 private:
  std::vector<Entry> entries_;
};

/// Evaluates + - * / ^, parentheses and unary minus over numbers and the
/// given symbols, e.g. "0.01*lambda_min" or "3*pi/4". Throws ParseError.
Real eval_expression(const std::string& text, const std::map<std::string, Real>& symbols = {});

/// Splits a comma separated value, trimming blanks and optional brackets.
/// Empty items are dropped, so "" and "[]" give an empty list.
std::vector<std::string> split_list(const std::string& value);

/// true/false, on/off, yes/no, 1/0.
bool parse_bool(const std::string& value);

std::string trim(const std::string& s);

}  // namespace blockfa
